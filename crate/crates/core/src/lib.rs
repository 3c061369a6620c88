//! Simulation and analysis of slowly-moving standing-wave measurements on
//! trapped-ion crystals.
//!
//! A pair of near-resonant beams with a small mutual detuning forms a
//! standing wave that drifts along the trap axis; the crystal's fluorescence
//! then beats at the detuning with an amplitude set by the ion spacing in
//! units of the wave period and by the thermal localization of the ions.
//! This crate models that signal for 1..32-ion chains, generates synthetic
//! photon-count runs, and runs the analysis chain (supergaussian bandpass,
//! analytic envelope, beat power, distance-scan fit) that recovers the
//! wave period, the crystal temperature, the interferometric coherence
//! time, and the Lamb-Dicke parameter.
//!
//! All library-level quantities are SI.

pub mod beatmodel;
pub mod constants;
pub mod crystal;
pub mod dsp;
pub mod error;
pub mod fit;
pub mod io;
pub mod pipeline;
pub mod synth;

pub use error::{Result, SwionError};
