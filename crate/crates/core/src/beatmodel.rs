//! Closed-form fluorescence beat models for 1, 2, and N ions, the thermal
//! (Debye-Waller) envelope, and derived gate-relevant quantities.
//!
//! Contrast is normalized so that a single perfectly localized ion has beat
//! contrast 1; the thermal envelope multiplies it down. The exponent of the
//! envelope always uses the wavevector squared (the amplitude-domain form of
//! the averaged two-ion signal), which is the dimensionally consistent choice.

use crate::crystal::{CrystalModes, ThermalState, TrapConfig};

/// Single-ion fluorescence parameters: baseline A and modulation depth B.
#[derive(Debug, Clone, Copy)]
pub struct BeatParams {
    /// Background fluorescence rate A (counts/s).
    pub baseline: f64,
    /// Modulation amplitude B (counts/s).
    pub modulation: f64,
    pub trap: TrapConfig,
}

impl BeatParams {
    pub fn new(baseline: f64, modulation: f64, trap: TrapConfig) -> crate::Result<Self> {
        if !(modulation >= 0.0 && baseline >= modulation) {
            return Err(crate::SwionError::input(format!(
                "need baseline >= modulation >= 0, got A={baseline}, B={modulation}"
            )));
        }
        Ok(BeatParams {
            baseline,
            modulation,
            trap,
        })
    }
}

/// Signed beat contrast together with the thermal envelope alone.
///
/// `value` is the factor multiplying cos(delta_omega t) once B and the
/// overall scale are divided out; `envelope` is the Debye-Waller factor,
/// so `|value| <= envelope <= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeatAmplitude {
    pub value: f64,
    pub envelope: f64,
}

/// Instantaneous fluorescence rate of one ion at position `x`:
/// `A + B cos(delta_k x - delta_omega t + delta_phi)`.
pub fn single_ion_intensity(params: &BeatParams, x: f64, t: f64) -> f64 {
    let trap = &params.trap;
    let phase = trap.delta_k_eff * x - trap.delta_omega * t + trap.phase_offset;
    params.baseline + params.modulation * phase.cos()
}

/// Thermally averaged beat contrast of a two-ion crystal.
///
/// `l0` is half the ion separation (the ions sit at +-l0), `sigma0` and
/// `sigma1` the thermal widths of the COM and stretch modes:
/// `value = cos(delta_k l0) * exp(-(1/4) delta_k^2 (sigma0^2 + sigma1^2))`.
pub fn two_ion_beat(l0: f64, sigma0: f64, sigma1: f64, trap: &TrapConfig) -> BeatAmplitude {
    debug_assert!(l0 > 0.0 && sigma0 >= 0.0 && sigma1 >= 0.0);
    let dk = trap.delta_k_eff;
    let envelope = (-0.25 * dk * dk * (sigma0 * sigma0 + sigma1 * sigma1)).exp();
    BeatAmplitude {
        value: (dk * l0).cos() * envelope,
        envelope,
    }
}

/// Thermally averaged per-ion beat contrast of an N-ion crystal.
///
/// Each ion contributes `cos(delta_k x_i) prod_j f_ij` with the per-mode
/// Gaussian suppression `f_ij = exp(-(1/2) delta_k^2 a_ij^2 sigma_j^2)`;
/// the result is the mean over ions. The imaginary parts cancel by the
/// reflection symmetry of the crystal.
pub fn n_ion_beat(modes: &CrystalModes, thermal: &ThermalState, trap: &TrapConfig) -> BeatAmplitude {
    let n = modes.n_ions;
    let dk = trap.delta_k_eff;
    let mut value = 0.0;
    let mut envelope = 0.0;
    for i in 0..n {
        let mut suppression = 0.0;
        for j in 0..n {
            let a = modes.coeff(i, j);
            let s = thermal.mode_sigmas[j];
            suppression += a * a * s * s;
        }
        let f = (-0.5 * dk * dk * suppression).exp();
        envelope += f;
        value += (dk * modes.positions[i]).cos() * f;
    }
    BeatAmplitude {
        value: value / n as f64,
        envelope: envelope / n as f64,
    }
}

/// Lamb-Dicke parameter eta = delta_k_eff sqrt(hbar / 2 m w0).
pub fn lamb_dicke(trap: &TrapConfig) -> f64 {
    trap.delta_k_eff
        * (crate::constants::REDUCED_PLANCK / (2.0 * trap.species.mass * trap.axial_freq)).sqrt()
}

/// Differential standing-wave force driving the stretch mode of a two-ion
/// crystal, in units of the force amplitude (A = 1).
///
/// The ions sit at +-spacing/2 with spin projections `m_f`; each feels
/// `F_i = sin(delta_k x_i - drive_detuning t + delta_phi) m_f_i` and the
/// stretch drive is `F_1 - F_2`. The drive detuning is a separate input
/// because the gate drive and the fluorescence probe use different
/// detunings.
pub fn stretch_drive_force(
    m_f: (f64, f64),
    spacing: f64,
    trap: &TrapConfig,
    drive_detuning: f64,
    t: f64,
) -> f64 {
    let dk = trap.delta_k_eff;
    let x1 = -0.5 * spacing;
    let x2 = 0.5 * spacing;
    let f1 = (dk * x1 - drive_detuning * t + trap.phase_offset).sin() * m_f.0;
    let f2 = (dk * x2 - drive_detuning * t + trap.phase_offset).sin() * m_f.1;
    f1 - f2
}
