//! End-to-end scan analysis: filter every run, measure its beat power,
//! aggregate per scan point, and fit the distance dependence.
//!
//! Beat powers carry an additive white-shot-noise pedestal from photon
//! counting; it is estimated per run from the mean count rate and the
//! window's noise bandwidth and subtracted before aggregation, since the
//! fitted model has no noise term.

use rayon::prelude::*;

use crate::dsp::{self, WindowSpec};
use crate::error::Result;
use crate::fit::{self, FitInit, FitResult, ScanPoint};
use crate::io::ScanFilePoint;
use crate::synth::{FluorescenceRun, ScanDataset};

/// Window and trim settings of the analysis stage.
#[derive(Debug, Clone, Copy)]
pub struct AnalysisSettings {
    pub window: WindowSpec,
    /// Edge trim (s) applied to envelopes before averaging.
    pub edge_trim: f64,
    /// Subtract the expected shot-noise pedestal from beat powers. Disable
    /// for noiseless fixtures, where no pedestal exists.
    pub subtract_shot_noise: bool,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        AnalysisSettings {
            window: WindowSpec::new(2.0, 0.3, 4).expect("default window is valid"),
            edge_trim: 2.0,
            subtract_shot_noise: true,
        }
    }
}

/// Distance plus the runs recorded there; the unit any scan source reduces to.
pub type PointRuns<'a> = (f64, &'a [FluorescenceRun]);

pub fn dataset_points(dataset: &ScanDataset) -> Vec<PointRuns<'_>> {
    dataset
        .points
        .iter()
        .map(|p| (p.distance, p.runs.as_slice()))
        .collect()
}

pub fn file_points(points: &[ScanFilePoint]) -> Vec<PointRuns<'_>> {
    points
        .iter()
        .map(|p| (p.distance, p.runs.as_slice()))
        .collect()
}

/// Shot-noise-corrected beat power of one run.
pub fn corrected_beat_power(run: &FluorescenceRun, settings: &AnalysisSettings) -> Result<f64> {
    let env = dsp::analytic_envelope(run, &settings.window)?;
    let power = dsp::beat_power(&env, settings.edge_trim)?;
    if settings.subtract_shot_noise {
        Ok(power - dsp::shot_noise_floor(run, &settings.window))
    } else {
        Ok(power)
    }
}

/// Aggregate measured beat powers into fit-ready scan points.
pub fn scan_points(points: &[PointRuns<'_>], settings: &AnalysisSettings) -> Result<Vec<ScanPoint>> {
    points
        .par_iter()
        .map(|&(distance, runs)| {
            let powers: Result<Vec<f64>> = runs
                .iter()
                .map(|r| corrected_beat_power(r, settings))
                .collect();
            let powers = powers?;
            let n = powers.len();
            let mean = powers.iter().sum::<f64>() / n as f64;
            let sem = if n > 1 {
                let var =
                    powers.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
                (var / n as f64).sqrt()
            } else {
                0.0
            };
            Ok(ScanPoint {
                distance,
                power_mean: mean,
                power_sem: sem,
                n_runs: n,
            })
        })
        .collect()
}

/// Full analysis chain: runs in, fit out.
pub fn fit_scan_runs(
    points: &[PointRuns<'_>],
    settings: &AnalysisSettings,
    species: &crate::crystal::IonSpecies,
    init: Option<&FitInit>,
) -> Result<(FitResult, Vec<ScanPoint>)> {
    let pts = scan_points(points, settings)?;
    let fit = fit::fit_scan(&pts, species, init)?;
    Ok((fit, pts))
}
