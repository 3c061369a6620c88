//! Weighted nonlinear least-squares fit of a distance-scan of beat powers,
//! recovering the beat-pattern wavelength, the crystal temperature, and an
//! overall scale, plus derived quantities (mode occupations, Lamb-Dicke
//! parameter).
//!
//! The model is the squared amplitude of the thermally averaged two-ion beat:
//! `P(d) = scale * [cos(pi d / lambda) * exp(-(1/4)(2 pi/lambda)^2 (sigma0^2 + sigma1^2))]^2`
//! with the trap frequency recovered from the ion distance and the mode
//! widths evaluated at (w0, sqrt(3) w0, T). Only the power is observed, so
//! the sign of the cosine is irrelevant.
//!
//! The objective is multimodal in lambda (many wave periods fit between the
//! ions), so the optimizer runs a multistart over a grid of lambda
//! candidates before trust-region (Levenberg-Marquardt) refinement.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::constants::{BOLTZMANN, REDUCED_PLANCK};
use crate::crystal::{self, IonSpecies};
use crate::error::{Result, SwionError};

/// Levenberg-Marquardt iteration cap.
const LM_MAX_ITER: usize = 10_000;
/// Gradient infinity-norm tolerance (scaled problem).
const LM_GRAD_TOL: f64 = 1e-10;
/// Step-size tolerance (scaled problem).
const LM_STEP_TOL: f64 = 1e-12;

/// One abscissa of the distance scan.
#[derive(Debug, Clone, Copy)]
pub struct ScanPoint {
    /// Ion distance (m), the full two-ion separation.
    pub distance: f64,
    /// Mean beat power over the repeated runs (counts^2).
    pub power_mean: f64,
    /// Standard error of the mean over runs (counts^2); 0 if unknown.
    pub power_sem: f64,
    pub n_runs: usize,
}

impl ScanPoint {
    pub fn validate(&self) -> Result<()> {
        if !(self.distance > 0.0) {
            return Err(SwionError::input("scan distance must be > 0".to_string()));
        }
        if !(self.power_sem >= 0.0) {
            return Err(SwionError::input("power sem must be >= 0".to_string()));
        }
        if self.n_runs < 1 {
            return Err(SwionError::input("scan point needs >= 1 run".to_string()));
        }
        Ok(())
    }
}

/// Initial guesses and multistart configuration.
#[derive(Debug, Clone, Copy)]
pub struct FitInit {
    /// Wavelength guess (m); default 267 nm from the laser geometry.
    pub lambda_guess: f64,
    /// Half-width of the multistart grid as a fraction of the guess.
    pub lambda_span: f64,
    /// Temperature guess (K).
    pub temperature_guess: f64,
    /// Number of multistart candidates.
    pub starts: usize,
}

impl Default for FitInit {
    fn default() -> Self {
        FitInit {
            lambda_guess: 267e-9,
            lambda_span: 0.05,
            temperature_guess: 3e-3,
            starts: 25,
        }
    }
}

/// Fit output: parameters, 1-sigma uncertainties from the covariance of the
/// linearized problem, and diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct FitResult {
    /// Beat-pattern wavelength 2 pi / delta_k_eff (m).
    pub lambda_eff: f64,
    /// Crystal temperature (K).
    pub temperature: f64,
    /// Overall power scale (counts^2).
    pub scale: f64,
    pub lambda_err: f64,
    pub temperature_err: f64,
    pub scale_err: f64,
    /// Reduced chi-square of the weighted fit.
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Quantities derived from the fitted temperature and wavelength.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DerivedQuantities {
    /// COM-mode occupation k_B T / (hbar w0).
    pub nbar_com: f64,
    /// Stretch-mode occupation, nbar_com / sqrt(3).
    pub nbar_str: f64,
    /// Lamb-Dicke parameter (2 pi / lambda) sqrt(hbar / 2 m w0).
    pub eta: f64,
}

/// Sum of squared COM and stretch widths at (w0, sqrt(3) w0, T).
fn sigma_sum_sq(species: &IonSpecies, omega0: f64, temperature: f64) -> f64 {
    crystal::thermal_sigma_sq(species.mass, omega0, temperature)
        + crystal::thermal_sigma_sq(species.mass, 3f64.sqrt() * omega0, temperature)
}

/// Cosine factor and amplitude-domain envelope of the beat model at one
/// distance. The model power is `scale * (cos_part * envelope)^2`.
pub fn model_parts(
    distance: f64,
    lambda_eff: f64,
    temperature: f64,
    species: &IonSpecies,
) -> Result<(f64, f64)> {
    let omega0 = crystal::freq_for_spacing(species, distance)?;
    let dk = std::f64::consts::TAU / lambda_eff;
    let s2 = sigma_sum_sq(species, omega0, temperature);
    let cos_part = (std::f64::consts::PI * distance / lambda_eff).cos();
    let envelope = (-0.25 * dk * dk * s2).exp();
    Ok((cos_part, envelope))
}

/// Beat power predicted at one scan distance (counts^2).
pub fn model_power(
    distance: f64,
    lambda_eff: f64,
    temperature: f64,
    scale: f64,
    species: &IonSpecies,
) -> Result<f64> {
    let (c, e) = model_parts(distance, lambda_eff, temperature, species)?;
    Ok(scale * (c * e).powi(2))
}

/// Model power and its partial derivatives wrt (lambda, T, scale).
fn model_and_gradient(
    distance: f64,
    lambda: f64,
    temperature: f64,
    scale: f64,
    species: &IonSpecies,
) -> (f64, [f64; 3]) {
    let omega0 = crystal::freq_for_spacing(species, distance)
        .expect("distances validated before fitting");
    let mass = species.mass;
    let s2 = sigma_sum_sq(species, omega0, temperature);
    // d(sigma0^2 + sigma1^2)/dT: both modes contribute k_B/(2 m w^2).
    let s2_t = BOLTZMANN / (2.0 * mass * omega0 * omega0) * (1.0 + 1.0 / 3.0);

    let q = (std::f64::consts::TAU / lambda).powi(2);
    let arg = std::f64::consts::PI * distance / lambda;
    let c = arg.cos();
    let e2 = (-0.5 * q * s2).exp(); // power-domain envelope
    let m = scale * c * c * e2;

    let dm_ds = c * c * e2;
    let dm_dt = -0.5 * q * s2_t * m;
    // lambda enters the cosine argument and the wavevector.
    let dc2_dl = 2.0 * c * arg.sin() * (std::f64::consts::PI * distance / (lambda * lambda));
    let dq_dl = -2.0 * q / lambda;
    let dm_dl = scale * e2 * (dc2_dl + c * c * (-0.5 * s2 * dq_dl));
    (m, [dm_dl, dm_dt, dm_ds])
}

struct Problem<'a> {
    points: &'a [ScanPoint],
    weights: Vec<f64>,
    species: IonSpecies,
    uniform_weights: bool,
}

impl Problem<'_> {
    fn chi2(&self, lambda: f64, t: f64, s: f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, &w)| {
                let (m, _) = model_and_gradient(p.distance, lambda, t, s, &self.species);
                w * (p.power_mean - m).powi(2)
            })
            .sum()
    }

    /// Weighted Jacobian (rows: points, cols: scaled parameters) and
    /// weighted residual vector at scaled parameters `x`.
    fn jacobian_residuals(&self, x: &[f64; 3], refs: &[f64; 3]) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.points.len();
        let mut jac = DMatrix::zeros(n, 3);
        let mut res = DVector::zeros(n);
        let (lambda, t, s) = (x[0] * refs[0], x[1] * refs[1], x[2] * refs[2]);
        for (i, (p, &w)) in self.points.iter().zip(&self.weights).enumerate() {
            let sw = w.sqrt();
            let (m, grad) = model_and_gradient(p.distance, lambda, t, s, &self.species);
            res[i] = sw * (p.power_mean - m);
            for k in 0..3 {
                // Residual derivative: -sqrt(w) dm/dx_k.
                jac[(i, k)] = -sw * grad[k] * refs[k];
            }
        }
        (jac, res)
    }
}

struct LmOutcome {
    lambda: f64,
    temperature: f64,
    scale: f64,
    chi2: f64,
    converged: bool,
    iterations: usize,
}

/// Levenberg-Marquardt refinement from one starting point.
fn lm_refine(problem: &Problem<'_>, lambda0: f64, t0: f64, s0: f64) -> LmOutcome {
    let refs = [lambda0, t0.max(1e-4), s0.max(1e-12)];
    let mut x = [lambda0 / refs[0], t0 / refs[1], s0 / refs[2]];
    let mut chi2 = problem.chi2(x[0] * refs[0], x[1] * refs[1], x[2] * refs[2]);
    let mut mu = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < LM_MAX_ITER {
        iterations += 1;
        let (jac, res) = problem.jacobian_residuals(&x, &refs);
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &res;
        if g.amax() < LM_GRAD_TOL * (1.0 + chi2) {
            converged = true;
            break;
        }

        let mut stepped = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for k in 0..3 {
                a[(k, k)] += mu * jtj[(k, k)].max(1e-30);
            }
            let delta = match a.lu().solve(&(-&g)) {
                Some(d) => d,
                None => {
                    mu *= 10.0;
                    continue;
                }
            };
            let trial = [x[0] + delta[0], x[1] + delta[1], x[2] + delta[2]];
            // Physical region: lambda > 0, T >= 0 (clamped), scale > 0.
            if trial[0] <= 0.0 || trial[2] <= 0.0 {
                mu *= 10.0;
                continue;
            }
            let trial = [trial[0], trial[1].max(0.0), trial[2]];
            let trial_chi2 =
                problem.chi2(trial[0] * refs[0], trial[1] * refs[1], trial[2] * refs[2]);
            if trial_chi2 <= chi2 {
                let step_norm =
                    (delta[0].powi(2) + delta[1].powi(2) + delta[2].powi(2)).sqrt();
                let x_norm = (x[0].powi(2) + x[1].powi(2) + x[2].powi(2)).sqrt();
                x = trial;
                chi2 = trial_chi2;
                mu = (mu / 3.0).max(1e-12);
                stepped = true;
                if step_norm < LM_STEP_TOL * (x_norm + LM_STEP_TOL) {
                    converged = true;
                }
                break;
            }
            mu *= 10.0;
        }
        if converged || !stepped {
            // No acceptable step found at any damping: treat as converged
            // to the accuracy the damping allows.
            converged = converged || !stepped;
            break;
        }
    }

    LmOutcome {
        lambda: x[0] * refs[0],
        temperature: x[1] * refs[1],
        scale: x[2] * refs[2],
        chi2,
        converged,
        iterations,
    }
}

/// Closed-form optimal scale for fixed (lambda, T).
fn optimal_scale(problem: &Problem<'_>, lambda: f64, t: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (p, &w) in problem.points.iter().zip(&problem.weights) {
        let (m1, _) = model_and_gradient(p.distance, lambda, t, 1.0, &problem.species);
        num += w * m1 * p.power_mean;
        den += w * m1 * m1;
    }
    let fallback = problem
        .points
        .iter()
        .map(|p| p.power_mean)
        .fold(0.0f64, f64::max)
        .max(1e-12);
    if den > 0.0 && num > 0.0 {
        num / den
    } else {
        fallback
    }
}

/// Fit the distance scan. Weights are 1/sem^2 when every point carries a
/// positive sem, uniform otherwise. Requires at least 4 points spanning
/// more than one model period.
pub fn fit_scan(
    points: &[ScanPoint],
    species: &IonSpecies,
    init: Option<&FitInit>,
) -> Result<FitResult> {
    let default_init = FitInit::default();
    let init = init.unwrap_or(&default_init);
    if points.len() < 4 {
        return Err(SwionError::input(format!(
            "scan fit needs >= 4 points, got {}",
            points.len()
        )));
    }
    for p in points {
        p.validate()?;
    }
    let d_min = points.iter().map(|p| p.distance).fold(f64::INFINITY, f64::min);
    let d_max = points.iter().map(|p| p.distance).fold(0.0f64, f64::max);
    if d_max - d_min <= init.lambda_guess {
        return Err(SwionError::input(format!(
            "scan span {:.3e} m does not exceed one model period {:.3e} m; underdetermined",
            d_max - d_min,
            init.lambda_guess
        )));
    }
    if !(init.lambda_guess > 0.0 && init.lambda_span > 0.0 && init.starts >= 1) {
        return Err(SwionError::input("invalid fit initialization".to_string()));
    }

    let uniform = points.iter().any(|p| p.power_sem <= 0.0);
    let weights: Vec<f64> = if uniform {
        vec![1.0; points.len()]
    } else {
        points.iter().map(|p| 1.0 / (p.power_sem * p.power_sem)).collect()
    };
    let problem = Problem {
        points,
        weights,
        species: *species,
        uniform_weights: uniform,
    };

    let t0 = init.temperature_guess.max(0.0);
    let mut best: Option<LmOutcome> = None;
    for k in 0..init.starts {
        let frac = if init.starts == 1 {
            0.0
        } else {
            2.0 * k as f64 / (init.starts as f64 - 1.0) - 1.0
        };
        let lambda0 = init.lambda_guess * (1.0 + frac * init.lambda_span);
        let s0 = optimal_scale(&problem, lambda0, t0);
        let out = lm_refine(&problem, lambda0, t0, s0);
        if best.as_ref().is_none_or(|b| out.chi2 < b.chi2) {
            best = Some(out);
        }
    }
    let best = best.expect("at least one start");

    // Covariance of the linearized problem at the optimum.
    let refs = [best.lambda, best.temperature.max(1e-4), best.scale.max(1e-12)];
    let x = [
        best.lambda / refs[0],
        best.temperature / refs[1],
        best.scale / refs[2],
    ];
    let (jac, _) = problem.jacobian_residuals(&x, &refs);
    let jtj = jac.transpose() * &jac;
    let dof = (points.len() - 3).max(1) as f64;
    let reduced_chi2 = best.chi2 / dof;
    let mut errs = [0.0; 3];
    if let Some(cov) = jtj.try_inverse() {
        // With true 1/sigma^2 weights the covariance is (J^T W J)^-1; with
        // uniform weights scale by the residual variance.
        let factor = if problem.uniform_weights { reduced_chi2 } else { 1.0 };
        for k in 0..3 {
            errs[k] = (cov[(k, k)].max(0.0) * factor).sqrt() * refs[k];
        }
    }

    Ok(FitResult {
        lambda_eff: best.lambda,
        temperature: best.temperature,
        scale: best.scale,
        lambda_err: errs[0],
        temperature_err: errs[1],
        scale_err: errs[2],
        residual_norm: reduced_chi2,
        converged: best.converged,
        iterations: best.iterations,
    })
}

/// Mode occupations and Lamb-Dicke parameter at a reference trap frequency.
pub fn derive_quantities(fit: &FitResult, omega0: f64, species: &IonSpecies) -> DerivedQuantities {
    let nbar_com = BOLTZMANN * fit.temperature / (REDUCED_PLANCK * omega0);
    DerivedQuantities {
        nbar_com,
        nbar_str: nbar_com / 3f64.sqrt(),
        eta: (std::f64::consts::TAU / fit.lambda_eff)
            * (REDUCED_PLANCK / (2.0 * species.mass * omega0)).sqrt(),
    }
}

/// JSON-facing fit report; SI units with unit suffixes in the key names.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub lambda_eff_m: f64,
    pub lambda_err_m: f64,
    pub temperature_k: f64,
    pub temperature_err_k: f64,
    pub scale_counts2: f64,
    pub scale_err_counts2: f64,
    pub reduced_chi_square: f64,
    pub converged: bool,
    pub iterations: usize,
    pub n_points: usize,
    pub ref_axial_freq_rad_s: f64,
    pub nbar_com: f64,
    pub nbar_stretch: f64,
    pub lamb_dicke: f64,
}

impl FitReport {
    pub fn new(
        fit: &FitResult,
        derived: &DerivedQuantities,
        n_points: usize,
        ref_axial_freq: f64,
    ) -> Self {
        FitReport {
            lambda_eff_m: fit.lambda_eff,
            lambda_err_m: fit.lambda_err,
            temperature_k: fit.temperature,
            temperature_err_k: fit.temperature_err,
            scale_counts2: fit.scale,
            scale_err_counts2: fit.scale_err,
            reduced_chi_square: fit.residual_norm,
            converged: fit.converged,
            iterations: fit.iterations,
            n_points,
            ref_axial_freq_rad_s: ref_axial_freq,
            nbar_com: derived.nbar_com,
            nbar_stretch: derived.nbar_str,
            lamb_dicke: derived.eta,
        }
    }
}
