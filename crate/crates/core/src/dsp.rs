//! The beat-analysis pipeline: Fourier transform, supergaussian bandpass on
//! the positive-frequency side, inverse transform to a complex analytic
//! signal, and extraction of beat amplitude, unwrapped phase, instantaneous
//! frequency, per-run beat power, and phase-derivative stability.
//!
//! The sample mean is removed before the transform and the DC bin is zeroed,
//! so the fluorescence background never leaks into the band. Runs whose
//! length is not a power of two are zero-padded up to the next power of two;
//! the inverse transform carries the usual 1/M normalization, and the
//! envelope is read off the original (unpadded) support only.

use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Result, SwionError};
use crate::synth::FluorescenceRun;

/// Supergaussian bandpass description.
#[derive(Debug, Clone, Copy)]
pub struct WindowSpec {
    /// Band center (Hz).
    pub center: f64,
    /// Full width at half maximum (Hz).
    pub fwhm: f64,
    /// Supergaussian order n; the profile is exp(-x^(2n) / (2 sigma^(2n))).
    pub order: u32,
}

impl WindowSpec {
    pub fn new(center: f64, fwhm: f64, order: u32) -> Result<Self> {
        if !(fwhm > 0.0) {
            return Err(SwionError::input(format!("window fwhm must be > 0, got {fwhm}")));
        }
        if order < 1 {
            return Err(SwionError::input("window order must be >= 1".to_string()));
        }
        if !(center > fwhm) {
            return Err(SwionError::input(format!(
                "window center ({center} Hz) must exceed its fwhm ({fwhm} Hz) to stay clear of DC"
            )));
        }
        Ok(WindowSpec { center, fwhm, order })
    }

    /// Width parameter sigma = fwhm / (2 (2 ln 2)^(1/2n)).
    pub fn sigma(&self) -> f64 {
        self.fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).powf(1.0 / (2.0 * self.order as f64)))
    }

    /// Window weight at frequency `f` (Hz).
    pub fn weight(&self, f: f64) -> f64 {
        let u = (f - self.center) / self.sigma();
        (-0.5 * u.powi(2 * self.order as i32)).exp()
    }
}

/// Evaluate the window on a frequency grid (Hz). The grid must be sorted.
pub fn supergaussian_window(freq_grid: &[f64], spec: &WindowSpec) -> Vec<f64> {
    debug_assert!(freq_grid.windows(2).all(|w| w[0] <= w[1]));
    freq_grid.iter().map(|&f| spec.weight(f)).collect()
}

/// Time-resolved amplitude and phase of the filtered beat component.
#[derive(Debug, Clone)]
pub struct Envelope {
    /// Bin-midpoint times (s).
    pub times: Vec<f64>,
    /// Beat amplitude A(t) (counts per bin); one-sided energy restored.
    pub amplitude: Vec<f64>,
    /// Unwrapped phase (rad).
    pub phase: Vec<f64>,
    /// Instantaneous frequency d(phase)/dt by central differences (rad/s).
    pub inst_freq: Vec<f64>,
}

impl Envelope {
    pub fn duration(&self) -> f64 {
        if self.times.len() < 2 {
            return 0.0;
        }
        let dt = self.times[1] - self.times[0];
        self.times.len() as f64 * dt
    }

    /// Index range with `trim <= t <= duration - trim`.
    fn trimmed_range(&self, trim: f64) -> Result<std::ops::Range<usize>> {
        let total = self.duration();
        if !(trim >= 0.0) || trim >= total / 2.0 {
            return Err(SwionError::input(format!(
                "edge trim must be in [0, {}), got {trim}",
                total / 2.0
            )));
        }
        let lo = self.times.partition_point(|&t| t < trim);
        let hi = self.times.partition_point(|&t| t <= total - trim);
        if hi - lo < 2 {
            return Err(SwionError::input(
                "edge trim leaves fewer than two samples".to_string(),
            ));
        }
        Ok(lo..hi)
    }
}

/// Phase unwrapping: remove 2 pi jumps so the series is continuous.
pub fn unwrap_phase(phase: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phase.len());
    let mut offset = 0.0;
    for (i, &p) in phase.iter().enumerate() {
        if i > 0 {
            let delta = p - phase[i - 1];
            if delta > std::f64::consts::PI {
                offset -= std::f64::consts::TAU;
            } else if delta < -std::f64::consts::PI {
                offset += std::f64::consts::TAU;
            }
        }
        out.push(p + offset);
    }
    out
}

/// Extract the analytic envelope of the beat component of a run.
///
/// Forward FFT, zero the DC bin and all negative frequencies, weight the
/// positive side with the supergaussian window, inverse FFT. The amplitude
/// is `2 |z(t)|` (the factor 2 restores the energy of the discarded
/// negative side), the phase is the unwrapped argument.
pub fn analytic_envelope(run: &FluorescenceRun, spec: &WindowSpec) -> Result<Envelope> {
    let n = run.counts.len();
    if n < 16 {
        return Err(SwionError::input(format!(
            "run too short for analysis: {n} bins (need >= 16)"
        )));
    }
    let dt = run.bin_width;
    let nyquist = 0.5 / dt;
    if spec.center >= nyquist {
        return Err(SwionError::input(format!(
            "window center {} Hz is at or above the Nyquist frequency {} Hz",
            spec.center, nyquist
        )));
    }

    let m = n.next_power_of_two();
    let mean = run.counts.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = Vec::with_capacity(m);
    buf.extend(run.counts.iter().map(|&c| Complex::new(c - mean, 0.0)));
    buf.resize(m, Complex::new(0.0, 0.0));

    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(m).process(&mut buf);

    let df = 1.0 / (m as f64 * dt);
    buf[0] = Complex::new(0.0, 0.0);
    for (k, v) in buf.iter_mut().enumerate().take(m / 2).skip(1) {
        *v *= spec.weight(k as f64 * df);
    }
    for v in buf.iter_mut().skip(m / 2) {
        *v = Complex::new(0.0, 0.0);
    }

    planner.plan_fft_inverse(m).process(&mut buf);
    let scale = 1.0 / m as f64;

    let times: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) * dt).collect();
    let amplitude: Vec<f64> = buf[..n].iter().map(|z| 2.0 * z.norm() * scale).collect();
    let raw_phase: Vec<f64> = buf[..n].iter().map(|z| z.arg()).collect();
    let phase = unwrap_phase(&raw_phase);

    let mut inst_freq = Vec::with_capacity(n);
    for k in 0..n {
        let f = if k == 0 {
            (phase[1] - phase[0]) / dt
        } else if k == n - 1 {
            (phase[n - 1] - phase[n - 2]) / dt
        } else {
            (phase[k + 1] - phase[k - 1]) / (2.0 * dt)
        };
        inst_freq.push(f);
    }

    Ok(Envelope {
        times,
        amplitude,
        phase,
        inst_freq,
    })
}

/// Mean squared beat amplitude over the edge-trimmed interval (counts^2).
pub fn beat_power(env: &Envelope, edge_trim: f64) -> Result<f64> {
    let range = env.trimmed_range(edge_trim)?;
    let slice = &env.amplitude[range];
    Ok(slice.iter().map(|a| a * a).sum::<f64>() / slice.len() as f64)
}

/// Expected white-shot-noise pedestal in [`beat_power`] (counts^2).
///
/// Poisson counting noise is white with per-bin variance equal to the mean
/// count; the bandpass admits a known fraction of it, which appears as an
/// additive floor under the squared beat amplitude. Computed on the same
/// discrete grid the pipeline uses: `4 mean (n/M^2) sum_k g_k^2`.
pub fn shot_noise_floor(run: &FluorescenceRun, spec: &WindowSpec) -> f64 {
    let n = run.counts.len();
    if n == 0 {
        return 0.0;
    }
    let m = n.next_power_of_two();
    let dt = run.bin_width;
    let df = 1.0 / (m as f64 * dt);
    let mean = run.counts.iter().sum::<f64>() / n as f64;
    let gg: f64 = (1..m / 2)
        .map(|k| {
            let g = spec.weight(k as f64 * df);
            g * g
        })
        .sum();
    4.0 * mean * (n as f64 / (m as f64 * m as f64)) * gg
}

/// Frequency-stability summary of one or more envelopes.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct StabilityReport {
    /// Mean over runs of the standard deviation of the instantaneous
    /// frequency on the trimmed interval (rad/s).
    #[serde(rename = "freq_std_rad_s")]
    pub freq_std: f64,
    /// Interferometric coherence time 1/freq_std (s), capped at ten times
    /// the run duration.
    #[serde(rename = "coherence_time_s")]
    pub coherence_time: f64,
}

/// Cap factor applied to the coherence time, in units of the run duration.
pub const COHERENCE_CAP_FACTOR: f64 = 10.0;

/// Pool the phase-derivative spread of several runs into a coherence time.
pub fn phase_stability(envelopes: &[Envelope], edge_trim: f64) -> Result<StabilityReport> {
    if envelopes.is_empty() {
        return Err(SwionError::input(
            "phase stability needs at least one envelope".to_string(),
        ));
    }
    let mut acc = 0.0;
    for env in envelopes {
        let range = env.trimmed_range(edge_trim)?;
        let slice = &env.inst_freq[range];
        let n = slice.len() as f64;
        let mean = slice.iter().sum::<f64>() / n;
        let var = slice.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0);
        acc += var.sqrt();
    }
    let freq_std = acc / envelopes.len() as f64;
    let cap = COHERENCE_CAP_FACTOR * envelopes[0].duration();
    let coherence_time = if freq_std > 0.0 {
        (1.0 / freq_std).min(cap)
    } else {
        cap
    };
    Ok(StabilityReport {
        freq_std,
        coherence_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn make_run(n: usize, dt: f64, f: impl Fn(f64) -> f64) -> FluorescenceRun {
        FluorescenceRun {
            bin_width: dt,
            counts: (0..n).map(|k| f((k as f64 + 0.5) * dt)).collect(),
            scenario_digest: "test".to_string(),
        }
    }

    fn paper_window() -> WindowSpec {
        WindowSpec::new(2.0, 0.3, 4).unwrap()
    }

    #[test]
    fn window_validation() {
        assert!(WindowSpec::new(2.0, 0.0, 4).is_err());
        assert!(WindowSpec::new(2.0, 0.3, 0).is_err());
        assert!(WindowSpec::new(0.2, 0.3, 4).is_err());
    }

    #[test]
    fn window_center_and_half_maximum() {
        let w = paper_window();
        assert_eq!(w.weight(2.0), 1.0);
        assert!((w.weight(2.0 + 0.15) - 0.5).abs() < 1e-12);
        assert!((w.weight(2.0 - 0.15) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn window_sigma_order_four() {
        // fwhm 0.3 Hz at order 4 gives sigma = 0.1439990 Hz.
        let w = paper_window();
        assert!((w.sigma() - 0.1439990).abs() < 1e-6, "sigma = {}", w.sigma());
    }

    #[test]
    fn window_bounds_and_symmetry() {
        let w = paper_window();
        let grid: Vec<f64> = (0..=400).map(|k| k as f64 * 0.01).collect();
        let vals = supergaussian_window(&grid, &w);
        for &v in &vals {
            assert!((0.0..=1.0).contains(&v));
        }
        for k in 0..=150 {
            let plus = w.weight(2.0 + k as f64 * 0.01);
            let minus = w.weight(2.0 - k as f64 * 0.01);
            assert!((plus - minus).abs() < 1e-12);
        }
    }

    #[test]
    fn matched_tone_amplitude() {
        let b = 25.0;
        let run = make_run(1000, 0.05, |t| 100.0 + b * (TAU * 2.0 * t).cos());
        let env = analytic_envelope(&run, &paper_window()).unwrap();
        // Filter ringing reaches about two correlation times (1/fwhm) in;
        // past that the tone is recovered to 2%.
        for (k, &t) in env.times.iter().enumerate() {
            if t > 8.0 && t < 42.0 {
                assert!(
                    (env.amplitude[k] - b).abs() / b < 0.02,
                    "t={t}: amplitude {} vs {b}",
                    env.amplitude[k]
                );
                assert!(
                    (env.inst_freq[k] - TAU * 2.0).abs() < 0.05,
                    "t={t}: inst_freq {}",
                    env.inst_freq[k]
                );
            }
        }
    }

    #[test]
    fn detuned_tone_frequency_offset() {
        let run = make_run(1000, 0.05, |t| 100.0 + 25.0 * (TAU * 2.05 * t).cos());
        let env = analytic_envelope(&run, &paper_window()).unwrap();
        let interior: Vec<f64> = env
            .times
            .iter()
            .zip(&env.inst_freq)
            .filter(|(t, _)| **t > 5.0 && **t < 45.0)
            .map(|(_, f)| *f)
            .collect();
        let mean = interior.iter().sum::<f64>() / interior.len() as f64;
        let deviation = mean - TAU * 2.0;
        let expect = TAU * 0.05;
        assert!(
            (deviation - expect).abs() / expect < 0.05,
            "deviation {deviation} vs {expect}"
        );
    }

    #[test]
    fn flat_signal_has_no_envelope() {
        let run = make_run(1000, 0.05, |_| 123.0);
        let env = analytic_envelope(&run, &paper_window()).unwrap();
        for &a in &env.amplitude {
            assert!(a.abs() < 1e-9);
        }
    }

    #[test]
    fn envelope_linearity() {
        let run1 = make_run(512, 0.05, |t| 80.0 + 10.0 * (TAU * 2.0 * t).cos());
        let run3 = FluorescenceRun {
            bin_width: run1.bin_width,
            counts: run1.counts.iter().map(|c| 3.0 * c).collect(),
            scenario_digest: run1.scenario_digest.clone(),
        };
        let e1 = analytic_envelope(&run1, &paper_window()).unwrap();
        let e3 = analytic_envelope(&run3, &paper_window()).unwrap();
        for k in 0..e1.amplitude.len() {
            assert!(
                (e3.amplitude[k] - 3.0 * e1.amplitude[k]).abs() < 1e-9,
                "nonlinear at {k}"
            );
        }
    }

    #[test]
    fn phase_is_continuous_after_unwrap() {
        let run = make_run(1000, 0.05, |t| 100.0 + 25.0 * (TAU * 2.1 * t).cos());
        let env = analytic_envelope(&run, &paper_window()).unwrap();
        for w in env.phase.windows(2) {
            assert!(
                (w[1] - w[0]).abs() <= std::f64::consts::PI,
                "phase jump {} exceeds pi",
                (w[1] - w[0]).abs()
            );
        }
    }

    #[test]
    fn rejections() {
        let short = make_run(8, 0.05, |_| 1.0);
        assert!(analytic_envelope(&short, &paper_window()).is_err());
        let run = make_run(64, 0.05, |_| 1.0);
        // Nyquist for 50 ms bins is 10 Hz.
        let bad = WindowSpec::new(10.0, 0.3, 4).unwrap();
        assert!(analytic_envelope(&run, &bad).is_err());
        let ok = analytic_envelope(&run, &paper_window()).unwrap();
        assert!(beat_power(&ok, 2.0).is_err()); // 64 bins = 3.2 s duration
    }

    #[test]
    fn beat_power_recovers_tone_power() {
        let b = 25.0;
        let run = make_run(1000, 0.05, |t| 100.0 + b * (TAU * 2.0 * t).cos());
        let env = analytic_envelope(&run, &paper_window()).unwrap();
        let p = beat_power(&env, 2.0).unwrap();
        assert!(
            (p - b * b).abs() / (b * b) < 0.05,
            "power {p} vs {}",
            b * b
        );
        let quiet = make_run(1000, 0.05, |_| 100.0);
        let env0 = analytic_envelope(&quiet, &paper_window()).unwrap();
        assert!(beat_power(&env0, 2.0).unwrap() < 1e-15);
    }

    #[test]
    fn shot_noise_floor_matches_measured_noise() {
        use rand::SeedableRng;
        use rand_distr::Distribution;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        let pois = rand_distr::Poisson::new(50.0f64).unwrap();
        let spec = paper_window();
        let mut measured = 0.0;
        let mut predicted = 0.0;
        let reps = 40;
        for _ in 0..reps {
            let run = FluorescenceRun {
                bin_width: 0.05,
                counts: (0..1000).map(|_| pois.sample(&mut rng)).collect(),
                scenario_digest: "noise".to_string(),
            };
            let env = analytic_envelope(&run, &spec).unwrap();
            measured += beat_power(&env, 2.0).unwrap();
            predicted += shot_noise_floor(&run, &spec);
        }
        measured /= reps as f64;
        predicted /= reps as f64;
        assert!(
            (measured - predicted).abs() / predicted < 0.15,
            "measured {measured}, predicted {predicted}"
        );
    }

    #[test]
    fn stability_of_clean_tone_exceeds_run_duration() {
        let run = make_run(1000, 0.05, |t| 100.0 + 25.0 * (TAU * 2.0 * t).cos());
        let env = analytic_envelope(&run, &paper_window()).unwrap();
        let rep = phase_stability(&[env], 2.0).unwrap();
        assert!(rep.freq_std < 0.02, "freq_std {}", rep.freq_std);
        assert!(
            rep.coherence_time > 50.0 && rep.coherence_time <= 500.0 + 1e-9,
            "coherence {} outside (duration, cap]",
            rep.coherence_time
        );
        // A strictly constant signal has zero spread and reports the cap.
        let flat = make_run(1000, 0.05, |_| 100.0);
        let env = analytic_envelope(&flat, &paper_window()).unwrap();
        let rep = phase_stability(&[env], 2.0).unwrap();
        assert!((rep.coherence_time - 500.0).abs() < 1e-9);
    }

    #[test]
    fn stability_of_modulated_tone() {
        // Sinusoidal phase modulation inside the band: the derivative's
        // standard deviation is beta * w_m / sqrt(2).
        let beta = 0.4;
        let f_m = 0.05;
        let run = make_run(2000, 0.05, |t| {
            100.0 + 25.0 * (TAU * 2.0 * t - beta * (TAU * f_m * t).sin()).cos()
        });
        let env = analytic_envelope(&run, &paper_window()).unwrap();
        let rep = phase_stability(&[env], 10.0).unwrap();
        let expect = beta * TAU * f_m / 2f64.sqrt();
        assert!(
            (rep.freq_std - expect).abs() / expect < 0.1,
            "freq_std {} vs {expect}",
            rep.freq_std
        );
        assert!((rep.coherence_time - 1.0 / rep.freq_std).abs() < 1e-12);
    }

    #[test]
    fn stability_rejects_empty() {
        assert!(phase_stability(&[], 2.0).is_err());
    }

    #[test]
    fn unwrap_handles_wraps() {
        let phases: Vec<f64> = (0..100)
            .map(|k| {
                let p = 0.4 * k as f64;
                (p + std::f64::consts::PI).rem_euclid(TAU) - std::f64::consts::PI
            })
            .collect();
        let un = unwrap_phase(&phases);
        for (k, &u) in un.iter().enumerate() {
            assert!((u - 0.4 * k as f64).abs() < 1e-9, "k={k}: {u}");
        }
    }
}
