use std::f64::consts::TAU;
use swion_core::crystal::{self, IonSpecies, TrapConfig};
use swion_core::pipeline::{dataset_points, fit_scan_runs, AnalysisSettings};
use swion_core::synth::{scan_dataset, ScanAxis, Scenario};
use swion_core::{beatmodel, fit};

fn main() {
    let lambda = 267.8e-9;
    let temperature = 3.7e-3;
    let sp = IonSpecies::ca40();
    let trap = TrapConfig::new(sp, TAU * 1.24e6, TAU / lambda, TAU * 2.0, 0.0).unwrap();
    let distances: Vec<f64> = (0..33).map(|i| 4.5e-6 + 1.3e-6 * i as f64 / 32.0).collect();
    let settings = AnalysisSettings::default();

    let t0 = std::time::Instant::now();
    let mut ok_l = 0;
    let mut ok_t = 0;
    for seed in 0..10u64 {
        let mut sc = Scenario::new(trap, 2, temperature);
        sc.seed = 7000 + seed;
        let ds = scan_dataset(&sc, &ScanAxis::Distances(distances.clone()), 5).unwrap();
        let (fitres, _) = fit_scan_runs(&dataset_points(&ds), &settings, &sp, None).unwrap();
        let dl = (fitres.lambda_eff - lambda) * 1e9;
        let dt = (fitres.temperature - temperature) / temperature * 100.0;
        if dl.abs() <= 0.2 { ok_l += 1; }
        if dt.abs() <= 5.0 { ok_t += 1; }
        println!(
            "seed {seed}: lambda {:+.4} nm err (+-{:.4}), T {:+.2}% err (+-{:.2}%), chi2red {:.2}, conv {}",
            dl, fitres.lambda_err * 1e9, dt, fitres.temperature_err / temperature * 100.0,
            fitres.residual_norm, fitres.converged
        );
    }
    println!("lambda ok: {ok_l}/10, T ok: {ok_t}/10, elapsed {:.1} s (release)", t0.elapsed().as_secs_f64());

    // Criterion 9 probe: local maxima of |value| reaching >= 95% of envelope.
    for n in [4usize, 6, 12] {
        let m = 1401;
        let mut vals = Vec::with_capacity(m);
        for k in 0..m {
            let f = 0.8e6 + (1.5e6 - 0.8e6) * k as f64 / (m - 1) as f64;
            let t = trap.with_axial_freq(TAU * f).unwrap();
            let modes = crystal::normal_modes(n, &t).unwrap();
            let th = crystal::thermal_state(&modes, temperature).unwrap();
            let b = beatmodel::n_ion_beat(&modes, &th, &t);
            vals.push((b.value.abs(), b.envelope));
        }
        let mut near_max_peaks = 0;
        for k in 1..m - 1 {
            if vals[k].0 > vals[k - 1].0 && vals[k].0 >= vals[k + 1].0 && vals[k].0 >= 0.95 * vals[k].1 {
                near_max_peaks += 1;
            }
        }
        println!("N={n}: {} near-envelope local maxima", near_max_peaks);
    }

    // Criterion 5 probe: raw beat-power ratio, peak vs null, T=0, mean 50.
    use swion_core::dsp;
    let d_peak = 18.0 * lambda;
    let d_null = 17.5 * lambda;
    let mut powers = Vec::new();
    for (label, d) in [("peak", d_peak), ("null", d_null)] {
        let w = crystal::freq_for_spacing(&sp, d).unwrap();
        let mut sc = Scenario::new(trap.with_axial_freq(w).unwrap(), 2, 0.0);
        sc.seed = 99;
        let ds = scan_dataset(&sc, &ScanAxis::Distances(vec![d]), 5).unwrap();
        let mut acc = 0.0;
        for run in &ds.points[0].runs {
            let env = dsp::analytic_envelope(run, &settings.window).unwrap();
            acc += dsp::beat_power(&env, settings.edge_trim).unwrap();
        }
        acc /= 5.0;
        println!("{label} at {:.4} um: raw beat power {:.3}", d * 1e6, acc);
        powers.push(acc);
    }
    println!("ratio = {:.1}", powers[0] / powers[1]);

    // fit example check: noisy fit with guess offset +30%, default span fails?
    let mut sc = Scenario::new(trap, 2, temperature);
    sc.seed = 1234;
    let ds = scan_dataset(&sc, &ScanAxis::Distances(distances.clone()), 5).unwrap();
    let init = fit::FitInit { lambda_guess: 1.3 * lambda, lambda_span: 0.35, starts: 121, ..Default::default() };
    let (fitres, _) = fit_scan_runs(&dataset_points(&ds), &settings, &sp, Some(&init)).unwrap();
    println!("off-30% guess, wide span: lambda {:+.4} nm err", (fitres.lambda_eff - lambda) * 1e9);
}
