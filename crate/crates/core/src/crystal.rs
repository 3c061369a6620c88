//! Equilibrium structure, normal modes, and thermal wavepacket widths of a
//! linear N-ion crystal in a harmonic axial potential.
//!
//! Positions are found by minimizing the total potential (harmonic plus
//! pairwise Coulomb) in dimensionless units of the length scale
//! `l = (e^2/(4 pi eps_0 m w0^2))^(1/3)`. The axial normal modes come from
//! diagonalizing the dimensionless Hessian at equilibrium; mode frequencies
//! are `w_j = w0 sqrt(lambda_j)`.
//!
//! Normal coordinates carry single-ion mass for every mode, so the
//! ground-state spread of mode j is `sqrt(hbar / 2 m w_j)` and the mode
//! matrix is orthonormal. For two ions this reproduces a center-of-mass
//! position spread of `sigma_0 / sqrt(2)`.

use nalgebra::{DMatrix, DVector};

use crate::constants::{BOLTZMANN, COULOMB_COUPLING, REDUCED_PLANCK};
use crate::error::{Result, SwionError};

/// Documented ceiling on chain length; keeps the linear-chain regime plausible.
pub const MAX_IONS: usize = 32;

/// Newton iteration cap for the equilibrium solver.
const NEWTON_MAX_ITER: usize = 500;
/// Convergence threshold on the dimensionless gradient infinity-norm.
const NEWTON_GRAD_TOL: f64 = 1e-12;

/// A trapped-ion species: mass and charge in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonSpecies {
    /// Ion mass (kg).
    pub mass: f64,
    /// Ion charge (C).
    pub charge: f64,
}

impl IonSpecies {
    pub fn new(mass: f64, charge: f64) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(SwionError::input(format!("ion mass must be > 0, got {mass}")));
        }
        if !(charge > 0.0) {
            return Err(SwionError::input(format!(
                "ion charge must be > 0, got {charge}"
            )));
        }
        Ok(IonSpecies { mass, charge })
    }

    /// Singly charged ion of the given mass in atomic mass units.
    pub fn from_amu(amu: f64) -> Result<Self> {
        IonSpecies::new(
            amu * crate::constants::ATOMIC_MASS_UNIT,
            crate::constants::ELEMENTARY_CHARGE,
        )
    }

    /// Singly charged 40Ca+.
    pub fn ca40() -> Self {
        IonSpecies::from_amu(crate::constants::CA40_MASS_AMU).expect("static constants are valid")
    }
}

/// Trap and probe-field configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapConfig {
    pub species: IonSpecies,
    /// Axial trap frequency w0 (rad/s).
    pub axial_freq: f64,
    /// Effective wavevector of the beat pattern along the trap axis (1/m).
    pub delta_k_eff: f64,
    /// Beat detuning between the two beams (rad/s).
    pub delta_omega: f64,
    /// Static optical phase difference between the beams (rad).
    pub phase_offset: f64,
}

impl TrapConfig {
    pub fn new(
        species: IonSpecies,
        axial_freq: f64,
        delta_k_eff: f64,
        delta_omega: f64,
        phase_offset: f64,
    ) -> Result<Self> {
        if !(axial_freq > 0.0) {
            return Err(SwionError::input(format!(
                "axial frequency must be > 0, got {axial_freq}"
            )));
        }
        if !(delta_k_eff > 0.0) {
            return Err(SwionError::input(format!(
                "effective wavevector must be > 0, got {delta_k_eff}"
            )));
        }
        if !(delta_omega >= 0.0) {
            return Err(SwionError::input(format!(
                "beat detuning must be >= 0, got {delta_omega}"
            )));
        }
        Ok(TrapConfig {
            species,
            axial_freq,
            delta_k_eff,
            delta_omega,
            phase_offset,
        })
    }

    /// Same trap with a different axial frequency.
    pub fn with_axial_freq(&self, axial_freq: f64) -> Result<Self> {
        TrapConfig::new(
            self.species,
            axial_freq,
            self.delta_k_eff,
            self.delta_omega,
            self.phase_offset,
        )
    }

    /// Beat-pattern period 2 pi / delta_k_eff (m).
    pub fn lambda_eff(&self) -> f64 {
        std::f64::consts::TAU / self.delta_k_eff
    }
}

/// Equilibrium positions and axial normal modes of an N-ion chain.
#[derive(Debug, Clone)]
pub struct CrystalModes {
    pub n_ions: usize,
    /// Equilibrium positions (m), ascending, antisymmetric about 0.
    pub positions: Vec<f64>,
    /// Mode frequencies (rad/s), ascending; the first is the COM mode at w0.
    pub mode_freqs: Vec<f64>,
    /// Orthonormal mode matrix; column j is the eigenvector of mode j.
    pub mode_matrix: DMatrix<f64>,
    /// Length scale l = (e^2/(4 pi eps_0 m w0^2))^(1/3) (m).
    pub length_scale: f64,
    pub species: IonSpecies,
}

impl CrystalModes {
    /// Displacement coefficient a_ij of ion `i` under mode `j`.
    pub fn coeff(&self, ion: usize, mode: usize) -> f64 {
        self.mode_matrix[(ion, mode)]
    }
}

/// Per-mode thermal occupation and wavepacket widths at a given temperature.
#[derive(Debug, Clone)]
pub struct ThermalState {
    pub temperature: f64,
    /// Mean phonon number per mode, k_B T / (hbar w_j).
    pub mode_nbars: Vec<f64>,
    /// Thermal width per mode (m), sqrt(nbar_j + 1/2) * ground width.
    pub mode_sigmas: Vec<f64>,
    /// Ground-state width per mode (m), sqrt(hbar / 2 m w_j).
    pub ground_sigmas: Vec<f64>,
}

/// Length scale of the chain, l = (e^2/(4 pi eps_0 m w0^2))^(1/3).
pub fn length_scale(species: &IonSpecies, axial_freq: f64) -> f64 {
    let k = COULOMB_COUPLING * (species.charge / crate::constants::ELEMENTARY_CHARGE).powi(2);
    (k / (species.mass * axial_freq * axial_freq)).cbrt()
}

/// Distance of two crystalline ions, 2 l0 = (e^2/(4 pi eps_0) * 2/(m w0^2))^(1/3).
pub fn two_ion_spacing(trap: &TrapConfig) -> f64 {
    two_ion_spacing_freq(&trap.species, trap.axial_freq)
}

/// Two-ion spacing for a species at a given axial frequency (rad/s).
pub fn two_ion_spacing_freq(species: &IonSpecies, axial_freq: f64) -> f64 {
    2f64.cbrt() * length_scale(species, axial_freq)
}

/// Axial frequency (rad/s) at which two ions of `species` sit `distance` apart.
///
/// Inverts the two-ion spacing relation; rejects non-positive distances.
pub fn freq_for_spacing(species: &IonSpecies, distance: f64) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(SwionError::input(format!(
            "ion distance must be > 0, got {distance}"
        )));
    }
    let k = COULOMB_COUPLING * (species.charge / crate::constants::ELEMENTARY_CHARGE).powi(2);
    Ok((2.0 * k / (species.mass * distance.powi(3))).sqrt())
}

/// Equilibrium positions (m) of an N-ion chain, ascending.
pub fn equilibrium_positions(n_ions: usize, trap: &TrapConfig) -> Result<Vec<f64>> {
    let u = equilibrium_dimensionless(n_ions)?;
    let l = length_scale(&trap.species, trap.axial_freq);
    Ok(u.into_iter().map(|x| x * l).collect())
}

/// Dimensionless equilibrium positions (units of the length scale), ascending.
///
/// Damped Newton iteration on the dimensionless potential
/// `V = sum u_i^2 / 2 + sum_{i<j} 1/|u_i - u_j|`, initialized from a
/// uniform-spacing heuristic. Converges when the gradient infinity-norm
/// drops below 1e-12; fails explicitly after 500 iterations.
pub fn equilibrium_dimensionless(n_ions: usize) -> Result<Vec<f64>> {
    if n_ions == 0 || n_ions > MAX_IONS {
        return Err(SwionError::input(format!(
            "ion count must be in 1..={MAX_IONS}, got {n_ions}"
        )));
    }
    if n_ions == 1 {
        return Ok(vec![0.0]);
    }

    let n = n_ions;
    // Uniform spacing close to the minimum inter-ion distance of long chains.
    let spacing = 2.0 * (n as f64).powf(-0.56);
    let mut u: Vec<f64> = (0..n)
        .map(|i| (i as f64 - (n as f64 - 1.0) / 2.0) * spacing)
        .collect();

    let grad = |u: &[f64]| -> Vec<f64> {
        let mut g = vec![0.0; n];
        for i in 0..n {
            g[i] = u[i];
            for j in 0..n {
                if j != i {
                    let d = u[i] - u[j];
                    g[i] -= d.signum() / (d * d);
                }
            }
        }
        g
    };
    let grad_norm = |g: &[f64]| g.iter().fold(0.0f64, |m, x| m.max(x.abs()));

    let mut g = grad(&u);
    for _ in 0..NEWTON_MAX_ITER {
        if grad_norm(&g) < NEWTON_GRAD_TOL {
            // Enforce the crystal's exact reflection symmetry about x = 0.
            let mut sym: Vec<f64> = (0..n).map(|i| 0.5 * (u[i] - u[n - 1 - i])).collect();
            if n % 2 == 1 {
                sym[n / 2] = 0.0;
            }
            return Ok(sym);
        }
        let h = hessian_dimensionless(&u);
        let rhs = DVector::from_iterator(n, g.iter().map(|x| -x));
        let step = h
            .lu()
            .solve(&rhs)
            .ok_or_else(|| SwionError::numerical("singular Hessian in equilibrium solver".to_string()))?;

        // Backtrack until the gradient norm decreases and the ordering is kept.
        let g0 = grad_norm(&g);
        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = (0..n).map(|i| u[i] + alpha * step[i]).collect();
            let ordered = trial.windows(2).all(|w| w[0] < w[1]);
            if ordered {
                let gt = grad(&trial);
                if grad_norm(&gt) < g0 {
                    u = trial;
                    g = gt;
                    break;
                }
            }
            alpha *= 0.5;
            if alpha < 1e-14 {
                return Err(SwionError::numerical(
                    "equilibrium solver stalled in line search".to_string(),
                ));
            }
        }
    }
    Err(SwionError::numerical(format!(
        "equilibrium solver did not converge within {NEWTON_MAX_ITER} iterations for N={n_ions}"
    )))
}

/// Dimensionless Hessian of the chain potential at positions `u`.
fn hessian_dimensionless(u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 1.0;
        for j in 0..n {
            if j != i {
                let inv3 = 1.0 / (u[i] - u[j]).abs().powi(3);
                diag += 2.0 * inv3;
                h[(i, j)] = -2.0 * inv3;
            }
        }
        h[(i, i)] = diag;
    }
    h
}

/// Dimensionless chain structure: positions in units of the length scale and
/// the Hessian eigensystem. Depends only on the ion count, so frequency
/// sweeps can compute it once and rescale.
#[derive(Debug, Clone)]
pub struct ChainStructure {
    pub n_ions: usize,
    /// Equilibrium positions in units of the length scale, ascending.
    pub positions_unit: Vec<f64>,
    /// Hessian eigenvalues, ascending; mode frequencies are w0 sqrt(ev).
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors, column per mode.
    pub mode_matrix: DMatrix<f64>,
}

impl ChainStructure {
    /// Scale to physical units at a given trap.
    pub fn at_trap(&self, trap: &TrapConfig) -> CrystalModes {
        let l = length_scale(&trap.species, trap.axial_freq);
        CrystalModes {
            n_ions: self.n_ions,
            positions: self.positions_unit.iter().map(|x| x * l).collect(),
            mode_freqs: self
                .eigenvalues
                .iter()
                .map(|ev| trap.axial_freq * ev.sqrt())
                .collect(),
            mode_matrix: self.mode_matrix.clone(),
            length_scale: l,
            species: trap.species,
        }
    }
}

/// Solve the dimensionless chain problem for `n_ions`.
pub fn chain_structure(n_ions: usize) -> Result<ChainStructure> {
    let u = equilibrium_dimensionless(n_ions)?;
    let h = hessian_dimensionless(&u);

    let eig = nalgebra::SymmetricEigen::new(h);
    let n = n_ions;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .expect("eigenvalues are finite")
    });

    let mut eigenvalues = Vec::with_capacity(n);
    let mut mode_matrix = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let lambda = eig.eigenvalues[k];
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(SwionError::numerical(format!(
                "non-positive Hessian eigenvalue {lambda} for N={n_ions}"
            )));
        }
        eigenvalues.push(lambda);

        let v = eig.eigenvectors.column(k);
        // Sign convention: largest-magnitude entry positive; on ties the
        // last such entry wins, which makes the two-ion stretch mode
        // come out as (-1, 1)/sqrt(2).
        let mut idx = 0;
        for i in 1..n {
            if v[i].abs() >= v[idx].abs() {
                idx = i;
            }
        }
        let sign = if v[idx] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            mode_matrix[(i, col)] = sign * v[i];
        }
    }

    Ok(ChainStructure {
        n_ions,
        positions_unit: u,
        eigenvalues,
        mode_matrix,
    })
}

/// Equilibrium positions plus axial normal modes for an N-ion chain.
pub fn normal_modes(n_ions: usize, trap: &TrapConfig) -> Result<CrystalModes> {
    Ok(chain_structure(n_ions)?.at_trap(trap))
}

/// Mean phonon number of a mode at frequency `omega` (rad/s).
pub fn mode_nbar(omega: f64, temperature: f64) -> f64 {
    BOLTZMANN * temperature / (REDUCED_PLANCK * omega)
}

/// Squared thermal width of a single mode, `(nbar + 1/2) hbar / (2 m omega)`.
pub fn thermal_sigma_sq(mass: f64, omega: f64, temperature: f64) -> f64 {
    (mode_nbar(omega, temperature) + 0.5) * REDUCED_PLANCK / (2.0 * mass * omega)
}

/// Per-mode thermal occupations and widths at temperature T (K).
pub fn thermal_state(modes: &CrystalModes, temperature: f64) -> Result<ThermalState> {
    if !(temperature >= 0.0) {
        return Err(SwionError::input(format!(
            "temperature must be >= 0, got {temperature}"
        )));
    }
    let m = modes.species.mass;
    let mut nbars = Vec::with_capacity(modes.n_ions);
    let mut sigmas = Vec::with_capacity(modes.n_ions);
    let mut grounds = Vec::with_capacity(modes.n_ions);
    for &w in &modes.mode_freqs {
        let nbar = mode_nbar(w, temperature);
        let ground = (REDUCED_PLANCK / (2.0 * m * w)).sqrt();
        nbars.push(nbar);
        grounds.push(ground);
        sigmas.push(thermal_sigma_sq(m, w, temperature).sqrt());
    }
    Ok(ThermalState {
        temperature,
        mode_nbars: nbars,
        mode_sigmas: sigmas,
        ground_sigmas: grounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn trap(freq_hz: f64) -> TrapConfig {
        TrapConfig::new(
            IonSpecies::ca40(),
            TAU * freq_hz,
            TAU / 267.8e-9,
            TAU * 2.0,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn rejects_invalid_species_and_trap() {
        assert!(IonSpecies::new(0.0, 1e-19).is_err());
        assert!(IonSpecies::new(1e-26, -1e-19).is_err());
        assert!(TrapConfig::new(IonSpecies::ca40(), 0.0, 1.0, 1.0, 0.0).is_err());
        assert!(TrapConfig::new(IonSpecies::ca40(), 1.0, -1.0, 1.0, 0.0).is_err());
        assert!(TrapConfig::new(IonSpecies::ca40(), 1.0, 1.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn two_ion_spacing_ca40_1p24mhz() {
        // Direct evaluation of the spacing formula: 4.8566 um at 2 pi * 1.24 MHz.
        let d = two_ion_spacing(&trap(1.24e6));
        assert!(
            (d - 4.8566e-6).abs() < 2e-9,
            "expected about 4.8566 um, got {:.6e}",
            d
        );
    }

    #[test]
    fn two_ion_spacing_ca40_0p96mhz() {
        let d = two_ion_spacing(&trap(0.96e6));
        assert!(
            (d - 5.7595e-6).abs() < 2e-9,
            "expected about 5.7595 um, got {:.6e}",
            d
        );
    }

    #[test]
    fn two_ion_spacing_power_law() {
        let d1 = two_ion_spacing(&trap(1.0e6));
        let d4 = two_ion_spacing(&trap(4.0e6));
        let expect = d1 * 4.0f64.powf(-2.0 / 3.0);
        assert!((d4 - expect).abs() / expect < 1e-12);
    }

    #[test]
    fn spacing_freq_round_trip() {
        let sp = IonSpecies::ca40();
        for f_hz in [0.5e6, 0.96e6, 1.24e6, 2.0e6] {
            let w = TAU * f_hz;
            let d = two_ion_spacing_freq(&sp, w);
            let w_back = freq_for_spacing(&sp, d).unwrap();
            assert!((w_back - w).abs() / w < 1e-12);
        }
        assert!(freq_for_spacing(&sp, 0.0).is_err());
        assert!(freq_for_spacing(&sp, -1.0).is_err());
    }

    #[test]
    fn equilibrium_single_ion() {
        assert_eq!(equilibrium_dimensionless(1).unwrap(), vec![0.0]);
    }

    #[test]
    fn equilibrium_two_ions_matches_spacing() {
        let t = trap(1.24e6);
        let pos = equilibrium_positions(2, &t).unwrap();
        let gap = pos[1] - pos[0];
        let d = two_ion_spacing(&t);
        assert!((gap - d).abs() / d < 1e-12, "gap {gap}, formula {d}");
        assert!((pos[0] + pos[1]).abs() < 1e-20);
    }

    #[test]
    fn equilibrium_three_ions_analytic() {
        // Outer ions at (5/4)^(1/3) in units of the length scale.
        let u = equilibrium_dimensionless(3).unwrap();
        let expect = (5.0f64 / 4.0).cbrt();
        assert!((u[2] - expect).abs() < 1e-12, "got {}, want {}", u[2], expect);
        assert!(u[1].abs() < 1e-15);
        assert!((u[0] + expect).abs() < 1e-12);
    }

    #[test]
    fn equilibrium_bounds_checked() {
        assert!(equilibrium_dimensionless(0).is_err());
        assert!(equilibrium_dimensionless(MAX_IONS + 1).is_err());
    }

    #[test]
    fn force_balance_every_n() {
        // Net dimensionless force below 1e-9 of the characteristic force for all N.
        for n in 1..=MAX_IONS {
            let u = equilibrium_dimensionless(n).unwrap();
            for i in 0..n {
                let mut f = -u[i];
                for j in 0..n {
                    if j != i {
                        let d = u[i] - u[j];
                        f += d.signum() / (d * d);
                    }
                }
                assert!(
                    f.abs() < 1e-9,
                    "N={n}, ion {i}: residual force {f:.3e}"
                );
            }
            for w in u.windows(2) {
                assert!(w[0] < w[1], "positions not ascending for N={n}");
            }
            for i in 0..n {
                assert!(
                    (u[i] + u[n - 1 - i]).abs() < 1e-12,
                    "N={n} not antisymmetric"
                );
            }
        }
    }

    #[test]
    fn two_ion_modes() {
        let t = trap(1.24e6);
        let m = normal_modes(2, &t).unwrap();
        assert!((m.mode_freqs[0] - t.axial_freq).abs() / t.axial_freq < 1e-12);
        assert!(
            (m.mode_freqs[1] - 3.0f64.sqrt() * t.axial_freq).abs() / t.axial_freq < 1e-12
        );
        let s = 0.5f64.sqrt();
        assert!((m.coeff(0, 0) - s).abs() < 1e-12);
        assert!((m.coeff(1, 0) - s).abs() < 1e-12);
        // Stretch eigenvector (-1, 1)/sqrt(2) under the positive-largest-entry convention.
        assert!((m.coeff(0, 1) + s).abs() < 1e-12);
        assert!((m.coeff(1, 1) - s).abs() < 1e-12);
    }

    #[test]
    fn two_ion_eigenvalues_exact() {
        let t = trap(1.0e6);
        let m = normal_modes(2, &t).unwrap();
        let l0 = (m.mode_freqs[0] / t.axial_freq).powi(2);
        let l1 = (m.mode_freqs[1] / t.axial_freq).powi(2);
        assert!((l0 - 1.0).abs() < 1e-12);
        assert!((l1 - 3.0).abs() < 1e-12);
    }

    #[test]
    fn three_ion_mode_frequencies() {
        let t = trap(1.24e6);
        let m = normal_modes(3, &t).unwrap();
        let ratios: Vec<f64> = m.mode_freqs.iter().map(|w| w / t.axial_freq).collect();
        assert!((ratios[0] - 1.0).abs() < 1e-9);
        assert!((ratios[1] - 3.0f64.sqrt()).abs() < 1e-9);
        assert!((ratios[2] - (29.0f64 / 5.0).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn com_mode_is_uniform_for_all_n() {
        let t = trap(1.0e6);
        for n in 1..=10 {
            let m = normal_modes(n, &t).unwrap();
            assert!(
                (m.mode_freqs[0] - t.axial_freq).abs() / t.axial_freq < 1e-12,
                "N={n}: COM frequency off"
            );
            let expect = 1.0 / (n as f64).sqrt();
            for i in 0..n {
                assert!(
                    (m.coeff(i, 0) - expect).abs() < 1e-9,
                    "N={n}: COM eigenvector not uniform at ion {i}"
                );
            }
        }
    }

    #[test]
    fn mode_matrix_orthogonal() {
        let t = trap(1.1e6);
        for n in [2, 3, 5, 8, 12] {
            let m = normal_modes(n, &t).unwrap();
            let prod = m.mode_matrix.transpose() * &m.mode_matrix;
            for i in 0..n {
                for j in 0..n {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (prod[(i, j)] - expect).abs() < 1e-12,
                        "N={n}: a^T a deviates at ({i},{j}): {}",
                        prod[(i, j)]
                    );
                }
            }
        }
    }

    #[test]
    fn thermal_ground_state_width() {
        // sqrt(hbar / 2 m w0) for 40Ca+ at 2 pi * 1.24 MHz is about 10.1 nm.
        let t = trap(1.24e6);
        let m = normal_modes(2, &t).unwrap();
        let th = thermal_state(&m, 0.0).unwrap();
        assert!(
            (th.ground_sigmas[0] - 1.00987e-8).abs() < 1e-12,
            "got {:.6e}",
            th.ground_sigmas[0]
        );
        // At T=0 the thermal width is the ground-state width times sqrt(1/2).
        for j in 0..2 {
            let expect = th.ground_sigmas[j] * 0.5f64.sqrt();
            assert!((th.mode_sigmas[j] - expect).abs() < 1e-22);
        }
    }

    #[test]
    fn thermal_nbar_literal() {
        // k_B T / (hbar w0) at T = 3.7 mK, w0 = 2 pi * 1.24 MHz evaluates to 62.17.
        let t = trap(1.24e6);
        let m = normal_modes(2, &t).unwrap();
        let th = thermal_state(&m, 3.7e-3).unwrap();
        assert!(
            (th.mode_nbars[0] - 62.17).abs() < 0.05,
            "got {}",
            th.mode_nbars[0]
        );
        assert!(
            (th.mode_nbars[1] - 62.17 / 3.0f64.sqrt()).abs() < 0.05,
            "got {}",
            th.mode_nbars[1]
        );
    }

    #[test]
    fn nbar_times_energy_is_kt() {
        let t = trap(0.7e6);
        let m = normal_modes(4, &t).unwrap();
        let temp = 2.5e-3;
        let th = thermal_state(&m, temp).unwrap();
        let kt = BOLTZMANN * temp;
        for j in 0..4 {
            let back = th.mode_nbars[j] * REDUCED_PLANCK * m.mode_freqs[j];
            assert!(
                ((back - kt) / kt).abs() < 2.0 * f64::EPSILON,
                "mode {j}: {back} vs {kt}"
            );
        }
    }

    #[test]
    fn sigma_decreases_with_mode_frequency() {
        let t = trap(1.24e6);
        for temp in [0.0, 1e-4, 3.7e-3, 0.05] {
            let m = normal_modes(5, &t).unwrap();
            let th = thermal_state(&m, temp).unwrap();
            for j in 1..5 {
                assert!(
                    th.mode_sigmas[j] < th.mode_sigmas[j - 1],
                    "T={temp}: sigma not decreasing at mode {j}"
                );
            }
        }
    }

    #[test]
    fn thermal_rejects_negative_temperature() {
        let t = trap(1.0e6);
        let m = normal_modes(2, &t).unwrap();
        assert!(thermal_state(&m, -1e-3).is_err());
    }
}
