//! Physical constants (CODATA 2018 / SI 2019 exact values).

/// Elementary charge e (C). Exact by SI definition.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Vacuum permittivity eps_0 (F/m).
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

/// Reduced Planck constant hbar (J s).
pub const REDUCED_PLANCK: f64 = 1.054_571_817e-34;

/// Boltzmann constant k_B (J/K). Exact by SI definition.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Unified atomic mass unit (kg).
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Atomic mass of 40Ca in u.
pub const CA40_MASS_AMU: f64 = 39.962_590_9;

/// Coulomb coupling e^2 / (4 pi eps_0) (J m).
pub const COULOMB_COUPLING: f64 =
    ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (4.0 * std::f64::consts::PI * VACUUM_PERMITTIVITY);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coulomb_coupling_value() {
        // e^2/(4 pi eps_0) = 2.3070775...e-28 J m
        assert!((COULOMB_COUPLING - 2.307_077_5e-28).abs() / 2.307_077_5e-28 < 1e-7);
    }
}
