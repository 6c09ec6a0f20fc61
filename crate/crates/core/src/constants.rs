//! Physical constants (CODATA 2018) and derived coupling scales.

use std::f64::consts::PI;

/// Vacuum permeability, T·m/A.
pub const MU_0: f64 = 1.256_637_062_12e-6;
/// Bohr magneton, J/T.
pub const MU_B: f64 = 9.274_010_078_3e-24;
/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Electron g-factor used for NV centers.
pub const G_NV: f64 = 2.0023;

/// Dipolar prefactor (μ0/4π)(gμB)²/ħ in rad/s·m³.
pub fn j0_si() -> f64 {
    MU_0 / (4.0 * PI) * (G_NV * MU_B).powi(2) / HBAR
}

/// Dipolar prefactor in rad/μs·nm³.
pub fn j0() -> f64 {
    // m³ → nm³ is 1e27, s⁻¹ → μs⁻¹ is 1e-6.
    j0_si() * 1e21
}

/// ħ/(gμB) in tesla·μs (per radian).
pub fn field_per_rate() -> f64 {
    HBAR / (G_NV * MU_B) * 1e6
}

/// cm⁻³ to nm⁻³.
pub const PER_CM3_TO_PER_NM3: f64 = 1e-21;
