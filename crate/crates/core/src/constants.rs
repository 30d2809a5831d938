//! Physical constants and unit conversions.
//!
//! All values are CODATA 2018 exact or recommended values. Every conversion
//! between SI units at the public boundary and natural units inside the
//! massive-particle branch goes through this module.

/// Speed of light in vacuum, m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Reduced Planck constant, eV·s (CODATA 2018, exact in the 2019 SI).
pub const HBAR_EV_S: f64 = 6.582_119_569e-16;

/// Reduced Planck constant, MeV·s.
pub const HBAR_MEV_S: f64 = 6.582_119_569e-22;

/// Thomson cross-section, m² (CODATA 2018).
pub const THOMSON_CROSS_SECTION: f64 = 6.652_458_732_1e-29;

/// ħc in eV·m, used to turn lengths into inverse energies.
pub const HBAR_C_EV_M: f64 = HBAR_EV_S * SPEED_OF_LIGHT;

/// Kilometres to metres.
pub const KM: f64 = 1.0e3;

/// GeV to eV.
pub const GEV: f64 = 1.0e9;

/// Number density in cm⁻³ to m⁻³.
pub fn per_cm3_to_per_m3(rho_per_cm3: f64) -> f64 {
    rho_per_cm3 * 1.0e6
}

/// Vacuum wavelength (m) of light at angular frequency `omega` (rad/s).
pub fn wavelength_from_omega(omega: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / omega.abs()
}

/// Angular frequency (rad/s) of light with vacuum wavelength `lambda` (m).
pub fn omega_from_wavelength(lambda: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / lambda
}

/// Converts a time in seconds to natural units of eV⁻¹ (ħ = 1).
pub fn seconds_to_inverse_ev(t: f64) -> f64 {
    t / HBAR_EV_S
}

/// Converts a time in natural units (eV⁻¹) to seconds.
pub fn inverse_ev_to_seconds(t: f64) -> f64 {
    t * HBAR_EV_S
}

/// Converts a length in metres to natural units of eV⁻¹ (ħ = c = 1).
pub fn metres_to_inverse_ev(l: f64) -> f64 {
    l / HBAR_C_EV_M
}
