//! Unit helpers.
//!
//! All frequencies and rates in this crate are angular (rad/ns) and all times
//! are in ns. These helpers convert ordinary (cyclic) frequencies to the
//! internal angular convention.

use std::f64::consts::PI;

pub const TWO_PI: f64 = 2.0 * PI;

/// Angular frequency in rad/ns for a cyclic frequency given in GHz.
pub fn angular_from_ghz(f_ghz: f64) -> f64 {
    TWO_PI * f_ghz
}

/// Angular frequency in rad/ns for a cyclic frequency given in MHz.
pub fn angular_from_mhz(f_mhz: f64) -> f64 {
    TWO_PI * f_mhz * 1e-3
}

/// Angular frequency in rad/ns for a cyclic frequency given in kHz.
pub fn angular_from_khz(f_khz: f64) -> f64 {
    TWO_PI * f_khz * 1e-6
}
