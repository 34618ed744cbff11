//! Unit conventions.
//!
//! Energies are wavenumbers in cm⁻¹ and times are in fs. An energy `E` in cm⁻¹
//! corresponds to the angular frequency `2πc·E` in rad/fs, so ħ expressed in
//! cm⁻¹·fs is `1 / (2πc)`.

use std::f64::consts::PI;

/// Speed of light in cm/fs (CODATA exact value 2.99792458e10 cm/s).
pub const SPEED_OF_LIGHT_CM_PER_FS: f64 = 2.997_924_58e-5;

/// rad/fs per cm⁻¹.
pub const TWO_PI_C: f64 = 2.0 * PI * SPEED_OF_LIGHT_CM_PER_FS;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar_cm_fs: f64,
}

impl PhysicalConstants {
    pub const fn new() -> Self {
        Self {
            hbar_cm_fs: 1.0 / TWO_PI_C,
        }
    }

    /// Converts a wavenumber in cm⁻¹ to an angular frequency in rad/fs.
    pub fn wavenumber_to_angular(&self, cm1: f64) -> f64 {
        cm1 / self.hbar_cm_fs
    }

    /// Converts an angular frequency in rad/fs to a wavenumber in cm⁻¹.
    pub fn angular_to_wavenumber(&self, omega: f64) -> f64 {
        omega * self.hbar_cm_fs
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::new()
    }
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants::new();
