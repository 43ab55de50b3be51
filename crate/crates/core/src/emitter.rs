use std::f64::consts::FRAC_PI_2;

use crate::error::{invalid, Result};

/// A near-surface NV center. Lengths in meters, angles in radians, rates in
/// 1/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NVEmitter {
    /// Depth below the diamond surface.
    pub depth: f64,
    /// Angle between the mode field at the emitter and the dipole.
    pub dipole_angle: f64,
    pub gamma_total: f64,
    pub gamma_zpl: f64,
    pub lambda_zpl: f64,
}

impl Default for NVEmitter {
    fn default() -> Self {
        Self { depth: 20e-9, dipole_angle: 0.0, gamma_total: 13e6, gamma_zpl: 0.35e6, lambda_zpl: 637e-9 }
    }
}

impl NVEmitter {
    pub fn validate(&self) -> Result<()> {
        if !(self.depth >= 0.0) || !self.depth.is_finite() {
            return Err(invalid(format!("emitter depth must be >= 0, got {}", self.depth)));
        }
        if !(0.0..=FRAC_PI_2).contains(&self.dipole_angle) {
            return Err(invalid(format!("dipole angle must lie in [0, pi/2], got {}", self.dipole_angle)));
        }
        if !(self.gamma_zpl > 0.0) || !(self.gamma_zpl <= self.gamma_total) || !self.gamma_total.is_finite() {
            return Err(invalid(format!(
                "need 0 < gamma_zpl <= gamma_total, got {} and {}",
                self.gamma_zpl, self.gamma_total
            )));
        }
        if !(self.lambda_zpl > 0.0) || !self.lambda_zpl.is_finite() {
            return Err(invalid(format!("ZPL wavelength must be positive, got {}", self.lambda_zpl)));
        }
        Ok(())
    }

    pub fn with_depth(self, depth: f64) -> Self {
        Self { depth, ..self }
    }

    pub fn cos2_theta(&self) -> f64 {
        self.dipole_angle.cos().powi(2)
    }

    /// Fraction of spontaneous emission that goes into the ZPL.
    pub fn branching_ratio(&self) -> f64 {
        self.gamma_zpl / self.gamma_total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        let e = NVEmitter::default();
        e.validate().unwrap();
        assert!((e.gamma_total / e.gamma_zpl - 37.142857).abs() < 1e-5);
    }

    #[test]
    fn rejects_out_of_range() {
        let base = NVEmitter::default();
        assert!(NVEmitter { depth: -1e-9, ..base }.validate().is_err());
        assert!(NVEmitter { dipole_angle: 2.0, ..base }.validate().is_err());
        assert!(NVEmitter { gamma_zpl: 14e6, ..base }.validate().is_err());
        assert!(NVEmitter { gamma_zpl: 0.0, ..base }.validate().is_err());
    }
}
