//! Unit bridges. Everything inside the crate is SI (meters, radians, 1/m);
//! nanometers, micrometers and dB/cm only appear at the file and CLI boundary.

use crate::error::{invalid, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub const NANOMETER: f64 = 1e-9;
pub const MICROMETER: f64 = 1e-6;

/// dB per neper of intensity: 10·log10(e).
pub const DB_PER_NEPER: f64 = 4.342_944_819_032_518;

/// Exact for decimal literals: `nm(120.0) == 120e-9`.
pub fn nm(value: f64) -> f64 {
    value / 1e9
}

pub fn um(value: f64) -> f64 {
    value / 1e6
}

pub fn to_nm(meters: f64) -> f64 {
    meters * 1e9
}

pub fn to_um(meters: f64) -> f64 {
    meters * 1e6
}

/// Intensity attenuation in dB/cm to the exponential coefficient α in 1/m.
pub fn db_per_cm_to_inverse_meters(alpha_db: f64) -> Result<f64> {
    if !(alpha_db >= 0.0) || !alpha_db.is_finite() {
        return Err(invalid(format!("loss must be a finite value >= 0 dB/cm, got {alpha_db}")));
    }
    Ok(alpha_db / DB_PER_NEPER * 100.0)
}

/// Inverse of [`db_per_cm_to_inverse_meters`].
pub fn inverse_meters_to_db_per_cm(alpha: f64) -> Result<f64> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(invalid(format!("loss must be a finite value >= 0 1/m, got {alpha}")));
    }
    Ok(alpha * DB_PER_NEPER / 100.0)
}

/// Angular frequency for a vacuum wavelength in meters.
pub fn angular_frequency(wavelength: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / wavelength
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_neper_is_100_per_meter() {
        let a = db_per_cm_to_inverse_meters(10.0 * std::f64::consts::E.log10()).unwrap();
        assert!((a - 100.0).abs() < 1e-12);
        assert_eq!(db_per_cm_to_inverse_meters(0.0).unwrap(), 0.0);
    }

    #[test]
    fn waveguide_loss_in_si() {
        let a = db_per_cm_to_inverse_meters(72.0).unwrap();
        // 72 / 4.3429 * 100
        assert!((a - 1657.86).abs() < 0.05, "{a}");
    }

    #[test]
    fn negative_loss_rejected() {
        assert!(db_per_cm_to_inverse_meters(-1.0).is_err());
        assert!(inverse_meters_to_db_per_cm(-1.0).is_err());
        assert!(db_per_cm_to_inverse_meters(f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn db_conversion_round_trips(x in 1e-6f64..1e6) {
            let back = inverse_meters_to_db_per_cm(db_per_cm_to_inverse_meters(x).unwrap()).unwrap();
            prop_assert!(((back - x) / x).abs() < 1e-12);
        }

        #[test]
        fn length_conversions_round_trip(x in 1e-6f64..1e9) {
            prop_assert!(((to_nm(nm(x)) - x) / x).abs() < 1e-12);
            prop_assert!(((to_um(um(x)) - x) / x).abs() < 1e-12);
        }
    }

    #[test]
    fn decimal_lengths_are_exact() {
        assert_eq!(nm(120.0), 120e-9);
        assert_eq!(nm(4.7), 4.7e-9);
        assert_eq!(um(2.5), 2.5e-6);
    }
}
