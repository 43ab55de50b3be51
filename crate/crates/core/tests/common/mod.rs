#![allow(dead_code)]

use std::f64::consts::PI;

use gapnv::{Layer, LayerStack, Polarization};

/// Guided indices of a symmetric slab (core `n1`, cladding `n2`, width `d`)
/// from the closed-form dispersion relation
/// `κd = mπ + 2 atan(η γ/κ)` with `η = 1` (TE) or `(n1/n2)²` (TM),
/// each root found by plain bisection. Highest index first.
pub fn symmetric_slab_indices(n1: f64, n2: f64, d: f64, wavelength: f64, pol: Polarization) -> Vec<f64> {
    let k0 = 2.0 * PI / wavelength;
    let v = k0 * d * (n1 * n1 - n2 * n2).sqrt();
    let count = (v / PI).ceil() as usize;
    let eta = match pol {
        Polarization::TE => 1.0,
        Polarization::TM => (n1 / n2).powi(2),
    };
    (0..count)
        .map(|m| {
            let f = |n: f64| {
                let kappa = k0 * (n1 * n1 - n * n).max(0.0).sqrt();
                let gamma = k0 * (n * n - n2 * n2).max(0.0).sqrt();
                kappa * d - m as f64 * PI - 2.0 * (eta * gamma).atan2(kappa)
            };
            let (mut lo, mut hi) = (n2, n1);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if f(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// `V/π` of a symmetric slab.
pub fn v_over_pi(n1: f64, n2: f64, d: f64, wavelength: f64) -> f64 {
    2.0 * d / wavelength * (n1 * n1 - n2 * n2).sqrt()
}

pub fn symmetric(n1: f64, n2: f64, d: f64) -> LayerStack {
    LayerStack::new(vec![Layer::cladding("clad", n2), Layer::film("core", n1, d), Layer::cladding("clad", n2)]).unwrap()
}

/// Trapezoid rule on a uniform grid.
pub fn trapezoid(y: &[f64], h: f64) -> f64 {
    if y.len() < 2 {
        return 0.0;
    }
    h * (y.iter().sum::<f64>() - 0.5 * (y[0] + y[y.len() - 1]))
}
