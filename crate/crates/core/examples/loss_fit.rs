//! Propagation loss from a noisy intensity decay, repeated over seeds to
//! compare the reported error bar with the actual scatter.
//!
//! cargo run --release --example loss_fit

use gapnv::fitting::{fit_exponential_decay, DecayTrace};
use gapnv::units::db_per_cm_to_inverse_meters;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> gapnv::Result<()> {
    let alpha = db_per_cm_to_inverse_meters(72.0)?;
    let xs: Vec<f64> = (0..=20).map(|k| 25e-6 * k as f64).collect();
    let noise = Normal::new(0.0, 0.05).unwrap();
    let mut estimates = Vec::new();
    let mut errors = Vec::new();
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ys = xs.iter().map(|x| (-alpha * x).exp() * (1.0 + noise.sample(&mut rng))).collect();
        let fit = fit_exponential_decay(&DecayTrace::new(xs.clone(), ys, None)?)?;
        if seed == 0 {
            println!("seed 0: {:.2} ± {:.2} dB/cm", fit.alpha_db_per_cm(), fit.alpha_std_error_db_per_cm());
        }
        estimates.push(fit.alpha_db_per_cm());
        errors.push(fit.alpha_std_error_db_per_cm());
    }
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let scatter = (estimates.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let reported = errors.iter().sum::<f64>() / n;
    println!("200 traces, 5% noise: mean {mean:.2} dB/cm, scatter {scatter:.2}, mean reported error {reported:.2}");
    Ok(())
}
