use gapnv::fitting::{
    fit_air_gap, fit_exponential_decay, gap_objective, goodness_of_fit, read_decay_csv, read_ratio_csv, DecayTrace,
    FitResult, GapModel, Goodness, RatioPoint,
};
use gapnv::slab::DEFAULT_WINDOW;
use gapnv::units::{db_per_cm_to_inverse_meters, nm};
use gapnv::{Error, MembraneStack, Polarization};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const LAMBDA: f64 = 637e-9;

fn positions(n: usize, length: f64) -> Vec<f64> {
    (0..n).map(|k| length * k as f64 / (n - 1) as f64).collect()
}

fn noisy_trace(alpha: f64, n: usize, rel_noise: f64, rng: &mut ChaCha8Rng, with_sigma: bool) -> DecayTrace {
    let xs = positions(n, 1e-3);
    let noise = Normal::new(0.0, rel_noise).unwrap();
    let clean: Vec<f64> = xs.iter().map(|x| 2.0 * (-alpha * x).exp()).collect();
    let ys = clean.iter().map(|c| c * (1.0 + noise.sample(rng))).collect();
    let sig = with_sigma.then(|| clean.iter().map(|c| c * rel_noise).collect());
    DecayTrace::new(xs, ys, sig).unwrap()
}

fn model() -> GapModel {
    GapModel::new(MembraneStack::default(), LAMBDA, DEFAULT_WINDOW)
}

fn ratio_data(gap: f64, pols: &[Polarization], thicknesses: &[f64]) -> Vec<RatioPoint> {
    let m = model();
    let mut out = Vec::new();
    for &pol in pols {
        for &t in thicknesses {
            out.push(RatioPoint { thickness: nm(t), ratio: m.ratio(nm(t), gap, pol).unwrap(), polarization: pol });
        }
    }
    out
}

#[test]
fn noiseless_decay_recovers_loss() {
    let alpha = db_per_cm_to_inverse_meters(72.0).unwrap();
    let xs = positions(20, 1e-3);
    let ys = xs.iter().map(|x| 5.0 * (-alpha * x).exp()).collect();
    let fit = fit_exponential_decay(&DecayTrace::new(xs, ys, None).unwrap()).unwrap();
    assert!((fit.alpha_db_per_cm() - 72.0).abs() < 72.0 * 1e-9);
    assert!(fit.warning().is_none());
}

#[test]
fn constant_trace_has_zero_loss_and_zero_error() {
    let fit = fit_exponential_decay(&DecayTrace::new(positions(10, 1e-3), vec![3.0; 10], None).unwrap()).unwrap();
    assert_eq!(fit.alpha, 0.0);
    assert_eq!(fit.alpha_std_error, 0.0);
}

#[test]
fn growing_trace_is_flagged_as_gain() {
    let xs = positions(10, 1e-3);
    let ys = xs.iter().map(|x| (500.0 * x).exp()).collect();
    let fit = fit_exponential_decay(&DecayTrace::new(xs, ys, None).unwrap()).unwrap();
    assert!(fit.alpha < 0.0 && fit.gain);
    assert!(fit.warning().is_some());
}

#[test]
fn error_bars_are_calibrated_under_noise() {
    let alpha = db_per_cm_to_inverse_meters(72.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let trials = 1000;
    let mut inside = 0;
    let mut chi2 = 0.0;
    for _ in 0..trials {
        let fit = fit_exponential_decay(&noisy_trace(alpha, 50, 0.05, &mut rng, true)).unwrap();
        if (fit.alpha - alpha).abs() <= 3.0 * fit.alpha_std_error {
            inside += 1;
        }
        match goodness_of_fit(&fit.result) {
            Goodness::ReducedChiSquare(c) => chi2 += c,
            other => panic!("{other:?}"),
        }
    }
    assert!(inside as f64 >= 0.99 * trials as f64, "{inside}/{trials}");
    let mean_chi2 = chi2 / trials as f64;
    assert!((mean_chi2 - 1.0).abs() < 0.05, "{mean_chi2}");
}

#[test]
fn goodness_extremes() {
    let perfect = FitResult { parameters: vec![], sse: 0.0, tss: 2.0, dof: 3, chi_square: None };
    assert_eq!(goodness_of_fit(&perfect), Goodness::RSquared(1.0));
    let mean_only = FitResult { parameters: vec![], sse: 2.0, tss: 2.0, dof: 3, chi_square: None };
    assert_eq!(goodness_of_fit(&mean_only), Goodness::RSquared(0.0));
}

#[test]
fn noiseless_gap_round_trip() {
    let ts: Vec<f64> = (0..8).map(|k| 120.0 + 20.0 * k as f64).collect();
    let data = ratio_data(nm(4.7), &[Polarization::TE], &ts);
    let fit = fit_air_gap(&data, &model()).unwrap();
    assert!((fit.gap - nm(4.7)).abs() < nm(0.05), "{}", fit.gap);
    assert!(fit.gap_std_error.is_finite());
}

#[test]
fn zero_gap_is_found_on_the_boundary() {
    let data = ratio_data(0.0, &[Polarization::TE, Polarization::TM], &[160.0, 200.0, 240.0]);
    let fit = fit_air_gap(&data, &model()).unwrap();
    assert_eq!(fit.gap, 0.0);
    assert!(fit.result.sse < 1e-20);
}

#[test]
fn joint_objective_is_the_sum_of_its_parts() {
    let ts = [160.0, 200.0, 240.0];
    let te = ratio_data(nm(4.7), &[Polarization::TE], &ts);
    let tm = ratio_data(nm(4.7), &[Polarization::TM], &ts);
    let joint: Vec<RatioPoint> = te.iter().chain(&tm).copied().collect();
    let m = model();
    for g in [0.0, 2.0, 4.7, 9.0] {
        let sum = gap_objective(&te, &m, nm(g)).unwrap() + gap_objective(&tm, &m, nm(g)).unwrap();
        let j = gap_objective(&joint, &m, nm(g)).unwrap();
        assert!(j <= sum * (1.0 + 1e-12) + 1e-30 && j >= sum * (1.0 - 1e-12) - 1e-30);
    }
    let fit = fit_air_gap(&joint, &model()).unwrap();
    assert!((fit.gap - nm(4.7)).abs() < nm(0.05));
}

#[test]
fn golden_section_brackets_shrink() {
    let data = ratio_data(nm(4.7), &[Polarization::TE], &[150.0, 200.0, 250.0]);
    let fit = fit_air_gap(&data, &model()).unwrap();
    assert_eq!(fit.brackets[0], (0.0, nm(50.0)));
    for w in fit.brackets.windows(2) {
        assert!(w[1].0 >= w[0].0 && w[1].1 <= w[0].1 && w[1].1 - w[1].0 < w[0].1 - w[0].0);
    }
    assert!(fit.brackets.last().map(|b| b.1 - b.0).unwrap() <= nm(0.01));
}

#[test]
fn thickness_independent_data_is_unidentifiable() {
    // a window of zero makes every model ratio 0, whatever the gap
    let mut m = model();
    m.window = 0.0;
    let data: Vec<RatioPoint> = [150.0, 200.0]
        .iter()
        .map(|&t| RatioPoint { thickness: nm(t), ratio: 0.3, polarization: Polarization::TE })
        .collect();
    assert!(matches!(fit_air_gap(&data, &m), Err(Error::Unidentifiable(_))));
}

#[test]
fn cut_off_model_reports_thickness() {
    let mut m = model();
    m.gap_max = nm(200.0);
    let data = vec![
        RatioPoint { thickness: nm(60.0), ratio: 0.5, polarization: Polarization::TM },
        RatioPoint { thickness: nm(80.0), ratio: 0.4, polarization: Polarization::TM },
    ];
    match fit_air_gap(&data, &m) {
        Err(Error::ModelFailure { thickness_nm, .. }) => {
            assert!((thickness_nm - 60.0).abs() < 1e-9 || (thickness_nm - 80.0).abs() < 1e-9, "{thickness_nm}")
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn csv_errors_carry_line_numbers() {
    let text = "position_nm,intensity\n0,1.0\n1000,0.9\n2000,-0.1\n";
    match read_decay_csv(text.as_bytes()) {
        Err(Error::Data { line, message }) => {
            assert_eq!(line, 4);
            assert!(message.contains("positive"));
        }
        other => panic!("{other:?}"),
    }
    match read_ratio_csv("thickness_nm,R,polarization\n120,0.3,TE\n140,0.2,XY\n".as_bytes()) {
        Err(Error::Data { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    assert!(matches!(read_ratio_csv("t,R\n".as_bytes()), Err(Error::Data { line: 1, .. })));
}

#[test]
fn csv_readers_accept_comments_and_sigma() {
    let trace =
        read_decay_csv("# trace\nposition_nm,intensity,sigma\n0,1.0,0.1\n1000,0.9,0.1\n2000,0.8,0.1\n".as_bytes())
            .unwrap();
    assert_eq!(trace.len(), 3);
    assert_eq!(trace.positions()[1], nm(1000.0));
    assert!(trace.sigmas().is_some());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decay_fit_ignores_intensity_scale(seed in 0u64..1000, scale in 1e-6f64..1e6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = noisy_trace(1500.0, 12, 0.05, &mut rng, false);
        let scaled = DecayTrace::new(t.positions().to_vec(), t.intensities().iter().map(|v| v * scale).collect(), None).unwrap();
        let (a, b) = (fit_exponential_decay(&t).unwrap(), fit_exponential_decay(&scaled).unwrap());
        prop_assert!((a.alpha - b.alpha).abs() <= 1e-9 * a.alpha.abs().max(1.0));
        prop_assert!((b.i0 / a.i0 / scale - 1.0).abs() < 1e-9);
    }

    #[test]
    fn decay_fit_is_shift_equivariant(seed in 0u64..1000, shift in -1e-3f64..1e-3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = noisy_trace(1500.0, 12, 0.05, &mut rng, false);
        let moved = DecayTrace::new(t.positions().iter().map(|x| x + shift).collect(), t.intensities().to_vec(), None).unwrap();
        let (a, b) = (fit_exponential_decay(&t).unwrap(), fit_exponential_decay(&moved).unwrap());
        prop_assert!((a.alpha - b.alpha).abs() <= 1e-9 * a.alpha.abs().max(1.0));
        prop_assert!((a.i0 * (a.alpha * shift).exp() / b.i0 - 1.0).abs() < 1e-9);
    }
}
