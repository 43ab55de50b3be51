//! End-to-end acceptance gate. Prints one `PASS`/`FAIL` line per criterion
//! straight to stderr (bypassing the test harness capture), then fails if
//! any criterion failed.

mod common;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use common::{symmetric, symmetric_slab_indices, v_over_pi};
use gapnv::cavity::{
    coupling_ratio, design_ring, mode_volume, purcell_from_coupling, purcell_total, q_from_loss, zpl_enhancement,
    CavityParams, DesignSweep, FieldSamples, Loss,
};
use gapnv::fitting::{fit_air_gap, fit_exponential_decay, DecayTrace, GapModel, RatioPoint};
use gapnv::modes2d::{solve_fundamental_2d, RibWaveguide, RingSection};
use gapnv::slab::{find_guided_modes, fundamental_mode, ratio_curve, DEFAULT_WINDOW};
use gapnv::stack::{N_DIAMOND, N_GAP};
use gapnv::units::{db_per_cm_to_inverse_meters, nm, um};
use gapnv::{MembraneStack, NVEmitter, Polarization};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const LAMBDA: f64 = 637e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed <= limit
}

fn q_conversion() -> Outcome {
    let q = |db| q_from_loss(Loss::DbPerCm(db), LAMBDA, N_GAP).unwrap().finite().unwrap();
    let (q72, q232) = (q(72.0), q(232.0));
    let pass = (1.9e4..=2.1e4).contains(&q72) && (5.7e3..=6.4e3).contains(&q232);
    outcome(pass, format!("Q(72 dB/cm) = {q72:.0}, Q(232 dB/cm) = {q232:.0}"))
}

fn zpl_identity() -> Outcome {
    let emitter = NVEmitter::default();
    let ratio = zpl_enhancement(1.0, &emitter).unwrap();
    let f = zpl_enhancement(1.08, &emitter).unwrap();
    let pass = (ratio - 37.14).abs() <= 0.01 && (f - 40.0).abs() <= 1.0;
    outcome(pass, format!("F_ZPL/F_SE = {ratio:.4}, F_SE 1.08 -> F_ZPL = {f:.3}"))
}

fn ratio_structure() -> Outcome {
    let start = Instant::now();
    let template = MembraneStack::default();
    let ts: Vec<f64> = (0..=14).map(|k| nm(120.0 + 10.0 * k as f64)).collect();
    let mut problems = Vec::new();
    let mut drops = BTreeMap::new();
    for pol in Polarization::BOTH {
        let bare = ratio_curve(&template, &ts, 0.0, LAMBDA, pol, DEFAULT_WINDOW).unwrap();
        let gapped = ratio_curve(&template, &ts, nm(4.7), LAMBDA, pol, DEFAULT_WINDOW).unwrap();
        if !bare.failures.is_empty() || !gapped.failures.is_empty() {
            problems.push(format!("{pol}: unsolved thicknesses"));
            continue;
        }
        for curve in [&bare, &gapped] {
            if !curve.points.windows(2).all(|w| w[1].1 < w[0].1) {
                problems.push(format!("{pol} gap {:.1} nm: not strictly decreasing", curve.gap * 1e9));
            }
        }
        let fractional: Vec<f64> = bare.points.iter().zip(&gapped.points).map(|(b, g)| (b.1 - g.1) / b.1).collect();
        if !fractional.iter().all(|d| *d > 0.0) {
            problems.push(format!("{pol}: gap does not lower R everywhere"));
        }
        drops.insert(pol.to_string(), fractional);
    }
    if let (Some(te), Some(tm)) = (drops.get("TE"), drops.get("TM")) {
        if !tm.iter().zip(te).all(|(m, e)| m > e) {
            problems.push("TM fractional decrease does not exceed TE everywhere".into());
        }
    }
    let elapsed = start.elapsed();
    let fmt_range = |v: Option<&Vec<f64>>| {
        v.map(|d| {
            format!(
                "{:.1}-{:.1}%",
                100.0 * d.iter().cloned().fold(f64::INFINITY, f64::min),
                100.0 * d.iter().cloned().fold(0.0, f64::max)
            )
        })
        .unwrap_or_else(|| "n/a".into())
    };
    let detail = format!(
        "15 thicknesses x 2 gaps x TE/TM; gap drop TE {}, TM {}; {:.2} s{}",
        fmt_range(drops.get("TE")),
        fmt_range(drops.get("TM")),
        elapsed.as_secs_f64(),
        if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
    );
    outcome(problems.is_empty() && within(elapsed, Duration::from_secs(10)), detail)
}

fn slab_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut stacks, mut resampled, mut modes, mut worst, mut count_errors) = (0, 0, 0, 0.0f64, 0);
    while stacks < 50 {
        let n1 = rng.random_range(1.5..3.6);
        let n2 = rng.random_range(1.0..n1 - 0.05);
        let d = nm(rng.random_range(40.0..1500.0));
        let vp = v_over_pi(n1, n2, d, LAMBDA);
        if (vp - vp.round()).abs() < 1e-3 {
            resampled += 1;
            continue;
        }
        stacks += 1;
        for pol in Polarization::BOTH {
            let expected = symmetric_slab_indices(n1, n2, d, LAMBDA, pol);
            let found = find_guided_modes(&symmetric(n1, n2, d), LAMBDA, pol).unwrap();
            if found.len() != vp.ceil() as usize || found.len() != expected.len() {
                count_errors += 1;
            }
            for (m, n) in found.iter().zip(&expected) {
                worst = worst.max((m.n_eff - n).abs());
                modes += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = count_errors == 0 && worst <= 1e-9 && within(elapsed, Duration::from_secs(30));
    outcome(
        pass,
        format!(
            "50 stacks x TE/TM, {modes} modes, {count_errors} count mismatches, max |dn| = {worst:.2e}, {resampled} near-cutoff draws resampled, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn rib_convergence() -> Outcome {
    let start = Instant::now();
    let rib = RibWaveguide::default();
    let slab =
        |t: f64, pol| fundamental_mode(&MembraneStack::default().build(t, 0.0).unwrap(), LAMBDA, pol).unwrap().n_eff;
    let mut pass = true;
    let mut parts = Vec::new();
    for pol in Polarization::BOTH {
        let etched = slab(rib.total_thickness - rib.etch_depth, pol);
        let unetched = slab(rib.total_thickness, pol);
        let n: Vec<f64> = [20.0, 10.0, 5.0]
            .iter()
            .map(|&p| solve_fundamental_2d(&rib.cross_section(nm(p)).unwrap(), LAMBDA, pol).unwrap().n_eff)
            .collect();
        let ratio = (n[0] - n[1]) / (n[1] - n[2]);
        let bracketed = n.iter().all(|v| *v > etched && *v < unetched);
        pass &= (ratio - 4.0).abs() <= 1.0 && bracketed;
        parts.push(format!(
            "{pol} n_eff(20/10/5 nm) = {:.6}/{:.6}/{:.6}, ratio {ratio:.2}, bracket ({etched:.5}, {unetched:.5}) {}",
            n[0],
            n[1],
            n[2],
            if bracketed { "held" } else { "violated" }
        ));
    }
    let elapsed = start.elapsed();
    pass &= within(elapsed, Duration::from_secs(300));
    outcome(pass, format!("{}; {:.1} s", parts.join("; "), elapsed.as_secs_f64()))
}

/// Ring volume and design point from one 5 nm design run.
fn ring_design() -> (Outcome, Outcome) {
    let start = Instant::now();
    let sweep = DesignSweep {
        diameters: vec![um(2.5)],
        depths: vec![nm(20.0)],
        thicknesses: vec![nm(120.0)],
        gaps: vec![0.0],
        loss: Loss::DbPerCm(72.0),
        section: RingSection::default(),
        polarization: Polarization::TE,
        wavelength: LAMBDA,
        pitch: nm(5.0),
        emitter: NVEmitter::default(),
    };
    let table = design_ring(&sweep).unwrap();
    let elapsed = start.elapsed();
    let row = table.rows[0];
    let in_time = within(elapsed, Duration::from_secs(300));
    let volume = outcome(
        (9.0..=36.0).contains(&row.volume_reduced) && in_time,
        format!(
            "V = {:.2} (lambda/n_GaP)^3 at 5 nm pitch (band 9-36), {:.1} s",
            row.volume_reduced,
            elapsed.as_secs_f64()
        ),
    );
    let design = outcome(
        row.f_se > 1.0 && in_time,
        format!(
            "F_SE = {:.4} (Q = {:.0}, V = {:.2}, |E_NV/E_max|^2 = {:.4}), F_ZPL = {:.2}",
            row.f_se, row.q, row.volume_reduced, row.field_ratio_sq, row.f_zpl
        ),
    );
    (volume, design)
}

fn fit_round_trips() -> Outcome {
    let start = Instant::now();
    let model = GapModel::new(MembraneStack::default(), LAMBDA, DEFAULT_WINDOW);
    let data: Vec<RatioPoint> = (0..8)
        .map(|k| {
            let t = nm(120.0 + 20.0 * k as f64);
            RatioPoint {
                thickness: t,
                ratio: model.ratio(t, nm(4.7), Polarization::TE).unwrap(),
                polarization: Polarization::TE,
            }
        })
        .collect();
    let gap = fit_air_gap(&data, &model).unwrap().gap;

    let alpha = db_per_cm_to_inverse_meters(72.0).unwrap();
    let xs = |n: usize| (0..n).map(|k| 1e-3 * k as f64 / (n - 1) as f64).collect::<Vec<_>>();
    let clean = xs(20);
    let ys = clean.iter().map(|x| 1000.0 * (-alpha * x).exp()).collect();
    let exact = fit_exponential_decay(&DecayTrace::new(clean, ys, None).unwrap()).unwrap().alpha;
    let exact_rel = (exact - alpha).abs() / alpha;

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let noise = Normal::new(0.0, 0.05).unwrap();
    let trials = 1000;
    let mut inside = 0;
    for _ in 0..trials {
        let x = xs(50);
        let y = x.iter().map(|x| (-alpha * x).exp() * (1.0 + noise.sample(&mut rng))).collect();
        let fit = fit_exponential_decay(&DecayTrace::new(x, y, None).unwrap()).unwrap();
        if (fit.alpha - alpha).abs() <= 3.0 * fit.alpha_std_error {
            inside += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = (gap - nm(4.7)).abs() <= nm(0.05)
        && exact_rel <= 1e-9
        && inside as f64 >= 0.99 * trials as f64
        && within(elapsed, Duration::from_secs(120));
    outcome(
        pass,
        format!(
            "gap = {:.3} nm (truth 4.7), noiseless alpha rel. error {exact_rel:.1e}, {inside}/{trials} noisy fits within 3 sigma, {:.1} s",
            gap * 1e9,
            elapsed.as_secs_f64()
        ),
    )
}

fn derivation_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    let cases = 2000;
    for _ in 0..cases {
        let cells = rng.random_range(4..40);
        let eps: Vec<f64> =
            (0..cells).map(|_| if rng.random_bool(0.5) { N_DIAMOND * N_DIAMOND } else { N_GAP * N_GAP }).collect();
        let intensity: Vec<f64> = (0..cells).map(|_| rng.random_range(0.01..1.0)).collect();
        let field = FieldSamples { eps, intensity, cell_volume: rng.random_range(1e-24..1e-20) };
        let total = rng.random_range(1e6..5e7);
        let emitter = NVEmitter {
            dipole_angle: rng.random_range(0.0..1.2),
            gamma_total: total,
            gamma_zpl: total * rng.random_range(0.01..1.0),
            ..NVEmitter::default()
        };
        let q = rng.random_range(1e2..1e6);
        let k = (0..cells)
            .max_by(|&a, &b| (field.eps[a] * field.intensity[a]).total_cmp(&(field.eps[b] * field.intensity[b])))
            .unwrap();
        let n_cavity = field.eps[k].sqrt();
        let ratio = rng.random_range(0.01..1.0) * (n_cavity / N_DIAMOND).powi(2).min(1.0);
        let lambda = emitter.lambda_zpl;
        let params = CavityParams {
            q,
            volume: mode_volume(&field).unwrap() / (lambda / n_cavity).powi(3),
            n_cavity,
            n_host: N_DIAMOND,
            field_ratio_sq: ratio,
            wavelength: lambda,
        };
        let direct = purcell_total(&params, &emitter).unwrap();
        let coupling = coupling_ratio(&emitter, &field, ratio * field.intensity[k], N_DIAMOND).unwrap();
        let via = purcell_from_coupling(coupling, q, &emitter);
        worst = worst.max((via - direct).abs() / direct);
    }
    outcome(worst <= 1e-10, format!("{cases} random cases, max relative difference {worst:.2e}"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn run_bundled(dir: &Path, jobs: &str) -> BTreeMap<String, Vec<u8>> {
    let runs: [(&str, Vec<String>); 5] = [
        ("ratio.csv", vec!["ratio-curve".into(), "--scenario".into(), scenario("fig2c.toml").display().to_string()]),
        (
            "gap.csv",
            vec!["fit".into(), "gap".into(), "--scenario".into(), scenario("fig2c.toml").display().to_string()],
        ),
        (
            "loss.csv",
            vec![
                "fit".into(),
                "loss".into(),
                "--scenario".into(),
                scenario("fig3b-synthetic.toml").display().to_string(),
            ],
        ),
        ("design.csv", vec!["design".into(), "--scenario".into(), scenario("ring2p5.toml").display().to_string()]),
        ("ridge.csv", vec!["mode2d".into(), "--scenario".into(), scenario("ridge.toml").display().to_string()]),
    ];
    for (out, args) in runs {
        let status = Command::new(env!("CARGO_BIN_EXE_gapnv"))
            .args(["--jobs", jobs])
            .args(&args)
            .arg("--out")
            .arg(dir.join(out))
            .output()
            .unwrap();
        assert!(status.status.success(), "{args:?}: {}", String::from_utf8_lossy(&status.stderr));
    }
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn determinism() -> Outcome {
    let start = Instant::now();
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let a = run_bundled(dirs[0].path(), "1");
    let b = run_bundled(dirs[1].path(), "8");
    let c = run_bundled(dirs[2].path(), "8");
    let files: Vec<_> = a.keys().cloned().collect();
    let pass = !a.is_empty() && a == b && b == c;
    outcome(
        pass,
        format!(
            "{} CSVs ({}) identical across --jobs 1, 8, 8: {}; {:.1} s",
            files.len(),
            files.join(", "),
            if pass { "yes" } else { "no" },
            start.elapsed().as_secs_f64()
        ),
    )
}

#[test]
fn acceptance() {
    let (volume, design) = ring_design();
    let results = [
        ("q-conversion", q_conversion()),
        ("zpl-identity", zpl_identity()),
        ("ratio-curve-structure", ratio_structure()),
        ("slab-oracle", slab_oracle()),
        ("rib-convergence", rib_convergence()),
        ("ring-volume", volume),
        ("design-point", design),
        ("fit-round-trips", fit_round_trips()),
        ("derivation-identity", derivation_identity()),
        ("determinism", determinism()),
    ];
    let mut err = std::io::stderr().lock();
    for (name, r) in &results {
        let _ = writeln!(err, "ACCEPTANCE {} {name}: {}", if r.pass { "PASS" } else { "FAIL" }, r.detail);
    }
    let failed: Vec<_> = results.iter().filter(|(_, r)| !r.pass).map(|(n, _)| *n).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
