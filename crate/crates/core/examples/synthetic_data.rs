//! Writes the synthetic data files used by the bundled fit scenarios:
//! a noiseless 72 dB/cm decay trace and TE ratio data at a 4.7 nm gap.
//!
//! cargo run --release --example synthetic_data [-- OUT_DIR]

use std::fmt::Write as _;
use std::path::PathBuf;

use gapnv::fitting::GapModel;
use gapnv::slab::DEFAULT_WINDOW;
use gapnv::units::{db_per_cm_to_inverse_meters, nm};
use gapnv::{MembraneStack, Polarization};

const LAMBDA: f64 = 637e-9;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios"));
    std::fs::create_dir_all(&dir)?;

    let alpha = db_per_cm_to_inverse_meters(72.0)?;
    let mut decay = String::from("# noiseless trace, 72 dB/cm\nposition_nm,intensity\n");
    for k in 0..=20 {
        let x_nm = 25_000.0 * k as f64;
        writeln!(decay, "{x_nm:.1},{:.12e}", 1000.0 * (-alpha * nm(x_nm)).exp())?;
    }
    std::fs::write(dir.join("decay-72dbcm.csv"), decay)?;

    let model = GapModel::new(MembraneStack::default(), LAMBDA, DEFAULT_WINDOW);
    let mut ratio = String::from("# noiseless TE ratios, 4.7 nm air gap\nthickness_nm,R,polarization\n");
    for t in (120..=260).step_by(20) {
        let r = model.ratio(nm(t as f64), nm(4.7), Polarization::TE)?;
        writeln!(ratio, "{t},{r:.12e},TE")?;
    }
    std::fs::write(dir.join("gap-4p7nm.csv"), ratio)?;
    println!("wrote decay-72dbcm.csv and gap-4p7nm.csv to {}", dir.display());
    Ok(())
}
