//! Field ratio R between the top 100 nm of diamond and the GaP membrane,
//! versus membrane thickness, for a bonded membrane and a 4.7 nm air gap.
//!
//! cargo run --example penetration_curve

use gapnv::slab::{ratio_curve, DEFAULT_WINDOW};
use gapnv::units::nm;
use gapnv::{MembraneStack, Polarization};

fn main() -> gapnv::Result<()> {
    let thicknesses: Vec<f64> = (120..=260).step_by(20).map(|t| nm(t as f64)).collect();
    let template = MembraneStack::default();
    let mut columns = Vec::new();
    for pol in Polarization::BOTH {
        for gap in [0.0, 4.7] {
            let curve = ratio_curve(&template, &thicknesses, nm(gap), 637e-9, pol, DEFAULT_WINDOW)?;
            columns.push((format!("{pol} {gap} nm"), curve.points));
        }
    }
    print!("t (nm)");
    for (label, _) in &columns {
        print!("  {label:>10}");
    }
    println!();
    for (k, t) in thicknesses.iter().enumerate() {
        print!("{:>6.0}", t * 1e9);
        for (_, points) in &columns {
            print!("  {:>10.4}", points[k].1);
        }
        println!();
    }
    Ok(())
}
