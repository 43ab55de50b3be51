//! Fundamental quasi-TE/TM modes of the 1 µm GaP rib on diamond, with the
//! slab bracket and a grid-refinement sequence.
//!
//! cargo run --release --example ridge_mode [-- 20,10,5]

use std::time::Instant;

use gapnv::modes2d::{effective_index_method, solve_fundamental_2d, RibWaveguide};
use gapnv::slab::fundamental_mode;
use gapnv::units::nm;
use gapnv::{MembraneStack, Polarization};

const LAMBDA: f64 = 637e-9;

fn main() -> gapnv::Result<()> {
    let pitches: Vec<f64> = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "20,10".into())
        .split(',')
        .map(|s| s.trim().parse().expect("pitch list in nm, e.g. 20,10,5"))
        .collect();
    let rib = RibWaveguide::default();
    for pol in Polarization::BOTH {
        let etched = fundamental_mode(&MembraneStack::default().build(nm(70.0), 0.0)?, LAMBDA, pol)?.n_eff;
        let unetched = fundamental_mode(&MembraneStack::default().build(nm(120.0), 0.0)?, LAMBDA, pol)?.n_eff;
        let eim = effective_index_method(&rib.cross_section(nm(10.0))?, LAMBDA, pol)?;
        println!("{pol}: slab bracket ({etched:.5}, {unetched:.5}), effective index method {eim:.5}");
        let mut previous: Vec<f64> = Vec::new();
        for &p in &pitches {
            let t = Instant::now();
            let mode = solve_fundamental_2d(&rib.cross_section(nm(p))?, LAMBDA, pol)?;
            print!(
                "  pitch {p:>4} nm  n_eff {:.6}  {:?}  {} iterations  {:.1} s",
                mode.n_eff,
                mode.guidance,
                mode.iterations,
                t.elapsed().as_secs_f64()
            );
            previous.push(mode.n_eff);
            if let [.., a, b, c] = previous[..] {
                print!("  Richardson ratio {:.2}", (a - b) / (b - c));
            }
            println!();
        }
    }
    Ok(())
}
