//! Guided modes of a GaP membrane, suspended and bonded to diamond, with a
//! coarse |E|² profile of the bonded fundamental mode.
//!
//! cargo run --example slab_modes [-- thickness_nm]

use gapnv::slab::{find_guided_modes, mode_overlap, region_intensity};
use gapnv::stack::{N_AIR, N_GAP};
use gapnv::units::nm;
use gapnv::{Layer, LayerStack, MembraneStack, Polarization};

const LAMBDA: f64 = 637e-9;

fn main() -> gapnv::Result<()> {
    let t = nm(std::env::args().nth(1).map_or(120.0, |s| s.parse().expect("thickness in nm")));
    let suspended = LayerStack::new(vec![
        Layer::cladding("air", N_AIR),
        Layer::film("GaP", N_GAP, t),
        Layer::cladding("air", N_AIR),
    ])?;
    let bonded = MembraneStack::default().build(t, 0.0)?;

    for (name, stack) in [("suspended", &suspended), ("on diamond", &bonded)] {
        for pol in Polarization::BOTH {
            let modes = find_guided_modes(stack, LAMBDA, pol)?;
            let list: Vec<String> = modes.iter().map(|m| format!("{:.6} (order {})", m.n_eff, m.mode_order)).collect();
            println!("{name:>10} {pol}: {}", if list.is_empty() { "no guided modes".into() } else { list.join(", ") });
            if modes.len() > 1 {
                println!("{:>14} overlap of first two modes: {:.2e}", "", mode_overlap(&modes[0], &modes[1])?);
            }
        }
    }

    let mode = &find_guided_modes(&bonded, LAMBDA, Polarization::TE)?[0];
    let in_gap = region_intensity(mode, 0.0, t);
    let in_diamond = region_intensity(mode, t, t + nm(100.0));
    println!(
        "TE on diamond: |E|^2 in the top 100 nm of diamond / in the membrane = {:.4} (R = {:.4})",
        in_diamond / in_gap,
        (in_diamond / in_gap).sqrt()
    );
    let profile = mode.field_profile((-nm(150.0), t + nm(150.0)), 15);
    let peak = profile.intensity().into_iter().fold(0.0, f64::max);
    for (z, i) in profile.z.iter().zip(profile.intensity()) {
        println!("{:>7.1} nm |{}", z * 1e9, "#".repeat((50.0 * i / peak).round() as usize));
    }
    Ok(())
}
