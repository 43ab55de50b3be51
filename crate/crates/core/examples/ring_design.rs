//! Purcell budget of a 2.5 µm GaP ring on a diamond pedestal with an NV
//! center 20 nm below the diamond surface.
//!
//! cargo run --release --example ring_design [-- pitch_nm]

use gapnv::cavity::{design_ring, DesignSweep, Loss};
use gapnv::modes2d::RingSection;
use gapnv::units::{nm, um};
use gapnv::{NVEmitter, Polarization};

fn main() -> gapnv::Result<()> {
    let pitch: f64 = std::env::args().nth(1).map_or(5.0, |s| s.parse().expect("pitch in nm"));
    for polarization in Polarization::BOTH {
        let sweep = DesignSweep {
            diameters: vec![um(2.5), um(5.0)],
            depths: vec![nm(10.0), nm(20.0), nm(40.0)],
            thicknesses: vec![nm(120.0)],
            gaps: vec![0.0],
            loss: Loss::DbPerCm(72.0),
            section: RingSection::default(),
            polarization,
            wavelength: 637e-9,
            pitch: nm(pitch),
            emitter: NVEmitter::default(),
        };
        let table = design_ring(&sweep)?;
        println!("{polarization}, alpha = 72 dB/cm, pitch {pitch} nm");
        println!("  D (um)  depth (nm)       Q   V (lambda/n)^3  |E_nv/E_max|^2    F_SE   F_ZPL");
        for r in &table.rows {
            println!(
                "  {:>6.2}  {:>10.0}  {:>6.0}  {:>15.2}  {:>14.4}  {:>6.3}  {:>6.2}",
                r.geometry.diameter * 1e6,
                r.geometry.depth * 1e9,
                r.q,
                r.volume_reduced,
                r.field_ratio_sq,
                r.f_se,
                r.f_zpl
            );
        }
    }
    Ok(())
}
