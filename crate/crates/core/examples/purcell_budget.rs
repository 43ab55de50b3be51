//! Purcell factors from explicit cavity numbers: Q from loss, then F_SE and
//! the zero-phonon-line enhancement, and a check against the coupling-rate
//! route for a uniform-box field.
//!
//! cargo run --example purcell_budget

use gapnv::cavity::{
    coupling_ratio, mode_volume, purcell_from_coupling, purcell_total, q_from_loss, zpl_enhancement, CavityParams,
    FieldSamples, Loss,
};
use gapnv::stack::{N_DIAMOND, N_GAP};
use gapnv::NVEmitter;

fn main() -> gapnv::Result<()> {
    let lambda = 637e-9;
    let emitter = NVEmitter::default();
    for db in [72.0, 232.0] {
        let q = q_from_loss(Loss::DbPerCm(db), lambda, N_GAP)?.finite()?;
        println!("{db:>5} dB/cm -> Q = {q:.0}");
    }
    let q = q_from_loss(Loss::DbPerCm(72.0), lambda, N_GAP)?.finite()?;
    println!("branching ratio gamma_total/gamma_zpl = {:.2}", 1.0 / emitter.branching_ratio());
    for (volume, ratio) in [(18.0, 0.25), (18.0, 0.5), (10.0, 0.5)] {
        let params =
            CavityParams { q, volume, n_cavity: N_GAP, n_host: N_DIAMOND, field_ratio_sq: ratio, wavelength: lambda };
        let f_se = purcell_total(&params, &emitter)?;
        println!(
            "V = {volume:>4} (lambda/n)^3, |E_nv/E_max|^2 = {ratio:.2}: F_SE = {f_se:.3}, F_ZPL = {:.1}",
            zpl_enhancement(f_se, &emitter)?
        );
    }

    // Uniform diamond box: V is the box volume and both routes agree.
    let n = 1000;
    let field = FieldSamples { eps: vec![N_DIAMOND * N_DIAMOND; n], intensity: vec![1.0; n], cell_volume: 1e-21 };
    let v = mode_volume(&field)?;
    let g = coupling_ratio(&emitter, &field, 1.0, N_DIAMOND)?;
    let params = CavityParams {
        q,
        volume: v / (lambda / N_DIAMOND).powi(3),
        n_cavity: N_DIAMOND,
        n_host: N_DIAMOND,
        field_ratio_sq: 1.0,
        wavelength: lambda,
    };
    println!(
        "uniform box: 4g^2/(kappa gamma) = {:.6}, F_SE = {:.6}",
        purcell_from_coupling(g, q, &emitter),
        purcell_total(&params, &emitter)?
    );
    Ok(())
}
