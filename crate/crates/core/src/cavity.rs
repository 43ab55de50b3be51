//! Loss-limited Q, mode volume, emitter–cavity coupling and spontaneous
//! emission enhancement, plus a ring-resonator design sweep.
//!
//! Two field-maximum conventions meet here. The mode volume and the
//! denominator of the field ratio use the point where ε|E|² peaks; the
//! numerator at the emitter is plain |E|².

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;

use crate::emitter::NVEmitter;
use crate::error::{invalid, Error, Result};
use crate::modes2d::{self, ModeSolution2D, RingSection};
use crate::stack::Polarization;
use crate::units::{angular_frequency, db_per_cm_to_inverse_meters, to_nm};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Loss {
    DbPerCm(f64),
    PerMeter(f64),
}

impl Loss {
    pub fn per_meter(self) -> Result<f64> {
        match self {
            Loss::DbPerCm(db) => db_per_cm_to_inverse_meters(db),
            Loss::PerMeter(a) if a >= 0.0 && a.is_finite() => Ok(a),
            Loss::PerMeter(a) => Err(invalid(format!("loss must be >= 0 1/m, got {a}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quality {
    Finite(f64),
    /// Zero propagation loss.
    Lossless,
}

impl Quality {
    pub fn finite(self) -> Result<f64> {
        match self {
            Quality::Finite(q) => Ok(q),
            Quality::Lossless => Err(invalid("lossless waveguide: Q is unbounded")),
        }
    }
}

/// `Q = 2πn / (λα)`.
pub fn q_from_loss(loss: Loss, wavelength: f64, n: f64) -> Result<Quality> {
    if !(wavelength > 0.0) || !(n >= 1.0) {
        return Err(invalid(format!("need wavelength > 0 and n >= 1, got {wavelength} and {n}")));
    }
    let alpha = loss.per_meter()?;
    if alpha == 0.0 {
        return Ok(Quality::Lossless);
    }
    Ok(Quality::Finite(2.0 * PI * n / (wavelength * alpha)))
}

/// Inputs of the enhancement factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    pub q: f64,
    /// Mode volume in units of `(λ/n_cavity)³`.
    pub volume: f64,
    /// Index at the ε|E|² maximum.
    pub n_cavity: f64,
    /// Index of the emitter host.
    pub n_host: f64,
    /// `|E(r_NV)|² / |E(r_max)|²`.
    pub field_ratio_sq: f64,
    pub wavelength: f64,
}

impl CavityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0) || !self.q.is_finite() {
            return Err(invalid(format!("Q must be positive and finite, got {}", self.q)));
        }
        if !(self.volume > 0.0) || !self.volume.is_finite() {
            return Err(invalid(format!("mode volume must be positive, got {}", self.volume)));
        }
        if !(self.n_host >= 1.0) || !(self.n_cavity >= self.n_host) {
            return Err(invalid(format!("need n_cavity >= n_host >= 1, got {} and {}", self.n_cavity, self.n_host)));
        }
        // ε|E|² peaks in the cavity material, so |E|² at the emitter can exceed
        // |E(r_max)|² by up to ε_cavity/ε_host.
        let limit = (self.n_cavity / self.n_host).powi(2);
        if !(self.field_ratio_sq >= 0.0) || self.field_ratio_sq > limit * (1.0 + 1e-12) {
            return Err(invalid(format!("field ratio {} outside [0, {limit}]", self.field_ratio_sq)));
        }
        if !(self.wavelength > 0.0) {
            return Err(invalid("wavelength must be positive"));
        }
        Ok(())
    }

    /// Ring parameters from a cross-section mode and an emitter position.
    pub fn from_ring(mode: &ModeSolution2D, diameter: f64, nv: (f64, f64), q: f64, n_host: f64) -> Result<Self> {
        let v = modes2d::ring_mode_volume(mode, diameter)?;
        let params = Self {
            q,
            volume: v.reduced,
            n_cavity: v.n_peak,
            n_host,
            field_ratio_sq: modes2d::field_ratio_at_point(mode, nv.0, nv.1)?,
            wavelength: mode.wavelength,
        };
        params.validate()?;
        Ok(params)
    }
}

/// Total spontaneous-emission enhancement of the emitter.
pub fn purcell_total(params: &CavityParams, emitter: &NVEmitter) -> Result<f64> {
    params.validate()?;
    emitter.validate()?;
    Ok(3.0 / (4.0 * PI * PI)
        * (params.q / params.volume)
        * (params.n_cavity / params.n_host)
        * params.field_ratio_sq
        * emitter.cos2_theta()
        * emitter.branching_ratio())
}

/// Enhancement of emission into the zero-phonon line alone.
pub fn zpl_enhancement(f_se: f64, emitter: &NVEmitter) -> Result<f64> {
    if !(f_se >= 0.0) {
        return Err(invalid(format!("enhancement must be >= 0, got {f_se}")));
    }
    emitter.validate()?;
    Ok(f_se * emitter.gamma_total / emitter.gamma_zpl)
}

/// Sampled cavity field: ε and |E|² per cell, each cell of volume `cell_volume`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSamples {
    pub eps: Vec<f64>,
    pub intensity: Vec<f64>,
    pub cell_volume: f64,
}

impl FieldSamples {
    /// A cross-section mode swept around a ring of the given diameter.
    pub fn ring(mode: &ModeSolution2D, diameter: f64) -> Result<Self> {
        if !(diameter > 0.0) {
            return Err(invalid(format!("ring diameter must be positive, got {diameter}")));
        }
        Ok(Self {
            eps: mode.eps.clone(),
            intensity: mode.intensity.clone(),
            cell_volume: mode.grid.cell_area() * PI * diameter,
        })
    }

    /// `∫ ε|E|² dV`.
    pub fn energy(&self) -> f64 {
        self.eps.iter().zip(&self.intensity).map(|(e, i)| e * i).sum::<f64>() * self.cell_volume
    }

    pub fn peak(&self) -> f64 {
        self.eps.iter().zip(&self.intensity).map(|(e, i)| e * i).fold(0.0, f64::max)
    }
}

/// `∫ε|E|²dV / max(ε|E|²)`, in the units of `cell_volume`.
pub fn mode_volume(field: &FieldSamples) -> Result<f64> {
    let peak = field.peak();
    if !(peak > 0.0) {
        return Err(invalid("field is identically zero"));
    }
    Ok(field.energy() / peak)
}

/// `g²/γ` of the ZPL transition (1/s) for an emitter with field intensity
/// `nv_intensity` (same units as `field.intensity`) in a host of index `n_host`.
pub fn coupling_ratio(emitter: &NVEmitter, field: &FieldSamples, nv_intensity: f64, n_host: f64) -> Result<f64> {
    emitter.validate()?;
    let energy = field.energy();
    if !(energy > 0.0) {
        return Err(invalid("total field energy is zero"));
    }
    let lambda = emitter.lambda_zpl;
    Ok(3.0 / (16.0 * PI * PI) * lambda.powi(3) / n_host.powi(3) * n_host * n_host * nv_intensity * emitter.cos2_theta()
        / energy
        * angular_frequency(lambda))
}

/// [`coupling_ratio`] for a ring mode with the emitter at `point`.
pub fn ring_coupling_ratio(
    emitter: &NVEmitter,
    mode: &ModeSolution2D,
    diameter: f64,
    point: (f64, f64),
    n_host: f64,
) -> Result<f64> {
    let field = FieldSamples::ring(mode, diameter)?;
    coupling_ratio(emitter, &field, mode.intensity_at(point.0, point.1)?, n_host)
}

/// `4g²/(κ γ_total)` from the coupling ratio, with `κ = ω/Q`.
pub fn purcell_from_coupling(coupling: f64, q: f64, emitter: &NVEmitter) -> f64 {
    let kappa = angular_frequency(emitter.lambda_zpl) / q;
    4.0 * coupling * emitter.gamma_zpl / (kappa * emitter.gamma_total)
}

/// Ring design grid. Diameters and depths reuse the cross-section solve of
/// each (thickness, gap) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSweep {
    pub diameters: Vec<f64>,
    pub depths: Vec<f64>,
    pub thicknesses: Vec<f64>,
    pub gaps: Vec<f64>,
    pub loss: Loss,
    pub section: RingSection,
    pub polarization: Polarization,
    pub wavelength: f64,
    pub pitch: f64,
    pub emitter: NVEmitter,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub diameter: f64,
    pub depth: f64,
    pub thickness: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignRow {
    pub geometry: Geometry,
    pub n_eff: f64,
    pub q: f64,
    pub volume: f64,
    pub volume_reduced: f64,
    pub field_ratio_sq: f64,
    pub nv_x: f64,
    pub f_se: f64,
    pub f_zpl: f64,
    pub g2_over_gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignTable {
    /// Sorted by F_SE, largest first.
    pub rows: Vec<DesignRow>,
    pub failures: Vec<(Geometry, Error)>,
}

/// Column order of [`DesignTable::write_csv`].
pub const DESIGN_COLUMNS: &str = "diameter_um,nv_depth_nm,thickness_nm,gap_nm,polarization,n_eff,q,\
v_nm3,v_reduced,field_ratio_sq,nv_x_nm,g2_over_gamma_mhz,f_se,f_zpl";

impl DesignTable {
    pub fn write_csv<W: Write>(&self, pol: Polarization, out: W) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(out);
        writeln!(w, "{DESIGN_COLUMNS}")?;
        for r in &self.rows {
            let g = &r.geometry;
            writeln!(
                w,
                "{:.4},{:.3},{:.3},{:.3},{pol},{:.6},{:.1},{:.6e},{:.4},{:.6},{:.3},{:.6e},{:.6},{:.4}",
                g.diameter * 1e6,
                to_nm(g.depth),
                to_nm(g.thickness),
                to_nm(g.gap),
                r.n_eff,
                r.q,
                r.volume * 1e27,
                r.volume_reduced,
                r.field_ratio_sq,
                to_nm(r.nv_x),
                r.g2_over_gamma * 1e-6,
                r.f_se,
                r.f_zpl,
            )?;
        }
        w.flush()
    }
}

fn check_axis(name: &str, values: &[f64], allow_zero: bool) -> Result<()> {
    if values.is_empty() {
        return Err(invalid(format!("design sweep: {name} list is empty")));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 || (allow_zero && **v == 0.0)) || !v.is_finite()) {
        return Err(invalid(format!("design sweep: invalid {name} {v}")));
    }
    Ok(())
}

/// Solves every cross-section of the sweep and tabulates Q, V, field ratio
/// and enhancement factors. Points that cannot be solved are listed in
/// `failures`; a sweep with no solvable point is an error.
pub fn design_ring(sweep: &DesignSweep) -> Result<DesignTable> {
    check_axis("diameter", &sweep.diameters, false)?;
    check_axis("depth", &sweep.depths, true)?;
    check_axis("thickness", &sweep.thicknesses, false)?;
    check_axis("gap", &sweep.gaps, true)?;
    sweep.emitter.validate()?;
    let q = q_from_loss(sweep.loss, sweep.wavelength, sweep.section.n_core)?.finite()?;

    let sections: Vec<(f64, f64)> =
        sweep.thicknesses.iter().flat_map(|&t| sweep.gaps.iter().map(move |&g| (t, g))).collect();
    let solved: Vec<Result<(RingSection, modes2d::CrossSection, ModeSolution2D)>> = sections
        .par_iter()
        .map(|&(thickness, gap)| {
            let section = RingSection { thickness, gap, ..sweep.section };
            let cs = section.cross_section(sweep.pitch)?;
            let mode = modes2d::solve_fundamental_2d(&cs, sweep.wavelength, sweep.polarization)?;
            if !mode.is_guided() {
                return Err(Error::NoGuidedMode(format!(
                    "cross-section mode is unguided (n_eff {:.5} <= cladding bound {:.5})",
                    mode.n_eff, mode.cladding_bound
                )));
            }
            Ok((section, cs, mode))
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (&(thickness, gap), result) in sections.iter().zip(solved) {
        let (section, cs, mode) = match result {
            Ok(v) => v,
            Err(e) => {
                for &diameter in &sweep.diameters {
                    for &depth in &sweep.depths {
                        failures.push((Geometry { diameter, depth, thickness, gap }, e.clone()));
                    }
                }
                continue;
            }
        };
        for &diameter in &sweep.diameters {
            for &depth in &sweep.depths {
                let geometry = Geometry { diameter, depth, thickness, gap };
                match design_row(sweep, &section, &cs, &mode, geometry, q) {
                    Ok(row) => rows.push(row),
                    Err(e) => failures.push((geometry, e)),
                }
            }
        }
    }
    if rows.is_empty() {
        let first = failures.first().map(|(_, e)| e.to_string()).unwrap_or_default();
        return Err(Error::NoGuidedMode(format!("no point of the design sweep could be solved ({first})")));
    }
    rows.sort_by(|a, b| {
        b.f_se.total_cmp(&a.f_se).then_with(|| {
            let (ga, gb) = (&a.geometry, &b.geometry);
            (ga.diameter, ga.depth, ga.thickness, ga.gap)
                .partial_cmp(&(gb.diameter, gb.depth, gb.thickness, gb.gap))
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    Ok(DesignTable { rows, failures })
}

fn design_row(
    sweep: &DesignSweep,
    section: &RingSection,
    cs: &modes2d::CrossSection,
    mode: &ModeSolution2D,
    geometry: Geometry,
    q: f64,
) -> Result<DesignRow> {
    let nv = modes2d::nv_point(mode, cs, RingSection::DIAMOND_SURFACE, geometry.depth, section.n_substrate)?;
    let params = CavityParams::from_ring(mode, geometry.diameter, nv, q, section.n_substrate)?;
    let emitter = sweep.emitter.with_depth(geometry.depth);
    let f_se = purcell_total(&params, &emitter)?;
    let volume = modes2d::ring_mode_volume(mode, geometry.diameter)?;
    Ok(DesignRow {
        geometry,
        n_eff: mode.n_eff,
        q,
        volume: volume.volume,
        volume_reduced: params.volume,
        field_ratio_sq: params.field_ratio_sq,
        nv_x: nv.0,
        f_se,
        f_zpl: zpl_enhancement(f_se, &emitter)?,
        g2_over_gamma: ring_coupling_ratio(&emitter, mode, geometry.diameter, nv, section.n_substrate)?,
    })
}
