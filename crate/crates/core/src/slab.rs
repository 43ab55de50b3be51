//! Guided modes of planar multilayer stacks by the transfer-matrix method,
//! plus the region-intensity integrals behind the diamond/GaP field ratio.
//!
//! The principal field is `Ey` for TE and `Hy` for TM (propagation along `x`,
//! layering along `z`). Inside a homogeneous layer it obeys
//! `F'' = k0² (n_eff² − n²) F`; across an interface `F` and `F'/w` are
//! continuous with `w = 1` (TE) or `w = n²` (TM). Transverse electric-field
//! components are derived from the principal field:
//!
//! * TE: `Ey = F`
//! * TM: `Ex = F' / (k0 ε)`, `Ez = n_eff F / ε` (common factor dropped)
//!
//! Fields are normalized so that `∫ |E|² dz = 1` with `z` in meters.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quad;
use crate::stack::{normalize_stack, LayerStack, MembraneStack, Polarization, MEMBRANE};

/// Scan step in n_eff before bisection.
pub const SCAN_STEP: f64 = 1e-4;
/// Offset from the scan limits, where a cladding decay constant vanishes.
const EDGE: f64 = 1e-12;
const QUAD_TOL: f64 = 1e-12;
/// Default diamond window for the penetration ratio.
pub const DEFAULT_WINDOW: f64 = 100e-9;
/// Tail length (each side) of the stored profile.
const PROFILE_TAIL_MAX: f64 = 5e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Extent {
    Top,
    Film,
    Bottom,
}

/// Analytic field on one layer, referenced to `anchor` (the layer's lower-z
/// edge for films and the bottom cladding, the interface z = 0 for the top).
#[derive(Debug, Clone, PartialEq)]
struct Piece {
    extent: Extent,
    start: f64,
    end: f64,
    anchor: f64,
    index: f64,
    field: f64,
    slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldValue {
    /// `Ey` (TE) or `Hy` (TM).
    pub principal: f64,
    /// Derivative of the principal field, 1/m scaled.
    pub derivative: f64,
    pub ex: f64,
    pub ey: f64,
    pub ez: f64,
}

impl FieldValue {
    pub fn intensity(&self) -> f64 {
        self.ex * self.ex + self.ey * self.ey + self.ez * self.ez
    }
}

/// Field sampled on a uniform `z` grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldProfile {
    pub z: Vec<f64>,
    pub principal: Vec<f64>,
    pub ex: Vec<f64>,
    pub ey: Vec<f64>,
    pub ez: Vec<f64>,
}

impl FieldProfile {
    pub fn intensity(&self) -> Vec<f64> {
        (0..self.z.len()).map(|i| self.ex[i] * self.ex[i] + self.ey[i] * self.ey[i] + self.ez[i] * self.ez[i]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSolution1D {
    pub n_eff: f64,
    pub polarization: Polarization,
    /// Number of nodes of the principal field.
    pub mode_order: usize,
    pub wavelength: f64,
    /// Decay constants (1/m) in the top and bottom claddings.
    pub decay_top: f64,
    pub decay_bottom: f64,
    /// Default 1 nm sampling of the stack plus cladding tails.
    pub profile: FieldProfile,
    stack: LayerStack,
    pieces: Vec<Piece>,
}

fn weight(pol: Polarization, index: f64) -> f64 {
    match pol {
        Polarization::TE => 1.0,
        Polarization::TM => index * index,
    }
}

/// Propagates (F, dF/dζ) through a homogeneous layer of normalized length
/// `len`, where `q2 = n² − n_eff²`.
fn advance(f: f64, d: f64, q2: f64, len: f64) -> (f64, f64) {
    if q2 > 0.0 {
        let k = q2.sqrt();
        let (s, c) = (k * len).sin_cos();
        (f * c + d * s / k, -f * k * s + d * c)
    } else if q2 < 0.0 {
        let g = (-q2).sqrt();
        let (sh, ch) = ((g * len).sinh(), (g * len).cosh());
        (f * ch + d * sh / g, f * g * sh + d * ch)
    } else {
        (f + d * len, d)
    }
}

/// Transfer-matrix dispersion function. Zero exactly at guided-mode
/// effective indices; dimensionless (lengths scaled by k0).
pub fn dispersion_residual(stack: &LayerStack, wavelength: f64, pol: Polarization, n_eff: f64) -> f64 {
    let k0 = 2.0 * PI / wavelength;
    let layers = stack.layers();
    let top = &layers[0];
    let bottom = &layers[layers.len() - 1];
    let mut f = 1.0;
    let mut d = (n_eff * n_eff - top.index * top.index).max(0.0).sqrt();
    let mut w_prev = weight(pol, top.index);
    for film in stack.films() {
        let w = weight(pol, film.index);
        d *= w / w_prev;
        let len = k0 * film.thickness.unwrap_or(0.0);
        (f, d) = advance(f, d, film.index * film.index - n_eff * n_eff, len);
        let scale = f.abs().max(d.abs());
        if scale > 1e100 {
            f /= scale;
            d /= scale;
        }
        w_prev = w;
    }
    d *= weight(pol, bottom.index) / w_prev;
    let gamma = (n_eff * n_eff - bottom.index * bottom.index).max(0.0).sqrt();
    d + gamma * f
}

/// All guided modes, highest n_eff first. An empty list is a valid answer.
pub fn find_guided_modes(stack: &LayerStack, wavelength: f64, pol: Polarization) -> Result<Vec<ModeSolution1D>> {
    if !(wavelength > 0.0) {
        return Err(Error::InvalidInput(format!("wavelength must be positive, got {wavelength}")));
    }
    let stack = stack.cleaned();
    let Some(n_hi) = stack.max_film_index() else {
        return Ok(Vec::new());
    };
    let n_lo = stack.max_cladding_index();
    if n_hi <= n_lo {
        return Ok(Vec::new());
    }
    let residual = |n: f64| dispersion_residual(&stack, wavelength, pol, n);

    let mut grid = vec![n_lo + EDGE];
    let mut k = 1.0;
    while n_lo + k * SCAN_STEP < n_hi - EDGE {
        grid.push(n_lo + k * SCAN_STEP);
        k += 1.0;
    }
    grid.push(n_hi - EDGE);

    let mut roots = Vec::new();
    let mut prev = (grid[0], residual(grid[0]));
    for &n in &grid[1..] {
        let cur = (n, residual(n));
        if prev.1 == 0.0 {
            roots.push(prev.0);
        } else if prev.1.signum() != cur.1.signum() && cur.1 != 0.0 {
            roots.push(bisect(&residual, prev, cur)?);
        }
        prev = cur;
    }
    roots.sort_by(|a, b| b.total_cmp(a));

    roots.into_iter().map(|n| build_mode(&stack, wavelength, pol, n)).collect()
}

fn bisect(f: &impl Fn(f64) -> f64, lo: (f64, f64), hi: (f64, f64)) -> Result<f64> {
    let (mut a, mut fa) = lo;
    let (mut b, fb) = hi;
    let start = (a, b);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    let root = 0.5 * (a + b);
    let r = f(root);
    let scale = fa.abs().max(fb.abs()).max(1.0);
    if !r.is_finite() || (b - a) > 1e-12 || r.abs() > 1e-6 * scale {
        return Err(Error::RootNotConverged { lo: start.0, hi: start.1, residual: r });
    }
    Ok(root)
}

fn build_mode(stack: &LayerStack, wavelength: f64, pol: Polarization, n_eff: f64) -> Result<ModeSolution1D> {
    let k0 = 2.0 * PI / wavelength;
    let layers = stack.layers();
    let top = &layers[0];
    let bottom = &layers[layers.len() - 1];
    let g_top = k0 * (n_eff * n_eff - top.index * top.index).sqrt();
    let g_bot = k0 * (n_eff * n_eff - bottom.index * bottom.index).sqrt();

    let mut pieces = Vec::with_capacity(layers.len());
    pieces.push(Piece {
        extent: Extent::Top,
        start: f64::NEG_INFINITY,
        end: 0.0,
        anchor: 0.0,
        index: top.index,
        field: 1.0,
        slope: g_top,
    });
    let (mut f, mut d) = (1.0, g_top / k0);
    let mut w_prev = weight(pol, top.index);
    let mut z = 0.0;
    for film in stack.films() {
        let w = weight(pol, film.index);
        d *= w / w_prev;
        let t = film.thickness.unwrap_or(0.0);
        pieces.push(Piece {
            extent: Extent::Film,
            start: z,
            end: z + t,
            anchor: z,
            index: film.index,
            field: f,
            slope: d * k0,
        });
        (f, d) = advance(f, d, film.index * film.index - n_eff * n_eff, k0 * t);
        z += t;
        w_prev = w;
    }
    pieces.push(Piece {
        extent: Extent::Bottom,
        start: z,
        end: f64::INFINITY,
        anchor: z,
        index: bottom.index,
        field: f,
        slope: -g_bot * f,
    });

    let mut mode = ModeSolution1D {
        n_eff,
        polarization: pol,
        mode_order: 0,
        wavelength,
        decay_top: g_top,
        decay_bottom: g_bot,
        profile: FieldProfile::default(),
        stack: stack.clone(),
        pieces,
    };
    let norm = mode.raw_intensity(f64::NEG_INFINITY, f64::INFINITY);
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::RootNotConverged { lo: n_eff, hi: n_eff, residual: norm });
    }
    let s = norm.sqrt().recip();
    for p in &mut mode.pieces {
        p.field *= s;
        p.slope *= s;
    }
    mode.mode_order = mode.count_nodes();
    let (z0, z1) = mode.default_window();
    let samples = ((z1 - z0) / 1e-9).round() as usize + 1;
    mode.profile = mode.field_profile((z0, z1), samples.max(2));
    Ok(mode)
}

impl ModeSolution1D {
    pub fn k0(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn stack(&self) -> &LayerStack {
        &self.stack
    }

    /// Stack plus five decay lengths of each tail (capped at 5 µm).
    pub fn default_window(&self) -> (f64, f64) {
        let top = (5.0 / self.decay_top).min(PROFILE_TAIL_MAX);
        let bottom = (5.0 / self.decay_bottom).min(PROFILE_TAIL_MAX);
        (-top, self.stack.core_thickness() + bottom)
    }

    fn piece_at(&self, z: f64) -> usize {
        // interfaces belong to the layer below them
        self.pieces.iter().rposition(|p| z >= p.start).unwrap_or(0)
    }

    fn eval_piece(&self, p: &Piece, z: f64) -> FieldValue {
        let k0 = self.k0();
        let (f, d) = match p.extent {
            Extent::Top => {
                let g = self.decay_top;
                let f = p.field * (g * (z - p.anchor)).exp();
                (f, g * f)
            }
            Extent::Bottom => {
                let g = self.decay_bottom;
                let f = p.field * (-g * (z - p.anchor)).exp();
                (f, -g * f)
            }
            Extent::Film => {
                let q2 = p.index * p.index - self.n_eff * self.n_eff;
                let (f, d) = advance(p.field, p.slope / k0, q2, k0 * (z - p.anchor));
                (f, d * k0)
            }
        };
        self.components(p.index, f, d)
    }

    fn components(&self, index: f64, f: f64, d: f64) -> FieldValue {
        match self.polarization {
            Polarization::TE => FieldValue { principal: f, derivative: d, ex: 0.0, ey: f, ez: 0.0 },
            Polarization::TM => {
                let eps = index * index;
                FieldValue { principal: f, derivative: d, ex: d / (self.k0() * eps), ey: 0.0, ez: self.n_eff * f / eps }
            }
        }
    }

    /// Field at `z`; an interface position evaluates the layer below it.
    pub fn field_at(&self, z: f64) -> FieldValue {
        let i = self.piece_at(z);
        self.eval_piece(&self.pieces[i], z)
    }

    /// Field of layer `layer` (stack order) evaluated at `z`, which may lie
    /// on or just outside that layer's boundaries.
    pub fn field_in_layer(&self, layer: usize, z: f64) -> FieldValue {
        self.eval_piece(&self.pieces[layer], z)
    }

    pub fn field_profile(&self, window: (f64, f64), samples: usize) -> FieldProfile {
        let samples = samples.max(2);
        let (z0, z1) = window;
        let step = (z1 - z0) / (samples - 1) as f64;
        let mut out = FieldProfile {
            z: Vec::with_capacity(samples),
            principal: Vec::with_capacity(samples),
            ex: Vec::with_capacity(samples),
            ey: Vec::with_capacity(samples),
            ez: Vec::with_capacity(samples),
        };
        for i in 0..samples {
            let z = z0 + step * i as f64;
            let v = self.field_at(z);
            out.z.push(z);
            out.principal.push(v.principal);
            out.ex.push(v.ex);
            out.ey.push(v.ey);
            out.ez.push(v.ez);
        }
        out
    }

    fn count_nodes(&self) -> usize {
        let k0 = self.k0();
        let mut nodes = 0;
        let mut last = 0.0f64;
        for p in self.pieces.iter().filter(|p| p.extent == Extent::Film) {
            let q2 = p.index * p.index - self.n_eff * self.n_eff;
            let phase = q2.max(0.0).sqrt() * k0 * (p.end - p.start);
            let samples = ((phase / PI) * 32.0).ceil().max(64.0) as usize;
            for i in 0..=samples {
                let z = p.start + (p.end - p.start) * i as f64 / samples as f64;
                let v = self.eval_piece(p, z).principal;
                if v != 0.0 {
                    if last != 0.0 && v.signum() != last.signum() {
                        nodes += 1;
                    }
                    last = v;
                }
            }
        }
        nodes
    }

    fn intensity_density(&self, p: &Piece, z: f64) -> f64 {
        self.eval_piece(p, z).intensity()
    }

    fn raw_intensity(&self, z0: f64, z1: f64) -> f64 {
        let mut total = 0.0;
        for p in &self.pieces {
            let a = z0.max(p.start);
            let b = z1.min(p.end);
            if !(a < b) {
                continue;
            }
            total += match p.extent {
                Extent::Film => quad::integrate(|z| self.intensity_density(p, z), a, b, QUAD_TOL),
                Extent::Top | Extent::Bottom => self.tail_integral(p, a, b),
            };
        }
        total
    }

    /// Exact integral of |E|² over part of a cladding, where the principal
    /// field is a single exponential.
    fn tail_integral(&self, p: &Piece, a: f64, b: f64) -> f64 {
        let (g, sign) = match p.extent {
            Extent::Top => (self.decay_top, 1.0),
            _ => (self.decay_bottom, -1.0),
        };
        let scale = match self.polarization {
            Polarization::TE => 1.0,
            Polarization::TM => {
                let eps = p.index * p.index;
                let k0 = self.k0();
                ((g / k0).powi(2) + self.n_eff * self.n_eff) / (eps * eps)
            }
        };
        let e = |z: f64| (2.0 * sign * g * (z - p.anchor)).exp();
        let span = if sign > 0.0 { e(b) - e(a) } else { e(a) - e(b) };
        p.field * p.field * scale * span / (2.0 * g)
    }

    /// Weighted overlap `∫ F_a F_b / w dz` of the principal fields, the
    /// quantity that vanishes between distinct modes of one stack.
    fn principal_overlap(&self, other: &ModeSolution1D) -> f64 {
        let mut total = 0.0;
        for (pa, pb) in self.pieces.iter().zip(&other.pieces) {
            let w = weight(self.polarization, pa.index);
            total += match pa.extent {
                Extent::Film => {
                    quad::integrate(
                        |z| self.eval_piece(pa, z).principal * other.eval_piece(pb, z).principal,
                        pa.start,
                        pa.end,
                        QUAD_TOL,
                    ) / w
                }
                Extent::Top => pa.field * pb.field / (self.decay_top + other.decay_top) / w,
                Extent::Bottom => pa.field * pb.field / (self.decay_bottom + other.decay_bottom) / w,
            };
        }
        total
    }
}

/// `∫ |E|² dz` of a normalized mode between `z0` and `z1` (either may be infinite).
pub fn region_intensity(mode: &ModeSolution1D, z0: f64, z1: f64) -> f64 {
    if !(z0 < z1) {
        return 0.0;
    }
    mode.raw_intensity(z0, z1)
}

/// Normalized overlap of two modes' principal fields (0 for distinct modes
/// of the same stack and polarization, 1 for a mode with itself).
pub fn mode_overlap(a: &ModeSolution1D, b: &ModeSolution1D) -> Result<f64> {
    if a.polarization != b.polarization || a.stack != b.stack || a.wavelength != b.wavelength {
        return Err(Error::InvalidInput("overlap needs modes of one stack, wavelength and polarization".into()));
    }
    let ab = a.principal_overlap(b);
    Ok(ab / (a.principal_overlap(a) * b.principal_overlap(b)).sqrt())
}

/// Fundamental (highest n_eff) guided mode.
pub fn fundamental_mode(stack: &LayerStack, wavelength: f64, pol: Polarization) -> Result<ModeSolution1D> {
    find_guided_modes(stack, wavelength, pol)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::NoGuidedMode(format!("{pol} stack has no guided mode")))
}

/// RMS field ratio between the top `window` of the substrate and the
/// membrane layer, for the fundamental mode.
pub fn penetration_ratio(stack: &LayerStack, wavelength: f64, pol: Polarization, window: f64) -> Result<f64> {
    let stack = normalize_stack(stack)?;
    let membrane = stack.find_film(MEMBRANE)?;
    let mode = fundamental_mode(&stack, wavelength, pol)?;
    Ok(ratio_for_mode(&mode, membrane, window))
}

fn ratio_for_mode(mode: &ModeSolution1D, membrane: usize, window: f64) -> f64 {
    let z = mode.stack.interfaces();
    let in_membrane = region_intensity(mode, z[membrane - 1], z[membrane]);
    let substrate_top = *z.last().unwrap();
    let in_window = region_intensity(mode, substrate_top, substrate_top + window.max(0.0));
    (in_window / in_membrane).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioCurve {
    pub polarization: Polarization,
    pub gap: f64,
    /// (membrane thickness, R), thickness increasing.
    pub points: Vec<(f64, f64)>,
    /// Thicknesses that could not be evaluated.
    pub failures: Vec<(f64, Error)>,
}

/// Penetration ratio versus membrane thickness at a fixed air gap.
pub fn ratio_curve(
    template: &MembraneStack,
    thicknesses: &[f64],
    gap: f64,
    wavelength: f64,
    pol: Polarization,
    window: f64,
) -> Result<RatioCurve> {
    if thicknesses.is_empty() {
        return Err(Error::InvalidInput("thickness list is empty".into()));
    }
    let mut sorted = thicknesses.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let results: Vec<(f64, Result<f64>)> = sorted
        .par_iter()
        .map(|&t| (t, template.build(t, gap).and_then(|s| penetration_ratio(&s, wavelength, pol, window))))
        .collect();
    let mut curve = RatioCurve { polarization: pol, gap, points: Vec::new(), failures: Vec::new() };
    for (t, r) in results {
        match r {
            Ok(r) => curve.points.push((t, r)),
            Err(e) => curve.failures.push((t, e)),
        }
    }
    Ok(curve)
}
