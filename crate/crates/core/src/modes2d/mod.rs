//! Semivectorial finite-difference modes of 2-D waveguide cross-sections.
//!
//! The dominant transverse field (`Ex` for quasi-TE, `Ey` for quasi-TM) is
//! discretized on a cell-centered grid with Dirichlet walls. Along the axis
//! normal to the dominant field the operator takes the flux form
//! `∂[(1/ε)∂(εE)]`; along the other axis it is a plain Laplacian. Cells cut by
//! a material edge get anisotropic subpixel averages of ε (arithmetic along
//! the field-parallel direction, harmonic across it).
//!
//! The fundamental mode is found by shifted inverse iteration with a band LU
//! of `A − σ`, with σ placed just above the best 1-D slab index over the
//! vertical slices of the section.

mod banded;
mod eim;
mod geometry;

use std::f64::consts::PI;
use std::io::Write;
use std::sync::{Condvar, Mutex, OnceLock};

pub use banded::{BandLu, BandMatrix};
pub use eim::effective_index_method;
pub use geometry::{CrossSection, Domain, Rect, RibWaveguide, RingSection};

use crate::error::{invalid, Error, Result};
use crate::slab;
use crate::stack::Polarization;

/// Subsamples per axis on cells cut by an edge.
const SUBPIXEL: usize = 16;
/// Offset of the inverse-iteration shift above the slab estimate of n_eff².
const SHIFT_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Residual `‖(A − λ)ψ‖` for unit `ψ`, in k0-normalized units.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tolerance: 1e-9, max_iterations: 1000 }
    }
}

/// Uniform cell-centered grid. Cell `(i, j)` has center
/// `(x0 + (i + ½)·hx, y0 + (j + ½)·hy)` and flat index `i·ny + j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub hx: f64,
    pub hy: f64,
}

impl Grid {
    pub fn for_section(cs: &CrossSection) -> Result<Self> {
        cs.validate()?;
        let d = cs.domain;
        let nx = (d.width() / cs.pitch).round().max(2.0) as usize;
        let ny = (d.height() / cs.pitch).round().max(2.0) as usize;
        Ok(Self { nx, ny, x0: d.x0, y0: d.y0, hx: d.width() / nx as f64, hy: d.height() / ny as f64 })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + (i as f64 + 0.5) * self.hx
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y0 + (j as f64 + 0.5) * self.hy
    }

    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    pub fn at(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let x1 = self.x0 + self.nx as f64 * self.hx;
        let y1 = self.y0 + self.ny as f64 * self.hy;
        x >= self.x0 && x <= x1 && y >= self.y0 && y <= y1
    }
}

/// Per-cell permittivities of a section on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PermittivityMap {
    pub grid: Grid,
    /// Volume average of ε over each cell.
    pub mean: Vec<f64>,
    /// Quasi-TE operator values: arithmetic along y, then harmonic along x.
    pub te: Vec<f64>,
    /// Quasi-TM operator values: arithmetic along x, then harmonic along y.
    pub tm: Vec<f64>,
}

impl PermittivityMap {
    pub fn new(cs: &CrossSection) -> Result<Self> {
        let grid = Grid::for_section(cs)?;
        let cut = cut_cells(cs, &grid);
        let n = grid.len();
        let (mut mean, mut te, mut tm) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let m = SUBPIXEL;
        let mut samples = vec![0.0; m * m];
        for i in 0..grid.nx {
            for j in 0..grid.ny {
                let k = grid.at(i, j);
                if !cut[k] {
                    let e = cs.index_at(grid.x(i), grid.y(j)).powi(2);
                    (mean[k], te[k], tm[k]) = (e, e, e);
                    continue;
                }
                let xa = grid.x0 + i as f64 * grid.hx;
                let ya = grid.y0 + j as f64 * grid.hy;
                for a in 0..m {
                    let x = xa + (a as f64 + 0.5) / m as f64 * grid.hx;
                    for b in 0..m {
                        let y = ya + (b as f64 + 0.5) / m as f64 * grid.hy;
                        samples[a * m + b] = cs.index_at(x, y).powi(2);
                    }
                }
                let mf = m as f64;
                mean[k] = samples.iter().sum::<f64>() / (mf * mf);
                let inv_te: f64 = (0..m).map(|a| mf / samples[a * m..(a + 1) * m].iter().sum::<f64>()).sum();
                te[k] = mf / inv_te;
                let inv_tm: f64 = (0..m).map(|b| mf / (0..m).map(|a| samples[a * m + b]).sum::<f64>()).sum();
                tm[k] = mf / inv_tm;
            }
        }
        Ok(Self { grid, mean, te, tm })
    }

    fn operator(&self, pol: Polarization) -> &[f64] {
        match pol {
            Polarization::TE => &self.te,
            Polarization::TM => &self.tm,
        }
    }
}

/// Marks cells crossed strictly inside by a rectangle edge.
fn cut_cells(cs: &CrossSection, grid: &Grid) -> Vec<bool> {
    let mut cut = vec![false; grid.len()];
    let span = |lo: f64, hi: f64, origin: f64, h: f64, n: usize| -> (usize, usize) {
        let a = ((lo - origin) / h).floor().max(0.0) as usize;
        let b = (((hi - origin) / h).ceil().max(0.0) as usize).min(n);
        (a.min(n), b)
    };
    let inside = |e: f64, origin: f64, h: f64, n: usize| -> Option<usize> {
        let f = (e - origin) / h;
        let r = f.round();
        if (f - r).abs() < 1e-9 || f <= 0.0 || f >= n as f64 {
            None
        } else {
            Some(f.floor() as usize)
        }
    };
    for r in &cs.rects {
        let (ja, jb) = span(r.y0, r.y1, grid.y0, grid.hy, grid.ny);
        for e in [r.x0, r.x1] {
            if let Some(i) = inside(e, grid.x0, grid.hx, grid.nx) {
                for j in ja..jb {
                    cut[grid.at(i, j)] = true;
                }
            }
        }
        let (ia, ib) = span(r.x0, r.x1, grid.x0, grid.hx, grid.nx);
        for e in [r.y0, r.y1] {
            if let Some(j) = inside(e, grid.y0, grid.hy, grid.ny) {
                for i in ia..ib {
                    cut[grid.at(i, j)] = true;
                }
            }
        }
    }
    cut
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Guidance {
    Guided,
    /// n_eff does not exceed the best cladding continuum.
    Unguided,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSolution2D {
    pub n_eff: f64,
    pub polarization: Polarization,
    pub wavelength: f64,
    pub guidance: Guidance,
    /// Highest index a radiating or slab-guided continuum can reach.
    pub cladding_bound: f64,
    pub grid: Grid,
    /// Dominant transverse field, normalized so `Σ|E|²·dA = 1` (1/m).
    pub principal: Vec<f64>,
    /// `|E|²` per cell (1/m²).
    pub intensity: Vec<f64>,
    /// Cell-averaged ε.
    pub eps: Vec<f64>,
    pub shift: f64,
    pub iterations: usize,
    /// Final `‖(A − n_eff²)ψ‖/‖ψ‖` in k0-normalized units.
    pub residual: f64,
}

/// Fundamental quasi-TE or quasi-TM mode of a cross-section.
pub fn solve_fundamental_2d(cs: &CrossSection, wavelength: f64, pol: Polarization) -> Result<ModeSolution2D> {
    solve_fundamental_2d_with(cs, wavelength, pol, &SolveOptions::default())
}

pub fn solve_fundamental_2d_with(
    cs: &CrossSection,
    wavelength: f64,
    pol: Polarization,
    opts: &SolveOptions,
) -> Result<ModeSolution2D> {
    if !(wavelength > 0.0) || !wavelength.is_finite() {
        return Err(invalid(format!("wavelength must be positive, got {wavelength}")));
    }
    let eps = PermittivityMap::new(cs)?;
    let grid = eps.grid;
    let (n_upper, bound) = slab_bounds(cs, &grid, wavelength, pol)?;
    let shift = n_upper * n_upper + SHIFT_MARGIN;

    let k0 = 2.0 * PI / wavelength;
    let stencil = Stencil::new(&grid, eps.operator(pol), pol, k0);
    let _permit = MemoryPermit::acquire(BandMatrix::storage_bytes(grid.len(), stencil.bandwidth()));
    let lu = stencil.band(shift).factorize()?;

    let mut x: Vec<f64> = eps.mean.clone();
    normalize(&mut x);
    let mut ax = vec![0.0; x.len()];
    let mut lambda = shift;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        lu.solve_in_place(&mut x);
        normalize(&mut x);
        stencil.apply(&x, &mut ax);
        lambda = dot(&x, &ax);
        residual = ax.iter().zip(&x).map(|(a, v)| (a - lambda * v).powi(2)).sum::<f64>().sqrt();
        if residual < opts.tolerance {
            break;
        }
    }
    if !(residual < opts.tolerance) {
        return Err(Error::NotConverged { iterations, residual });
    }

    let n_eff = lambda.max(0.0).sqrt();
    let x = stencil.to_grid_order(&x);
    let peak = x.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
    let power: f64 = x.iter().map(|v| v * v).sum::<f64>() * grid.cell_area();
    let scale = peak.signum() / power.sqrt();
    let principal: Vec<f64> = x.iter().map(|v| v * scale).collect();
    let intensity = principal.iter().map(|v| v * v).collect();
    Ok(ModeSolution2D {
        n_eff,
        polarization: pol,
        wavelength,
        guidance: if n_eff > bound { Guidance::Guided } else { Guidance::Unguided },
        cladding_bound: bound,
        grid,
        principal,
        intensity,
        eps: eps.mean,
        shift,
        iterations,
        residual,
    })
}

/// Upper slab estimate of n_eff over the vertical slices, and the cladding
/// bound from the domain walls.
fn slab_bounds(cs: &CrossSection, grid: &Grid, wavelength: f64, pol: Polarization) -> Result<(f64, f64)> {
    let slab_neff = |x: f64| -> Result<Option<f64>> {
        let stack = cs.vertical_stack(x)?;
        Ok(slab::find_guided_modes(&stack, wavelength, pol)?.first().map(|m| m.n_eff))
    };
    let xs = cs.x_breaks();
    let mut upper = f64::NEG_INFINITY;
    for w in xs.windows(2) {
        if let Some(n) = slab_neff(0.5 * (w[0] + w[1]))? {
            upper = upper.max(n);
        }
    }
    if !upper.is_finite() {
        upper = cs.max_index();
    }
    let row_max = |j: usize| (0..grid.nx).map(|i| cs.index_at(grid.x(i), grid.y(j))).fold(1.0, f64::max);
    let mut bound = row_max(0).max(row_max(grid.ny - 1));
    for x in [grid.x(0), grid.x(grid.nx - 1)] {
        if let Some(n) = slab_neff(x)? {
            bound = bound.max(n);
        }
    }
    Ok((upper, bound))
}

/// Five-point operator with unknowns ordered along the shorter grid axis
/// fastest, which keeps the bandwidth at `min(nx, ny)`.
struct Stencil {
    grid: Grid,
    x_fast: bool,
    diag: Vec<f64>,
    /// Couplings to (−x, +x, −y, +y) neighbours, per cell in grid order.
    off: Vec<[f64; 4]>,
}

impl Stencil {
    fn new(grid: &Grid, eps: &[f64], pol: Polarization, k0: f64) -> Self {
        let (nx, ny) = (grid.nx, grid.ny);
        let hx2 = (k0 * grid.hx).powi(2);
        let hy2 = (k0 * grid.hy).powi(2);
        let mut diag = vec![0.0; grid.len()];
        let mut off = vec![[0.0; 4]; grid.len()];
        for i in 0..nx {
            for j in 0..ny {
                let k = grid.at(i, j);
                let ec = eps[k];
                let mut d = ec;
                let neighbours = [
                    (i > 0).then(|| grid.at(i - 1, j)),
                    (i + 1 < nx).then(|| grid.at(i + 1, j)),
                    (j > 0).then(|| grid.at(i, j - 1)),
                    (j + 1 < ny).then(|| grid.at(i, j + 1)),
                ];
                for (slot, nb) in neighbours.into_iter().enumerate() {
                    let along_x = slot < 2;
                    let h2 = if along_x { hx2 } else { hy2 };
                    let flux = along_x == (pol == Polarization::TE);
                    // walls: antisymmetric ghost cell, so E vanishes on the domain edge
                    match (flux, nb) {
                        (true, Some(n)) => {
                            let a = 2.0 / (ec + eps[n]);
                            d -= a * ec / h2;
                            off[k][slot] = a * eps[n] / h2;
                        }
                        (false, Some(_)) => {
                            d -= 1.0 / h2;
                            off[k][slot] = 1.0 / h2;
                        }
                        (_, None) => d -= 2.0 / h2,
                    }
                }
                diag[k] = d;
            }
        }
        Self { grid: *grid, x_fast: nx < ny, diag, off }
    }

    fn bandwidth(&self) -> usize {
        if self.x_fast {
            self.grid.nx
        } else {
            self.grid.ny
        }
    }

    /// Position of grid cell `(i, j)` in the solver ordering.
    fn order(&self, i: usize, j: usize) -> usize {
        if self.x_fast {
            j * self.grid.nx + i
        } else {
            i * self.grid.ny + j
        }
    }

    fn band(&self, shift: f64) -> BandMatrix {
        let g = &self.grid;
        let mut m = BandMatrix::zeros(g.len(), self.bandwidth());
        for i in 0..g.nx {
            for j in 0..g.ny {
                let k = g.at(i, j);
                let r = self.order(i, j);
                m.set(r, r, self.diag[k] - shift);
                let c = &self.off[k];
                if i > 0 {
                    m.set(r, self.order(i - 1, j), c[0]);
                }
                if i + 1 < g.nx {
                    m.set(r, self.order(i + 1, j), c[1]);
                }
                if j > 0 {
                    m.set(r, self.order(i, j - 1), c[2]);
                }
                if j + 1 < g.ny {
                    m.set(r, self.order(i, j + 1), c[3]);
                }
            }
        }
        m
    }

    /// `out = A·v` with both vectors in solver ordering.
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let g = &self.grid;
        for i in 0..g.nx {
            for j in 0..g.ny {
                let k = g.at(i, j);
                let r = self.order(i, j);
                let c = &self.off[k];
                let mut s = self.diag[k] * v[r];
                if i > 0 {
                    s += c[0] * v[self.order(i - 1, j)];
                }
                if i + 1 < g.nx {
                    s += c[1] * v[self.order(i + 1, j)];
                }
                if j > 0 {
                    s += c[2] * v[self.order(i, j - 1)];
                }
                if j + 1 < g.ny {
                    s += c[3] * v[self.order(i, j + 1)];
                }
                out[r] = s;
            }
        }
    }

    fn to_grid_order(&self, v: &[f64]) -> Vec<f64> {
        if !self.x_fast {
            return v.to_vec();
        }
        let g = &self.grid;
        let mut out = vec![0.0; g.len()];
        for i in 0..g.nx {
            for j in 0..g.ny {
                out[g.at(i, j)] = v[self.order(i, j)];
            }
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Caps the band storage held by concurrent solves. The budget comes from
/// `GAPNV_MEMORY_MB` (default 3072); a single solve larger than the budget
/// still runs, alone.
struct MemoryPermit {
    bytes: usize,
}

fn memory_state() -> &'static (Mutex<usize>, Condvar) {
    static STATE: OnceLock<(Mutex<usize>, Condvar)> = OnceLock::new();
    STATE.get_or_init(|| (Mutex::new(0), Condvar::new()))
}

fn memory_budget() -> usize {
    static BUDGET: OnceLock<usize> = OnceLock::new();
    *BUDGET.get_or_init(|| {
        std::env::var("GAPNV_MEMORY_MB").ok().and_then(|v| v.trim().parse::<usize>().ok()).unwrap_or(3072) << 20
    })
}

impl MemoryPermit {
    fn acquire(bytes: usize) -> Self {
        let (lock, cv) = memory_state();
        let mut used = lock.lock().unwrap_or_else(|e| e.into_inner());
        while *used > 0 && *used + bytes > memory_budget() {
            used = cv.wait(used).unwrap_or_else(|e| e.into_inner());
        }
        *used += bytes;
        Self { bytes }
    }
}

impl Drop for MemoryPermit {
    fn drop(&mut self) {
        let (lock, cv) = memory_state();
        let mut used = lock.lock().unwrap_or_else(|e| e.into_inner());
        *used -= self.bytes;
        cv.notify_all();
    }
}

impl ModeSolution2D {
    pub fn is_guided(&self) -> bool {
        self.guidance == Guidance::Guided
    }

    /// Cell index of the maximum of ε|E|² (first in grid order on ties).
    pub fn peak_cell(&self) -> usize {
        let mut best = 0;
        let mut value = f64::NEG_INFINITY;
        for (k, (e, i)) in self.eps.iter().zip(&self.intensity).enumerate() {
            if e * i > value {
                value = e * i;
                best = k;
            }
        }
        best
    }

    /// Position of [`Self::peak_cell`].
    pub fn peak_position(&self) -> (f64, f64) {
        let k = self.peak_cell();
        (self.grid.x(k / self.grid.ny), self.grid.y(k % self.grid.ny))
    }

    pub fn peak_eps(&self) -> f64 {
        self.eps[self.peak_cell()]
    }

    pub fn peak_intensity(&self) -> f64 {
        self.intensity[self.peak_cell()]
    }

    /// `Σ ε|E|² dA` over the grid.
    pub fn weighted_power(&self) -> f64 {
        dot(&self.eps, &self.intensity) * self.grid.cell_area()
    }

    /// Bilinear interpolation of the dominant field, vanishing on the walls.
    pub fn field_at(&self, x: f64, y: f64) -> Result<f64> {
        let g = &self.grid;
        if !g.contains(x, y) || !x.is_finite() || !y.is_finite() {
            return Err(invalid(format!("point ({x:e}, {y:e}) m lies outside the grid")));
        }
        let fx = (x - g.x0) / g.hx - 0.5;
        let fy = (y - g.y0) / g.hy - 0.5;
        let (i0, j0) = (fx.floor(), fy.floor());
        let (tx, ty) = (fx - i0, fy - j0);
        let value = |i: f64, j: f64| -> f64 {
            let mut sign = 1.0;
            let mut cell = [i, j];
            for (c, n) in cell.iter_mut().zip([g.nx as f64, g.ny as f64]) {
                if *c < 0.0 {
                    *c = 0.0;
                    sign = -sign;
                } else if *c >= n {
                    *c = n - 1.0;
                    sign = -sign;
                }
            }
            sign * self.principal[g.at(cell[0] as usize, cell[1] as usize)]
        };
        Ok((1.0 - tx) * (1.0 - ty) * value(i0, j0)
            + tx * (1.0 - ty) * value(i0 + 1.0, j0)
            + (1.0 - tx) * ty * value(i0, j0 + 1.0)
            + tx * ty * value(i0 + 1.0, j0 + 1.0))
    }

    pub fn intensity_at(&self, x: f64, y: f64) -> Result<f64> {
        Ok(self.field_at(x, y)?.powi(2))
    }

    /// Largest relative difference between `|E|²` and its mirror image in `x`.
    pub fn mirror_asymmetry(&self) -> f64 {
        let g = &self.grid;
        let peak = self.intensity.iter().copied().fold(0.0, f64::max);
        let mut worst = 0.0f64;
        for i in 0..g.nx {
            for j in 0..g.ny {
                let d = self.intensity[g.at(i, j)] - self.intensity[g.at(g.nx - 1 - i, j)];
                worst = worst.max(d.abs() / peak);
            }
        }
        worst
    }

    /// `x, y, |E|²` rows (nm, nm, 1/m²), `x` outer.
    pub fn write_field_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(out);
        writeln!(w, "x_nm,y_nm,intensity")?;
        let g = &self.grid;
        for i in 0..g.nx {
            for j in 0..g.ny {
                writeln!(w, "{:.3},{:.3},{:.9e}", g.x(i) * 1e9, g.y(j) * 1e9, self.intensity[g.at(i, j)])?;
            }
        }
        w.flush()
    }
}

/// `∬ ε|E|² dA / max(ε|E|²)`, in m².
pub fn effective_area(mode: &ModeSolution2D) -> f64 {
    let peak = mode.peak_eps() * mode.peak_intensity();
    mode.weighted_power() / peak
}

/// `|E(point)|² / |E(r_max)|²`, where `r_max` maximizes ε|E|².
pub fn field_ratio_at_point(mode: &ModeSolution2D, x: f64, y: f64) -> Result<f64> {
    Ok(mode.intensity_at(x, y)? / mode.peak_intensity())
}

/// Emitter site `depth` below the surface at `surface_y`: the position along
/// that row, restricted to material of index `host_index`, where `|E|²` is
/// largest. Candidates are cell centers and cell edges.
pub fn nv_point(
    mode: &ModeSolution2D,
    cs: &CrossSection,
    surface_y: f64,
    depth: f64,
    host_index: f64,
) -> Result<(f64, f64)> {
    let y = surface_y - depth;
    let g = &mode.grid;
    let mut best: Option<(f64, f64)> = None;
    for k in 1..2 * g.nx {
        let x = g.x0 + k as f64 * 0.5 * g.hx;
        if cs.index_at(x, y) != host_index {
            continue;
        }
        let v = mode.intensity_at(x, y)?;
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((x, v));
        }
    }
    best.map(|(x, _)| (x, y))
        .ok_or_else(|| invalid(format!("no host material (n = {host_index}) at depth {depth:e} m")))
}

/// Traveling-wave ring volume from a cross-section mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingVolume {
    /// Cubic meters.
    pub volume: f64,
    /// Index at the ε|E|² maximum, defining the reduced unit.
    pub n_peak: f64,
    /// In units of `(λ/n_peak)³`.
    pub reduced: f64,
}

pub fn ring_mode_volume(mode: &ModeSolution2D, diameter: f64) -> Result<RingVolume> {
    if !(diameter > 0.0) || !diameter.is_finite() {
        return Err(invalid(format!("ring diameter must be positive, got {diameter}")));
    }
    let volume = effective_area(mode) * PI * diameter;
    let n_peak = mode.peak_eps().sqrt();
    Ok(RingVolume { volume, n_peak, reduced: volume / (mode.wavelength / n_peak).powi(3) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::nm;

    const LAMBDA: f64 = 637e-9;

    #[test]
    fn subpixel_average_of_half_cell() {
        let d = Domain { x0: 0.0, x1: 4.0, y0: 0.0, y1: 4.0 };
        let cs = CrossSection::new(1.0, vec![Rect::new(0.0, 1.5, 0.0, 4.0, 2.0)], d, 1.0).unwrap();
        let e = PermittivityMap::new(&cs).unwrap();
        let k = e.grid.at(1, 2);
        assert!((e.mean[k] - 2.5).abs() < 1e-12);
        // layers stacked along x: harmonic for TE, arithmetic for TM
        assert!((e.te[k] - 1.6).abs() < 1e-12);
        assert!((e.tm[k] - 2.5).abs() < 1e-12);
        assert_eq!(e.mean[e.grid.at(0, 0)], 4.0);
        assert_eq!(e.mean[e.grid.at(3, 0)], 1.0);
    }

    #[test]
    fn aligned_edges_are_not_averaged() {
        let d = Domain { x0: 0.0, x1: 4.0, y0: 0.0, y1: 4.0 };
        let cs = CrossSection::new(1.0, vec![Rect::new(0.0, 2.0, 0.0, 4.0, 2.0)], d, 1.0).unwrap();
        assert!(cut_cells(&cs, &Grid::for_section(&cs).unwrap()).iter().all(|c| !c));
    }

    #[test]
    fn uniform_box_is_unguided_and_below_background() {
        let d = Domain { x0: 0.0, x1: nm(800.0), y0: 0.0, y1: nm(600.0) };
        let cs = CrossSection::new(1.5, vec![], d, nm(20.0)).unwrap();
        let m = solve_fundamental_2d(&cs, LAMBDA, Polarization::TE).unwrap();
        assert!(m.n_eff < 1.5);
        assert_eq!(m.guidance, Guidance::Unguided);
        // continuum box mode n² − (π/k0Lx)² − (π/k0Ly)², up to discretization error
        let k0 = 2.0 * PI / LAMBDA;
        let exact = 2.25 - (PI / (k0 * nm(800.0))).powi(2) - (PI / (k0 * nm(600.0))).powi(2);
        assert!((m.n_eff.powi(2) - exact).abs() < 2e-3, "{} vs {exact}", m.n_eff.powi(2));
    }

    #[test]
    fn normalized_power_and_peak() {
        let cs = RingSection { padding: nm(600.0), ..Default::default() }.cross_section(nm(20.0)).unwrap();
        let m = solve_fundamental_2d(&cs, LAMBDA, Polarization::TE).unwrap();
        let total: f64 = m.intensity.iter().sum::<f64>() * m.grid.cell_area();
        assert!((total - 1.0).abs() < 1e-12);
        let (x, y) = m.peak_position();
        assert!((field_ratio_at_point(&m, x, y).unwrap() - 1.0).abs() < 1e-12);
        assert!(field_ratio_at_point(&m, cs.domain.x1 + 1e-9, 0.0).is_err());
        assert!(m.residual < 1e-6);
    }

    #[test]
    fn effective_area_of_flat_field() {
        let cs = RingSection { padding: nm(600.0), ..Default::default() }.cross_section(nm(20.0)).unwrap();
        let mut m = solve_fundamental_2d(&cs, LAMBDA, Polarization::TE).unwrap();
        m.intensity.iter_mut().for_each(|v| *v = 3.0);
        m.eps.iter_mut().for_each(|v| *v = 2.0);
        let area = cs.domain.width() * cs.domain.height();
        assert!((effective_area(&m) - area).abs() < 1e-9 * area);
    }
}
