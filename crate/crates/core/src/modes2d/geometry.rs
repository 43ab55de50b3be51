//! Cross-sections built from axis-aligned rectangles.
//!
//! `x` is horizontal and `y` vertical, pointing up out of the substrate. The
//! GaP/diamond interface of the builders sits at `y = 0`.

use crate::error::{invalid, Result};
use crate::stack::{Layer, LayerStack, N_AIR, N_DIAMOND, N_GAP};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub index: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64, index: f64) -> Self {
        Self { x0, x1, y0, y1, index }
    }

    /// Half-open containment, `[x0, x1) × [y0, y1)`.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Domain {
    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

/// Refractive-index map: a background plus rectangles painted in order, so
/// later rectangles win on overlap.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSection {
    pub background: f64,
    pub rects: Vec<Rect>,
    pub domain: Domain,
    pub pitch: f64,
}

impl CrossSection {
    pub fn new(background: f64, rects: Vec<Rect>, domain: Domain, pitch: f64) -> Result<Self> {
        let cs = Self { background, rects, domain, pitch };
        cs.validate()?;
        Ok(cs)
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.domain;
        if !(d.x1 > d.x0) || !(d.y1 > d.y0) || !d.width().is_finite() || !d.height().is_finite() {
            return Err(invalid("domain must have positive finite extent"));
        }
        if !(self.pitch > 0.0) || !self.pitch.is_finite() {
            return Err(invalid(format!("grid pitch must be positive, got {}", self.pitch)));
        }
        if self.pitch > d.width().min(d.height()) / 2.0 {
            return Err(invalid("grid pitch leaves fewer than two cells across the domain"));
        }
        if !(self.background >= 1.0) {
            return Err(invalid(format!("background index must be >= 1, got {}", self.background)));
        }
        let slack = 1e-9 * d.width().max(d.height());
        for (k, r) in self.rects.iter().enumerate() {
            if !(r.index >= 1.0) || !r.index.is_finite() {
                return Err(invalid(format!("rectangle {k} has index {}", r.index)));
            }
            if !(r.x1 > r.x0) || !(r.y1 > r.y0) {
                return Err(invalid(format!("rectangle {k} is empty or inverted")));
            }
            if r.x0 < d.x0 - slack || r.x1 > d.x1 + slack || r.y0 < d.y0 - slack || r.y1 > d.y1 + slack {
                return Err(invalid(format!("rectangle {k} extends outside the domain")));
            }
        }
        Ok(())
    }

    pub fn index_at(&self, x: f64, y: f64) -> f64 {
        self.rects.iter().rev().find(|r| r.contains(x, y)).map_or(self.background, |r| r.index)
    }

    pub fn max_index(&self) -> f64 {
        self.rects.iter().map(|r| r.index).fold(self.background, f64::max)
    }

    /// Same geometry at a different grid pitch.
    pub fn with_pitch(&self, pitch: f64) -> Self {
        Self { pitch, ..self.clone() }
    }

    /// Sorted, deduplicated x positions of rectangle edges strictly inside
    /// the domain, bracketed by the domain edges.
    pub(crate) fn x_breaks(&self) -> Vec<f64> {
        breaks(self.domain.x0, self.domain.x1, self.rects.iter().flat_map(|r| [r.x0, r.x1]))
    }

    /// Vertical 1-D stack through `x`, top (largest `y`) first. The layers at
    /// the top and bottom of the domain extend to infinity.
    pub fn vertical_stack(&self, x: f64) -> Result<LayerStack> {
        let ys = breaks(
            self.domain.y0,
            self.domain.y1,
            self.rects.iter().filter(|r| x >= r.x0 && x < r.x1).flat_map(|r| [r.y0, r.y1]),
        );
        let mut layers = Vec::with_capacity(ys.len());
        let n = ys.len() - 1;
        for k in (0..n).rev() {
            let index = self.index_at(x, 0.5 * (ys[k] + ys[k + 1]));
            let name = format!("y{k}");
            if k == n - 1 || k == 0 {
                layers.push(Layer::cladding(name, index));
            } else {
                layers.push(Layer::film(name, index, ys[k + 1] - ys[k]));
            }
        }
        if layers.len() == 1 {
            layers.push(layers[0].clone());
        }
        LayerStack::new(layers)
    }
}

fn breaks(lo: f64, hi: f64, edges: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = edges.filter(|&e| e > lo && e < hi).collect();
    v.push(lo);
    v.push(hi);
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Rib waveguide: a GaP slab of `total_thickness` on diamond, thinned by
/// `etch_depth` outside a central ridge of width `width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RibWaveguide {
    pub width: f64,
    pub total_thickness: f64,
    pub etch_depth: f64,
    pub n_core: f64,
    pub n_substrate: f64,
    pub n_cover: f64,
    /// Cladding kept on each side of the guiding structure.
    pub padding: f64,
    pub lateral_half_span: f64,
}

impl Default for RibWaveguide {
    fn default() -> Self {
        Self {
            width: 1e-6,
            total_thickness: 120e-9,
            etch_depth: 50e-9,
            n_core: N_GAP,
            n_substrate: N_DIAMOND,
            n_cover: N_AIR,
            padding: 1e-6,
            lateral_half_span: 1.5e-6,
        }
    }
}

impl RibWaveguide {
    pub fn cross_section(&self, pitch: f64) -> Result<CrossSection> {
        if !(self.etch_depth >= 0.0 && self.etch_depth <= self.total_thickness) {
            return Err(invalid("etch depth must lie between 0 and the film thickness"));
        }
        if !(self.lateral_half_span > self.width / 2.0) {
            return Err(invalid("lateral span must exceed the ridge half-width"));
        }
        let t = self.total_thickness;
        let slab = t - self.etch_depth;
        let domain =
            Domain { x0: -self.lateral_half_span, x1: self.lateral_half_span, y0: -self.padding, y1: t + self.padding };
        let mut rects = vec![Rect::new(domain.x0, domain.x1, domain.y0, 0.0, self.n_substrate)];
        if slab > 0.0 {
            rects.push(Rect::new(domain.x0, domain.x1, 0.0, slab, self.n_core));
        }
        if self.etch_depth > 0.0 {
            rects.push(Rect::new(-self.width / 2.0, self.width / 2.0, slab, t, self.n_core));
        }
        CrossSection::new(self.n_cover, rects, domain, pitch)
    }
}

/// Ring cross-section: a GaP strip on a diamond pedestal etched into the
/// substrate, with an optional air gap between strip and pedestal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingSection {
    pub width: f64,
    pub thickness: f64,
    pub pedestal_depth: f64,
    pub pedestal_width: f64,
    pub gap: f64,
    pub n_core: f64,
    pub n_substrate: f64,
    pub n_cover: f64,
    pub padding: f64,
}

impl Default for RingSection {
    fn default() -> Self {
        Self {
            width: 300e-9,
            thickness: 120e-9,
            pedestal_depth: 120e-9,
            pedestal_width: 300e-9,
            gap: 0.0,
            n_core: N_GAP,
            n_substrate: N_DIAMOND,
            n_cover: N_AIR,
            padding: 1e-6,
        }
    }
}

impl RingSection {
    /// `y` of the diamond surface under the strip.
    pub const DIAMOND_SURFACE: f64 = 0.0;

    pub fn cross_section(&self, pitch: f64) -> Result<CrossSection> {
        for (name, v) in [("width", self.width), ("thickness", self.thickness), ("pedestal width", self.pedestal_width)]
        {
            if !(v > 0.0) {
                return Err(invalid(format!("ring {name} must be positive, got {v}")));
            }
        }
        if !(self.pedestal_depth >= 0.0) || !(self.gap >= 0.0) {
            return Err(invalid("pedestal depth and gap must be >= 0"));
        }
        let half = 0.5 * self.width.max(self.pedestal_width) + self.padding;
        let top = self.gap + self.thickness;
        let domain = Domain { x0: -half, x1: half, y0: -self.pedestal_depth - self.padding, y1: top + self.padding };
        let mut rects = vec![Rect::new(domain.x0, domain.x1, domain.y0, -self.pedestal_depth, self.n_substrate)];
        if self.pedestal_depth > 0.0 {
            let w = self.pedestal_width / 2.0;
            rects.push(Rect::new(-w, w, -self.pedestal_depth, 0.0, self.n_substrate));
        }
        let w = self.width / 2.0;
        rects.push(Rect::new(-w, w, self.gap, top, self.n_core));
        CrossSection::new(self.n_cover, rects, domain, pitch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::nm;

    #[test]
    fn later_rectangles_win() {
        let d = Domain { x0: -1.0, x1: 1.0, y0: -1.0, y1: 1.0 };
        let cs = CrossSection::new(
            1.0,
            vec![Rect::new(-1.0, 1.0, -1.0, 0.0, 2.0), Rect::new(-0.5, 0.5, -0.5, 0.5, 3.0)],
            d,
            0.1,
        )
        .unwrap();
        assert_eq!(cs.index_at(0.0, -0.25), 3.0);
        assert_eq!(cs.index_at(0.9, -0.25), 2.0);
        assert_eq!(cs.index_at(0.9, 0.25), 1.0);
    }

    #[test]
    fn rectangle_outside_domain_rejected() {
        let d = Domain { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 };
        assert!(CrossSection::new(1.0, vec![Rect::new(0.5, 1.5, 0.0, 1.0, 2.0)], d, 0.1).is_err());
        assert!(CrossSection::new(1.0, vec![], d, 0.0).is_err());
    }

    #[test]
    fn rib_slices() {
        let cs = RibWaveguide::default().cross_section(nm(10.0)).unwrap();
        let center = cs.vertical_stack(0.0).unwrap().cleaned();
        assert_eq!(center.films().len(), 1);
        assert!((center.core_thickness() - nm(120.0)).abs() < 1e-15);
        let side = cs.vertical_stack(nm(1000.0)).unwrap().cleaned();
        assert!((side.core_thickness() - nm(70.0)).abs() < 1e-15);
        assert_eq!(side.top().index, N_AIR);
        assert_eq!(side.bottom().index, N_DIAMOND);
    }

    #[test]
    fn ring_slice_through_pedestal() {
        let cs = RingSection::default().cross_section(nm(10.0)).unwrap();
        let s = cs.vertical_stack(0.0).unwrap().cleaned();
        assert_eq!(s.films().len(), 1);
        assert_eq!(s.films()[0].index, N_GAP);
        let outside = cs.vertical_stack(nm(500.0)).unwrap().cleaned();
        assert!(outside.films().is_empty());
    }
}
