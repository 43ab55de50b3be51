//! Effective index method: vertical slab slices, then one horizontal slab.

use crate::error::{Error, Result};
use crate::slab;
use crate::stack::{Layer, LayerStack, Polarization};

use super::CrossSection;

/// n_eff estimate from two slab passes. Vertical slices use `pol`; the
/// horizontal pass uses the orthogonal polarization.
pub fn effective_index_method(cs: &CrossSection, wavelength: f64, pol: Polarization) -> Result<f64> {
    cs.validate()?;
    let xs = cs.x_breaks();
    let mut slices: Vec<(LayerStack, f64)> = Vec::new();
    for w in xs.windows(2) {
        let stack = cs.vertical_stack(0.5 * (w[0] + w[1]))?.cleaned();
        match slices.last_mut() {
            Some((prev, width)) if *prev == stack => *width += w[1] - w[0],
            _ => slices.push((stack, w[1] - w[0])),
        }
    }
    let mut indices = Vec::with_capacity(slices.len());
    for (stack, _) in &slices {
        let mode = slab::fundamental_mode(stack, wavelength, pol).map_err(|e| match e {
            Error::NoGuidedMode(_) => Error::NoGuidedMode("a vertical slice has no guided slab mode".into()),
            other => other,
        })?;
        indices.push(mode.n_eff);
    }
    if indices.len() == 1 {
        return Ok(indices[0]);
    }
    let last = indices.len() - 1;
    let layers = indices
        .iter()
        .zip(&slices)
        .enumerate()
        .map(|(k, (&n, (_, width)))| {
            let name = format!("slice{k}");
            if k == 0 || k == last {
                Layer::cladding(name, n)
            } else {
                Layer::film(name, n, *width)
            }
        })
        .collect();
    let lateral = LayerStack::new(layers)?;
    let mode = slab::fundamental_mode(&lateral, wavelength, pol.orthogonal())
        .map_err(|_| Error::NoGuidedMode("lateral effective-index slab has no guided mode".into()))?;
    Ok(mode.n_eff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes2d::{Domain, Rect, RibWaveguide};
    use crate::stack::MembraneStack;
    use crate::units::nm;

    const LAMBDA: f64 = 637e-9;

    #[test]
    fn horizontally_uniform_section_reduces_to_slab() {
        let d = Domain { x0: nm(-500.0), x1: nm(500.0), y0: nm(-1000.0), y1: nm(1120.0) };
        let cs = CrossSection::new(
            1.0,
            vec![Rect::new(d.x0, d.x1, d.y0, 0.0, 2.4), Rect::new(d.x0, d.x1, 0.0, nm(120.0), 3.3)],
            d,
            nm(10.0),
        )
        .unwrap();
        for pol in Polarization::BOTH {
            let slab = slab::fundamental_mode(&MembraneStack::default().build(nm(120.0), 0.0).unwrap(), LAMBDA, pol)
                .unwrap()
                .n_eff;
            assert_eq!(effective_index_method(&cs, LAMBDA, pol).unwrap(), slab);
        }
    }

    #[test]
    fn rib_estimate_lies_between_slab_indices() {
        let cs = RibWaveguide::default().cross_section(nm(20.0)).unwrap();
        let n = effective_index_method(&cs, LAMBDA, Polarization::TE).unwrap();
        let hi =
            slab::fundamental_mode(&MembraneStack::default().build(nm(120.0), 0.0).unwrap(), LAMBDA, Polarization::TE)
                .unwrap()
                .n_eff;
        let lo =
            slab::fundamental_mode(&MembraneStack::default().build(nm(70.0), 0.0).unwrap(), LAMBDA, Polarization::TE)
                .unwrap()
                .n_eff;
        assert!(n > lo && n < hi, "{lo} < {n} < {hi}");
    }

    #[test]
    fn ridge_on_bare_substrate_has_unguided_slices() {
        let cs = crate::modes2d::RingSection::default().cross_section(nm(20.0)).unwrap();
        assert!(matches!(effective_index_method(&cs, LAMBDA, Polarization::TE), Err(Error::NoGuidedMode(_))));
    }
}
