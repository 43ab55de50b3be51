//! One-dimensional dielectric layer stacks.
//!
//! A stack is ordered along `z`, which increases from the top cladding toward
//! the substrate. The first and last layers are semi-infinite; everything in
//! between has a finite thickness (meters).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Layer names recognised by the penetration-ratio helpers.
pub const MEMBRANE: &str = "GaP";
pub const AIR_GAP: &str = "air-gap";
pub const SUBSTRATE: &str = "diamond";

pub const N_GAP: f64 = 3.3;
pub const N_DIAMOND: f64 = 2.4;
pub const N_AIR: f64 = 1.0;
/// PECVD silicon nitride; the value is a default, not a measured index.
pub const N_NITRIDE: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarization {
    TE,
    TM,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::TE, Polarization::TM];

    pub fn orthogonal(self) -> Self {
        match self {
            Polarization::TE => Polarization::TM,
            Polarization::TM => Polarization::TE,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarization::TE => "TE",
            Polarization::TM => "TM",
        })
    }
}

impl std::str::FromStr for Polarization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "TE" | "te" => Ok(Polarization::TE),
            "TM" | "tm" => Ok(Polarization::TM),
            other => Err(Error::InvalidInput(format!("unknown polarization '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub name: String,
    pub index: f64,
    /// `None` for the two semi-infinite claddings.
    pub thickness: Option<f64>,
}

impl Layer {
    pub fn cladding(name: impl Into<String>, index: f64) -> Self {
        Self { name: name.into(), index, thickness: None }
    }

    pub fn film(name: impl Into<String>, index: f64, thickness: f64) -> Self {
        Self { name: name.into(), index, thickness: Some(thickness) }
    }

    pub fn is_semi_infinite(&self) -> bool {
        self.thickness.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack {
    layers: Vec<Layer>,
}

impl LayerStack {
    /// Checks the structural rules only: semi-infinite ends, finite
    /// non-negative interior thicknesses, indices >= 1. Zero-thickness layers
    /// are kept until [`normalize_stack`].
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.len() < 2 {
            return Err(stack_err("two-claddings", format!("need at least 2 layers, got {}", layers.len())));
        }
        let last = layers.len() - 1;
        for (i, layer) in layers.iter().enumerate() {
            if !(layer.index >= 1.0) || !layer.index.is_finite() {
                return Err(stack_err("index>=1", format!("layer {i} '{}' has n = {}", layer.name, layer.index)));
            }
            let outer = i == 0 || i == last;
            match (outer, layer.thickness) {
                (true, Some(_)) => {
                    return Err(stack_err(
                        "two-claddings",
                        format!("outer layer {i} '{}' must be semi-infinite", layer.name),
                    ))
                }
                (false, None) => {
                    return Err(stack_err(
                        "two-claddings",
                        format!("interior layer {i} '{}' must have a thickness", layer.name),
                    ))
                }
                (false, Some(t)) if !(t >= 0.0) || !t.is_finite() => {
                    return Err(stack_err("thickness>0", format!("layer {i} '{}' has thickness {t}", layer.name)))
                }
                _ => {}
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn top(&self) -> &Layer {
        &self.layers[0]
    }

    pub fn bottom(&self) -> &Layer {
        &self.layers[self.layers.len() - 1]
    }

    pub fn films(&self) -> &[Layer] {
        &self.layers[1..self.layers.len() - 1]
    }

    /// Total thickness of the finite layers.
    pub fn core_thickness(&self) -> f64 {
        self.films().iter().filter_map(|l| l.thickness).sum()
    }

    pub fn max_cladding_index(&self) -> f64 {
        self.top().index.max(self.bottom().index)
    }

    pub fn max_film_index(&self) -> Option<f64> {
        self.films().iter().map(|l| l.index).reduce(f64::max)
    }

    /// `z` of the boundaries between consecutive layers, starting at 0.
    pub fn interfaces(&self) -> Vec<f64> {
        let mut z = 0.0;
        let mut out = vec![0.0];
        for film in self.films() {
            z += film.thickness.unwrap_or(0.0);
            out.push(z);
        }
        out
    }

    /// Index of the unique finite layer with the given name.
    pub fn find_film(&self, name: &str) -> Result<usize> {
        let hits: Vec<usize> = (1..self.layers.len() - 1).filter(|&i| self.layers[i].name == name).collect();
        match hits.as_slice() {
            [i] => Ok(*i),
            [] => Err(Error::InvalidInput(format!("stack has no finite layer named '{name}'"))),
            _ => Err(Error::InvalidInput(format!("stack has {} layers named '{name}'", hits.len()))),
        }
    }

    /// Drops zero-thickness films and merges neighbours of equal index (a film
    /// equal to a cladding is absorbed into it). No guidance check.
    pub(crate) fn cleaned(&self) -> LayerStack {
        let mut out: Vec<Layer> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            if layer.thickness == Some(0.0) {
                continue;
            }
            match out.last_mut() {
                Some(prev) if prev.index == layer.index => {
                    prev.thickness = match (prev.thickness, layer.thickness) {
                        (Some(a), Some(b)) => Some(a + b),
                        _ => None,
                    };
                }
                _ => out.push(layer.clone()),
            }
        }
        // uniform stack: both claddings collapsed into one
        if out.len() == 1 {
            let mut twin = out[0].clone();
            twin.thickness = None;
            out.push(twin);
        }
        LayerStack { layers: out }
    }
}

fn stack_err(rule: &'static str, detail: String) -> Error {
    Error::InvalidStack { rule, detail }
}

/// Canonical form of a stack: zero-thickness layers removed, equal-index
/// neighbours merged, then the guided-mode precondition enforced.
pub fn normalize_stack(stack: &LayerStack) -> Result<LayerStack> {
    let clean = stack.cleaned();
    let Some(n_film) = clean.max_film_index() else {
        return Err(stack_err("finite-layer", "no finite layer left after normalization".into()));
    };
    let n_clad = clean.max_cladding_index();
    if n_film <= n_clad {
        return Err(stack_err(
            "guidance",
            format!("max interior index {n_film} does not exceed cladding index {n_clad}"),
        ));
    }
    Ok(clean)
}

/// Builds `cover | overlayers… | membrane(t) | gap(g) | substrate` stacks.
#[derive(Debug, Clone, PartialEq)]
pub struct MembraneStack {
    pub cover: f64,
    /// Films between the cover and the membrane, top first (e.g. a nitride cap).
    pub overlayers: Vec<Layer>,
    pub membrane: f64,
    pub gap: f64,
    pub substrate: f64,
}

impl Default for MembraneStack {
    fn default() -> Self {
        Self { cover: N_AIR, overlayers: Vec::new(), membrane: N_GAP, gap: N_AIR, substrate: N_DIAMOND }
    }
}

impl MembraneStack {
    pub fn build(&self, thickness: f64, gap: f64) -> Result<LayerStack> {
        let mut layers = vec![Layer::cladding("cover", self.cover)];
        layers.extend(self.overlayers.iter().cloned());
        layers.push(Layer::film(MEMBRANE, self.membrane, thickness));
        layers.push(Layer::film(AIR_GAP, self.gap, gap));
        layers.push(Layer::cladding(SUBSTRATE, self.substrate));
        LayerStack::new(layers)
    }
}
