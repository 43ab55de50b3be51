//! TOML scenario files.
//!
//! A scenario names materials, the membrane stack, wavelength and
//! polarizations, plus one optional block per command. Unknown keys are
//! rejected, and every value is checked before anything runs. Lengths are
//! in nm (µm for ring diameters), loss in dB/cm and rates in MHz.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::cavity::{DesignSweep, Loss};
use crate::emitter::NVEmitter;
use crate::error::{invalid, Error, Result};
use crate::modes2d::{CrossSection, Domain, Rect, RibWaveguide, RingSection};
use crate::stack::{Layer, MembraneStack, Polarization, N_AIR, N_DIAMOND, N_GAP, N_NITRIDE};
use crate::units::{nm, um};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default = "default_wavelength")]
    pub wavelength_nm: f64,
    #[serde(default = "default_polarizations")]
    pub polarizations: Vec<Polarization>,
    /// Overrides and additions to the built-in materials.
    #[serde(default)]
    pub materials: BTreeMap<String, f64>,
    #[serde(default)]
    pub stack: StackSpec,
    #[serde(default)]
    pub ratio_curve: Option<RatioCurveSpec>,
    #[serde(default)]
    pub fit_gap: Option<FitGapSpec>,
    #[serde(default)]
    pub fit_loss: Option<FitLossSpec>,
    #[serde(default)]
    pub design: Option<DesignSpec>,
    #[serde(default)]
    pub emitter: EmitterSpec,
    #[serde(default)]
    pub mode2d: Option<Mode2dSpec>,
}

fn default_wavelength() -> f64 {
    637.0
}

fn default_polarizations() -> Vec<Polarization> {
    vec![Polarization::TE, Polarization::TM]
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackSpec {
    #[serde(default = "air")]
    pub cover: String,
    /// Films between the cover and the membrane, top first.
    #[serde(default)]
    pub overlayers: Vec<FilmSpec>,
    #[serde(default = "gap_material")]
    pub membrane: String,
    #[serde(default = "air")]
    pub gap: String,
    #[serde(default = "diamond")]
    pub substrate: String,
    #[serde(default = "default_window")]
    pub window_nm: f64,
}

impl Default for StackSpec {
    fn default() -> Self {
        Self {
            cover: air(),
            overlayers: Vec::new(),
            membrane: gap_material(),
            gap: air(),
            substrate: diamond(),
            window_nm: default_window(),
        }
    }
}

fn air() -> String {
    "air".into()
}
fn diamond() -> String {
    "diamond".into()
}
fn gap_material() -> String {
    "GaP".into()
}
fn default_window() -> f64 {
    100.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilmSpec {
    pub material: String,
    pub thickness_nm: f64,
}

/// A list of values or an inclusive `start..=stop` range with `step`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Values {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Values {
    pub fn expand(&self, key: &str) -> Result<Vec<f64>> {
        match self {
            Values::List(v) => Ok(v.clone()),
            Values::Range { start, stop, step } => {
                if !(*step > 0.0) || !(stop >= start) {
                    return Err(invalid(format!("{key}: range needs step > 0 and stop >= start")));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                if n > 100_000 {
                    return Err(invalid(format!("{key}: range has more than 100000 values")));
                }
                Ok((0..=n).map(|k| start + step * k as f64).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatioCurveSpec {
    pub thicknesses_nm: Values,
    #[serde(default = "zero_gap")]
    pub gaps_nm: Vec<f64>,
}

fn zero_gap() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitGapSpec {
    /// `thickness_nm,R,polarization` CSV, relative to the scenario file.
    pub data: Option<PathBuf>,
    #[serde(default = "default_gap_max")]
    pub gap_max_nm: f64,
}

fn default_gap_max() -> f64 {
    50.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitLossSpec {
    /// `position_nm,intensity[,sigma]` CSV, relative to the scenario file.
    pub data: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSpec {
    pub diameters_um: Values,
    pub nv_depths_nm: Values,
    #[serde(default = "default_thickness")]
    pub thicknesses_nm: Values,
    #[serde(default = "zero_gap_values")]
    pub gaps_nm: Values,
    pub loss_db_per_cm: f64,
    #[serde(default = "default_pitch")]
    pub pitch_nm: f64,
    /// Polarization of the ring mode; defaults to the first scenario polarization.
    #[serde(default)]
    pub polarization: Option<Polarization>,
    #[serde(default)]
    pub ring: RingSpec,
    #[serde(default)]
    pub paper_point: PaperPoint,
}

fn default_thickness() -> Values {
    Values::List(vec![120.0])
}
fn zero_gap_values() -> Values {
    Values::List(vec![0.0])
}
fn default_pitch() -> f64 {
    5.0
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingSpec {
    #[serde(default = "w300")]
    pub width_nm: f64,
    #[serde(default = "t120")]
    pub pedestal_depth_nm: f64,
    /// Defaults to the strip width.
    #[serde(default)]
    pub pedestal_width_nm: Option<f64>,
    #[serde(default = "pad")]
    pub padding_nm: f64,
}

impl Default for RingSpec {
    fn default() -> Self {
        Self { width_nm: w300(), pedestal_depth_nm: t120(), pedestal_width_nm: None, padding_nm: pad() }
    }
}

fn w300() -> f64 {
    300.0
}
fn t120() -> f64 {
    120.0
}
fn pad() -> f64 {
    1000.0
}

/// Geometry checked by `design --check-paper-point`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaperPoint {
    #[serde(default = "d25")]
    pub diameter_um: f64,
    #[serde(default = "depth20")]
    pub nv_depth_nm: f64,
    #[serde(default = "t120")]
    pub thickness_nm: f64,
    #[serde(default)]
    pub gap_nm: f64,
}

impl Default for PaperPoint {
    fn default() -> Self {
        Self { diameter_um: d25(), nv_depth_nm: depth20(), thickness_nm: t120(), gap_nm: 0.0 }
    }
}

fn d25() -> f64 {
    2.5
}
fn depth20() -> f64 {
    20.0
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterSpec {
    #[serde(default)]
    pub dipole_angle_rad: f64,
    #[serde(default = "g_total")]
    pub gamma_total_mhz: f64,
    #[serde(default = "g_zpl")]
    pub gamma_zpl_mhz: f64,
    /// Defaults to the scenario wavelength.
    #[serde(default)]
    pub lambda_zpl_nm: Option<f64>,
}

impl Default for EmitterSpec {
    fn default() -> Self {
        Self { dipole_angle_rad: 0.0, gamma_total_mhz: g_total(), gamma_zpl_mhz: g_zpl(), lambda_zpl_nm: None }
    }
}

fn g_total() -> f64 {
    13.0
}
fn g_zpl() -> f64 {
    0.35
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode2dSpec {
    #[serde(default = "default_pitch")]
    pub pitch_nm: f64,
    pub cross_section: CrossSectionSpec,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CrossSectionSpec {
    Rib {
        #[serde(default = "w1000")]
        width_nm: f64,
        #[serde(default = "t120")]
        thickness_nm: f64,
        #[serde(default = "etch50")]
        etch_depth_nm: f64,
        #[serde(default = "pad")]
        padding_nm: f64,
        #[serde(default = "span1500")]
        half_span_nm: f64,
    },
    Ring {
        #[serde(default = "t120")]
        thickness_nm: f64,
        #[serde(default)]
        gap_nm: f64,
        #[serde(flatten)]
        ring: RingSpec,
    },
    Rects {
        #[serde(default = "air")]
        background: String,
        domain_nm: [f64; 4],
        rects: Vec<RectSpec>,
    },
}

fn w1000() -> f64 {
    1000.0
}
fn etch50() -> f64 {
    50.0
}
fn span1500() -> f64 {
    1500.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectSpec {
    /// `[x0, x1, y0, y1]` in nm.
    pub bounds_nm: [f64; 4],
    pub material: String,
}

/// A parsed scenario with the directory its relative paths refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub base_dir: PathBuf,
}

pub fn parse(text: &str) -> Result<Scenario> {
    let scenario: Scenario = toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(0, |s| text[..s.start.min(text.len())].matches('\n').count() as u64 + 1);
        Error::Data { line, message: e.message().to_string() }
    })?;
    scenario.validate()?;
    Ok(scenario)
}

pub fn load(path: &Path) -> Result<LoadedScenario> {
    let text =
        std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read scenario {}: {e}", path.display())))?;
    let scenario = parse(&text).map_err(|e| match e {
        Error::Data { line, message } => invalid(format!("{}:{line}: {message}", path.display())),
        other => invalid(format!("{}: {other}", path.display())),
    })?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedScenario { scenario, base_dir })
}

fn check_positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{key}: must be positive, got {v}")))
    }
}

fn check_list(key: &str, values: &[f64], allow_zero: bool) -> Result<()> {
    if values.is_empty() {
        return Err(invalid(format!("{key}: list is empty")));
    }
    for v in values {
        if !v.is_finite() || *v < 0.0 || (!allow_zero && *v == 0.0) {
            return Err(invalid(format!("{key}: invalid value {v}")));
        }
    }
    Ok(())
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(format!("schema_version: expected {SCHEMA_VERSION}, found {}", self.schema_version)));
        }
        check_positive("wavelength_nm", self.wavelength_nm)?;
        if self.polarizations.is_empty() {
            return Err(invalid("polarizations: list is empty"));
        }
        for (name, n) in &self.materials {
            if !(*n >= 1.0) || !n.is_finite() {
                return Err(invalid(format!("materials.{name}: index must be >= 1, got {n}")));
            }
        }
        self.membrane_stack()?;
        check_positive("stack.window_nm", self.stack.window_nm).or_else(|e| {
            if self.stack.window_nm == 0.0 {
                Ok(())
            } else {
                Err(e)
            }
        })?;
        if let Some(rc) = &self.ratio_curve {
            check_list("ratio_curve.thicknesses_nm", &rc.thicknesses_nm.expand("ratio_curve.thicknesses_nm")?, false)?;
            check_list("ratio_curve.gaps_nm", &rc.gaps_nm, true)?;
        }
        if let Some(f) = &self.fit_gap {
            check_positive("fit_gap.gap_max_nm", f.gap_max_nm)?;
        }
        if let Some(d) = &self.design {
            check_list("design.diameters_um", &d.diameters_um.expand("design.diameters_um")?, false)?;
            check_list("design.nv_depths_nm", &d.nv_depths_nm.expand("design.nv_depths_nm")?, true)?;
            check_list("design.thicknesses_nm", &d.thicknesses_nm.expand("design.thicknesses_nm")?, false)?;
            check_list("design.gaps_nm", &d.gaps_nm.expand("design.gaps_nm")?, true)?;
            if !(d.loss_db_per_cm > 0.0) || !d.loss_db_per_cm.is_finite() {
                return Err(invalid(format!("design.loss_db_per_cm: must be positive, got {}", d.loss_db_per_cm)));
            }
            check_positive("design.pitch_nm", d.pitch_nm)?;
            self.design_sweep()?;
        }
        self.emitter(20.0)?.validate().map_err(|e| invalid(format!("emitter: {e}")))?;
        if let Some(m) = &self.mode2d {
            check_positive("mode2d.pitch_nm", m.pitch_nm)?;
            self.cross_section()?;
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        nm(self.wavelength_nm)
    }

    pub fn material(&self, name: &str) -> Result<f64> {
        if let Some(n) = self.materials.get(name) {
            return Ok(*n);
        }
        match name {
            "air" => Ok(N_AIR),
            "GaP" => Ok(N_GAP),
            "diamond" => Ok(N_DIAMOND),
            "nitride" => Ok(N_NITRIDE),
            other => Err(invalid(format!("unknown material '{other}'"))),
        }
    }

    pub fn membrane_stack(&self) -> Result<MembraneStack> {
        let s = &self.stack;
        let mut overlayers = Vec::with_capacity(s.overlayers.len());
        for (k, f) in s.overlayers.iter().enumerate() {
            check_positive(&format!("stack.overlayers[{k}].thickness_nm"), f.thickness_nm)?;
            overlayers.push(Layer::film(f.material.clone(), self.material(&f.material)?, nm(f.thickness_nm)));
        }
        Ok(MembraneStack {
            cover: self.material(&s.cover)?,
            overlayers,
            membrane: self.material(&s.membrane)?,
            gap: self.material(&s.gap)?,
            substrate: self.material(&s.substrate)?,
        })
    }

    pub fn window(&self) -> f64 {
        nm(self.stack.window_nm)
    }

    /// Emitter at `depth_nm` with the scenario's rates and dipole angle.
    pub fn emitter(&self, depth_nm: f64) -> Result<NVEmitter> {
        let e = &self.emitter;
        Ok(NVEmitter {
            depth: nm(depth_nm),
            dipole_angle: e.dipole_angle_rad,
            gamma_total: e.gamma_total_mhz * 1e6,
            gamma_zpl: e.gamma_zpl_mhz * 1e6,
            lambda_zpl: nm(e.lambda_zpl_nm.unwrap_or(self.wavelength_nm)),
        })
    }

    fn ring_section(&self, spec: &RingSpec, thickness_nm: f64, gap_nm: f64) -> Result<RingSection> {
        Ok(RingSection {
            width: nm(spec.width_nm),
            thickness: nm(thickness_nm),
            pedestal_depth: nm(spec.pedestal_depth_nm),
            pedestal_width: nm(spec.pedestal_width_nm.unwrap_or(spec.width_nm)),
            gap: nm(gap_nm),
            n_core: self.material(&self.stack.membrane)?,
            n_substrate: self.material(&self.stack.substrate)?,
            n_cover: self.material(&self.stack.cover)?,
            padding: nm(spec.padding_nm),
        })
    }

    pub fn design_sweep(&self) -> Result<DesignSweep> {
        let d = self.design.as_ref().ok_or_else(|| invalid("scenario has no [design] block"))?;
        let nm_list = |v: &Values, key: &str| -> Result<Vec<f64>> { Ok(v.expand(key)?.into_iter().map(nm).collect()) };
        let section = self.ring_section(&d.ring, 120.0, 0.0)?;
        section.cross_section(nm(d.pitch_nm))?;
        Ok(DesignSweep {
            diameters: d.diameters_um.expand("design.diameters_um")?.into_iter().map(um).collect(),
            depths: nm_list(&d.nv_depths_nm, "design.nv_depths_nm")?,
            thicknesses: nm_list(&d.thicknesses_nm, "design.thicknesses_nm")?,
            gaps: nm_list(&d.gaps_nm, "design.gaps_nm")?,
            loss: Loss::DbPerCm(d.loss_db_per_cm),
            section,
            polarization: d.polarization.unwrap_or(self.polarizations[0]),
            wavelength: self.wavelength(),
            pitch: nm(d.pitch_nm),
            emitter: self.emitter(20.0)?,
        })
    }

    pub fn cross_section(&self) -> Result<CrossSection> {
        let m = self.mode2d.as_ref().ok_or_else(|| invalid("scenario has no [mode2d] block"))?;
        let pitch = nm(m.pitch_nm);
        match &m.cross_section {
            CrossSectionSpec::Rib { width_nm, thickness_nm, etch_depth_nm, padding_nm, half_span_nm } => RibWaveguide {
                width: nm(*width_nm),
                total_thickness: nm(*thickness_nm),
                etch_depth: nm(*etch_depth_nm),
                n_core: self.material(&self.stack.membrane)?,
                n_substrate: self.material(&self.stack.substrate)?,
                n_cover: self.material(&self.stack.cover)?,
                padding: nm(*padding_nm),
                lateral_half_span: nm(*half_span_nm),
            }
            .cross_section(pitch),
            CrossSectionSpec::Ring { thickness_nm, gap_nm, ring } => {
                self.ring_section(ring, *thickness_nm, *gap_nm)?.cross_section(pitch)
            }
            CrossSectionSpec::Rects { background, domain_nm, rects } => {
                let [x0, x1, y0, y1] = domain_nm.map(nm);
                let mut out = Vec::with_capacity(rects.len());
                for r in rects {
                    let [a, b, c, d] = r.bounds_nm.map(nm);
                    out.push(Rect::new(a, b, c, d, self.material(&r.material)?));
                }
                CrossSection::new(self.material(background)?, out, Domain { x0, x1, y0, y1 }, pitch)
            }
        }
        .map_err(|e| invalid(format!("mode2d.cross_section: {e}")))
    }
}

impl LoadedScenario {
    /// Resolves a data path: explicit override first, then the scenario
    /// entry relative to the scenario file.
    pub fn data_path(&self, override_path: Option<&Path>, entry: Option<&PathBuf>, key: &str) -> Result<PathBuf> {
        if let Some(p) = override_path {
            return Ok(p.to_path_buf());
        }
        let p = entry.ok_or_else(|| invalid(format!("{key}: no data file given (use --data)")))?;
        Ok(if p.is_absolute() { p.clone() } else { self.base_dir.join(p) })
    }
}
