//! Least-squares fits: propagation loss from intensity-versus-distance
//! traces, and the membrane/substrate air gap from penetration-ratio data.

use std::io::Read;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::slab::penetration_ratio;
use crate::stack::{MembraneStack, Polarization};
use crate::units::{nm, to_nm, DB_PER_NEPER};

/// Intensity sampled along a waveguide. Positions in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayTrace {
    positions: Vec<f64>,
    intensities: Vec<f64>,
    sigmas: Option<Vec<f64>>,
}

impl DecayTrace {
    pub fn new(positions: Vec<f64>, intensities: Vec<f64>, sigmas: Option<Vec<f64>>) -> Result<Self> {
        if positions.len() != intensities.len() || sigmas.as_ref().is_some_and(|s| s.len() != positions.len()) {
            return Err(invalid("decay trace columns differ in length"));
        }
        if positions.len() < 3 {
            return Err(invalid(format!("decay fit needs at least 3 points, got {}", positions.len())));
        }
        for (k, w) in positions.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(invalid(format!("positions must increase strictly (point {})", k + 1)));
            }
        }
        if let Some(k) = intensities.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(invalid(format!("intensity at point {k} is not positive: {}", intensities[k])));
        }
        if let Some(s) = &sigmas {
            if let Some(k) = s.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
                return Err(invalid(format!("uncertainty at point {k} is not positive: {}", s[k])));
            }
        }
        Ok(Self { positions, intensities, sigmas })
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn sigmas(&self) -> Option<&[f64]> {
        self.sigmas.as_deref()
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: &'static str,
    pub value: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub parameters: Vec<Parameter>,
    /// Residual sum of squares in the space the fit minimizes.
    pub sse: f64,
    /// Total sum of squares of the fitted data about their mean.
    pub tss: f64,
    pub dof: usize,
    /// `Σ (r/σ)²` when per-point uncertainties were supplied.
    pub chi_square: Option<f64>,
}

impl FitResult {
    pub fn parameter(&self, name: &str) -> Option<&Parameter> {
        self.parameters.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Goodness {
    ReducedChiSquare(f64),
    RSquared(f64),
}

/// Reduced χ² when uncertainties were given, otherwise the coefficient of
/// determination (1 for an exact fit, 0 for a fit no better than the mean).
pub fn goodness_of_fit(result: &FitResult) -> Goodness {
    match result.chi_square {
        Some(chi2) => Goodness::ReducedChiSquare(chi2 / result.dof as f64),
        None if result.tss == 0.0 => Goodness::RSquared(if result.sse == 0.0 { 1.0 } else { 0.0 }),
        None => Goodness::RSquared(1.0 - result.sse / result.tss),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    /// Parameters `alpha` (1/m) and `i0` (intensity at position 0).
    pub result: FitResult,
    pub alpha: f64,
    pub alpha_std_error: f64,
    pub i0: f64,
    /// Negative α: the trace grows along the guide.
    pub gain: bool,
}

impl DecayFit {
    /// Signed, so a gain trace reports a negative loss.
    pub fn alpha_db_per_cm(&self) -> f64 {
        self.alpha * DB_PER_NEPER / 100.0
    }

    pub fn alpha_std_error_db_per_cm(&self) -> f64 {
        self.alpha_std_error * DB_PER_NEPER / 100.0
    }

    pub fn warning(&self) -> Option<&'static str> {
        self.gain.then_some("gain: check data orientation")
    }
}

/// Log-linear least squares of `ln I = ln I0 − α x`.
pub fn fit_exponential_decay(trace: &DecayTrace) -> Result<DecayFit> {
    let n = trace.len();
    let x = &trace.positions;
    // logs relative to the first sample
    let y_ref = trace.intensities[0].ln();
    let y: Vec<f64> = trace.intensities.iter().map(|v| v.ln() - y_ref).collect();
    let nf = n as f64;
    let xm = x.iter().sum::<f64>() / nf;
    let ym = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let slope = sxy / sxx;
    let intercept = y_ref + ym - slope * xm;
    let residuals: Vec<f64> = x.iter().zip(&y).map(|(a, b)| b - (ym + slope * (a - xm))).collect();
    let sse: f64 = residuals.iter().map(|r| r * r).sum();
    let tss: f64 = y.iter().map(|v| (v - ym).powi(2)).sum();
    let dof = n - 2;
    let s2 = sse / dof as f64;
    let se_slope = (s2 / sxx).sqrt();
    let se_intercept = (s2 * (1.0 / nf + xm * xm / sxx)).sqrt();
    let chi_square = trace.sigmas.as_ref().map(|s| {
        residuals.iter().zip(s.iter().zip(&trace.intensities)).map(|(r, (sig, i))| (r * i / sig).powi(2)).sum()
    });
    let alpha = -slope;
    let i0 = intercept.exp();
    Ok(DecayFit {
        result: FitResult {
            parameters: vec![
                Parameter { name: "alpha", value: alpha, std_error: se_slope },
                Parameter { name: "i0", value: i0, std_error: i0 * se_intercept },
            ],
            sse,
            tss,
            dof,
            chi_square,
        },
        alpha,
        alpha_std_error: se_slope,
        i0,
        gain: alpha < 0.0,
    })
}

/// A measured penetration ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioPoint {
    /// Membrane thickness, meters.
    pub thickness: f64,
    pub ratio: f64,
    pub polarization: Polarization,
}

/// Model setup shared by the air-gap fit and its objective.
#[derive(Debug, Clone, PartialEq)]
pub struct GapModel {
    pub template: MembraneStack,
    pub wavelength: f64,
    /// Diamond depth window of the ratio.
    pub window: f64,
    /// Upper end of the gap search, meters.
    pub gap_max: f64,
}

impl GapModel {
    pub fn new(template: MembraneStack, wavelength: f64, window: f64) -> Self {
        Self { template, wavelength, window, gap_max: nm(50.0) }
    }

    pub fn ratio(&self, thickness: f64, gap: f64, pol: Polarization) -> Result<f64> {
        let stack = self.template.build(thickness, gap)?;
        penetration_ratio(&stack, self.wavelength, pol, self.window)
            .map_err(|e| Error::ModelFailure { thickness_nm: to_nm(thickness), source: Box::new(e) })
    }
}

/// `Σ (R_model(tᵢ; gap) − Rᵢ)²`.
pub fn gap_objective(data: &[RatioPoint], model: &GapModel, gap: f64) -> Result<f64> {
    let residuals: Vec<Result<f64>> =
        data.par_iter().map(|p| model.ratio(p.thickness, gap, p.polarization).map(|r| r - p.ratio)).collect();
    let mut sse = 0.0;
    for r in residuals {
        sse += r?.powi(2);
    }
    Ok(sse)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapFit {
    /// Parameter `gap` in meters.
    pub result: FitResult,
    pub gap: f64,
    pub gap_std_error: f64,
    /// Brackets visited by the golden-section search, outermost first.
    pub brackets: Vec<(f64, f64)>,
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Golden-section fit of the air gap over `[0, model.gap_max]`, refined to
/// 0.01 nm; the interval ends are compared against the interior optimum.
pub fn fit_air_gap(data: &[RatioPoint], model: &GapModel) -> Result<GapFit> {
    if data.len() < 2 {
        return Err(invalid(format!("gap fit needs at least 2 data points, got {}", data.len())));
    }
    if !(model.gap_max > 0.0) {
        return Err(invalid("gap search interval must be positive"));
    }
    let f = |g: f64| gap_objective(data, model, g);
    let tol = nm(0.01);
    let (mut a, mut b) = (0.0, model.gap_max);
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    let mut evaluated = vec![(c, fc), (d, fd)];
    let mut brackets = vec![(a, b)];
    while b - a > tol {
        if fc <= fd {
            b = d;
            (d, fd) = (c, fc);
            c = b - GOLDEN * (b - a);
            fc = f(c)?;
            evaluated.push((c, fc));
        } else {
            a = c;
            (c, fc) = (d, fd);
            d = a + GOLDEN * (b - a);
            fd = f(d)?;
            evaluated.push((d, fd));
        }
        brackets.push((a, b));
    }
    for end in [0.0, model.gap_max] {
        evaluated.push((end, f(end)?));
    }
    let (lo, hi) =
        evaluated.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, v)| (lo.min(v), hi.max(v)));
    if hi - lo <= 1e-24 + 1e-12 * hi.abs() {
        return Err(Error::Unidentifiable("objective is flat over the gap search interval".into()));
    }
    let interior = if fc <= fd { (c, fc) } else { (d, fd) };
    let mut best = interior;
    for &(g, v) in &evaluated[evaluated.len() - 2..] {
        if v < best.1 {
            best = (g, v);
        }
    }
    let (gap, sse) = best;

    let h = nm(0.05);
    let curvature = if gap - h < 0.0 {
        (sse - 2.0 * f(gap + h)? + f(gap + 2.0 * h)?) / (h * h)
    } else if gap + h > model.gap_max {
        (sse - 2.0 * f(gap - h)? + f(gap - 2.0 * h)?) / (h * h)
    } else {
        (f(gap - h)? - 2.0 * sse + f(gap + h)?) / (h * h)
    };
    let dof = data.len() - 1;
    let s2 = sse / dof as f64;
    let gap_std_error = if curvature > 0.0 { (2.0 * s2 / curvature).sqrt() } else { f64::INFINITY };
    let mean = data.iter().map(|p| p.ratio).sum::<f64>() / data.len() as f64;
    let tss = data.iter().map(|p| (p.ratio - mean).powi(2)).sum();
    Ok(GapFit {
        result: FitResult {
            parameters: vec![Parameter { name: "gap", value: gap, std_error: gap_std_error }],
            sse,
            tss,
            dof,
            chi_square: None,
        },
        gap,
        gap_std_error,
        brackets,
    })
}

fn data_err(line: u64, message: impl Into<String>) -> Error {
    Error::Data { line, message: message.into() }
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).flexible(true).from_reader(input)
}

fn check_header<R: Read>(reader: &mut csv::Reader<R>, required: &[&str], optional: &[&str]) -> Result<usize> {
    let header = reader.headers().map_err(|e| data_err(1, e.to_string()))?.clone();
    let names: Vec<&str> = header.iter().collect();
    let ok = names.len() >= required.len()
        && names.len() <= required.len() + optional.len()
        && names.iter().zip(required.iter().chain(optional)).all(|(a, b)| a == b);
    if !ok {
        let mut expected = required.join(",");
        for o in optional {
            expected.push_str(&format!("[,{o}]"));
        }
        return Err(data_err(1, format!("expected header '{expected}', found '{}'", names.join(","))));
    }
    Ok(names.len())
}

fn parse_field(record: &csv::StringRecord, column: usize, name: &str, line: u64) -> Result<f64> {
    let raw = record.get(column).ok_or_else(|| data_err(line, format!("missing column '{name}'")))?;
    let v: f64 = raw.parse().map_err(|_| data_err(line, format!("'{raw}' is not a number ({name})")))?;
    if !v.is_finite() {
        return Err(data_err(line, format!("{name} is not finite")));
    }
    Ok(v)
}

/// Reads `position_nm,intensity[,sigma]`.
pub fn read_decay_csv<R: Read>(input: R) -> Result<DecayTrace> {
    let mut reader = csv_reader(input);
    let columns = check_header(&mut reader, &["position_nm", "intensity"], &["sigma"])?;
    let (mut xs, mut ys, mut ss) = (Vec::new(), Vec::new(), Vec::new());
    for record in reader.records() {
        let record = record.map_err(|e| data_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != columns {
            return Err(data_err(line, format!("expected {columns} columns, found {}", record.len())));
        }
        let x = parse_field(&record, 0, "position_nm", line)?;
        let y = parse_field(&record, 1, "intensity", line)?;
        if !(y > 0.0) {
            return Err(data_err(line, format!("intensity must be positive, got {y}")));
        }
        if let Some(&prev) = xs.last() {
            if !(nm(x) > prev) {
                return Err(data_err(line, "positions must increase strictly"));
            }
        }
        if columns == 3 {
            let s = parse_field(&record, 2, "sigma", line)?;
            if !(s > 0.0) {
                return Err(data_err(line, format!("sigma must be positive, got {s}")));
            }
            ss.push(s);
        }
        xs.push(nm(x));
        ys.push(y);
    }
    DecayTrace::new(xs, ys, (columns == 3).then_some(ss))
}

/// Reads `thickness_nm,R,polarization`.
pub fn read_ratio_csv<R: Read>(input: R) -> Result<Vec<RatioPoint>> {
    let mut reader = csv_reader(input);
    check_header(&mut reader, &["thickness_nm", "R", "polarization"], &[])?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| data_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(data_err(line, format!("expected 3 columns, found {}", record.len())));
        }
        let t = parse_field(&record, 0, "thickness_nm", line)?;
        let r = parse_field(&record, 1, "R", line)?;
        if !(t > 0.0) {
            return Err(data_err(line, format!("thickness must be positive, got {t}")));
        }
        if !(r >= 0.0) {
            return Err(data_err(line, format!("ratio must be >= 0, got {r}")));
        }
        let polarization = record[2].parse::<Polarization>().map_err(|e| data_err(line, e.to_string()))?;
        out.push(RatioPoint { thickness: nm(t), ratio: r, polarization });
    }
    Ok(out)
}
