//! The `gapnv` command: scenario-driven ratio curves, fits, ring design
//! tables and 2-D mode maps.
//!
//! Exit codes: 0 success, 2 input error, 3 solver error, 4 unguided mode.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::cavity::{self, DesignTable};
use crate::error::Error;
use crate::fitting::{self, GapModel};
use crate::modes2d;
use crate::scenario::{self, LoadedScenario, Scenario};
use crate::slab;
use crate::stack::Polarization;
use crate::svg::{LinePlot, Series};
use crate::units::{nm, to_nm, to_um};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_UNGUIDED: i32 = 4;

/// Finest pitch needed for converged 2-D results; coarser grids only warn.
pub const PITCH_WARN_NM: f64 = 20.0;

pub const RATIO_COLUMNS: &str = "polarization,gap_nm,thickness_nm,ratio";
pub const FIT_COLUMNS: &str = "kind,parameter,unit,estimate,std_error,sse,dof,points";

#[derive(Debug, Parser)]
#[command(name = "gapnv", version, about = "Mode solvers and cavity figures of merit for GaP-on-diamond photonics")]
struct Cli {
    /// Worker threads for sweeps.
    #[arg(long, global = true, env = "GAPNV_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Diamond/GaP field ratio versus membrane thickness.
    RatioCurve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write a line plot next to the CSV.
        #[arg(long)]
        svg: bool,
    },
    /// Fit an air gap to ratio data, or a propagation loss to a decay trace.
    Fit {
        kind: FitKind,
        /// Data CSV; overrides the path in the scenario.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: bool,
    },
    /// Ring resonator design table sorted by Purcell factor.
    Design {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Fail unless F_SE > 1 at the scenario's reference geometry.
        #[arg(long)]
        check_paper_point: bool,
    },
    /// Fundamental 2-D mode of a cross-section: n_eff and |E|² map.
    Mode2d {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FitKind {
    Gap,
    Loss,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

type CmdResult = std::result::Result<(), Failure>;

fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_) | Error::InvalidStack { .. } | Error::Data { .. } => EXIT_INPUT,
        Error::NoGuidedMode(_) => EXIT_UNGUIDED,
        _ => EXIT_SOLVER,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        fail(exit_code(&e), e.to_string())
    }
}

fn io_fail(path: &Path, e: std::io::Error) -> Failure {
    fail(EXIT_INPUT, format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> std::result::Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| io_fail(path, e))
}

fn write_text(path: &Path, text: &str) -> CmdResult {
    std::fs::write(path, text).map_err(|e| io_fail(path, e))
}

fn open(path: &Path) -> std::result::Result<File, Failure> {
    File::open(path).map_err(|e| io_fail(path, e))
}

fn svg_path(out: &Path) -> PathBuf {
    out.with_extension("svg")
}

/// `out` when one polarization is written, `out_te.csv` style names otherwise.
fn per_polarization_path(out: &Path, pol: Polarization, many: bool) -> PathBuf {
    if !many {
        return out.to_path_buf();
    }
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}_{}.{}", pol.to_string().to_lowercase(), ext.to_string_lossy()),
        None => format!("{stem}_{}", pol.to_string().to_lowercase()),
    };
    out.with_file_name(name)
}

fn load(path: &Path) -> std::result::Result<LoadedScenario, Failure> {
    scenario::load(path).map_err(|e| fail(EXIT_INPUT, e.to_string()))
}

/// Messages collected inside the worker pool and written afterwards.
#[derive(Default)]
struct Io {
    out: Vec<u8>,
    err: Vec<u8>,
}

impl Io {
    fn say(&mut self, line: impl AsRef<str>) {
        let _ = writeln!(self.out, "{}", line.as_ref());
    }

    fn warn(&mut self, line: impl AsRef<str>) {
        let _ = writeln!(self.err, "warning: {}", line.as_ref());
    }
}

fn ratio_curve(io: &mut Io, scenario_path: &Path, out: &Path, svg: bool) -> CmdResult {
    let loaded = load(scenario_path)?;
    let sc = &loaded.scenario;
    let spec = sc.ratio_curve.as_ref().ok_or_else(|| fail(EXIT_INPUT, "scenario has no [ratio_curve] block"))?;
    let thicknesses: Vec<f64> = spec.thicknesses_nm.expand("ratio_curve.thicknesses_nm")?.into_iter().map(nm).collect();
    let template = sc.membrane_stack()?;

    let mut curves = Vec::new();
    for &pol in &sc.polarizations {
        for &gap in &spec.gaps_nm {
            let curve = slab::ratio_curve(&template, &thicknesses, nm(gap), sc.wavelength(), pol, sc.window())?;
            for (t, e) in &curve.failures {
                io.warn(format!("{pol}, gap {gap} nm, thickness {} nm: {e}", to_nm(*t)));
            }
            if curve.points.is_empty() {
                return Err(fail(EXIT_SOLVER, format!("{pol}, gap {gap} nm: no thickness could be solved")));
            }
            curves.push(curve);
        }
    }

    let mut w = create(out)?;
    let mut body = format!("{RATIO_COLUMNS}\n");
    for c in &curves {
        for (t, r) in &c.points {
            body.push_str(&format!("{},{:.3},{:.3},{:.9e}\n", c.polarization, to_nm(c.gap), to_nm(*t), r));
        }
    }
    w.write_all(body.as_bytes()).and_then(|_| w.flush()).map_err(|e| io_fail(out, e))?;
    io.say(format!("wrote {} curves to {}", curves.len(), out.display()));

    if svg {
        let plot = LinePlot {
            title: "Diamond/GaP field ratio".into(),
            x_label: "membrane thickness (nm)".into(),
            y_label: "R".into(),
            series: curves
                .iter()
                .map(|c| Series {
                    label: format!("{} gap {:.1} nm", c.polarization, to_nm(c.gap)),
                    points: c.points.iter().map(|&(t, r)| (to_nm(t), r)).collect(),
                    dashed: c.gap > 0.0,
                })
                .collect(),
        };
        let path = svg_path(out);
        write_text(&path, &plot.render())?;
        io.say(format!("wrote {}", path.display()));
    }
    Ok(())
}

fn fit(
    io: &mut Io,
    kind: FitKind,
    data: Option<&Path>,
    scenario_path: Option<&Path>,
    out: &Path,
    svg: bool,
) -> CmdResult {
    let loaded = match scenario_path {
        Some(p) => load(p)?,
        None => LoadedScenario { scenario: scenario::parse("schema_version = 1\n")?, base_dir: PathBuf::new() },
    };
    let sc = &loaded.scenario;
    let data_fail = |path: &Path, e: Error| match e {
        Error::Data { line, message } => fail(EXIT_INPUT, format!("{}:{line}: {message}", path.display())),
        other => Failure::from(other),
    };
    match kind {
        FitKind::Loss => {
            let path = loaded.data_path(data, sc.fit_loss.as_ref().and_then(|f| f.data.as_ref()), "fit_loss.data")?;
            let trace = fitting::read_decay_csv(open(&path)?).map_err(|e| data_fail(&path, e))?;
            let fit = fitting::fit_exponential_decay(&trace)?;
            if let Some(w) = fit.warning() {
                io.warn(w);
            }
            io.say(format!("propagation loss fit ({} points)", trace.len()));
            io.say(format!(
                "  alpha = {:.2} ± {:.2} dB/cm ({:.4e} ± {:.2e} 1/m)",
                fit.alpha_db_per_cm(),
                fit.alpha_std_error_db_per_cm(),
                fit.alpha,
                fit.alpha_std_error
            ));
            io.say(format!("  I0 = {:.6e}", fit.i0));
            io.say(format!("  {}", goodness_line(&fit.result)));
            let row = format!(
                "{FIT_COLUMNS}\nloss,alpha,dB/cm,{:.6},{:.6},{:.9e},{},{}\n",
                fit.alpha_db_per_cm(),
                fit.alpha_std_error_db_per_cm(),
                fit.result.sse,
                fit.result.dof,
                trace.len()
            );
            write_text(out, &row)?;
            if svg {
                let x_um = |x: f64| to_um(x);
                let plot = LinePlot {
                    title: format!("Propagation loss {:.2} dB/cm", fit.alpha_db_per_cm()),
                    x_label: "position (µm)".into(),
                    y_label: "ln I".into(),
                    series: vec![
                        Series {
                            label: "data".into(),
                            points: trace
                                .positions()
                                .iter()
                                .zip(trace.intensities())
                                .map(|(&x, &y)| (x_um(x), y.ln()))
                                .collect(),
                            dashed: false,
                        },
                        Series {
                            label: "fit".into(),
                            points: trace.positions().iter().map(|&x| (x_um(x), fit.i0.ln() - fit.alpha * x)).collect(),
                            dashed: true,
                        },
                    ],
                };
                write_text(&svg_path(out), &plot.render())?;
            }
        }
        FitKind::Gap => {
            let spec = sc.fit_gap.as_ref();
            let path = loaded.data_path(data, spec.and_then(|f| f.data.as_ref()), "fit_gap.data")?;
            let points = fitting::read_ratio_csv(open(&path)?).map_err(|e| data_fail(&path, e))?;
            let mut model = GapModel::new(sc.membrane_stack()?, sc.wavelength(), sc.window());
            if let Some(s) = spec {
                model.gap_max = nm(s.gap_max_nm);
            }
            let fit = fitting::fit_air_gap(&points, &model).map_err(|e| match e {
                Error::NoGuidedMode(m) => fail(EXIT_SOLVER, format!("no guided mode: {m}")),
                other => Failure::from(other),
            })?;
            io.say(format!("air gap fit ({} points, search 0 to {:.1} nm)", points.len(), to_nm(model.gap_max)));
            io.say(format!("  gap = {:.2} ± {:.2} nm", to_nm(fit.gap), to_nm(fit.gap_std_error)));
            io.say(format!("  {}", goodness_line(&fit.result)));
            let row = format!(
                "{FIT_COLUMNS}\ngap,gap,nm,{:.6},{:.6},{:.9e},{},{}\n",
                to_nm(fit.gap),
                to_nm(fit.gap_std_error),
                fit.result.sse,
                fit.result.dof,
                points.len()
            );
            write_text(out, &row)?;
            if svg {
                let mut series = Vec::new();
                for pol in Polarization::BOTH {
                    let mut pts: Vec<(f64, f64)> = points
                        .iter()
                        .filter(|p| p.polarization == pol)
                        .map(|p| (to_nm(p.thickness), p.ratio))
                        .collect();
                    if pts.is_empty() {
                        continue;
                    }
                    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                    let model_pts = pts
                        .iter()
                        .filter_map(|&(t, _)| model.ratio(nm(t), fit.gap, pol).ok().map(|r| (t, r)))
                        .collect();
                    series.push(Series { label: format!("{pol} data"), points: pts, dashed: false });
                    series.push(Series { label: format!("{pol} model"), points: model_pts, dashed: true });
                }
                let plot = LinePlot {
                    title: format!("Air gap {:.2} nm", to_nm(fit.gap)),
                    x_label: "membrane thickness (nm)".into(),
                    y_label: "R".into(),
                    series,
                };
                write_text(&svg_path(out), &plot.render())?;
            }
        }
    }
    Ok(())
}

fn goodness_line(result: &fitting::FitResult) -> String {
    match fitting::goodness_of_fit(result) {
        fitting::Goodness::ReducedChiSquare(c) => format!("reduced chi-square = {c:.4} (dof {})", result.dof),
        fitting::Goodness::RSquared(r) => format!("R^2 = {r:.6}, SSE = {:.4e} (dof {})", result.sse, result.dof),
    }
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-12)
}

fn design(io: &mut Io, scenario_path: &Path, out: &Path, check: bool) -> CmdResult {
    let loaded = load(scenario_path)?;
    let sc = &loaded.scenario;
    let spec = sc.design.as_ref().ok_or_else(|| fail(EXIT_INPUT, "scenario has no [design] block"))?;
    let sweep = sc.design_sweep()?;
    if spec.pitch_nm > PITCH_WARN_NM {
        io.warn(format!("pitch {} nm is coarser than {PITCH_WARN_NM} nm; results are not converged", spec.pitch_nm));
    }
    let table: DesignTable = cavity::design_ring(&sweep).map_err(|e| match e {
        Error::NoGuidedMode(m) => fail(EXIT_SOLVER, format!("unsolvable sweep: {m}")),
        other => Failure::from(other),
    })?;
    for (g, e) in &table.failures {
        io.warn(format!(
            "D {} um, depth {} nm, thickness {} nm, gap {} nm: {e}",
            to_um(g.diameter),
            to_nm(g.depth),
            to_nm(g.thickness),
            to_nm(g.gap)
        ));
    }
    let mut w = create(out)?;
    table.write_csv(sweep.polarization, &mut w).and_then(|_| w.flush()).map_err(|e| io_fail(out, e))?;
    let best = &table.rows[0];
    io.say(format!(
        "{} rows written to {}; best F_SE = {:.4} (D {} um, depth {} nm)",
        table.rows.len(),
        out.display(),
        best.f_se,
        to_um(best.geometry.diameter),
        to_nm(best.geometry.depth)
    ));

    if check {
        let p = spec.paper_point;
        let hit = |g: &cavity::Geometry| {
            same(to_um(g.diameter), p.diameter_um)
                && same(to_nm(g.depth), p.nv_depth_nm)
                && same(to_nm(g.thickness), p.thickness_nm)
                && same(to_nm(g.gap), p.gap_nm)
        };
        let label = format!(
            "D {} um, depth {} nm, thickness {} nm, gap {} nm",
            p.diameter_um, p.nv_depth_nm, p.thickness_nm, p.gap_nm
        );
        if let Some(row) = table.rows.iter().find(|r| hit(&r.geometry)) {
            let ok = row.f_se > 1.0;
            io.say(format!(
                "reference point ({label}): F_SE = {:.4}, F_ZPL = {:.2}: {}",
                row.f_se,
                row.f_zpl,
                if ok { "F_SE > 1" } else { "F_SE <= 1" }
            ));
            if !ok {
                return Err(fail(EXIT_SOLVER, format!("reference point F_SE = {:.4} does not exceed 1", row.f_se)));
            }
        } else if let Some((_, e)) = table.failures.iter().find(|(g, _)| hit(g)) {
            return Err(fail(EXIT_SOLVER, format!("reference point ({label}) failed: {e}")));
        } else {
            return Err(fail(EXIT_INPUT, format!("reference point ({label}) is not part of the sweep")));
        }
    }
    Ok(())
}

fn mode2d(io: &mut Io, scenario_path: &Path, out: &Path) -> CmdResult {
    let loaded = load(scenario_path)?;
    let sc: &Scenario = &loaded.scenario;
    let spec = sc.mode2d.as_ref().ok_or_else(|| fail(EXIT_INPUT, "scenario has no [mode2d] block"))?;
    if spec.pitch_nm > PITCH_WARN_NM {
        io.warn(format!("pitch {} nm is coarser than {PITCH_WARN_NM} nm; n_eff is not converged", spec.pitch_nm));
    }
    let cs = sc.cross_section()?;
    let many = sc.polarizations.len() > 1;
    for &pol in &sc.polarizations {
        let mode = modes2d::solve_fundamental_2d(&cs, sc.wavelength(), pol)?;
        if !mode.is_guided() {
            return Err(fail(
                EXIT_UNGUIDED,
                format!(
                    "{pol} mode is unguided: n_eff {:.6} does not exceed the cladding bound {:.6}",
                    mode.n_eff, mode.cladding_bound
                ),
            ));
        }
        let (px, py) = mode.peak_position();
        io.say(format!(
            "{pol} n_eff = {:.6} (guided, cladding bound {:.6}, A_eff = {:.4} um^2, peak at x = {:.1} nm, y = {:.1} nm)",
            mode.n_eff,
            mode.cladding_bound,
            modes2d::effective_area(&mode) * 1e12,
            to_nm(px),
            to_nm(py)
        ));
        let path = per_polarization_path(out, pol, many);
        let mut w = create(&path)?;
        mode.write_field_csv(&mut w).and_then(|_| w.flush()).map_err(|e| io_fail(&path, e))?;
    }
    Ok(())
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { write!(stdout, "{text}") } else { write!(stderr, "{text}") };
            return if code == 0 { EXIT_OK } else { EXIT_INPUT };
        }
    };
    let jobs = match cli.jobs {
        Some(0) => {
            let _ = writeln!(stderr, "error: --jobs must be at least 1");
            return EXIT_INPUT;
        }
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(stderr, "error: cannot start worker pool: {e}");
            return EXIT_SOLVER;
        }
    };
    let mut io = Io::default();
    let result = pool.install(|| match &cli.command {
        Command::RatioCurve { scenario, out, svg } => ratio_curve(&mut io, scenario, out, *svg),
        Command::Fit { kind, data, scenario, out, svg } => {
            fit(&mut io, *kind, data.as_deref(), scenario.as_deref(), out, *svg)
        }
        Command::Design { scenario, out, check_paper_point } => design(&mut io, scenario, out, *check_paper_point),
        Command::Mode2d { scenario, out } => mode2d(&mut io, scenario, out),
    });
    let _ = stdout.write_all(&io.out);
    let _ = stderr.write_all(&io.err);
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
