//! Command-line front end: argument parsing, orchestration and output files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::analysis::{classify_sweep, dirichlet_bands, dispersion_curve};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::interior::{epsilon_sweep, solve_full, Boundaries, FieldSolution};
use crate::medium::{CutVector, ImpedanceRule, MediumSpec, TrigKind, TrigPoly2D, TrigTerm};
use crate::riccati::{FrequencyKind, TAIL_TOL};
use crate::svg::{plot, Series};

#[derive(Parser, Debug)]
#[command(name = "qphelm", version, about = "Transparent-boundary solver for 1D quasiperiodic Helmholtz problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Configuration file (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Number of Fourier modes K (power of two).
    #[arg(long)]
    pub k_modes: Option<usize>,
    /// Nodes per periodicity cell.
    #[arg(long)]
    pub mesh_nodes: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Full-line solution at one (ω, ε).
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        omega: f64,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        /// Reconstructed cells on each side.
        #[arg(long)]
        cells: Option<usize>,
    },
    /// Interior errors ‖u_ε − u‖ over a list of ε.
    SweepEps {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        omega: f64,
        /// Comma-separated decreasing ε values.
        #[arg(long, default_value = "0.1,0.05,0.025,0.0125")]
        eps_list: String,
    },
    /// Fundamental eigenvalue λ₀(ω) over a frequency range.
    Dispersion {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        omega_min: f64,
        #[arg(long)]
        omega_max: f64,
        #[arg(long, default_value_t = 101)]
        steps: usize,
    },
    /// Dirichlet fiber eigenvalue bands.
    Bands {
        /// Configuration supplying the medium; without it the cut is (cos π/3, sin π/3).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Use μ_p = 1, ρ_p = 1.5 + α(sin 2πy₁ + sin 2πy₂) instead of the configured medium.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 10)]
        n_max: usize,
        /// Number of offsets s.
        #[arg(long, default_value_t = 64)]
        steps: usize,
        #[arg(long)]
        mesh_nodes: Option<usize>,
    },
    /// Evanescent / propagative / zero-flux classification over a frequency grid.
    Classify {
        #[command(flatten)]
        common: Common,
        /// Comma-separated frequencies; overrides the range flags.
        #[arg(long)]
        omegas: Option<String>,
        #[arg(long)]
        omega_min: Option<f64>,
        #[arg(long)]
        omega_max: Option<f64>,
        #[arg(long, default_value_t = 21)]
        steps: usize,
    },
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Validation(_) | Error::Config(_) | Error::Io(_) | Error::Dimension(_) => 2,
        Error::ZeroFlux(_) | Error::Extraction(_) => 3,
        _ => 4,
    }
}

/// Record written to run.json.
#[derive(Serialize, Debug)]
pub struct RunRecord {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: Option<RunConfig>,
    pub medium: Option<MediumSpec>,
    pub warnings: Vec<String>,
    pub omega: Option<f64>,
    pub epsilon: Option<f64>,
    pub classification: Option<String>,
    pub k_modes: Option<usize>,
    pub lambda0_left: Option<(f64, f64)>,
    pub lambda0_right: Option<(f64, f64)>,
    pub rtr_left: Option<(f64, f64)>,
    pub rtr_right: Option<(f64, f64)>,
    pub q0_left: Option<f64>,
    pub q0_right: Option<f64>,
    pub summary: serde_json::Value,
    pub files: Vec<String>,
    pub seconds: f64,
}

impl RunRecord {
    fn new(command: &str) -> Self {
        Self {
            tool: "qphelm",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config: None,
            medium: None,
            warnings: Vec::new(),
            omega: None,
            epsilon: None,
            classification: None,
            k_modes: None,
            lambda0_left: None,
            lambda0_right: None,
            rtr_left: None,
            rtr_right: None,
            q0_left: None,
            q0_right: None,
            summary: serde_json::Value::Null,
            files: Vec::new(),
            seconds: 0.0,
        }
    }
}

fn pair(c: C64) -> (f64, f64) {
    (c.re, c.im)
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Io(std::io::Error::other(e)))?;
        w.write_record(header).map_err(|e| Error::Io(std::io::Error::other(e)))?;
        for r in rows {
            w.write_record(&r).map_err(|e| Error::Io(std::io::Error::other(e)))?;
        }
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        std::fs::write(self.dir.join(name), body)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn finish(mut self, mut record: RunRecord, start: Instant) -> Result<()> {
        self.files.push("run.json".into());
        record.files = self.files.clone();
        record.seconds = start.elapsed().as_secs_f64();
        let json = serde_json::to_string_pretty(&record).map_err(|e| Error::Io(std::io::Error::other(e)))?;
        std::fs::write(self.dir.join("run.json"), json)?;
        Ok(())
    }
}

fn f(v: f64) -> String {
    format!("{v}")
}

fn load(common: &Common) -> Result<(RunConfig, MediumSpec, Vec<String>)> {
    let cfg = RunConfig::load(&common.config)?;
    let rep = cfg.medium()?;
    Ok((cfg, rep.medium, rep.warnings))
}

/// Runs a parsed command; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("qphelm: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve { common, omega, epsilon, cells } => cmd_solve(&common, omega, epsilon, cells),
        Command::SweepEps { common, omega, eps_list } => cmd_sweep_eps(&common, omega, &eps_list),
        Command::Dispersion { common, omega_min, omega_max, steps } => {
            cmd_dispersion(&common, omega_min, omega_max, steps)
        }
        Command::Bands { config, out, alpha, n_max, steps, mesh_nodes } => {
            cmd_bands(config.as_deref(), &out, alpha, n_max, steps, mesh_nodes)
        }
        Command::Classify { common, omegas, omega_min, omega_max, steps } => {
            cmd_classify(&common, omegas.as_deref(), omega_min, omega_max, steps)
        }
    }
}

fn check_frequency(omega: f64, epsilon: f64) -> Result<()> {
    if !(omega > 0.0) || !(epsilon >= 0.0) {
        return Err(Error::Validation(format!("need omega > 0 and epsilon >= 0, got {omega}, {epsilon}")));
    }
    Ok(())
}

/// Full pipeline at (ω, ε): field.csv, riccati_spectrum.csv, field.svg, run.json.
pub fn cmd_solve(common: &Common, omega: f64, epsilon: f64, cells: Option<usize>) -> Result<()> {
    let start = Instant::now();
    check_frequency(omega, epsilon)?;
    let (cfg, medium, warnings) = load(common)?;
    let pipe = cfg.pipeline(common.k_modes, common.mesh_nodes)?;
    let n_cells = cells.unwrap_or(cfg.solver.cells);
    let mut out = Outputs::new(&common.out)?;
    let (bnd, field) = solve_full(&medium, omega, epsilon, &cfg.source, &pipe, n_cells)?;
    write_field(&mut out, &field, omega, epsilon)?;
    write_spectrum(&mut out, &bnd)?;
    let mut rec = RunRecord::new("solve");
    rec.config = Some(cfg);
    rec.medium = Some(medium);
    rec.warnings = warnings;
    rec.omega = Some(omega);
    rec.epsilon = Some(epsilon);
    rec.classification = Some(match &bnd.class {
        Some(c) => c.class.name().to_string(),
        None => "absorbing".to_string(),
    });
    rec.k_modes = Some(bnd.k_modes);
    rec.lambda0_left = Some(pair(bnd.left.fund.lambda0));
    rec.lambda0_right = Some(pair(bnd.right.fund.lambda0));
    rec.rtr_left = Some(pair(bnd.left.rtr));
    rec.rtr_right = Some(pair(bnd.right.rtr));
    rec.q0_left = Some(bnd.left.fund.q0);
    rec.q0_right = Some(bnd.right.fund.q0);
    let (jl, jr) = field.junction_mismatch();
    rec.summary = serde_json::json!({
        "junction_mismatch_left": jl,
        "junction_mismatch_right": jr,
        "interior_residual": field.interior.residual,
        "cells_each_side": n_cells,
    });
    out.finish(rec, start)
}

fn write_field(out: &mut Outputs, field: &FieldSolution, omega: f64, epsilon: f64) -> Result<()> {
    let samples = field.samples();
    out.csv(
        "field.csv",
        &["x", "re_u", "im_u"],
        samples.iter().map(|(x, u)| vec![f(*x), f(u.re), f(u.im)]),
    )?;
    let svg = plot(
        &format!("u(x), omega = {omega}, epsilon = {epsilon}"),
        "x",
        "u",
        &[
            Series { label: "Re u".into(), points: samples.iter().map(|(x, u)| (*x, u.re)).collect(), color: "#1f77b4", scatter: false },
            Series { label: "|u|".into(), points: samples.iter().map(|(x, u)| (*x, u.norm())).collect(), color: "#d62728", scatter: false },
        ],
    );
    out.text("field.svg", &svg)
}

fn write_spectrum(out: &mut Outputs, bnd: &Boundaries) -> Result<()> {
    let lr = bnd.right.fund.lambda0;
    let ll = bnd.left.fund.lambda0.inv();
    let opt = |w: Option<i64>| w.map(|v| v.to_string()).unwrap_or_default();
    let rows = bnd.spectrum.pairs.iter().map(|p| {
        let fund = (p.lambda - lr).norm() < 1e-12 * lr.norm().max(1.0) || (p.lambda - ll).norm() < 1e-12 * ll.norm().max(1.0);
        vec![
            f(bnd.omega),
            f(bnd.epsilon),
            "right".to_string(),
            f(p.lambda.re),
            f(p.lambda.im),
            f(p.lambda.norm()),
            opt(p.winding_phi),
            opt(p.winding_psi),
            f(p.flux),
            f(p.flux_std),
            f(p.tail),
            (p.resolved(TAIL_TOL) as u8).to_string(),
            (fund as u8).to_string(),
        ]
    });
    out.csv(
        "riccati_spectrum.csv",
        &[
            "omega", "epsilon", "side", "re_lambda", "im_lambda", "abs_lambda", "winding_phi", "winding_psi", "Q_mean",
            "Q_std", "fourier_tail", "resolved", "is_fundamental",
        ],
        rows,
    )
}

/// Parses a comma-separated list of numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Validation(format!("bad number '{t}': {e}"))))
        .collect()
}

/// ε-sweep: sweep.csv and run.json with the fitted slope.
pub fn cmd_sweep_eps(common: &Common, omega: f64, eps_list: &str) -> Result<()> {
    let start = Instant::now();
    check_frequency(omega, 0.0)?;
    let eps = parse_list(eps_list)?;
    let (cfg, medium, warnings) = load(common)?;
    let pipe = cfg.pipeline(common.k_modes, common.mesh_nodes)?;
    let mut out = Outputs::new(&common.out)?;
    let res = epsilon_sweep(&medium, omega, &eps, &cfg.source, &pipe)?;
    out.csv("sweep.csv", &["epsilon", "rel_H1_error"], res.rows.iter().map(|(e, r)| vec![f(*e), f(*r)]))?;
    let svg = plot(
        &format!("log10 relative H1 error, omega = {omega}"),
        "log10 epsilon",
        "log10 error",
        &[Series {
            label: format!("slope {:.3}", res.slope),
            points: res.rows.iter().map(|(e, r)| (e.log10(), r.log10())).collect(),
            color: "#1f77b4",
            scatter: false,
        }],
    );
    out.text("sweep.svg", &svg)?;
    println!("omega = {omega}: log-log slope {:.4}", res.slope);
    let mut rec = RunRecord::new("sweep-eps");
    rec.config = Some(cfg);
    rec.medium = Some(medium);
    rec.warnings = warnings;
    rec.omega = Some(omega);
    rec.classification = res.class.map(|c| c.name().to_string());
    rec.summary = serde_json::json!({ "slope": res.slope, "monotone": res.monotone, "rows": res.rows });
    out.finish(rec, start)
}

/// Dispersion sweep: dispersion.csv, lambda_trajectory.svg, dispersion.svg.
pub fn cmd_dispersion(common: &Common, omega_min: f64, omega_max: f64, steps: usize) -> Result<()> {
    let start = Instant::now();
    let (cfg, medium, warnings) = load(common)?;
    let pipe = cfg.pipeline(common.k_modes, common.mesh_nodes)?;
    let mut out = Outputs::new(&common.out)?;
    let pts = dispersion_curve(&medium, omega_min, omega_max, steps, &pipe)?;
    out.csv(
        "dispersion.csv",
        &["omega", "re_lambda0", "im_lambda0", "k0", "k0_unwrapped", "Q0", "class", "branch_break"],
        pts.iter().map(|p| {
            vec![
                f(p.omega),
                f(p.lambda0.0),
                f(p.lambda0.1),
                f(p.k0),
                f(p.k0_unwrapped),
                f(p.q0),
                p.class.name().into(),
                (p.branch_break as u8).to_string(),
            ]
        }),
    )?;
    let circle: Vec<(f64, f64)> =
        (0..=200).map(|i| i as f64 * std::f64::consts::TAU / 200.0).map(|t| (t.cos(), t.sin())).collect();
    out.text(
        "lambda_trajectory.svg",
        &plot(
            "lambda0(omega) in the complex plane",
            "Re",
            "Im",
            &[
                Series { label: "unit circle".into(), points: circle, color: "#999999", scatter: false },
                Series { label: "lambda0".into(), points: pts.iter().map(|p| p.lambda0).collect(), color: "#d62728", scatter: true },
            ],
        ),
    )?;
    let prop: Vec<(f64, f64)> =
        pts.iter().filter(|p| p.class == FrequencyKind::Propagative).map(|p| (p.k0, p.omega)).collect();
    let evan: Vec<(f64, f64)> =
        pts.iter().filter(|p| p.class == FrequencyKind::Evanescent).map(|p| (p.k0, p.omega)).collect();
    out.text(
        "dispersion.svg",
        &plot(
            "dispersion curve",
            "k0",
            "omega",
            &[
                Series { label: "propagative".into(), points: prop, color: "#1f77b4", scatter: true },
                Series { label: "evanescent".into(), points: evan, color: "#ff7f0e", scatter: true },
            ],
        ),
    )?;
    let mut rec = RunRecord::new("dispersion");
    rec.config = Some(cfg);
    rec.medium = Some(medium);
    rec.warnings = warnings;
    rec.summary = serde_json::json!({
        "omega_min": omega_min,
        "omega_max": omega_max,
        "steps": steps,
        "points": pts.len(),
        "branch_breaks": pts.iter().filter(|p| p.branch_break).count(),
    });
    out.finish(rec, start)
}

/// Medium with μ_p = 1 and ρ_p = 1.5 + α(sin 2πy₁ + sin 2πy₂).
pub fn band_medium(cut: CutVector, alpha: f64) -> MediumSpec {
    let l = cut.cell_length();
    MediumSpec {
        mu_p: TrigPoly2D::constant(1.0),
        rho_p: TrigPoly2D {
            constant: 1.5,
            terms: vec![
                TrigTerm { m: 1, n: 0, kind: TrigKind::SinCos, amplitude: alpha },
                TrigTerm { m: 0, n: 1, kind: TrigKind::CosSin, amplitude: alpha },
            ],
        },
        cut,
        a_left: -l,
        a_right: l,
        perturbation: Vec::new(),
        impedance: ImpedanceRule::Omega,
    }
}

/// Dirichlet bands: bands.csv, bands.svg, run.json with ω_*.
pub fn cmd_bands(
    config: Option<&Path>,
    out_dir: &Path,
    alpha: Option<f64>,
    n_max: usize,
    steps: usize,
    mesh_nodes: Option<usize>,
) -> Result<()> {
    let start = Instant::now();
    let (cfg, mut medium) = match config {
        Some(p) => {
            let cfg = RunConfig::load(p)?;
            let m = cfg.medium()?.medium;
            (Some(cfg), m)
        }
        None => {
            let th = std::f64::consts::FRAC_PI_3;
            (None, band_medium(CutVector::new(th.cos(), th.sin())?, 0.0))
        }
    };
    if let Some(a) = alpha {
        medium = band_medium(medium.cut.clone(), a);
    }
    let m = mesh_nodes.unwrap_or(600);
    let mut out = Outputs::new(out_dir)?;
    let res = dirichlet_bands(&medium, steps, n_max, m)?;
    let mut rows = Vec::new();
    for j in 0..steps {
        for c in &res.curves {
            rows.push(vec![f(c.samples[j].0), c.n.to_string(), f(c.samples[j].1)]);
        }
    }
    out.csv("bands.csv", &["s", "n", "lambda_n"], rows)?;
    let colors = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];
    let mut series: Vec<Series> = res
        .curves
        .iter()
        .map(|c| Series {
            label: format!("n = {}", c.n),
            points: c.samples.clone(),
            color: colors[(c.n - 1) % colors.len()],
            scatter: false,
        })
        .collect();
    if let Some(w) = res.omega_star {
        series.push(Series { label: format!("omega_*^2 = {:.3}", w * w), points: vec![(0.0, w * w), (1.0, w * w)], color: "#000000", scatter: false });
    }
    out.text("bands.svg", &plot("Dirichlet fiber eigenvalues", "s", "lambda_n(s)", &series))?;
    match res.omega_star {
        Some(w) => println!("omega_* = {w:.6} (verified up to n = {n_max})"),
        None => println!("no band overlap up to n = {n_max}"),
    }
    let mut rec = RunRecord::new("bands");
    rec.config = cfg;
    rec.medium = Some(medium);
    rec.summary = serde_json::json!({
        "alpha": alpha,
        "n_max": n_max,
        "omega_star": res.omega_star,
        "overlap_from": res.overlap_from,
        "overlapping": res.overlapping,
        "bands": res.curves.iter().map(|c| (c.n, c.a, c.b)).collect::<Vec<_>>(),
    });
    out.finish(rec, start)
}

/// Classification sweep: classify.csv and run.json with the class intervals.
pub fn cmd_classify(
    common: &Common,
    omegas: Option<&str>,
    omega_min: Option<f64>,
    omega_max: Option<f64>,
    steps: usize,
) -> Result<()> {
    let start = Instant::now();
    let grid = match (omegas, omega_min, omega_max) {
        (Some(list), _, _) => parse_list(list)?,
        (None, Some(a), Some(b)) if b > a && steps >= 2 => {
            (0..steps).map(|i| a + (b - a) * i as f64 / (steps - 1) as f64).collect()
        }
        _ => return Err(Error::Validation("give --omegas or --omega-min < --omega-max with --steps >= 2".into())),
    };
    if grid.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::Validation("frequencies must be positive".into()));
    }
    let (cfg, medium, warnings) = load(common)?;
    let pipe = cfg.pipeline(common.k_modes, common.mesh_nodes)?;
    let mut out = Outputs::new(&common.out)?;
    let (entries, runs) = classify_sweep(&medium, &grid, &pipe);
    out.csv(
        "classify.csv",
        &["omega", "class", "re_lambda0", "im_lambda0", "error"],
        entries.iter().map(|e| {
            vec![
                f(e.omega),
                e.class.map(|c| c.name().to_string()).unwrap_or_else(|| "error".into()),
                e.lambda0.map(|l| f(l.0)).unwrap_or_default(),
                e.lambda0.map(|l| f(l.1)).unwrap_or_default(),
                e.error.clone().unwrap_or_default(),
            ]
        }),
    )?;
    for e in &entries {
        println!("{:>12} {}", e.omega, e.class.map(|c| c.name()).unwrap_or("error"));
    }
    let mut rec = RunRecord::new("classify");
    rec.config = Some(cfg);
    rec.medium = Some(medium);
    rec.warnings = warnings;
    rec.summary = serde_json::json!({ "entries": entries, "intervals": runs });
    out.finish(rec, start)
}
