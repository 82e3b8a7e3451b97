//! `lingrowth`: density inspection, catenoid tabulation, single solves and
//! experiment sweeps.
//!
//! Exit status: 0 success, 1 configuration error, 2 hypothesis or domain
//! violation, 3 solver non-convergence.

mod config;

use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lingrowth::catenoid::{neck_limit, ode_residual, profile_value};
use lingrowth::density::uniform_samples;
use lingrowth::experiments::{self, write_report, ExperimentReport};
use lingrowth::mesh::MeshError;
use lingrowth::report::{write_json, write_text, ReportError};
use lingrowth::{
    build_polar_mesh, solve_dirichlet, BoundaryData, CatenoidError, CatenoidSpec, Convention, DensityError, DensitySpec, ExperimentError,
    Height, RadialProfile, Sign, SolverError,
};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use config::{BoundarySpec, ExperimentSection, RunConfig, CONFIG_ECHO, DEFAULT_SEED};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain violation: {0}")]
    Domain(String),
    #[error("{0}")]
    Hypothesis(String),
    #[error("solver did not converge: {0}")]
    NonConvergence(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Domain(_) | CliError::Hypothesis(_) => 2,
            CliError::NonConvergence(_) => 3,
        }
    }
}

impl From<DensityError> for CliError {
    fn from(e: DensityError) -> Self {
        match e {
            DensityError::InvalidMu(_) => CliError::Config(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<CatenoidError> for CliError {
    fn from(e: CatenoidError) -> Self {
        match e {
            CatenoidError::InvalidSpec(_) => CliError::Config(e.to_string()),
            CatenoidError::Density(d) => d.into(),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::NonConvergence(_) => CliError::NonConvergence(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<MeshError> for CliError {
    fn from(e: MeshError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Config(m) => CliError::Config(m),
            ExperimentError::Density(e) => e.into(),
            ExperimentError::Catenoid(e) => e.into(),
            ExperimentError::Mesh(e) => e.into(),
            ExperimentError::Solver(e) => e.into(),
            ExperimentError::Report(e) => e.into(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lingrowth", version, about = "Numerical laboratory for linear-growth variational problems")]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<std::path::PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<std::path::PathBuf>,
    /// Seed of the random experiment data.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Suppress progress and summary output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DensityKindArg {
    Area,
    Mu,
}

#[derive(Debug, Args)]
struct DensityArgs {
    /// Density family.
    #[arg(long, value_enum)]
    kind: Option<DensityKindArg>,
    /// Exponent of the μ-family (implies `--kind mu`).
    #[arg(long)]
    mu: Option<f64>,
}

impl DensityArgs {
    fn spec(&self) -> Result<Option<DensitySpec>, CliError> {
        match (self.kind, self.mu) {
            (None, None) => Ok(None),
            (Some(DensityKindArg::Area), None) => Ok(Some(DensitySpec::Area)),
            (Some(DensityKindArg::Area), Some(_)) => Err(CliError::Config("--mu only applies to --kind mu".into())),
            (Some(DensityKindArg::Mu), None) => Err(CliError::Config("--kind mu needs --mu".into())),
            (_, Some(mu)) => Ok(Some(DensitySpec::Mu { mu })),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SignArg {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConventionArg {
    Section2,
    Section3,
}

#[derive(Debug, Args)]
struct CatenoidArgs {
    #[arg(long, value_enum)]
    sign: Option<SignArg>,
    /// Flux constant (the radius `r` of the anchor-1 convention).
    #[arg(long, alias = "r")]
    alpha: Option<f64>,
    /// Additive offset.
    #[arg(long)]
    a: Option<f64>,
    /// Dimension.
    #[arg(long)]
    n: Option<u32>,
    #[arg(long, value_enum)]
    convention: Option<ConventionArg>,
}

impl CatenoidArgs {
    fn any(&self) -> bool {
        self.sign.is_some() || self.alpha.is_some() || self.a.is_some() || self.n.is_some() || self.convention.is_some()
    }

    fn apply(&self, spec: &mut CatenoidSpec) {
        if let Some(s) = self.sign {
            spec.sign = match s {
                SignArg::Plus => Sign::Plus,
                SignArg::Minus => Sign::Minus,
            };
        }
        if let Some(alpha) = self.alpha {
            spec.alpha = alpha;
        }
        if let Some(a) = self.a {
            spec.offset_a = a;
        }
        if let Some(n) = self.n {
            spec.dim_n = n;
        }
        if let Some(c) = self.convention {
            spec.convention = match c {
                ConventionArg::Section2 => Convention::Section2,
                ConventionArg::Section3 => Convention::Section3,
            };
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BoundaryArg {
    Affine,
    Catenoid,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a density and classify its growth.
    Density {
        #[command(flatten)]
        density: DensityArgs,
        /// Largest sampled t.
        #[arg(long)]
        t_max: Option<f64>,
        /// Number of sampling intervals on [0, t_max].
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Tabulate a catenoid profile.
    Catenoid {
        #[command(flatten)]
        density: DensityArgs,
        #[command(flatten)]
        catenoid: CatenoidArgs,
        #[arg(long)]
        rho_min: Option<f64>,
        #[arg(long)]
        rho_max: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Run a single Dirichlet solve on a polar mesh.
    Solve {
        #[command(flatten)]
        density: DensityArgs,
        #[arg(long)]
        r_in: Option<f64>,
        #[arg(long)]
        r_out: Option<f64>,
        #[arg(long)]
        n_r: Option<usize>,
        #[arg(long)]
        n_theta: Option<usize>,
        /// Kind of boundary data.
        #[arg(long, value_enum)]
        boundary: Option<BoundaryArg>,
        /// Gradient of affine data.
        #[arg(long, num_args = 2, value_names = ["QX", "QY"], allow_negative_numbers = true)]
        q: Option<Vec<f64>>,
        /// Constant term of affine data.
        #[arg(long, allow_negative_numbers = true)]
        c: Option<f64>,
        #[command(flatten)]
        catenoid: CatenoidArgs,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        grad_tol: Option<f64>,
    },
    /// Run an experiment sweep.
    Experiment {
        /// removability, catenoid_reproduction or comparison; defaults to
        /// the kind in the config file.
        name: Option<String>,
        #[command(flatten)]
        density: DensityArgs,
        /// Comparison trials.
        #[arg(long)]
        trials: Option<usize>,
        /// Removability spike amplitude.
        #[arg(long, allow_negative_numbers = true)]
        spike: Option<f64>,
        /// Removability inner radii, comma separated.
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
        /// Catenoid-reproduction mesh levels.
        #[arg(long)]
        refinements: Option<usize>,
    },
}

struct Ui {
    quiet: bool,
}

impl Ui {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    cfg.quiet |= cli.quiet;
    experiments::init_threads_from_env()?;

    match cli.command {
        Command::Density { density, t_max, samples } => {
            if let Some(d) = density.spec()? {
                cfg.density = Some(d);
            }
            let v = cfg.validation.get_or_insert_with(Default::default);
            if let Some(t) = t_max {
                v.t_max = t;
            }
            if let Some(n) = samples {
                v.samples = n;
            }
            cmd_density(&cfg)
        }
        Command::Catenoid {
            density,
            catenoid,
            rho_min,
            rho_max,
            samples,
        } => {
            if let Some(d) = density.spec()? {
                cfg.density = Some(d);
            }
            let c = cfg.catenoid.get_or_insert_with(Default::default);
            catenoid.apply(&mut c.spec);
            c.rho_min = rho_min.or(c.rho_min);
            c.rho_max = rho_max.or(c.rho_max);
            if let Some(n) = samples {
                c.samples = n;
            }
            cmd_catenoid(&cfg)
        }
        Command::Solve {
            density,
            r_in,
            r_out,
            n_r,
            n_theta,
            boundary,
            q,
            c,
            catenoid,
            max_iter,
            grad_tol,
        } => {
            if let Some(d) = density.spec()? {
                cfg.density = Some(d);
            }
            let s = cfg.solve.get_or_insert_with(Default::default);
            s.mesh.r_in = r_in.unwrap_or(s.mesh.r_in);
            s.mesh.r_out = r_out.unwrap_or(s.mesh.r_out);
            s.mesh.n_r = n_r.unwrap_or(s.mesh.n_r);
            s.mesh.n_theta = n_theta.unwrap_or(s.mesh.n_theta);
            s.solver.max_iter = max_iter.unwrap_or(s.solver.max_iter);
            s.solver.grad_tol = grad_tol.unwrap_or(s.solver.grad_tol);
            match boundary {
                Some(BoundaryArg::Affine) if !matches!(s.boundary, BoundarySpec::Affine { .. }) => s.boundary = BoundarySpec::default(),
                Some(BoundaryArg::Catenoid) if !matches!(s.boundary, BoundarySpec::Catenoid { .. }) => {
                    s.boundary = BoundarySpec::Catenoid {
                        catenoid: CatenoidSpec::new(Sign::Minus, 1.0, 0.0, 2, Convention::Section2)?,
                    }
                }
                _ => {}
            }
            match &mut s.boundary {
                BoundarySpec::Affine { q: bq, c: bc } => {
                    if catenoid.any() {
                        return Err(CliError::Config("catenoid flags need --boundary catenoid".into()));
                    }
                    if let Some(q) = q {
                        *bq = [q[0], q[1]];
                    }
                    *bc = c.unwrap_or(*bc);
                }
                BoundarySpec::Catenoid { catenoid: spec } => {
                    if q.is_some() || c.is_some() {
                        return Err(CliError::Config("--q and --c need --boundary affine".into()));
                    }
                    catenoid.apply(spec);
                }
            }
            cmd_solve(&cfg)
        }
        Command::Experiment {
            name,
            density,
            trials,
            spike,
            epsilons,
            refinements,
        } => {
            let density_flag = density.spec()?;
            if density_flag.is_some() {
                cfg.density = density_flag;
            }
            let mut value = match (&name, cfg.experiment.take()) {
                (Some(n), Some(v)) if v.get("kind").and_then(|k| k.as_str()) == Some(n.as_str()) => v,
                (Some(n), _) => serde_json::to_value(ExperimentSection::default_for(n, cfg.density(), cfg.seed.unwrap_or(DEFAULT_SEED))?)
                    .expect("experiment serializes"),
                (None, Some(v)) => v,
                (None, None) => return Err(CliError::Config("name an experiment or give one in the config file".into())),
            };
            config::merge_shared(&mut value, cfg.density, cfg.seed)?;
            let mut section = config::parse_experiment(&value)?;
            // Flags win over the file.
            match &mut section {
                ExperimentSection::Removability(r) => {
                    r.density = density_flag.unwrap_or(r.density);
                    r.spike = spike.unwrap_or(r.spike);
                    if let Some(e) = epsilons {
                        r.epsilons = e;
                    }
                }
                ExperimentSection::CatenoidReproduction(r) => {
                    r.density = density_flag.unwrap_or(r.density);
                    r.refinements = refinements.unwrap_or(r.refinements);
                }
                ExperimentSection::Comparison(r) => {
                    r.density = density_flag.unwrap_or(r.density);
                    r.trials = trials.unwrap_or(r.trials);
                    r.seed = cli.seed.unwrap_or(r.seed);
                }
            }
            cfg.experiment = Some(serde_json::to_value(&section).expect("experiment serializes"));
            cmd_experiment(&cfg, &section)
        }
    }
}

fn echo_config(cfg: &RunConfig) -> Result<(), CliError> {
    write_json(cfg, &cfg.out_dir().join(CONFIG_ECHO))?;
    Ok(())
}

fn cmd_density(cfg: &RunConfig) -> Result<(), CliError> {
    let ui = Ui { quiet: cfg.quiet };
    let spec = cfg.density();
    let d = spec.build()?.normalize()?;
    let v = cfg.validation.clone().unwrap_or_default();
    if !(v.t_max > 0.0 && v.samples >= 2) {
        return Err(CliError::Config("validation needs t_max > 0 and at least 2 samples".into()));
    }
    let report = d.validate(&uniform_samples(v.t_max, v.samples));
    let growth = d.classify_growth();
    let out = cfg.out_dir();
    echo_config(cfg)?;
    write_json(
        &json!({
            "density": spec,
            "name": d.name(),
            "growth": growth,
            "validation": report,
            "passed": report.passed(),
        }),
        &out.join("density.json"),
    )?;
    ui.say(format!("density: {}", d.name()));
    ui.say(format!("growth: {growth:?}"));
    ui.say(format!("hypotheses: {}", if report.passed() { "pass" } else { "FAIL" }));
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Hypothesis(format!(
            "density {} violates the standing hypotheses: {report:?}",
            d.name()
        )))
    }
}

#[derive(Serialize)]
struct ProfileSummary<'a> {
    profile: &'a RadialProfile,
    neck_value: Height,
    ode_residual: f64,
}

fn cmd_catenoid(cfg: &RunConfig) -> Result<(), CliError> {
    let ui = Ui { quiet: cfg.quiet };
    let d = cfg.density().build()?.normalize()?;
    let c = cfg.catenoid.clone().unwrap_or_default();
    c.spec.validate()?;
    let neck = c.spec.neck_radius();
    let rho_min = c.rho_min.unwrap_or(1.01 * neck);
    let rho_max = c.rho_max.unwrap_or(5.0 * neck);
    if rho_min.is_nan() || rho_min <= neck {
        return Err(CliError::Domain(format!(
            "rho_min = {rho_min} does not lie outside the neck radius {neck}"
        )));
    }
    let profile = RadialProfile::generate(&d, &c.spec, rho_min, rho_max, c.samples)?;
    let residual = ode_residual(&d, &profile);
    let neck_value = neck_limit(&d, &c.spec)?;

    let out = cfg.out_dir();
    echo_config(cfg)?;
    let mut csv = Vec::new();
    profile.write_csv(&mut csv).expect("writing to memory");
    write_text(&out.join("profile.csv"), &String::from_utf8(csv).expect("ascii csv"))?;
    write_json(
        &ProfileSummary {
            profile: &profile,
            neck_value,
            ode_residual: residual,
        },
        &out.join("profile.json"),
    )?;
    ui.say(format!("neck radius: {neck}"));
    match neck_value {
        Height::Finite(v) => ui.say(format!("value at the neck: {v} (finite limit)")),
        Height::Unbounded { positive } => ui.say(format!(
            "value at the neck: {}inf (the profile is unbounded as rho -> {neck}+)",
            if positive { "+" } else { "-" }
        )),
    }
    ui.say(format!("samples: {}", profile.samples.len()));
    ui.say(format!("ode residual: {residual:e}"));
    Ok(())
}

fn cmd_solve(cfg: &RunConfig) -> Result<(), CliError> {
    let ui = Ui { quiet: cfg.quiet };
    let d = cfg.density().build()?.normalize()?;
    let s = cfg.solve.clone().unwrap_or_default();
    let mesh = Arc::new(build_polar_mesh(s.mesh.r_in, s.mesh.r_out, s.mesh.n_r, s.mesh.n_theta)?);

    let exact: Vec<f64> = match &s.boundary {
        BoundarySpec::Affine { q, c } => mesh.nodes.iter().map(|p| c + q[0] * p[0] + q[1] * p[1]).collect(),
        BoundarySpec::Catenoid { catenoid } => {
            catenoid.validate()?;
            if catenoid.dim_n != 2 {
                return Err(CliError::Config("planar solves need n = 2".into()));
            }
            let ring: Vec<f64> = mesh
                .radii
                .iter()
                .map(|&r| profile_value(&d, catenoid, r).map(Height::to_f64))
                .collect::<Result<_, _>>()?;
            (0..mesh.node_count()).map(|i| ring[mesh.ring_position(i).0]).collect()
        }
    };
    let mut data = BoundaryData::new();
    for i in mesh.boundary_nodes() {
        data.insert(i, exact[i]);
    }

    let out = cfg.out_dir();
    echo_config(cfg)?;
    let (solution, converged) = match solve_dirichlet(&d, &mesh, &data, &s.solver) {
        Ok(sol) => (sol, true),
        Err(SolverError::NonConvergence(sol)) => (*sol, false),
        Err(e) => return Err(e.into()),
    };
    let max_error = solution.values.iter().zip(&exact).map(|(u, e)| (u - e).abs()).fold(0.0, f64::max);

    let mut csv = Vec::new();
    solution.write_csv(&mut csv).expect("writing to memory");
    write_text(&out.join("solution.csv"), &String::from_utf8(csv).expect("ascii csv"))?;
    write_json(&solution.diagnostics(), &out.join("diagnostics.json"))?;
    write_json(
        &json!({
            "boundary": s.boundary,
            "diagnostics": solution.diagnostics(),
            "max_error_vs_exact": max_error,
            "nodes": mesh.node_count(),
        }),
        &out.join("solve.json"),
    )?;
    ui.say(format!(
        "{} after {} iterations, energy {:.12e}, gradient norm {:.3e}",
        if converged { "converged" } else { "NOT converged" },
        solution.iterations,
        solution.energy,
        solution.grad_norm
    ));
    ui.say(format!("max nodal error vs exact data: {max_error:.3e}"));
    if converged {
        Ok(())
    } else {
        Err(CliError::NonConvergence(format!(
            "gradient norm {:.3e} after {} iterations",
            solution.grad_norm, solution.iterations
        )))
    }
}

fn cmd_experiment(cfg: &RunConfig, section: &ExperimentSection) -> Result<(), CliError> {
    let ui = Ui { quiet: cfg.quiet };
    let out = cfg.out_dir();
    echo_config(cfg)?;
    let report: ExperimentReport = match section {
        ExperimentSection::Removability(c) => experiments::run_removability(c)?,
        ExperimentSection::CatenoidReproduction(c) => experiments::run_catenoid_reproduction(c)?,
        ExperimentSection::Comparison(c) => experiments::run_comparison_suite(c)?,
    };
    let path = out.join(format!("{}.json", section.name()));
    write_report(&report, &path)?;
    summarize(&ui, section.name(), &report, &path);
    if !report.complete {
        return Err(CliError::NonConvergence(
            "some solves did not converge; the report is incomplete".into(),
        ));
    }
    if !report.passed() {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        return Err(CliError::Hypothesis(format!("failed checks: {}", failed.join(", "))));
    }
    Ok(())
}

fn summarize(ui: &Ui, name: &str, report: &ExperimentReport, path: &Path) {
    ui.say(format!("{name}: {} records -> {}", report.sweep.len(), path.display()));
    for c in &report.checks {
        ui.say(format!("  [{}] {}", if c.passed { "pass" } else { "FAIL" }, c.name));
    }
    if !report.convergence_orders.is_empty() {
        let orders: Vec<String> = report.convergence_orders.iter().map(|p| format!("{p:.3}")).collect();
        ui.say(format!("  observed orders: {}", orders.join(", ")));
    }
    if !report.complete {
        ui.say("  report incomplete: some solves did not converge");
    }
}
