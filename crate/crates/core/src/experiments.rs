//! Numerical experiments: removability sweeps on punctured disks, catenoid
//! reproduction under mesh refinement, and comparison-principle suites.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catenoid::{envelope_excess, neck_limit, profile_value, uniform_bound_case8, CatenoidError, CatenoidSpec, Convention, Sign};
use crate::density::{Density, DensityError, DensitySpec, Growth};
use crate::mesh::{build_polar_mesh, graded_radii, BoundaryTag, MeshError, PolarMesh};
use crate::report::{self, fmt_sig, ReportError};
use crate::solver::{compare_values, solve_dirichlet, BoundaryData, Comparison, Diagnostics, DiscreteSolution, SolverError, SolverOptions};

/// Factor of the `h²` discretization allowance added to continuum bounds.
pub const ALLOWANCE_FACTOR: f64 = 10.0;
/// Noise level tolerated when checking that deviations decrease.
pub const MONOTONE_NOISE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Catenoid(#[from] CatenoidError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Report(#[from] ReportError),
}

/// Environment variable capping the worker threads of experiment sweeps.
pub const THREADS_ENV: &str = "LINGROWTH_THREADS";

/// Sizes the global sweep thread pool from [`THREADS_ENV`] when it is set.
/// Returns the cap that was applied.
pub fn init_threads_from_env() -> Result<Option<usize>, ExperimentError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| ExperimentError::Config(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    // A pool built earlier in the process keeps its size; that is harmless.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(Some(n))
}

/// Discretization allowance `10·h²` added to continuum bounds.
pub fn allowance(h: f64) -> f64 {
    ALLOWANCE_FACTOR * h * h
}

/// Dirichlet data on the outer circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OuterData {
    /// `c + q·x`.
    Affine { q: [f64; 2], c: f64 },
    /// A catenoid profile, constant on the circle.
    Radial { catenoid: CatenoidSpec },
    /// Values at equally spaced angles starting at θ = 0, interpolated
    /// linearly and periodically.
    Samples { values: Vec<f64> },
}

type PointFn = Box<dyn Fn([f64; 2]) -> f64 + Send + Sync>;

impl OuterData {
    fn evaluator(&self, d: &Density, radius: f64) -> Result<PointFn, ExperimentError> {
        Ok(match self {
            OuterData::Affine { q, c } => {
                let (q, c) = (*q, *c);
                Box::new(move |p| c + q[0] * p[0] + q[1] * p[1])
            }
            OuterData::Radial { catenoid } => {
                let v = profile_value(d, catenoid, radius)?.finite().ok_or(CatenoidError::Unbounded)?;
                Box::new(move |_| v)
            }
            OuterData::Samples { values } => {
                if values.is_empty() {
                    return Err(ExperimentError::Config("outer data samples are empty".into()));
                }
                let values = values.clone();
                Box::new(move |p| periodic_interp(&values, p[1].atan2(p[0])))
            }
        })
    }
}

fn periodic_interp(values: &[f64], theta: f64) -> f64 {
    let n = values.len();
    let s = theta.rem_euclid(2.0 * PI) / (2.0 * PI) * n as f64;
    let j = (s.floor() as usize).min(n - 1);
    let w = s - j as f64;
    (1.0 - w) * values[j] + w * values[(j + 1) % n]
}

/// Resolution of the disk and annulus meshes of a removability sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshResolution {
    /// Rings of the reference disk; the annuli use spacing at most `R/n_r`.
    pub n_r: usize,
    pub n_theta: usize,
    /// Geometric growth of the ring spacing away from the inner circle;
    /// `None` gives uniform rings.
    #[serde(default)]
    pub grading_ratio: Option<f64>,
}

impl Default for MeshResolution {
    fn default() -> Self {
        Self {
            n_r: 32,
            n_theta: 128,
            grading_ratio: Some(1.2),
        }
    }
}

fn default_outer_radius() -> f64 {
    1.0
}

fn default_probe_radius() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovabilityConfig {
    pub density: DensitySpec,
    #[serde(default = "default_outer_radius")]
    pub outer_radius: f64,
    #[serde(default = "default_probe_radius")]
    pub probe_radius: f64,
    pub epsilons: Vec<f64>,
    /// Amplitude added to the reference values on the inner circle.
    pub spike: f64,
    pub outer_data: OuterData,
    #[serde(default)]
    pub mesh: MeshResolution,
    #[serde(default)]
    pub solver: SolverOptions,
}

impl RemovabilityConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let (r, p) = (self.outer_radius, self.probe_radius);
        if !(r.is_finite() && r > 0.0 && p > 0.0 && p < r) {
            return Err(ExperimentError::Config(format!("need 0 < probe radius ({p}) < outer radius ({r})")));
        }
        if self.epsilons.iter().any(|&e| !(e > 0.0 && e < p)) {
            return Err(ExperimentError::Config(format!(
                "every inner radius must lie in (0, probe radius = {p}), got {:?}",
                self.epsilons
            )));
        }
        if self.epsilons.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(ExperimentError::Config("inner radii must be strictly decreasing".into()));
        }
        if !self.spike.is_finite() {
            return Err(ExperimentError::Config("spike must be finite".into()));
        }
        if self.mesh.n_r < 3 || self.mesh.n_theta < 3 {
            return Err(ExperimentError::Config("mesh needs at least 3 rings and 3 sectors".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonRecord {
    pub epsilon: f64,
    /// Largest radial spacing of the annulus mesh.
    pub h: f64,
    pub deviation_at_probe: f64,
    /// `E(ε) = ∫_ρ^R (g')⁻¹(ε^{n−1}/t^{n−1}) dt` at the probe radius.
    pub envelope_value: f64,
    pub envelope_satisfied: bool,
    pub two_sided_bound_satisfied: bool,
    /// Infinite-integral densities only: `min − (1−|x|)(g')⁻¹(½) ≤ u ≤ max + (1−|x|)(g')⁻¹(½)`.
    pub uniform_bound_satisfied: Option<bool>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementRecord {
    pub n_r: usize,
    pub n_theta: usize,
    pub h: f64,
    pub max_error: f64,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub scenario: String,
    pub m: f64,
    pub applicable: bool,
    pub max_violation: f64,
    pub holds: bool,
}

/// Per-experiment records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "records", rename_all = "snake_case")]
pub enum Records {
    Removability(Vec<EpsilonRecord>),
    CatenoidReproduction(Vec<RefinementRecord>),
    Comparison(Vec<TrialRecord>),
}

impl Records {
    pub fn len(&self) -> usize {
        match self {
            Records::Removability(r) => r.len(),
            Records::CatenoidReproduction(r) => r.len(),
            Records::Comparison(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshSize {
    pub n_r: usize,
    pub n_theta: usize,
    pub nodes: usize,
}

impl MeshSize {
    fn of(mesh: &PolarMesh) -> Self {
        Self {
            n_r: mesh.n_r,
            n_theta: mesh.n_theta,
            nodes: mesh.node_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub density: String,
    pub growth: Growth,
    pub mesh_sizes: Vec<MeshSize>,
    pub seed: Option<u64>,
    /// The configuration the experiment ran with.
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub sweep: Records,
    pub reference: Option<Diagnostics>,
    pub convergence_orders: Vec<f64>,
    pub checks: Vec<Check>,
    /// False when some solve did not converge and its record is missing.
    pub complete: bool,
    pub metadata: Metadata,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.complete && self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<bool> {
        self.checks.iter().find(|c| c.name == name).map(|c| c.passed)
    }

    fn push_check(&mut self, name: &str, passed: bool) {
        self.checks.push(Check {
            name: name.to_owned(),
            passed,
        });
    }

    /// The report as it reads back from disk (floats at 12 digits).
    pub fn rounded(&self) -> Self {
        report::canonicalize(self).expect("reports serialize")
    }
}

fn empirical_orders(hs: &[f64], errors: &[f64]) -> Vec<f64> {
    hs.windows(2)
        .zip(errors.windows(2))
        .map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}

/// Maps `ε` to the annulus mesh of the sweep.
fn punctured_mesh(cfg: &RemovabilityConfig, eps: f64) -> Result<PolarMesh, MeshError> {
    let r = cfg.outer_radius;
    let h = r / cfg.mesh.n_r as f64;
    match cfg.mesh.grading_ratio {
        Some(ratio) => {
            let first = h * (eps / r).min(0.1);
            PolarMesh::from_radii(graded_radii(eps, r, first, ratio, h)?, cfg.mesh.n_theta)
        }
        None => {
            let rings = ((r - eps) / h).ceil().max(3.0) as usize;
            build_polar_mesh(eps, r, rings, cfg.mesh.n_theta)
        }
    }
}

/// Removability sweep: the reference minimizer `v` on the full disk is
/// compared with minimizers on `B_R ∖ B_ε` whose inner data is `v + δ`.
pub fn run_removability(cfg: &RemovabilityConfig) -> Result<ExperimentReport, ExperimentError> {
    cfg.validate()?;
    let d = cfg.density.build()?.normalize()?;
    let big_r = cfg.outer_radius;
    let probe = cfg.probe_radius;
    let outer = cfg.outer_data.evaluator(&d, big_r)?;

    let disk = Arc::new(build_polar_mesh(0.0, big_r, cfg.mesh.n_r, cfg.mesh.n_theta)?);
    let reference = solve_dirichlet(&d, &disk, &BoundaryData::from_fn(&disk, |_, p| outer(p)), &cfg.solver)?;
    let outer_values: Vec<f64> = disk.boundary_nodes().map(|i| reference.values[i]).collect();
    let max_outer = outer_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_outer = outer_values.iter().copied().fold(f64::INFINITY, f64::min);
    let case8 = d.classify_growth() == Growth::InfiniteIntegral && big_r == 1.0;
    let half_inverse = d.invert_gprime(0.5)?;

    let results: Vec<Result<(EpsilonRecord, MeshSize), ExperimentError>> = cfg
        .epsilons
        .par_iter()
        .map(|&eps| {
            let mesh = Arc::new(punctured_mesh(cfg, eps)?);
            let data = BoundaryData::from_fn(&mesh, |tag, p| match tag {
                BoundaryTag::Inner => disk.interpolate(&reference.values, p).expect("inner circle lies in the disk") + cfg.spike,
                _ => outer(p),
            });
            let sol = solve_dirichlet(&d, &mesh, &data, &cfg.solver)?;
            let h = mesh.radial_spacing();
            let allow = allowance(h);
            let envelope_value = envelope_excess(&d, eps, probe, big_r, 2)?;

            // Nodewise envelope: E depends on |x| only, so evaluate per ring.
            let mut ring_envelope = BTreeMap::new();
            let mut deviation: f64 = 0.0;
            let mut two_sided = true;
            let mut uniform = true;
            for i in 0..mesh.node_count() {
                let rho = mesh.node_radius(i);
                if rho < probe * (1.0 - 1e-12) {
                    continue;
                }
                let u = sol.values[i];
                let v = disk
                    .interpolate(&reference.values, mesh.nodes[i])
                    .expect("annulus lies in the disk");
                deviation = deviation.max((u - v).abs());

                let (k, _) = mesh.ring_position(i);
                let e_x = match ring_envelope.get(&k) {
                    Some(&e) => e,
                    None => {
                        let e = if rho >= big_r {
                            0.0
                        } else {
                            envelope_excess(&d, eps, rho.max(probe), big_r, 2)?
                        };
                        ring_envelope.insert(k, e);
                        e
                    }
                };
                if u > max_outer + e_x + allow || u < min_outer - e_x - allow {
                    two_sided = false;
                }
                if case8 && rho < 1.0 {
                    let upper = uniform_bound_case8(&d, max_outer, rho)?;
                    let lower = min_outer - (1.0 - rho) * half_inverse;
                    if u > upper + allow || u < lower - allow {
                        uniform = false;
                    }
                }
            }
            let record = EpsilonRecord {
                epsilon: eps,
                h,
                deviation_at_probe: deviation,
                envelope_value,
                envelope_satisfied: deviation <= envelope_value + allow,
                two_sided_bound_satisfied: two_sided,
                uniform_bound_satisfied: case8.then_some(uniform),
                diagnostics: sol.diagnostics(),
            };
            Ok((record, MeshSize::of(&mesh)))
        })
        .collect();

    let mut records = Vec::new();
    let mut mesh_sizes = vec![MeshSize::of(&disk)];
    let mut complete = true;
    for r in results {
        match r {
            Ok((rec, size)) => {
                records.push(rec);
                mesh_sizes.push(size);
            }
            Err(ExperimentError::Solver(SolverError::NonConvergence(_))) => complete = false,
            Err(e) => return Err(e),
        }
    }

    let deviations: Vec<f64> = records.iter().map(|r| r.deviation_at_probe).collect();
    let envelopes: Vec<f64> = records.iter().map(|r| r.envelope_value).collect();
    let epsilons: Vec<f64> = records.iter().map(|r| r.epsilon).collect();
    let mut report = ExperimentReport {
        convergence_orders: empirical_orders(&epsilons, &deviations),
        sweep: Records::Removability(records),
        reference: Some(reference.diagnostics()),
        checks: Vec::new(),
        complete,
        metadata: Metadata {
            density: d.name().to_owned(),
            growth: d.classify_growth(),
            mesh_sizes,
            seed: None,
            config: serde_json::to_value(cfg).expect("config serializes"),
        },
    };
    let Records::Removability(recs) = &report.sweep else {
        unreachable!()
    };
    let envelope_ok = recs.iter().all(|r| r.envelope_satisfied);
    let two_sided_ok = recs.iter().all(|r| r.two_sided_bound_satisfied);
    let uniform_ok = recs.iter().all(|r| r.uniform_bound_satisfied.unwrap_or(true));
    report.push_check("deviation_monotone", deviations.windows(2).all(|w| w[1] <= w[0] + MONOTONE_NOISE));
    report.push_check("deviation_within_envelope", envelope_ok);
    report.push_check("two_sided_envelope", two_sided_ok);
    report.push_check("envelope_decreasing", envelopes.windows(2).all(|w| w[1] < w[0]));
    if case8 {
        report.push_check("uniform_bound_case8", uniform_ok);
    }
    Ok(report)
}

fn default_refinements() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatenoidReproductionConfig {
    pub density: DensitySpec,
    pub catenoid: CatenoidSpec,
    pub r_in: f64,
    pub r_out: f64,
    /// Coarsest mesh; each level doubles both counts.
    pub n_r: usize,
    pub n_theta: usize,
    #[serde(default = "default_refinements")]
    pub refinements: usize,
    #[serde(default)]
    pub solver: SolverOptions,
}

/// Solves with exact catenoid data on both circles at `refinements` mesh
/// levels and records the nodal error and the observed order.
pub fn run_catenoid_reproduction(cfg: &CatenoidReproductionConfig) -> Result<ExperimentReport, ExperimentError> {
    let d = cfg.density.build()?.normalize()?;
    let spec = cfg.catenoid;
    spec.validate()?;
    if spec.dim_n != 2 {
        return Err(ExperimentError::Config("the planar solver needs n = 2".into()));
    }
    if !(cfg.r_in > spec.neck_radius() && cfg.r_out > cfg.r_in) {
        return Err(ExperimentError::Config(format!(
            "annulus ({}, {}) must lie outside the neck radius {}",
            cfg.r_in,
            cfg.r_out,
            spec.neck_radius()
        )));
    }
    if cfg.refinements == 0 {
        return Err(ExperimentError::Config("need at least one refinement level".into()));
    }

    let mut records = Vec::new();
    let mut complete = true;
    for level in 0..cfg.refinements {
        let scale = 1 << level;
        let mesh = Arc::new(build_polar_mesh(cfg.r_in, cfg.r_out, cfg.n_r * scale, cfg.n_theta * scale)?);
        let ring_values = ring_profile(&d, &spec, &mesh)?;
        let exact: Vec<f64> = (0..mesh.node_count()).map(|i| ring_values[mesh.ring_position(i).0]).collect();
        let data = BoundaryData::from_fn(&mesh, |_, _| 0.0);
        let data = data.iter().fold(BoundaryData::new(), |mut acc, (i, _)| {
            acc.insert(i, exact[i]);
            acc
        });
        let sol = match solve_dirichlet(&d, &mesh, &data, &cfg.solver) {
            Ok(s) => s,
            Err(SolverError::NonConvergence(_)) => {
                complete = false;
                break;
            }
            Err(e) => return Err(e.into()),
        };
        records.push(RefinementRecord {
            n_r: mesh.n_r,
            n_theta: mesh.n_theta,
            h: mesh.radial_spacing(),
            max_error: max_abs_diff(&sol.values, &exact),
            diagnostics: sol.diagnostics(),
        });
    }

    let hs: Vec<f64> = records.iter().map(|r| r.h).collect();
    let errors: Vec<f64> = records.iter().map(|r| r.max_error).collect();
    let orders = empirical_orders(&hs, &errors);
    let mesh_sizes = records
        .iter()
        .map(|r| MeshSize {
            n_r: r.n_r,
            n_theta: r.n_theta,
            nodes: (r.n_r + 1) * r.n_theta,
        })
        .collect();
    let mut report = ExperimentReport {
        sweep: Records::CatenoidReproduction(records),
        reference: None,
        convergence_orders: orders.clone(),
        checks: Vec::new(),
        complete,
        metadata: Metadata {
            density: d.name().to_owned(),
            growth: d.classify_growth(),
            mesh_sizes,
            seed: None,
            config: serde_json::to_value(cfg).expect("config serializes"),
        },
    };
    if !orders.is_empty() {
        report.push_check("order_at_least_1.8", orders.iter().all(|&p| p >= 1.8));
    }
    Ok(report)
}

/// Catenoid value on every ring of `mesh` (ring 0 is the disk center), the
/// neck limit for rings on or inside the neck.
fn ring_profile(d: &Density, spec: &CatenoidSpec, mesh: &PolarMesh) -> Result<Vec<f64>, CatenoidError> {
    let neck = spec.neck_radius();
    let at_neck = neck_limit(d, spec)?.to_f64();
    mesh.radii
        .iter()
        .map(|&r| {
            if r <= neck {
                Ok(at_neck)
            } else {
                Ok(profile_value(d, spec, r)?.to_f64())
            }
        })
        .collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn default_degree() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonConfig {
    pub density: DensitySpec,
    pub trials: usize,
    pub seed: u64,
    pub r_in: f64,
    pub r_out: f64,
    pub n_r: usize,
    pub n_theta: usize,
    /// Highest Fourier mode of the random boundary data.
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default)]
    pub solver: SolverOptions,
}

impl ComparisonConfig {
    pub fn new(density: DensitySpec, trials: usize, seed: u64) -> Self {
        Self {
            density,
            trials,
            seed,
            r_in: 0.5,
            r_out: 1.0,
            n_r: 16,
            n_theta: 48,
            degree: 4,
            solver: SolverOptions::default(),
        }
    }
}

/// Truncated Fourier series in the angle with coefficients in `[−1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl FourierSeries {
    pub fn random(rng: &mut impl Rng, degree: usize) -> Self {
        let cos = (0..=degree).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let sin = (0..=degree).map(|k| if k == 0 { 0.0 } else { rng.gen_range(-1.0..=1.0) }).collect();
        Self { cos, sin }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.cos
            .iter()
            .zip(&self.sin)
            .enumerate()
            .map(|(k, (a, b))| {
                let (s, c) = (k as f64 * theta).sin_cos();
                a * c + b * s
            })
            .sum()
    }
}

fn angle(p: [f64; 2]) -> f64 {
    p[1].atan2(p[0])
}

/// Random ordered-data trials for the discrete comparison principle, plus
/// the catenoid barrier scenario: the disk minimizer with outer data below
/// `M(R)` stays below `k⁻` with neck `r_in` and value `M(R)` on `|x| = R`.
pub fn run_comparison_suite(cfg: &ComparisonConfig) -> Result<ExperimentReport, ExperimentError> {
    if cfg.trials == 0 {
        return Err(ExperimentError::Config("need at least one trial".into()));
    }
    if !(cfg.r_in > 0.0 && cfg.r_out > cfg.r_in) {
        return Err(ExperimentError::Config("comparison suite needs an annulus".into()));
    }
    let d = cfg.density.build()?.normalize()?;
    let mesh = Arc::new(build_polar_mesh(cfg.r_in, cfg.r_out, cfg.n_r, cfg.n_theta)?);
    let h = mesh.radial_spacing();
    let tol = 1e-8 + allowance(h);

    // Draw all data up front so results do not depend on scheduling.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let draws: Vec<[FourierSeries; 4]> = (0..cfg.trials)
        .map(|_| std::array::from_fn(|_| FourierSeries::random(&mut rng, cfg.degree)))
        .collect();
    let barrier_series = FourierSeries::random(&mut rng, cfg.degree);

    let trial_results: Vec<Result<TrialRecord, ExperimentError>> = draws
        .par_iter()
        .enumerate()
        .map(|(trial, [u_in, u_out, v_in, v_out])| {
            let data = |inner: &FourierSeries, outer: &FourierSeries| {
                BoundaryData::from_fn(&mesh, |tag, p| match tag {
                    BoundaryTag::Inner => inner.eval(angle(p)),
                    _ => outer.eval(angle(p)),
                })
            };
            let (ud, vd) = (data(u_in, u_out), data(v_in, v_out));
            let m = ud
                .iter()
                .map(|(i, x)| x - vd.get(i).expect("same boundary nodes"))
                .fold(f64::NEG_INFINITY, f64::max);
            let u = solve_dirichlet(&d, &mesh, &ud, &cfg.solver)?;
            let v = solve_dirichlet(&d, &mesh, &vd, &cfg.solver)?;
            Ok(trial_record(
                trial,
                "ordered_pair",
                m,
                compare_values(&mesh, &u.values, &v.values, m, tol)?,
            ))
        })
        .collect();

    let mut records = Vec::new();
    let mut complete = true;
    for r in trial_results {
        match r {
            Ok(rec) => records.push(rec),
            Err(ExperimentError::Solver(SolverError::NonConvergence(_))) => complete = false,
            Err(e) => return Err(e),
        }
    }

    let pairs_ok = records.iter().all(|r| r.applicable && r.holds);
    let mut barrier_ok = true;
    if d.classify_growth() != Growth::InfiniteIntegral {
        let scenarios = [
            (
                "barrier_constant_outer",
                FourierSeries {
                    cos: vec![0.25],
                    sin: vec![0.0],
                },
            ),
            ("barrier_fourier_outer", barrier_series),
        ];
        for (name, series) in scenarios {
            match barrier_scenario(&d, cfg, &series) {
                Ok(rec) => {
                    barrier_ok &= rec.holds;
                    records.push(TrialRecord {
                        trial: records.len(),
                        scenario: name.to_owned(),
                        ..rec
                    });
                }
                Err(ExperimentError::Solver(SolverError::NonConvergence(_))) => complete = false,
                Err(e) => return Err(e),
            }
        }
    }

    let mut report = ExperimentReport {
        sweep: Records::Comparison(records),
        reference: None,
        convergence_orders: Vec::new(),
        checks: Vec::new(),
        complete,
        metadata: Metadata {
            density: d.name().to_owned(),
            growth: d.classify_growth(),
            mesh_sizes: vec![MeshSize::of(&mesh)],
            seed: Some(cfg.seed),
            config: serde_json::to_value(cfg).expect("config serializes"),
        },
    };
    report.push_check("ordered_pairs_hold", pairs_ok);
    if d.classify_growth() != Growth::InfiniteIntegral {
        report.push_check("catenoid_barrier_holds", barrier_ok);
    }
    Ok(report)
}

fn trial_record(trial: usize, scenario: &str, m: f64, outcome: Comparison) -> TrialRecord {
    let (applicable, holds, max_violation) = match outcome {
        Comparison::NotApplicable { boundary_excess } => (false, false, boundary_excess),
        Comparison::Checked { holds, max_violation } => (true, holds, max_violation),
    };
    TrialRecord {
        trial,
        scenario: scenario.to_owned(),
        m,
        applicable,
        max_violation,
        holds,
    }
}

/// Disk minimizer `u` with outer data `series`; barrier `k⁻_{α,a}` with
/// `α = r_in^{n−1}` and `a` chosen so that `k⁻ = M(R)` on `|x| = R`.
/// Checks `u ≤ k⁻` at every disk node with `|x| ≥ r_in`.
fn barrier_scenario(d: &Density, cfg: &ComparisonConfig, series: &FourierSeries) -> Result<TrialRecord, ExperimentError> {
    let rings = ((cfg.r_out / (cfg.r_out - cfg.r_in)) * cfg.n_r as f64).round() as usize;
    let disk = Arc::new(build_polar_mesh(0.0, cfg.r_out, rings.max(3), cfg.n_theta)?);
    let data = BoundaryData::from_fn(&disk, |_, p| series.eval(angle(p)));
    let m_r = data.iter().map(|(_, v)| v).fold(f64::NEG_INFINITY, f64::max);
    let u: DiscreteSolution = solve_dirichlet(d, &disk, &data, &cfg.solver)?;

    let plus = CatenoidSpec::new(Sign::Plus, cfg.r_in, 0.0, 2, Convention::Section2)?;
    let full_rise = profile_value(d, &plus, cfg.r_out)?.finite().ok_or(CatenoidError::Unbounded)?;
    let spec = CatenoidSpec::new(Sign::Minus, cfg.r_in, m_r + full_rise, 2, Convention::Section2)?;
    let barrier = ring_profile(d, &spec, &disk)?;

    let tol = 1e-8 + allowance(disk.radial_spacing());
    let mut max_violation = f64::NEG_INFINITY;
    for i in 0..disk.node_count() {
        if disk.node_radius(i) < cfg.r_in * (1.0 - 1e-12) {
            continue;
        }
        let k = barrier[disk.ring_position(i).0];
        max_violation = max_violation.max(u.values[i] - k);
    }
    Ok(TrialRecord {
        trial: 0,
        scenario: String::new(),
        m: m_r,
        applicable: true,
        max_violation,
        holds: max_violation <= tol,
    })
}

/// Writes `<path>` (canonical JSON) and a companion CSV with the records
/// next to it (`<path>` with extension `csv`).
pub fn write_report(report: &ExperimentReport, path: &Path) -> Result<PathBuf, ExperimentError> {
    report::write_json(report, path)?;
    let csv_path = path.with_extension("csv");
    let mut buf = Vec::new();
    write_records_csv(&report.sweep, &mut buf).expect("writing to memory");
    report::write_text(&csv_path, &String::from_utf8(buf).expect("ascii csv"))?;
    Ok(csv_path)
}

pub fn read_report(path: &Path) -> Result<ExperimentReport, ExperimentError> {
    Ok(report::read_json(path)?)
}

fn write_records_csv<W: Write>(records: &Records, mut out: W) -> std::io::Result<()> {
    match records {
        Records::Removability(rs) => {
            writeln!(
                out,
                "epsilon,h,deviation_at_probe,envelope_value,envelope_satisfied,two_sided_bound_satisfied"
            )?;
            for r in rs {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    fmt_sig(r.epsilon),
                    fmt_sig(r.h),
                    fmt_sig(r.deviation_at_probe),
                    fmt_sig(r.envelope_value),
                    r.envelope_satisfied,
                    r.two_sided_bound_satisfied
                )?;
            }
        }
        Records::CatenoidReproduction(rs) => {
            writeln!(out, "n_r,n_theta,h,max_error,iterations")?;
            for r in rs {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.n_r,
                    r.n_theta,
                    fmt_sig(r.h),
                    fmt_sig(r.max_error),
                    r.diagnostics.iterations
                )?;
            }
        }
        Records::Comparison(rs) => {
            writeln!(out, "trial,scenario,m,applicable,max_violation,holds")?;
            for r in rs {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    r.trial,
                    r.scenario,
                    fmt_sig(r.m),
                    r.applicable,
                    fmt_sig(r.max_violation),
                    r.holds
                )?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_removability(spike: f64) -> RemovabilityConfig {
        RemovabilityConfig {
            density: DensitySpec::Area,
            outer_radius: 1.0,
            probe_radius: 0.5,
            epsilons: vec![0.2, 0.1],
            spike,
            outer_data: OuterData::Affine { q: [0.3, -0.2], c: 0.1 },
            mesh: MeshResolution {
                n_r: 12,
                n_theta: 32,
                grading_ratio: Some(1.3),
            },
            solver: SolverOptions::default(),
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = small_removability(1.0);
        assert!(cfg.validate().is_ok());
        cfg.epsilons = vec![0.1, 0.2];
        assert!(cfg.validate().is_err());
        cfg.epsilons = vec![0.6];
        assert!(matches!(run_removability(&cfg), Err(ExperimentError::Config(_))));
        cfg.epsilons = vec![0.2];
        cfg.probe_radius = 1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn zero_spike_leaves_the_reference_unchanged() {
        let report = run_removability(&small_removability(0.0)).unwrap();
        let Records::Removability(recs) = &report.sweep else { panic!() };
        for r in recs {
            assert!(r.deviation_at_probe < 1e-9, "{}", r.deviation_at_probe);
        }
    }

    #[test]
    fn periodic_sample_interpolation() {
        let v = [0.0, 1.0, 0.0, -1.0];
        assert_eq!(periodic_interp(&v, 0.0), 0.0);
        assert!((periodic_interp(&v, PI / 4.0) - 0.5).abs() < 1e-15);
        assert!((periodic_interp(&v, -PI / 4.0) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_level_has_no_order() {
        let cfg = CatenoidReproductionConfig {
            density: DensitySpec::Area,
            catenoid: CatenoidSpec::new(Sign::Minus, 1.0, 0.0, 2, Convention::Section2).unwrap(),
            r_in: 1.5,
            r_out: 3.0,
            n_r: 4,
            n_theta: 16,
            refinements: 1,
            solver: SolverOptions::default(),
        };
        let report = run_catenoid_reproduction(&cfg).unwrap();
        assert_eq!(report.sweep.len(), 1);
        assert!(report.convergence_orders.is_empty());
        let bad = CatenoidReproductionConfig { r_in: 0.9, ..cfg };
        assert!(matches!(run_catenoid_reproduction(&bad), Err(ExperimentError::Config(_))));
    }

    #[test]
    fn fourier_series_is_bounded_by_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = FourierSeries::random(&mut rng, 4);
        for k in 0..50 {
            assert!(s.eval(k as f64 * 0.37).abs() <= 9.0);
        }
    }
}
