//! The run configuration: one JSON file shared by all subcommands, with
//! command-line flags layered on top.

use std::path::{Path, PathBuf};

use lingrowth::experiments::{CatenoidReproductionConfig, ComparisonConfig, MeshResolution, OuterData, RemovabilityConfig};
use lingrowth::{CatenoidSpec, Convention, DensitySpec, Sign, SolverOptions};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

pub const DEFAULT_OUT: &str = "lingrowth-out";
pub const DEFAULT_SEED: u64 = 7;
pub const CONFIG_ECHO: &str = "config.json";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensitySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub quiet: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catenoid: Option<CatenoidSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveSection>,
    /// Kept as raw JSON until the shared density and seed are merged in.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Value>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn density(&self) -> DensitySpec {
        self.density.unwrap_or(DensitySpec::Area)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }
}

fn default_t_max() -> f64 {
    100.0
}

fn default_samples() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationSection {
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl Default for ValidationSection {
    fn default() -> Self {
        Self {
            t_max: default_t_max(),
            samples: default_samples(),
        }
    }
}

fn default_spec() -> CatenoidSpec {
    CatenoidSpec {
        sign: Sign::Plus,
        alpha: 1.0,
        offset_a: 0.0,
        dim_n: 2,
        convention: Convention::Section2,
    }
}

fn default_profile_samples() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatenoidSection {
    #[serde(default = "default_spec")]
    pub spec: CatenoidSpec,
    /// Defaults to `1.01` times the neck radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_min: Option<f64>,
    /// Defaults to `5` times the neck radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_max: Option<f64>,
    #[serde(default = "default_profile_samples")]
    pub samples: usize,
}

impl Default for CatenoidSection {
    fn default() -> Self {
        Self {
            spec: default_spec(),
            rho_min: None,
            rho_max: None,
            samples: default_profile_samples(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub r_in: f64,
    pub r_out: f64,
    pub n_r: usize,
    pub n_theta: usize,
}

impl Default for MeshSection {
    fn default() -> Self {
        Self {
            r_in: 1.5,
            r_out: 3.0,
            n_r: 16,
            n_theta: 64,
        }
    }
}

/// Dirichlet data of a single solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BoundarySpec {
    /// `c + q·x` on every boundary circle.
    Affine { q: [f64; 2], c: f64 },
    /// The catenoid profile on every boundary circle.
    Catenoid { catenoid: CatenoidSpec },
}

impl Default for BoundarySpec {
    fn default() -> Self {
        BoundarySpec::Affine { q: [1.0, 0.5], c: 0.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    #[serde(default)]
    pub mesh: MeshSection,
    #[serde(default)]
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub solver: SolverOptions,
}

/// An experiment, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentSection {
    Removability(RemovabilityConfig),
    CatenoidReproduction(CatenoidReproductionConfig),
    Comparison(ComparisonConfig),
}

impl ExperimentSection {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentSection::Removability(_) => "removability",
            ExperimentSection::CatenoidReproduction(_) => "catenoid_reproduction",
            ExperimentSection::Comparison(_) => "comparison",
        }
    }

    /// The built-in sweep of each kind.
    pub fn default_for(kind: &str, density: DensitySpec, seed: u64) -> Result<Self, CliError> {
        Ok(match kind {
            "removability" => ExperimentSection::Removability(RemovabilityConfig {
                density,
                outer_radius: 1.0,
                probe_radius: 0.5,
                epsilons: vec![0.2, 0.1, 0.05, 0.025],
                spike: 1.0,
                outer_data: OuterData::Affine { q: [0.0, 0.0], c: 0.25 },
                mesh: MeshResolution::default(),
                solver: SolverOptions::default(),
            }),
            "catenoid_reproduction" => ExperimentSection::CatenoidReproduction(CatenoidReproductionConfig {
                density,
                catenoid: CatenoidSpec {
                    sign: Sign::Minus,
                    ..default_spec()
                },
                r_in: 1.5,
                r_out: 3.0,
                n_r: 8,
                n_theta: 32,
                refinements: 3,
                solver: SolverOptions::default(),
            }),
            "comparison" => ExperimentSection::Comparison(ComparisonConfig::new(density, 20, seed)),
            other => return Err(CliError::Config(format!("unknown experiment kind {other:?}"))),
        })
    }
}

/// Fills `density` (and `seed` for seeded experiments) of an experiment
/// object from the shared values when the object does not set them.
pub fn merge_shared(experiment: &mut Value, density: Option<DensitySpec>, seed: Option<u64>) -> Result<(), CliError> {
    let obj: &mut Map<String, Value> = experiment
        .as_object_mut()
        .ok_or_else(|| CliError::Config("`experiment` must be a JSON object".into()))?;
    if let Some(d) = density {
        obj.entry("density")
            .or_insert_with(|| serde_json::to_value(d).expect("density serializes"));
    }
    if obj.get("kind").and_then(Value::as_str) == Some("comparison") {
        if let Some(s) = seed {
            obj.entry("seed").or_insert(Value::from(s));
        }
    }
    Ok(())
}

pub fn parse_experiment(experiment: &Value) -> Result<ExperimentSection, CliError> {
    serde_json::from_value(experiment.clone()).map_err(|e| CliError::Config(format!("experiment: {e}")))
}
