//! Numerical laboratory for linear-growth variational problems: densities,
//! generalized catenoid barriers, a finite-element energy minimizer on
//! polar meshes, and removability experiments built on top of them.

// Comparisons like `!(x > 0.0)` are written to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod banded;
pub mod catenoid;
pub mod density;
pub mod experiments;
pub mod mesh;
pub mod quadrature;
pub mod report;
pub mod solver;

pub use catenoid::{CatenoidError, CatenoidSpec, Convention, Height, RadialProfile, Sign};
pub use density::{Density, DensityError, DensityKind, DensitySpec, Growth, ValidationReport};
pub use experiments::{
    run_catenoid_reproduction, run_comparison_suite, run_removability, CatenoidReproductionConfig, ComparisonConfig, ExperimentError,
    ExperimentReport, OuterData, RemovabilityConfig,
};
pub use mesh::{build_polar_mesh, BoundaryTag, PolarMesh};
pub use solver::{solve_dirichlet, BoundaryData, DiscreteSolution, SolverError, SolverOptions};
