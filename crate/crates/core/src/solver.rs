//! Dirichlet problems for `div[g'(|∇u|)∇u/|∇u|] = 0` by direct minimization
//! of the piecewise-affine energy `Σ_T |T| g(|∇u_T|)` with damped Newton.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::banded::SymmetricBanded;
use crate::density::Density;
use crate::mesh::{BoundaryTag, PolarMesh};
use crate::report::fmt_sig;

#[derive(Debug, Clone, Error)]
pub enum SolverError {
    #[error("boundary data missing for boundary node {0}")]
    MissingBoundary(usize),
    #[error("boundary data given for interior node {0}")]
    NotBoundary(usize),
    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("initial guess has {got} values, mesh has {expected} nodes")]
    InitialGuessSize { got: usize, expected: usize },
    #[error("solutions live on different meshes")]
    MeshMismatch,
    #[error("no convergence after {} iterations (gradient norm {:.3e})", .0.iterations, .0.grad_norm)]
    NonConvergence(Box<DiscreteSolution>),
}

/// Starting point of the Newton iteration.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum InitialGuess {
    /// Discrete harmonic extension of the boundary data, i.e. the minimizer
    /// of the energy linearized at zero gradient.
    #[default]
    Harmonic,
    /// Zero at every interior node.
    Zero,
    /// Interior values taken from the given nodal vector.
    Values(Vec<f64>),
}

/// Solver options; the config-file keys are `max_iter`, `grad_tol`,
/// `armijo_c` and `armijo_factor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub max_iter: usize,
    /// Converged when the interior gradient norm is below
    /// `grad_tol·(1 + |energy|)`.
    pub grad_tol: f64,
    pub armijo_c: f64,
    pub armijo_factor: f64,
    /// Relative energy change below which a step is in the roundoff regime.
    pub stall_tol: f64,
    #[serde(skip)]
    pub initial: InitialGuess,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            grad_tol: 1e-10,
            armijo_c: 1e-4,
            armijo_factor: 0.5,
            stall_tol: 1e-14,
            initial: InitialGuess::Harmonic,
        }
    }
}

/// Dirichlet values keyed by boundary node.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundaryData {
    values: BTreeMap<usize, f64>,
}

impl BoundaryData {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, node: usize, value: f64) {
        self.values.insert(node, value);
    }

    pub fn get(&self, node: usize) -> Option<f64> {
        self.values.get(&node).copied()
    }

    /// Samples `f(tag, point)` at every boundary node.
    pub fn from_fn<F>(mesh: &PolarMesh, mut f: F) -> Self
    where
        F: FnMut(BoundaryTag, [f64; 2]) -> f64,
    {
        let values = mesh
            .boundary_nodes()
            .map(|i| (i, f(mesh.boundary_tags[i], mesh.nodes[i])))
            .collect();
        Self { values }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().map(|(&k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Nodal values on a mesh with the diagnostics of the solve that produced
/// them.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSolution {
    pub mesh: Arc<PolarMesh>,
    pub values: Vec<f64>,
    pub energy: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Energy of every accepted iterate, the initial guess first.
    pub energy_history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub energy: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl DiscreteSolution {
    pub fn diagnostics(&self) -> Diagnostics {
        Diagnostics {
            energy: self.energy,
            grad_norm: self.grad_norm,
            iterations: self.iterations,
            converged: self.converged,
        }
    }

    /// CSV with header `node,x,y,value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "node,x,y,value")?;
        for (i, (p, v)) in self.mesh.nodes.iter().zip(&self.values).enumerate() {
            writeln!(out, "{i},{},{},{}", fmt_sig(p[0]), fmt_sig(p[1]), fmt_sig(*v))?;
        }
        Ok(())
    }
}

/// Per-triangle geometry: area and the constant gradients of the three
/// nodal basis functions.
#[derive(Debug, Clone, Copy)]
struct Element {
    nodes: [usize; 3],
    area: f64,
    grads: [[f64; 2]; 3],
}

fn elements(mesh: &PolarMesh) -> Vec<Element> {
    mesh.triangles
        .iter()
        .map(|&nodes| {
            let [a, b, c] = nodes.map(|i| mesh.nodes[i]);
            let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
            // ∇φ_i is the rotated opposite edge over twice the area.
            let edge = |p: [f64; 2], q: [f64; 2]| [(p[1] - q[1]) / det, (q[0] - p[0]) / det];
            Element {
                nodes,
                area: 0.5 * det,
                grads: [edge(b, c), edge(c, a), edge(a, b)],
            }
        })
        .collect()
}

impl Element {
    #[inline]
    fn gradient(&self, u: &[f64]) -> [f64; 2] {
        let mut p = [0.0, 0.0];
        for (k, &i) in self.nodes.iter().enumerate() {
            p[0] += u[i] * self.grads[k][0];
            p[1] += u[i] * self.grads[k][1];
        }
        p
    }
}

/// Discrete energy `Σ_T |T| g(|∇u_T|)`.
pub fn energy(d: &Density, mesh: &PolarMesh, u: &[f64]) -> f64 {
    assert_eq!(u.len(), mesh.node_count(), "one value per node");
    elements(mesh).iter().map(|e| e.area * d.g(norm2(e.gradient(u)))).sum()
}

#[inline]
fn norm2(p: [f64; 2]) -> f64 {
    p[0].hypot(p[1])
}

/// Interior nodes in increasing index order and the inverse map.
struct Unknowns {
    free: Vec<usize>,
    slot: Vec<Option<usize>>,
    bandwidth: usize,
}

impl Unknowns {
    fn new(mesh: &PolarMesh) -> Self {
        let mut slot = vec![None; mesh.node_count()];
        let free: Vec<usize> = mesh.interior_nodes().collect();
        for (k, &i) in free.iter().enumerate() {
            slot[i] = Some(k);
        }
        let mut bandwidth = 0;
        for t in &mesh.triangles {
            let idx: Vec<usize> = t.iter().filter_map(|&i| slot[i]).collect();
            if let (Some(lo), Some(hi)) = (idx.iter().min(), idx.iter().max()) {
                bandwidth = bandwidth.max(hi - lo);
            }
        }
        Self { free, slot, bandwidth }
    }
}

struct Problem<'a> {
    density: &'a Density,
    elements: Vec<Element>,
    unknowns: Unknowns,
}

impl<'a> Problem<'a> {
    fn energy(&self, u: &[f64]) -> f64 {
        self.elements.iter().map(|e| e.area * self.density.g(norm2(e.gradient(u)))).sum()
    }

    /// Energy and its gradient with respect to the interior values.
    fn energy_gradient(&self, u: &[f64]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.unknowns.free.len()];
        let mut total = 0.0;
        for e in &self.elements {
            let p = e.gradient(u);
            let (g, flux) = {
                let (g, f, _) = self.density.local2(p);
                (g, f)
            };
            total += e.area * g;
            for (k, &i) in e.nodes.iter().enumerate() {
                if let Some(s) = self.unknowns.slot[i] {
                    grad[s] += e.area * (flux[0] * e.grads[k][0] + flux[1] * e.grads[k][1]);
                }
            }
        }
        (total, grad)
    }

    /// Energy, gradient and Hessian restricted to the interior values.
    fn assemble(&self, u: &[f64], linearized: bool) -> (f64, Vec<f64>, SymmetricBanded) {
        let n = self.unknowns.free.len();
        let mut grad = vec![0.0; n];
        let mut hess = SymmetricBanded::zeros(n, self.unknowns.bandwidth);
        let mut total = 0.0;
        for e in &self.elements {
            let p = if linearized { [0.0, 0.0] } else { e.gradient(u) };
            let (g, flux, h) = self.density.local2(p);
            total += e.area * g;
            let slots = e.nodes.map(|i| self.unknowns.slot[i]);
            // H ∇φ_l for each local basis function.
            let hg: [[f64; 2]; 3] = e.grads.map(|q| [h[0][0] * q[0] + h[0][1] * q[1], h[1][0] * q[0] + h[1][1] * q[1]]);
            for k in 0..3 {
                let Some(sk) = slots[k] else { continue };
                grad[sk] += e.area * (flux[0] * e.grads[k][0] + flux[1] * e.grads[k][1]);
                for l in 0..=k {
                    let Some(sl) = slots[l] else { continue };
                    let v = e.area * (e.grads[k][0] * hg[l][0] + e.grads[k][1] * hg[l][1]);
                    if k == l {
                        hess.add(sk, sk, v);
                    } else {
                        hess.add(sk, sl, v);
                    }
                }
            }
        }
        (total, grad, hess)
    }

    /// Minimizer of the quadratic model at zero gradient: `K_II u_I = −K_IB u_B`.
    fn harmonic_extension(&self, u: &mut [f64]) {
        let mut base = u.to_vec();
        for &i in &self.unknowns.free {
            base[i] = 0.0;
        }
        // Gradient of the quadratic form at u_I = 0 is K_IB u_B.
        let (_, _, hess) = self.assemble(&base, true);
        let rhs = self.linear_rhs(&base);
        if let Ok(chol) = hess.cholesky() {
            let x = chol.solve(&rhs);
            for (k, &i) in self.unknowns.free.iter().enumerate() {
                u[i] = x[k];
            }
        }
    }

    /// `−K_IB u_B` for the zero-gradient stiffness matrix.
    fn linear_rhs(&self, base: &[f64]) -> Vec<f64> {
        let g2 = self.density.gsecond(0.0);
        let mut rhs = vec![0.0; self.unknowns.free.len()];
        for e in &self.elements {
            let p = e.gradient(base);
            for (k, &i) in e.nodes.iter().enumerate() {
                if let Some(s) = self.unknowns.slot[i] {
                    rhs[s] -= e.area * g2 * (p[0] * e.grads[k][0] + p[1] * e.grads[k][1]);
                }
            }
        }
        rhs
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Resolution of an energy evaluation: the largest rise a roundoff-regime
/// step may cause. Every other accepted step strictly decreases the energy.
pub fn energy_resolution(e: f64) -> f64 {
    16.0 * f64::EPSILON * (1.0 + e.abs())
}

/// Minimizes the discrete energy over the interior values with damped
/// Newton and Armijo backtracking, falling back to steepest descent when
/// the Newton direction is unavailable or not a descent direction.
pub fn solve_dirichlet(
    d: &Density,
    mesh: &Arc<PolarMesh>,
    boundary: &BoundaryData,
    opts: &SolverOptions,
) -> Result<DiscreteSolution, SolverError> {
    let n_nodes = mesh.node_count();
    let mut u = vec![0.0; n_nodes];
    for (i, v) in boundary.iter() {
        if i >= n_nodes || !mesh.is_boundary(i) {
            return Err(SolverError::NotBoundary(i));
        }
        if !v.is_finite() {
            return Err(SolverError::NonFinite(format!("boundary value at node {i}")));
        }
        u[i] = v;
    }
    if let Some(i) = mesh.boundary_nodes().find(|&i| boundary.get(i).is_none()) {
        return Err(SolverError::MissingBoundary(i));
    }

    let problem = Problem {
        density: d,
        elements: elements(mesh),
        unknowns: Unknowns::new(mesh),
    };
    match &opts.initial {
        InitialGuess::Harmonic => problem.harmonic_extension(&mut u),
        InitialGuess::Zero => {}
        InitialGuess::Values(v) => {
            if v.len() != n_nodes {
                return Err(SolverError::InitialGuessSize {
                    got: v.len(),
                    expected: n_nodes,
                });
            }
            for &i in &problem.unknowns.free {
                u[i] = v[i];
            }
        }
    }

    let mut history = Vec::new();
    let mut iterations = 0;
    let mut roundoff_steps = 0;
    loop {
        let (e, grad, hess) = problem.assemble(&u, false);
        if !e.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(SolverError::NonFinite("energy or gradient".into()));
        }
        history.push(e);
        let grad_norm = norm(&grad);
        let tol = opts.grad_tol * (1.0 + e.abs());
        let converged = grad_norm <= tol;
        if converged || iterations >= opts.max_iter || roundoff_steps > 3 {
            let sol = DiscreteSolution {
                mesh: Arc::clone(mesh),
                values: u,
                energy: e,
                grad_norm,
                iterations,
                converged,
                energy_history: history,
            };
            return if converged {
                Ok(sol)
            } else {
                Err(SolverError::NonConvergence(Box::new(sol)))
            };
        }
        iterations += 1;

        let mut dir = match hess.cholesky() {
            Ok(chol) => chol.solve(&grad.iter().map(|g| -g).collect::<Vec<_>>()),
            Err(_) => grad.iter().map(|g| -g).collect(),
        };
        let mut slope = dot(&grad, &dir);
        if !(slope < 0.0) || dir.iter().any(|x| !x.is_finite()) {
            dir = grad.iter().map(|g| -g).collect();
            slope = -grad_norm * grad_norm;
        }

        let trial = |t: f64| {
            let mut v = u.clone();
            for (k, &i) in problem.unknowns.free.iter().enumerate() {
                v[i] += t * dir[k];
            }
            v
        };

        // Once the predicted decrease is below the resolution of the energy,
        // Armijo comparisons are meaningless: take the full step when it
        // reduces the gradient and changes the energy by roundoff at most.
        if -slope <= opts.stall_tol * (1.0 + e.abs()) {
            let candidate = trial(1.0);
            let (e_new, g_new) = problem.energy_gradient(&candidate);
            if e_new <= e + energy_resolution(e) && norm(&g_new) < grad_norm {
                u = candidate;
                roundoff_steps = 0;
            } else {
                roundoff_steps += 1;
            }
            continue;
        }

        let mut t = 1.0;
        loop {
            let candidate = trial(t);
            let e_new = problem.energy(&candidate);
            if e_new.is_finite() && e_new <= e + opts.armijo_c * t * slope {
                u = candidate;
                break;
            }
            t *= opts.armijo_factor;
            if t < 1e-20 {
                roundoff_steps += 1;
                break;
            }
        }
    }
}

/// Norm of the discrete Euler–Lagrange residual (energy gradient at the
/// interior nodes).
pub fn residual_el(d: &Density, mesh: &PolarMesh, values: &[f64]) -> f64 {
    let problem = Problem {
        density: d,
        elements: elements(mesh),
        unknowns: Unknowns::new(mesh),
    };
    norm(&problem.energy_gradient(values).1)
}

/// Outcome of a discrete comparison check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Comparison {
    /// `u ≤ v + M` failed on the boundary by `boundary_excess`; the
    /// principle says nothing.
    NotApplicable {
        boundary_excess: f64,
    },
    Checked {
        holds: bool,
        max_violation: f64,
    },
}

impl Comparison {
    pub fn holds(&self) -> Option<bool> {
        match self {
            Comparison::NotApplicable { .. } => None,
            Comparison::Checked { holds, .. } => Some(*holds),
        }
    }
}

/// Default tolerance `1e-8·(1 + |M|)` of [`check_comparison`].
pub fn default_comparison_tol(m: f64) -> f64 {
    1e-8 * (1.0 + m.abs())
}

/// If `u ≤ v + M` at every boundary node, reports the largest excess of
/// `u − v − M` over the interior nodes.
pub fn check_comparison(u: &DiscreteSolution, v: &DiscreteSolution, m: f64) -> Result<Comparison, SolverError> {
    check_comparison_with_tol(u, v, m, default_comparison_tol(m))
}

pub fn check_comparison_with_tol(u: &DiscreteSolution, v: &DiscreteSolution, m: f64, tol: f64) -> Result<Comparison, SolverError> {
    if !(Arc::ptr_eq(&u.mesh, &v.mesh) || same_mesh(&u.mesh, &v.mesh)) {
        return Err(SolverError::MeshMismatch);
    }
    compare_values(&u.mesh, &u.values, &v.values, m, tol)
}

/// [`check_comparison_with_tol`] on raw nodal vectors.
pub fn compare_values(mesh: &PolarMesh, u: &[f64], v: &[f64], m: f64, tol: f64) -> Result<Comparison, SolverError> {
    if u.len() != mesh.node_count() || v.len() != mesh.node_count() {
        return Err(SolverError::MeshMismatch);
    }
    let boundary_slack = 1e-14 * (1.0 + m.abs());
    let boundary_excess = mesh.boundary_nodes().map(|i| u[i] - v[i] - m).fold(f64::NEG_INFINITY, f64::max);
    if boundary_excess > boundary_slack {
        return Ok(Comparison::NotApplicable { boundary_excess });
    }
    let max_violation = mesh.interior_nodes().map(|i| u[i] - v[i] - m).fold(0.0, f64::max);
    Ok(Comparison::Checked {
        holds: max_violation <= tol,
        max_violation,
    })
}

fn same_mesh(a: &PolarMesh, b: &PolarMesh) -> bool {
    a.n_theta == b.n_theta && a.radii == b.radii
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_polar_mesh;

    fn annulus(n_r: usize, n_theta: usize) -> Arc<PolarMesh> {
        Arc::new(build_polar_mesh(0.5, 1.0, n_r, n_theta).unwrap())
    }

    #[test]
    fn energy_of_constant_and_linear_functions() {
        let d = Density::area();
        let mesh = annulus(4, 16);
        let area = mesh.area();
        let c = vec![3.0; mesh.node_count()];
        assert!((energy(&d, &mesh, &c) - area).abs() < 1e-14);
        let x: Vec<f64> = mesh.nodes.iter().map(|p| p[0]).collect();
        assert!((energy(&d, &mesh, &x) / area - 2f64.sqrt()).abs() < 1e-13);
        let mu = Density::mu(3.0).unwrap();
        assert!((energy(&mu, &mesh, &x) - mu.g(1.0) * area).abs() < 1e-13);
    }

    #[test]
    fn affine_data_is_reproduced() {
        let mesh = annulus(6, 16);
        for d in [Density::area(), Density::mu(2.0).unwrap()] {
            let f = |p: [f64; 2]| 0.4 + 0.8 * p[0] - 0.3 * p[1];
            let data = BoundaryData::from_fn(&mesh, |_, p| f(p));
            let sol = solve_dirichlet(&d, &mesh, &data, &SolverOptions::default()).unwrap();
            assert!(sol.converged);
            for (i, p) in mesh.nodes.iter().enumerate() {
                assert!((sol.values[i] - f(*p)).abs() < 1e-9);
            }
            assert!(residual_el(&d, &mesh, &sol.values) <= 1e-12);
        }
    }

    #[test]
    fn constant_data_gives_constant_solution() {
        let d = Density::mu(3.0).unwrap();
        let mesh = Arc::new(build_polar_mesh(0.0, 1.0, 5, 12).unwrap());
        let data = BoundaryData::from_fn(&mesh, |_, _| -2.5);
        let sol = solve_dirichlet(&d, &mesh, &data, &SolverOptions::default()).unwrap();
        assert!(sol.values.iter().all(|v| (v + 2.5).abs() < 1e-12));
        assert!((sol.energy - d.g(0.0) * mesh.area()).abs() < 1e-14);
    }

    #[test]
    fn missing_and_misplaced_boundary_data() {
        let d = Density::area();
        let mesh = annulus(4, 8);
        let mut data = BoundaryData::from_fn(&mesh, |_, _| 0.0);
        data.values.remove(&0);
        assert!(matches!(
            solve_dirichlet(&d, &mesh, &data, &SolverOptions::default()),
            Err(SolverError::MissingBoundary(0))
        ));
        let mut data = BoundaryData::from_fn(&mesh, |_, _| 0.0);
        data.insert(10, 1.0);
        assert!(matches!(
            solve_dirichlet(&d, &mesh, &data, &SolverOptions::default()),
            Err(SolverError::NotBoundary(10))
        ));
        let data = BoundaryData::from_fn(&mesh, |_, _| f64::NAN);
        assert!(matches!(
            solve_dirichlet(&d, &mesh, &data, &SolverOptions::default()),
            Err(SolverError::NonFinite(_))
        ));
    }

    #[test]
    fn iteration_cap_reports_diagnostics() {
        let d = Density::area();
        let mesh = annulus(6, 16);
        let data = BoundaryData::from_fn(&mesh, |tag, p| if tag == BoundaryTag::Inner { 2.0 } else { p[0] * p[1] });
        let opts = SolverOptions {
            max_iter: 1,
            ..SolverOptions::default()
        };
        match solve_dirichlet(&d, &mesh, &data, &opts) {
            Err(SolverError::NonConvergence(sol)) => {
                assert_eq!(sol.iterations, 1);
                assert!(!sol.converged);
                assert!(sol.grad_norm > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn perturbation_increases_residual() {
        let d = Density::area();
        let mesh = annulus(6, 16);
        let data = BoundaryData::from_fn(&mesh, |tag, p| if tag == BoundaryTag::Inner { 0.3 } else { p[0] });
        let sol = solve_dirichlet(&d, &mesh, &data, &SolverOptions::default()).unwrap();
        let base = residual_el(&d, &mesh, &sol.values);
        assert!(base <= 1e-10 * (1.0 + sol.energy.abs()));
        let mut perturbed = sol.values.clone();
        let node = mesh.interior_nodes().nth(20).unwrap();
        perturbed[node] += 0.1;
        assert!(residual_el(&d, &mesh, &perturbed) > base);
        assert!(energy(&d, &mesh, &perturbed) > sol.energy);
    }

    #[test]
    fn comparison_reflexive_and_shifted() {
        let d = Density::area();
        let mesh = annulus(5, 12);
        let f = |p: [f64; 2]| (3.0 * p[1].atan2(p[0])).sin() * 0.5;
        let u = solve_dirichlet(&d, &mesh, &BoundaryData::from_fn(&mesh, |_, p| f(p)), &SolverOptions::default()).unwrap();
        assert_eq!(
            check_comparison(&u, &u, 0.0).unwrap(),
            Comparison::Checked {
                holds: true,
                max_violation: 0.0
            }
        );
        let v = solve_dirichlet(
            &d,
            &mesh,
            &BoundaryData::from_fn(&mesh, |_, p| f(p) + 1.0),
            &SolverOptions::default(),
        )
        .unwrap();
        match check_comparison(&u, &v, -1.0).unwrap() {
            Comparison::Checked { holds, max_violation } => {
                assert!(holds);
                assert!(max_violation < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        // Boundary hypothesis fails: not a violation, just not applicable.
        assert!(matches!(check_comparison(&v, &u, 0.0).unwrap(), Comparison::NotApplicable { .. }));
        let other_mesh = annulus(6, 12);
        let w = solve_dirichlet(
            &d,
            &other_mesh,
            &BoundaryData::from_fn(&other_mesh, |_, p| f(p)),
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(matches!(check_comparison(&u, &w, 0.0), Err(SolverError::MeshMismatch)));
    }

    #[test]
    fn csv_and_diagnostics() {
        let d = Density::area();
        let mesh = annulus(3, 4);
        let sol = solve_dirichlet(&d, &mesh, &BoundaryData::from_fn(&mesh, |_, p| p[0]), &SolverOptions::default()).unwrap();
        let mut buf = Vec::new();
        sol.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("node,x,y,value\n0,"));
        assert_eq!(text.lines().count(), mesh.node_count() + 1);
        let json = serde_json::to_value(sol.diagnostics()).unwrap();
        assert!(json.get("grad_norm").is_some() && json.get("converged").is_some());
    }

    #[test]
    fn options_from_config_keys() {
        let o: SolverOptions = serde_json::from_str(r#"{"max_iter": 7, "armijo_c": 0.001}"#).unwrap();
        assert_eq!(o.max_iter, 7);
        assert_eq!(o.armijo_c, 0.001);
        assert_eq!(o.grad_tol, 1e-10);
    }
}
