//! Linear-growth energy densities `g` and the quantities derived from them.
//!
//! A [`Density`] evaluates `(g, g', g'')` on `[0, ∞)`. The Euler–Lagrange
//! operator only ever sees `G(p) = g(|p|)` through its flux [`Density::flux`]
//! and Hessian [`Density::hessian`]; the catenoid barriers additionally need
//! the inverse of `g'` ([`Density::invert_gprime`]) and the classification of
//! `∫ t g''(t) dt` ([`Density::classify_growth`]).

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::{integrate, QuadratureOptions};

/// Step of the central differences used by [`Density::validate`].
pub const FD_STEP: f64 = 1e-5;
/// Threshold on the derivative-consistency errors for a density to pass.
pub const DERIVATIVE_TOL: f64 = 1e-6;
/// Tolerance on `|g'(0)|`.
pub const ORIGIN_TOL: f64 = 1e-10;
/// Residual tolerance of the numerical inverse of `g'`.
pub const INVERSE_TOL: f64 = 1e-12;

const LIMIT_PROBES: [f64; 3] = [1e3, 1e4, 1e5];
const LIMIT_AGREEMENT: f64 = 1e-6;
const GROWTH_HORIZONS: [f64; 4] = [1e2, 1e3, 1e4, 1e5];
const CONVERGING_RATIO: f64 = 0.5;
const DIVERGING_RATIO: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DensityError {
    #[error("mu-family requires mu > 1, got {0}")]
    InvalidMu(f64),
    #[error("limit of g' at infinity is undetermined (estimates {estimates:?})")]
    UndeterminedLimit { estimates: Vec<f64> },
    #[error("limit of g' at infinity must be finite and positive, got {0}")]
    InvalidLimit(f64),
    #[error("g' does not take the value {y}; admissible range is [0, {limit})")]
    Domain { y: f64, limit: f64 },
}

/// Family a density belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityKind {
    Area,
    MuFamily(f64),
    Custom,
}

/// Whether `∫₀^∞ t g''(t) dt` converges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Growth {
    FiniteIntegral,
    InfiniteIntegral,
    Undetermined,
}

/// Config-file form of a built-in density: `{"kind": "area"}` or
/// `{"kind": "mu", "mu": 3.0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DensitySpec {
    Area,
    Mu { mu: f64 },
}

impl DensitySpec {
    pub fn build(&self) -> Result<Density, DensityError> {
        match *self {
            DensitySpec::Area => Ok(Density::area()),
            DensitySpec::Mu { mu } => Density::mu(mu),
        }
    }
}

type Triple = (f64, f64, f64);
type EvalFn = dyn Fn(f64) -> Triple + Send + Sync;

#[derive(Clone)]
enum Base {
    Area,
    Mu(f64),
    Custom(Arc<EvalFn>),
}

/// An evaluatable density `g` with `g'(0) = 0`, `g'' > 0` and bounded `g'`.
///
/// Values are immutable; cloning shares the underlying closure.
#[derive(Clone)]
pub struct Density {
    name: String,
    base: Base,
    scale: f64,
    gprime_inf: Option<f64>,
    growth: Growth,
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Density")
            .field("name", &self.name)
            .field("kind", &self.kind())
            .field("scale", &self.scale)
            .field("gprime_inf", &self.gprime_inf)
            .field("growth", &self.growth)
            .finish()
    }
}

impl Density {
    /// The minimal-surface density `g(t) = √(1+t²)`.
    pub fn area() -> Self {
        Self {
            name: "area".into(),
            base: Base::Area,
            scale: 1.0,
            gprime_inf: Some(1.0),
            growth: Growth::FiniteIntegral,
        }
    }

    /// The family with `g''(t) = (μ−1)(1+t)^{−μ}`, `g(0) = g'(0) = 0`.
    pub fn mu(mu: f64) -> Result<Self, DensityError> {
        if !(mu.is_finite() && mu > 1.0) {
            return Err(DensityError::InvalidMu(mu));
        }
        Ok(Self {
            name: format!("mu={mu}"),
            base: Base::Mu(mu),
            scale: 1.0,
            gprime_inf: Some(1.0),
            growth: if mu > 2.0 {
                Growth::FiniteIntegral
            } else {
                Growth::InfiniteIntegral
            },
        })
    }

    /// A user density given by its exact `(g, g', g'')`. The limit of `g'` is
    /// estimated by [`Density::normalize`] and the growth class numerically.
    pub fn custom<F>(name: impl Into<String>, eval: F) -> Self
    where
        F: Fn(f64) -> Triple + Send + Sync + 'static,
    {
        let mut d = Self {
            name: name.into(),
            base: Base::Custom(Arc::new(eval)),
            scale: 1.0,
            gprime_inf: None,
            growth: Growth::Undetermined,
        };
        d.growth = d.classify_growth_numerically();
        d
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> DensityKind {
        match self.base {
            Base::Area => DensityKind::Area,
            Base::Mu(mu) => DensityKind::MuFamily(mu),
            Base::Custom(_) => DensityKind::Custom,
        }
    }

    /// `lim g'(t)` as `t → ∞`, when known.
    pub fn gprime_inf(&self) -> Option<f64> {
        self.gprime_inf
    }

    pub fn growth(&self) -> Growth {
        self.growth
    }

    /// Exponent `μ` of a known power-law decay `g''(t) ~ t^{−μ}`.
    pub fn tail_exponent(&self) -> Option<f64> {
        match self.base {
            Base::Area => Some(3.0),
            Base::Mu(mu) => Some(mu),
            Base::Custom(_) => None,
        }
    }

    pub fn has_analytic_inverse(&self) -> bool {
        !matches!(self.base, Base::Custom(_))
    }

    /// `(g(t), g'(t), g''(t))` for `t ≥ 0`.
    pub fn eval(&self, t: f64) -> Triple {
        let (g, g1, g2) = match &self.base {
            Base::Area => {
                let root = 1f64.hypot(t);
                (root, t / root, 1.0 / (root * root * root))
            }
            Base::Mu(mu) => {
                let mu = *mu;
                let lp = t.ln_1p();
                let g1 = -((1.0 - mu) * lp).exp_m1();
                let g2 = (mu - 1.0) * (-mu * lp).exp();
                let g = if mu == 2.0 {
                    t - lp
                } else {
                    t - ((2.0 - mu) * lp).exp_m1() / (2.0 - mu)
                };
                (g, g1, g2)
            }
            Base::Custom(f) => f(t),
        };
        (self.scale * g, self.scale * g1, self.scale * g2)
    }

    pub fn g(&self, t: f64) -> f64 {
        self.eval(t).0
    }

    pub fn gprime(&self, t: f64) -> f64 {
        self.eval(t).1
    }

    pub fn gsecond(&self, t: f64) -> f64 {
        self.eval(t).2
    }

    /// Closed-form `(g')⁻¹(y)`, if the family has one.
    pub fn analytic_inverse(&self, y: f64) -> Option<f64> {
        let y = y / self.scale;
        match self.base {
            Base::Area => Some(y / ((1.0 - y) * (1.0 + y)).sqrt()),
            Base::Mu(mu) => Some((-(-y).ln_1p() / (mu - 1.0)).exp_m1()),
            Base::Custom(_) => None,
        }
    }

    /// Solves `g'(t) = y` for `t ≥ 0`.
    ///
    /// Uses the closed form when available; otherwise brackets the root by
    /// doubling from `t = 1` and refines with safeguarded Newton steps on
    /// the exact `g''`.
    pub fn invert_gprime(&self, y: f64) -> Result<f64, DensityError> {
        let limit = self.gprime_inf.unwrap_or(f64::INFINITY);
        if !(y >= 0.0 && y < limit) {
            return Err(DensityError::Domain { y, limit });
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        if let Some(t) = self.analytic_inverse(y) {
            return Ok(t);
        }

        let tol = INVERSE_TOL * y.max(1.0);
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.gprime(hi) <= y {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(DensityError::Domain { y, limit });
            }
        }

        let mut t = 0.5 * (lo + hi);
        for _ in 0..200 {
            let (_, g1, g2) = self.eval(t);
            let resid = g1 - y;
            if resid > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let newton = t - resid / g2;
            let next = if newton > lo && newton < hi && g2 > 0.0 {
                newton
            } else {
                0.5 * (lo + hi)
            };
            let step = (next - t).abs();
            t = next;
            if (resid.abs() <= tol && step <= 4.0 * f64::EPSILON * t) || hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        Ok(t)
    }

    /// Flux `DG(p) = g'(|p|) p/|p|`, zero at `p = 0`.
    pub fn flux(&self, p: &DVector<f64>) -> DVector<f64> {
        let norm = p.norm();
        if norm == 0.0 {
            return DVector::zeros(p.len());
        }
        p * (self.gprime(norm) / norm)
    }

    /// `D²G(p) = g''(|p|) ν⊗ν + (g'(|p|)/|p|)(Id − ν⊗ν)` with `ν = p/|p|`,
    /// and `g''(0) Id` at the origin.
    pub fn hessian(&self, p: &DVector<f64>) -> DMatrix<f64> {
        let n = p.len();
        let norm = p.norm();
        if norm == 0.0 {
            return DMatrix::identity(n, n) * self.gsecond(0.0);
        }
        let (_, g1, g2) = self.eval(norm);
        let nu = p / norm;
        let radial = &nu * nu.transpose();
        let tangential = DMatrix::identity(n, n) - &radial;
        radial * g2 + tangential * (g1 / norm)
    }

    /// Planar flux, used by the finite-element assembly.
    #[inline]
    pub fn flux2(&self, p: [f64; 2]) -> [f64; 2] {
        let norm = p[0].hypot(p[1]);
        if norm == 0.0 {
            return [0.0, 0.0];
        }
        let s = self.gprime(norm) / norm;
        [s * p[0], s * p[1]]
    }

    /// Planar energy value, flux and Hessian in one evaluation.
    #[inline]
    pub fn local2(&self, p: [f64; 2]) -> (f64, [f64; 2], [[f64; 2]; 2]) {
        let norm = p[0].hypot(p[1]);
        let (g, g1, g2) = self.eval(norm);
        if norm == 0.0 {
            return (g, [0.0, 0.0], [[g2, 0.0], [0.0, g2]]);
        }
        let s = g1 / norm;
        let (n0, n1) = (p[0] / norm, p[1] / norm);
        let d = g2 - s;
        let h = [[s + d * n0 * n0, d * n0 * n1], [d * n0 * n1, s + d * n1 * n1]];
        (g, [s * p[0], s * p[1]], h)
    }

    /// Rescales `g` so that `g'(t) → 1` as `t → ∞`.
    ///
    /// Without a known limit, `g'` is probed at `t ∈ {10³, 10⁴, 10⁵}`; the
    /// last two probes must agree to `1e-6` and the limit is taken from the
    /// Aitken extrapolation of the three.
    pub fn normalize(&self) -> Result<Density, DensityError> {
        let limit = match self.gprime_inf {
            Some(l) => l,
            None => self.estimate_gprime_limit()?,
        };
        if !(limit.is_finite() && limit > 0.0) {
            return Err(DensityError::InvalidLimit(limit));
        }
        if limit == 1.0 {
            let mut d = self.clone();
            d.gprime_inf = Some(1.0);
            return Ok(d);
        }
        let mut d = self.clone();
        d.scale = self.scale / limit;
        d.gprime_inf = Some(1.0);
        Ok(d)
    }

    fn estimate_gprime_limit(&self) -> Result<f64, DensityError> {
        let e: Vec<f64> = LIMIT_PROBES.iter().map(|&t| self.gprime(t)).collect();
        let (d1, d2) = (e[1] - e[0], e[2] - e[1]);
        if !e.iter().all(|v| v.is_finite()) || d2.abs() > LIMIT_AGREEMENT * e[2].abs().max(1.0) {
            return Err(DensityError::UndeterminedLimit { estimates: e });
        }
        let denom = d1 - d2;
        let limit = if denom != 0.0 && (d2 / d1).abs() < 1.0 {
            e[2] + d2 * d2 / denom
        } else {
            e[2]
        };
        Ok(limit)
    }

    /// Growth class of `∫₀^∞ t g''(t) dt`: analytic for the built-in
    /// families, numerical for custom densities.
    pub fn classify_growth(&self) -> Growth {
        self.growth
    }

    /// Classifies from the increments of `I(T) = ∫₀^T t g''(t) dt` over
    /// `T ∈ {10², 10³, 10⁴, 10⁵}`: increments shrinking by a factor below
    /// `0.5` each decade mean convergence, increments that do not decay
    /// (ratio at least `0.9`) mean divergence.
    pub fn classify_growth_numerically(&self) -> Growth {
        let opts = QuadratureOptions {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_panels: 2000,
        };
        let integrand = |t: f64| t * self.gsecond(t);
        let mut prefix = match integrate(integrand, 0.0, GROWTH_HORIZONS[0], opts) {
            Ok(est) => est.value,
            Err(_) => return Growth::Undetermined,
        };
        let mut values = vec![prefix];
        for w in GROWTH_HORIZONS.windows(2) {
            match integrate(integrand, w[0], w[1], opts) {
                Ok(est) => prefix += est.value,
                Err(_) => return Growth::Undetermined,
            }
            values.push(prefix);
        }
        let increments: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
        if increments.iter().any(|&d| !(d > 0.0)) {
            return Growth::Undetermined;
        }
        let ratios: Vec<f64> = increments.windows(2).map(|w| w[1] / w[0]).collect();
        if ratios.iter().all(|&r| r < CONVERGING_RATIO) {
            Growth::FiniteIntegral
        } else if ratios.iter().all(|&r| r >= DIVERGING_RATIO) {
            Growth::InfiniteIntegral
        } else {
            Growth::Undetermined
        }
    }

    /// Checks the standing hypotheses on the sampled `t`-values. Violations
    /// are flagged in the report, never raised.
    pub fn validate(&self, samples: &[f64]) -> ValidationReport {
        let mut convexity_ok = true;
        let mut prev_slope = f64::NEG_INFINITY;
        let mut gprime_err: f64 = 0.0;
        let mut gsecond_err: f64 = 0.0;
        let limit = self.gprime_inf.unwrap_or(f64::INFINITY);

        // Central differences, switching to second-order forward differences
        // where the stencil would leave [0, ∞).
        let diff = |f: &dyn Fn(f64) -> f64, t: f64| {
            let h = FD_STEP;
            if t >= h {
                (f(t + h) - f(t - h)) / (2.0 * h)
            } else {
                (-3.0 * f(t) + 4.0 * f(t + h) - f(t + 2.0 * h)) / (2.0 * h)
            }
        };
        let g_fn = |t: f64| self.g(t);
        let g1_fn = |t: f64| self.gprime(t);

        for &t in samples {
            let (_, g1, g2) = self.eval(t);
            if !(g2 > 0.0) || !(g1 > prev_slope) || !(g1 < limit) {
                convexity_ok = false;
            }
            prev_slope = g1;

            let fd1 = diff(&g_fn, t);
            let fd2 = diff(&g1_fn, t);
            gprime_err = gprime_err.max((fd1 - g1).abs() / g1.abs().max(1.0));
            gsecond_err = gsecond_err.max((fd2 - g2).abs() / g2.abs().max(1.0));
        }

        let origin_ok = self.gprime(0.0).abs() <= ORIGIN_TOL;
        ValidationReport {
            linear_growth_bounds: LinearGrowthBounds::witness(self, samples),
            derivative_consistency: DerivativeConsistency {
                gprime: gprime_err,
                gsecond: gsecond_err,
            },
            convexity_ok,
            origin_ok,
        }
    }
}

/// Constants `a, b, A, B` with `a t − b ≤ g(t) ≤ A t + B` on the samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearGrowthBounds {
    pub a_est: f64,
    pub b_est: f64,
    #[serde(rename = "A_est")]
    pub upper_slope: f64,
    #[serde(rename = "B_est")]
    pub upper_offset: f64,
}

impl LinearGrowthBounds {
    fn witness(d: &Density, samples: &[f64]) -> Self {
        let t_max = samples.iter().copied().fold(0.0, f64::max);
        // Half the largest sampled slope from below; the limit of g' (or the
        // largest sampled slope) from above.
        let a_est = 0.5 * d.gprime(t_max);
        let upper_slope = d
            .gprime_inf
            .unwrap_or_else(|| samples.iter().map(|&t| d.gprime(t)).fold(f64::NEG_INFINITY, f64::max));
        let b_est = samples.iter().map(|&t| a_est * t - d.g(t)).fold(0.0, f64::max);
        let upper_offset = samples.iter().map(|&t| d.g(t) - upper_slope * t).fold(0.0, f64::max);
        Self {
            a_est,
            b_est,
            upper_slope,
            upper_offset,
        }
    }

    pub fn holds_on(&self, d: &Density, samples: &[f64]) -> bool {
        self.a_est > 0.0
            && self.upper_slope > 0.0
            && self.b_est >= 0.0
            && self.upper_offset >= 0.0
            && samples.iter().all(|&t| {
                let g = d.g(t);
                let slack = 1e-12 * g.abs().max(1.0);
                self.a_est * t - self.b_est <= g + slack && g <= self.upper_slope * t + self.upper_offset + slack
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeConsistency {
    pub gprime: f64,
    pub gsecond: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub linear_growth_bounds: LinearGrowthBounds,
    pub derivative_consistency: DerivativeConsistency,
    pub convexity_ok: bool,
    pub origin_ok: bool,
}

impl ValidationReport {
    /// Whether every hypothesis held on the sampled range.
    pub fn passed(&self) -> bool {
        let b = &self.linear_growth_bounds;
        self.convexity_ok
            && self.origin_ok
            && b.a_est > 0.0
            && b.upper_slope > 0.0
            && self.derivative_consistency.gprime <= DERIVATIVE_TOL
            && self.derivative_consistency.gsecond <= DERIVATIVE_TOL
    }
}

/// `n + 1` equally spaced samples on `[0, t_max]`.
pub fn uniform_samples(t_max: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| t_max * i as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn area_scaled(c: f64) -> Density {
        Density::custom("scaled-area", move |t: f64| {
            let r = 1f64.hypot(t);
            (c * r, c * t / r, c / (r * r * r))
        })
    }

    #[test]
    fn area_closed_forms() {
        let d = Density::area();
        assert_eq!(d.eval(0.0), (1.0, 0.0, 1.0));
        let (g, g1, g2) = d.eval(1.0);
        assert_relative_eq!(g, 2f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(g1, 1.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(g2, 2f64.powf(-1.5), epsilon = 1e-15);
        assert_relative_eq!(d.analytic_inverse(1.0 / 2f64.sqrt()).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn mu_family_closed_forms() {
        let d3 = Density::mu(3.0).unwrap();
        assert_relative_eq!(d3.invert_gprime(0.5).unwrap(), 2f64.sqrt() - 1.0, epsilon = 1e-14);

        let d2 = Density::mu(2.0).unwrap();
        let (g, g1, g2) = d2.eval(1.0);
        assert_relative_eq!(g, 1.0 - 2f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(g1, 0.5, epsilon = 1e-15);
        assert_relative_eq!(g2, 0.25, epsilon = 1e-15);
        assert_relative_eq!(d2.invert_gprime(0.5).unwrap(), 1.0, epsilon = 1e-14);

        for mu in [1.5, 2.0, 2.5, 3.0, 4.0] {
            let d = Density::mu(mu).unwrap();
            assert_eq!(d.eval(0.0), (0.0, 0.0, mu - 1.0));
        }
    }

    #[test]
    fn mu_at_most_one_is_rejected() {
        assert_eq!(Density::mu(1.0).unwrap_err(), DensityError::InvalidMu(1.0));
        assert!(Density::mu(0.5).is_err());
        assert!(Density::mu(f64::NAN).is_err());
    }

    #[test]
    fn validation_of_built_ins() {
        let samples = uniform_samples(100.0, 1000);
        let area = Density::area().validate(&samples);
        assert!(area.convexity_ok && area.origin_ok && area.passed());

        let d3 = Density::mu(3.0).unwrap();
        let rep = d3.validate(&samples);
        let b = rep.linear_growth_bounds;
        assert!(b.a_est > 0.0 && b.a_est <= 1.0);
        assert!(b.upper_slope > 0.0 && b.upper_slope <= 1.0);
        assert!(b.holds_on(&d3, &samples));
        // Brute-force check of the sandwich at every sample.
        for &t in &samples {
            let g = d3.g(t);
            assert!(b.a_est * t - b.b_est <= g + 1e-12);
            assert!(g <= b.upper_slope * t + b.upper_offset + 1e-12);
        }
        assert!(rep.derivative_consistency.gprime < 1e-6, "{:?}", rep.derivative_consistency);
        assert!(rep.derivative_consistency.gsecond < 1e-6);
    }

    #[test]
    fn shifted_origin_slope_is_flagged() {
        let d = Density::custom("shifted", |t: f64| {
            let r = 1f64.hypot(t);
            (r + 0.1 * t, t / r + 0.1, 1.0 / (r * r * r))
        });
        let rep = d.validate(&uniform_samples(100.0, 100));
        assert!(!rep.origin_ok);
        assert!(!rep.passed());
    }

    #[test]
    fn normalize_fixed_points_and_scaling() {
        let area = Density::area().normalize().unwrap();
        assert_eq!(area.eval(2.0), Density::area().eval(2.0));

        let d25 = Density::mu(2.5).unwrap().normalize().unwrap();
        assert_eq!(d25.eval(3.0), Density::mu(2.5).unwrap().eval(3.0));

        let doubled = area_scaled(2.0);
        assert!(doubled.gprime_inf().is_none());
        let n = doubled.normalize().unwrap();
        assert_eq!(n.gprime_inf(), Some(1.0));
        for t in [0.0, 0.5, 3.0, 40.0] {
            let (g, g1, g2) = n.eval(t);
            let (a, a1, a2) = Density::area().eval(t);
            assert_relative_eq!(g, a, max_relative = 1e-9);
            assert_relative_eq!(g1, a1, max_relative = 1e-9);
            assert_relative_eq!(g2, a2, max_relative = 1e-9);
        }
    }

    #[test]
    fn slowly_converging_limit_is_undetermined() {
        let slow = Density::custom("slow", |t: f64| {
            let lp = t.ln_1p();
            let g1 = -(-0.5 * lp).exp_m1();
            (t - 2.0 * ((0.5 * lp).exp() - 1.0), g1, 0.5 * (-1.5 * lp).exp())
        });
        assert!(matches!(slow.normalize(), Err(DensityError::UndeterminedLimit { .. })));
    }

    #[test]
    fn inverse_domain() {
        let d = Density::area();
        assert_eq!(d.invert_gprime(0.0).unwrap(), 0.0);
        assert!(matches!(d.invert_gprime(1.0), Err(DensityError::Domain { .. })));
        assert!(matches!(d.invert_gprime(-0.1), Err(DensityError::Domain { .. })));
        assert!(matches!(d.invert_gprime(f64::NAN), Err(DensityError::Domain { .. })));
    }

    #[test]
    fn numerical_inverse_for_custom_density() {
        let d = area_scaled(1.0).normalize().unwrap();
        for y in [1e-6, 0.1, 1.0 / 2f64.sqrt(), 0.99, 0.999_999] {
            let t = d.invert_gprime(y).unwrap();
            assert!((d.gprime(t) - y).abs() <= INVERSE_TOL * y.max(1.0));
            let exact = Density::area().analytic_inverse(y).unwrap();
            assert_relative_eq!(t, exact, max_relative = 1e-6);
        }
    }

    #[test]
    fn growth_of_built_ins() {
        use Growth::*;
        assert_eq!(Density::area().classify_growth(), FiniteIntegral);
        for (mu, expected) in [
            (1.5, InfiniteIntegral),
            (2.0, InfiniteIntegral),
            (2.5, FiniteIntegral),
            (3.0, FiniteIntegral),
            (4.0, FiniteIntegral),
        ] {
            let d = Density::mu(mu).unwrap();
            assert_eq!(d.classify_growth(), expected, "mu = {mu}");
            assert_eq!(d.classify_growth_numerically(), expected, "numeric, mu = {mu}");
        }
        assert_eq!(Density::area().classify_growth_numerically(), FiniteIntegral);
    }

    #[test]
    fn flux_and_hessian_closed_forms() {
        let d = Density::area();
        assert_eq!(d.flux(&DVector::from_vec(vec![0.0, 0.0])), DVector::zeros(2));
        let f = d.flux(&DVector::from_vec(vec![1.0, 0.0]));
        assert_relative_eq!(f[0], 1.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(f[1], 0.0);

        assert_eq!(d.hessian(&DVector::zeros(3)), DMatrix::identity(3, 3));
        let h = d.hessian(&DVector::from_vec(vec![1.0, 0.0]));
        assert_relative_eq!(h[(0, 0)], 2f64.powf(-1.5), epsilon = 1e-15);
        assert_relative_eq!(h[(1, 1)], 1.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(h[(0, 1)], 0.0);
    }

    #[test]
    fn hessian_is_continuous_at_origin() {
        for d in [Density::area(), Density::mu(2.0).unwrap(), Density::mu(3.5).unwrap()] {
            let p = DVector::from_vec(vec![0.6e-8, -0.8e-8]);
            let diff = d.hessian(&p) - DMatrix::identity(2, 2) * d.gsecond(0.0);
            assert!(diff.norm() <= 1e-6, "{}: {}", d.name(), diff.norm());
        }
    }

    #[test]
    fn planar_helpers_match_general_forms() {
        let d = Density::mu(2.5).unwrap();
        for p in [[0.0, 0.0], [0.3, -1.2], [40.0, 3.0]] {
            let v = DVector::from_vec(p.to_vec());
            let (g, f, h) = d.local2(p);
            assert_relative_eq!(g, d.g(v.norm()), max_relative = 1e-14);
            let fg = d.flux(&v);
            let hg = d.hessian(&v);
            for i in 0..2 {
                assert_relative_eq!(f[i], fg[i], epsilon = 1e-14);
                assert_relative_eq!(d.flux2(p)[i], fg[i], epsilon = 1e-14);
                for j in 0..2 {
                    assert_relative_eq!(h[i][j], hg[(i, j)], epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn spec_parses_from_config() {
        let a: DensitySpec = serde_json::from_str(r#"{"kind": "area"}"#).unwrap();
        assert_eq!(a, DensitySpec::Area);
        let m: DensitySpec = serde_json::from_str(r#"{"kind": "mu", "mu": 3.0}"#).unwrap();
        assert_eq!(m, DensitySpec::Mu { mu: 3.0 });
        assert!(DensitySpec::Mu { mu: 0.5 }.build().is_err());
    }
}
