//! Generalized catenoids: the radial solutions
//! `l±(ρ) = a ± ∫ (g')⁻¹(α / r^{n−1}) dr` of the Euler–Lagrange equation.
//!
//! Two quadrature routes are provided. [`profile_value`] integrates in the
//! radius and only switches to the `s`-parametrization (`r^{n−1} = α/g'(s)`)
//! inside the neck zone `ρ < 1.1·neck`, where `(g')⁻¹` blows up.
//! [`profile_value_substituted`] integrates entirely in `s`; its upper limit
//! is `s = ∞` at the neck, which is finite exactly when `∫ t g'' dt < ∞`.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::density::{Density, DensityError, Growth};
use crate::quadrature::{integrate, QuadratureError, QuadratureOptions};
use crate::report::fmt_sig;

/// Absolute tolerance of every catenoid quadrature.
pub const QUAD_ABS_TOL: f64 = 1e-10;
/// The radial route hands over to the substituted one below
/// `(1 + NECK_ZONE)·neck_radius`.
pub const NECK_ZONE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatenoidError {
    #[error("radius {rho} is not outside the neck radius {neck}")]
    Domain { rho: f64, neck: f64 },
    #[error("invalid catenoid parameters: {0}")]
    InvalidSpec(String),
    #[error("catenoid quadrature failed to converge (achieved error bound {achieved})")]
    Accuracy { achieved: f64 },
    #[error("catenoid height is unbounded on the requested range")]
    Unbounded,
    #[error(transparent)]
    Density(#[from] DensityError),
}

impl From<QuadratureError> for CatenoidError {
    fn from(e: QuadratureError) -> Self {
        match e {
            QuadratureError::Accuracy { error_bound, .. } => CatenoidError::Accuracy { achieved: error_bound },
            QuadratureError::NonFinite { .. } => CatenoidError::Accuracy { achieved: f64::INFINITY },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Anchor of the defining integral: the neck for `Section2`, radius 1 for
/// `Section3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    Section2,
    Section3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatenoidSpec {
    pub sign: Sign,
    /// Flux constant; the `r` of the anchor-1 convention.
    pub alpha: f64,
    #[serde(rename = "a")]
    pub offset_a: f64,
    #[serde(rename = "n")]
    pub dim_n: u32,
    pub convention: Convention,
}

impl CatenoidSpec {
    pub fn new(sign: Sign, alpha: f64, offset_a: f64, dim_n: u32, convention: Convention) -> Result<Self, CatenoidError> {
        let spec = Self {
            sign,
            alpha,
            offset_a,
            dim_n,
            convention,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), CatenoidError> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(CatenoidError::InvalidSpec(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.dim_n < 2 {
            return Err(CatenoidError::InvalidSpec(format!(
                "dimension must be at least 2, got {}",
                self.dim_n
            )));
        }
        if !self.offset_a.is_finite() {
            return Err(CatenoidError::InvalidSpec("offset a must be finite".into()));
        }
        if self.convention == Convention::Section3 && self.alpha >= 1.0 {
            return Err(CatenoidError::InvalidSpec(format!(
                "anchor-1 convention requires 0 < r < 1, got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    /// `α^{1/(n−1)}`.
    pub fn neck_radius(&self) -> f64 {
        neck_radius(self.alpha, self.dim_n)
    }
}

pub fn neck_radius(alpha: f64, n: u32) -> f64 {
    if n == 2 {
        alpha
    } else {
        alpha.powf(1.0 / (n as f64 - 1.0))
    }
}

/// A catenoid height, with an explicit sentinel for the blow-up at the neck.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Height {
    Finite(f64),
    Unbounded { positive: bool },
}

impl Height {
    pub fn finite(self) -> Option<f64> {
        match self {
            Height::Finite(v) => Some(v),
            Height::Unbounded { .. } => None,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, Height::Unbounded { .. })
    }

    /// The height as an extended real (`±∞` for the sentinel).
    pub fn to_f64(self) -> f64 {
        match self {
            Height::Finite(v) => v,
            Height::Unbounded { positive: true } => f64::INFINITY,
            Height::Unbounded { positive: false } => f64::NEG_INFINITY,
        }
    }

    fn shifted(self, offset: f64, factor: f64) -> Height {
        match self {
            Height::Finite(v) => Height::Finite(offset + factor * v),
            Height::Unbounded { positive } => Height::Unbounded {
                positive: positive == (factor > 0.0),
            },
        }
    }
}

fn quad_opts() -> QuadratureOptions {
    QuadratureOptions {
        abs_tol: QUAD_ABS_TOL,
        rel_tol: 1e-13,
        max_panels: 4000,
    }
}

/// `r^{n−1}`.
fn pow_nm1(r: f64, n: u32) -> f64 {
    if n == 2 {
        r
    } else {
        r.powi(n as i32 - 1)
    }
}

/// `s*(ρ) = (g')⁻¹(α/ρ^{n−1})`; `None` when the argument reaches the limit
/// of `g'` (the neck, up to rounding).
fn s_star(d: &Density, alpha: f64, n: u32, rho: f64) -> Result<Option<f64>, CatenoidError> {
    let y = alpha / pow_nm1(rho, n);
    if y >= d.gprime_inf().unwrap_or(1.0) {
        return Ok(None);
    }
    Ok(Some(d.invert_gprime(y)?))
}

/// `∫_{from}^{to} (g')⁻¹(α/t^{n−1}) dt` by adaptive Gauss–Kronrod in `t`.
/// Both limits must lie strictly outside the neck.
fn radial_quadrature(d: &Density, alpha: f64, n: u32, from: f64, to: f64) -> Result<f64, CatenoidError> {
    let integrand = |t: f64| d.invert_gprime(alpha / pow_nm1(t, n)).unwrap_or(f64::NAN);
    Ok(integrate(integrand, from, to, quad_opts())?.value)
}

/// `α^{1/(n−1)}/(n−1) ∫_{s_lo}^{s_hi} s g''(s) g'(s)^{−n/(n−1)} ds`, with
/// `s_hi = None` standing for `+∞`. Equals the radial integral between the
/// radii where `s*` takes the values `s_hi` and `s_lo`.
fn substituted_quadrature(d: &Density, alpha: f64, n: u32, s_lo: f64, s_hi: Option<f64>) -> Result<Height, CatenoidError> {
    if s_hi.is_none() {
        match d.classify_growth() {
            Growth::InfiniteIntegral => return Ok(Height::Unbounded { positive: true }),
            Growth::FiniteIntegral | Growth::Undetermined => {}
        }
    }
    let nf = n as f64;
    let power = nf / (nf - 1.0);
    let prefactor = neck_radius(alpha, n) / (nf - 1.0);
    let h = |s: f64| {
        let (_, g1, g2) = d.eval(s);
        s * g2 * g1.powf(-power)
    };

    // Direct quadrature up to the pivot, then s = pivot·w^{−k} on (0, 1].
    // Choosing k = 1/(μ−2) for a t^{−μ} tail of g'' makes the mapped
    // integrand bounded at w = 0.
    let pivot = s_lo.max(1.0);
    let mut total = 0.0;
    let head_end = s_hi.map_or(pivot, |hi| hi.min(pivot));
    if head_end > s_lo {
        total += integrate(h, s_lo, head_end, quad_opts())?.value;
    }
    let upper = s_hi.unwrap_or(f64::INFINITY);
    if upper > pivot {
        let k = match d.tail_exponent() {
            Some(mu) if mu > 2.0 && s_hi.is_none() => 1.0 / (mu - 2.0),
            _ => 1.0,
        };
        let w_min = if upper.is_finite() { (pivot / upper).powf(1.0 / k) } else { 0.0 };
        let mapped = |w: f64| {
            let s = pivot * w.powf(-k);
            h(s) * pivot * k * w.powf(-k - 1.0)
        };
        match integrate(mapped, w_min, 1.0, quad_opts()) {
            Ok(est) => total += est.value,
            Err(QuadratureError::Accuracy { .. }) if s_hi.is_none() => {
                return Ok(Height::Unbounded { positive: true });
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Height::Finite(prefactor * total))
}

/// Lower limit of a radial catenoid integral.
#[derive(Debug, Clone, Copy)]
enum Lower {
    Neck,
    Radius(f64),
}

/// `∫_{lo}^{hi} (g')⁻¹(α/t^{n−1}) dt` for `neck ≤ lo ≤ hi`: substituted
/// quadrature inside the neck zone, radial quadrature outside it.
fn split_integral(d: &Density, alpha: f64, n: u32, lo: Lower, hi: f64) -> Result<Height, CatenoidError> {
    let neck = neck_radius(alpha, n);
    let switch = (1.0 + NECK_ZONE) * neck;
    let lo_r = match lo {
        Lower::Neck => neck,
        Lower::Radius(r) => r,
    };
    let mut total = Height::Finite(0.0);
    if lo_r < switch {
        let near_hi = hi.min(switch);
        let s_lo = s_star(d, alpha, n, near_hi)?.ok_or(CatenoidError::Domain { rho: near_hi, neck })?;
        let s_hi = match lo {
            Lower::Neck => None,
            Lower::Radius(r) => s_star(d, alpha, n, r)?,
        };
        total = substituted_quadrature(d, alpha, n, s_lo, s_hi)?;
    }
    if hi > switch {
        let far_lo = lo_r.max(switch);
        if let Height::Finite(v) = total {
            total = Height::Finite(v + radial_quadrature(d, alpha, n, far_lo, hi)?);
        }
    }
    Ok(total)
}

fn check_outside_neck(spec: &CatenoidSpec, rho: f64) -> Result<(), CatenoidError> {
    let neck = spec.neck_radius();
    if !(rho > neck) || !rho.is_finite() {
        return Err(CatenoidError::Domain { rho, neck });
    }
    Ok(())
}

/// `l±(ρ)` through radial quadrature, with the substituted form taking over
/// inside the neck zone.
pub fn profile_value(d: &Density, spec: &CatenoidSpec, rho: f64) -> Result<Height, CatenoidError> {
    spec.validate()?;
    check_outside_neck(spec, rho)?;
    let (alpha, n) = (spec.alpha, spec.dim_n);
    let integral = match spec.convention {
        Convention::Section2 => split_integral(d, alpha, n, Lower::Neck, rho)?,
        Convention::Section3 => {
            if rho >= 1.0 {
                split_integral(d, alpha, n, Lower::Radius(1.0), rho)?
            } else {
                split_integral(d, alpha, n, Lower::Radius(rho), 1.0)?.shifted(0.0, -1.0)
            }
        }
    };
    Ok(integral.shifted(spec.offset_a, spec.sign.factor()))
}

/// `l±(ρ)` entirely through the parametrization `r^{n−1} = α/g'(s)`.
///
/// `ρ` equal to the neck radius is accepted and yields the one-sided limit
/// there: the offset `a` for a finite integral, the unbounded sentinel
/// otherwise.
pub fn profile_value_substituted(d: &Density, spec: &CatenoidSpec, rho: f64) -> Result<Height, CatenoidError> {
    spec.validate()?;
    let neck = spec.neck_radius();
    if !(rho >= neck) || !rho.is_finite() {
        return Err(CatenoidError::Domain { rho, neck });
    }
    let (alpha, n) = (spec.alpha, spec.dim_n);
    let s_rho = if rho == neck { None } else { s_star(d, alpha, n, rho)? };
    let integral = match spec.convention {
        Convention::Section2 => match s_rho {
            None => match d.classify_growth() {
                Growth::InfiniteIntegral => Height::Unbounded { positive: true },
                _ => Height::Finite(0.0),
            },
            Some(s) => substituted_quadrature(d, alpha, n, s, None)?,
        },
        Convention::Section3 => {
            let s_one = s_star(d, alpha, n, 1.0)?.expect("anchor lies outside the neck");
            match s_rho {
                Some(s) if s <= s_one => substituted_quadrature(d, alpha, n, s, Some(s_one))?,
                Some(s) => substituted_quadrature(d, alpha, n, s_one, Some(s))?.shifted(0.0, -1.0),
                None => substituted_quadrature(d, alpha, n, s_one, None)?.shifted(0.0, -1.0),
            }
        }
    };
    Ok(integral.shifted(spec.offset_a, spec.sign.factor()))
}

/// Limit of the catenoid height at the neck.
pub fn neck_limit(d: &Density, spec: &CatenoidSpec) -> Result<Height, CatenoidError> {
    profile_value_substituted(d, spec, spec.neck_radius())
}

/// Slope `±(g')⁻¹(α/ρ^{n−1})` of the catenoid at `ρ`.
pub fn profile_slope(d: &Density, spec: &CatenoidSpec, rho: f64) -> Result<f64, CatenoidError> {
    check_outside_neck(spec, rho)?;
    let s = s_star(d, spec.alpha, spec.dim_n, rho)?.ok_or(CatenoidError::Domain {
        rho,
        neck: spec.neck_radius(),
    })?;
    Ok(spec.sign.factor() * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub rho: f64,
    pub value: f64,
    pub slope: f64,
}

/// A catenoid sampled on radii accumulating geometrically at the neck.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub spec: CatenoidSpec,
    pub samples: Vec<ProfileSample>,
    pub neck_radius: f64,
    pub neck_finite: bool,
}

impl RadialProfile {
    /// Samples `count ≥ 3` radii on `[rho_min, rho_max]`, spaced so that
    /// `ρ − neck` grows geometrically.
    pub fn generate(d: &Density, spec: &CatenoidSpec, rho_min: f64, rho_max: f64, count: usize) -> Result<Self, CatenoidError> {
        spec.validate()?;
        check_outside_neck(spec, rho_min)?;
        if !(rho_max > rho_min) || count < 3 {
            return Err(CatenoidError::InvalidSpec(format!(
                "need rho_max > rho_min and at least 3 samples (got [{rho_min}, {rho_max}], {count})"
            )));
        }
        let neck = spec.neck_radius();
        let ratio = ((rho_max - neck) / (rho_min - neck)).powf(1.0 / (count - 1) as f64);
        let mut samples = Vec::with_capacity(count);
        for i in 0..count {
            let rho = if i + 1 == count {
                rho_max
            } else {
                neck + (rho_min - neck) * ratio.powi(i as i32)
            };
            let value = profile_value(d, spec, rho)?.finite().ok_or(CatenoidError::Unbounded)?;
            let slope = profile_slope(d, spec, rho)?;
            samples.push(ProfileSample { rho, value, slope });
        }
        let neck_finite = !neck_limit(d, spec)?.is_unbounded();
        Ok(Self {
            spec: *spec,
            samples,
            neck_radius: neck,
            neck_finite,
        })
    }

    /// CSV with header `rho,value,slope`, floats at 12 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "rho,value,slope")?;
        for s in &self.samples {
            writeln!(out, "{},{},{}", fmt_sig(s.rho), fmt_sig(s.value), fmt_sig(s.slope))?;
        }
        Ok(())
    }
}

/// `max_ρ |ρ^{n−1} g'(|slope(ρ)|) − α|`: deviation from constant radial flux.
pub fn ode_residual(d: &Density, profile: &RadialProfile) -> f64 {
    let n = profile.spec.dim_n;
    profile
        .samples
        .iter()
        .map(|s| (pow_nm1(s.rho, n) * d.gprime(s.slope.abs()) - profile.spec.alpha).abs())
        .fold(0.0, f64::max)
}

/// `M_R + ∫_ρ^R (g')⁻¹(r^{n−1}/t^{n−1}) dt`: the upper barrier at radius `ρ`
/// built from the catenoid with neck radius `r` that equals `M_R` on `|x| = R`.
pub fn envelope_bound(d: &Density, r: f64, rho: f64, big_r: f64, m_r: f64, n: u32) -> Result<f64, CatenoidError> {
    if !(0.0 < r && r < rho && rho <= big_r && big_r.is_finite()) {
        return Err(CatenoidError::Domain { rho, neck: r });
    }
    if n < 2 {
        return Err(CatenoidError::InvalidSpec(format!("dimension must be at least 2, got {n}")));
    }
    let alpha = pow_nm1(r, n);
    let integral = split_integral(d, alpha, n, Lower::Radius(rho), big_r)?;
    Ok(m_r + integral.finite().ok_or(CatenoidError::Unbounded)?)
}

/// `E(ε) = ∫_ρ^R (g')⁻¹(ε^{n−1}/t^{n−1}) dt`, the envelope above `M_R`.
pub fn envelope_excess(d: &Density, eps: f64, rho: f64, big_r: f64, n: u32) -> Result<f64, CatenoidError> {
    envelope_bound(d, eps, rho, big_r, 0.0, n)
}

/// `a + (1 − |x|)·(g')⁻¹(1/2)`: the `x`-independent bound on the unit ball
/// obtained from the anchor-1 catenoid with `r = |x|^{n−1}/2`.
pub fn uniform_bound_case8(d: &Density, a: f64, x_norm: f64) -> Result<f64, CatenoidError> {
    if !(0.0 < x_norm && x_norm < 1.0) {
        return Err(CatenoidError::Domain { rho: x_norm, neck: 0.0 });
    }
    Ok(a + (1.0 - x_norm) * d.invert_gprime(0.5)?)
}
