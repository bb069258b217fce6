//! Adaptive integration: 1-D Gauss–Kronrod, nested polar cubature on the
//! boundary hyperplane, and time convolutions with Dirac-carried parts.

mod gauss_kronrod;
mod polar;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use gauss_kronrod::adaptive;
pub(crate) use gauss_kronrod::{WG, WGK, XGK};
pub use polar::{integrate_polar, integrate_polar_radial, sphere_area, PolarPatch, SphereRule};

use crate::error::{Error, Result};

/// Change of variables applied to time integrals before adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TimeSubstitution {
    /// Integrate directly in the lag variable.
    None,
    /// `lag = σ²`, removing a `lag^{-1/2}` singularity at zero lag.
    SqrtEndpoint,
    /// `u = x_n² / (2·lag)`, the natural variable of Gaussian normal-derivative kernels.
    Xn2OverT { x_normal: f64 },
}

/// Tolerances and budgets shared by every integral in the crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Largest admissible spatial truncation radius.
    pub truncation_radius: f64,
    /// Required bound on the discarded spatial tail.
    pub tail_bound_target: f64,
    pub time_substitution: TimeSubstitution,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-11,
            rel_tol: 1e-8,
            max_subdivisions: 400,
            truncation_radius: 1e4,
            tail_bound_target: 1e-12,
            time_substitution: TimeSubstitution::SqrtEndpoint,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Parameter(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("abs_tol", self.abs_tol)?;
        positive("rel_tol", self.rel_tol)?;
        positive("truncation_radius", self.truncation_radius)?;
        positive("tail_bound_target", self.tail_bound_target)?;
        if self.max_subdivisions == 0 {
            return Err(Error::Parameter("max_subdivisions must be at least 1".into()));
        }
        Ok(())
    }

    /// Same spec with both tolerances scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            abs_tol: self.abs_tol * factor,
            rel_tol: self.rel_tol * factor,
            tail_bound_target: self.tail_bound_target * factor,
            ..self.clone()
        }
    }

    pub fn tolerance(&self) -> Tolerance {
        Tolerance {
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            max_subdivisions: self.max_subdivisions,
        }
    }
}

/// The stopping rule of one adaptive integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Tolerance {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Self {
        Self {
            abs_tol,
            rel_tol,
            max_subdivisions,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            abs_tol: self.abs_tol * factor,
            rel_tol: self.rel_tol * factor,
            max_subdivisions: self.max_subdivisions,
        }
    }
}

/// Value, error estimate and work count of an integral.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralResult<V = f64> {
    pub value: V,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl<V> IntegralResult<V> {
    pub fn map<W>(self, f: impl FnOnce(V) -> W) -> IntegralResult<W> {
        IntegralResult {
            value: f(self.value),
            error_estimate: self.error_estimate,
            evaluations: self.evaluations,
            converged: self.converged,
        }
    }

    /// Converts a nonconverged result into [`Error::Quadrature`].
    pub fn require(self, context: &str) -> Result<Self>
    where
        V: QuadValue,
    {
        if self.converged {
            Ok(self)
        } else {
            let value = self.value.as_slice().first().copied().unwrap_or(f64::NAN);
            Err(Error::Quadrature {
                context: context.to_string(),
                value,
                error: self.error_estimate,
            })
        }
    }
}

/// Integrand values: scalars, fixed arrays and vectors of reals.
pub trait QuadValue: Clone {
    fn zeroed(&self) -> Self;
    fn as_slice(&self) -> &[f64];
    fn as_mut_slice(&mut self) -> &mut [f64];
}

impl QuadValue for f64 {
    fn zeroed(&self) -> Self {
        0.0
    }
    fn as_slice(&self) -> &[f64] {
        std::slice::from_ref(self)
    }
    fn as_mut_slice(&mut self) -> &mut [f64] {
        std::slice::from_mut(self)
    }
}

impl<const N: usize> QuadValue for [f64; N] {
    fn zeroed(&self) -> Self {
        [0.0; N]
    }
    fn as_slice(&self) -> &[f64] {
        self
    }
    fn as_mut_slice(&mut self) -> &mut [f64] {
        self
    }
}

impl QuadValue for Vec<f64> {
    fn zeroed(&self) -> Self {
        vec![0.0; self.len()]
    }
    fn as_slice(&self) -> &[f64] {
        self
    }
    fn as_mut_slice(&mut self) -> &mut [f64] {
        self
    }
}

/// Pairwise (tree) summation in the given order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let (l, r) = values.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

pub(crate) fn pairwise_sum_into<V: QuadValue>(parts: &[&V], out: &mut V) {
    let dim = out.as_slice().len();
    let mut column = vec![0.0; parts.len()];
    for comp in 0..dim {
        for (c, p) in column.iter_mut().zip(parts) {
            *c = p.as_slice()[comp];
        }
        out.as_mut_slice()[comp] = pairwise_sum(&column);
    }
}

/// Integrates `f` over `[a, b]` with the time substitution declared in `spec`.
///
/// `SqrtEndpoint` treats `a` as the singular endpoint (`s = a + σ²`);
/// `Xn2OverT` treats `a` as the zero-lag endpoint and integrates in
/// `u = x_n² / (2 (s - a))`, truncated where `e^{-u}` underflows.
pub fn integrate_1d<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, spec: &QuadratureSpec) -> IntegralResult {
    let tol = spec.tolerance();
    if a == b {
        return IntegralResult {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
            converged: true,
        };
    }
    match spec.time_substitution {
        TimeSubstitution::None => adaptive(f, a, b, &[], &tol),
        TimeSubstitution::SqrtEndpoint => {
            let len = b - a;
            let top = len.abs().sqrt() * len.signum();
            adaptive(move |s: f64| 2.0 * s.abs() * f(a + s * s.abs()), 0.0, top, &[], &tol)
        }
        TimeSubstitution::Xn2OverT { x_normal } => {
            let c = 0.5 * x_normal * x_normal;
            if c == 0.0 {
                return adaptive(f, a, b, &[], &tol);
            }
            let u_lo = c / (b - a);
            let u_hi = U_CUTOFF.max(u_lo);
            let breaks = [1.0, 10.0];
            adaptive(move |u: f64| f(a + c / u) * c / (u * u), u_lo, u_hi, &breaks, &tol)
        }
    }
}

/// Upper limit of the `u = x_n²/(2·lag)` variable: `e^{-u}` underflows beyond it.
const U_CUTOFF: f64 = 745.0;

/// A time kernel at a fixed spatial offset: a regular part integrable in the
/// lag variable plus coefficients of Dirac terms carried structurally.
///
/// Convolution with data `f` gives
/// `∫₀ᵗ regular(τ) f(t−τ) dτ + instantaneous·f(t)
///  + d/dt ∫₀ᵗ differentiated(τ) f(t−τ) dτ + instantaneous_derivative·f′(t)`.
#[derive(Clone)]
pub struct TimeKernel {
    pub regular: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub instantaneous: f64,
    pub differentiated: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    pub instantaneous_derivative: f64,
}

impl std::fmt::Debug for TimeKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TimeKernel")
            .field("instantaneous", &self.instantaneous)
            .field("differentiated", &self.differentiated.is_some())
            .field("instantaneous_derivative", &self.instantaneous_derivative)
            .finish()
    }
}

impl TimeKernel {
    pub fn new(regular: impl Fn(f64) -> f64 + Send + Sync + 'static, instantaneous: f64) -> Self {
        Self {
            regular: Arc::new(regular),
            instantaneous,
            differentiated: None,
            instantaneous_derivative: 0.0,
        }
    }

    pub fn zero() -> Self {
        Self::new(|_| 0.0, 0.0)
    }

    pub fn with_differentiated(mut self, k: impl Fn(f64) -> f64 + Send + Sync + 'static, delta_prime: f64) -> Self {
        self.differentiated = Some(Arc::new(k));
        self.instantaneous_derivative = delta_prime;
        self
    }
}

/// Time convolution of a [`TimeKernel`] with scalar data on `(0, t]`.
///
/// `df` is the time derivative of `f`; it is only consulted when the kernel has
/// differentiated or `δ′` parts, and is replaced by a centered difference if absent.
pub fn convolve_time<F>(
    kernel: &TimeKernel,
    f: F,
    df: Option<&dyn Fn(f64) -> f64>,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<IntegralResult>
where
    F: Fn(f64) -> f64,
{
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    let reg = kernel.regular.clone();
    let mut total = integrate_1d(|tau| reg(tau) * f(t - tau), 0.0, t, spec);
    total.value += kernel.instantaneous * f(t);
    let derivative = |s: f64| match df {
        Some(d) => d(s),
        None => {
            let h = 1e-5 * t;
            (f((s + h).min(t)) - f((s - h).max(1e-300))) / ((s + h).min(t) - (s - h).max(1e-300))
        }
    };
    if let Some(k) = &kernel.differentiated {
        let k = k.clone();
        let part = integrate_1d(|tau| k(tau) * derivative(t - tau), 0.0, t, spec);
        let start = f(f64::MIN_POSITIVE);
        total.value += part.value + k(t) * start;
        total.error_estimate += part.error_estimate;
        total.evaluations += part.evaluations;
        total.converged &= part.converged;
    }
    if kernel.instantaneous_derivative != 0.0 {
        total.value += kernel.instantaneous_derivative * derivative(t);
    }
    if !total.value.is_finite() {
        total.converged = false;
    }
    Ok(total)
}

/// Envelope of an integrand outside the truncation ball, used for analytic tail bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailModel {
    /// `|f(y)| ≤ amplitude · (|y−c|/√t)^degree · (2πt)^{-m/2} e^{-|y−c|²/(2t)}`.
    Gaussian { variance: f64, amplitude: f64, degree: u32 },
    /// `|f(y)| ≤ amplitude · |y−c|^{-exponent}` with `exponent > m`.
    PowerLaw { amplitude: f64, exponent: f64 },
    /// `f` vanishes outside the given radius about the center.
    Compact { radius: f64 },
}

impl TailModel {
    /// Bound on `∫_{|y−c|>r} |f|` in dimension `m`.
    pub fn tail_bound(&self, m: usize, r: f64) -> f64 {
        let mf = m as f64;
        match *self {
            TailModel::Gaussian {
                variance,
                amplitude,
                degree,
            } => {
                let a = 0.5 * (degree as f64 + mf);
                let x = r * r / (2.0 * variance);
                let q = if x <= 0.0 { 1.0 } else { puruspe::gammq(a, x) };
                amplitude * sphere_area(m) * (2.0 * std::f64::consts::PI).powf(-0.5 * mf) * 2f64.powf(a - 1.0)
                    * puruspe::gamma(a)
                    * q
            }
            TailModel::PowerLaw { amplitude, exponent } => {
                if r <= 0.0 || exponent <= mf {
                    f64::INFINITY
                } else {
                    amplitude * sphere_area(m) * r.powf(mf - exponent) / (exponent - mf)
                }
            }
            TailModel::Compact { radius } => {
                if r >= radius {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Smallest radius (up to `max_radius`) whose tail bound meets `target`.
    pub fn radius_for(&self, m: usize, target: f64, max_radius: f64) -> f64 {
        match *self {
            TailModel::Compact { radius } => radius.min(max_radius),
            TailModel::PowerLaw { amplitude, exponent } => {
                let mf = m as f64;
                if exponent <= mf {
                    return max_radius;
                }
                let r = (amplitude * sphere_area(m) / ((exponent - mf) * target)).powf(1.0 / (exponent - mf));
                r.min(max_radius)
            }
            TailModel::Gaussian { variance, .. } => {
                let mut hi = variance.sqrt().max(f64::MIN_POSITIVE);
                while self.tail_bound(m, hi) > target && hi < max_radius {
                    hi *= 2.0;
                }
                if hi >= max_radius {
                    return max_radius;
                }
                let mut lo = 0.0;
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if self.tail_bound(m, mid) > target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            }
        }
    }
}

/// The four-region decomposition of the hyperplane about a tangential point `x′ ≠ 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum RegionSplit {
    /// One ball about the origin.
    Whole,
    /// One ball about `center`, enlarged by `|center|` so it still contains the tail ball.
    Centered { center: Vec<f64> },
    /// Near field `|x′−y′| ≤ ½|x′|`, annular shell `½|x′| ≤ |y′| ≤ 2|x′|` minus the near
    /// field, inner ball `|y′| ≤ ½|x′|`, and far field `|y′| ≥ 2|x′|`.
    FourRegion { x_tangential: Vec<f64> },
}

/// Names of the four regions, in the order returned by [`integrate_halfplane`].
pub const REGION_NAMES: [&str; 4] = ["near_field", "annulus", "inner_ball", "far_field"];

/// Outcome of a hyperplane integral with per-region diagnostics.
#[derive(Debug, Clone)]
pub struct HalfplaneResult<V = f64> {
    pub total: IntegralResult<V>,
    pub regions: Vec<IntegralResult<V>>,
    pub truncation_radius: f64,
    pub tail_bound: f64,
}

/// Integrates `f` over `ℝ^m` (the boundary hyperplane) with nested polar rules.
///
/// The integration ball contains the origin-centered ball whose radius is the smallest
/// one whose analytic tail bound meets `spec.tail_bound_target`, capped by
/// `spec.truncation_radius`. The reported error is the adaptive estimate plus
/// the tail bound. `radial_breaks` are extra radii where `f` changes scale.
pub fn integrate_halfplane<V, F>(
    m: usize,
    mut f: F,
    spec: &QuadratureSpec,
    regions: &RegionSplit,
    tail: TailModel,
    radial_breaks: &[f64],
) -> HalfplaneResult<V>
where
    V: QuadValue,
    F: FnMut(&[f64]) -> V,
{
    let radius = tail.radius_for(m, spec.tail_bound_target, spec.truncation_radius);
    let tail_bound = tail.tail_bound(m, radius);
    let tol = spec.tolerance();
    let origin = vec![0.0; m];
    let mut results: Vec<IntegralResult<V>> = Vec::new();
    match regions {
        RegionSplit::Whole => {
            let patch = PolarPatch::ball(&origin, radius).with_breaks(radial_breaks);
            results.push(integrate_polar(m, &patch, &mut f, &tol));
        }
        RegionSplit::Centered { center } => {
            let offset = center.iter().map(|v| v * v).sum::<f64>().sqrt();
            let patch = PolarPatch::ball(center, radius + offset).with_breaks(radial_breaks);
            results.push(integrate_polar(m, &patch, &mut f, &tol));
        }
        RegionSplit::FourRegion { x_tangential } => {
            let a = x_tangential.iter().map(|v| v * v).sum::<f64>().sqrt();
            let near = PolarPatch::ball(x_tangential, 0.5 * a).with_breaks(radial_breaks);
            let cut = move |r: f64| {
                let c = (r * r + 0.75 * a * a) / (2.0 * r * a);
                c.min(1.0).acos()
            };
            let annulus = PolarPatch::shell(&origin, 0.5 * a, (2.0 * a).min(radius))
                .with_axis(x_tangential)
                .with_polar_cut(&cut)
                .with_breaks(&[1.5 * a]);
            let inner = PolarPatch::ball(&origin, 0.5 * a);
            let far = PolarPatch::shell(&origin, 2.0 * a, radius.max(2.0 * a)).with_breaks(radial_breaks);
            for patch in [&near, &annulus, &inner, &far] {
                results.push(integrate_polar(m, patch, &mut f, &tol.scaled(0.5)));
            }
        }
    }
    let mut value = results[0].value.zeroed();
    let parts: Vec<&V> = results.iter().map(|r| &r.value).collect();
    pairwise_sum_into(&parts, &mut value);
    let adaptive_err: f64 = results.iter().map(|r| r.error_estimate).sum();
    let error_estimate = adaptive_err + tail_bound;
    let scale = value.as_slice().iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let converged = results.iter().all(|r| r.converged)
        && tail_bound <= spec.tail_bound_target
        && error_estimate <= spec.abs_tol.max(spec.rel_tol * scale) + spec.tail_bound_target;
    let total = IntegralResult {
        value,
        error_estimate,
        evaluations: results.iter().map(|r| r.evaluations).sum(),
        converged,
    };
    HalfplaneResult {
        total,
        regions: results,
        truncation_radius: radius,
        tail_bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(sub: TimeSubstitution) -> QuadratureSpec {
        QuadratureSpec {
            abs_tol: 1e-12,
            rel_tol: 1e-11,
            time_substitution: sub,
            ..QuadratureSpec::default()
        }
    }

    #[test]
    fn inverse_sqrt_singularity() {
        for sub in [TimeSubstitution::None, TimeSubstitution::SqrtEndpoint] {
            let r = integrate_1d(|s| s.powf(-0.5), 0.0, 1.0, &spec(sub));
            assert!((r.value - 2.0).abs() < 1e-8, "{sub:?}: {}", r.value);
            assert!(r.converged);
        }
    }

    #[test]
    fn gamma_half_mass() {
        let r = integrate_1d(
            |u| u.powf(-0.5) * (-u).exp() / std::f64::consts::PI.sqrt(),
            0.0,
            40.0,
            &spec(TimeSubstitution::SqrtEndpoint),
        );
        assert!((r.value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_integrand_is_exact() {
        let r = integrate_1d(|_| 0.0, 0.0, 1.0, &spec(TimeSubstitution::None));
        assert_eq!(r.value, 0.0);
        assert!(r.converged);
    }

    #[test]
    fn normal_derivative_substitution() {
        // ∫₀^∞ (x/t)(2πt)^{-1/2} e^{-x²/2t} dt diverges, but the t^{-3/2} form converges.
        let x: f64 = 0.7;
        let f = |t: f64| x / t * (2.0 * std::f64::consts::PI * t).powf(-0.5) * (-x * x / (2.0 * t)).exp() / t.sqrt();
        let sub = integrate_1d(f, 0.0, 50.0, &spec(TimeSubstitution::Xn2OverT { x_normal: x }));
        let plain = integrate_1d(f, 0.0, 50.0, &spec(TimeSubstitution::None));
        assert!((sub.value - plain.value).abs() < 1e-8 * plain.value.abs());
    }

    #[test]
    fn vector_integrand() {
        let tol = Tolerance::new(1e-13, 1e-12, 200);
        let r = adaptive(|x: f64| [x.sin(), x.cos(), x * x], 0.0, 1.0, &[], &tol);
        assert!((r.value[0] - (1.0 - 1f64.cos())).abs() < 1e-13);
        assert!((r.value[1] - 1f64.sin()).abs() < 1e-13);
        assert!((r.value[2] - 1.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn convolution_delta_sifting() {
        let k = TimeKernel::new(|_| 0.0, 2.5);
        let r = convolve_time(&k, |s| s * s, None, 0.8, &QuadratureSpec::default()).unwrap();
        assert!((r.value - 2.5 * 0.64).abs() < 1e-14);
        let z = convolve_time(&TimeKernel::new(|tau| tau.powf(-0.5), 0.0), |_| 0.0, None, 1.0, &QuadratureSpec::default())
            .unwrap();
        assert_eq!(z.value, 0.0);
    }

    #[test]
    fn differentiated_part_matches_direct_derivative() {
        // d/dt ∫₀ᵗ τ^{-1/2} f(t−τ) dτ for f(s) = s: equals ∫₀ᵗ τ^{-1/2} dτ = 2√t.
        let k = TimeKernel::zero().with_differentiated(|tau| tau.powf(-0.5), 0.0);
        let r = convolve_time(&k, |s| s, Some(&|_| 1.0), 0.49, &QuadratureSpec::default()).unwrap();
        assert!((r.value - 2.0 * 0.7).abs() < 1e-9);
    }

    #[test]
    fn gaussian_plane_mass() {
        let t = 1.0;
        let g = |y: &[f64]| (2.0 * std::f64::consts::PI * t).recip() * (-(y[0] * y[0] + y[1] * y[1]) / (2.0 * t)).exp();
        let tail = TailModel::Gaussian {
            variance: t,
            amplitude: 1.0,
            degree: 0,
        };
        let r = integrate_halfplane(2, g, &QuadratureSpec::default(), &RegionSplit::Whole, tail, &[]);
        assert!((r.total.value - 1.0).abs() < 1e-8, "{}", r.total.value);
        let split = RegionSplit::FourRegion {
            x_tangential: vec![0.6, -0.3],
        };
        let s = integrate_halfplane(2, g, &QuadratureSpec::default(), &split, tail, &[]);
        assert!((s.total.value - 1.0).abs() < 1e-8, "{}", s.total.value);
    }

    #[test]
    fn power_law_tail_radius() {
        let tail = TailModel::PowerLaw {
            amplitude: 1.0,
            exponent: 3.0,
        };
        let r = tail.radius_for(2, 1e-6, 1e12);
        assert!((tail.tail_bound(2, r) - 1e-6).abs() < 1e-12);
    }
}
