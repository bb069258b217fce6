//! Boundary data and the layer potentials built from it: the velocity and
//! pressure of the half-space problem, the single layer `S`, the composite
//! potential `T`, the tangential decomposition of the velocity and the Dini modulus.

mod dini;
mod single_layer;
mod solver;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{norm, Dimension, SpaceTimePoint};

pub use dini::{dini_modulus, DiniReport};
pub use single_layer::{gradient_S, single_layer_S};
pub use solver::{
    composite_T, decompose_velocity, evaluate_potentials, evaluate_pressure, evaluate_velocity, gradient_T,
    PotentialValue, VelocityDecomposition,
};

/// A function of the tangential boundary coordinate `y′`.
pub type SpatialFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// A vector-valued function of `y′` (one entry per velocity component).
pub type SpatialVectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
/// A vector-valued function of `(y′, s)`.
pub type SpaceTimeFn = Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;

/// Time dependence of separable data `g(y′,s) = φ(y′) h(s)`.
#[derive(Clone)]
pub enum TimeProfile {
    /// `h ≡ 1`.
    Constant,
    /// A smooth profile and its derivative.
    Custom {
        value: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        derivative: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl TimeProfile {
    pub fn value(&self, s: f64) -> f64 {
        match self {
            TimeProfile::Constant => 1.0,
            TimeProfile::Custom { value, .. } => value(s),
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match self {
            TimeProfile::Constant => 0.0,
            TimeProfile::Custom { derivative, .. } => derivative(s),
        }
    }
}

impl fmt::Debug for TimeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeProfile::Constant => write!(f, "Constant"),
            TimeProfile::Custom { .. } => write!(f, "Custom"),
        }
    }
}

/// Regularity class of the boundary data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuityTag {
    Smooth,
    Holder(f64),
    Jump,
    Custom(String),
}

#[derive(Clone)]
pub(crate) enum FieldData {
    Separable { spatial: SpatialVectorFn, profile: TimeProfile },
    General { g: SpaceTimeFn, time_derivative: Option<SpaceTimeFn> },
}

/// Boundary data `g: ℝ^{n−1} × (0,T) → ℝⁿ` with its metadata.
///
/// `g` vanishes for `|y′| > support_radius` and is bounded by `sup_norm`.
/// `radial_breaks` lists radii `|y′| = c` across which `g` is not smooth.
#[derive(Clone)]
pub struct BoundaryField {
    pub dim: Dimension,
    pub(crate) data: FieldData,
    pub support_radius: f64,
    pub sup_norm: f64,
    pub horizon: f64,
    pub continuity: ContinuityTag,
    pub radial_breaks: Vec<f64>,
}

impl fmt::Debug for BoundaryField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryField")
            .field("dim", &self.dim)
            .field("separable", &matches!(self.data, FieldData::Separable { .. }))
            .field("support_radius", &self.support_radius)
            .field("sup_norm", &self.sup_norm)
            .field("horizon", &self.horizon)
            .field("continuity", &self.continuity)
            .finish()
    }
}

fn check_metadata(support_radius: f64, sup_norm: f64, horizon: f64) -> Result<()> {
    if !(support_radius > 0.0 && support_radius.is_finite()) {
        return Err(Error::Parameter(format!("support radius must be positive, got {support_radius}")));
    }
    if !(sup_norm >= 0.0 && sup_norm.is_finite()) {
        return Err(Error::Parameter(format!("sup norm must be non-negative, got {sup_norm}")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Parameter(format!("horizon must be positive, got {horizon}")));
    }
    Ok(())
}

impl BoundaryField {
    /// Separable data `g(y′,s) = φ(y′) h(s)`; `φ` is cut off outside the support.
    pub fn separable(
        dim: Dimension,
        spatial: SpatialVectorFn,
        profile: TimeProfile,
        support_radius: f64,
        sup_norm: f64,
        horizon: f64,
        continuity: ContinuityTag,
    ) -> Result<Self> {
        check_metadata(support_radius, sup_norm, horizon)?;
        Ok(Self {
            dim,
            data: FieldData::Separable { spatial, profile },
            support_radius,
            sup_norm,
            horizon,
            continuity,
            radial_breaks: vec![support_radius],
        })
    }

    /// Normal data only: `g = (0,…,0,φ(y′)h(s))`.
    pub fn normal(
        dim: Dimension,
        normal: SpatialFn,
        profile: TimeProfile,
        support_radius: f64,
        sup_norm: f64,
        horizon: f64,
        continuity: ContinuityTag,
    ) -> Result<Self> {
        let n = dim.n();
        let spatial: SpatialVectorFn = Arc::new(move |y: &[f64]| {
            let mut v = vec![0.0; n];
            v[n - 1] = normal(y);
            v
        });
        Self::separable(dim, spatial, profile, support_radius, sup_norm, horizon, continuity)
    }

    /// General space-time data; `time_derivative` is `∂_s g` (needed by the pressure).
    pub fn general(
        dim: Dimension,
        g: SpaceTimeFn,
        time_derivative: Option<SpaceTimeFn>,
        support_radius: f64,
        sup_norm: f64,
        horizon: f64,
        continuity: ContinuityTag,
    ) -> Result<Self> {
        check_metadata(support_radius, sup_norm, horizon)?;
        Ok(Self {
            dim,
            data: FieldData::General { g, time_derivative },
            support_radius,
            sup_norm,
            horizon,
            continuity,
            radial_breaks: vec![support_radius],
        })
    }

    /// Identically zero data.
    pub fn zero(dim: Dimension, horizon: f64) -> Result<Self> {
        let n = dim.n();
        Self::separable(
            dim,
            Arc::new(move |_: &[f64]| vec![0.0; n]),
            TimeProfile::Constant,
            1.0,
            0.0,
            horizon,
            ContinuityTag::Smooth,
        )
    }

    pub fn with_breaks(mut self, breaks: &[f64]) -> Self {
        self.radial_breaks.extend_from_slice(breaks);
        self
    }

    /// `g(y′,s)`, zero outside the support.
    pub fn eval(&self, y: &[f64], s: f64) -> Vec<f64> {
        if norm(y) > self.support_radius {
            return vec![0.0; self.dim.n()];
        }
        match &self.data {
            FieldData::Separable { spatial, profile } => {
                let h = profile.value(s);
                spatial(y).into_iter().map(|v| v * h).collect()
            }
            FieldData::General { g, .. } => g(y, s),
        }
    }

    /// `∂_s g(y′,s)`, by a centered difference when no derivative was supplied.
    pub fn eval_time_derivative(&self, y: &[f64], s: f64) -> Vec<f64> {
        if norm(y) > self.support_radius {
            return vec![0.0; self.dim.n()];
        }
        match &self.data {
            FieldData::Separable { spatial, profile } => {
                let h = profile.derivative(s);
                spatial(y).into_iter().map(|v| v * h).collect()
            }
            FieldData::General {
                time_derivative: Some(d),
                ..
            } => d(y, s),
            FieldData::General { g, .. } => {
                let h = 1e-6 * self.horizon;
                let lo = (s - h).max(0.0);
                let hi = s + h;
                g(y, hi)
                    .into_iter()
                    .zip(g(y, lo))
                    .map(|(a, b)| (a - b) / (hi - lo))
                    .collect()
            }
        }
    }

    /// `α·self + β·other`; separable if both are separable with constant profiles.
    pub fn combine(&self, alpha: f64, other: &BoundaryField, beta: f64) -> Result<BoundaryField> {
        if self.dim != other.dim {
            return Err(Error::Dimension(other.dim.n()));
        }
        let support = self.support_radius.max(other.support_radius);
        let sup = alpha.abs() * self.sup_norm + beta.abs() * other.sup_norm;
        let horizon = self.horizon.min(other.horizon);
        let mut breaks = self.radial_breaks.clone();
        breaks.extend_from_slice(&other.radial_breaks);
        let continuity = if self.continuity == other.continuity {
            self.continuity.clone()
        } else {
            ContinuityTag::Custom("combination".into())
        };
        let field = match (&self.data, &other.data) {
            (
                FieldData::Separable {
                    spatial: a,
                    profile: TimeProfile::Constant,
                },
                FieldData::Separable {
                    spatial: b,
                    profile: TimeProfile::Constant,
                },
            ) => {
                let (a, b) = (a.clone(), b.clone());
                let (ra, rb) = (self.support_radius, other.support_radius);
                let spatial: SpatialVectorFn = Arc::new(move |y: &[f64]| {
                    let r = norm(y);
                    let va = if r <= ra { a(y) } else { vec![0.0; y.len() + 1] };
                    let vb = if r <= rb { b(y) } else { vec![0.0; y.len() + 1] };
                    va.iter().zip(&vb).map(|(x, z)| alpha * x + beta * z).collect()
                });
                BoundaryField::separable(self.dim, spatial, TimeProfile::Constant, support, sup, horizon, continuity)?
            }
            _ => {
                let (f1, f2) = (self.clone(), other.clone());
                let (d1, d2) = (self.clone(), other.clone());
                let g: SpaceTimeFn = Arc::new(move |y: &[f64], s: f64| {
                    f1.eval(y, s).iter().zip(f2.eval(y, s)).map(|(x, z)| alpha * x + beta * z).collect()
                });
                let dg: SpaceTimeFn = Arc::new(move |y: &[f64], s: f64| {
                    d1.eval_time_derivative(y, s)
                        .iter()
                        .zip(d2.eval_time_derivative(y, s))
                        .map(|(x, z)| alpha * x + beta * z)
                        .collect()
                });
                BoundaryField::general(self.dim, g, Some(dg), support, sup, horizon, continuity)?
            }
        };
        Ok(field.with_breaks(&breaks))
    }

    /// `g(y′/λ, s/λ²)`: the data whose solution is `u(x/λ, t/λ²)`.
    pub fn rescaled(&self, lambda: f64) -> Result<BoundaryField> {
        if !(lambda > 0.0) {
            return Err(Error::Parameter(format!("scale must be positive, got {lambda}")));
        }
        let l2 = lambda * lambda;
        let breaks: Vec<f64> = self.radial_breaks.iter().map(|b| b * lambda).collect();
        let (support, sup, horizon) = (self.support_radius * lambda, self.sup_norm, self.horizon * l2);
        let field = match &self.data {
            FieldData::Separable { spatial, profile } => {
                let (spatial, support_inner) = (spatial.clone(), self.support_radius);
                let n = self.dim.n();
                let scaled: SpatialVectorFn = Arc::new(move |y: &[f64]| {
                    let z: Vec<f64> = y.iter().map(|v| v / lambda).collect();
                    if norm(&z) > support_inner {
                        vec![0.0; n]
                    } else {
                        spatial(&z)
                    }
                });
                let profile = match profile {
                    TimeProfile::Constant => TimeProfile::Constant,
                    TimeProfile::Custom { value, derivative } => {
                        let (value, derivative) = (value.clone(), derivative.clone());
                        TimeProfile::Custom {
                            value: Arc::new(move |s| value(s / l2)),
                            derivative: Arc::new(move |s| derivative(s / l2) / l2),
                        }
                    }
                };
                BoundaryField::separable(self.dim, scaled, profile, support, sup, horizon, self.continuity.clone())?
            }
            FieldData::General { .. } => {
                let inner = self.clone();
                let g: SpaceTimeFn = Arc::new(move |y: &[f64], s: f64| {
                    let z: Vec<f64> = y.iter().map(|v| v / lambda).collect();
                    inner.eval(&z, s / l2)
                });
                let inner = self.clone();
                let dg: SpaceTimeFn = Arc::new(move |y: &[f64], s: f64| {
                    let z: Vec<f64> = y.iter().map(|v| v / lambda).collect();
                    inner.eval_time_derivative(&z, s / l2).into_iter().map(|v| v / l2).collect()
                });
                BoundaryField::general(self.dim, g, Some(dg), support, sup, horizon, self.continuity.clone())?
            }
        };
        Ok(field.with_breaks(&breaks))
    }

    pub(crate) fn check_time(&self, p: &SpaceTimePoint) -> Result<()> {
        p.check_interior(self.dim)?;
        if p.t > self.horizon {
            return Err(Error::Horizon {
                t: p.t,
                horizon: self.horizon,
            });
        }
        Ok(())
    }
}
