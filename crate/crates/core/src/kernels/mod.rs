//! Heat, Newtonian and half-space Stokes kernels.
//!
//! Conventions: the heat kernel is `Γ(x,t) = (2πt)^{-n/2} e^{-|x|²/(2t)}`, which
//! solves `∂_t Γ = ½ΔΓ`, and the Newtonian kernel is
//! `E(x) = |x|^{2-n} / ((n-2) ω_n)`, so that `-ΔE = δ`.

pub mod heat;
pub mod layer;
pub mod newton;
pub mod poisson;
pub mod spectral;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::sphere_area;

pub use heat::{gaussian, gaussian_derivative, DerivativeOrder};
pub use layer::{
    kernel_A, kernel_B, kernel_L, kernel_L_block, kernel_L_direct, kernel_L_nn, kernel_kappa, region_integrals,
    AOrder, InnerRoute, RegionIntegrals,
};
pub use newton::{newtonian, newtonian_gradient, newtonian_hessian};
pub use poisson::{
    fundamental_F, greens_matrix, poisson_K, poisson_K_at, poisson_matrix, pressure_pi, pressure_pi_at, KernelRoute,
    KernelSplit, PressureSplit,
};
pub use spectral::SpectralKernels;

/// Space dimension `n ≥ 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Dimension(usize);

impl Dimension {
    pub const THREE: Dimension = Dimension(3);

    pub fn new(n: usize) -> Result<Self> {
        if n >= 3 {
            Ok(Self(n))
        } else {
            Err(Error::Dimension(n))
        }
    }

    pub fn n(self) -> usize {
        self.0
    }

    /// Dimension `n − 1` of the boundary hyperplane.
    pub fn tangential(self) -> usize {
        self.0 - 1
    }

    /// Area `ω_n` of the unit sphere in `ℝ^n`.
    pub fn omega(self) -> f64 {
        sphere_area(self.0)
    }

    /// Normalization `1 / ((n−2) ω_n)` of the Newtonian kernel.
    pub fn newton_constant(self) -> f64 {
        1.0 / ((self.0 as f64 - 2.0) * self.omega())
    }

    pub(crate) fn check_index(self, index: usize, max: usize) -> Result<()> {
        if (1..=max).contains(&index) {
            Ok(())
        } else {
            Err(Error::Index { index, min: 1, max })
        }
    }
}

impl Default for Dimension {
    fn default() -> Self {
        Self::THREE
    }
}

impl TryFrom<usize> for Dimension {
    type Error = Error;
    fn try_from(n: usize) -> Result<Self> {
        Self::new(n)
    }
}

impl From<Dimension> for usize {
    fn from(d: Dimension) -> usize {
        d.0
    }
}

/// A point `(x′, x_n)` of the closed upper half-space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpacePoint {
    pub tangential: Vec<f64>,
    pub normal: f64,
}

impl HalfSpacePoint {
    pub fn new(tangential: Vec<f64>, normal: f64) -> Result<Self> {
        if !(normal >= 0.0) || !normal.is_finite() {
            return Err(Error::Parameter(format!("normal coordinate must be finite and ≥ 0, got {normal}")));
        }
        if tangential.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("tangential coordinates must be finite".into()));
        }
        Ok(Self { tangential, normal })
    }

    /// Builds a point from all `n` coordinates, the last one being normal.
    pub fn from_coords(coords: &[f64]) -> Result<Self> {
        match coords.split_last() {
            Some((last, rest)) if !rest.is_empty() => Self::new(rest.to_vec(), *last),
            _ => Err(Error::Shape {
                expected: 3,
                found: coords.len(),
            }),
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        let mut c = self.tangential.clone();
        c.push(self.normal);
        c
    }

    pub fn tangential_norm(&self) -> f64 {
        norm(&self.tangential)
    }

    pub fn reflect(&self) -> ImagePoint {
        ImagePoint {
            tangential: self.tangential.clone(),
            normal: -self.normal,
        }
    }

    pub(crate) fn check(&self, dim: Dimension) -> Result<()> {
        if self.tangential.len() != dim.tangential() {
            return Err(Error::Shape {
                expected: dim.tangential(),
                found: self.tangential.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_interior(&self, dim: Dimension) -> Result<()> {
        self.check(dim)?;
        if self.normal > 0.0 {
            Ok(())
        } else {
            Err(Error::NotInterior(self.normal))
        }
    }
}

/// The mirror image `y* = (y′, −y_n)` of a half-space point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImagePoint {
    pub tangential: Vec<f64>,
    pub normal: f64,
}

impl ImagePoint {
    /// Reflects back into the half-space; `(y*)* = y`.
    pub fn reflect(&self) -> HalfSpacePoint {
        HalfSpacePoint {
            tangential: self.tangential.clone(),
            normal: -self.normal,
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        let mut c = self.tangential.clone();
        c.push(self.normal);
        c
    }
}

/// A half-space point together with a time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePoint {
    pub point: HalfSpacePoint,
    pub t: f64,
}

impl SpaceTimePoint {
    pub fn new(point: HalfSpacePoint, t: f64) -> Self {
        Self { point, t }
    }

    /// Convenience constructor from all `n` coordinates and a time.
    pub fn from_coords(coords: &[f64], t: f64) -> Result<Self> {
        Ok(Self {
            point: HalfSpacePoint::from_coords(coords)?,
            t,
        })
    }

    pub(crate) fn check_interior(&self, dim: Dimension) -> Result<()> {
        self.point.check_interior(dim)?;
        if self.t > 0.0 && self.t.is_finite() {
            Ok(())
        } else {
            Err(Error::NonPositiveTime(self.t))
        }
    }
}

/// An `n × n` matrix of kernel values at one space-time point (1-based accessors).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelMatrixValue {
    pub n: usize,
    pub entries: Vec<f64>,
}

impl KernelMatrixValue {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: vec![0.0; n * n],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i - 1) * self.n + (j - 1)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[(i - 1) * self.n + (j - 1)] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|v| v.is_finite())
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>()
}
