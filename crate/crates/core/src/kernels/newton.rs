//! The Newtonian kernel `E(x) = |x|^{2-n}/((n−2)ω_n)` and its derivatives.

use super::Dimension;
use crate::error::{Error, Result};

/// `E(x)`; `x` has all `n` coordinates.
pub fn newtonian(x: &[f64], dim: Dimension) -> Result<f64> {
    let r2 = checked_r2(x, dim)?;
    Ok(Newton::new(dim).value_r2(r2))
}

/// `∇E(x) = −x / (ω_n |x|^n)`.
pub fn newtonian_gradient(x: &[f64], dim: Dimension) -> Result<Vec<f64>> {
    checked_r2(x, dim)?;
    let k = Newton::new(dim);
    Ok((0..dim.n()).map(|i| k.d1(x, i)).collect())
}

/// Hessian `D_iD_jE(x) = (n x_i x_j/|x|² − δ_ij) / (ω_n |x|^n)`, row-major.
pub fn newtonian_hessian(x: &[f64], dim: Dimension) -> Result<Vec<f64>> {
    checked_r2(x, dim)?;
    let k = Newton::new(dim);
    let n = dim.n();
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] = k.d2(x, i, j);
        }
    }
    Ok(h)
}

fn checked_r2(x: &[f64], dim: Dimension) -> Result<f64> {
    if x.len() != dim.n() {
        return Err(Error::Shape {
            expected: dim.n(),
            found: x.len(),
        });
    }
    let r2: f64 = x.iter().map(|v| v * v).sum();
    if r2 == 0.0 {
        Err(Error::SingularPoint)
    } else {
        Ok(r2)
    }
}

/// Precomputed constants for fast evaluation in inner loops (0-based indices).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Newton {
    pub n: usize,
    pub omega: f64,
    pub c: f64,
}

impl Newton {
    pub fn new(dim: Dimension) -> Self {
        Self {
            n: dim.n(),
            omega: dim.omega(),
            c: dim.newton_constant(),
        }
    }

    #[inline]
    fn inv_rn(&self, r2: f64) -> f64 {
        r2.powf(-0.5 * self.n as f64)
    }

    #[inline]
    pub fn value_r2(&self, r2: f64) -> f64 {
        self.c * r2.powf(1.0 - 0.5 * self.n as f64)
    }

    #[inline]
    pub fn d1(&self, x: &[f64], i: usize) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        -x[i] * self.inv_rn(r2) / self.omega
    }

    #[inline]
    pub fn d2(&self, x: &[f64], i: usize, j: usize) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let delta = if i == j { 1.0 } else { 0.0 };
        (self.n as f64 * x[i] * x[j] / r2 - delta) * self.inv_rn(r2) / self.omega
    }

    #[inline]
    pub fn d3(&self, x: &[f64], i: usize, j: usize, k: usize) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let n = self.n as f64;
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        let rn2 = self.inv_rn(r2) / r2;
        (n * (d(i, k) * x[j] + d(j, k) * x[i] + d(i, j) * x[k]) * rn2
            - n * (n + 2.0) * x[i] * x[j] * x[k] * rn2 / r2)
            / self.omega
    }

    /// Derivative of `E` with the multi-index given as a list of 0-based coordinates.
    #[inline]
    pub fn derivative(&self, x: &[f64], indices: &[usize]) -> f64 {
        match indices {
            [] => self.value_r2(x.iter().map(|v| v * v).sum()),
            [i] => self.d1(x, *i),
            [i, j] => self.d2(x, *i, *j),
            [i, j, k] => self.d3(x, *i, *j, *k),
            _ => f64::NAN,
        }
    }
}
