//! The heat kernel and its derivatives.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Dimension, SpaceTimePoint};
use crate::error::{Error, Result};

/// Derivative multi-index: one order per space coordinate plus a time order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivativeOrder {
    pub space: Vec<u8>,
    pub time: u8,
}

impl DerivativeOrder {
    pub fn none(n: usize) -> Self {
        Self {
            space: vec![0; n],
            time: 0,
        }
    }

    /// First derivative in coordinate `k` (1-based).
    pub fn d(n: usize, k: usize) -> Self {
        let mut o = Self::none(n);
        o.space[k - 1] = 1;
        o
    }

    pub fn dt(n: usize) -> Self {
        Self {
            space: vec![0; n],
            time: 1,
        }
    }

    pub fn space_order(&self) -> usize {
        self.space.iter().map(|&k| k as usize).sum()
    }
}

/// Maximum total space order accepted by [`gaussian_derivative`].
pub const MAX_SPACE_ORDER: usize = 3;

/// `Γ(x,t) = (2πt)^{-n/2} e^{-|x|²/(2t)}` for `t > 0` and `0` otherwise.
pub fn gaussian(p: &SpaceTimePoint, dim: Dimension) -> f64 {
    if p.t <= 0.0 {
        return 0.0;
    }
    debug_assert_eq!(p.point.tangential.len(), dim.tangential());
    heat(&p.point.coords(), p.t)
}

/// Analytic derivative of [`gaussian`]; at most [`MAX_SPACE_ORDER`] in space and one in time.
pub fn gaussian_derivative(p: &SpaceTimePoint, dim: Dimension, order: &DerivativeOrder) -> Result<f64> {
    if order.space.len() != dim.n() {
        return Err(Error::Shape {
            expected: dim.n(),
            found: order.space.len(),
        });
    }
    if order.space_order() > MAX_SPACE_ORDER || order.time > 1 {
        return Err(Error::DerivativeOrder(format!(
            "space order {} (max {MAX_SPACE_ORDER}), time order {} (max 1)",
            order.space_order(),
            order.time
        )));
    }
    if p.t <= 0.0 {
        return Ok(0.0);
    }
    Ok(heat_derivative(&p.point.coords(), p.t, &order.space, order.time))
}

/// Heat kernel in `ℝ^{x.len()}`.
#[inline]
pub(crate) fn heat(x: &[f64], t: f64) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (2.0 * PI * t).powf(-0.5 * x.len() as f64) * (-r2 / (2.0 * t)).exp()
}

/// One-dimensional heat kernel `(2πt)^{-1/2} e^{-z²/(2t)}`.
#[inline]
pub(crate) fn heat1(z: f64, t: f64) -> f64 {
    (2.0 * PI * t).powf(-0.5) * (-z * z / (2.0 * t)).exp()
}

/// `∂_z` of [`heat1`].
#[inline]
pub(crate) fn heat1_dz(z: f64, t: f64) -> f64 {
    -(z / t) * heat1(z, t)
}


/// Probabilists' Hermite polynomial `He_k`.
#[inline]
pub(crate) fn hermite(k: u32, x: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut a, mut b) = (1.0, x);
            for j in 1..k {
                let c = x * b - j as f64 * a;
                a = b;
                b = c;
            }
            b
        }
    }
}

/// `∂_z^k` of [`heat1`]: `(−1)^k He_k(z/√t) t^{-k/2} heat1(z,t)`.
#[inline]
pub(crate) fn heat1_derivative(k: u32, z: f64, t: f64) -> f64 {
    let s = t.sqrt();
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    sign * hermite(k, z / s) * s.powi(-(k as i32)) * heat1(z, t)
}

/// Mixed derivative `D_t^{time} D^{space} Γ` of the heat kernel in `ℝ^{x.len()}`,
/// using `∂_t Γ = ½ΔΓ` for the time derivative.
pub(crate) fn heat_derivative(x: &[f64], t: f64, space: &[u8], time: u8) -> f64 {
    let product = |orders: &[u8]| -> f64 {
        x.iter()
            .zip(orders)
            .map(|(&z, &k)| heat1_derivative(k as u32, z, t))
            .product()
    };
    match time {
        0 => product(space),
        _ => {
            let mut orders = space.to_vec();
            let mut total = 0.0;
            for l in 0..x.len() {
                orders[l] += 2;
                total += 0.5 * heat_derivative(x, t, &orders, time - 1);
                orders[l] -= 2;
            }
            total
        }
    }
}
