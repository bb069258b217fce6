//! Poisson kernel `(K, π)`, Green's matrix and the Stokes fundamental matrix.
//!
//! With the heat kernel solving `∂_t Γ = ½ΔΓ` the Poisson kernel is
//! `K_ij = −δ_ij D_nΓ − 2L_ij − 2δ_jn δ(t) D_iE`, and the pressure kernel
//! acting on data `g_j` is
//! `D_jD_nS(g_j) − D_j(D_n²A ∗ g_j) − 2D_j ∂_t(A ∗ g_j) + 2δ_jn S(∂_t g_n)`.

use std::sync::Arc;

use puruspe::gammp;

use super::heat::{heat, heat1, heat1_dz};
use super::layer::{kernel_A, kernel_L_block, weighted_layer, AOrder, InnerRoute};
use super::newton::Newton;
use super::spectral::SpectralKernels;
use super::{norm, Dimension, HalfSpacePoint, KernelMatrixValue, SpaceTimePoint};
use crate::error::{Error, Result};
use crate::quadrature::{IntegralResult, QuadratureSpec, TimeKernel};

/// How layer-kernel entries are evaluated.
#[derive(Debug, Clone)]
pub enum KernelRoute {
    /// Nested spatial quadrature of the defining integrals.
    Quadrature(QuadratureSpec),
    /// Hankel profiles of the tangential symbols.
    Spectral,
}

/// Regular and `δ(t)` parts of one Poisson-kernel entry at a space-time point.
#[derive(Debug, Clone)]
pub struct KernelSplit {
    pub regular: IntegralResult,
    pub instantaneous: f64,
}

/// The four parts of a pressure-kernel entry at a space-time point: the
/// regular kernel, the kernel whose convolution is differentiated in time, and
/// the coefficients of `δ(t)` and `δ′(t)`.
#[derive(Debug, Clone)]
pub struct PressureSplit {
    pub regular: IntegralResult,
    pub differentiated: IntegralResult,
    pub instantaneous: f64,
    pub instantaneous_derivative: f64,
}

fn poisson_regular_entry(i: usize, j: usize, p: &SpaceTimePoint, dim: Dimension, route: &KernelRoute) -> Result<IntegralResult> {
    let n = dim.n();
    match route {
        KernelRoute::Spectral => {
            let (k, err) = SpectralKernels::new(dim).poisson_regular(p)?;
            Ok(IntegralResult {
                value: k.get(i, j),
                error_estimate: err,
                evaluations: 0,
                converged: true,
            })
        }
        KernelRoute::Quadrature(spec) => {
            let route = if j < n {
                InnerRoute::TangentialOnGaussian
            } else {
                InnerRoute::NormalOnGaussian
            };
            let l = kernel_L_block(&[(i, j)], route, p, dim, spec)?.map(|v| v[0]);
            let diag = if i == j {
                heat1_dz(p.point.normal, p.t) * heat(&p.point.tangential, p.t)
            } else {
                0.0
            };
            Ok(IntegralResult {
                value: -diag - 2.0 * l.value,
                error_estimate: 2.0 * l.error_estimate,
                ..l
            })
        }
    }
}

/// Both parts of `K_ij` at `p`, whose coordinates are the offset `(x′−y′, x_n)`.
#[allow(non_snake_case)]
pub fn poisson_K_at(i: usize, j: usize, p: &SpaceTimePoint, dim: Dimension, route: &KernelRoute) -> Result<KernelSplit> {
    let n = dim.n();
    dim.check_index(i, n)?;
    dim.check_index(j, n)?;
    let regular = poisson_regular_entry(i, j, p, dim, route)?;
    Ok(KernelSplit {
        regular,
        instantaneous: instantaneous_velocity(i, j, &p.point, dim),
    })
}

fn instantaneous_velocity(i: usize, j: usize, x: &HalfSpacePoint, dim: Dimension) -> f64 {
    if j == dim.n() {
        -2.0 * Newton::new(dim).d1(&x.coords(), i - 1)
    } else {
        0.0
    }
}

/// `K_ij` at a fixed spatial offset as a [`TimeKernel`] in the lag variable.
///
/// The regular part evaluates to `NaN` if its quadrature fails.
#[allow(non_snake_case)]
pub fn poisson_K(i: usize, j: usize, offset: &HalfSpacePoint, dim: Dimension, route: KernelRoute) -> Result<TimeKernel> {
    let n = dim.n();
    dim.check_index(i, n)?;
    dim.check_index(j, n)?;
    offset.check_interior(dim)?;
    let point = offset.clone();
    let instantaneous = instantaneous_velocity(i, j, offset, dim);
    let regular = move |tau: f64| {
        if tau <= 0.0 {
            return 0.0;
        }
        let p = SpaceTimePoint::new(point.clone(), tau);
        poisson_regular_entry(i, j, &p, dim, &route).map_or(f64::NAN, |r| r.value)
    };
    Ok(TimeKernel::new(regular, instantaneous))
}

fn a_order(dim: Dimension, j: usize, normal: u8) -> AOrder {
    if j == dim.n() {
        AOrder {
            tangential: vec![],
            normal: normal + 1,
            time: 0,
        }
    } else {
        AOrder {
            tangential: vec![j],
            normal,
            time: 0,
        }
    }
}

fn a_value(p: &SpaceTimePoint, dim: Dimension, order: &AOrder, route: &KernelRoute) -> Result<IntegralResult> {
    match route {
        KernelRoute::Spectral => SpectralKernels::new(dim).kernel_a(p, order),
        KernelRoute::Quadrature(spec) => kernel_A(p, dim, Some(order), spec),
    }
}

fn pressure_instantaneous(j: usize, x: &HalfSpacePoint, dim: Dimension) -> (f64, f64) {
    let k = Newton::new(dim);
    let c = x.coords();
    let n = dim.n();
    let delta = k.d2(&c, j - 1, n - 1);
    let delta_prime = if j == n { 2.0 * k.value_r2(super::norm2(&c)) } else { 0.0 };
    (delta, delta_prime)
}

/// All parts of `π_j` at `p` (coordinates are the offset `(x′−y′, x_n)`).
///
/// The `j = n` entry follows the same derivation as `j < n` and carries the
/// additional `δ′(t)` term.
pub fn pressure_pi_at(j: usize, p: &SpaceTimePoint, dim: Dimension, route: &KernelRoute) -> Result<PressureSplit> {
    dim.check_index(j, dim.n())?;
    p.check_interior(dim)?;
    let regular = a_value(p, dim, &a_order(dim, j, 2), route)?;
    let differentiated = a_value(p, dim, &a_order(dim, j, 0), route)?;
    let (instantaneous, instantaneous_derivative) = pressure_instantaneous(j, &p.point, dim);
    Ok(PressureSplit {
        regular: IntegralResult {
            value: -regular.value,
            ..regular
        },
        differentiated: IntegralResult {
            value: -2.0 * differentiated.value,
            error_estimate: 2.0 * differentiated.error_estimate,
            ..differentiated
        },
        instantaneous,
        instantaneous_derivative,
    })
}

/// `π_j` at a fixed spatial offset as a [`TimeKernel`].
pub fn pressure_pi(j: usize, offset: &HalfSpacePoint, dim: Dimension, route: KernelRoute) -> Result<TimeKernel> {
    dim.check_index(j, dim.n())?;
    offset.check_interior(dim)?;
    let (instantaneous, delta_prime) = pressure_instantaneous(j, offset, dim);
    let route = Arc::new(route);
    let make = |normal: u8, factor: f64| {
        let point = offset.clone();
        let route = route.clone();
        let order = a_order(dim, j, normal);
        move |tau: f64| {
            if tau <= 0.0 {
                return 0.0;
            }
            let p = SpaceTimePoint::new(point.clone(), tau);
            a_value(&p, dim, &order, &route).map_or(f64::NAN, |r| factor * r.value)
        }
    };
    Ok(TimeKernel::new(make(2, -1.0), instantaneous).with_differentiated(make(0, -2.0), delta_prime))
}

/// Green's matrix entry `G_ij(x, y, t)` of the half-space.
///
/// `G_ij = δ_ij(Γ(x−y) − Γ(x−y*)) − 4∫₀^{x_n} Γ₁(z_n+y_n, t) J_ij(x′−y′, x_n−z_n, t) dz_n`
/// for `j < n`, where `J_ij(x′,h,t) = ∫ D_jΓ′(w′,t) D_iE(x′−w′,h) dw′`; the
/// correction vanishes for `j = n`.
pub fn greens_matrix(
    i: usize,
    j: usize,
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
    t: f64,
    dim: Dimension,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    let n = dim.n();
    dim.check_index(i, n)?;
    dim.check_index(j, n)?;
    x.check(dim)?;
    y.check(dim)?;
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    if x == y {
        return Err(Error::SingularPoint);
    }
    let diff: Vec<f64> = x.tangential.iter().zip(&y.tangential).map(|(a, b)| a - b).collect();
    let mut direct = diff.clone();
    direct.push(x.normal - y.normal);
    let mut image = diff.clone();
    image.push(x.normal + y.normal);
    let gamma = if i == j { heat(&direct, t) - heat(&image, t) } else { 0.0 };
    if j == n || x.normal == 0.0 {
        return Ok(IntegralResult {
            value: gamma,
            error_estimate: 0.0,
            evaluations: 0,
            converged: true,
        });
    }
    let yn = y.normal;
    let weight = |z: f64| -4.0 * heat1(z + yn, t);
    let c = weighted_layer(&[(i, j)], InnerRoute::TangentialOnGaussian, &diff, x.normal, t, &weight, dim, spec);
    Ok(IntegralResult {
        value: gamma + c.value[0],
        error_estimate: c.error_estimate,
        evaluations: c.evaluations,
        converged: c.converged,
    })
}

/// Stokes fundamental matrix `F_ij = δ_ij Γ + D_iD_jH` with `H = Γ ∗ E`.
///
/// `H` is radial with `H′(r) = −P(|y| < r)/(ω_n r^{n−1})`, where the mass of
/// the Gaussian in the ball is a regularized incomplete gamma function.
#[allow(non_snake_case)]
pub fn fundamental_F(i: usize, j: usize, p: &SpaceTimePoint, dim: Dimension) -> Result<f64> {
    let n = dim.n();
    dim.check_index(i, n)?;
    dim.check_index(j, n)?;
    p.point.check(dim)?;
    if !(p.t > 0.0) {
        return Err(Error::NonPositiveTime(p.t));
    }
    let x = p.point.coords();
    let r = norm(&x);
    if r == 0.0 {
        return Err(Error::SingularPoint);
    }
    let t = p.t;
    let g = heat(&x, t);
    let nf = n as f64;
    let mass = gammp(0.5 * nf, r * r / (2.0 * t));
    let h1 = -mass / (dim.omega() * r.powi(n as i32 - 1));
    let h2 = -g - (nf - 1.0) * h1 / r;
    let d = if i == j { 1.0 } else { 0.0 };
    let (xi, xj) = (x[i - 1] / r, x[j - 1] / r);
    Ok(d * g + xi * xj * (h2 - h1 / r) + d * h1 / r)
}

/// `K` at `p` for all entries by the chosen route; the `δ(t)` parts are returned separately.
pub fn poisson_matrix(p: &SpaceTimePoint, dim: Dimension, route: &KernelRoute) -> Result<(KernelMatrixValue, KernelMatrixValue)> {
    let n = dim.n();
    let mut regular = KernelMatrixValue::zeros(n);
    let mut instantaneous = KernelMatrixValue::zeros(n);
    match route {
        KernelRoute::Spectral => {
            regular = SpectralKernels::new(dim).poisson_regular(p)?.0;
        }
        KernelRoute::Quadrature(_) => {
            for i in 1..=n {
                for j in 1..=n {
                    regular.set(i, j, poisson_regular_entry(i, j, p, dim, route)?.value);
                }
            }
        }
    }
    for i in 1..=n {
        instantaneous.set(i, n, instantaneous_velocity(i, n, &p.point, dim));
    }
    Ok((regular, instantaneous))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{adaptive, Tolerance};
    use std::f64::consts::PI;

    fn pt(c: &[f64], t: f64) -> SpaceTimePoint {
        SpaceTimePoint::from_coords(c, t).unwrap()
    }

    fn spec() -> QuadratureSpec {
        QuadratureSpec {
            rel_tol: 1e-8,
            ..QuadratureSpec::default()
        }
    }

    #[test]
    fn instantaneous_parts() {
        let d = Dimension::THREE;
        let p = pt(&[1.0, 0.0, 1.0], 1.0);
        let k11 = poisson_K_at(1, 1, &p, d, &KernelRoute::Spectral).unwrap();
        assert_eq!(k11.instantaneous, 0.0);
        let k13 = poisson_K_at(1, 3, &p, d, &KernelRoute::Spectral).unwrap();
        let exact = 2.0 / (4.0 * PI * 2f64.powf(1.5));
        assert!((k13.instantaneous - exact).abs() < 1e-15);
        let axis = pt(&[0.0, 0.0, 1.0], 1.0);
        let pi1 = pressure_pi_at(1, &axis, d, &KernelRoute::Spectral).unwrap();
        assert!(pi1.instantaneous.abs() < 1e-15 && pi1.regular.value.is_finite());
    }

    #[test]
    fn routes_agree_on_poisson_kernel() {
        let d = Dimension::THREE;
        let p = pt(&[0.5, -0.2, 0.4], 0.7);
        let q = KernelRoute::Quadrature(spec());
        let (fast, _) = poisson_matrix(&p, d, &KernelRoute::Spectral).unwrap();
        for (i, j) in [(1, 1), (1, 2), (3, 1), (1, 3), (3, 3)] {
            let slow = poisson_K_at(i, j, &p, d, &q).unwrap().regular.value;
            assert!((slow - fast.get(i, j)).abs() < 1e-6 * slow.abs(), "K{i}{j}: {slow} {}", fast.get(i, j));
        }
    }

    #[test]
    fn time_kernel_matches_point_evaluation() {
        let d = Dimension::THREE;
        let offset = HalfSpacePoint::new(vec![0.3, 0.1], 0.5).unwrap();
        let k = poisson_K(2, 3, &offset, d, KernelRoute::Spectral).unwrap();
        let at = poisson_K_at(2, 3, &SpaceTimePoint::new(offset.clone(), 0.6), d, &KernelRoute::Spectral).unwrap();
        assert_eq!((k.regular)(0.6), at.regular.value);
        assert_eq!(k.instantaneous, at.instantaneous);
        let pi = pressure_pi(3, &offset, d, KernelRoute::Spectral).unwrap();
        assert!(pi.instantaneous_derivative > 0.0 && pi.differentiated.is_some());
    }

    #[test]
    fn green_matrix_vanishes_on_boundary_in_x() {
        let d = Dimension::THREE;
        let y = HalfSpacePoint::new(vec![0.2, -0.1], 0.5).unwrap();
        let inside = greens_matrix(1, 1, &HalfSpacePoint::new(vec![0.1, 0.3], 0.5).unwrap(), &y, 1.0, d, &spec())
            .unwrap()
            .value;
        let near = greens_matrix(1, 1, &HalfSpacePoint::new(vec![0.1, 0.3], 1e-3).unwrap(), &y, 1.0, d, &spec())
            .unwrap()
            .value;
        assert!(near.abs() < 1e-2 * inside.abs(), "{near} {inside}");
        let gn = greens_matrix(3, 3, &HalfSpacePoint::new(vec![0.1, 0.3], 0.5).unwrap(), &y, 1.0, d, &spec()).unwrap();
        let mut a = vec![-0.1, 0.4, 0.0];
        let mut b = a.clone();
        b[2] = 1.0;
        a[2] = 0.0;
        let exact = heat(&a, 1.0) - heat(&b, 1.0);
        assert!((gn.value - exact).abs() < 1e-15);
    }

    #[test]
    fn green_matrix_normal_derivative_gives_poisson_kernel() {
        let d = Dimension::THREE;
        let x = HalfSpacePoint::new(vec![0.4, 0.2], 0.6).unwrap();
        let t = 0.8;
        let h = 2e-3;
        let g = |yn: f64, i: usize, j: usize| {
            greens_matrix(i, j, &x, &HalfSpacePoint { tangential: vec![0.0, 0.0], normal: yn }, t, d, &spec())
                .unwrap()
                .value
        };
        let (k, _) = poisson_matrix(&SpaceTimePoint::new(x.clone(), t), d, &KernelRoute::Spectral).unwrap();
        for (i, j) in [(1, 1), (2, 1), (3, 2)] {
            let fd = 0.5 * (-3.0 * g(0.0, i, j) + 4.0 * g(h, i, j) - g(2.0 * h, i, j)) / (2.0 * h);
            assert!((fd - k.get(i, j)).abs() < 1e-4 * k.get(i, j).abs().max(1e-3), "{i}{j}: {fd} {}", k.get(i, j));
        }
    }

    /// `H(r) = ∫₀^∞ 4πs² Γ(s) / (4π max(r,s)) ds` in three dimensions.
    fn h_oracle(r: f64, t: f64) -> f64 {
        let tol = Tolerance::new(1e-15, 1e-13, 400);
        adaptive(
            |s: f64| s * s * heat(&[s, 0.0, 0.0], t) / s.max(r),
            0.0,
            r + 40.0 * t.sqrt(),
            &[r],
            &tol,
        )
        .value
    }

    #[test]
    fn fundamental_matrix_matches_radial_oracle() {
        let d = Dimension::THREE;
        let t = 0.9;
        let x = [0.6, 0.3, 0.5];
        let step = 1e-3;
        let hh = |c: &[f64]| h_oracle(norm(c), t);
        for (i, j) in [(1, 1), (1, 2), (3, 3)] {
            let mut pp = x;
            let mut pm = x;
            let mut mp = x;
            let mut mm = x;
            pp[i - 1] += step;
            pp[j - 1] += step;
            pm[i - 1] += step;
            pm[j - 1] -= step;
            mp[i - 1] -= step;
            mp[j - 1] += step;
            mm[i - 1] -= step;
            mm[j - 1] -= step;
            let fd = (hh(&pp) - hh(&pm) - hh(&mp) + hh(&mm)) / (4.0 * step * step);
            let delta = if i == j { heat(&x, t) } else { 0.0 };
            let f = fundamental_F(i, j, &pt(&x, t), d).unwrap();
            assert!((f - delta - fd).abs() < 1e-5, "{i}{j}: {} {fd}", f - delta);
        }
        let trace: f64 = (1..=3).map(|i| fundamental_F(i, i, &pt(&x, t), d).unwrap()).sum();
        assert!((trace - 2.0 * heat(&x, t)).abs() < 1e-14);
        let axis = fundamental_F(1, 2, &pt(&[1.0, 0.0, 0.0], t), d).unwrap();
        assert!(axis.abs() < 1e-16);
        let far = [3.0, 4.0, 5.0];
        let k = Newton::new(d);
        for (i, j) in [(1, 1), (1, 3)] {
            let f = fundamental_F(i, j, &pt(&far, 0.5), d).unwrap();
            let e = k.d2(&far, i - 1, j - 1);
            assert!((f - e).abs() < 1e-2 * e.abs());
        }
    }
}
