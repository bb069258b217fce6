//! Layer-type kernels defined by convolutions over the boundary hyperplane:
//! `A`, `L_ij`, `κ` and `B_in`, evaluated by nested spatial quadrature.

use super::heat::{heat, heat1, heat1_derivative, heat1_dz, heat_derivative};
use super::newton::Newton;
use super::{norm, Dimension, SpaceTimePoint};
use crate::error::{Error, Result};
use crate::quadrature::{
    adaptive, integrate_halfplane, HalfplaneResult, IntegralResult, QuadratureSpec, RegionSplit, TailModel,
};

/// Derivative multi-index for [`kernel_A`]: tangential coordinates (1-based,
/// repeated for higher order), normal order and time order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AOrder {
    pub tangential: Vec<usize>,
    pub normal: u8,
    pub time: u8,
}

impl AOrder {
    pub fn space_order(&self) -> usize {
        self.tangential.len() + self.normal as usize
    }
}

/// Largest total space order accepted by [`kernel_A`].
pub const A_MAX_SPACE_ORDER: usize = 3;

/// Scale-aware absolute tolerance: `spec.abs_tol` times a kernel magnitude.
fn scaled_spec(spec: &QuadratureSpec, magnitude: f64) -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: spec.abs_tol * magnitude,
        tail_bound_target: spec.tail_bound_target * magnitude,
        ..spec.clone()
    }
}

/// `A(x,t) = ∫ Γ(z′,0,t) E(x′−z′, x_n) dz′` and its derivatives.
///
/// Tangential and time derivatives act on the Gaussian factor, normal
/// derivatives on `E`. Orders up to three in space and one in time.
#[allow(non_snake_case)]
pub fn kernel_A(p: &SpaceTimePoint, dim: Dimension, order: Option<&AOrder>, spec: &QuadratureSpec) -> Result<IntegralResult> {
    p.check_interior(dim)?;
    let default = AOrder::default();
    let order = order.unwrap_or(&default);
    if order.space_order() > A_MAX_SPACE_ORDER || order.time > 1 {
        return Err(Error::DerivativeOrder(format!(
            "kernel A supports space order ≤ {A_MAX_SPACE_ORDER} and time order ≤ 1, got {order:?}"
        )));
    }
    let n = dim.n();
    let m = dim.tangential();
    for &k in &order.tangential {
        dim.check_index(k, m)?;
    }
    let mut space = vec![0u8; n];
    for &k in &order.tangential {
        space[k - 1] += 1;
    }
    let normal_indices = vec![n - 1; order.normal as usize];
    let newton = Newton::new(dim);
    let x = &p.point.tangential;
    let h = p.point.normal;
    let t = p.t;
    let mut z = vec![0.0; n];
    let mut w = vec![0.0; n];
    w[n - 1] = h;
    let integrand = |zp: &[f64]| -> f64 {
        z[..m].copy_from_slice(zp);
        z[n - 1] = 0.0;
        for k in 0..m {
            w[k] = x[k] - zp[k];
        }
        heat_derivative(&z, t, &space, order.time) * newton.derivative(&w, &normal_indices)
    };
    let reach = h.max(t.sqrt());
    let degree = (order.tangential.len() + 2 * order.time as usize) as u32;
    let magnitude = heat1(0.0, t) * t.powf(-0.5 * degree as f64) * reach.powf(2.0 - n as f64 - order.normal as f64);
    let amplitude = magnitude * (n as f64).powi(order.time as i32) * 4f64.powi(order.normal as i32 + 1);
    let tail = TailModel::Gaussian {
        variance: t,
        amplitude,
        degree,
    };
    let a = norm(x);
    let s = t.sqrt();
    let breaks = [0.5 * h, h, 2.0 * h, (a - 3.0 * s).max(0.0), a, a + 3.0 * s];
    let res = integrate_halfplane(
        m,
        integrand,
        &scaled_spec(spec, magnitude),
        &RegionSplit::Centered { center: x.clone() },
        tail,
        &breaks,
    );
    Ok(res.total)
}

/// How the inner hyperplane integral of an `L` entry is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerRoute {
    /// `∫ D_jΓ′(y′,t) D_iE(x′−y′,h) dy′` (`j < n`), weighted by `∂_zΓ₁(y_n)` at `h = x_n − y_n`.
    TangentialOnGaussian,
    /// `∫ Γ′(y′,t) D_iE(x′−y′,u) dy′`, weighted by `∂_z²Γ₁(x_n − u)`; yields the `j = n` column.
    NormalOnGaussian,
}

fn heat_slice_grad(y: &[f64], t: f64, j: usize) -> f64 {
    -(y[j] / t) * heat(y, t)
}

/// The inner integrals for the entries `(i, j)` (1-based) at height `h`.
fn inner_block(
    entries: &[(usize, usize)],
    route: InnerRoute,
    x: &[f64],
    h: f64,
    t: f64,
    dim: Dimension,
    spec: &QuadratureSpec,
    split: bool,
) -> HalfplaneResult<Vec<f64>> {
    let n = dim.n();
    let m = dim.tangential();
    let newton = Newton::new(dim);
    let mut w = vec![0.0; n];
    w[n - 1] = h;
    let integrand = |y: &[f64]| -> Vec<f64> {
        for k in 0..m {
            w[k] = x[k] - y[k];
        }
        let g = heat(y, t);
        entries
            .iter()
            .map(|&(i, j)| match route {
                InnerRoute::TangentialOnGaussian => -(y[j - 1] / t) * g * newton.d1(&w, i - 1),
                InnerRoute::NormalOnGaussian => g * newton.d1(&w, i - 1),
            })
            .collect()
    };
    let a = norm(x);
    let s = t.sqrt();
    let reach = a.max(s).max(h);
    let degree = match route {
        InnerRoute::TangentialOnGaussian => 1,
        InnerRoute::NormalOnGaussian => 0,
    };
    let magnitude = s.powi(-degree) * reach.powf(1.0 - n as f64) / dim.omega();
    let tail = TailModel::Gaussian {
        variance: t,
        amplitude: magnitude,
        degree: degree as u32,
    };
    let regions = if split && a > 0.0 {
        RegionSplit::FourRegion {
            x_tangential: x.to_vec(),
        }
    } else {
        RegionSplit::Whole
    };
    // Geometric ladder from h up to the Gaussian scale resolves the D_iE spike when h ≪ √t.
    let mut breaks = vec![0.5 * h, s, 3.0 * s];
    breaks.extend(std::iter::successors(Some(h), |b| Some(4.0 * b)).take_while(|b| *b < 3.0 * s));
    integrate_halfplane(m, integrand, &scaled_spec(spec, magnitude), &regions, tail, &breaks)
}

fn check_l_entries(entries: &[(usize, usize)], route: InnerRoute, dim: Dimension) -> Result<()> {
    let n = dim.n();
    for &(i, j) in entries {
        dim.check_index(i, n)?;
        match route {
            InnerRoute::TangentialOnGaussian => dim.check_index(j, n - 1)?,
            InnerRoute::NormalOnGaussian => {
                if j != n {
                    return Err(Error::Index { index: j, min: n, max: n });
                }
            }
        }
    }
    Ok(())
}

/// Several entries of `L` at one point, sharing the quadrature.
///
/// With [`InnerRoute::TangentialOnGaussian`], entries have `j < n` and
/// `L_ij = ∫₀^{x_n} ∂_zΓ₁(y_n,t) ∫ D_jΓ′(y′,t) D_iE(x′−y′, x_n−y_n) dy′ dy_n`,
/// the inner integral split into four regions about `x′`.
/// With [`InnerRoute::NormalOnGaussian`], entries have `j = n` and
/// `L_in = ∫₀^{x_n} ∂_z²Γ₁(x_n−u,t) ∫ Γ′(y′,t) D_iE(x′−y′, u) dy′ du`.
#[allow(non_snake_case)]
pub fn kernel_L_block(
    entries: &[(usize, usize)],
    route: InnerRoute,
    p: &SpaceTimePoint,
    dim: Dimension,
    spec: &QuadratureSpec,
) -> Result<IntegralResult<Vec<f64>>> {
    p.check_interior(dim)?;
    check_l_entries(entries, route, dim)?;
    let xn = p.point.normal;
    let t = p.t;
    let weight = |y: f64| match route {
        InnerRoute::TangentialOnGaussian => heat1_dz(y, t),
        InnerRoute::NormalOnGaussian => heat1_derivative(2, xn - y, t),
    };
    Ok(weighted_layer(entries, route, &p.point.tangential, xn, t, &weight, dim, spec))
}

/// `∫₀^{x_n} w(y) J(x′, h(y)) dy` where `J` is the inner hyperplane integral of `route`
/// and `h = x_n − y` (tangential route) or `h = y` (normal route).
#[allow(clippy::too_many_arguments)]
pub(crate) fn weighted_layer(
    entries: &[(usize, usize)],
    route: InnerRoute,
    x: &[f64],
    xn: f64,
    t: f64,
    weight: &dyn Fn(f64) -> f64,
    dim: Dimension,
    spec: &QuadratureSpec,
) -> IntegralResult<Vec<f64>> {
    let inner_spec = spec.scaled(0.1);
    let mut inner_ok = true;
    let mut evaluations = 0usize;
    // Entry values followed by the density of the inner error estimate.
    let outer = |y: f64| -> Vec<f64> {
        let w = weight(y);
        let h = match route {
            InnerRoute::TangentialOnGaussian => xn - y,
            InnerRoute::NormalOnGaussian => y,
        };
        let r = inner_block(entries, route, x, h, t, dim, &inner_spec, true);
        inner_ok &= r.total.converged;
        evaluations += r.total.evaluations;
        let mut v: Vec<f64> = r.total.value.into_iter().map(|v| v * w).collect();
        v.push(r.total.error_estimate * w.abs());
        v
    };
    let s = t.sqrt();
    let magnitude = (t.powf(-0.5) * (norm(x).powi(2) + xn * xn + t).powf(-0.5 * dim.n() as f64)).min(1e300);
    let tol = scaled_spec(spec, magnitude).tolerance();
    let breaks = [s, 3.0 * s, xn - s, xn - 0.1 * xn, 0.5 * xn];
    let mut res = adaptive(outer, 0.0, xn, &breaks, &tol);
    let inner_err = res.value.pop().map_or(0.0, f64::abs);
    let error_estimate = res.error_estimate + inner_err;
    let scale = res.value.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    IntegralResult {
        converged: res.converged && (inner_ok || error_estimate <= tol.abs_tol.max(tol.rel_tol * scale)),
        value: res.value,
        error_estimate,
        evaluations,
    }
}

/// `L_ij(x,t)` for `1 ≤ i ≤ n`, `1 ≤ j ≤ n−1` by the four-region nested quadrature.
#[allow(non_snake_case)]
pub fn kernel_L(i: usize, j: usize, p: &SpaceTimePoint, dim: Dimension, spec: &QuadratureSpec) -> Result<IntegralResult> {
    dim.check_index(j, dim.n() - 1)?;
    let r = kernel_L_block(&[(i, j)], InnerRoute::TangentialOnGaussian, p, dim, spec)?;
    Ok(r.map(|v| v[0]))
}

/// `L_in(x,t)` (the `j = n` column) computed directly from its definition,
/// with the normal derivative moved onto the one-dimensional Gaussian factor.
#[allow(non_snake_case)]
pub fn kernel_L_direct(i: usize, p: &SpaceTimePoint, dim: Dimension, spec: &QuadratureSpec) -> Result<IntegralResult> {
    let r = kernel_L_block(&[(i, dim.n())], InnerRoute::NormalOnGaussian, p, dim, spec)?;
    Ok(r.map(|v| v[0]))
}

/// `L_nn` from the trace relation `L_nn = −Σ_{i<n} L_ii − ½ D_{x_n}Γ`.
#[allow(non_snake_case)]
pub fn kernel_L_nn(p: &SpaceTimePoint, dim: Dimension, spec: &QuadratureSpec) -> Result<IntegralResult> {
    let n = dim.n();
    let entries: Vec<(usize, usize)> = (1..n).map(|i| (i, i)).collect();
    let r = kernel_L_block(&entries, InnerRoute::TangentialOnGaussian, p, dim, spec)?;
    let dn_gamma = normal_derivative_gaussian(p);
    Ok(r.map(|v| -v.iter().sum::<f64>() - 0.5 * dn_gamma))
}

/// `D_{x_n}Γ(x,t)` at a space-time point.
pub(crate) fn normal_derivative_gaussian(p: &SpaceTimePoint) -> f64 {
    heat1_dz(p.point.normal, p.t) * heat(&p.point.tangential, p.t)
}

/// `W₀(x′,t) = ∫ Γ′(z′,t) E(x′−z′,0) dz′` or its tangential derivative `∂_i W₀` (1-based).
fn boundary_convolution(x: &[f64], t: f64, dim: Dimension, derivative: Option<usize>, spec: &QuadratureSpec) -> IntegralResult {
    let n = dim.n();
    let m = dim.tangential();
    let c = dim.newton_constant();
    let integrand = |z: &[f64]| -> f64 {
        let r2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
        let e = c * r2.powf(1.0 - 0.5 * n as f64);
        match derivative {
            None => heat(z, t) * e,
            Some(i) => heat_slice_grad(z, t, i - 1) * e,
        }
    };
    let s = t.sqrt();
    let degree = derivative.map_or(0, |_| 1);
    let magnitude = c * s.powf(2.0 - n as f64) * s.powi(-degree);
    let tail = TailModel::Gaussian {
        variance: t,
        amplitude: magnitude,
        degree: degree as u32,
    };
    let a = norm(x);
    let breaks = [(a - 3.0 * s).max(0.0), a, a + 3.0 * s, s];
    integrate_halfplane(
        m,
        integrand,
        &scaled_spec(spec, magnitude),
        &RegionSplit::Centered { center: x.to_vec() },
        tail,
        &breaks,
    )
    .total
}

/// `κ(x,t) = ∫ D_{x_n}Γ(x′−z′, x_n, t) E(z′,0) dz′ = ∂_zΓ₁(x_n,t) · W₀(x′,t)`.
pub fn kernel_kappa(p: &SpaceTimePoint, dim: Dimension, spec: &QuadratureSpec) -> Result<IntegralResult> {
    p.check_interior(dim)?;
    let w = boundary_convolution(&p.point.tangential, p.t, dim, None, spec);
    let f = heat1_dz(p.point.normal, p.t);
    Ok(IntegralResult {
        value: f * w.value,
        error_estimate: f.abs() * w.error_estimate,
        ..w
    })
}

/// `B_in(x,t) = ∂_{x_i} κ(x,t)` for `i < n`; `B_nn = 0`.
#[allow(non_snake_case)]
pub fn kernel_B(i: usize, p: &SpaceTimePoint, dim: Dimension, spec: &QuadratureSpec) -> Result<IntegralResult> {
    p.check_interior(dim)?;
    dim.check_index(i, dim.n())?;
    if i == dim.n() {
        return Ok(IntegralResult {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
            converged: true,
        });
    }
    let w = boundary_convolution(&p.point.tangential, p.t, dim, Some(i), spec);
    let f = heat1_dz(p.point.normal, p.t);
    Ok(IntegralResult {
        value: f * w.value,
        error_estimate: f.abs() * w.error_estimate,
        ..w
    })
}

/// The four regional inner integrals `∫_{R_k} D_jΓ′(y′,t) D_iE(x′−y′,h) dy′`
/// (near field, annulus, inner ball, far field).
#[derive(Debug, Clone)]
pub struct RegionIntegrals {
    pub values: [f64; 4],
    pub errors: [f64; 4],
    pub converged: bool,
}

/// Regional decomposition of the inner `L` integral at a tangential point `x′ ≠ 0`.
pub fn region_integrals(
    i: usize,
    j: usize,
    x_tangential: &[f64],
    h: f64,
    t: f64,
    dim: Dimension,
    spec: &QuadratureSpec,
) -> Result<RegionIntegrals> {
    dim.check_index(i, dim.n())?;
    dim.check_index(j, dim.n() - 1)?;
    if x_tangential.len() != dim.tangential() {
        return Err(Error::Shape {
            expected: dim.tangential(),
            found: x_tangential.len(),
        });
    }
    if norm(x_tangential) == 0.0 {
        return Err(Error::Parameter("regions are undefined at x′ = 0".into()));
    }
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    let r = inner_block(&[(i, j)], InnerRoute::TangentialOnGaussian, x_tangential, h, t, dim, spec, true);
    let mut values = [0.0; 4];
    let mut errors = [0.0; 4];
    for (k, reg) in r.regions.iter().enumerate() {
        values[k] = reg.value[0];
        errors[k] = reg.error_estimate;
    }
    errors[3] += r.tail_bound;
    Ok(RegionIntegrals {
        values,
        errors,
        converged: r.regions.iter().all(|g| g.converged),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spec() -> QuadratureSpec {
        QuadratureSpec {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            ..QuadratureSpec::default()
        }
    }

    fn pt(c: &[f64], t: f64) -> SpaceTimePoint {
        SpaceTimePoint::from_coords(c, t).unwrap()
    }

    /// `∫_{ℝ²} (2πt)^{-1} e^{-|z|²/2t} / |x′−z| dz = √(π/2t) e^{-r²/4t} I₀(r²/4t)`.
    fn w0_oracle(r: f64, t: f64) -> f64 {
        let a = r * r / (4.0 * t);
        let scaled_i0 = (-a).exp() * puruspe::In(0, a);
        (PI / (2.0 * t)).sqrt() * scaled_i0 / (4.0 * PI)
    }

    #[test]
    fn kappa_matches_bessel_closed_form() {
        let d = Dimension::THREE;
        for (x1, xn, t) in [(0.0, 0.5, 1.0), (0.7, 0.3, 0.5), (2.0, 1.0, 0.4)] {
            let k = kernel_kappa(&pt(&[x1, 0.0, xn], t), d, &spec()).unwrap();
            let exact = heat1_dz(xn, t) * w0_oracle(x1, t);
            assert!((k.value - exact).abs() < 1e-7 * exact.abs(), "{} vs {}", k.value, exact);
            assert!(k.value < 0.0 || x1 > 0.0);
        }
    }

    #[test]
    fn kappa_is_rotation_invariant() {
        let d = Dimension::THREE;
        let a = kernel_kappa(&pt(&[0.6, 0.8, 0.4], 0.7), d, &spec()).unwrap().value;
        let b = kernel_kappa(&pt(&[1.0, 0.0, 0.4], 0.7), d, &spec()).unwrap().value;
        assert!((a - b).abs() < 1e-8 * a.abs());
    }

    #[test]
    fn b_matches_kappa_difference() {
        let d = Dimension::THREE;
        let x = [0.5, -0.3, 0.6];
        let t = 0.8;
        let h = 1e-3;
        let b = kernel_B(1, &pt(&x, t), d, &spec()).unwrap().value;
        let kp = kernel_kappa(&pt(&[x[0] + h, x[1], x[2]], t), d, &spec()).unwrap().value;
        let km = kernel_kappa(&pt(&[x[0] - h, x[1], x[2]], t), d, &spec()).unwrap().value;
        let fd = (kp - km) / (2.0 * h);
        assert!((b - fd).abs() < 1e-4 * b.abs(), "{b} vs {fd}");
        assert_eq!(kernel_B(3, &pt(&x, t), d, &spec()).unwrap().value, 0.0);
        let bm = kernel_B(1, &pt(&[-0.5, -0.3, 0.6], t), d, &spec()).unwrap().value;
        let bp = kernel_B(1, &pt(&[0.5, -0.3, 0.6], t), d, &spec()).unwrap().value;
        assert!((bm + bp).abs() < 1e-8 * bp.abs());
    }

    #[test]
    fn a_on_axis_matches_radial_reduction() {
        let d = Dimension::THREE;
        let (xn, t) = (0.6, 0.9);
        let full = kernel_A(&pt(&[0.0, 0.0, xn], t), d, None, &spec()).unwrap().value;
        let radial = adaptive(
            |r: f64| r * heat1(0.0, t) * (-(r * r) / (2.0 * t)).exp() / t / (4.0 * PI * (r * r + xn * xn).sqrt()),
            0.0,
            60.0,
            &[1.0, 5.0],
            &spec().tolerance(),
        )
        .value;
        assert!((full - radial).abs() < 1e-6 * radial.abs(), "{full} vs {radial}");
    }

    #[test]
    fn a_derivatives_match_differences() {
        let d = Dimension::THREE;
        let x = [0.4, 0.2, 0.5];
        let t = 0.6;
        let h = 1e-4;
        let sp = spec();
        let value = |c: &[f64], t: f64| kernel_A(&pt(c, t), d, None, &sp).unwrap().value;
        let dn = kernel_A(&pt(&x, t), d, Some(&AOrder { normal: 1, ..AOrder::default() }), &sp).unwrap().value;
        let fd = (value(&[x[0], x[1], x[2] + h], t) - value(&[x[0], x[1], x[2] - h], t)) / (2.0 * h);
        assert!((dn - fd).abs() < 1e-5 * dn.abs(), "{dn} {fd}");
        let d1 = kernel_A(&pt(&x, t), d, Some(&AOrder { tangential: vec![1], ..AOrder::default() }), &sp)
            .unwrap()
            .value;
        let fd1 = (value(&[x[0] + h, x[1], x[2]], t) - value(&[x[0] - h, x[1], x[2]], t)) / (2.0 * h);
        assert!((d1 - fd1).abs() < 1e-5 * d1.abs(), "{d1} {fd1}");
        let dt = kernel_A(&pt(&x, t), d, Some(&AOrder { time: 1, ..AOrder::default() }), &sp).unwrap().value;
        let fdt = (value(&x, t + h) - value(&x, t - h)) / (2.0 * h);
        assert!((dt - fdt).abs() < 1e-5 * dt.abs(), "{dt} {fdt}");
        // A is harmonic in x for x_n > 0.
        let lap_t: f64 = (1..=2)
            .map(|k| {
                kernel_A(&pt(&x, t), d, Some(&AOrder { tangential: vec![k, k], ..AOrder::default() }), &sp)
                    .unwrap()
                    .value
            })
            .sum();
        let dnn = kernel_A(&pt(&x, t), d, Some(&AOrder { normal: 2, ..AOrder::default() }), &sp).unwrap().value;
        assert!((lap_t + dnn).abs() < 1e-6 * dnn.abs(), "{lap_t} {dnn}");
    }
}
