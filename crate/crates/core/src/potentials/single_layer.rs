//! The single layer `S(f)(x) = ∫ E(x′−y′, x_n) f(y′) dy′` by direct polar quadrature.

use crate::error::{Error, Result};
use crate::kernels::newton::Newton;
use crate::kernels::{norm, Dimension, HalfSpacePoint};
use crate::quadrature::{integrate_polar_radial, IntegralResult, PolarPatch, QuadratureSpec, Tolerance};

fn layer<V, F>(
    f: &dyn Fn(&[f64]) -> f64,
    support_radius: f64,
    x: &HalfSpacePoint,
    dim: Dimension,
    spec: &QuadratureSpec,
    mut kernel: F,
) -> Result<IntegralResult<V>>
where
    V: crate::quadrature::QuadValue,
    F: FnMut(&[f64], f64) -> V,
{
    x.check(dim)?;
    spec.validate()?;
    if !(support_radius > 0.0) {
        return Err(Error::Parameter(format!("support radius must be positive, got {support_radius}")));
    }
    let offset = norm(&x.tangential);
    let a = x.normal;
    if a <= 0.0 && offset <= support_radius {
        return Err(Error::NotInterior(a));
    }
    let radius = support_radius + offset;
    let mut breaks: Vec<f64> = [0.5, 1.0, 2.0, 4.0].iter().map(|c| c * a).collect();
    breaks.push((support_radius - offset).abs());
    breaks.retain(|b| *b > 0.0 && *b < radius);
    let patch = PolarPatch::ball(&x.tangential, radius).with_breaks(&breaks);
    let m = dim.tangential();
    let mut point = vec![0.0; m + 1];
    point[m] = a;
    let res = integrate_polar_radial(
        m,
        &patch,
        |_| (),
        |_, y, off| {
            for (p, o) in point.iter_mut().zip(off) {
                *p = -o;
            }
            let w = if norm(y) <= support_radius { f(y) } else { 0.0 };
            kernel(&point, w)
        },
        &Tolerance::new(spec.abs_tol, spec.rel_tol, spec.max_subdivisions),
    );
    Ok(res)
}

/// `S(f)(x)` for `f` supported in `|y′| ≤ support_radius`.
#[allow(non_snake_case)]
pub fn single_layer_S(
    f: &dyn Fn(&[f64]) -> f64,
    support_radius: f64,
    x: &HalfSpacePoint,
    dim: Dimension,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    let newton = Newton::new(dim);
    layer(f, support_radius, x, dim, spec, |z, w| {
        if w == 0.0 {
            0.0
        } else {
            newton.derivative(z, &[]) * w
        }
    })
}

/// `∇S(f)(x)`, differentiating under the integral.
#[allow(non_snake_case)]
pub fn gradient_S(
    f: &dyn Fn(&[f64]) -> f64,
    support_radius: f64,
    x: &HalfSpacePoint,
    dim: Dimension,
    spec: &QuadratureSpec,
) -> Result<IntegralResult<Vec<f64>>> {
    let newton = Newton::new(dim);
    let n = dim.n();
    if x.normal <= 0.0 {
        return Err(Error::NotInterior(x.normal));
    }
    layer(f, support_radius, x, dim, spec, |z, w| {
        if w == 0.0 {
            vec![0.0; n]
        } else {
            (0..n).map(|i| newton.d1(z, i) * w).collect()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> QuadratureSpec {
        QuadratureSpec {
            rel_tol: 1e-9,
            abs_tol: 1e-13,
            ..QuadratureSpec::default()
        }
    }

    fn bump(y: &[f64]) -> f64 {
        let r2 = y.iter().map(|v| v * v).sum::<f64>();
        if r2 < 1.0 {
            (1.0 - r2).powi(3)
        } else {
            0.0
        }
    }

    #[test]
    fn zero_density_gives_zero() {
        let x = HalfSpacePoint::new(vec![0.2, 0.1], 0.3).unwrap();
        let s = single_layer_S(&|_| 0.0, 1.0, &x, Dimension::THREE, &spec()).unwrap();
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn uniform_disc_on_axis_matches_closed_form() {
        // On the axis of a unit disc: S = (√(1+a²) − a)/2 for E = 1/(4π|x|).
        for a in [0.05, 0.5, 2.0] {
            let x = HalfSpacePoint::new(vec![0.0, 0.0], a).unwrap();
            let s = single_layer_S(&|_| 1.0, 1.0, &x, Dimension::THREE, &spec()).unwrap();
            let exact = 0.5 * ((1.0 + a * a).sqrt() - a);
            assert!((s.value - exact).abs() < 1e-8, "a={a}: {} vs {exact}", s.value);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let dim = Dimension::THREE;
        let x = [0.3, -0.2, 0.25];
        let p = HalfSpacePoint::from_coords(&x).unwrap();
        let g = gradient_S(&bump, 1.0, &p, dim, &spec()).unwrap().value;
        let h = 1e-4;
        for k in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let sp = single_layer_S(&bump, 1.0, &HalfSpacePoint::from_coords(&xp).unwrap(), dim, &spec())
                .unwrap()
                .value;
            let sm = single_layer_S(&bump, 1.0, &HalfSpacePoint::from_coords(&xm).unwrap(), dim, &spec())
                .unwrap()
                .value;
            let fd = (sp - sm) / (2.0 * h);
            assert!((g[k] - fd).abs() < 1e-6 * (1.0 + fd.abs()), "k={k}: {} vs {fd}", g[k]);
        }
    }

    #[test]
    fn normal_derivative_jumps_by_half_the_density() {
        let dim = Dimension::THREE;
        let xt = [0.2, 0.1];
        let x = HalfSpacePoint::new(xt.to_vec(), 1e-3).unwrap();
        let g = gradient_S(&bump, 1.0, &x, dim, &spec()).unwrap().value;
        let target = -0.5 * bump(&xt);
        assert!((g[2] - target).abs() < 0.02 * target.abs(), "{} vs {target}", g[2]);
    }

    #[test]
    fn translation_equivariance() {
        let dim = Dimension::THREE;
        let shift = [0.4, -0.3];
        let shifted = |y: &[f64]| bump(&[y[0] - shift[0], y[1] - shift[1]]);
        let x = HalfSpacePoint::new(vec![0.5, 0.1], 0.2).unwrap();
        let xs = HalfSpacePoint::new(vec![0.1, 0.4], 0.2).unwrap();
        let a = single_layer_S(&shifted, 1.5, &x, dim, &spec()).unwrap().value;
        let b = single_layer_S(&bump, 1.0, &xs, dim, &spec()).unwrap().value;
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }

    #[test]
    fn boundary_points_off_the_support_are_allowed() {
        let x = HalfSpacePoint::new(vec![2.0, 0.0], 0.0).unwrap();
        let s = single_layer_S(&bump, 1.0, &x, Dimension::THREE, &spec()).unwrap();
        assert!(s.value > 0.0 && s.value.is_finite());
        let inside = HalfSpacePoint::new(vec![0.5, 0.0], 0.0).unwrap();
        assert!(single_layer_S(&bump, 1.0, &inside, Dimension::THREE, &spec()).is_err());
    }
}
