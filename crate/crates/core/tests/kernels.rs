use std::f64::consts::PI;

use halfspace_stokes::kernels::{
    gaussian, gaussian_derivative, kernel_B, kernel_L, kernel_L_direct, DerivativeOrder, Dimension, SpaceTimePoint,
    SpectralKernels,
};
use halfspace_stokes::quadrature::QuadratureSpec;
use proptest::prelude::*;

const DIM: Dimension = Dimension::THREE;

fn point(x1: f64, x2: f64, xn: f64, t: f64) -> SpaceTimePoint {
    SpaceTimePoint::from_coords(&[x1, x2, xn], t).unwrap()
}

fn second(k: usize) -> DerivativeOrder {
    let mut o = DerivativeOrder::none(3);
    o.space[k] = 2;
    o
}

fn spec(rel_tol: f64) -> QuadratureSpec {
    QuadratureSpec {
        rel_tol,
        abs_tol: 1e-12,
        ..QuadratureSpec::default()
    }
}

#[test]
fn trace_target_at_unit_point() {
    // −2 D_{x_n}Γ = 2 (x_n/t) Γ with Γ((0,0,1),1) = (2π)^{-3/2} e^{-1/2}.
    let p = point(0.0, 0.0, 1.0, 1.0);
    let oracle = 2.0 * (2.0 * PI).powf(-1.5) * (-0.5f64).exp();
    let dn = gaussian_derivative(&p, DIM, &DerivativeOrder::d(3, 3)).unwrap();
    assert!((-2.0 * dn - oracle).abs() < 1e-15);
    assert!((oracle - 0.0770217).abs() < 5e-8);
}

#[test]
fn quadrature_and_spectral_routes_agree() {
    let sk = SpectralKernels::new(DIM);
    let p = point(0.4, -0.3, 0.7, 0.6);
    let s = spec(1e-8);
    for (i, j) in [(1, 1), (2, 1), (3, 2)] {
        let q = kernel_L(i, j, &p, DIM, &s).unwrap();
        let h = sk.kernel_l(i, j, &p).unwrap();
        assert!(q.converged);
        assert!((q.value - h.value).abs() < 1e-7 * h.value.abs().max(1e-3), "L{i}{j}: {} vs {}", q.value, h.value);
    }
    let q = kernel_L_direct(1, &p, DIM, &s).unwrap();
    let h = sk.kernel_l(1, 3, &p).unwrap();
    assert!((q.value - h.value).abs() < 1e-7 * h.value.abs());
    let q = kernel_B(2, &p, DIM, &s).unwrap();
    let h = sk.kernel_b(2, &p).unwrap();
    assert!((q.value - h.value).abs() < 1e-7 * h.value.abs());
}

#[test]
fn kernel_evaluation_is_deterministic() {
    let p = point(0.2, 0.1, 0.5, 0.8);
    let s = spec(1e-6);
    let a = kernel_L(1, 2, &p, DIM, &s).unwrap();
    let b = kernel_L(1, 2, &p, DIM, &s).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.error_estimate.to_bits(), b.error_estimate.to_bits());
}

fn coords() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (-2.0..2.0f64, -2.0..2.0f64, 0.05..2.0f64, 0.05..3.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gaussian_solves_half_diffusivity_heat_equation((x1, x2, xn, t) in coords()) {
        let p = point(x1, x2, xn, t);
        let dt = gaussian_derivative(&p, DIM, &DerivativeOrder::dt(3)).unwrap();
        let lap: f64 = (0..3).map(|k| gaussian_derivative(&p, DIM, &second(k)).unwrap()).sum();
        let scale = gaussian(&p, DIM) * (1.0 / t + (x1 * x1 + x2 * x2 + xn * xn) / (t * t));
        prop_assert!((dt - 0.5 * lap).abs() <= 1e-12 * scale.max(1e-300));
    }

    #[test]
    fn spectral_trace_is_minus_half_normal_derivative((x1, x2, xn, t) in coords()) {
        let sk = SpectralKernels::new(DIM);
        let p = point(x1, x2, xn, t);
        let sum: f64 = (1..=3).map(|i| sk.kernel_l(i, i, &p).unwrap().value).sum();
        let dn = gaussian_derivative(&p, DIM, &DerivativeOrder::d(3, 3)).unwrap();
        let scale = t.powf(-0.5) * (x1 * x1 + x2 * x2 + xn * xn + t).powf(-1.5);
        prop_assert!((sum + 0.5 * dn).abs() <= 1e-7 * scale, "sum {sum}, −½D_nΓ {}", -0.5 * dn);
    }

    #[test]
    fn spectral_symmetry_relation((x1, x2, xn, t) in coords(), i in 1usize..3) {
        let sk = SpectralKernels::new(DIM);
        let p = point(x1, x2, xn, t);
        let lin = sk.kernel_l(i, 3, &p).unwrap().value;
        let lni = sk.kernel_l(3, i, &p).unwrap().value;
        let b = sk.kernel_b(i, &p).unwrap().value;
        let scale = t.powf(-0.5) * (x1 * x1 + x2 * x2 + xn * xn + t).powf(-1.5);
        prop_assert!((lin - lni - b).abs() <= 1e-7 * scale);
    }

    #[test]
    fn l_is_homogeneous_of_degree_minus_four((x1, x2, xn, t) in coords(), lambda in 0.3..3.0f64, i in 1usize..4, j in 1usize..4) {
        let sk = SpectralKernels::new(DIM);
        let a = sk.kernel_l(i, j, &point(x1, x2, xn, t)).unwrap().value;
        let b = sk.kernel_l(i, j, &point(lambda * x1, lambda * x2, lambda * xn, lambda * lambda * t)).unwrap().value;
        let scale = t.powf(-0.5) * (x1 * x1 + x2 * x2 + xn * xn + t).powf(-1.5);
        prop_assert!((b * lambda.powi(4) - a).abs() <= 1e-7 * scale);
    }

    #[test]
    fn l_obeys_the_pointwise_envelope((x1, x2, xn, t) in coords(), i in 1usize..4, j in 1usize..4) {
        let sk = SpectralKernels::new(DIM);
        let v = sk.kernel_l(i, j, &point(x1, x2, xn, t)).unwrap().value;
        let envelope = t.powf(-0.5) * (x1 * x1 + x2 * x2 + xn * xn + t).powf(-1.5);
        prop_assert!(v.abs() <= envelope);
    }
}
