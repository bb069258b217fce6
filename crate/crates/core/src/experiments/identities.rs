//! The normal-derivative mass of `Γ` and the algebraic relations among `L`, `B` and `D_nΓ`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use super::{log_uniform, random_direction, Row, RowRole, SampleSpec, VerificationReport};
use crate::error::{Error, Result};
use crate::kernels::heat::{heat, heat1_dz};
use crate::kernels::{
    gaussian_derivative, kernel_B, kernel_L_block, DerivativeOrder, Dimension, HalfSpacePoint, InnerRoute,
    SpaceTimePoint,
};
use crate::quadrature::{adaptive, integrate_halfplane, QuadratureSpec, RegionSplit, TailModel, Tolerance};

/// `∫₀^T ∫ |D_{x_n}Γ(y′,x_n,τ)| dy′ dτ` by a time integral of hyperplane cubatures.
fn dgamma_mass(dim: Dimension, xn: f64, horizon: f64, spec: &QuadratureSpec) -> (f64, f64, bool) {
    let m = dim.tangential();
    let mut inner_ok = true;
    let inner = |tau: f64| -> f64 {
        let amplitude = heat1_dz(xn, tau).abs();
        if amplitude == 0.0 {
            return 0.0;
        }
        let tail = TailModel::Gaussian {
            variance: tau,
            amplitude,
            degree: 0,
        };
        let local = QuadratureSpec {
            abs_tol: spec.abs_tol * amplitude,
            tail_bound_target: spec.tail_bound_target * amplitude,
            ..spec.scaled(0.1)
        };
        let r = integrate_halfplane(m, |y: &[f64]| amplitude * heat(y, tau), &local, &RegionSplit::Whole, tail, &[]);
        inner_ok &= r.total.converged;
        r.total.value
    };
    let peak = xn * xn / 3.0;
    let breaks: Vec<f64> = [0.05, 0.25, 1.0, 4.0, 16.0, 64.0].iter().map(|c| c * peak).collect();
    let tol = Tolerance::new(spec.abs_tol, spec.rel_tol, spec.max_subdivisions);
    let r = adaptive(inner, 0.0, horizon, &breaks, &tol);
    (r.value, r.error_estimate, r.converged && inner_ok)
}

/// The substitution `u = x_n²/(2τ)` turns the mass into `∫_{u₀}^∞ u^{-1/2}e^{-u}/√π du`
/// with `u₀ = x_n²/(2T)`; with `u = v²` this is `(2/√π)∫_{√u₀}^∞ e^{-v²} dv`.
fn substitution_oracle(xn: f64, horizon: f64) -> f64 {
    let v0 = if horizon.is_finite() { xn / (2.0 * horizon).sqrt() } else { 0.0 };
    let tol = Tolerance::new(1e-15, 1e-13, 200);
    let r = adaptive(|v: f64| (-v * v).exp(), v0, v0 + 40.0, &[v0 + 1.0, v0 + 4.0], &tol);
    2.0 / PI.sqrt() * r.value
}

/// Mass of `|D_{x_n}Γ|` over `ℝ^{n−1} × (0,T)` per `x_n`; `T` defaults to `100·x_n²` for each row.
pub fn check_dgamma_l1(
    xn_sweep: &[f64],
    horizon: Option<f64>,
    dim: Dimension,
    spec: &QuadratureSpec,
) -> Result<VerificationReport> {
    spec.validate()?;
    if xn_sweep.is_empty() || xn_sweep.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::Parameter("x_n sweep must be nonempty and positive".into()));
    }
    let max_xn = xn_sweep.iter().cloned().fold(0.0, f64::max);
    if let Some(t) = horizon {
        if t < 100.0 * max_xn * max_xn {
            return Err(Error::Parameter(format!("horizon {t} is below 100·max(x_n)² = {}", 100.0 * max_xn * max_xn)));
        }
    }
    let mut rows = Vec::new();
    let mut masses = Vec::new();
    let mut all_converged = true;
    for &xn in xn_sweep {
        let t = horizon.unwrap_or(100.0 * xn * xn);
        let (mass, err, converged) = dgamma_mass(dim, xn, t, spec);
        all_converged &= converged;
        masses.push(mass);
        let inputs = [("x_n", xn), ("T", t)];
        rows.push(Row::within("mass", &inputs, mass, 1.0, 1e-2).flag_unless(converged, "quadrature did not converge"));
        let oracle = substitution_oracle(xn, t);
        rows.push(Row::within("substitution_oracle", &inputs, mass - oracle, 0.0, 1e-6 + 10.0 * err));
        rows.push(Row::info("untruncated_mass", &[("x_n", xn)], substitution_oracle(xn, f64::INFINITY)));
    }
    let max = masses.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = masses.iter().cloned().fold(f64::INFINITY, f64::min);
    rows.push(Row::at_most("spread", &[], max - min, 2e-3).flag_unless(all_converged, "quadrature did not converge"));
    let mut constants = BTreeMap::new();
    constants.insert("mass_min".into(), min);
    constants.insert("mass_max".into(), max);
    Ok(VerificationReport::new("dgamma_l1", rows, constants))
}

/// Seeded interior points with `|x′|, x_n, t` log-uniform and `|x|²/t ≤ 8`.
pub(crate) fn interior_samples(samples: &SampleSpec, dim: Dimension) -> Vec<SpaceTimePoint> {
    let mut rng = samples.rng();
    let mut out = Vec::with_capacity(samples.count);
    while out.len() < samples.count {
        let r = log_uniform(&mut rng, 0.05, 1.5);
        let dir = random_direction(&mut rng, dim.tangential());
        let xn = log_uniform(&mut rng, 0.1, 1.5);
        let t = log_uniform(&mut rng, 0.1, 2.0);
        if (r * r + xn * xn) / t <= 8.0 {
            let x: Vec<f64> = dir.iter().map(|d| d * r).collect();
            out.push(SpaceTimePoint::new(HalfSpacePoint::new(x, xn).expect("interior"), t));
        }
    }
    out
}

fn point_inputs(p: &SpaceTimePoint) -> Vec<(&'static str, f64)> {
    let mut v: Vec<(&'static str, f64)> = Vec::new();
    for (k, x) in p.point.tangential.iter().enumerate() {
        v.push((["x1", "x2", "x3", "x4", "x5", "x6"].get(k).copied().unwrap_or("x"), *x));
    }
    v.push(("x_n", p.point.normal));
    v.push(("t", p.t));
    v
}

/// `Σ_{i≤n} L_ii` with `i < n` from the tangential route and `L_nn` from the direct formula.
fn trace(p: &SpaceTimePoint, dim: Dimension, spec: &QuadratureSpec) -> Result<(f64, bool)> {
    let n = dim.n();
    let diag: Vec<(usize, usize)> = (1..n).map(|i| (i, i)).collect();
    let tangential = kernel_L_block(&diag, InnerRoute::TangentialOnGaussian, p, dim, spec)?;
    let normal = kernel_L_block(&[(n, n)], InnerRoute::NormalOnGaussian, p, dim, spec)?;
    Ok((
        tangential.value.iter().sum::<f64>() + normal.value[0],
        tangential.converged && normal.converged,
    ))
}

fn normal_derivative(p: &SpaceTimePoint, dim: Dimension) -> Result<f64> {
    gaussian_derivative(p, dim, &DerivativeOrder::d(dim.n(), dim.n()))
}

/// Compares `Σ_{i≤n} L_ii` with the printed target `−2D_{x_n}Γ`; the value implied by the
/// definition of `L` under the ½-diffusivity Gaussian, `−½D_{x_n}Γ`, is reported alongside.
pub fn check_trace_identity(samples: &SampleSpec, dim: Dimension, spec: &QuadratureSpec) -> Result<VerificationReport> {
    spec.validate()?;
    let mut rows = Vec::new();
    let mut worst_printed = 0.0_f64;
    let mut worst_half = 0.0_f64;
    let points = interior_samples(samples, dim);
    for p in &points {
        let (sum, converged) = trace(p, dim, spec)?;
        let dn = normal_derivative(p, dim)?;
        let inputs = point_inputs(p);
        let printed = (sum + 2.0 * dn).abs() / (2.0 * dn).abs();
        let half = (sum + 0.5 * dn).abs() / (0.5 * dn).abs();
        worst_printed = worst_printed.max(printed);
        worst_half = worst_half.max(half);
        rows.push(Row::at_most("trace_vs_minus_2_dn_gamma", &inputs, printed, 1e-4).flag_unless(converged, "L quadrature did not converge"));
        rows.push(Row::at_most("trace_vs_minus_half_dn_gamma", &inputs, half, 1e-4).role(RowRole::Info));
    }
    if let Some(p) = points.first() {
        let lambda = 1.5;
        let scaled = SpaceTimePoint::new(
            HalfSpacePoint::new(p.point.tangential.iter().map(|x| lambda * x).collect(), lambda * p.point.normal)?,
            lambda * lambda * p.t,
        );
        let (a, ca) = trace(p, dim, spec)?;
        let (b, cb) = trace(&scaled, dim, spec)?;
        let expected = lambda.powi(-(dim.n() as i32) - 1) * a;
        rows.push(
            Row::at_most("trace_homogeneity", &point_inputs(p), (b - expected).abs() / expected.abs(), 1e-4)
                .flag_unless(ca && cb, "L quadrature did not converge"),
        );
    }
    let mut constants = BTreeMap::new();
    constants.insert("max_residual_printed_target".into(), worst_printed);
    constants.insert("max_residual_half_target".into(), worst_half);
    Ok(VerificationReport::new("trace_identity", rows, constants))
}

/// `L_in = L_ni + B_in` for `i < n`, with `L_in` from the direct formula and `L_ni`, `B_in` by their own quadratures.
pub fn check_symmetry_relation(samples: &SampleSpec, dim: Dimension, spec: &QuadratureSpec) -> Result<VerificationReport> {
    spec.validate()?;
    let n = dim.n();
    let mut rows = Vec::new();
    let mut worst = 0.0_f64;
    let column: Vec<(usize, usize)> = (1..n).map(|i| (i, n)).collect();
    let row: Vec<(usize, usize)> = (1..n).map(|i| (n, i)).collect();
    for p in &interior_samples(samples, dim) {
        let lin = kernel_L_block(&column, InnerRoute::NormalOnGaussian, p, dim, spec)?;
        let lni = kernel_L_block(&row, InnerRoute::TangentialOnGaussian, p, dim, spec)?;
        for i in 1..n {
            let b = kernel_B(i, p, dim, spec)?;
            let (a, c) = (lin.value[i - 1], lni.value[i - 1]);
            let residual = (a - c - b.value).abs() / a.abs().max(c.abs() + b.value.abs());
            worst = worst.max(residual);
            let mut inputs = point_inputs(p);
            inputs.push(("i", i as f64));
            let converged = lin.converged && lni.converged && b.converged;
            rows.push(Row::at_most("symmetry_residual", &inputs, residual, 1e-4).flag_unless(converged, "quadrature did not converge"));
        }
    }
    let mut constants = BTreeMap::new();
    constants.insert("max_residual".into(), worst);
    Ok(VerificationReport::new("symmetry_relation", rows, constants))
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

    #[test]
    fn oracle_matches_closed_form() {
        for (xn, t) in [(1.0, 100.0), (0.3, 2.0), (2.0, 0.5)] {
            let exact = puruspe::erfc(xn / (2.0 * t as f64).sqrt());
            assert!((substitution_oracle(xn, t) - exact).abs() < 1e-12);
        }
        assert!((substitution_oracle(1.0, f64::INFINITY) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mass_matches_oracle_and_vanishes_for_short_horizons() {
        let (mass, _, ok) = dgamma_mass(Dimension::THREE, 0.5, 3.0, &spec());
        assert!(ok);
        assert!((mass - substitution_oracle(0.5, 3.0)).abs() < 1e-7, "{mass}");
        let (tiny, _, _) = dgamma_mass(Dimension::THREE, 1.0, 1e-3, &spec());
        assert!(tiny < 1e-100);
    }

    #[test]
    fn truncated_mass_is_the_same_for_every_height() {
        let rep = check_dgamma_l1(&[0.25, 1.0], None, Dimension::THREE, &spec()).unwrap();
        let masses: Vec<f64> = rep.rows_named("mass").map(|r| r.measured).collect();
        assert!((masses[0] - masses[1]).abs() < 1e-7);
        assert!((masses[0] - puruspe::erfc((1.0f64 / 200.0).sqrt())).abs() < 1e-7);
        assert!(rep.satisfied(&["spread", "substitution_oracle"]));
    }

    #[test]
    fn horizon_precondition_is_enforced() {
        assert!(check_dgamma_l1(&[1.0, 2.0], Some(100.0), Dimension::THREE, &spec()).is_err());
    }

    #[test]
    fn samples_respect_the_parabolic_window() {
        let pts = interior_samples(&SampleSpec::with_count(50), Dimension::THREE);
        assert_eq!(pts.len(), 50);
        for p in pts {
            let r2: f64 = p.point.coords().iter().map(|v| v * v).sum();
            assert!(r2 / p.t <= 8.0 && p.point.normal > 0.0);
        }
    }
}
