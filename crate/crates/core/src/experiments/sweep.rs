//! `∫₀^T ∫ |L_ij(x′,x_n,τ)| dx′ dτ` over an `x_n` sweep.
//!
//! For each `τ` the tangential profiles of `L` come from one Hankel grid, the
//! angular integrals of `|L|` over circles are done in closed form, and the
//! radial integral is adaptive with an asymptotic far tail. Time is split at
//! `τ = x_n²`: `τ = σ²` below, `log τ` above.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use super::{Row, VerificationReport};
use crate::error::{Error, Result};
use crate::kernels::heat::heat1_dz;
use crate::kernels::spectral::{HankelGrid, Symbols};
use crate::kernels::Dimension;
use crate::quadrature::{adaptive, QuadratureSpec, Tolerance};

#[derive(Debug, Clone, Copy)]
struct Resolution {
    /// Truncation radius in units of `x_n + √τ`.
    reach: f64,
    /// Symbols are cut off where they fall below `e^{-decay}`.
    decay: f64,
    tol: Tolerance,
    outer_abs: f64,
}

impl Resolution {
    fn from_spec(spec: &QuadratureSpec, reach: f64) -> Self {
        Self {
            reach,
            decay: 2.0 * (1.0 / spec.rel_tol).ln() + 6.0,
            tol: Tolerance::new(1e-300, spec.rel_tol, spec.max_subdivisions),
            outer_abs: spec.abs_tol,
        }
    }
}

/// Which profile combination an entry needs.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    /// `x_i x_j G₂[φ/2ρ] − δ_ij G₁[φ/2ρ]`, `i, j < n`.
    Tangential { diagonal: bool },
    /// `½ x_j G₁[φ]`.
    NormalRow,
    /// `L_in − B_in = −x_i G₁[(ψ − ∂_zΓ₁ e^{-τρ²/2})/2ρ]`.
    ColumnMinusB,
    /// `L_nn = −½ G₀[ψ]`.
    Corner,
}

impl Shape {
    fn of(i: usize, j: usize, n: usize) -> Self {
        match (i < n, j < n) {
            (true, true) => Shape::Tangential { diagonal: i == j },
            (false, true) => Shape::NormalRow,
            (true, false) => Shape::ColumnMinusB,
            (false, false) => Shape::Corner,
        }
    }

    /// Decay exponent `q` of `r·∫|L| dθ ~ r^{-q}` far from the origin.
    fn tail_exponent(self) -> f64 {
        match self {
            Shape::Tangential { .. } | Shape::Corner => 2.0,
            Shape::NormalRow | Shape::ColumnMinusB => 3.0,
        }
    }
}

/// `∫₀^{2π} |a cos²θ − b| dθ`.
fn abs_cos2_integral(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        return 2.0 * PI * b.abs();
    }
    let c = b / a;
    let value = if c <= 0.0 {
        PI - 2.0 * PI * c
    } else if c >= 1.0 {
        2.0 * PI * c - PI
    } else {
        let theta = c.sqrt().acos();
        let antiderivative = |x: f64| 0.5 * x + 0.25 * (2.0 * x).sin() - c * x;
        4.0 * (2.0 * antiderivative(theta) - antiderivative(0.5 * PI))
    };
    a.abs() * value
}

fn cutoff(s: &Symbols, decay: f64) -> f64 {
    let gaussian = (2.0 * decay / s.tau).sqrt();
    if s.a * s.a / (2.0 * s.tau) >= decay {
        gaussian.min(decay / s.a)
    } else {
        gaussian
    }
}

/// `∫ |L_e(x′,a,τ)| dx′` for each entry, and whether the radial integrals converged.
fn slice_norms(shapes: &[Shape], a: f64, tau: f64, res: &Resolution) -> (Vec<f64>, bool) {
    let s = Symbols { a, tau };
    let reach = res.reach * (a + tau.sqrt());
    let grid = HankelGrid::new(2, cutoff(&s, res.decay), reach);
    let phi = grid.sample(|rho| s.phi(rho));
    let half_phi: Vec<f64> = phi.iter().zip(&grid.nodes).map(|(f, rho)| f / (2.0 * rho)).collect();
    let dn = heat1_dz(a, tau);
    let psi = grid.sample(|rho| s.psi(rho));
    let column: Vec<f64> = psi
        .iter()
        .zip(&grid.nodes)
        .map(|(p, &rho)| (p - dn * s.gauss(rho)) / (2.0 * rho))
        .collect();
    let requests: [(usize, &[f64]); 5] = [(1, &half_phi), (2, &half_phi), (1, &phi), (1, &column), (0, &psi)];
    let radial = |r: f64| -> Vec<f64> {
        let g = grid.profiles(&requests, r);
        shapes
            .iter()
            .map(|shape| {
                let angular = match shape {
                    Shape::Tangential { diagonal: true } => abs_cos2_integral(r * r * g[1].0, g[0].0),
                    Shape::Tangential { diagonal: false } => 2.0 * r * r * g[1].0.abs(),
                    Shape::NormalRow => 2.0 * r * g[2].0.abs(),
                    Shape::ColumnMinusB => 4.0 * r * g[3].0.abs(),
                    Shape::Corner => PI * g[4].0.abs(),
                };
                r * angular
            })
            .collect()
    };
    let sq = tau.sqrt();
    let breaks = [0.25 * a, 0.5 * a, a, 2.0 * a, 0.5 * sq, sq, 2.0 * sq, 4.0 * (a + sq)];
    let body = adaptive(&radial, 0.0, reach, &breaks, &res.tol);
    let edge = radial(reach);
    let values = shapes
        .iter()
        .zip(body.value.iter().zip(&edge))
        .map(|(shape, (v, f))| v + f * reach / (shape.tail_exponent() - 1.0))
        .collect();
    (values, body.converged)
}

/// `∫₀^T ∫ |L_e| dx′ dτ` per entry at height `a`.
fn l1_norms(shapes: &[Shape], a: f64, horizon: f64, res: &Resolution) -> (Vec<f64>, bool) {
    let mut ok = true;
    let tol = Tolerance::new(res.outer_abs, res.tol.rel_tol, res.tol.max_subdivisions);
    let split = a.min(horizon.sqrt());
    let early = adaptive(
        |sigma: f64| {
            let (v, c) = slice_norms(shapes, a, sigma * sigma, res);
            ok &= c;
            v.into_iter().map(|x| 2.0 * sigma * x).collect::<Vec<f64>>()
        },
        0.0,
        split,
        &[0.1 * split, 0.3 * split],
        &tol,
    );
    let mut total = early.value;
    let mut converged = early.converged;
    if horizon > a * a {
        let (lo, hi) = ((a * a).ln(), horizon.ln());
        let decades: Vec<f64> = (1..)
            .map(|k| lo + k as f64 * std::f64::consts::LN_10)
            .take_while(|v| *v < hi)
            .collect();
        let late = adaptive(
            |v: f64| {
                let tau = v.exp();
                let (vals, c) = slice_norms(shapes, a, tau, res);
                ok &= c;
                vals.into_iter().map(|x| tau * x).collect::<Vec<f64>>()
            },
            lo,
            hi,
            &decades,
            &tol,
        );
        converged &= late.converged;
        for (t, l) in total.iter_mut().zip(late.value) {
            *t += l;
        }
    }
    (total, converged && ok)
}

fn entry_label(i: usize, j: usize, n: usize) -> String {
    if j == n && i < n {
        format!("L{i}{j}-B{i}{j}")
    } else {
        format!("L{i}{j}")
    }
}

/// L¹ norms of `L_ij` (`|L_in − B_in|` for the `j = n` column) per `x_n`, with a refined
/// rerun (halved tolerances, doubled truncation radius) for the drift rows. Three dimensions only.
///
/// `T` defaults to `100·max(x_n)²`.
#[allow(non_snake_case)]
pub fn l1_sweep_L(
    entries: &[(usize, usize)],
    xn_sweep: &[f64],
    horizon: Option<f64>,
    dim: Dimension,
    spec: &QuadratureSpec,
) -> Result<VerificationReport> {
    spec.validate()?;
    let n = dim.n();
    if n != 3 {
        return Err(Error::Parameter(format!("the L¹ sweep is implemented for n = 3, got n = {n}")));
    }
    for &(i, j) in entries {
        if !(1..=n).contains(&i) || !(1..=n).contains(&j) {
            return Err(Error::Index { index: i.max(j), min: 1, max: n });
        }
    }
    if entries.is_empty() || xn_sweep.is_empty() || xn_sweep.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::Parameter("entries and a positive x_n sweep are required".into()));
    }
    let max_xn = xn_sweep.iter().cloned().fold(0.0, f64::max);
    let horizon = horizon.unwrap_or(100.0 * max_xn * max_xn);
    if !(horizon > 0.0) {
        return Err(Error::Parameter(format!("horizon must be positive, got {horizon}")));
    }
    let shapes: Vec<Shape> = entries.iter().map(|&(i, j)| Shape::of(i, j, n)).collect();
    let base = Resolution::from_spec(spec, 8.0);
    let fine = Resolution::from_spec(&spec.scaled(0.5), 16.0);

    let mut per_entry: Vec<Vec<(f64, f64, bool)>> = vec![Vec::new(); entries.len()];
    for &xn in xn_sweep {
        let (coarse, c1) = l1_norms(&shapes, xn, horizon, &base);
        let (refined, c2) = l1_norms(&shapes, xn, horizon, &fine);
        for (k, (v, w)) in coarse.iter().zip(&refined).enumerate() {
            per_entry[k].push((*v, *w, c1 && c2));
        }
    }

    let mut rows = Vec::new();
    let mut constants = BTreeMap::new();
    for (&(i, j), results) in entries.iter().zip(&per_entry) {
        let label = entry_label(i, j, n);
        let ij = [("i", i as f64), ("j", j as f64)];
        for (&xn, &(v, w, ok)) in xn_sweep.iter().zip(results) {
            let inputs = [("i", i as f64), ("j", j as f64), ("x_n", xn), ("T", horizon)];
            rows.push(Row::info("l1_norm", &inputs, v).note(&label).flag_unless(ok, "quadrature did not converge"));
            rows.push(
                Row::at_most("refinement_drift", &inputs, (v - w).abs() / w.abs(), 0.1)
                    .note(&label)
                    .flag_unless(ok, "quadrature did not converge"),
            );
        }
        let values: Vec<f64> = results.iter().map(|r| r.0).collect();
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        rows.push(Row::finite("common_bound", &ij, max).note(&label));
        rows.push(Row::at_most("max_min_ratio", &ij, max / min, 3.0).note(&label));
        constants.insert(format!("bound_{label}"), max);
        constants.insert(format!("ratio_{label}"), max / min);
    }
    Ok(VerificationReport::new("l1_sweep_L", rows, constants))
}
