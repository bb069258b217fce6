//! Velocity, pressure, `T` and the tangential decomposition from the Poisson kernel.
//!
//! Every regular kernel is a Hankel profile of a tangential symbol, so the time
//! convolution is done symbol-wise: for separable data `φ(y′)h(s)` the symbols
//! are integrated against `h` once per frequency node, after which a single
//! polar pass about `x′` integrates the resulting profiles against `φ`.
//! General data falls back to an outer time integral around the same pass.

use serde::Serialize;

use super::{BoundaryField, FieldData, TimeProfile};
use crate::error::{Error, Result};
use crate::kernels::heat::{heat1, heat1_derivative, heat1_dz};
use crate::kernels::newton::Newton;
use crate::kernels::spectral::{HankelGrid, Symbols};
use crate::kernels::{norm, SpaceTimePoint};
use crate::quadrature::{adaptive, integrate_polar_radial, IntegralResult, PolarPatch, QuadratureSpec, Tolerance};

/// Cutoff exponent: symbols carrying `e^{-ρx_n}` are dropped beyond `ρ = CUTOFF/x_n`.
const CUTOFF: f64 = 40.0;

/// Everything one spatial pass produces at a point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialValue {
    pub velocity: Vec<f64>,
    pub pressure: f64,
    /// The instantaneous term `−2∇S(g_n(·,t))` of the velocity.
    pub grad_s: Vec<f64>,
    /// `T(g_n)`.
    pub composite_t: f64,
    /// `∇T(g_n)`.
    pub grad_t: Vec<f64>,
    pub error_estimate: f64,
    pub converged: bool,
}

/// Velocity at `x` split along the normal `N = −e_n` of the nearest boundary point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VelocityDecomposition {
    pub u: Vec<f64>,
    pub u_normal: Vec<f64>,
    pub u_tangential: Vec<f64>,
    /// Tangential part of the single-layer term `−2∇S(g_n)`.
    pub grad_s_tangential: Vec<f64>,
    /// Tangential part of the composite term `−½∇T(g_n)`.
    pub grad_t_tangential: Vec<f64>,
    pub remainder_tangential: Vec<f64>,
    pub error_estimate: f64,
    pub converged: bool,
}

/// Offsets of the quantities inside the pass output vector.
struct Layout {
    n: usize,
}

impl Layout {
    fn len(&self) -> usize {
        3 * self.n + 2
    }
    fn pressure(&self) -> usize {
        self.n
    }
    fn grad_s(&self) -> usize {
        self.n + 1
    }
    fn t(&self) -> usize {
        2 * self.n + 1
    }
    fn grad_t(&self) -> usize {
        2 * self.n + 2
    }

    fn unpack(&self, v: &[f64], error_estimate: f64, converged: bool) -> PotentialValue {
        let n = self.n;
        PotentialValue {
            velocity: v[..n].to_vec(),
            pressure: v[self.pressure()],
            grad_s: v[self.grad_s()..self.grad_s() + n].to_vec(),
            composite_t: v[self.t()],
            grad_t: v[self.grad_t()..self.grad_t() + n].to_vec(),
            error_estimate,
            converged,
        }
    }
}

/// Profile slots requested from the Hankel grid.
mod slot {
    /// `G_0[S₂]`: diagonal heat part of the tangential block.
    pub const P0: usize = 0;
    /// `G_1[S₁/2ρ]`.
    pub const P1: usize = 1;
    /// `G_2[S₁/2ρ]`.
    pub const P2: usize = 2;
    /// `G_1[S₁]`.
    pub const P3: usize = 3;
    /// `G_1[S₂/ρ]`.
    pub const P4: usize = 4;
    /// `G_0[ρS₁]`.
    pub const P5: usize = 5;
    /// `G_0[2S₂/ρ]`: the potential `T`.
    pub const T0: usize = 6;
    /// `G_0[2S₆/ρ]`: `∂_n T`.
    pub const TN: usize = 7;
    /// Pressure, tangential columns.
    pub const Q1: usize = 8;
    /// Pressure, normal column.
    pub const Q0: usize = 9;
    /// Pressure, tangential columns, against `∂_s g` (general data only).
    pub const Q1D: usize = 10;
    /// Pressure, normal column, against `∂_s g` (general data only).
    pub const Q0D: usize = 11;
    pub const ORDERS: [usize; 12] = [0, 1, 2, 1, 1, 0, 0, 0, 1, 0, 1, 0];
}

/// Time-integrated symbols at one frequency.
#[derive(Debug, Clone, Copy, Default)]
struct Integrated {
    phi: f64,
    dz: f64,
    at_zero: f64,
    at_zero_dh: f64,
    dzz: f64,
}

fn time_tolerance(spec: &QuadratureSpec) -> Tolerance {
    Tolerance::new(1e-300, (0.1 * spec.rel_tol).max(1e-13), spec.max_subdivisions)
}

/// `∫₀ᵗ F(τ) h(t−τ) dτ` in `τ = σ²` for each of the symbol families.
fn integrate_symbols(rho: f64, a: f64, t: f64, profile: &TimeProfile, tol: &Tolerance) -> (Integrated, bool) {
    let top = t.sqrt();
    let breaks = [a, 1.0 / rho, 0.5 * a, 2.0 * a];
    let h = |tau: f64| profile.value(t - tau);
    let run = |f: &dyn Fn(f64) -> f64| {
        adaptive(
            |sigma: f64| {
                if sigma <= 0.0 {
                    return 0.0;
                }
                let tau = sigma * sigma;
                2.0 * sigma * f(tau)
            },
            0.0,
            top,
            &breaks,
            tol,
        )
    };
    let gauss = |tau: f64| (-0.5 * tau * rho * rho).exp();
    let phi = run(&|tau| Symbols { a, tau }.phi(rho) * h(tau));
    let dz = run(&|tau| heat1_dz(a, tau) * gauss(tau) * h(tau));
    let at_zero = run(&|tau| heat1(0.0, tau) * gauss(tau) * h(tau));
    let dzz = run(&|tau| heat1_derivative(2, a, tau) * gauss(tau) * h(tau));
    let (at_zero_dh, dh_ok) = match profile {
        TimeProfile::Constant => (0.0, true),
        TimeProfile::Custom { derivative, .. } => {
            let r = run(&|tau| heat1(0.0, tau) * gauss(tau) * derivative(t - tau));
            (r.value, r.converged || r.value == 0.0)
        }
    };
    let ok = [&phi, &dz, &at_zero, &dzz]
        .iter()
        .all(|r| r.converged || r.value == 0.0)
        && dh_ok;
    (
        Integrated {
            phi: phi.value,
            dz: dz.value,
            at_zero: at_zero.value,
            at_zero_dh,
            dzz: dzz.value,
        },
        ok,
    )
}

/// Samples of the profile symbols on a grid, indexed by [`slot`].
struct ProfileSymbols {
    columns: Vec<Vec<f64>>,
}

impl ProfileSymbols {
    fn new(len: usize) -> Self {
        Self {
            columns: vec![vec![0.0; len]; slot::ORDERS.len()],
        }
    }

    /// Fills node `q` from the raw symbol values (integrated or at fixed `τ`).
    #[allow(clippy::too_many_arguments)]
    fn set(&mut self, q: usize, rho: f64, a: f64, phi: f64, dz: f64, dzz: f64, at_zero: f64, at_zero_dh: f64, terminal: f64) {
        let decay = (-rho * a).exp();
        let c = &mut self.columns;
        c[slot::P0][q] = dz;
        c[slot::P1][q] = phi / (2.0 * rho);
        c[slot::P2][q] = phi / (2.0 * rho);
        c[slot::P3][q] = phi;
        c[slot::P4][q] = dz / rho;
        c[slot::P5][q] = rho * phi;
        c[slot::T0][q] = 2.0 * dz / rho;
        c[slot::TN][q] = 2.0 * dzz / rho;
        c[slot::Q1][q] = decay * (0.5 * rho * at_zero + terminal / rho);
        c[slot::Q0][q] = decay * (0.5 * rho * rho * at_zero + terminal);
        c[slot::Q1D][q] = decay * at_zero_dh / rho;
        c[slot::Q0D][q] = decay * at_zero_dh;
    }

    fn requests(&self) -> Vec<(usize, &[f64])> {
        slot::ORDERS
            .iter()
            .zip(&self.columns)
            .map(|(&k, c)| (k, c.as_slice()))
            .collect()
    }
}

/// Geometry of the polar pass about `x′`.
struct Pass<'a> {
    field: &'a BoundaryField,
    center: &'a [f64],
    radius: f64,
    breaks: Vec<f64>,
    tol: Tolerance,
}

impl<'a> Pass<'a> {
    fn new(field: &'a BoundaryField, p: &'a SpaceTimePoint, spec: &QuadratureSpec) -> Self {
        let center = p.point.tangential.as_slice();
        let a = p.point.normal;
        let offset = norm(center);
        let radius = field.support_radius + offset;
        let mut breaks: Vec<f64> = [0.5, 1.0, 2.0, 4.0].iter().map(|c| c * a).collect();
        for &b in &field.radial_breaks {
            breaks.push((b - offset).abs());
            breaks.push(b + offset);
        }
        breaks.retain(|b| *b > 0.0 && *b < radius);
        let scale = field.sup_norm.max(f64::MIN_POSITIVE);
        Self {
            field,
            center,
            radius,
            breaks,
            tol: Tolerance::new(spec.abs_tol * scale, spec.rel_tol, spec.max_subdivisions),
        }
    }

    fn grid(&self, rho_max: f64) -> HankelGrid {
        HankelGrid::new(self.field.dim.tangential(), rho_max, self.radius)
    }

    /// Integrates `combine(profiles, z, y, out)` over the support, with `z = x′ − y′`.
    fn run<F>(&self, grid: Option<(&HankelGrid, &ProfileSymbols)>, mut combine: F) -> IntegralResult<Vec<f64>>
    where
        F: FnMut(&[f64], &[f64], &[f64], &mut [f64]),
    {
        let m = self.field.dim.tangential();
        let len = Layout { n: m + 1 }.len();
        let patch = PolarPatch::ball(self.center, self.radius).with_breaks(&self.breaks);
        let support = self.field.support_radius;
        let mut z = vec![0.0; m];
        integrate_polar_radial(
            m,
            &patch,
            |r| match grid {
                Some((g, symbols)) => g.profiles(&symbols.requests(), r).into_iter().map(|v| v.0).collect(),
                None => Vec::new(),
            },
            |profiles: &Vec<f64>, y: &[f64], offset: &[f64]| {
                let mut out = vec![0.0; len];
                if norm(y) <= support {
                    for (zk, ok) in z.iter_mut().zip(offset) {
                        *zk = -ok;
                    }
                    combine(profiles, &z, y, &mut out);
                }
                out
            },
            &self.tol,
        )
    }
}

/// Adds the regular-kernel contributions for data `g` (and `dg = ∂_s g` where used).
fn add_regular(layout: &Layout, prof: &[f64], z: &[f64], g: &[f64], dg: Option<&[f64]>, out: &mut [f64]) {
    let n = layout.n;
    let m = n - 1;
    let gn = g[n - 1];
    for i in 0..m {
        let mut u = 0.0;
        for j in 0..m {
            let d = if i == j { 1.0 } else { 0.0 };
            u += (-d * prof[slot::P0] - 2.0 * (z[i] * z[j] * prof[slot::P2] - d * prof[slot::P1])) * g[j];
        }
        u -= z[i] * (prof[slot::P3] - prof[slot::P4]) * gn;
        out[i] += u;
        out[layout.grad_t() + i] -= 2.0 * z[i] * prof[slot::P4] * gn;
    }
    let mut un = -prof[slot::P5] * gn;
    let mut p = prof[slot::Q0] * gn;
    for j in 0..m {
        un -= z[j] * prof[slot::P3] * g[j];
        p += z[j] * prof[slot::Q1] * g[j];
    }
    if let Some(dg) = dg {
        p += prof[slot::Q0D] * dg[n - 1];
        for j in 0..m {
            p += z[j] * prof[slot::Q1D] * dg[j];
        }
    }
    out[n - 1] += un;
    out[layout.pressure()] += p;
    out[layout.t()] += prof[slot::T0] * gn;
    out[layout.grad_t() + n - 1] += prof[slot::TN] * gn;
}

/// Adds the instantaneous terms: `−2∇S(g_n(·,t))` in the velocity and
/// `Σ_j D_jD_nS(g_j(·,t)) + 2S(∂_t g_n(·,t))` in the pressure.
fn add_instantaneous(layout: &Layout, newton: &Newton, x: &[f64], g: &[f64], dg_n: f64, out: &mut [f64]) {
    let n = layout.n;
    let gn = g[n - 1];
    for i in 0..n {
        let v = -2.0 * newton.d1(x, i) * gn;
        out[i] += v;
        out[layout.grad_s() + i] += v;
    }
    let mut p = 2.0 * newton.derivative(x, &[]) * dg_n;
    for (j, gj) in g.iter().enumerate() {
        p += newton.d2(x, j, n - 1) * gj;
    }
    out[layout.pressure()] += p;
}

fn full_point(z: &[f64], a: f64, buf: &mut Vec<f64>) {
    buf.clear();
    buf.extend_from_slice(z);
    buf.push(a);
}

fn separable(
    field: &BoundaryField,
    spatial: &super::SpatialVectorFn,
    profile: &TimeProfile,
    p: &SpaceTimePoint,
    spec: &QuadratureSpec,
) -> Result<PotentialValue> {
    let layout = Layout { n: field.dim.n() };
    let (a, t) = (p.point.normal, p.t);
    let pass = Pass::new(field, p, spec);
    let grid = pass.grid(CUTOFF / a);
    let tol = time_tolerance(spec);
    let mut symbols = ProfileSymbols::new(grid.nodes.len());
    let mut symbols_ok = true;
    let h0 = profile.value(0.0);
    for (q, &rho) in grid.nodes.iter().enumerate() {
        let (s, ok) = integrate_symbols(rho, a, t, profile, &tol);
        symbols_ok &= ok;
        // A(t)h(0) and ∫A h′ carry the same spatial factor for separable data.
        let terminal = heat1(0.0, t) * (-0.5 * t * rho * rho).exp() * h0 + s.at_zero_dh;
        symbols.set(q, rho, a, s.phi, s.dz, s.dzz, s.at_zero, 0.0, terminal);
    }
    let newton = Newton::new(field.dim);
    let (ht, dht) = (profile.value(t), profile.derivative(t));
    let mut x = Vec::with_capacity(layout.n);
    let res = pass.run(Some((&grid, &symbols)), |prof, z, y, out| {
        let phi = spatial(y);
        add_regular(&layout, prof, z, &phi, None, out);
        full_point(z, a, &mut x);
        let g: Vec<f64> = phi.iter().map(|v| v * ht).collect();
        add_instantaneous(&layout, &newton, &x, &g, phi[layout.n - 1] * dht, out);
    });
    Ok(layout.unpack(&res.value, res.error_estimate, res.converged && symbols_ok))
}

fn general(field: &BoundaryField, p: &SpaceTimePoint, spec: &QuadratureSpec) -> Result<PotentialValue> {
    let layout = Layout { n: field.dim.n() };
    let (a, t) = (p.point.normal, p.t);
    let pass = Pass::new(field, p, spec);
    let newton = Newton::new(field.dim);
    let mut converged = true;

    // Terms evaluated at the endpoints: A(t)g(·,0) and the instantaneous parts.
    let grid = pass.grid((80.0 / t).sqrt().min(CUTOFF / a));
    let mut symbols = ProfileSymbols::new(grid.nodes.len());
    for (q, &rho) in grid.nodes.iter().enumerate() {
        let terminal = heat1(0.0, t) * (-0.5 * t * rho * rho).exp();
        symbols.set(q, rho, a, 0.0, 0.0, 0.0, 0.0, 0.0, terminal);
    }
    let mut x = Vec::with_capacity(layout.n);
    let endpoint = pass.run(Some((&grid, &symbols)), |prof, z, y, out| {
        let g0 = field.eval(y, 0.0);
        let mut pressure_only = vec![0.0; out.len()];
        add_regular(&layout, prof, z, &g0, None, &mut pressure_only);
        out[layout.pressure()] += pressure_only[layout.pressure()];
        full_point(z, a, &mut x);
        let gt = field.eval(y, t);
        let dgt = field.eval_time_derivative(y, t);
        add_instantaneous(&layout, &newton, &x, &gt, dgt[layout.n - 1], out);
    });
    converged &= endpoint.converged;

    let mut inner_ok = true;
    let mut inner_err = 0.0_f64;
    let outer_tol = Tolerance::new(pass.tol.abs_tol, spec.rel_tol, spec.max_subdivisions);
    let history = adaptive(
        |sigma: f64| {
            let len = layout.len();
            if sigma <= 0.0 {
                return vec![0.0; len];
            }
            let tau = sigma * sigma;
            let s = Symbols { a, tau };
            let grid = pass.grid(s.rho_max());
            let mut symbols = ProfileSymbols::new(grid.nodes.len());
            for (q, &rho) in grid.nodes.iter().enumerate() {
                let e = s.gauss(rho);
                let at_zero = heat1(0.0, tau) * e;
                symbols.set(
                    q,
                    rho,
                    a,
                    s.phi(rho),
                    heat1_dz(a, tau) * e,
                    heat1_derivative(2, a, tau) * e,
                    at_zero,
                    at_zero,
                    0.0,
                );
            }
            let res = pass.run(Some((&grid, &symbols)), |prof, z, y, out| {
                let g = field.eval(y, t - tau);
                let dg = field.eval_time_derivative(y, t - tau);
                add_regular(&layout, prof, z, &g, Some(&dg), out);
            });
            inner_ok &= res.converged;
            inner_err = inner_err.max(res.error_estimate);
            res.value.into_iter().map(|v| 2.0 * sigma * v).collect()
        },
        0.0,
        t.sqrt(),
        &[a, 0.5 * a, 2.0 * a],
        &outer_tol,
    );
    converged &= history.converged && inner_ok;
    let value: Vec<f64> = history
        .value
        .iter()
        .zip(&endpoint.value)
        .map(|(h, e)| h + e)
        .collect();
    let error = history.error_estimate + endpoint.error_estimate + t.sqrt() * inner_err;
    Ok(layout.unpack(&value, error, converged))
}

/// Velocity, pressure, `T(g_n)` and the `∇S`, `∇T` terms at `(x,t)` from one pass.
pub fn evaluate_potentials(field: &BoundaryField, p: &SpaceTimePoint, spec: &QuadratureSpec) -> Result<PotentialValue> {
    field.check_time(p)?;
    spec.validate()?;
    if p.point.tangential.len() != field.dim.tangential() {
        return Err(Error::Shape {
            expected: field.dim.tangential(),
            found: p.point.tangential.len(),
        });
    }
    if field.sup_norm == 0.0 {
        return Ok(Layout { n: field.dim.n() }.unpack(&vec![0.0; Layout { n: field.dim.n() }.len()], 0.0, true));
    }
    match &field.data {
        FieldData::Separable { spatial, profile } => separable(field, spatial, profile, p, spec),
        FieldData::General { .. } => general(field, p, spec),
    }
}

fn to_result(value: Vec<f64>, pv: &PotentialValue) -> IntegralResult<Vec<f64>> {
    IntegralResult {
        value,
        error_estimate: pv.error_estimate,
        evaluations: 0,
        converged: pv.converged,
    }
}

/// `u(x,t)`: regular Poisson-kernel convolutions plus the instantaneous `−2∇S(g_n(·,t))`.
pub fn evaluate_velocity(field: &BoundaryField, p: &SpaceTimePoint, spec: &QuadratureSpec) -> Result<IntegralResult<Vec<f64>>> {
    let pv = evaluate_potentials(field, p, spec)?;
    Ok(to_result(pv.velocity.clone(), &pv))
}

/// `p(x,t)`, normalized by the representation (no additive constant).
pub fn evaluate_pressure(field: &BoundaryField, p: &SpaceTimePoint, spec: &QuadratureSpec) -> Result<IntegralResult> {
    let pv = evaluate_potentials(field, p, spec)?;
    Ok(IntegralResult {
        value: pv.pressure,
        error_estimate: pv.error_estimate,
        evaluations: 0,
        converged: pv.converged,
    })
}

/// `T(g_n)(x,t) = 4∫₀ᵗ∫ κ(x′−y′,x_n,t−s) g_n(y′,s) dy′ds`.
#[allow(non_snake_case)]
pub fn composite_T(field: &BoundaryField, p: &SpaceTimePoint, spec: &QuadratureSpec) -> Result<IntegralResult> {
    let pv = evaluate_potentials(field, p, spec)?;
    Ok(IntegralResult {
        value: pv.composite_t,
        error_estimate: pv.error_estimate,
        evaluations: 0,
        converged: pv.converged,
    })
}

/// `∇T(g_n)(x,t)`.
#[allow(non_snake_case)]
pub fn gradient_T(field: &BoundaryField, p: &SpaceTimePoint, spec: &QuadratureSpec) -> Result<IntegralResult<Vec<f64>>> {
    let pv = evaluate_potentials(field, p, spec)?;
    Ok(to_result(pv.grad_t.clone(), &pv))
}

/// Splits `u` into normal and tangential parts and the tangential part into
/// `−2∇S(g_n)`, `−½∇T(g_n)` and the remainder.
pub fn decompose_velocity(field: &BoundaryField, p: &SpaceTimePoint, spec: &QuadratureSpec) -> Result<VelocityDecomposition> {
    let pv = evaluate_potentials(field, p, spec)?;
    let n = field.dim.n();
    let tangential = |v: &[f64]| -> Vec<f64> {
        let mut w = v.to_vec();
        w[n - 1] = 0.0;
        w
    };
    let u = pv.velocity.clone();
    let mut u_normal = vec![0.0; n];
    u_normal[n - 1] = u[n - 1];
    let u_tangential = tangential(&u);
    let grad_s_tangential = tangential(&pv.grad_s);
    let grad_t_tangential: Vec<f64> = tangential(&pv.grad_t).iter().map(|v| -0.5 * v).collect();
    let remainder_tangential = u_tangential
        .iter()
        .zip(&grad_s_tangential)
        .zip(&grad_t_tangential)
        .map(|((u, s), t)| u - s - t)
        .collect();
    Ok(VelocityDecomposition {
        u,
        u_normal,
        u_tangential,
        grad_s_tangential,
        grad_t_tangential,
        remainder_tangential,
        error_estimate: pv.error_estimate,
        converged: pv.converged,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use puruspe::erfc;

    use super::*;
    use crate::kernels::Dimension;
    use crate::potentials::ContinuityTag;

    fn bump(y: &[f64]) -> f64 {
        let r2: f64 = y.iter().map(|v| v * v).sum();
        if r2 < 1.0 {
            (1.0 - r2).powi(3)
        } else {
            0.0
        }
    }

    fn ramp() -> TimeProfile {
        TimeProfile::Custom {
            value: Arc::new(|s: f64| 1.0 - (-3.0 * s).exp()),
            derivative: Arc::new(|s: f64| 3.0 * (-3.0 * s).exp()),
        }
    }

    fn mixed(profile: TimeProfile) -> BoundaryField {
        let spatial = Arc::new(|y: &[f64]| vec![0.5 * bump(y) * (1.0 + y[1]), -0.3 * bump(y) * y[0], bump(y)]);
        BoundaryField::separable(Dimension::THREE, spatial, profile, 1.0, 1.5, 2.0, ContinuityTag::Smooth).unwrap()
    }

    fn normal_bump() -> BoundaryField {
        BoundaryField::normal(
            Dimension::THREE,
            Arc::new(bump),
            TimeProfile::Constant,
            1.0,
            1.0,
            2.0,
            ContinuityTag::Smooth,
        )
        .unwrap()
    }

    fn spec(rel_tol: f64) -> QuadratureSpec {
        QuadratureSpec {
            rel_tol,
            abs_tol: 1e-13,
            ..QuadratureSpec::default()
        }
    }

    fn at(x: [f64; 3], t: f64) -> SpaceTimePoint {
        SpaceTimePoint::from_coords(&x, t).unwrap()
    }

    #[test]
    fn zero_data_gives_exact_zero() {
        let field = BoundaryField::zero(Dimension::THREE, 1.0).unwrap();
        let v = evaluate_potentials(&field, &at([0.1, 0.2, 0.3], 0.5), &spec(1e-8)).unwrap();
        assert!(v.velocity.iter().chain(&v.grad_t).all(|x| *x == 0.0));
        assert_eq!(v.pressure, 0.0);
    }

    #[test]
    fn time_integrated_symbols_match_closed_forms() {
        // ∫₀ᵗ Γ₁(a,τ)e^{-τρ²/2}dτ in closed form; its a-derivative is the dz symbol.
        let closed = |a: f64, rho: f64, t: f64| {
            let s = (2.0 * t).sqrt();
            ((-rho * a).exp() * erfc((a - rho * t) / s) - (rho * a).exp() * erfc((a + rho * t) / s)) / (2.0 * rho)
        };
        let tol = time_tolerance(&spec(1e-10));
        for (a, rho, t) in [(0.3, 2.0, 1.0), (0.05, 40.0, 0.7), (1.0, 0.3, 2.0)] {
            let (s, ok) = integrate_symbols(rho, a, t, &TimeProfile::Constant, &tol);
            assert!(ok);
            let h = 1e-5 * a;
            let dz = (closed(a + h, rho, t) - closed(a - h, rho, t)) / (2.0 * h);
            assert!((s.dz - dz).abs() < 1e-7 * dz.abs(), "{} vs {dz}", s.dz);
            let at_zero = puruspe::erf(rho * (0.5 * t).sqrt()) / rho;
            assert!((s.at_zero - at_zero).abs() < 1e-9 * at_zero);
            let dzz = (closed(a + h, rho, t) - 2.0 * closed(a, rho, t) + closed(a - h, rho, t)) / (h * h);
            assert!((s.dzz - dzz).abs() < 1e-4 * dzz.abs(), "{} vs {dzz}", s.dzz);
        }
    }

    #[test]
    fn general_path_matches_separable_path() {
        let sep = mixed(ramp());
        let inner = sep.clone();
        let inner_d = sep.clone();
        let general = BoundaryField::general(
            Dimension::THREE,
            Arc::new(move |y: &[f64], s: f64| inner.eval(y, s)),
            Some(Arc::new(move |y: &[f64], s: f64| inner_d.eval_time_derivative(y, s))),
            1.0,
            1.5,
            2.0,
            ContinuityTag::Smooth,
        )
        .unwrap();
        let p = at([0.3, 0.2, 0.5], 0.7);
        let a = evaluate_potentials(&sep, &p, &spec(1e-7)).unwrap();
        let b = evaluate_potentials(&general, &p, &spec(1e-6)).unwrap();
        for (x, y) in a.velocity.iter().zip(&b.velocity) {
            assert!((x - y).abs() < 1e-6, "{x} vs {y}");
        }
        assert!((a.pressure - b.pressure).abs() < 1e-6);
        assert!((a.composite_t - b.composite_t).abs() < 1e-6);
    }

    /// Divergence and `u_t − ½Δu + ∇p` by central differences.
    fn residuals(field: &BoundaryField, x: [f64; 3], t: f64) -> (f64, f64, f64) {
        let sp = spec(1e-10);
        let ev = |x: [f64; 3], t: f64| evaluate_potentials(field, &at(x, t), &sp).unwrap();
        let h = 4e-3;
        let c = ev(x, t);
        let mut div = 0.0;
        let mut lap = [0.0; 3];
        let mut grad_p = [0.0; 3];
        for k in 0..3 {
            let (mut xp, mut xm) = (x, x);
            xp[k] += h;
            xm[k] -= h;
            let (a, b) = (ev(xp, t), ev(xm, t));
            div += (a.velocity[k] - b.velocity[k]) / (2.0 * h);
            grad_p[k] = (a.pressure - b.pressure) / (2.0 * h);
            for i in 0..3 {
                lap[i] += (a.velocity[i] - 2.0 * c.velocity[i] + b.velocity[i]) / (h * h);
            }
        }
        let (a, b) = (ev(x, t + h), ev(x, t - h));
        let residual = (0..3)
            .map(|i| ((a.velocity[i] - b.velocity[i]) / (2.0 * h) - 0.5 * lap[i] + grad_p[i]).powi(2))
            .sum::<f64>()
            .sqrt();
        let grad_norm = grad_p.iter().map(|v| v * v).sum::<f64>().sqrt();
        let u_norm = c.velocity.iter().map(|v| v * v).sum::<f64>().sqrt();
        (div.abs() / u_norm, residual / grad_norm, u_norm)
    }

    #[test]
    fn velocity_is_solenoidal_and_solves_stokes() {
        for (field, x, t) in [
            (mixed(TimeProfile::Constant), [0.3, 0.2, 0.3], 0.7),
            (mixed(ramp()), [-0.4, 0.1, 0.25], 1.2),
        ] {
            let (div, res, _) = residuals(&field, x, t);
            assert!(div < 1e-3, "divergence {div}");
            assert!(res < 1e-3, "residual {res}");
        }
    }

    #[test]
    fn normal_data_is_attained_at_the_boundary() {
        let field = normal_bump();
        let mut last = f64::INFINITY;
        for xn in [0.4, 0.2, 0.1, 0.05] {
            let u = evaluate_velocity(&field, &at([0.0, 0.0, xn], 1.0), &spec(1e-7)).unwrap();
            let err = u.value.iter().zip([0.0, 0.0, 1.0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < last, "x_n={xn}: {err} ≥ {last}");
            last = err;
        }
        assert!(last < 0.05, "{last}");
    }

    #[test]
    fn gradient_t_matches_finite_differences() {
        let field = mixed(ramp());
        let sp = spec(1e-10);
        let h = 1e-3;
        for x in [[0.2, -0.1, 0.3], [0.9, 0.4, 0.15], [0.0, 0.0, 0.6]] {
            let g = gradient_T(&field, &at(x, 0.8), &sp).unwrap().value;
            for k in 0..3 {
                let (mut xp, mut xm) = (x, x);
                xp[k] += h;
                xm[k] -= h;
                let fd = (composite_T(&field, &at(xp, 0.8), &sp).unwrap().value
                    - composite_T(&field, &at(xm, 0.8), &sp).unwrap().value)
                    / (2.0 * h);
                assert!((g[k] - fd).abs() < 1e-3 * g.iter().map(|v| v.abs()).fold(0.0, f64::max), "{x:?} k={k}: {} vs {fd}", g[k]);
            }
        }
    }

    #[test]
    fn composite_t_is_additive_in_time() {
        // With constant data, T(t₂) − T(t₁) is the convolution over τ ∈ (t₁,t₂),
        // i.e. T at t₂ of data switched off after s = t₂ − t₁.
        let (t1, t2) = (0.4, 0.9);
        let constant = normal_bump();
        let window = BoundaryField::normal(
            Dimension::THREE,
            Arc::new(bump),
            TimeProfile::Custom {
                value: Arc::new(move |s: f64| if s < t2 - t1 { 1.0 } else { 0.0 }),
                derivative: Arc::new(|_| 0.0),
            },
            1.0,
            1.0,
            2.0,
            ContinuityTag::Smooth,
        )
        .unwrap();
        let sp = spec(1e-9);
        let x = [0.3, 0.1, 0.2];
        let a = composite_T(&constant, &at(x, t2), &sp).unwrap().value;
        let b = composite_T(&constant, &at(x, t1), &sp).unwrap().value;
        let c = composite_T(&window, &at(x, t2), &sp).unwrap().value;
        assert!(((a - b) - c).abs() < 1e-6 * a.abs(), "{} vs {c}", a - b);
    }

    #[test]
    fn linearity_and_scaling() {
        let f = mixed(TimeProfile::Constant);
        let g = normal_bump();
        let combo = f.combine(2.0, &g, -0.5).unwrap();
        let sp = spec(1e-9);
        let p = at([0.2, 0.3, 0.25], 0.6);
        let uf = evaluate_velocity(&f, &p, &sp).unwrap().value;
        let ug = evaluate_velocity(&g, &p, &sp).unwrap().value;
        let uc = evaluate_velocity(&combo, &p, &sp).unwrap().value;
        for k in 0..3 {
            assert!((uc[k] - (2.0 * uf[k] - 0.5 * ug[k])).abs() < 1e-7);
        }
        let lambda = 1.7;
        let scaled = f.rescaled(lambda).unwrap();
        let q = at([0.2 * lambda, 0.3 * lambda, 0.25 * lambda], 0.6 * lambda * lambda);
        let us = evaluate_velocity(&scaled, &q, &sp).unwrap().value;
        for k in 0..3 {
            assert!((us[k] - uf[k]).abs() < 1e-7, "{} vs {}", us[k], uf[k]);
        }
    }

    #[test]
    fn decomposition_identities() {
        let tangential_only = BoundaryField::separable(
            Dimension::THREE,
            Arc::new(|y: &[f64]| vec![bump(y), 0.0, 0.0]),
            TimeProfile::Constant,
            1.0,
            1.0,
            2.0,
            ContinuityTag::Smooth,
        )
        .unwrap();
        let sp = spec(1e-8);
        let p = at([0.3, -0.2, 0.2], 1.0);
        let d = decompose_velocity(&tangential_only, &p, &sp).unwrap();
        assert!(d.grad_s_tangential.iter().chain(&d.grad_t_tangential).all(|v| *v == 0.0));
        assert_eq!(d.remainder_tangential, d.u_tangential);
        let d = decompose_velocity(&mixed(TimeProfile::Constant), &p, &sp).unwrap();
        for k in 0..3 {
            assert_eq!(d.u_normal[k] + d.u_tangential[k], d.u[k]);
        }
        assert_eq!(d.u_normal[..2], [0.0, 0.0]);
        assert_eq!(d.u_tangential[2], 0.0);
    }

    #[test]
    fn rejects_points_beyond_the_horizon() {
        let field = normal_bump();
        assert!(matches!(
            evaluate_velocity(&field, &at([0.0, 0.0, 0.3], 3.0), &spec(1e-6)),
            Err(Error::Horizon { .. })
        ));
        assert!(evaluate_velocity(&field, &at([0.0, 0.0, 0.0], 1.0), &spec(1e-6)).is_err());
    }
}
