//! Kernels evaluated through their tangential Fourier symbols.
//!
//! Every kernel here is radial-times-polynomial in `x′`, so its inverse Fourier
//! transform reduces to the Hankel-type profiles
//! `G_k[F](r) = (2π)^{-m/2} ∫₀^∞ F(ρ) ρ^{m−1+2k} Λ_{ν+k}(ρr) dρ`
//! with `m = n−1`, `ν = m/2 − 1` and `Λ_μ(z) = J_μ(z)/z^μ`. They satisfy
//! `∂_j G_k = −x_j G_{k+1}`, which turns symbols `iξ_j F` into `−x_j G_1[F]`.

use std::f64::consts::PI;

use puruspe::{erf, erfcx, gamma, Jn};

use super::heat::{heat1, heat1_dz};
use super::layer::AOrder;
use super::{norm, Dimension, KernelMatrixValue, SpaceTimePoint};
use crate::error::{Error, Result};
use crate::quadrature::{IntegralResult, WG, WGK, XGK};

/// Highest profile order `k` supported by [`HankelGrid`].
pub(crate) const MAX_PROFILE: usize = 4;

/// `Λ_{ν+k}(z)` for `k = 0..=MAX_PROFILE`, with `2ν = m − 2`.
#[derive(Debug, Clone)]
pub(crate) struct Lambdas {
    m: usize,
    series_lead: [f64; MAX_PROFILE + 1],
}

impl Lambdas {
    pub fn new(m: usize) -> Self {
        let mut series_lead = [0.0; MAX_PROFILE + 1];
        for (k, c) in series_lead.iter_mut().enumerate() {
            let mu = 0.5 * (m as f64 - 2.0) + k as f64;
            *c = 1.0 / (2f64.powf(mu) * gamma(mu + 1.0));
        }
        Self { m, series_lead }
    }

    fn mu(&self, k: usize) -> f64 {
        0.5 * (self.m as f64 - 2.0) + k as f64
    }

    /// Fills `out[k] = Λ_{ν+k}(z)` for `k < out.len()`.
    pub fn eval(&self, z: f64, out: &mut [f64]) {
        let kmax = out.len();
        if z <= 4.0 {
            let q = -0.25 * z * z;
            for (k, o) in out.iter_mut().enumerate() {
                let mu = self.mu(k);
                let mut term = self.series_lead[k];
                let mut sum = term;
                for j in 1..80 {
                    term *= q / (j as f64 * (j as f64 + mu));
                    sum += term;
                    if term.abs() < 1e-17 * sum.abs() {
                        break;
                    }
                }
                *o = sum;
            }
            return;
        }
        if self.m % 2 == 0 {
            // Integer orders starting at ν = m/2 − 1.
            let nu = (self.m / 2 - 1) as u32;
            let mut jm = Jn(nu, z);
            let mut j = Jn(nu + 1, z);
            let zpow = z.powi(nu as i32);
            out[0] = jm / zpow;
            if kmax > 1 {
                out[1] = j / (zpow * z);
            }
            let mut zp = zpow * z;
            for k in 2..kmax {
                let order = (nu as usize + k - 1) as f64;
                let next = 2.0 * order / z * j - jm;
                jm = j;
                j = next;
                zp *= z;
                out[k] = j / zp;
            }
        } else {
            // Half-integer orders: Λ_{l+½}(z) = √(2/π) j_l(z) / z^l.
            let l0 = (self.m - 3) / 2;
            let (s, c) = z.sin_cos();
            let mut sph = [0.0; MAX_PROFILE + 4];
            sph[0] = s / z;
            sph[1] = s / (z * z) - c / z;
            for l in 1..l0 + kmax {
                sph[l + 1] = (2 * l + 1) as f64 / z * sph[l] - sph[l - 1];
            }
            let scale = (2.0 / PI).sqrt();
            for (k, o) in out.iter_mut().enumerate() {
                *o = scale * sph[l0 + k] / z.powi((l0 + k) as i32);
            }
        }
    }
}

/// A fixed composite Gauss–Kronrod grid on `[0, ρ_max]` for the profiles `G_k`.
#[derive(Debug, Clone)]
pub(crate) struct HankelGrid {
    m: usize,
    pub nodes: Vec<f64>,
    kronrod: Vec<f64>,
    gauss: Vec<f64>,
    lambdas: Lambdas,
    normalization: f64,
}

/// Nodes per panel of the grid.
const PANEL: usize = 21;

impl HankelGrid {
    /// A grid resolving symbols that are negligible beyond `rho_max` and profiles up to radius `r_max`.
    pub fn new(m: usize, rho_max: f64, r_max: f64) -> Self {
        let width = (PI / r_max.max(1e-300)).min(rho_max / 24.0);
        let panels = (rho_max / width).ceil().max(1.0) as usize;
        let h = rho_max / panels as f64;
        let mut nodes = Vec::with_capacity(panels * PANEL);
        let mut kronrod = Vec::with_capacity(panels * PANEL);
        let mut gauss = Vec::with_capacity(panels * PANEL);
        for p in 0..panels {
            let center = (p as f64 + 0.5) * h;
            let half = 0.5 * h;
            for (k, &x) in XGK.iter().enumerate() {
                let gw = if k % 2 == 1 { WG[k / 2] } else { 0.0 };
                if k == XGK.len() - 1 {
                    nodes.push(center);
                    kronrod.push(half * WGK[k]);
                    gauss.push(half * gw);
                } else {
                    for sign in [-1.0, 1.0] {
                        nodes.push(center + sign * half * x);
                        kronrod.push(half * WGK[k]);
                        gauss.push(half * gw);
                    }
                }
            }
        }
        Self {
            m,
            nodes,
            kronrod,
            gauss,
            lambdas: Lambdas::new(m),
            normalization: (2.0 * PI).powf(-0.5 * m as f64),
        }
    }

    /// The symbol evaluated at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&rho| f(rho)).collect()
    }

    /// Profiles `G_{k}[F_q](r)` for each request `(k, samples of F_q)`; returns `(value, error)` pairs.
    pub fn profiles(&self, requests: &[(usize, &[f64])], r: f64) -> Vec<(f64, f64)> {
        let kmax = requests.iter().map(|q| q.0).max().unwrap_or(0) + 1;
        let mut lam = [0.0; MAX_PROFILE + 1];
        let mut kr = vec![0.0; requests.len()];
        let mut ga = vec![0.0; requests.len()];
        let mut err = vec![0.0; requests.len()];
        let mut panel_k = vec![0.0; requests.len()];
        let mut panel_g = vec![0.0; requests.len()];
        let base = self.m as i32 - 1;
        for (q, &rho) in self.nodes.iter().enumerate() {
            self.lambdas.eval(rho * r, &mut lam[..kmax]);
            let rpow = rho.powi(base);
            for (idx, &(k, f)) in requests.iter().enumerate() {
                let v = f[q] * rpow * rho.powi(2 * k as i32) * lam[k];
                panel_k[idx] += self.kronrod[q] * v;
                panel_g[idx] += self.gauss[q] * v;
            }
            if q % PANEL == PANEL - 1 {
                for idx in 0..requests.len() {
                    kr[idx] += panel_k[idx];
                    ga[idx] += panel_g[idx];
                    err[idx] += (panel_k[idx] - panel_g[idx]).abs();
                    panel_k[idx] = 0.0;
                    panel_g[idx] = 0.0;
                }
            }
        }
        kr.iter()
            .zip(&err)
            .map(|(&v, &e)| (self.normalization * v, self.normalization * e))
            .collect()
    }
}

/// Tangential symbols of the layer kernels at a fixed height `a = x_n` and time `τ`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Symbols {
    pub a: f64,
    pub tau: f64,
}

impl Symbols {
    /// `e^{-τρ²/2}`, the symbol of the tangential heat kernel.
    pub fn gauss(&self, rho: f64) -> f64 {
        (-0.5 * self.tau * rho * rho).exp()
    }

    /// `e^{-τρ²/2} ∫₀^a ∂_zΓ₁(y,τ) e^{-ρ(a−y)} dy` in closed form.
    pub fn phi(&self, rho: f64) -> f64 {
        let (a, tau) = (self.a, self.tau);
        let st = (2.0 * tau).sqrt();
        let alpha = (a - rho * tau) / st;
        let beta = rho * tau / st;
        let c = rho * (0.5 * PI * tau).sqrt();
        let g = self.gauss(rho);
        let ea = (-rho * a).exp();
        let eb = (-a * a / (2.0 * tau)).exp();
        let bracket = if alpha >= 0.0 {
            g * ea - g * eb + c * ea * (erf(alpha) + erf(beta))
        } else {
            g * ea * (1.0 - c * erfcx(beta)) + g * eb * (c * erfcx(-alpha) - 1.0)
        };
        -(2.0 * PI * tau).powf(-0.5) * bracket
    }

    /// `e^{-τρ²/2} ∫₀^a ∂_z²Γ₁(a−u,τ) e^{-ρu} du = ∂_zΓ₁(a,τ) e^{-τρ²/2} − ρ·phi`.
    pub fn psi(&self, rho: f64) -> f64 {
        heat1_dz(self.a, self.tau) * self.gauss(rho) - rho * self.phi(rho)
    }

    /// Cutoff beyond which [`Symbols::phi`] and [`Symbols::psi`] are negligible.
    pub fn rho_max(&self) -> f64 {
        let gaussian = (80.0 / self.tau).sqrt();
        if self.a * self.a / (2.0 * self.tau) >= 40.0 {
            gaussian.min(40.0 / self.a)
        } else {
            gaussian
        }
    }
}

/// Evaluates the layer and Poisson kernels through Hankel profiles of their symbols.
///
/// This route is independent of the nested spatial quadrature in
/// [`super::layer`] and is much cheaper, which makes it the workhorse for
/// sweeps over many points.
#[derive(Debug, Clone, Copy)]
pub struct SpectralKernels {
    pub dim: Dimension,
}

fn result(value: f64, error: f64) -> IntegralResult {
    IntegralResult {
        value,
        error_estimate: error,
        evaluations: 0,
        converged: true,
    }
}

impl SpectralKernels {
    pub fn new(dim: Dimension) -> Self {
        Self { dim }
    }

    fn grid(&self, rho_max: f64, r: f64) -> HankelGrid {
        HankelGrid::new(self.dim.tangential(), rho_max, r)
    }

    fn setup(&self, p: &SpaceTimePoint) -> Result<(Symbols, f64)> {
        p.check_interior(self.dim)?;
        Ok((
            Symbols {
                a: p.point.normal,
                tau: p.t,
            },
            norm(&p.point.tangential),
        ))
    }

    /// `L_ij` for `1 ≤ i, j ≤ n`; the `j = n` column uses the symbol of the direct formula.
    pub fn kernel_l(&self, i: usize, j: usize, p: &SpaceTimePoint) -> Result<IntegralResult> {
        let n = self.dim.n();
        self.dim.check_index(i, n)?;
        self.dim.check_index(j, n)?;
        let (s, r) = self.setup(p)?;
        let x = &p.point.tangential;
        let grid = self.grid(s.rho_max(), r);
        let res = if j < n {
            let phi = grid.sample(|rho| s.phi(rho));
            if i < n {
                let p1: Vec<f64> = phi.iter().zip(&grid.nodes).map(|(f, rho)| f / (2.0 * rho)).collect();
                let g = grid.profiles(&[(1, &p1), (2, &p1)], r);
                let d = if i == j { 1.0 } else { 0.0 };
                let xx = x[i - 1] * x[j - 1];
                (xx * g[1].0 - d * g[0].0, xx.abs() * g[1].1 + d * g[0].1)
            } else {
                let g = grid.profiles(&[(1, &phi)], r);
                (0.5 * x[j - 1] * g[0].0, 0.5 * x[j - 1].abs() * g[0].1)
            }
        } else {
            let psi = grid.sample(|rho| s.psi(rho));
            if i < n {
                let f: Vec<f64> = psi.iter().zip(&grid.nodes).map(|(f, rho)| f / (2.0 * rho)).collect();
                let g = grid.profiles(&[(1, &f)], r);
                (-x[i - 1] * g[0].0, x[i - 1].abs() * g[0].1)
            } else {
                let g = grid.profiles(&[(0, &psi)], r);
                (-0.5 * g[0].0, 0.5 * g[0].1)
            }
        };
        Ok(result(res.0, res.1))
    }

    /// `W₀(x′,t) = ∫ Γ′(z′,t) E(x′−z′,0) dz′` (only `x′` and `t` of `p` are used).
    pub fn boundary_convolution(&self, x_tangential: &[f64], t: f64) -> IntegralResult {
        let r = norm(x_tangential);
        let s = Symbols { a: 0.0, tau: t };
        let grid = self.grid((80.0 / t).sqrt(), r);
        let f = grid.sample(|rho| s.gauss(rho) / (2.0 * rho));
        let g = grid.profiles(&[(0, &f)], r);
        result(g[0].0, g[0].1)
    }

    /// `κ(x,t) = ∂_zΓ₁(x_n,t) W₀(x′,t)`.
    pub fn kappa(&self, p: &SpaceTimePoint) -> Result<IntegralResult> {
        p.check_interior(self.dim)?;
        let w = self.boundary_convolution(&p.point.tangential, p.t);
        let f = heat1_dz(p.point.normal, p.t);
        Ok(result(f * w.value, f.abs() * w.error_estimate))
    }

    /// `B_in(x,t)` for `i ≤ n`.
    pub fn kernel_b(&self, i: usize, p: &SpaceTimePoint) -> Result<IntegralResult> {
        let n = self.dim.n();
        self.dim.check_index(i, n)?;
        let (s, r) = self.setup(p)?;
        if i == n {
            return Ok(result(0.0, 0.0));
        }
        let grid = self.grid((80.0 / s.tau).sqrt(), r);
        let f = grid.sample(|rho| s.gauss(rho) / (2.0 * rho));
        let g = grid.profiles(&[(1, &f)], r);
        let c = -p.point.tangential[i - 1] * heat1_dz(s.a, s.tau);
        Ok(result(c * g[0].0, c.abs() * g[0].1))
    }

    /// Regular part of the Poisson kernel at `(x,t)`, all entries, with an overall error bound.
    pub fn poisson_regular(&self, p: &SpaceTimePoint) -> Result<(KernelMatrixValue, f64)> {
        let n = self.dim.n();
        let (s, r) = self.setup(p)?;
        let x = &p.point.tangential;
        let grid = self.grid(s.rho_max(), r);
        let phi = grid.sample(|rho| s.phi(rho));
        let dn = heat1_dz(s.a, s.tau);
        let p1: Vec<f64> = phi.iter().zip(&grid.nodes).map(|(f, rho)| f / (2.0 * rho)).collect();
        let normal_col: Vec<f64> = phi
            .iter()
            .zip(&grid.nodes)
            .map(|(f, &rho)| f - dn * s.gauss(rho) / rho)
            .collect();
        let rho_phi: Vec<f64> = phi.iter().zip(&grid.nodes).map(|(f, rho)| f * rho).collect();
        let g = grid.profiles(&[(1, &p1), (2, &p1), (1, &phi), (1, &normal_col), (0, &rho_phi)], r);
        let gamma_t = super::heat::heat(x, s.tau);
        let mut k = KernelMatrixValue::zeros(n);
        let mut err = 0.0_f64;
        for i in 1..n {
            for j in 1..n {
                let d = if i == j { 1.0 } else { 0.0 };
                let xx = x[i - 1] * x[j - 1];
                let v = -d * dn * gamma_t - 2.0 * (xx * g[1].0 - d * g[0].0);
                err = err.max(2.0 * (xx.abs() * g[1].1 + d * g[0].1));
                k.set(i, j, v);
            }
            k.set(n, i, -x[i - 1] * g[2].0);
            k.set(i, n, -x[i - 1] * g[3].0);
            err = err.max(x[i - 1].abs() * g[2].1.max(g[3].1));
        }
        k.set(n, n, -g[4].0);
        err = err.max(g[4].1);
        Ok((k, err))
    }

    /// `D^{α′} D_n^k D_t^τ A(x,t)` from the symbol `Γ₁(0,t) e^{-tρ²/2} e^{-ρx_n}/(2ρ)`.
    pub fn kernel_a(&self, p: &SpaceTimePoint, order: &AOrder) -> Result<IntegralResult> {
        let (s, r) = self.setup(p)?;
        if order.space_order() > super::layer::A_MAX_SPACE_ORDER || order.time > 1 {
            return Err(Error::DerivativeOrder(format!("{order:?}")));
        }
        let m = self.dim.tangential();
        for &k in &order.tangential {
            self.dim.check_index(k, m)?;
        }
        let x = &p.point.tangential;
        let rho_max = (80.0 / s.tau).sqrt().min(40.0 / s.a);
        let grid = self.grid(rho_max, r);
        let g0 = heat1(0.0, s.tau);
        let f = grid.sample(|rho| {
            let mut v = g0 * s.gauss(rho) * (-rho * s.a).exp() / (2.0 * rho);
            v *= (-rho).powi(order.normal as i32);
            if order.time == 1 {
                v *= -0.5 / s.tau - 0.5 * rho * rho;
            }
            v
        });
        let kmax = order.tangential.len();
        let requests: Vec<(usize, &[f64])> = (0..=kmax).map(|k| (k, f.as_slice())).collect();
        let g = grid.profiles(&requests, r);
        let values: Vec<f64> = g.iter().map(|v| v.0).collect();
        let scale = (0..=kmax).map(|k| g[k].1 * r.max(1.0).powi(k as i32)).fold(0.0, f64::max);
        let v = tangential_derivative(&order.tangential, x, &values);
        Ok(result(v, scale * 4.0))
    }
}

/// `D^{α′}` of a radial function given its profiles `G_0..G_{|α′|}` (indices 1-based).
pub(crate) fn tangential_derivative(indices: &[usize], x: &[f64], g: &[f64]) -> f64 {
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let xc = |a: usize| x[a - 1];
    match *indices {
        [] => g[0],
        [i] => -xc(i) * g[1],
        [i, j] => -d(i, j) * g[1] + xc(i) * xc(j) * g[2],
        [i, j, k] => {
            (d(i, j) * xc(k) + d(i, k) * xc(j) + d(j, k) * xc(i)) * g[2] - xc(i) * xc(j) * xc(k) * g[3]
        }
        _ => f64::NAN,
    }
}

#[cfg(test)]
mod tests {
    use super::super::heat::heat;
    use super::super::layer::{kernel_A, kernel_B, kernel_L, kernel_L_direct, kernel_kappa};
    use super::*;
    use crate::quadrature::{adaptive, QuadratureSpec, Tolerance};

    fn pt(c: &[f64], t: f64) -> SpaceTimePoint {
        SpaceTimePoint::from_coords(c, t).unwrap()
    }

    #[test]
    fn lambdas_match_bessel_functions() {
        for m in [2usize, 3, 4] {
            let lam = Lambdas::new(m);
            for z in [0.3, 2.0, 3.99, 4.01, 7.5, 40.0] {
                let mut out = [0.0; 4];
                lam.eval(z, &mut out);
                for (k, &v) in out.iter().enumerate() {
                    let mu = 0.5 * (m as f64 - 2.0) + k as f64;
                    let (j, _, _, _) = puruspe::besseljy(mu, z);
                    let exact = j / z.powf(mu);
                    assert!((v - exact).abs() < 1e-12 * (1.0 + exact.abs() * z.powf(mu)), "m={m} z={z} k={k}: {v} {exact}");
                }
            }
        }
    }

    #[test]
    fn profile_of_gaussian_symbol_is_heat_kernel() {
        for m in [2usize, 3] {
            let t = 0.7;
            let s = Symbols { a: 0.0, tau: t };
            for r in [0.0, 0.5, 2.0] {
                let grid = HankelGrid::new(m, (80.0 / t).sqrt(), r);
                let f = grid.sample(|rho| s.gauss(rho));
                let g = grid.profiles(&[(0, &f)], r);
                let mut x = vec![0.0; m];
                x[0] = r;
                let exact = heat(&x, t);
                assert!((g[0].0 - exact).abs() < 1e-12, "{} {}", g[0].0, exact);
            }
        }
    }

    #[test]
    fn phi_symbol_matches_quadrature() {
        let tol = Tolerance::new(1e-15, 1e-13, 200);
        for (a, tau) in [(1.0, 1.0), (0.3, 2.0), (2.0, 0.05), (0.05, 3.0)] {
            let s = Symbols { a, tau };
            for rho in [0.0, 0.4, 3.0, 25.0] {
                let direct = adaptive(|y: f64| heat1_dz(y, tau) * (-rho * (a - y)).exp(), 0.0, a, &[], &tol).value
                    * s.gauss(rho);
                let closed = s.phi(rho);
                assert!((closed - direct).abs() < 1e-11 * (1.0 + direct.abs()), "{a} {tau} {rho}: {closed} {direct}");
            }
        }
    }

    #[test]
    fn boundary_convolution_matches_bessel_form() {
        let sk = SpectralKernels::new(Dimension::THREE);
        for (r, t) in [(0.0, 1.0), (0.8, 0.4), (3.0, 2.0)] {
            let w = sk.boundary_convolution(&[r, 0.0], t).value;
            let a = r * r / (4.0 * t);
            let exact = (PI / (2.0 * t)).sqrt() * (-a).exp() * puruspe::In(0, a) / (4.0 * PI);
            assert!((w - exact).abs() < 1e-10 * exact, "{w} {exact}");
        }
    }

    fn spec() -> QuadratureSpec {
        QuadratureSpec {
            rel_tol: 1e-8,
            ..QuadratureSpec::default()
        }
    }

    #[test]
    fn l_matches_nested_quadrature() {
        let d = Dimension::THREE;
        let sk = SpectralKernels::new(d);
        for (c, t) in [([0.4, -0.3, 0.6], 0.8), ([1.5, 0.2, 0.3], 0.5)] {
            let p = pt(&c, t);
            for (i, j) in [(1, 1), (2, 1), (3, 2)] {
                let direct = kernel_L(i, j, &p, d, &spec()).unwrap().value;
                let fast = sk.kernel_l(i, j, &p).unwrap().value;
                assert!((direct - fast).abs() < 1e-6 * direct.abs(), "L{i}{j} {c:?}: {direct} {fast}");
            }
            for i in [1, 3] {
                let direct = kernel_L_direct(i, &p, d, &spec()).unwrap().value;
                let fast = sk.kernel_l(i, 3, &p).unwrap().value;
                assert!((direct - fast).abs() < 1e-6 * direct.abs(), "L{i}3 {c:?}: {direct} {fast}");
            }
        }
    }

    #[test]
    fn b_kappa_and_a_match_direct_quadrature() {
        let d = Dimension::THREE;
        let sk = SpectralKernels::new(d);
        let p = pt(&[0.7, 0.1, 0.4], 0.6);
        let kd = kernel_kappa(&p, d, &spec()).unwrap().value;
        assert!((kd - sk.kappa(&p).unwrap().value).abs() < 1e-8 * kd.abs());
        let bd = kernel_B(2, &p, d, &spec()).unwrap().value;
        assert!((bd - sk.kernel_b(2, &p).unwrap().value).abs() < 1e-8 * bd.abs());
        for order in [
            AOrder::default(),
            AOrder { tangential: vec![1, 2], ..AOrder::default() },
            AOrder { tangential: vec![1], normal: 2, ..AOrder::default() },
            AOrder { tangential: vec![2], time: 1, ..AOrder::default() },
            AOrder { tangential: vec![1, 1, 2], ..AOrder::default() },
        ] {
            let direct = kernel_A(&p, d, Some(&order), &spec()).unwrap().value;
            let fast = sk.kernel_a(&p, &order).unwrap().value;
            assert!((direct - fast).abs() < 1e-7 * direct.abs(), "{order:?}: {direct} {fast}");
        }
    }
}
