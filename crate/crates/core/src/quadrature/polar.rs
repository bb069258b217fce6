//! Nested polar cubature on `ℝ^m`: adaptive in the radius and in the polar angle
//! about an axis, with a fixed product rule on the transverse sphere `S^{m−2}`.

use super::{adaptive, IntegralResult, QuadValue, Tolerance};

/// Surface area of the unit sphere `S^{m−1} ⊂ ℝ^m`.
pub fn sphere_area(m: usize) -> f64 {
    let h = 0.5 * m as f64;
    2.0 * std::f64::consts::PI.powf(h) / puruspe::gamma(h)
}

/// Points of the unit sphere `S^k ⊂ ℝ^{k+1}` with positive weights summing to its area.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

const CIRCLE_POINTS: usize = 32;
const LATITUDE_POINTS: usize = 16;

impl SphereRule {
    /// Rule for `S^k`: two antipodes for `k = 0`, a trapezoid rule for `k = 1`, and a
    /// Gauss–Legendre latitude product with the `S^{k−1}` rule above that.
    pub fn new(k: usize) -> Self {
        match k {
            0 => Self {
                dim: 1,
                points: vec![vec![1.0], vec![-1.0]],
                weights: vec![1.0, 1.0],
            },
            1 => {
                let h = 2.0 * std::f64::consts::PI / CIRCLE_POINTS as f64;
                let points = (0..CIRCLE_POINTS)
                    .map(|j| {
                        let a = (j as f64 + 0.5) * h;
                        vec![a.cos(), a.sin()]
                    })
                    .collect();
                Self {
                    dim: 2,
                    points,
                    weights: vec![h; CIRCLE_POINTS],
                }
            }
            _ => {
                let lower = SphereRule::new(k - 1);
                let (nodes, gl_weights) = gauss_legendre(LATITUDE_POINTS);
                let mut points = Vec::new();
                let mut weights = Vec::new();
                for (x, w) in nodes.iter().zip(&gl_weights) {
                    let phi = 0.5 * std::f64::consts::PI * (x + 1.0);
                    let jac = 0.5 * std::f64::consts::PI * w * phi.sin().powi(k as i32 - 1);
                    for (p, pw) in lower.points.iter().zip(&lower.weights) {
                        let mut q = Vec::with_capacity(k + 1);
                        q.push(phi.cos());
                        q.extend(p.iter().map(|v| v * phi.sin()));
                        points.push(q);
                        weights.push(jac * pw);
                    }
                }
                Self {
                    dim: k + 1,
                    points,
                    weights,
                }
            }
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// A polar region about `center`: radii in `[r_min, r_max]` and polar angle
/// (measured from `axis`) in `[polar_cut(r), π]`.
pub struct PolarPatch<'a> {
    pub center: &'a [f64],
    pub axis: Option<&'a [f64]>,
    pub r_min: f64,
    pub r_max: f64,
    pub breaks: Vec<f64>,
    pub polar_cut: Option<&'a dyn Fn(f64) -> f64>,
}

impl<'a> PolarPatch<'a> {
    pub fn ball(center: &'a [f64], radius: f64) -> Self {
        Self::shell(center, 0.0, radius)
    }

    pub fn shell(center: &'a [f64], r_min: f64, r_max: f64) -> Self {
        Self {
            center,
            axis: None,
            r_min,
            r_max,
            breaks: Vec::new(),
            polar_cut: None,
        }
    }

    pub fn with_breaks(mut self, breaks: &[f64]) -> Self {
        self.breaks.extend_from_slice(breaks);
        self
    }

    pub fn with_axis(mut self, axis: &'a [f64]) -> Self {
        self.axis = Some(axis);
        self
    }

    pub fn with_polar_cut(mut self, cut: &'a dyn Fn(f64) -> f64) -> Self {
        self.polar_cut = Some(cut);
        self
    }
}

/// Orthonormal frame whose first vector is `axis` (or `e₁`).
fn frame(m: usize, axis: Option<&[f64]>) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    let first = match axis {
        Some(a) => {
            let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                a.iter().map(|v| v / norm).collect()
            } else {
                unit(m, 0)
            }
        }
        None => unit(m, 0),
    };
    basis.push(first);
    for k in 0..m {
        if basis.len() == m {
            break;
        }
        let mut v = unit(m, k);
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= d * y;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            basis.push(v.iter().map(|x| x / norm).collect());
        }
    }
    basis
}

fn unit(m: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; m];
    v[k] = 1.0;
    v
}

/// Integrates `f` over a [`PolarPatch`] in `ℝ^m` (`m ≥ 2`).
///
/// The radial integral is globally adaptive; at each radius the polar-angle
/// integral is adaptive with a tighter tolerance, and the transverse sphere uses
/// a fixed [`SphereRule`]. The inner error estimates are integrated radially
/// alongside the value and added to the outer estimate.
pub fn integrate_polar<V, F>(m: usize, patch: &PolarPatch<'_>, f: &mut F, tol: &Tolerance) -> IntegralResult<V>
where
    V: QuadValue,
    F: FnMut(&[f64]) -> V,
{
    integrate_polar_radial(m, patch, |_| (), |_, x, _| f(x), tol)
}

/// Like [`integrate_polar`], but runs `setup(r)` once per radius and passes its
/// result to `f(&state, point, offset)`, where `offset = point − center`.
pub fn integrate_polar_radial<V, S, Setup, F>(
    m: usize,
    patch: &PolarPatch<'_>,
    mut setup: Setup,
    mut f: F,
    tol: &Tolerance,
) -> IntegralResult<V>
where
    V: QuadValue,
    Setup: FnMut(f64) -> S,
    F: FnMut(&S, &[f64], &[f64]) -> V,
{
    assert!(m >= 2, "polar cubature needs at least two dimensions");
    let basis = frame(m, patch.axis);
    let transverse = SphereRule::new(m - 2);
    let span = (patch.r_max - patch.r_min).max(0.0);
    let mut point = vec![0.0; m];
    let mut offset = vec![0.0; m];
    let mut template: Option<V> = None;
    let mut inner_ok = true;
    let mut inner_evals = 0usize;
    // Value components followed by the radial density of the inner error estimate.
    let mut outer = |r: f64| -> Vec<f64> {
        let theta_lo = patch.polar_cut.map(|c| c(r)).unwrap_or(0.0);
        let radial_weight = r.powi(m as i32 - 1);
        let state = setup(r);
        let abs_inner = 0.1 * tol.abs_tol / (span.max(f64::MIN_POSITIVE) * radial_weight.max(1e-300));
        let inner_tol = Tolerance::new(abs_inner.min(1e300), 0.1 * tol.rel_tol, tol.max_subdivisions);
        let res = adaptive(
            |theta: f64| {
                let (s, c) = theta.sin_cos();
                let jac = if m > 2 { s.powi(m as i32 - 2) } else { 1.0 };
                let mut acc: Option<V> = None;
                for (w, p) in transverse.weights.iter().zip(&transverse.points) {
                    for k in 0..m {
                        let mut dir = c * basis[0][k];
                        for (l, pl) in p.iter().enumerate() {
                            dir += s * pl * basis[l + 1][k];
                        }
                        offset[k] = r * dir;
                        point[k] = patch.center[k] + offset[k];
                    }
                    let v = f(&state, &point, &offset);
                    match acc.as_mut() {
                        None => {
                            let mut z = v.zeroed();
                            for (o, x) in z.as_mut_slice().iter_mut().zip(v.as_slice()) {
                                *o = w * jac * x;
                            }
                            acc = Some(z);
                        }
                        Some(a) => {
                            for (o, x) in a.as_mut_slice().iter_mut().zip(v.as_slice()) {
                                *o += w * jac * x;
                            }
                        }
                    }
                }
                acc.expect("transverse rule has points")
            },
            theta_lo,
            std::f64::consts::PI,
            &[],
            &inner_tol,
        );
        inner_ok &= res.converged;
        inner_evals += res.evaluations * transverse.weights.len();
        let mut v: Vec<f64> = res.value.as_slice().iter().map(|x| x * radial_weight).collect();
        v.push(res.error_estimate * radial_weight);
        template.get_or_insert_with(|| res.value.zeroed());
        v
    };
    let res = adaptive(&mut outer, patch.r_min, patch.r_max, &patch.breaks, tol);
    let (parts, inner_err) = res.value.split_at(res.value.len() - 1);
    let mut value = template.expect("outer rule evaluates the integrand");
    value.as_mut_slice().copy_from_slice(parts);
    let error_estimate = res.error_estimate + inner_err[0].abs();
    let scale = parts.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    IntegralResult {
        converged: res.converged && inner_ok || error_estimate <= tol.abs_tol.max(tol.rel_tol * scale),
        value,
        error_estimate,
        evaluations: inner_evals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_rules_have_correct_area() {
        for k in 0..4 {
            let rule = SphereRule::new(k);
            let total: f64 = rule.weights.iter().sum();
            assert!((total - sphere_area(k + 1)).abs() < 1e-12 * total, "k={k}");
        }
    }

    #[test]
    fn ball_volume_in_three_dimensions() {
        let c = [0.3, -0.2, 0.1];
        let patch = PolarPatch::ball(&c, 1.5);
        let r = integrate_polar(3, &patch, &mut |_y: &[f64]| 1.0, &Tolerance::new(1e-12, 1e-12, 100));
        let exact = 4.0 / 3.0 * std::f64::consts::PI * 1.5f64.powi(3);
        assert!((r.value - exact).abs() < 1e-10);
    }

    #[test]
    fn polar_cut_removes_cap() {
        // The disc of radius ½ about x′ lies inside the annulus ½ ≤ |y| ≤ 2.
        let x = [1.0, 0.0];
        let a = 1.0;
        let cut = |r: f64| ((r * r + 0.75 * a * a) / (2.0 * r * a)).min(1.0).acos();
        let origin = [0.0, 0.0];
        let patch = PolarPatch::shell(&origin, 0.5, 2.0)
            .with_axis(&x)
            .with_polar_cut(&cut)
            .with_breaks(&[1.5]);
        let tol = Tolerance::new(1e-11, 1e-11, 200);
        let r = integrate_polar(2, &patch, &mut |_y: &[f64]| 1.0, &tol);
        let exact = std::f64::consts::PI * (4.0 - 0.25) - std::f64::consts::PI * 0.25;
        assert!((r.value - exact).abs() < 1e-9, "{} vs {}", r.value, exact);
    }
}
