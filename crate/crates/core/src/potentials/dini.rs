//! Sampled modulus of continuity and the Dini integral `∫₀^{r₀} ω(r)/r dr`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Radii are log-spaced on `(r₀·EPSILON_FRACTION, r₀)`.
const EPSILON_FRACTION: f64 = 1e-6;
/// Random directions added to the coordinate axes.
const RANDOM_DIRECTIONS: usize = 24;
/// Points sampled along each direction, as fractions of the radius.
const SHELLS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];
const SEED: u64 = 0x5eed_d1e1;

/// Sampled `ω(r)` at one point and its Dini integral.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiniReport {
    /// `(r, ω(r))`, increasing in `r`, with `ω` nondecreasing.
    pub modulus_samples: Vec<(f64, f64)>,
    /// `∫_ε^{r₀} ω(r)/r dr`.
    pub dini_integral: f64,
    pub r0: f64,
    /// Lower truncation `ε = r₀·1e−6`; the part below `ε` is not included.
    pub epsilon: f64,
    pub omega_at_epsilon: f64,
    /// Contribution of each decade `(10^k ε, 10^{k+1} ε)`, smallest first.
    pub decade_contributions: Vec<f64>,
    /// False when the smallest decades contribute at a non-decaying rate.
    pub dini: bool,
}

fn directions(m: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::with_capacity(2 * m + RANDOM_DIRECTIONS);
    for k in 0..m {
        for s in [1.0, -1.0] {
            let mut v = vec![0.0; m];
            v[k] = s;
            dirs.push(v);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    while dirs.len() < 2 * m + RANDOM_DIRECTIONS {
        let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 && norm <= 1.0 {
            dirs.push(v.iter().map(|x| x / norm).collect());
        }
    }
    dirs
}

/// Estimates `ω(f)(r,x) = sup_{|y−x|<r} |f(y) − f(x)|` at `sample_count`
/// log-spaced radii and integrates `ω(r)/r` by the trapezoid rule in `log r`.
pub fn dini_modulus(f: &dyn Fn(&[f64]) -> f64, x: &[f64], r0: f64, sample_count: usize) -> Result<DiniReport> {
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(Error::Parameter(format!("r0 must be positive, got {r0}")));
    }
    if sample_count < 2 {
        return Err(Error::Parameter(format!("need at least two radii, got {sample_count}")));
    }
    if x.is_empty() {
        return Err(Error::Parameter("point must have at least one coordinate".into()));
    }
    let dirs = directions(x.len());
    let fx = f(x);
    let epsilon = r0 * EPSILON_FRACTION;
    let (lo, hi) = (epsilon.ln(), r0.ln());
    let step = (hi - lo) / (sample_count - 1) as f64;
    let mut y = vec![0.0; x.len()];
    let mut running = 0.0_f64;
    let modulus_samples: Vec<(f64, f64)> = (0..sample_count)
        .map(|k| {
            let r = (lo + step * k as f64).exp();
            for d in &dirs {
                for frac in SHELLS {
                    for ((yk, xk), dk) in y.iter_mut().zip(x).zip(d) {
                        *yk = xk + frac * r * dk;
                    }
                    running = running.max((f(&y) - fx).abs());
                }
            }
            (r, running)
        })
        .collect();

    let decades = ((hi - lo) / std::f64::consts::LN_10).round().max(1.0) as usize;
    let mut decade_contributions = vec![0.0; decades];
    let mut dini_integral = 0.0;
    for (k, w) in modulus_samples.windows(2).enumerate() {
        let piece = 0.5 * step * (w[0].1 + w[1].1);
        dini_integral += piece;
        let mid = lo + step * (k as f64 + 0.5);
        let decade = (((mid - lo) / std::f64::consts::LN_10) as usize).min(decades - 1);
        decade_contributions[decade] += piece;
    }
    let dini = match decade_contributions.as_slice() {
        [first, second, ..] => !(*first > 0.0 && *first >= 0.95 * second),
        _ => true,
    };
    Ok(DiniReport {
        omega_at_epsilon: modulus_samples[0].1,
        modulus_samples,
        dini_integral,
        r0,
        epsilon,
        decade_contributions,
        dini,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_root_has_integral_two() {
        let f = |y: &[f64]| y.iter().map(|v| v * v).sum::<f64>().powf(0.25);
        let rep = dini_modulus(&f, &[0.0, 0.0], 1.0, 400).unwrap();
        assert!((rep.dini_integral - 2.0).abs() < 1e-2, "{}", rep.dini_integral);
        assert!(rep.dini);
    }

    #[test]
    fn constant_function_has_zero_modulus() {
        let rep = dini_modulus(&|_| 3.0, &[0.1, 0.2], 1.0, 50).unwrap();
        assert_eq!(rep.dini_integral, 0.0);
        assert!(rep.modulus_samples.iter().all(|s| s.1 == 0.0));
        assert!(rep.dini);
    }

    #[test]
    fn jump_is_flagged() {
        let rep = dini_modulus(&|y| y[0].signum(), &[0.0, 0.0], 1.0, 200).unwrap();
        assert!(!rep.dini);
        assert!(rep.modulus_samples.iter().all(|s| s.1 == 2.0));
    }

    #[test]
    fn modulus_is_monotone() {
        let f = |y: &[f64]| (7.0 * y[0]).sin() + y[1] * y[1];
        let rep = dini_modulus(&f, &[0.3, -0.1], 2.0, 120).unwrap();
        assert!(rep.modulus_samples.windows(2).all(|w| w[1].1 >= w[0].1));
    }
}
