//! Adaptive 21-point Gauss–Kronrod integration for scalar and vector integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{pairwise_sum_into, IntegralResult, QuadValue, Tolerance};

/// Kronrod abscissae on [-1, 1] (non-negative half, descending).
pub(crate) const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

/// Kronrod weights matching [`XGK`].
pub(crate) const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_980_478_110,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Gauss weights for the odd Kronrod abscissae `XGK[1], XGK[3], ..., XGK[9]`.
pub(crate) const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Result of one Gauss–Kronrod panel.
#[derive(Debug, Clone)]
pub(crate) struct Panel<V> {
    pub a: f64,
    pub b: f64,
    pub value: V,
    pub error: f64,
}

/// Applies the 21-point rule on `[a, b]` and returns the Kronrod value with the
/// QUADPACK-style error estimate (maximum over components).
pub(crate) fn gk21<V: QuadValue, F: FnMut(f64) -> V>(f: &mut F, a: f64, b: f64) -> Panel<V> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let dim = fc.as_slice().len();
    let mut samples: Vec<V> = Vec::with_capacity(21);
    for k in 0..10 {
        let dx = half * XGK[k];
        samples.push(f(center - dx));
        samples.push(f(center + dx));
    }
    let mut value = fc.zeroed();
    let mut error = 0.0_f64;
    {
        let out = value.as_mut_slice();
        let c = fc.as_slice();
        for comp in 0..dim {
            let mut resk = WGK[10] * c[comp];
            let mut resg = 0.0;
            let mut resabs = WGK[10] * c[comp].abs();
            for k in 0..10 {
                let lo = samples[2 * k].as_slice()[comp];
                let hi = samples[2 * k + 1].as_slice()[comp];
                resk += WGK[k] * (lo + hi);
                resabs += WGK[k] * (lo.abs() + hi.abs());
                if k % 2 == 1 {
                    resg += WG[k / 2] * (lo + hi);
                }
            }
            let reskh = 0.5 * resk;
            let mut resasc = WGK[10] * (c[comp] - reskh).abs();
            for k in 0..10 {
                let lo = samples[2 * k].as_slice()[comp];
                let hi = samples[2 * k + 1].as_slice()[comp];
                resasc += WGK[k] * ((lo - reskh).abs() + (hi - reskh).abs());
            }
            let result = resk * half;
            let resabs = resabs * half.abs();
            let resasc = resasc * half.abs();
            let mut err = ((resk - resg) * half).abs();
            if resasc != 0.0 && err != 0.0 {
                err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
            }
            if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
                err = err.max(50.0 * f64::EPSILON * resabs);
            }
            if !result.is_finite() {
                err = f64::INFINITY;
            }
            out[comp] = result;
            error = error.max(err);
        }
    }
    Panel { a, b, value, error }
}

struct HeapEntry {
    error: f64,
    index: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.index.cmp(&self.index))
    }
}

/// Globally adaptive bisection over `[a, b]` split first at `breakpoints`.
///
/// The panel with the largest error estimate is bisected until the summed
/// estimate meets `tol` or the subdivision budget is exhausted. Panel values are
/// reduced left to right by pairwise summation so the result is reproducible.
pub fn adaptive<V, F>(mut f: F, a: f64, b: f64, breakpoints: &[f64], tol: &Tolerance) -> IntegralResult<V>
where
    V: QuadValue,
    F: FnMut(f64) -> V,
{
    let mut edges = vec![a];
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let mut interior: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|x| *x > lo && *x < hi)
        .collect();
    interior.sort_by(f64::total_cmp);
    if a > b {
        interior.reverse();
    }
    interior.dedup();
    edges.extend(interior);
    edges.push(b);

    let mut panels: Vec<Panel<V>> = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0usize;
    for w in edges.windows(2) {
        if w[0] == w[1] {
            continue;
        }
        let p = gk21(&mut f, w[0], w[1]);
        evaluations += 21;
        heap.push(HeapEntry {
            error: p.error,
            index: panels.len(),
        });
        panels.push(p);
    }
    if panels.is_empty() {
        let zero = f(a).zeroed();
        return IntegralResult {
            value: zero,
            error_estimate: 0.0,
            evaluations: 1,
            converged: true,
        };
    }

    let dim = panels[0].value.as_slice().len();
    let mut running = vec![0.0; dim];
    let mut running_err = 0.0;
    for p in &panels {
        for (r, v) in running.iter_mut().zip(p.value.as_slice()) {
            *r += v;
        }
        running_err += p.error;
    }

    let budget = tol.max_subdivisions.max(panels.len());
    let mut converged = false;
    loop {
        let scale = running.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if running_err <= tol.abs_tol.max(tol.rel_tol * scale) {
            converged = true;
            break;
        }
        if panels.len() >= budget {
            break;
        }
        let Some(top) = heap.pop() else { break };
        let (pa, pb) = (panels[top.index].a, panels[top.index].b);
        let mid = 0.5 * (pa + pb);
        if (pb - pa).abs() <= 64.0 * f64::EPSILON * pa.abs().max(pb.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        let left = gk21(&mut f, pa, mid);
        let right = gk21(&mut f, mid, pb);
        evaluations += 42;
        {
            let old = &panels[top.index];
            for (k, r) in running.iter_mut().enumerate() {
                *r += left.value.as_slice()[k] + right.value.as_slice()[k] - old.value.as_slice()[k];
            }
            running_err += left.error + right.error - old.error;
        }
        let right_index = panels.len();
        heap.push(HeapEntry {
            error: left.error,
            index: top.index,
        });
        heap.push(HeapEntry {
            error: right.error,
            index: right_index,
        });
        panels[top.index] = left;
        panels.push(right);
    }

    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut value = panels[0].value.zeroed();
    let parts: Vec<&V> = panels.iter().map(|p| &p.value).collect();
    pairwise_sum_into(&parts, &mut value);
    let errors: Vec<f64> = panels.iter().map(|p| p.error).collect();
    let error_estimate = super::pairwise_sum(&errors);
    let scale = value.as_slice().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let converged = converged
        || error_estimate <= tol.abs_tol.max(tol.rel_tol * scale);
    IntegralResult {
        value,
        error_estimate,
        evaluations,
        converged: converged && error_estimate.is_finite(),
    }
}
