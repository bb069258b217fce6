//! Verification experiments. Each one turns a checkable statement about the
//! kernels or the potentials into a [`VerificationReport`] of named rows.

mod bounds;
mod identities;
mod solutions;
mod sweep;

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::Dimension;
use crate::quadrature::QuadratureSpec;

pub use bounds::{check_pointwise_bounds, check_region_bounds};
pub use identities::{check_dgamma_l1, check_symmetry_relation, check_trace_identity};
pub use solutions::{
    blowup_experiment, default_suite, dini_experiment, dini_oracle_experiment, disc_normal_data, holder_normal_data,
    jump_normal_data, normal_bound_experiment, residual_and_trace_suite, smooth_normal_data, switched_off_jump_data,
    SuiteCase,
};
pub use sweep::l1_sweep_L;

/// Seeded pseudo-random sample sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleSpec {
    pub count: usize,
    pub seed: u64,
    /// Sample-count multiplier of the refined run used for drift checks.
    pub refinement: usize,
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self {
            count: 20,
            seed: 0x5eed_0001,
            refinement: 2,
        }
    }
}

impl SampleSpec {
    pub fn with_count(count: usize) -> Self {
        Self {
            count,
            ..Self::default()
        }
    }

    pub(crate) fn refined(&self) -> Self {
        Self {
            count: self.count * self.refinement,
            ..self.clone()
        }
    }

    pub(crate) fn rng(&self) -> ChaCha8Rng {
        use rand::SeedableRng;
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Config("samples.count must be at least 1".into()));
        }
        if self.refinement < 2 {
            return Err(Error::Config("samples.refinement must be at least 2".into()));
        }
        Ok(())
    }
}

/// Parameters shared by the experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub name: String,
    pub dim: Dimension,
    pub xn_sweep: Vec<f64>,
    /// Time horizon; experiments fall back to their own default when absent.
    pub horizon: Option<f64>,
    pub quadrature: QuadratureSpec,
    pub samples: SampleSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "default".into(),
            dim: Dimension::THREE,
            xn_sweep: vec![0.25, 0.5, 1.0, 2.0],
            horizon: None,
            quadrature: QuadratureSpec::default(),
            samples: SampleSpec::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.xn_sweep.is_empty() {
            return Err(Error::Config("xn_sweep must not be empty".into()));
        }
        if let Some(bad) = self.xn_sweep.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::Config(format!("xn_sweep entries must be positive, got {bad}")));
        }
        if let Some(t) = self.horizon {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("horizon must be positive, got {t}")));
            }
        }
        self.quadrature.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.samples.validate()
    }
}

/// How a row's measured value is judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|measured − target| ≤ tolerance`.
    Within,
    /// `measured ≤ target`.
    AtMost,
    /// `measured ≥ target`.
    AtLeast,
    /// `measured` is finite.
    Finite,
}

impl Comparison {
    fn holds(self, measured: f64, target: f64, tolerance: f64) -> bool {
        match self {
            Comparison::Within => (measured - target).abs() <= tolerance,
            Comparison::AtMost => measured <= target,
            Comparison::AtLeast => measured >= target,
            Comparison::Finite => measured.is_finite(),
        }
    }
}

/// Whether a row counts toward the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowRole {
    /// Must pass.
    Check,
    /// Expected to fail; a passing control fails the report.
    Control,
    /// Reported only.
    Info,
}

/// One measured quantity and its assertion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub name: String,
    pub inputs: Vec<(String, f64)>,
    pub measured: f64,
    pub target: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub pass: bool,
    pub role: RowRole,
    /// Set when the underlying quadrature did not converge; flagged rows do not count.
    pub flagged: bool,
    pub note: String,
}

impl Row {
    pub fn new(name: &str, inputs: &[(&str, f64)], measured: f64, comparison: Comparison, target: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            measured,
            target,
            tolerance,
            comparison,
            pass: comparison.holds(measured, target, tolerance),
            role: RowRole::Check,
            flagged: false,
            note: String::new(),
        }
    }

    pub fn within(name: &str, inputs: &[(&str, f64)], measured: f64, target: f64, tolerance: f64) -> Self {
        Self::new(name, inputs, measured, Comparison::Within, target, tolerance)
    }

    pub fn at_most(name: &str, inputs: &[(&str, f64)], measured: f64, bound: f64) -> Self {
        Self::new(name, inputs, measured, Comparison::AtMost, bound, 0.0)
    }

    pub fn at_least(name: &str, inputs: &[(&str, f64)], measured: f64, bound: f64) -> Self {
        Self::new(name, inputs, measured, Comparison::AtLeast, bound, 0.0)
    }

    pub fn finite(name: &str, inputs: &[(&str, f64)], measured: f64) -> Self {
        Self::new(name, inputs, measured, Comparison::Finite, 0.0, 0.0)
    }

    /// A reported value with no assertion.
    pub fn info(name: &str, inputs: &[(&str, f64)], measured: f64) -> Self {
        Self::finite(name, inputs, measured).role(RowRole::Info)
    }

    pub fn role(mut self, role: RowRole) -> Self {
        self.role = role;
        self
    }

    pub fn flag_unless(mut self, converged: bool, note: &str) -> Self {
        if !converged {
            self.flagged = true;
            self.note = note.to_string();
        }
        self
    }

    pub fn note(mut self, note: &str) -> Self {
        self.note = note.to_string();
        self
    }

    /// Whether the row is acceptable for the verdict.
    pub fn satisfied(&self) -> bool {
        match self.role {
            RowRole::Check => self.pass,
            RowRole::Control => !self.pass,
            RowRole::Info => true,
        }
    }

    fn inputs_text(&self) -> String {
        self.inputs
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// No failures, but some rows were excluded for nonconvergence.
    Flagged,
}

/// The rows, fitted constants and verdict of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub experiment: String,
    pub rows: Vec<Row>,
    pub fitted_constants: BTreeMap<String, f64>,
    pub verdict: Verdict,
}

impl VerificationReport {
    pub fn new(experiment: &str, rows: Vec<Row>, fitted_constants: BTreeMap<String, f64>) -> Self {
        let failed = rows.iter().any(|r| !r.flagged && !r.satisfied())
            || fitted_constants.values().any(|c| !c.is_finite());
        let verdict = if failed {
            Verdict::Fail
        } else if rows.iter().any(|r| r.flagged) {
            Verdict::Flagged
        } else {
            Verdict::Pass
        };
        Self {
            experiment: experiment.to_string(),
            rows,
            fitted_constants,
            verdict,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }

    /// Rows that make the verdict fail.
    pub fn failures(&self) -> Vec<&Row> {
        self.rows.iter().filter(|r| !r.flagged && !r.satisfied()).collect()
    }

    /// Rows with the given name.
    pub fn rows_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Row> + 'a {
        self.rows.iter().filter(move |r| r.name == name)
    }

    /// Whether every non-flagged row with one of `names` is satisfied.
    pub fn satisfied(&self, names: &[&str]) -> bool {
        self.rows
            .iter()
            .filter(|r| names.contains(&r.name.as_str()) && !r.flagged)
            .all(Row::satisfied)
    }
}

/// CSV columns, in order.
pub const CSV_COLUMNS: [&str; 11] = [
    "experiment",
    "name",
    "inputs",
    "measured",
    "target",
    "tolerance",
    "pass",
    "comparison",
    "role",
    "flagged",
    "note",
];

fn label<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

/// Writes every row of `reports` as CSV with the columns of [`CSV_COLUMNS`].
pub fn write_csv<W: Write>(reports: &[VerificationReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for rep in reports {
        for row in &rep.rows {
            w.write_record([
                rep.experiment.clone(),
                row.name.clone(),
                row.inputs_text(),
                row.measured.to_string(),
                row.target.to_string(),
                row.tolerance.to_string(),
                row.pass.to_string(),
                label(&row.comparison),
                label(&row.role),
                row.flagged.to_string(),
                row.note.clone(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Verdicts and fitted constants of each report.
pub fn summary_json(reports: &[VerificationReport]) -> serde_json::Value {
    let entries: Vec<serde_json::Value> = reports
        .iter()
        .map(|r| {
            serde_json::json!({
                "experiment": r.experiment,
                "verdict": r.verdict,
                "rows": r.rows.len(),
                "failures": r.failures().iter().map(|f| f.name.clone()).collect::<Vec<_>>(),
                "fitted_constants": r.fitted_constants.iter()
                    .map(|(k, v)| (k.clone(), if v.is_finite() { serde_json::json!(v) } else { serde_json::json!(v.to_string()) }))
                    .collect::<serde_json::Map<_, _>>(),
            })
        })
        .collect();
    serde_json::json!({ "reports": entries })
}

pub(crate) fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// A uniformly distributed unit vector in `ℝ^m`.
pub(crate) fn random_direction(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 1e-3 && r <= 1.0 {
            return v.iter().map(|x| x / r).collect();
        }
    }
}

/// Largest relative spread `(max − min)/max` of positive values.
pub(crate) fn relative_spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    (max - min) / max
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_follows_rows_and_constants() {
        let ok = Row::within("a", &[], 1.0, 1.0, 0.1);
        let bad = Row::at_most("b", &[], 2.0, 1.0);
        assert_eq!(VerificationReport::new("e", vec![ok.clone()], BTreeMap::new()).verdict, Verdict::Pass);
        assert_eq!(VerificationReport::new("e", vec![ok.clone(), bad.clone()], BTreeMap::new()).verdict, Verdict::Fail);
        let flagged = bad.clone().flag_unless(false, "no convergence");
        assert_eq!(VerificationReport::new("e", vec![ok.clone(), flagged], BTreeMap::new()).verdict, Verdict::Flagged);
        let mut c = BTreeMap::new();
        c.insert("c".to_string(), f64::INFINITY);
        assert_eq!(VerificationReport::new("e", vec![ok], c).verdict, Verdict::Fail);
    }

    #[test]
    fn controls_must_fail() {
        let failing_control = Row::at_most("c", &[], 2.0, 1.0).role(RowRole::Control);
        let passing_control = Row::at_most("c", &[], 0.5, 1.0).role(RowRole::Control);
        assert_eq!(VerificationReport::new("e", vec![failing_control], BTreeMap::new()).verdict, Verdict::Pass);
        assert_eq!(VerificationReport::new("e", vec![passing_control], BTreeMap::new()).verdict, Verdict::Fail);
    }

    #[test]
    fn csv_has_fixed_columns() {
        let rep = VerificationReport::new("exp", vec![Row::within("r", &[("x", 0.5)], 1.0, 1.0, 0.1)], BTreeMap::new());
        let mut buf = Vec::new();
        write_csv(&[rep], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
        assert_eq!(lines.next().unwrap(), "exp,r,x=0.5,1,1,0.1,true,within,check,false,");
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let err = serde_json::from_str::<ExperimentConfig>(r#"{"name":"x","bogus":1}"#).unwrap_err();
        assert!(err.to_string().contains("bogus"));
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"xn_sweep":[1.0]}"#).unwrap();
        assert_eq!(cfg.dim, Dimension::THREE);
        assert!(cfg.validate().is_ok());
        let bad: ExperimentConfig = serde_json::from_str(r#"{"xn_sweep":[-1.0]}"#).unwrap();
        assert!(bad.validate().is_err());
    }

    #[test]
    fn seeded_samples_are_reproducible() {
        let s = SampleSpec::default();
        let (mut a, mut b) = (s.rng(), s.rng());
        let xa: Vec<f64> = (0..5).map(|_| log_uniform(&mut a, 0.1, 10.0)).collect();
        let xb: Vec<f64> = (0..5).map(|_| log_uniform(&mut b, 0.1, 10.0)).collect();
        assert_eq!(xa, xb);
        assert!(xa.iter().all(|x| (0.1..10.0).contains(x)));
    }
}
