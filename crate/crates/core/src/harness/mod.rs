//! Training, detection and evaluation.
//!
//! Learned ranges are union-merges of a seeded sample of training runs. A
//! test run is predicted to pass iff every monitored range it observed lies
//! inside the learned range. Predictions are scored against an oracle that
//! compares each version's output with the original program's.

pub mod campaign;
pub mod exec;

use std::fmt;
use std::fmt::Write as _;

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::rtformat::RangeDump;

/// The training percentages used when none are configured.
pub const DEFAULT_PERCENTAGES: [f64; 11] =
    [5.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error("no training runs")]
    EmptyTraining,
    #[error("training percentage {0} is outside (0, 100]")]
    BadPercentage(f64),
    #[error("run `{run}` has {found} slots, expected {expected}")]
    SlotMismatch {
        run: String,
        expected: usize,
        found: usize,
    },
    #[error("matrix dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("missing output for test {test} of version {version}")]
    MissingOutput { test: String, version: String },
    #[error("matrix CSV line {line}: {message}")]
    Csv { line: usize, message: String },
}

pub type Interval = (f64, f64);

/// Ranges observed by one execution.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRanges {
    pub run_id: String,
    pub per_slot: Vec<Option<Interval>>,
}

impl RunRanges {
    pub fn from_dump(run_id: impl Into<String>, dump: RangeDump) -> Self {
        Self {
            run_id: run_id.into(),
            per_slot: dump.slots,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergedRange {
    pub per_slot: Vec<Option<Interval>>,
    pub sampled_runs: Vec<String>,
    pub percentage: f64,
    pub seed: u64,
}

impl MergedRange {
    pub fn to_dump(&self) -> RangeDump {
        RangeDump {
            slots: self.per_slot.clone(),
        }
    }
}

/// `max(1, ceil(p/100 * m))`, capped at `m`.
pub fn sample_size(percentage: f64, m: usize) -> usize {
    let k = (percentage * m as f64 / 100.0).ceil() as usize;
    k.clamp(1, m.max(1))
}

/// A seeded permutation of `0..m`. Samples at every percentage are prefixes
/// of it, so a larger percentage always sees a superset of runs.
pub fn sample_order(m: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
}

fn widen(acc: &mut Option<Interval>, r: Option<Interval>) {
    if let Some((lo, hi)) = r {
        *acc = Some(match *acc {
            Some((a, b)) => (a.min(lo), b.max(hi)),
            None => (lo, hi),
        });
    }
}

fn check_width(runs: &[RunRanges]) -> Result<usize, HarnessError> {
    let n = runs.first().ok_or(HarnessError::EmptyTraining)?.per_slot.len();
    for r in runs {
        if r.per_slot.len() != n {
            return Err(HarnessError::SlotMismatch {
                run: r.run_id.clone(),
                expected: n,
                found: r.per_slot.len(),
            });
        }
    }
    Ok(n)
}

/// Union-merges the runs at `indices`.
pub fn merge_selected(
    training: &[RunRanges],
    indices: &[usize],
    percentage: f64,
    seed: u64,
) -> Result<MergedRange, HarnessError> {
    let n = check_width(training)?;
    let mut per_slot = vec![None; n];
    let mut sampled_runs = Vec::with_capacity(indices.len());
    for &i in indices {
        let run = &training[i];
        sampled_runs.push(run.run_id.clone());
        for (acc, r) in per_slot.iter_mut().zip(&run.per_slot) {
            widen(acc, *r);
        }
    }
    Ok(MergedRange {
        per_slot,
        sampled_runs,
        percentage,
        seed,
    })
}

pub fn merge_ranges(
    training: &[RunRanges],
    percentage: f64,
    seed: u64,
) -> Result<MergedRange, HarnessError> {
    if !(percentage > 0.0 && percentage <= 100.0) {
        return Err(HarnessError::BadPercentage(percentage));
    }
    check_width(training)?;
    let k = sample_size(percentage, training.len());
    let order = sample_order(training.len(), seed);
    merge_selected(training, &order[..k], percentage, seed)
}

/// Per slot: the observation is absent, or lies inside a present learned
/// range.
pub fn contains(learned: &MergedRange, observed: &RunRanges) -> Result<Vec<bool>, HarnessError> {
    if learned.per_slot.len() != observed.per_slot.len() {
        return Err(HarnessError::SlotMismatch {
            run: observed.run_id.clone(),
            expected: learned.per_slot.len(),
            found: observed.per_slot.len(),
        });
    }
    Ok(learned
        .per_slot
        .iter()
        .zip(&observed.per_slot)
        .map(|(l, o)| match (l, o) {
            (_, None) => true,
            (Some((lmin, lmax)), Some((omin, omax))) => lmin <= omin && omax <= lmax,
            (None, Some(_)) => false,
        })
        .collect())
}

/// True (pass) iff no slot violates the learned range.
pub fn predict_cell(learned: &MergedRange, observed: &RunRanges) -> Result<bool, HarnessError> {
    Ok(contains(learned, observed)?.into_iter().all(|v| v))
}

/// Tests x versions; `true` means the test passed on that version.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultMatrix {
    pub tests: usize,
    pub versions: usize,
    cells: Vec<bool>,
}

impl FaultMatrix {
    pub fn new(tests: usize, versions: usize) -> Self {
        Self {
            tests,
            versions,
            cells: vec![true; tests * versions],
        }
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Self {
        let versions = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == versions), "ragged matrix");
        Self {
            tests: rows.len(),
            versions,
            cells: rows.concat(),
        }
    }

    pub fn get(&self, test: usize, version: usize) -> bool {
        self.cells[test * self.versions + version]
    }

    pub fn set(&mut self, test: usize, version: usize, pass: bool) {
        self.cells[test * self.versions + version] = pass;
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn ones(&self) -> usize {
        self.cells.iter().filter(|c| **c).count()
    }

    /// Percentage of passing cells.
    pub fn ones_percentage(&self) -> Option<Ratio<u64>> {
        ratio_pct(self.ones() as u64, self.cells.len() as u64)
    }

    pub fn column(&self, version: usize) -> FaultMatrix {
        let rows: Vec<Vec<bool>> = (0..self.tests).map(|t| vec![self.get(t, version)]).collect();
        FaultMatrix::from_rows(&rows)
    }

    /// CSV with a `test,<versions...>` header and one 0/1 row per test.
    pub fn to_csv(&self, test_names: &[String], version_names: &[String]) -> String {
        let mut s = String::from("test");
        for v in version_names {
            s.push(',');
            s.push_str(v);
        }
        s.push('\n');
        for t in 0..self.tests {
            s.push_str(&test_names[t]);
            for v in 0..self.versions {
                s.push_str(if self.get(t, v) { ",1" } else { ",0" });
            }
            s.push('\n');
        }
        s
    }

    pub fn parse_csv(text: &str) -> Result<Self, HarnessError> {
        let bad = |line, message: &str| HarnessError::Csv {
            line,
            message: message.to_string(),
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| bad(1, "empty matrix"))?;
        let versions = header.split(',').count() - 1;
        let mut rows = Vec::new();
        for (i, line) in lines {
            let cells: Result<Vec<bool>, _> = line
                .split(',')
                .skip(1)
                .map(|c| match c.trim() {
                    "1" => Ok(true),
                    "0" => Ok(false),
                    _ => Err(bad(i + 1, "cells must be 0 or 1")),
                })
                .collect();
            let cells = cells?;
            if cells.len() != versions {
                return Err(bad(i + 1, "row length differs from header"));
            }
            rows.push(cells);
        }
        let mut m = FaultMatrix::from_rows(&rows);
        m.versions = versions;
        Ok(m)
    }
}

/// Observable result of one execution, compared byte for byte.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub stdout: Vec<u8>,
    pub exit_code: i32,
}

/// `original[t]` is the reference output of test `t`; `versions[v][t]` the
/// output of version `v`.
pub fn build_oracle_matrix(
    original: &[Option<RunOutput>],
    versions: &[Vec<Option<RunOutput>>],
    test_names: &[String],
    version_names: &[String],
) -> Result<FaultMatrix, HarnessError> {
    let mut m = FaultMatrix::new(original.len(), versions.len());
    for (t, reference) in original.iter().enumerate() {
        let reference = reference.as_ref().ok_or_else(|| HarnessError::MissingOutput {
            test: test_names[t].clone(),
            version: "original".into(),
        })?;
        for (v, outputs) in versions.iter().enumerate() {
            let out = outputs
                .get(t)
                .and_then(Option::as_ref)
                .ok_or_else(|| HarnessError::MissingOutput {
                    test: test_names[t].clone(),
                    version: version_names[v].clone(),
                })?;
            m.set(t, v, out == reference);
        }
    }
    Ok(m)
}

fn same_shape(a: &FaultMatrix, b: &FaultMatrix) -> Result<(), HarnessError> {
    if (a.tests, a.versions) != (b.tests, b.versions) {
        return Err(HarnessError::DimensionMismatch(a.tests, a.versions, b.tests, b.versions));
    }
    Ok(())
}

/// `100 * num / den`, undefined when `den` is 0.
pub fn ratio_pct(num: u64, den: u64) -> Option<Ratio<u64>> {
    (den > 0).then(|| Ratio::new(100 * num, den))
}

/// Percentage of equal cells.
pub fn matrix_accuracy(pred: &FaultMatrix, oracle: &FaultMatrix) -> Result<Ratio<u64>, HarnessError> {
    same_shape(pred, oracle)?;
    let equal = pred.cells.iter().zip(&oracle.cells).filter(|(a, b)| a == b).count();
    Ok(ratio_pct(equal as u64, pred.cells.len() as u64).unwrap_or_else(|| Ratio::from_integer(100)))
}

/// Confusion counts and derived rates. A positive is a predicted pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricsReport {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
    pub acc: Option<Ratio<u64>>,
    pub ppv: Option<Ratio<u64>>,
    pub npv: Option<Ratio<u64>>,
    pub tpr: Option<Ratio<u64>>,
    pub tnr: Option<Ratio<u64>>,
}

pub fn compute_metrics(pred: &FaultMatrix, oracle: &FaultMatrix) -> Result<MetricsReport, HarnessError> {
    same_shape(pred, oracle)?;
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (p, o) in pred.cells.iter().zip(&oracle.cells) {
        match (p, o) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    Ok(MetricsReport {
        tp,
        fp,
        tn,
        fn_,
        acc: ratio_pct(tp + tn, tp + fp + tn + fn_),
        ppv: ratio_pct(tp, tp + fp),
        npv: ratio_pct(tn, tn + fn_),
        tpr: ratio_pct(tp, tp + fn_),
        tnr: ratio_pct(tn, fp + tn),
    })
}

/// Two decimals, or `-` when undefined.
pub fn fmt_pct(r: Option<Ratio<u64>>) -> String {
    match r {
        Some(r) => format!("{:.2}", *r.numer() as f64 / *r.denom() as f64),
        None => "-".to_string(),
    }
}

impl MetricsReport {
    pub const TSV_HEADER: &'static str = "tp\tfp\ttn\tfn\tacc\tppv\tnpv\ttpr\ttnr";

    pub fn tsv_fields(&self) -> String {
        let mut s = format!("{}\t{}\t{}\t{}", self.tp, self.fp, self.tn, self.fn_);
        for r in [self.acc, self.ppv, self.npv, self.tpr, self.tnr] {
            let _ = write!(s, "\t{}", fmt_pct(r));
        }
        s
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ACC {} PPV {} NPV {} TPR {} TNR {} (tp {} fp {} tn {} fn {})",
            fmt_pct(self.acc),
            fmt_pct(self.ppv),
            fmt_pct(self.npv),
            fmt_pct(self.tpr),
            fmt_pct(self.tnr),
            self.tp,
            self.fp,
            self.tn,
            self.fn_
        )
    }
}

/// The best score and the smallest percentage achieving it.
pub fn best_percentage(scores: &[(f64, Ratio<u64>)]) -> Option<(f64, Ratio<u64>)> {
    let best = scores.iter().map(|(_, a)| *a).max()?;
    scores
        .iter()
        .filter(|(_, a)| *a == best)
        .map(|(p, _)| *p)
        .min_by(|a, b| a.total_cmp(b))
        .map(|p| (p, best))
}

/// `5`, `12.5`.
pub fn fmt_percentage(p: f64) -> String {
    format!("{p}")
}
