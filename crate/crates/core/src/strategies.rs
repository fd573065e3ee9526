//! The six monitoring strategies and the reports that drive FREQ and FANIN.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::c_frontend::SourceUnit;
use crate::joinpoints::{is_monitorable, visit_sites, JoinPoint, JoinPointKind};
use crate::normalize::Pass;

/// `(function, variable)`.
pub type VarKey = (String, String);

pub const DEFAULT_FREQ_THRESHOLD: f64 = 1.0;
pub const DEFAULT_FANIN_THRESHOLD: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Ascv3,
    Ascv3S,
    Freq,
    Fanin,
    CombAnd,
    CombOr,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Ascv3,
        Strategy::Ascv3S,
        Strategy::Freq,
        Strategy::Fanin,
        Strategy::CombAnd,
        Strategy::CombOr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Ascv3 => "ASCV3",
            Strategy::Ascv3S => "ASCV3_s",
            Strategy::Freq => "FREQ",
            Strategy::Fanin => "FANIN",
            Strategy::CombAnd => "COMBAND",
            Strategy::CombOr => "COMBOR",
        }
    }

    /// Normalization passes the strategy's code must go through.
    pub fn passes(self) -> Vec<Pass> {
        match self {
            Strategy::Ascv3 => Pass::without_structs(),
            _ => Pass::ALL.to_vec(),
        }
    }

    pub fn needs_frequency(self) -> bool {
        matches!(self, Strategy::Freq | Strategy::CombAnd | Strategy::CombOr)
    }

    pub fn needs_fanin(self) -> bool {
        matches!(self, Strategy::Fanin | Strategy::CombAnd | Strategy::CombOr)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown strategy `{0}` (expected ASCV3, ASCV3_s, FREQ, FANIN, COMBAND or COMBOR)")]
pub struct UnknownStrategy(pub String);

impl FromStr for Strategy {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        Strategy::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(t))
            .ok_or_else(|| UnknownStrategy(s.to_string()))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MonitorSet {
    pub entries: BTreeSet<VarKey>,
    pub strategy: String,
    pub thresholds: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

impl MonitorSet {
    pub fn new(strategy: impl Into<String>, entries: BTreeSet<VarKey>) -> Self {
        Self {
            entries,
            strategy: strategy.into(),
            ..Self::default()
        }
    }

    pub fn contains(&self, function: &str, variable: &str) -> bool {
        self.entries
            .contains(&(function.to_string(), variable.to_string()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReportError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("missing `#total` header")]
    MissingTotal,
    #[error("counts sum to {sum} but the header says {total}")]
    TotalMismatch { sum: u64, total: u64 },
}

fn malformed(line: usize, message: impl Into<String>) -> ReportError {
    ReportError::Malformed {
        line,
        message: message.into(),
    }
}

fn split3(line: &str, n: usize) -> Result<(&str, &str, &str), ReportError> {
    let mut it = line.split('\t');
    match (it.next(), it.next(), it.next(), it.next()) {
        (Some(a), Some(b), Some(c), None) => Ok((a, b, c)),
        _ => Err(malformed(n, "expected three tab-separated fields")),
    }
}

/// Executed-assignment counts gathered by a profiling run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyReport {
    pub total_assignments: u64,
    pub per_var: BTreeMap<VarKey, u64>,
}

impl FrequencyReport {
    pub fn from_counts(per_var: BTreeMap<VarKey, u64>) -> Self {
        Self {
            total_assignments: per_var.values().sum(),
            per_var,
        }
    }

    /// Adds the counts of another run.
    pub fn accumulate(&mut self, other: &FrequencyReport) {
        for (k, c) in &other.per_var {
            *self.per_var.entry(k.clone()).or_default() += c;
        }
        self.total_assignments += other.total_assignments;
    }

    pub fn to_tsv(&self) -> String {
        let mut s = format!("#total\t{}\n", self.total_assignments);
        for ((f, v), c) in &self.per_var {
            let _ = writeln!(s, "{f}\t{v}\t{c}");
        }
        s
    }

    pub fn parse_tsv(text: &str) -> Result<Self, ReportError> {
        let mut total = None;
        let mut per_var = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("#total\t") {
                total = Some(rest.trim().parse().map_err(|_| malformed(n, "bad total"))?);
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let (f, v, c) = split3(line, n)?;
            let c: u64 = c.trim().parse().map_err(|_| malformed(n, "bad count"))?;
            per_var.insert((f.to_string(), v.to_string()), c);
        }
        let total = total.ok_or(ReportError::MissingTotal)?;
        let sum: u64 = per_var.values().sum();
        if sum != total {
            return Err(ReportError::TotalMismatch { sum, total });
        }
        Ok(Self {
            total_assignments: total,
            per_var,
        })
    }
}

/// Per variable, the largest number of distinct variables read by one of
/// its assignments.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FaninReport {
    pub per_var: BTreeMap<VarKey, u32>,
}

impl FaninReport {
    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        for ((f, v), n) in &self.per_var {
            let _ = writeln!(s, "{f}\t{v}\t{n}");
        }
        s
    }

    pub fn parse_tsv(text: &str) -> Result<Self, ReportError> {
        let mut per_var = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (f, v, c) = split3(line, n)?;
            let c: u32 = c.trim().parse().map_err(|_| malformed(n, "bad fanin"))?;
            per_var.insert((f.to_string(), v.to_string()), c);
        }
        Ok(Self { per_var })
    }

    pub fn merge(&mut self, other: &FaninReport) {
        for (k, n) in &other.per_var {
            let e = self.per_var.entry(k.clone()).or_default();
            *e = (*e).max(*n);
        }
    }
}

/// Fanin over the monitorable statement-level assignments of `unit`.
/// Variables passed to calls and the callees themselves are not counted.
pub fn compute_fanin(unit: &SourceUnit) -> FaninReport {
    let mut report = FaninReport::default();
    visit_sites(unit, &mut |site| {
        if site.jp.kind != JoinPointKind::Assignment || !is_monitorable(&site.jp) {
            return;
        }
        let n = site.fanin.unwrap_or(0) as u32;
        let e = report.per_var.entry(site.jp.key()).or_default();
        *e = (*e).max(n);
    });
    report
}

fn monitorable_keys(jps: &[JoinPoint]) -> BTreeSet<VarKey> {
    jps.iter().filter(|j| is_monitorable(j)).map(JoinPoint::key).collect()
}

/// Every monitorable join-point variable. `with_structs` only records which
/// normalization produced `jps`.
pub fn select_ascv3(jps: &[JoinPoint], with_structs: bool) -> MonitorSet {
    let name = if with_structs {
        Strategy::Ascv3S
    } else {
        Strategy::Ascv3
    };
    MonitorSet::new(name.name(), monitorable_keys(jps))
}

/// Variables whose share of all executed assignments is strictly above
/// `threshold_pct` percent.
pub fn select_freq(report: &FrequencyReport, threshold_pct: f64) -> MonitorSet {
    let mut ms = MonitorSet::new(Strategy::Freq.name(), BTreeSet::new());
    ms.thresholds.insert("freq_threshold".into(), threshold_pct);
    if report.total_assignments == 0 {
        ms.warnings
            .push("frequency report records no executed assignments; nothing selected".into());
        return ms;
    }
    let total = report.total_assignments as f64;
    ms.entries = report
        .per_var
        .iter()
        .filter(|(_, c)| **c as f64 * 100.0 > threshold_pct * total)
        .map(|(k, _)| k.clone())
        .collect();
    ms
}

/// Variables whose fanin is strictly above `threshold`.
pub fn select_fanin(report: &FaninReport, threshold: u32) -> MonitorSet {
    let mut ms = MonitorSet::new(Strategy::Fanin.name(), BTreeSet::new());
    ms.thresholds.insert("fanin_threshold".into(), threshold as f64);
    ms.entries = report
        .per_var
        .iter()
        .filter(|(_, n)| **n > threshold)
        .map(|(k, _)| k.clone())
        .collect();
    ms
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineMode {
    And,
    Or,
}

pub fn combine(a: &MonitorSet, b: &MonitorSet, mode: CombineMode) -> MonitorSet {
    let (name, entries) = match mode {
        CombineMode::And => (Strategy::CombAnd, a.entries.intersection(&b.entries).cloned().collect()),
        CombineMode::Or => (Strategy::CombOr, a.entries.union(&b.entries).cloned().collect()),
    };
    let mut ms = MonitorSet::new(name.name(), entries);
    ms.thresholds = a.thresholds.clone();
    ms.thresholds.extend(b.thresholds.clone());
    ms.warnings = a.warnings.iter().chain(&b.warnings).cloned().collect();
    ms
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub freq_pct: f64,
    pub fanin: u32,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            freq_pct: DEFAULT_FREQ_THRESHOLD,
            fanin: DEFAULT_FANIN_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StrategyError {
    #[error("{0} needs a frequency report")]
    MissingFrequency(Strategy),
    #[error("{0} needs a fanin report")]
    MissingFanin(Strategy),
}

/// Builds the monitor set of `strategy` over `jps`. Report-driven selections
/// are restricted to variables that have a monitorable join point.
pub fn select(
    strategy: Strategy,
    jps: &[JoinPoint],
    thresholds: Thresholds,
    freq: Option<&FrequencyReport>,
    fanin: Option<&FaninReport>,
) -> Result<MonitorSet, StrategyError> {
    let restrict = |mut ms: MonitorSet| {
        let keys = monitorable_keys(jps);
        ms.entries.retain(|k| keys.contains(k));
        ms
    };
    let freq_set = || {
        freq.map(|r| restrict(select_freq(r, thresholds.freq_pct)))
            .ok_or(StrategyError::MissingFrequency(strategy))
    };
    let fanin_set = || {
        fanin
            .map(|r| restrict(select_fanin(r, thresholds.fanin)))
            .ok_or(StrategyError::MissingFanin(strategy))
    };
    Ok(match strategy {
        Strategy::Ascv3 => select_ascv3(jps, false),
        Strategy::Ascv3S => select_ascv3(jps, true),
        Strategy::Freq => freq_set()?,
        Strategy::Fanin => fanin_set()?,
        Strategy::CombAnd => combine(&freq_set()?, &fanin_set()?, CombineMode::And),
        Strategy::CombOr => combine(&freq_set()?, &fanin_set()?, CombineMode::Or),
    })
}
