//! End-to-end experiments: profile, select, instrument, train, detect and
//! score, across versions and training percentages.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_rational::Ratio;
use rayon::prelude::*;
use serde::Deserialize;

use super::exec::{CommandExecutor, Execution, Executor, InterpExecutor, RecordingExecutor, ReplayExecutor};
use super::*;
use crate::c_frontend::{parse_c, FrontendError, SourceUnit};
use crate::instrument::{assign_slots, instrument_frequency, instrument_ranges, report_selection, InstrumentError, SlotTable};
use crate::joinpoints::{enumerate_joinpoints, unresolved, SelectionReport};
use crate::normalize::normalize;
use crate::rtformat::{CountDump, DumpError, RangeDump};
use crate::strategies::{
    compute_fanin, select, FaninReport, FrequencyReport, MonitorSet, Strategy, StrategyError, Thresholds,
};

#[derive(Debug, thiserror::Error)]
pub enum CampaignError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Parse(#[from] FrontendError),
    #[error(transparent)]
    Exec(#[from] exec::ExecError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Instrument(#[from] InstrumentError),
    #[error("{label}: bad dump: {source}")]
    Dump {
        label: String,
        #[source]
        source: DumpError,
    },
    #[error("training run {test} of the original program exited with {exit_code} without writing ranges")]
    Training { test: String, exit_code: i32 },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CampaignError + '_ {
    move |source| CampaignError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ExecutorConfig {
    Interpreter {
        #[serde(default)]
        max_steps: Option<u64>,
    },
    Command {
        build: String,
        #[serde(default = "default_run")]
        run: String,
        #[serde(default)]
        timeout_ms: Option<u64>,
    },
    /// Prerecorded runs, see [`ReplayExecutor`].
    Replay { dir: PathBuf },
}

fn default_run() -> String {
    "{bin} {args}".into()
}

impl Default for ExecutorConfig {
    fn default() -> Self {
        ExecutorConfig::Interpreter { max_steps: None }
    }
}

fn default_strategy() -> String {
    Strategy::Ascv3S.name().into()
}
fn default_freq() -> f64 {
    crate::strategies::DEFAULT_FREQ_THRESHOLD
}
fn default_fanin() -> u32 {
    crate::strategies::DEFAULT_FANIN_THRESHOLD
}
fn default_percentages() -> Vec<f64> {
    DEFAULT_PERCENTAGES.to_vec()
}
fn default_output() -> PathBuf {
    PathBuf::from("rangeweaver-out")
}

/// Campaign description, read from TOML. Relative paths resolve against the
/// config file's directory.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    #[serde(default)]
    pub name: Option<String>,
    /// The reference program.
    pub original: PathBuf,
    /// One faulty version per file.
    pub versions: Vec<PathBuf>,
    /// Argument vectors, one per test.
    #[serde(default)]
    pub tests: Vec<Vec<String>>,
    /// One test per line, arguments separated by whitespace; `#` comments.
    #[serde(default)]
    pub tests_file: Option<PathBuf>,
    #[serde(default = "default_strategy")]
    pub strategy: String,
    #[serde(default = "default_freq")]
    pub freq_threshold: f64,
    #[serde(default = "default_fanin")]
    pub fanin_threshold: u32,
    #[serde(default = "default_percentages")]
    pub percentages: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub executor: ExecutorConfig,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Worker threads; all cores when absent.
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl CampaignConfig {
    pub fn from_toml(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, CampaignError> {
        let mut cfg: CampaignConfig = toml::from_str(text).map_err(|e| CampaignError::Config(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CampaignError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, base)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn strategy(&self) -> Result<Strategy, CampaignError> {
        self.strategy
            .parse()
            .map_err(|e: crate::strategies::UnknownStrategy| CampaignError::Config(e.to_string()))
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            freq_pct: self.freq_threshold,
            fanin: self.fanin_threshold,
        }
    }

    fn validate(&self) -> Result<(), CampaignError> {
        let bad = |m: String| Err(CampaignError::Config(m));
        self.strategy()?;
        if !(self.freq_threshold.is_finite() && (0.0..=100.0).contains(&self.freq_threshold)) {
            return bad(format!("freq_threshold {} is outside [0, 100]", self.freq_threshold));
        }
        if self.percentages.is_empty() {
            return bad("percentages is empty".into());
        }
        if let Some(p) = self.percentages.iter().find(|p| !(**p > 0.0 && **p <= 100.0)) {
            return bad(format!("training percentage {p} is outside (0, 100]"));
        }
        if self.versions.is_empty() {
            return bad("no versions".into());
        }
        if self.tests.is_empty() && self.tests_file.is_none() {
            return bad("no tests: set `tests` or `tests_file`".into());
        }
        Ok(())
    }

    /// Inline tests followed by those of `tests_file`.
    pub fn load_tests(&self) -> Result<Vec<Vec<String>>, CampaignError> {
        let mut tests = self.tests.clone();
        if let Some(f) = &self.tests_file {
            let path = self.resolve(f);
            let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
            for line in text.lines() {
                let line = line.split('#').next().unwrap_or("").trim();
                if !line.is_empty() {
                    tests.push(line.split_whitespace().map(String::from).collect());
                }
            }
        }
        if tests.is_empty() {
            return Err(CampaignError::Config("no tests".into()));
        }
        Ok(tests)
    }

    pub fn version_names(&self) -> Result<Vec<String>, CampaignError> {
        let names: Vec<String> = self
            .versions
            .iter()
            .map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default())
            .collect();
        let distinct: BTreeSet<&String> = names.iter().collect();
        if distinct.len() != names.len() {
            return Err(CampaignError::Config("version file names must be distinct".into()));
        }
        Ok(names)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PercentageResult {
    pub percentage: f64,
    pub merged: MergedRange,
    pub predicted: FaultMatrix,
    pub accuracy: Ratio<u64>,
    pub per_version: Vec<Ratio<u64>>,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub name: String,
    pub strategy: Strategy,
    pub seed: u64,
    pub test_names: Vec<String>,
    pub version_names: Vec<String>,
    pub monitor_set: MonitorSet,
    pub slots: SlotTable,
    /// Original first, then each version.
    pub selection: Vec<(String, SelectionReport)>,
    pub frequency: Option<FrequencyReport>,
    pub fanin: Option<FaninReport>,
    pub training: Vec<RunRanges>,
    /// `observed[v][t]`; `None` when the run wrote no dump.
    pub observed: Vec<Vec<Option<RunRanges>>>,
    pub oracle: FaultMatrix,
    pub results: Vec<PercentageResult>,
    pub warnings: Vec<String>,
}

fn read_unit(path: &Path) -> Result<SourceUnit, CampaignError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    Ok(parse_c(&text, &path.to_string_lossy())?)
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match jobs {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}

/// Runs `program` on every test in parallel, keeping test order.
fn run_all<E: Executor>(
    exec: &E,
    program: &E::Program,
    tests: &[Vec<String>],
) -> Result<Vec<Execution>, exec::ExecError> {
    tests.par_iter().map(|args| exec.run(program, args)).collect()
}

pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignResult, CampaignError> {
    run_campaign_recorded(cfg, None)
}

/// Runs the campaign with its configured executor, optionally storing every
/// run under `record` for later replay.
pub fn run_campaign_recorded(cfg: &CampaignConfig, record: Option<&Path>) -> Result<CampaignResult, CampaignError> {
    match &cfg.executor {
        ExecutorConfig::Interpreter { max_steps } => {
            let mut ex = InterpExecutor::default();
            if let Some(m) = max_steps {
                ex.max_steps = *m;
            }
            dispatch(cfg, ex, record)
        }
        ExecutorConfig::Command {
            build,
            run,
            timeout_ms,
        } => {
            let work = cfg.resolve(&cfg.output_dir).join("build");
            let mut ex = CommandExecutor::new(build.clone(), run.clone(), work);
            if let Some(t) = timeout_ms {
                ex.timeout = std::time::Duration::from_millis(*t);
            }
            dispatch(cfg, ex, record)
        }
        ExecutorConfig::Replay { dir } => dispatch(cfg, ReplayExecutor::open(cfg.resolve(dir))?, record),
    }
}

fn dispatch<E: Executor>(cfg: &CampaignConfig, ex: E, record: Option<&Path>) -> Result<CampaignResult, CampaignError> {
    match record {
        Some(dir) => {
            let rec = RecordingExecutor::new(ex, dir, &cfg.load_tests()?)?;
            run_campaign_with(cfg, &rec)
        }
        None => run_campaign_with(cfg, &ex),
    }
}

pub fn run_campaign_with<E: Executor>(cfg: &CampaignConfig, exec: &E) -> Result<CampaignResult, CampaignError> {
    with_pool(cfg.jobs, || campaign(cfg, exec))
}

/// Name of test `i` (0-based) out of `n`: `t1`.., zero-padded to a common width.
pub fn test_name(i: usize, n: usize) -> String {
    let w = n.to_string().len();
    format!("t{:0w$}", i + 1)
}

fn test_names(n: usize) -> Vec<String> {
    (0..n).map(|i| test_name(i, n)).collect()
}

fn campaign<E: Executor>(cfg: &CampaignConfig, exec: &E) -> Result<CampaignResult, CampaignError> {
    let strategy = cfg.strategy()?;
    let tests = cfg.load_tests()?;
    let test_names = test_names(tests.len());
    let version_names = cfg.version_names()?;
    let mut warnings = Vec::new();

    let original = read_unit(&cfg.resolve(&cfg.original))?;
    let versions = cfg
        .versions
        .iter()
        .map(|p| read_unit(&cfg.resolve(p)))
        .collect::<Result<Vec<_>, _>>()?;

    let passes = strategy.passes();
    let normalized = |u: &SourceUnit, warnings: &mut Vec<String>| {
        let mut n = u.clone();
        for s in normalize(&mut n, &passes).skipped {
            warnings.push(format!("{}: {s}", u.path));
        }
        n
    };
    let norm_orig = normalized(&original, &mut warnings);
    let norm_versions: Vec<SourceUnit> = versions.iter().map(|v| normalized(v, &mut warnings)).collect();
    let jps = enumerate_joinpoints(&norm_orig);
    warnings.extend(unresolved(&jps));

    let fanin = strategy.needs_fanin().then(|| compute_fanin(&norm_orig));
    let frequency = if strategy.needs_frequency() {
        let mut profiled = norm_orig.clone();
        let table = instrument_frequency(&mut profiled, &jps);
        let program = exec.prepare("profile", &[profiled])?;
        let mut report = FrequencyReport::from_counts(table.iter().map(|(_, k)| (k.clone(), 0)).collect());
        for (t, e) in run_all(exec, &program, &tests)?.into_iter().enumerate() {
            let Some(text) = e.count_dump else {
                warnings.push(format!("profiling run {} wrote no counts", test_names[t]));
                continue;
            };
            let dump = CountDump::parse(&text).map_err(|source| CampaignError::Dump {
                label: format!("profile {}", test_names[t]),
                source,
            })?;
            report.accumulate(&table.frequency_report(&dump)?);
        }
        Some(report)
    } else {
        None
    };

    let ms = select(strategy, &jps, cfg.thresholds(), frequency.as_ref(), fanin.as_ref())?;
    warnings.extend(ms.warnings.iter().cloned());
    let slots = assign_slots(&ms);

    let mut selection = vec![("original".to_string(), report_selection(&ms, &jps))];
    let mut instr_orig = norm_orig.clone();
    instrument_ranges(&mut instr_orig, &ms, &slots)?;
    let mut instr_versions = Vec::new();
    for (name, v) in version_names.iter().zip(&norm_versions) {
        selection.push((name.clone(), report_selection(&ms, &enumerate_joinpoints(v))));
        let mut iv = v.clone();
        instrument_ranges(&mut iv, &ms, &slots)?;
        instr_versions.push(iv);
    }

    // Oracle outputs come from the unmodified sources.
    let plain_orig = exec.prepare("original", std::slice::from_ref(&original))?;
    let reference: Vec<Option<RunOutput>> = run_all(exec, &plain_orig, &tests)?
        .into_iter()
        .map(|e| Some(e.output))
        .collect();
    let mut version_outputs = Vec::new();
    for (name, v) in version_names.iter().zip(&versions) {
        let p = exec.prepare(name, std::slice::from_ref(v))?;
        version_outputs.push(run_all(exec, &p, &tests)?.into_iter().map(|e| Some(e.output)).collect());
    }
    let oracle = build_oracle_matrix(&reference, &version_outputs, &test_names, &version_names)?;

    let parse_ranges = |label: String, dump: Option<String>| -> Result<Option<RunRanges>, CampaignError> {
        dump.map(|text| {
            RangeDump::parse(&text)
                .map(|d| RunRanges::from_dump(label.clone(), d))
                .map_err(|source| CampaignError::Dump { label, source })
        })
        .transpose()
    };

    let p = exec.prepare("original-instrumented", &[instr_orig])?;
    let mut training = Vec::new();
    for (t, e) in run_all(exec, &p, &tests)?.into_iter().enumerate() {
        let code = e.output.exit_code;
        match parse_ranges(test_names[t].clone(), e.range_dump)? {
            Some(r) => training.push(r),
            None => {
                return Err(CampaignError::Training {
                    test: test_names[t].clone(),
                    exit_code: code,
                })
            }
        }
    }
    let mut observed = Vec::new();
    for (name, iv) in version_names.iter().zip(instr_versions) {
        let p = exec.prepare(&format!("{name}-instrumented"), &[iv])?;
        let mut col = Vec::new();
        for (t, e) in run_all(exec, &p, &tests)?.into_iter().enumerate() {
            col.push(parse_ranges(format!("{name}/{}", test_names[t]), e.range_dump)?);
        }
        observed.push(col);
    }

    let order = sample_order(training.len(), cfg.seed);
    let mut results = Vec::new();
    for &pct in &cfg.percentages {
        let k = sample_size(pct, training.len());
        let merged = merge_selected(&training, &order[..k], pct, cfg.seed)?;
        let mut predicted = FaultMatrix::new(tests.len(), versions.len());
        for (v, col) in observed.iter().enumerate() {
            for (t, obs) in col.iter().enumerate() {
                // No dump means nothing was observed to violate.
                let pass = match obs {
                    Some(o) => predict_cell(&merged, o)?,
                    None => true,
                };
                predicted.set(t, v, pass);
            }
        }
        let per_version = (0..versions.len())
            .map(|v| matrix_accuracy(&predicted.column(v), &oracle.column(v)))
            .collect::<Result<Vec<_>, _>>()?;
        results.push(PercentageResult {
            percentage: pct,
            accuracy: matrix_accuracy(&predicted, &oracle)?,
            metrics: compute_metrics(&predicted, &oracle)?,
            merged,
            predicted,
            per_version,
        });
    }

    Ok(CampaignResult {
        name: cfg.name.clone().unwrap_or_else(|| "campaign".into()),
        strategy,
        seed: cfg.seed,
        test_names,
        version_names,
        monitor_set: ms,
        slots,
        selection,
        frequency,
        fanin,
        training,
        observed,
        oracle,
        results,
        warnings,
    })
}

impl CampaignResult {
    pub fn accuracy_tsv(&self) -> String {
        let mut s = String::from("percentage");
        for v in &self.version_names {
            let _ = write!(s, "\t{v}");
        }
        s.push_str("\toverall\n");
        for r in &self.results {
            s.push_str(&fmt_percentage(r.percentage));
            for a in &r.per_version {
                let _ = write!(s, "\t{}", fmt_pct(Some(*a)));
            }
            let _ = writeln!(s, "\t{}", fmt_pct(Some(r.accuracy)));
        }
        s
    }

    pub fn metrics_tsv(&self) -> String {
        let mut s = format!("percentage\t{}\n", MetricsReport::TSV_HEADER);
        for r in &self.results {
            let _ = writeln!(s, "{}\t{}", fmt_percentage(r.percentage), r.metrics.tsv_fields());
        }
        s
    }

    pub fn selection_tsv(&self) -> String {
        let mut s = String::from("program\tstrategy\tselected\tadvised\n");
        for (name, r) in &self.selection {
            let _ = writeln!(s, "{name}\t{}\t{}\t{}", self.strategy, r.selected, r.advised);
        }
        s
    }

    /// Best overall accuracy and, per version, the best accuracy with the
    /// smallest percentage reaching it.
    pub fn best(&self) -> (Option<(f64, Ratio<u64>)>, Vec<Option<(f64, Ratio<u64>)>>) {
        let overall: Vec<(f64, Ratio<u64>)> = self.results.iter().map(|r| (r.percentage, r.accuracy)).collect();
        let per = (0..self.version_names.len())
            .map(|v| {
                let scores: Vec<_> = self.results.iter().map(|r| (r.percentage, r.per_version[v])).collect();
                best_percentage(&scores)
            })
            .collect();
        (best_percentage(&overall), per)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "campaign\t{}", self.name);
        let _ = writeln!(s, "strategy\t{}", self.strategy);
        let _ = writeln!(s, "seed\t{}", self.seed);
        let _ = writeln!(s, "tests\t{}", self.test_names.len());
        let _ = writeln!(s, "versions\t{}", self.version_names.len());
        let _ = writeln!(s, "monitored variables\t{}", self.monitor_set.len());
        let sel = self.selection[0].1;
        let _ = writeln!(s, "join points selected\t{}", sel.selected);
        let _ = writeln!(s, "join points advised\t{}", sel.advised);
        let _ = writeln!(s, "oracle passing cells\t{}", fmt_pct(self.oracle.ones_percentage()));
        let (overall, per) = self.best();
        if let Some((p, a)) = overall {
            let _ = writeln!(s, "best accuracy\t{}\tat\t{}%", fmt_pct(Some(a)), fmt_percentage(p));
        }
        for (name, b) in self.version_names.iter().zip(per) {
            if let Some((p, a)) = b {
                let _ = writeln!(s, "best {name}\t{}\tat\t{}%", fmt_pct(Some(a)), fmt_percentage(p));
            }
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning\t{w}");
        }
        s
    }

    /// Writes every artifact under `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, CampaignError> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let mut files: Vec<(String, String)> = vec![
            ("oracle.csv".into(), self.oracle.to_csv(&self.test_names, &self.version_names)),
            ("accuracy.tsv".into(), self.accuracy_tsv()),
            ("metrics.tsv".into(), self.metrics_tsv()),
            ("selection.tsv".into(), self.selection_tsv()),
            ("slots.tsv".into(), self.slots.to_tsv()),
            ("summary.txt".into(), self.summary()),
        ];
        for r in &self.results {
            let p = fmt_percentage(r.percentage);
            files.push((
                format!("predicted_p{p}.csv"),
                r.predicted.to_csv(&self.test_names, &self.version_names),
            ));
            files.push((format!("learned_p{p}.out"), r.merged.to_dump().to_text()));
        }
        if let Some(f) = &self.frequency {
            files.push(("frequency.tsv".into(), f.to_tsv()));
        }
        if let Some(f) = &self.fanin {
            files.push(("fanin.tsv".into(), f.to_tsv()));
        }
        let mut written = Vec::new();
        for (name, text) in files {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(io_err(&path))?;
            written.push(path);
        }
        Ok(written)
    }
}
