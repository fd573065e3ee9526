use std::collections::BTreeSet;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use rangeweaver::c_frontend::{parse_c, print_c, SourceUnit};
use rangeweaver::harness::campaign::{run_campaign_recorded, CampaignConfig};
use rangeweaver::harness::{
    compute_metrics, contains, fmt_pct, matrix_accuracy, merge_ranges, FaultMatrix, MergedRange, MetricsReport,
    RunRanges,
};
use rangeweaver::instrument::{assign_slots, instrument_frequency, instrument_ranges, report_selection, SlotTable};
use rangeweaver::interp::{self, RunConfig};
use rangeweaver::joinpoints::{enumerate_joinpoints, joinpoints_tsv, unresolved};
use rangeweaver::normalize::{normalize, Pass};
use rangeweaver::rtformat::{runtime_header, CountDump, RangeDump, DEFAULT_OUT, HEADER_FILE, OUT_ENV};
use rangeweaver::strategies::{
    compute_fanin, select, FaninReport, FrequencyReport, MonitorSet, Strategy, Thresholds, DEFAULT_FANIN_THRESHOLD,
    DEFAULT_FREQ_THRESHOLD,
};

#[derive(Parser)]
#[command(name = "rangeweaver", version, about = "Range instrumentation and range-based fault screening for C")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply normalization passes and print the result.
    Normalize {
        file: PathBuf,
        /// Comma-separated pass names, or `all`.
        #[arg(long, default_value = "all")]
        passes: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// List the join points of a program as TSV.
    Joinpoints {
        file: PathBuf,
        /// Normalize with this strategy's passes first.
        #[arg(long, default_value = "ASCV3_s")]
        strategy: Strategy,
        /// Enumerate on the file as written.
        #[arg(long)]
        raw: bool,
    },
    /// Write a range-instrumented program, its slot map and selection report.
    Instrument {
        file: PathBuf,
        #[arg(long, default_value = "ASCV3_s")]
        strategy: Strategy,
        #[arg(long)]
        freq_report: Option<PathBuf>,
        /// Defaults to the statically computed fanin of `file`.
        #[arg(long)]
        fanin_report: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_FREQ_THRESHOLD)]
        freq_threshold: f64,
        #[arg(long, default_value_t = DEFAULT_FANIN_THRESHOLD)]
        fanin_threshold: u32,
        /// Reuse an existing slot map (e.g. the original's, for a version).
        #[arg(long)]
        slots: Option<PathBuf>,
        #[arg(short, long, default_value = "instrumented")]
        out_dir: PathBuf,
    },
    /// Write a frequency-profiling build; with --tests, also run it and
    /// write frequency.tsv.
    Profile {
        file: PathBuf,
        /// Whitespace-separated argument vectors, one run per line.
        #[arg(long)]
        tests: Option<PathBuf>,
        #[arg(short, long, default_value = "profile")]
        out_dir: PathBuf,
    },
    /// Aggregate count dumps into a frequency report.
    FreqReport {
        #[arg(long)]
        slots: PathBuf,
        #[arg(required = true)]
        dumps: Vec<PathBuf>,
    },
    /// Run a program in the built-in interpreter, emulating the runtime.
    Run {
        file: PathBuf,
        args: Vec<String>,
        /// Where the dump goes; defaults to $RANGEWEAVER_OUT or ranges.out.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Merge training dumps into a learned range dump.
    Merge {
        #[arg(short, long, default_value_t = 100.0)]
        percentage: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(required = true)]
        dumps: Vec<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check observed dumps against a learned dump.
    Detect {
        #[arg(long)]
        learned: PathBuf,
        #[arg(required = true)]
        observed: Vec<PathBuf>,
        /// Slot map used to name escaping slots.
        #[arg(long)]
        slots: Option<PathBuf>,
    },
    /// Run a campaign described by a TOML file.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output_dir.
        #[arg(short, long)]
        out_dir: Option<PathBuf>,
        /// Store every run for later replay.
        #[arg(long)]
        record: Option<PathBuf>,
        #[arg(long)]
        strategy: Option<Strategy>,
    },
    /// Score a predicted fault matrix against an oracle matrix.
    Report {
        #[arg(long)]
        oracle: PathBuf,
        #[arg(required = true)]
        predicted: Vec<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn parse_file(path: &Path) -> Result<SourceUnit> {
    let text = read(path)?;
    Ok(parse_c(&text, &path.to_string_lossy())?)
}

fn parse_passes(s: &str) -> Result<Vec<Pass>> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(Pass::ALL.to_vec());
    }
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<Pass>().map_err(Into::into))
        .collect()
}

fn normalized(path: &Path, passes: &[Pass]) -> Result<SourceUnit> {
    let mut unit = parse_file(path)?;
    for s in normalize(&mut unit, passes).skipped {
        eprintln!("warning: {s}");
    }
    Ok(unit)
}

fn file_name(path: &Path) -> Result<String> {
    Ok(path
        .file_name()
        .with_context(|| format!("{} has no file name", path.display()))?
        .to_string_lossy()
        .into_owned())
}

fn load_tests(path: &Path) -> Result<Vec<Vec<String>>> {
    Ok(read(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split_whitespace().map(str::to_string).collect())
        .collect())
}

fn load_run(path: &Path) -> Result<RunRanges> {
    let dump = RangeDump::parse(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    Ok(RunRanges::from_dump(path.to_string_lossy(), dump))
}

fn cmd_instrument(
    file: &Path,
    strategy: Strategy,
    thresholds: Thresholds,
    freq: Option<&Path>,
    fanin: Option<&Path>,
    slots: Option<&Path>,
    out_dir: &Path,
) -> Result<()> {
    let mut unit = normalized(file, &strategy.passes())?;
    let jps = enumerate_joinpoints(&unit);
    for w in unresolved(&jps) {
        eprintln!("warning: {w}");
    }
    let (ms, table) = match slots {
        Some(p) => {
            let table = SlotTable::parse_tsv(&read(p)?)?;
            let ms = MonitorSet::new(strategy.name(), table.iter().map(|(_, k)| k.clone()).collect());
            (ms, table)
        }
        None => {
            let freq = freq
                .map(|p| FrequencyReport::parse_tsv(&read(p)?).with_context(|| format!("parsing {}", p.display())))
                .transpose()?;
            let fanin = match fanin {
                Some(p) => FaninReport::parse_tsv(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
                None => compute_fanin(&unit),
            };
            let ms = select(strategy, &jps, thresholds, freq.as_ref(), Some(&fanin))?;
            let table = assign_slots(&ms);
            (ms, table)
        }
    };
    for w in &ms.warnings {
        eprintln!("warning: {w}");
    }
    let selection = report_selection(&ms, &jps);
    instrument_ranges(&mut unit, &ms, &table)?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    write(&out_dir.join(file_name(file)?), &print_c(&unit))?;
    write(&out_dir.join(HEADER_FILE), &runtime_header())?;
    write(&out_dir.join("slots.tsv"), &table.to_tsv())?;
    write(&out_dir.join("selection.tsv"), &selection.to_string())?;
    print!("{selection}");
    Ok(())
}

fn cmd_profile(file: &Path, tests: Option<&Path>, out_dir: &Path) -> Result<()> {
    let mut unit = normalized(file, &Strategy::Freq.passes())?;
    let jps = enumerate_joinpoints(&unit);
    let table = instrument_frequency(&mut unit, &jps);
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    write(&out_dir.join(file_name(file)?), &print_c(&unit))?;
    write(&out_dir.join(HEADER_FILE), &runtime_header())?;
    write(&out_dir.join("slots.tsv"), &table.to_tsv())?;
    let Some(tests) = tests else {
        return Ok(());
    };
    let mut report = FrequencyReport::from_counts(table.iter().map(|(_, k)| (k.clone(), 0)).collect());
    for (i, args) in load_tests(tests)?.into_iter().enumerate() {
        let out = interp::run(std::slice::from_ref(&unit), &RunConfig::with_args(args))?;
        let Some(text) = out.count_dump else {
            eprintln!("warning: run {} wrote no counts (exit {})", i + 1, out.exit_code);
            continue;
        };
        report.accumulate(&table.frequency_report(&CountDump::parse(&text)?)?);
    }
    write(&out_dir.join("frequency.tsv"), &report.to_tsv())?;
    print!("{}", report.to_tsv());
    Ok(())
}

fn cmd_run(file: &Path, args: Vec<String>, dump: Option<PathBuf>) -> Result<i32> {
    let unit = parse_file(file)?;
    let out = interp::run(&[unit], &RunConfig::with_args(args))?;
    std::io::stdout().write_all(&out.stdout)?;
    std::io::stderr().write_all(&out.stderr)?;
    if let Some(text) = out.range_dump.or(out.count_dump) {
        let path = dump
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        write(&path, &text)?;
    }
    Ok(out.exit_code)
}

fn cmd_detect(learned: &Path, observed: &[PathBuf], slots: Option<&Path>) -> Result<()> {
    let dump = RangeDump::parse(&read(learned)?).with_context(|| format!("parsing {}", learned.display()))?;
    let learned = MergedRange {
        per_slot: dump.slots,
        sampled_runs: Vec::new(),
        percentage: 100.0,
        seed: 0,
    };
    let table = slots.map(|p| read(p).map(|t| SlotTable::parse_tsv(&t))).transpose()?.transpose()?;
    println!("run\tverdict\tescaped");
    for path in observed {
        let run = load_run(path)?;
        let ok = contains(&learned, &run)?;
        let escaped: Vec<String> = ok
            .iter()
            .enumerate()
            .filter(|(_, c)| !**c)
            .map(|(k, _)| match table.as_ref().and_then(|t| t.key(k)) {
                Some((f, v)) => format!("{f}:{v}"),
                None => k.to_string(),
            })
            .collect();
        let verdict = if escaped.is_empty() { "pass" } else { "fail" };
        println!("{}\t{verdict}\t{}", path.display(), escaped.join(","));
    }
    Ok(())
}

fn cmd_report(oracle: &Path, predicted: &[PathBuf]) -> Result<()> {
    let oracle = FaultMatrix::parse_csv(&read(oracle)?)?;
    println!("matrix\taccuracy\t{}", MetricsReport::TSV_HEADER);
    for p in predicted {
        let pred = FaultMatrix::parse_csv(&read(p)?)?;
        let acc = matrix_accuracy(&pred, &oracle)?;
        let m = compute_metrics(&pred, &oracle)?;
        println!("{}\t{}\t{}", p.display(), fmt_pct(Some(acc)), m.tsv_fields());
    }
    Ok(())
}

fn cmd_evaluate(
    config: &Path,
    out_dir: Option<PathBuf>,
    record: Option<PathBuf>,
    strategy: Option<Strategy>,
) -> Result<()> {
    let mut cfg = CampaignConfig::load(config)?;
    if let Some(s) = strategy {
        cfg.strategy = s.name().to_string();
    }
    let out = match out_dir {
        Some(d) => d,
        None => cfg.resolve(&cfg.output_dir),
    };
    let result = run_campaign_recorded(&cfg, record.as_deref())?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    result.write(&out)?;
    print!("{}", result.summary());
    eprintln!("results written to {}", out.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Normalize { file, passes, output } => {
            let unit = normalized(&file, &parse_passes(&passes)?)?;
            match output {
                Some(p) => write(&p, &print_c(&unit))?,
                None => print!("{}", print_c(&unit)),
            }
        }
        Command::Joinpoints { file, strategy, raw } => {
            let unit = if raw {
                parse_file(&file)?
            } else {
                normalized(&file, &strategy.passes())?
            };
            print!("{}", joinpoints_tsv(&enumerate_joinpoints(&unit)));
        }
        Command::Instrument {
            file,
            strategy,
            freq_report,
            fanin_report,
            freq_threshold,
            fanin_threshold,
            slots,
            out_dir,
        } => {
            if !(0.0..=100.0).contains(&freq_threshold) {
                bail!("--freq-threshold must be a percentage in [0, 100]");
            }
            let thresholds = Thresholds {
                freq_pct: freq_threshold,
                fanin: fanin_threshold,
            };
            cmd_instrument(
                &file,
                strategy,
                thresholds,
                freq_report.as_deref(),
                fanin_report.as_deref(),
                slots.as_deref(),
                &out_dir,
            )?;
        }
        Command::Profile { file, tests, out_dir } => cmd_profile(&file, tests.as_deref(), &out_dir)?,
        Command::FreqReport { slots, dumps } => {
            let table = SlotTable::parse_tsv(&read(&slots)?)?;
            let mut report = FrequencyReport::from_counts(table.iter().map(|(_, k)| (k.clone(), 0)).collect());
            for d in &dumps {
                let dump = CountDump::parse(&read(d)?).with_context(|| format!("parsing {}", d.display()))?;
                report.accumulate(&table.frequency_report(&dump)?);
            }
            print!("{}", report.to_tsv());
        }
        Command::Run { file, args, dump } => return cmd_run(&file, args, dump),
        Command::Merge {
            percentage,
            seed,
            dumps,
            output,
        } => {
            let runs = dumps.iter().map(|d| load_run(d)).collect::<Result<Vec<_>>>()?;
            let merged = merge_ranges(&runs, percentage, seed)?;
            let used: BTreeSet<&str> = merged.sampled_runs.iter().map(String::as_str).collect();
            eprintln!("merged {} of {} runs", used.len(), runs.len());
            let text = merged.to_dump().to_text();
            match output {
                Some(p) => write(&p, &text)?,
                None => print!("{text}"),
            }
        }
        Command::Detect {
            learned,
            observed,
            slots,
        } => cmd_detect(&learned, &observed, slots.as_deref())?,
        Command::Evaluate {
            config,
            out_dir,
            record,
            strategy,
        } => cmd_evaluate(&config, out_dir, record, strategy)?,
        Command::Report { oracle, predicted } => cmd_report(&oracle, &predicted)?,
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code.clamp(0, 255) as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
