//! Ways of running a (possibly instrumented) program on one test input.

use std::io::Read as _;
use std::os::unix::process::CommandExt as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use super::RunOutput;
use crate::c_frontend::{print_c, SourceUnit};
use crate::interp::{self, InterpError, RunConfig, EXIT_TIMEOUT};
use crate::rtformat::{runtime_header, DEFAULT_OUT, HEADER_FILE, OUT_ENV};

#[derive(Debug, thiserror::Error)]
pub enum ExecError {
    #[error("{label}: {source}")]
    Interp {
        label: String,
        #[source]
        source: InterpError,
    },
    #[error("build of {label} failed ({status}): `{command}`\n{stderr}")]
    Build {
        label: String,
        command: String,
        status: String,
        stderr: String,
    },
    #[error("`{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("replay: {0}")]
    Replay(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Output of one execution plus whatever dump the runtime wrote.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Execution {
    pub output: RunOutput,
    pub range_dump: Option<String>,
    pub count_dump: Option<String>,
}

pub trait Executor: Sync {
    type Program: Sync;

    fn prepare(&self, label: &str, units: &[SourceUnit]) -> Result<Self::Program, ExecError>;

    fn run(&self, program: &Self::Program, args: &[String]) -> Result<Execution, ExecError>;
}

/// Runs programs in the built-in interpreter, which also emulates the
/// runtime library.
#[derive(Debug, Clone)]
pub struct InterpExecutor {
    pub max_steps: u64,
}

impl Default for InterpExecutor {
    fn default() -> Self {
        Self {
            max_steps: RunConfig::default().max_steps,
        }
    }
}

pub struct InterpProgram {
    label: String,
    units: Vec<SourceUnit>,
}

impl Executor for InterpExecutor {
    type Program = InterpProgram;

    fn prepare(&self, label: &str, units: &[SourceUnit]) -> Result<InterpProgram, ExecError> {
        Ok(InterpProgram {
            label: label.to_string(),
            units: units.to_vec(),
        })
    }

    fn run(&self, p: &InterpProgram, args: &[String]) -> Result<Execution, ExecError> {
        let cfg = RunConfig {
            max_steps: self.max_steps,
            ..RunConfig::with_args(args.to_vec())
        };
        let out = interp::run(&p.units, &cfg).map_err(|source| ExecError::Interp {
            label: p.label.clone(),
            source,
        })?;
        Ok(Execution {
            output: RunOutput {
                stdout: out.stdout,
                exit_code: out.exit_code,
            },
            range_dump: out.range_dump,
            count_dump: out.count_dump,
        })
    }
}

/// Builds and runs programs through shell command templates.
///
/// Build placeholders: `{src}` (space-separated sources), `{out}` (binary
/// path), `{dir}` (directory holding the sources and `rangeweaver_rt.h`).
/// Run placeholders: `{bin}`, `{args}` (shell-quoted), `{dir}`. Each run gets
/// its own dump path through `RANGEWEAVER_OUT`.
#[derive(Debug)]
pub struct CommandExecutor {
    pub build: String,
    pub run: String,
    pub work_dir: PathBuf,
    pub timeout: Duration,
    counter: AtomicUsize,
}

impl CommandExecutor {
    pub fn new(build: impl Into<String>, run: impl Into<String>, work_dir: impl Into<PathBuf>) -> Self {
        Self {
            build: build.into(),
            run: run.into(),
            work_dir: work_dir.into(),
            timeout: Duration::from_secs(10),
            counter: AtomicUsize::new(0),
        }
    }
}

pub struct BuiltProgram {
    pub dir: PathBuf,
    pub bin: PathBuf,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExecError + '_ {
    move |source| ExecError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn shell_quote(s: &str) -> String {
    if !s.is_empty()
        && s.bytes()
            .all(|b| b.is_ascii_alphanumeric() || b"-_./=:+,".contains(&b))
    {
        return s.to_string();
    }
    format!("'{}'", s.replace('\'', "'\\''"))
}

fn exit_code(status: std::process::ExitStatus) -> i32 {
    use std::os::unix::process::ExitStatusExt;
    status
        .code()
        .unwrap_or_else(|| 128 + status.signal().unwrap_or(0))
}

impl Executor for CommandExecutor {
    type Program = BuiltProgram;

    fn prepare(&self, label: &str, units: &[SourceUnit]) -> Result<BuiltProgram, ExecError> {
        let dir = self.work_dir.join(label);
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let header = dir.join(HEADER_FILE);
        std::fs::write(&header, runtime_header()).map_err(io_err(&header))?;
        let mut srcs = Vec::new();
        for (i, u) in units.iter().enumerate() {
            let p = dir.join(unit_file(i, u));
            std::fs::write(&p, print_c(u)).map_err(io_err(&p))?;
            srcs.push(shell_quote(&p.to_string_lossy()));
        }
        let bin = dir.join("prog");
        let command = self
            .build
            .replace("{src}", &srcs.join(" "))
            .replace("{out}", &shell_quote(&bin.to_string_lossy()))
            .replace("{dir}", &shell_quote(&dir.to_string_lossy()));
        let out = Command::new("sh")
            .arg("-c")
            .arg(&command)
            .output()
            .map_err(|source| ExecError::Spawn {
                command: command.clone(),
                source,
            })?;
        if !out.status.success() {
            return Err(ExecError::Build {
                label: label.to_string(),
                command,
                status: out.status.to_string(),
                stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
            });
        }
        Ok(BuiltProgram { dir, bin })
    }

    fn run(&self, p: &BuiltProgram, args: &[String]) -> Result<Execution, ExecError> {
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        let dump = p.dir.join(format!("run{n}.{DEFAULT_OUT}"));
        let _ = std::fs::remove_file(&dump);
        let quoted: Vec<String> = args.iter().map(|a| shell_quote(a)).collect();
        let command = self
            .run
            .replace("{bin}", &shell_quote(&p.bin.to_string_lossy()))
            .replace("{args}", &quoted.join(" "))
            .replace("{dir}", &shell_quote(&p.dir.to_string_lossy()));
        let spawn_err = |source| ExecError::Spawn {
            command: command.clone(),
            source,
        };
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&command)
            .process_group(0)
            .env(OUT_ENV, &dump)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(spawn_err)?;
        let mut stdout_pipe = child.stdout.take().expect("piped stdout");
        let reader = std::thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stdout_pipe.read_to_end(&mut buf);
            buf
        });
        let start = Instant::now();
        let code = loop {
            if let Some(status) = child.try_wait().map_err(spawn_err)? {
                break exit_code(status);
            }
            if start.elapsed() > self.timeout {
                // The shell may have forked; take down its whole group.
                let _ = Command::new("kill")
                    .args(["-KILL", "--", &format!("-{}", child.id())])
                    .status();
                let _ = child.kill();
                let _ = child.wait();
                break EXIT_TIMEOUT;
            }
            std::thread::sleep(Duration::from_millis(2));
        };
        let stdout = reader.join().unwrap_or_default();
        let text = std::fs::read_to_string(&dump).ok();
        let _ = std::fs::remove_file(&dump);
        Ok(Execution::from_dump(
            RunOutput {
                stdout,
                exit_code: code,
            },
            text,
        ))
    }
}

impl Execution {
    /// Files the runtime's output under range or count dump by its header.
    pub fn from_dump(output: RunOutput, dump: Option<String>) -> Self {
        let (range_dump, count_dump) = match dump {
            Some(t) if t.starts_with(crate::rtformat::FREQ_HEADER) => (None, Some(t)),
            Some(t) => (Some(t), None),
            None => (None, None),
        };
        Self {
            output,
            range_dump,
            count_dump,
        }
    }

    fn dump(&self) -> Option<&str> {
        self.range_dump.as_deref().or(self.count_dump.as_deref())
    }
}

const REPLAY_TESTS: &str = "tests.tsv";

fn unit_file(i: usize, u: &SourceUnit) -> String {
    let stem = Path::new(&u.path)
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| format!("unit{i}"));
    format!("{stem}.c")
}

fn replay_tests_tsv(tests: &[Vec<String>]) -> Result<String, ExecError> {
    let mut out = String::new();
    for (i, args) in tests.iter().enumerate() {
        if args.iter().any(|a| a.contains(['\t', '\n'])) {
            return Err(ExecError::Replay(format!(
                "test {} has an argument with a tab or newline",
                i + 1
            )));
        }
        out.push_str(&super::campaign::test_name(i, tests.len()));
        for a in args {
            out.push('\t');
            out.push_str(a);
        }
        out.push('\n');
    }
    Ok(out)
}

/// Wraps another executor and stores every program and run under `root`,
/// laid out for [`ReplayExecutor`].
///
/// Layout: `tests.tsv` maps test names to argument vectors; each program
/// label gets a directory holding its printed sources and, per test,
/// `<test>.stdout`, `<test>.exit` and, if the runtime wrote one, `<test>.dump`.
pub struct RecordingExecutor<E> {
    inner: E,
    root: PathBuf,
    tests: Vec<Vec<String>>,
}

pub struct RecordedProgram<P> {
    inner: P,
    dir: PathBuf,
}

impl<E: Executor> RecordingExecutor<E> {
    pub fn new(inner: E, root: impl Into<PathBuf>, tests: &[Vec<String>]) -> Result<Self, ExecError> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(io_err(&root))?;
        let index = root.join(REPLAY_TESTS);
        std::fs::write(&index, replay_tests_tsv(tests)?).map_err(io_err(&index))?;
        Ok(Self {
            inner,
            root,
            tests: tests.to_vec(),
        })
    }
}

impl<E: Executor> Executor for RecordingExecutor<E> {
    type Program = RecordedProgram<E::Program>;

    fn prepare(&self, label: &str, units: &[SourceUnit]) -> Result<Self::Program, ExecError> {
        let dir = self.root.join(label);
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        for (i, u) in units.iter().enumerate() {
            let p = dir.join(unit_file(i, u));
            std::fs::write(&p, print_c(u)).map_err(io_err(&p))?;
        }
        Ok(RecordedProgram {
            inner: self.inner.prepare(label, units)?,
            dir,
        })
    }

    fn run(&self, p: &Self::Program, args: &[String]) -> Result<Execution, ExecError> {
        let i = self
            .tests
            .iter()
            .position(|t| t == args)
            .ok_or_else(|| ExecError::Replay(format!("unregistered arguments {args:?}")))?;
        let name = super::campaign::test_name(i, self.tests.len());
        let e = self.inner.run(&p.inner, args)?;
        let write = |ext: &str, data: &[u8]| {
            let path = p.dir.join(format!("{name}.{ext}"));
            std::fs::write(&path, data).map_err(io_err(&path))
        };
        write("stdout", &e.output.stdout)?;
        write("exit", format!("{}\n", e.output.exit_code).as_bytes())?;
        if let Some(d) = e.dump() {
            write("dump", d.as_bytes())?;
        }
        Ok(e)
    }
}

/// Serves runs from a directory written by [`RecordingExecutor`], so a
/// campaign can be evaluated without building anything. `prepare` checks that
/// the sources match the recording byte for byte.
#[derive(Debug)]
pub struct ReplayExecutor {
    root: PathBuf,
    tests: Vec<(String, Vec<String>)>,
}

pub struct ReplayProgram {
    dir: PathBuf,
}

impl ReplayExecutor {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, ExecError> {
        let root = root.into();
        let index = root.join(REPLAY_TESTS);
        let text = std::fs::read_to_string(&index).map_err(io_err(&index))?;
        let tests = text
            .lines()
            .filter(|l| !l.is_empty())
            .map(|l| {
                let mut f = l.split('\t');
                let name = f.next().unwrap_or_default().to_string();
                (name, f.map(str::to_string).collect())
            })
            .collect();
        Ok(Self { root, tests })
    }
}

impl Executor for ReplayExecutor {
    type Program = ReplayProgram;

    fn prepare(&self, label: &str, units: &[SourceUnit]) -> Result<ReplayProgram, ExecError> {
        let dir = self.root.join(label);
        for (i, u) in units.iter().enumerate() {
            let p = dir.join(unit_file(i, u));
            let recorded = std::fs::read_to_string(&p).map_err(io_err(&p))?;
            if recorded != print_c(u) {
                return Err(ExecError::Replay(format!(
                    "{} differs from the program being evaluated",
                    p.display()
                )));
            }
        }
        Ok(ReplayProgram { dir })
    }

    fn run(&self, p: &ReplayProgram, args: &[String]) -> Result<Execution, ExecError> {
        let name = self
            .tests
            .iter()
            .find(|(_, a)| a == args)
            .map(|(n, _)| n)
            .ok_or_else(|| ExecError::Replay(format!("no recorded run for arguments {args:?}")))?;
        let path = |ext: &str| p.dir.join(format!("{name}.{ext}"));
        let stdout_path = path("stdout");
        let stdout = std::fs::read(&stdout_path).map_err(io_err(&stdout_path))?;
        let exit_path = path("exit");
        let exit_text = std::fs::read_to_string(&exit_path).map_err(io_err(&exit_path))?;
        let exit_code = exit_text
            .trim()
            .parse()
            .map_err(|_| ExecError::Replay(format!("{}: bad exit code", exit_path.display())))?;
        let dump = std::fs::read_to_string(path("dump")).ok();
        Ok(Execution::from_dump(RunOutput { stdout, exit_code }, dump))
    }
}
