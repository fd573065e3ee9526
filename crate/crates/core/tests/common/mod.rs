#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use rangeweaver::c_frontend::{parse_c, print_c, SourceUnit};
use rangeweaver::interp::{self, RunConfig, RunOutcome};
use rangeweaver::normalize::{normalize, Pass};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn updating() -> bool {
    std::env::var_os("UPDATE_GOLDEN").is_some()
}

pub fn parse_file(path: &Path) -> SourceUnit {
    let src = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_c(&src, &path.display().to_string()).unwrap_or_else(|e| panic!("{e}"))
}

pub fn sorted_files(dir: &Path, ext: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .filter(|p| {
            p.extension().is_some_and(|x| x == ext)
                && !p.to_string_lossy().ends_with(".expected.c")
        })
        .collect();
    v.sort();
    v
}

/// Compares `actual` with the golden file, or rewrites it under UPDATE_GOLDEN.
pub fn check_golden(path: &Path, actual: &str) -> Result<(), String> {
    if updating() {
        std::fs::write(path, actual).unwrap();
        return Ok(());
    }
    let want = std::fs::read_to_string(path)
        .map_err(|e| format!("{}: {e} (run with UPDATE_GOLDEN=1)", path.display()))?;
    if want != actual {
        return Err(format!(
            "{} differs from golden\n--- want\n{want}\n--- got\n{actual}",
            path.display()
        ));
    }
    Ok(())
}

pub fn interpret(unit: &SourceUnit, args: &[String]) -> RunOutcome {
    interp::run(std::slice::from_ref(unit), &RunConfig::with_args(args.to_vec()))
        .unwrap_or_else(|e| panic!("{}: {e}", unit.path))
}

pub fn cc() -> Option<&'static str> {
    static CC: std::sync::OnceLock<Option<&'static str>> = std::sync::OnceLock::new();
    *CC.get_or_init(|| {
        ["cc", "gcc", "clang"].into_iter().find(|c| {
            Command::new(c)
                .arg("--version")
                .output()
                .is_ok_and(|o| o.status.success())
        })
    })
}

/// Compiles and runs a C source with the system compiler, returning
/// (stdout, exit code).
pub fn compile_and_run(src: &str, args: &[String], dir: &Path, name: &str) -> (Vec<u8>, i32) {
    let cc = cc().expect("no C compiler");
    let c = dir.join(format!("{name}.c"));
    let bin = dir.join(name);
    std::fs::write(&c, src).unwrap();
    let out = Command::new(cc)
        .args(["-std=c99", "-w", "-O0", "-o"])
        .arg(&bin)
        .arg(&c)
        .arg("-lm")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{name} failed to compile:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let run = Command::new(&bin).args(args).output().unwrap();
    (run.stdout, exit_code(&run.status))
}

pub fn exit_code(status: &std::process::ExitStatus) -> i32 {
    use std::os::unix::process::ExitStatusExt;
    status
        .code()
        .unwrap_or_else(|| 128 + status.signal().unwrap_or(0))
}

pub const PASS_DIRS: [(Pass, &str); 5] = [
    (Pass::SingleDeclarator, "single_declarator"),
    (Pass::UnaryExpansion, "unary_expansion"),
    (Pass::AssignExpansion, "assign_expansion"),
    (Pass::StructAssignDecomposition, "struct_assign_decomposition"),
    (Pass::NormalizeReturn, "normalize_return"),
];

#[derive(Debug, Default)]
pub struct GoldenStats {
    pub fixtures: usize,
    pub per_pass: Vec<(Pass, usize)>,
    pub compiled: usize,
    pub failures: Vec<String>,
}

/// Runs every pass on its fixture directory: golden text, skip report,
/// idempotence, print/parse fixpoint and interpreted (plus compiled, when a C
/// compiler exists) before/after equivalence.
pub fn run_golden_suite(use_cc: bool) -> GoldenStats {
    let mut stats = GoldenStats::default();
    let tmp = tempfile::tempdir().unwrap();
    for (pass, dir) in PASS_DIRS {
        let files = sorted_files(&fixtures().join("normalize").join(dir), "c");
        stats.per_pass.push((pass, files.len()));
        for path in files {
            stats.fixtures += 1;
            if let Err(e) = golden_case(pass, &path, use_cc, tmp.path(), &mut stats.compiled) {
                stats.failures.push(e);
            }
        }
    }
    stats
}

fn golden_case(
    pass: Pass,
    path: &Path,
    use_cc: bool,
    tmp: &Path,
    compiled: &mut usize,
) -> Result<(), String> {
    let original = parse_file(path);
    let mut unit = original.clone();
    let report = normalize(&mut unit, &[pass]);
    let printed = print_c(&unit);
    check_golden(&path.with_extension("expected.c"), &printed)?;
    let report_text: String = report.skipped.iter().map(|s| format!("{s}\n")).collect();
    check_golden(&path.with_extension("report"), &report_text)?;

    let mut twice = unit.clone();
    normalize(&mut twice, &[pass]);
    if !twice.structurally_eq(&unit) {
        return Err(format!("{}: {pass} is not idempotent", path.display()));
    }
    let reparsed = parse_c(&printed, "reparsed.c").map_err(|e| format!("{}: {e}", path.display()))?;
    if !reparsed.structurally_eq(&unit) {
        return Err(format!("{}: printed output does not re-parse identically", path.display()));
    }

    let before = interpret(&original, &[]);
    let after = interpret(&unit, &[]);
    if (before.stdout.as_slice(), before.exit_code) != (after.stdout.as_slice(), after.exit_code) {
        return Err(format!(
            "{}: interpreted behavior changed: {:?} vs {:?}",
            path.display(),
            String::from_utf8_lossy(&before.stdout),
            String::from_utf8_lossy(&after.stdout)
        ));
    }
    if use_cc && cc().is_some() {
        let stem = path.file_stem().unwrap().to_string_lossy().to_string();
        let src = std::fs::read_to_string(path).unwrap();
        let b = compile_and_run(&src, &[], tmp, &format!("{stem}_before"));
        let a = compile_and_run(&printed, &[], tmp, &format!("{stem}_after"));
        *compiled += 1;
        if a != b {
            return Err(format!("{}: compiled behavior changed", path.display()));
        }
        if b != (before.stdout.clone(), before.exit_code) {
            return Err(format!(
                "{}: interpreter disagrees with the compiler: {:?} vs {:?}",
                path.display(),
                String::from_utf8_lossy(&before.stdout),
                String::from_utf8_lossy(&b.0)
            ));
        }
    }
    Ok(())
}
