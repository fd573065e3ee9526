use super::*;
use crate::c_frontend::parse_c;

fn run_src(src: &str, args: &[&str]) -> RunOutcome {
    let unit = parse_c(src, "t.c").unwrap();
    let cfg = RunConfig::with_args(args.iter().map(|s| s.to_string()).collect());
    run(&[unit], &cfg).unwrap()
}

fn stdout(src: &str) -> String {
    String::from_utf8(run_src(src, &[]).stdout).unwrap()
}

#[test]
fn arithmetic_follows_c_conversions() {
    let src = r#"
int main(void) {
    unsigned int u = 0;
    int i = -7;
    char c = 200;
    unsigned char uc = 250;
    long big = 3000000000;
    u = u - 1;
    uc = uc + 10;
    printf("%u %d %d %d %d\n", u, i / 2, i % 3, c, uc);
    printf("%ld %d %d\n", big * 2, 7 >> 1, -7 >> 1);
    printf("%d %d\n", u > 5, i < u);
    printf("%.3f %g\n", 7 / 2 * 1.0, 1.0f / 3);
    return 0;
}
"#;
    assert_eq!(
        stdout(src),
        "4294967295 -3 -1 -56 4\n6000000000 3 -4\n1 1\n3.000 0.333333\n"
    );
}

#[test]
fn structs_arrays_and_pointers() {
    let src = r#"
struct pt { int x; double y; };
struct box { struct pt corner[2]; int tag; };
static int sum(int *a, int n) {
    int s = 0;
    int i;
    for (i = 0; i < n; i++) {
        s += a[i];
    }
    return s;
}
void shift(struct pt *p, int by) {
    p->x = p->x + by;
    (*p).y *= 2;
}
int main(void) {
    int a[4] = {1, 2, 3};
    int m[2][3] = {{1, 2, 3}, {4, 5, 6}};
    struct box b = {{{1, 0.5}, {2, 1.5}}, 9};
    struct pt q;
    int *p = a;
    p = p + 2;
    *p = 10;
    shift(&b.corner[1], 5);
    q = b.corner[1];
    printf("%d %d %d %d\n", sum(a, 4), m[1][2], (int) (p - a), b.tag);
    printf("%d %.1f %d\n", q.x, q.y, (int) sizeof(struct box));
    return 0;
}
"#;
    assert_eq!(stdout(src), "13 6 2 9\n7 3.0 40\n");
}

#[test]
fn control_flow_and_recursion() {
    let src = r#"
int fib(int n) { if (n < 2) { return n; } return fib(n - 1) + fib(n - 2); }
int main(void) {
    int i = 0, acc = 0;
    while (1) {
        i++;
        if (i % 2 == 0) { continue; }
        if (i > 9) { break; }
        acc += i;
    }
    do { acc--; } while (acc > 20);
    printf("%d %d %d\n", acc, fib(15), i > 3 ? 1 : 0);
    return acc;
}
"#;
    let out = run_src(src, &[]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "20 610 1\n");
    assert_eq!(out.exit_code, 20);
}

#[test]
fn argv_and_parsing_builtins() {
    let src = r#"
int main(int argc, char **argv) {
    double x = atof(argv[1]);
    int n = atoi(argv[2]);
    printf("%d %s %.2f %d\n", argc, argv[0], x * 2, n + 1);
    return 0;
}
"#;
    let out = run_src(src, &["1.25", "  41xyz"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "3 a.out 2.50 42\n");
}

#[test]
fn traps_become_exit_codes() {
    let div = "int main(void) { int z = 0; printf(\"a\"); return 1 / z; }";
    let out = run_src(div, &[]);
    assert_eq!((out.exit_code, out.stdout), (EXIT_FPE, b"a".to_vec()));

    let oob = "int main(void) { int a[2]; int i = 5; a[i] = 1; return 0; }";
    assert_eq!(run_src(oob, &[]).exit_code, EXIT_SEGV);

    let spin = "int main(void) { while (1) { } return 0; }";
    let unit = parse_c(spin, "t.c").unwrap();
    let cfg = RunConfig {
        max_steps: 1000,
        ..RunConfig::default()
    };
    assert_eq!(run(&[unit], &cfg).unwrap().exit_code, EXIT_TIMEOUT);
}

#[test]
fn exit_runs_atexit_handlers_in_reverse() {
    let src = r#"
void a(void) { printf("a"); }
void b(void) { printf("b"); }
void work(void) { exit(3); }
int main(void) { atexit(a); atexit(b); work(); return 0; }
"#;
    let out = run_src(src, &[]);
    assert_eq!((out.stdout, out.exit_code), (b"ba".to_vec(), 3));
}

#[test]
fn runtime_entry_points_match_the_dump_format() {
    let src = r#"
#include "rangeweaver_rt.h"
Range ranges[3];
int rangeweaver_nslots = 3;
unsigned long rangeweaver_counts[2];
int rangeweaver_ncounts = 2;
int main(void) {
    double nan = 0.0 / 0.0;
    atexit(rangeweaver_dump_ranges);
    atexit(rangeweaver_dump_counts);
    update_range(&ranges[0], 5.0);
    update_range(&ranges[0], nan);
    update_range(&ranges[0], -0.1);
    update_range(&ranges[2], (double) 7);
    rangeweaver_count(&rangeweaver_counts[1]);
    rangeweaver_count(&rangeweaver_counts[1]);
    return 0;
}
"#;
    let out = run_src(src, &[]);
    assert_eq!(
        out.range_dump.as_deref(),
        Some("#rangeweaver v1\n0\t-0.10000000000000001\t5\n1\tEMPTY\n2\t7\t7\n")
    );
    assert_eq!(
        out.count_dump.as_deref(),
        Some("#rangeweaver-freq v1\n0\t0\n1\t2\n")
    );
}

#[test]
fn no_dump_on_crash() {
    let src = r#"
Range ranges[1];
int rangeweaver_nslots = 1;
int main(void) { int z = 0; atexit(rangeweaver_dump_ranges); return 3 % z; }
"#;
    let out = run_src(src, &[]);
    assert_eq!(out.exit_code, EXIT_FPE);
    assert_eq!(out.range_dump, None);
}

#[test]
fn unsupported_constructs_are_errors() {
    let unit = parse_c(
        "int main(void) { int x = 1; switch (x) { case 1: x = 2; } return x; }",
        "t.c",
    )
    .unwrap();
    assert!(matches!(
        run(&[unit], &RunConfig::default()),
        Err(InterpError::Unsupported { .. })
    ));
    let unit = parse_c("int f(void) { return 1; }", "t.c").unwrap();
    assert_eq!(run(&[unit], &RunConfig::default()), Err(InterpError::NoMain));
}

#[test]
fn globals_statics_and_enums() {
    let src = r#"
enum mode { IDLE, RUN = 5, STOP };
enum other { FIRST };
int counter;
double table[] = {1.5, 2.5, 3.5};
char name[] = "rw";
int bump(void) { static int calls = 0; calls++; return calls; }
int main(void) {
    bump();
    bump();
    counter = bump();
    printf("%d %d %d %d %d\n", IDLE, RUN, STOP, FIRST, counter);
    printf("%d %s %d %.1f\n", (int) (sizeof(table) / sizeof(table[0])), name, (int) sizeof(name), table[2]);
    return 0;
}
"#;
    assert_eq!(stdout(src), "0 5 6 0 3\n3 rw 3 3.5\n");
}

#[test]
fn integer_literal_types() {
    assert_eq!(parse_int_literal("7"), Some((7, CType::INT)));
    assert_eq!(parse_int_literal("3000000000"), Some((3_000_000_000, CType::LONG)));
    assert_eq!(
        parse_int_literal("0xffffffff"),
        Some((
            0xffff_ffff,
            CType::Int {
                bytes: 4,
                signed: false
            }
        ))
    );
    assert_eq!(parse_int_literal("010"), Some((8, CType::INT)));
    assert_eq!(parse_int_literal("5UL"), Some((5, CType::ULONG)));
}
