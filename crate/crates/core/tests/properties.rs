mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;

use rangeweaver::c_frontend::{parse_c, print_c, SourceUnit};
use rangeweaver::harness::{compute_metrics, contains, merge_selected, sample_order, FaultMatrix, Interval, RunRanges};
use rangeweaver::instrument::{assign_slots, instrument_ranges, report_selection, SlotTable};
use rangeweaver::interp::{self, RunConfig};
use rangeweaver::joinpoints::{enumerate_joinpoints, is_monitorable};
use rangeweaver::normalize::{normalize, Pass};
use rangeweaver::rtformat::{CountDump, RangeDump};
use rangeweaver::strategies::{combine, select, select_fanin, select_freq, CombineMode, FaninReport, FrequencyReport, Strategy as Strat, Thresholds};

// Random programs over a fixed set of variables. Values stay small enough
// that nothing overflows. Each loop nesting depth has its own counter so
// every loop terminates.

const INTS: [&str; 3] = ["a", "b", "c"];

fn int_expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        prop::sample::select(INTS.to_vec()).prop_map(str::to_string),
        (0..10i32).prop_map(|v| v.to_string()),
        Just("s.m".to_string()),
        (0..4usize).prop_map(|i| format!("arr[{i}]")),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), prop::sample::select(vec!["+", "-", "*", "%"]), inner.clone()).prop_map(|(l, op, r)| {
                if op == "%" {
                    format!("({l}) % 7")
                } else {
                    format!("({l} {op} {r})")
                }
            }),
            inner.clone().prop_map(|e| format!("h({e})")),
            (inner.clone(), inner.clone()).prop_map(|(c, e)| format!("(({c}) > 3 ? {e} : 1)")),
        ]
    })
}

fn stmt(depth: u32) -> BoxedStrategy<String> {
    let simple = prop_oneof![
        (prop::sample::select(INTS.to_vec()), int_expr()).prop_map(|(v, e)| format!("{v} = ({e}) % 1000;")),
        (prop::sample::select(INTS.to_vec()), prop::sample::select(vec!["+=", "-="]), int_expr())
            .prop_map(|(v, op, e)| format!("{v} {op} ({e}) % 100;")),
        (prop::sample::select(INTS.to_vec()), prop::sample::select(vec!["++", "--"])).prop_map(|(v, op)| format!("{v}{op};")),
        prop::sample::select(INTS.to_vec()).prop_map(|v| format!("--{v};")),
        int_expr().prop_map(|e| format!("s.m = ({e}) % 1000;")),
        int_expr().prop_map(|e| format!("s.n += ({e}) % 10 + 0.5;")),
        (0..4usize, int_expr()).prop_map(|(i, e)| format!("arr[{i}] += ({e}) % 50;")),
        int_expr().prop_map(|e| format!("x = x * 0.5 + ({e}) % 10;")),
        int_expr().prop_map(|e| format!("{{ int t = ({e}) % 10, u = t + 1; c = c + t * u % 100; }}")),
    ];
    if depth == 0 {
        return simple.boxed();
    }
    prop_oneof![
        4 => simple,
        1 => (int_expr(), prop::collection::vec(stmt(depth - 1), 0..3), prop::collection::vec(stmt(depth - 1), 0..3))
            .prop_map(|(c, t, e)| format!("if (({c}) % 2) {{ {} }} else {{ {} }}", t.join(" "), e.join(" "))),
        1 => (1..4i32, prop::collection::vec(stmt(depth - 1), 1..3))
            .prop_map(move |(n, body)| format!("for (k{depth} = 0; k{depth} < {n}; k{depth}++) {{ {} }}", body.join(" "))),
    ]
    .boxed()
}

fn program() -> impl Strategy<Value = String> {
    (
        prop::collection::vec(stmt(2), 1..8),
        int_expr(),
        prop::collection::vec(stmt(1), 0..4),
    )
        .prop_map(|(body, ret, gbody)| {
            format!(
                "#include <stdio.h>\n\
                 struct pt {{ int m; double n; }};\n\
                 struct pt s;\n\
                 int arr[4];\n\
                 double x = 1.0;\n\
                 int h(int v) {{ return v % 17 * 2 + 1; }}\n\
                 int g(int a, int b) {{ int c = 1, k1, k2; {}\n return a + b + c; }}\n\
                 int f(int a, int b) {{\n int c = a - b, k1, k2;\n {}\n return {ret} % 1000;\n}}\n\
                 int main(void) {{\n int r = f(3, 4);\n int q = g(r % 10, 2);\n\
                 printf(\"%d %d %d %.3f %d %d %d %d %.3f\\n\", r, q, s.m, s.n, arr[0], arr[1], arr[2], arr[3], x);\n\
                 return 0;\n}}\n",
                gbody.join("\n "),
                body.join("\n ")
            )
        })
}

fn parse(src: &str) -> SourceUnit {
    parse_c(src, "gen.c").unwrap_or_else(|e| panic!("{e}\n{src}"))
}

fn run(unit: &SourceUnit) -> interp::RunOutcome {
    let cfg = RunConfig {
        max_steps: 1_000_000,
        ..RunConfig::default()
    };
    let out = interp::run(std::slice::from_ref(unit), &cfg).unwrap();
    assert_ne!(out.exit_code, interp::EXIT_TIMEOUT, "generated program did not terminate\n{}", print_c(unit));
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn print_parse_round_trip(src in program()) {
        let u = parse(&src);
        let again = parse(&print_c(&u));
        prop_assert!(again.structurally_eq(&u));
    }

    #[test]
    fn passes_are_idempotent_and_preserve_behavior(src in program()) {
        let u = parse(&src);
        let before = run(&u);
        for pass in Pass::ALL {
            let mut once = u.clone();
            normalize(&mut once, &[pass]);
            let mut twice = once.clone();
            normalize(&mut twice, &[pass]);
            prop_assert!(twice.structurally_eq(&once), "{pass} not idempotent");
            let after = run(&once);
            prop_assert_eq!(&after.stdout, &before.stdout, "{} changed behavior", pass);
        }
        let mut all = u.clone();
        normalize(&mut all, &Pass::ALL);
        let after = run(&all);
        prop_assert_eq!((&after.stdout, after.exit_code), (&before.stdout, before.exit_code));
    }

    #[test]
    fn instrumentation_preserves_behavior_and_is_deterministic(src in program()) {
        let u = parse(&src);
        let before = run(&u);
        let mut n = u.clone();
        normalize(&mut n, &Strat::Ascv3S.passes());
        let jps = enumerate_joinpoints(&n);
        for jp in &jps {
            if let Some(t) = &jp.var_type {
                if t.pointer_depth > 0 || !t.array_dims.is_empty() {
                    prop_assert!(!is_monitorable(jp));
                }
            }
        }
        prop_assert_eq!(&enumerate_joinpoints(&n), &jps);
        let ms = select(Strat::Ascv3S, &jps, Thresholds::default(), None, None).unwrap();
        let st = assign_slots(&ms);
        let mut w1 = n.clone();
        let advised = instrument_ranges(&mut w1, &ms, &st).unwrap();
        let mut w2 = n.clone();
        instrument_ranges(&mut w2, &ms, &st).unwrap();
        prop_assert_eq!(print_c(&w1), print_c(&w2));
        let rep = report_selection(&ms, &jps);
        prop_assert_eq!(rep.advised, advised);
        prop_assert!(rep.advised <= rep.selected);
        let after = run(&w1);
        prop_assert_eq!((&after.stdout, after.exit_code), (&before.stdout, before.exit_code));
        let dump = RangeDump::parse(after.range_dump.as_deref().unwrap()).unwrap();
        prop_assert_eq!(dump.slots.len(), st.size());
    }
}

fn interval() -> impl Strategy<Value = Option<Interval>> {
    prop_oneof![
        1 => Just(None),
        4 => (-1e3..1e3f64, 0.0..1e3f64).prop_map(|(lo, w)| Some((lo, lo + w))),
    ]
}

fn runs(max_runs: usize, slots: usize) -> impl Strategy<Value = Vec<RunRanges>> {
    prop::collection::vec(prop::collection::vec(interval(), slots), 1..=max_runs).prop_map(|rs| {
        rs.into_iter()
            .enumerate()
            .map(|(i, per_slot)| RunRanges { run_id: format!("r{i}"), per_slot })
            .collect()
    })
}

fn within(inner: Option<Interval>, outer: Option<Interval>) -> bool {
    match (inner, outer) {
        (None, _) => true,
        (Some(_), None) => false,
        (Some((a, b)), Some((c, d))) => c <= a && b <= d,
    }
}

proptest! {
    #[test]
    fn merging_more_runs_only_widens(training in runs(20, 6), seed in any::<u64>(), k1 in 1usize..20, k2 in 1usize..20) {
        let order = sample_order(training.len(), seed);
        let (k1, k2) = (k1.min(k2).min(order.len()), k1.max(k2).min(order.len()));
        let small = merge_selected(&training, &order[..k1], 0.0, seed).unwrap();
        let big = merge_selected(&training, &order[..k2], 0.0, seed).unwrap();
        for (s, b) in small.per_slot.iter().zip(&big.per_slot) {
            prop_assert!(within(*s, *b));
        }
    }

    #[test]
    fn contains_is_reflexive_and_antisymmetric(run in runs(1, 5), grow in 0.5..10.0f64) {
        let obs = run[0].clone();
        let learned = merge_selected(&run, &[0], 100.0, 0).unwrap();
        prop_assert!(contains(&learned, &obs).unwrap().iter().all(|c| *c));
        // Strictly enlarge every present slot.
        let wider = RunRanges {
            run_id: "wide".into(),
            per_slot: obs.per_slot.iter().map(|s| s.map(|(lo, hi)| (lo - grow, hi + grow))).collect(),
        };
        let wide_learned = merge_selected(std::slice::from_ref(&wider), &[0], 100.0, 0).unwrap();
        let inner_in_outer = contains(&wide_learned, &obs).unwrap();
        let outer_in_inner = contains(&learned, &wider).unwrap();
        for (k, s) in obs.per_slot.iter().enumerate() {
            prop_assert!(inner_in_outer[k]);
            prop_assert_eq!(outer_in_inner[k], s.is_none());
        }
    }

    #[test]
    fn confusion_counts_cover_the_matrix(m in 1usize..12, n in 1usize..12, bits in prop::collection::vec(any::<bool>(), 288)) {
        let rows = |off: usize| -> Vec<Vec<bool>> { (0..m).map(|t| (0..n).map(|v| bits[off + t * n + v]).collect()).collect() };
        let r = compute_metrics(&FaultMatrix::from_rows(&rows(0)), &FaultMatrix::from_rows(&rows(144))).unwrap();
        prop_assert_eq!(r.tp + r.fp + r.tn + r.fn_, (m * n) as u64);
    }

    #[test]
    fn combinations_are_bounded_by_their_parts(
        counts in prop::collection::btree_map(0usize..40, 0u64..300, 0..40),
        fanins in prop::collection::btree_map(0usize..40, 0u32..6, 0..40),
        pct in 0.0..8.0f64,
        thr in 0u32..5,
    ) {
        let key = |i: &usize| ("f".to_string(), format!("v{i}"));
        let freq = FrequencyReport::from_counts(counts.iter().map(|(i, c)| (key(i), *c)).collect());
        let fanin = FaninReport { per_var: fanins.iter().map(|(i, f)| (key(i), *f)).collect() };
        let fs = select_freq(&freq, pct);
        let ns = select_fanin(&fanin, thr);
        let and = combine(&fs, &ns, CombineMode::And);
        let or = combine(&fs, &ns, CombineMode::Or);
        prop_assert!(and.entries.is_subset(&or.entries));
        prop_assert!(and.entries.is_subset(&fs.entries) && and.entries.is_subset(&ns.entries));
        prop_assert!(and.len() <= fs.len().min(ns.len()));
        prop_assert!(or.len() >= fs.len().max(ns.len()));
    }

    #[test]
    fn frequency_reports_conserve_counts(
        slots in 1usize..10,
        dumps in prop::collection::vec(prop::collection::vec(0u64..1000, 10), 1..6),
    ) {
        let table = SlotTable::from_keys((0..slots).map(|i| (format!("f{}", i % 2), format!("v{i}"))));
        let mut report = FrequencyReport::from_counts(BTreeMap::new());
        for d in &dumps {
            let dump = CountDump { counts: d[..slots].to_vec() };
            report.accumulate(&table.frequency_report(&dump).unwrap());
            prop_assert_eq!(report.per_var.values().sum::<u64>(), report.total_assignments);
        }
        let text = report.to_tsv();
        prop_assert_eq!(FrequencyReport::parse_tsv(&text).unwrap(), report);
    }

    #[test]
    fn slots_are_lexicographic_and_contiguous(keys in prop::collection::btree_set(("[a-c]{1,2}", "[x-z]{1,2}"), 0..20)) {
        let mut shuffled: Vec<_> = keys.iter().cloned().collect();
        shuffled.reverse();
        let a = SlotTable::from_keys(keys.iter().cloned());
        let b = SlotTable::from_keys(shuffled);
        prop_assert_eq!(a.to_tsv(), b.to_tsv());
        let listed: Vec<_> = a.iter().map(|(k, key)| (k, key.clone())).collect();
        let want: Vec<_> = keys.iter().cloned().enumerate().collect();
        prop_assert_eq!(listed, want);
        prop_assert_eq!(SlotTable::parse_tsv(&a.to_tsv()).unwrap().to_tsv(), a.to_tsv());
    }
}

#[test]
fn instrumented_fixtures_keep_behavior() {
    let brake = common::fixtures().join("brake");
    let args: Vec<String> = ["21", "0.52", "1250", "1"].iter().map(|s| s.to_string()).collect();
    let mut files = common::sorted_files(&brake, "c");
    for (_, dir) in common::PASS_DIRS {
        files.extend(common::sorted_files(&common::fixtures().join("normalize").join(dir), "c"));
    }
    for path in files {
        let unit = common::parse_file(&path);
        if unit.function("main").is_none() {
            continue;
        }
        let before = common::interpret(&unit, &args);
        for s in [Strat::Ascv3, Strat::Ascv3S] {
            let mut n = unit.clone();
            normalize(&mut n, &s.passes());
            let jps = enumerate_joinpoints(&n);
            let ms = select(s, &jps, Thresholds::default(), None, None).unwrap();
            let st = assign_slots(&ms);
            instrument_ranges(&mut n, &ms, &st).unwrap();
            let after = common::interpret(&n, &args);
            assert_eq!(
                (&after.stdout, after.exit_code),
                (&before.stdout, before.exit_code),
                "{} under {s}",
                path.display()
            );
            assert!(after.range_dump.is_some(), "{}", path.display());
        }
    }
}
