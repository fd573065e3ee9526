//! Slot assignment and injection of range-update and counter calls.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::c_frontend::*;
use crate::joinpoints::{is_monitorable, visit_sites, Anchor, JoinPoint, JoinPointKind, SelectionReport};
use crate::rtformat::*;
use crate::strategies::{FrequencyReport, MonitorSet, VarKey};

/// Dense, lexicographically ordered indices for monitored variables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SlotTable {
    slots: BTreeMap<VarKey, usize>,
    order: Vec<VarKey>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InstrumentError {
    #[error("monitored variable `{1}` in `{0}` has no slot")]
    MissingSlot(String, String),
    #[error("slot map line {line}: {message}")]
    SlotMap { line: usize, message: String },
    #[error("count dump has {found} slots, expected {expected}")]
    CountMismatch { expected: usize, found: usize },
}

impl SlotTable {
    pub fn from_keys(keys: impl IntoIterator<Item = VarKey>) -> Self {
        let mut order: Vec<VarKey> = keys.into_iter().collect();
        order.sort();
        order.dedup();
        let slots = order.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
        Self { slots, order }
    }

    pub fn size(&self) -> usize {
        self.order.len()
    }

    pub fn get(&self, function: &str, variable: &str) -> Option<usize> {
        self.slots
            .get(&(function.to_string(), variable.to_string()))
            .copied()
    }

    pub fn key(&self, slot: usize) -> Option<&VarKey> {
        self.order.get(slot)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &VarKey)> {
        self.order.iter().enumerate()
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::from("slot\tfunction\tvariable\n");
        for (i, (f, v)) in self.iter() {
            let _ = writeln!(s, "{i}\t{f}\t{v}");
        }
        s
    }

    pub fn parse_tsv(text: &str) -> Result<Self, InstrumentError> {
        let bad = |line, message: &str| InstrumentError::SlotMap {
            line,
            message: message.to_string(),
        };
        let mut order = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            if line.trim().is_empty() || (n == 1 && line.starts_with("slot\t")) {
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            let [k, f, v] = parts.as_slice() else {
                return Err(bad(n, "expected `slot<TAB>function<TAB>variable`"));
            };
            let k: usize = k.parse().map_err(|_| bad(n, "bad slot index"))?;
            if k != order.len() {
                return Err(bad(n, "slots must be contiguous from 0"));
            }
            order.push((f.to_string(), v.to_string()));
        }
        let table = Self::from_keys(order.clone());
        if table.order != order {
            return Err(bad(0, "slots are not in lexicographic order"));
        }
        Ok(table)
    }

    /// Pairs a counter dump with this table.
    pub fn frequency_report(&self, dump: &CountDump) -> Result<FrequencyReport, InstrumentError> {
        if dump.counts.len() != self.size() {
            return Err(InstrumentError::CountMismatch {
                expected: self.size(),
                found: dump.counts.len(),
            });
        }
        Ok(FrequencyReport::from_counts(
            self.order.iter().cloned().zip(dump.counts.iter().copied()).collect(),
        ))
    }
}

pub fn assign_slots(ms: &MonitorSet) -> SlotTable {
    SlotTable::from_keys(ms.entries.iter().cloned())
}

/// Counter slots for every monitorable assignment variable.
pub fn frequency_slots(jps: &[JoinPoint]) -> SlotTable {
    SlotTable::from_keys(
        jps.iter()
            .filter(|j| j.kind == JoinPointKind::Assignment && is_monitorable(j))
            .map(JoinPoint::key),
    )
}

pub fn report_selection(ms: &MonitorSet, jps: &[JoinPoint]) -> SelectionReport {
    SelectionReport {
        selected: jps.len(),
        advised: jps
            .iter()
            .filter(|j| is_monitorable(j) && ms.contains(&j.function, &j.variable))
            .count(),
    }
}

#[derive(Clone, Copy)]
enum Mode {
    Ranges,
    Counts,
}

/// Adds range updates for every monitored join point plus the runtime
/// boilerplate. Returns the number of update calls inserted.
pub fn instrument_ranges(
    unit: &mut SourceUnit,
    ms: &MonitorSet,
    st: &SlotTable,
) -> Result<usize, InstrumentError> {
    for (f, v) in &ms.entries {
        if st.get(f, v).is_none() {
            return Err(InstrumentError::MissingSlot(f.clone(), v.clone()));
        }
    }
    Ok(weave(unit, Mode::Ranges, st, &|jp| ms.contains(&jp.function, &jp.variable)))
}

/// Adds a counter increment after every monitorable statement-level
/// assignment. `jps` must cover the whole program so multi-unit builds
/// agree on slots.
pub fn instrument_frequency(unit: &mut SourceUnit, jps: &[JoinPoint]) -> SlotTable {
    let table = frequency_slots(jps);
    weave(unit, Mode::Counts, &table, &|jp| jp.kind == JoinPointKind::Assignment);
    table
}

fn weave(
    unit: &mut SourceUnit,
    mode: Mode,
    table: &SlotTable,
    wanted: &dyn Fn(&JoinPoint) -> bool,
) -> usize {
    let mut per_function: BTreeMap<String, Vec<(Anchor, Stmt)>> = BTreeMap::new();
    let mut advised = 0;
    if let Some(main) = unit.function("main") {
        let dump = match mode {
            Mode::Ranges => DUMP_RANGES_FN,
            Mode::Counts => DUMP_COUNTS_FN,
        };
        let anchor = Anchor {
            path: Vec::new(),
            index: crate::joinpoints::leading_decls(&main.body),
        };
        let call = Expr::call("atexit", vec![Expr::ident(dump)]);
        per_function
            .entry("main".into())
            .or_default()
            .push((anchor, Stmt::expr(call, main.loc)));
    }
    visit_sites(unit, &mut |site| {
        let jp = &site.jp;
        if !is_monitorable(jp) || !wanted(jp) {
            return;
        }
        let Some(k) = table.get(&jp.function, &jp.variable) else {
            return;
        };
        let call = match mode {
            Mode::Ranges => update_call(k, &jp.variable),
            Mode::Counts => count_call(k),
        };
        advised += 1;
        per_function
            .entry(jp.function.clone())
            .or_default()
            .push((site.anchor, Stmt::expr(call, jp.loc)));
    });
    for f in unit.functions_mut() {
        if let Some(ins) = per_function.remove(&f.name) {
            apply(&mut f.body, ins);
        }
    }
    add_boilerplate(unit, mode, table.size());
    advised
}

fn slot_ref(array: &str, k: usize) -> Expr {
    Expr::Unary {
        op: UnaryOp::AddrOf,
        operand: Box::new(Expr::Index {
            base: Box::new(Expr::ident(array)),
            index: Box::new(Expr::int(k as i64)),
        }),
    }
}

fn update_call(k: usize, var: &str) -> Expr {
    let value = Expr::Cast {
        ty: TypeInfo::double(),
        expr: Box::new(Expr::ident(var)),
    };
    Expr::call(UPDATE_FN, vec![slot_ref(RANGES_ARRAY, k), value])
}

fn count_call(k: usize) -> Expr {
    Expr::call(COUNT_FN, vec![slot_ref(COUNTS_ARRAY, k)])
}

fn child_blocks_mut(s: &mut Stmt) -> Vec<&mut Block> {
    match &mut s.kind {
        StmtKind::If {
            then_branch,
            else_branch,
            ..
        } => std::iter::once(then_branch).chain(else_branch.as_mut()).collect(),
        StmtKind::While { body, .. } | StmtKind::DoWhile { body, .. } | StmtKind::For { body, .. } => {
            vec![body]
        }
        StmtKind::Block(b) => vec![b],
        _ => Vec::new(),
    }
}

/// Inserts statements at their anchors. Statements sharing an anchor keep
/// their relative order.
fn apply(block: &mut Block, inserts: Vec<(Anchor, Stmt)>) {
    let mut here: Vec<(usize, Stmt)> = Vec::new();
    let mut nested: BTreeMap<(usize, usize), Vec<(Anchor, Stmt)>> = BTreeMap::new();
    for (mut a, s) in inserts {
        if a.path.is_empty() {
            here.push((a.index, s));
        } else {
            let step = a.path.remove(0);
            nested.entry(step).or_default().push((a, s));
        }
    }
    for ((i, c), ins) in nested {
        let mut children = child_blocks_mut(&mut block.stmts[i]);
        apply(children.swap_remove(c), ins);
    }
    here.sort_by_key(|(i, _)| *i);
    let mut out = Vec::with_capacity(block.stmts.len() + here.len());
    let mut pending = here.into_iter().peekable();
    for (i, s) in std::mem::take(&mut block.stmts).into_iter().enumerate() {
        while let Some((_, ins)) = pending.next_if(|(k, _)| *k == i) {
            out.push(ins);
        }
        out.push(s);
    }
    out.extend(pending.map(|(_, s)| s));
    block.stmts = out;
}

fn add_boilerplate(unit: &mut SourceUnit, mode: Mode, n: usize) {
    let include = format!("#include \"{HEADER_FILE}\"");
    let at = unit
        .items
        .iter()
        .take_while(|it| matches!(it, Item::Directive { .. }))
        .count();
    let mut new_items = Vec::new();
    if !unit
        .items
        .iter()
        .any(|it| matches!(it, Item::Directive { text, .. } if *text == include))
    {
        new_items.push(Item::Directive {
            text: include,
            loc: Loc::default(),
        });
    }
    if unit.has_main() {
        let (nslots, ncounts) = match mode {
            Mode::Ranges => (n, 0),
            Mode::Counts => (0, n),
        };
        let defs = format!(
            "Range {RANGES_ARRAY}[{}];\nint {RANGES_LEN} = {nslots};\n\
             unsigned long {COUNTS_ARRAY}[{}];\nint {COUNTS_LEN} = {ncounts};\n",
            nslots.max(1),
            ncounts.max(1)
        );
        let parsed = parse_c(&defs, "<runtime>").expect("runtime definitions parse");
        new_items.extend(parsed.items);
    }
    unit.items.splice(at..at, new_items);
}
