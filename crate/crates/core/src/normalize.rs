//! Source normalization passes that make code easier to instrument.
//!
//! Each pass rewrites a [`SourceUnit`] in place and is idempotent. Rewrites
//! that would change semantics (for example duplicating an lvalue with side
//! effects) are skipped and listed in the returned [`PassReport`].

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::c_frontend::visit::{collect_block_names, for_each_child_block_mut, walk_expr_mut};
use crate::c_frontend::*;

/// Prefix of every name the passes introduce.
pub const TEMP_PREFIX: &str = "__rw_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pass {
    SingleDeclarator,
    UnaryExpansion,
    AssignExpansion,
    StructAssignDecomposition,
    NormalizeReturn,
}

impl Pass {
    /// All passes, in the order they must run.
    pub const ALL: [Pass; 5] = [
        Pass::SingleDeclarator,
        Pass::UnaryExpansion,
        Pass::AssignExpansion,
        Pass::StructAssignDecomposition,
        Pass::NormalizeReturn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pass::SingleDeclarator => "single_declarator",
            Pass::UnaryExpansion => "unary_expansion",
            Pass::AssignExpansion => "assign_expansion",
            Pass::StructAssignDecomposition => "struct_assign_decomposition",
            Pass::NormalizeReturn => "normalize_return",
        }
    }

    /// Everything except struct decomposition.
    pub fn without_structs() -> Vec<Pass> {
        Pass::ALL
            .into_iter()
            .filter(|p| *p != Pass::StructAssignDecomposition)
            .collect()
    }
}

impl fmt::Display for Pass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown pass `{0}` (expected one of single_declarator, unary_expansion, assign_expansion, struct_assign_decomposition, normalize_return)")]
pub struct UnknownPass(pub String);

impl FromStr for Pass {
    type Err = UnknownPass;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Pass::ALL
            .into_iter()
            .find(|p| p.name() == norm || p.name().replace('_', "") == norm)
            .ok_or_else(|| UnknownPass(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skipped {
    pub pass: Pass,
    pub function: String,
    pub loc: Loc,
    pub reason: String,
}

impl fmt::Display for Skipped {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} in `{}` skipped: {}",
            self.loc, self.pass, self.function, self.reason
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PassReport {
    pub skipped: Vec<Skipped>,
}

impl PassReport {
    fn skip(&mut self, pass: Pass, function: &str, loc: Loc, reason: impl Into<String>) {
        self.skipped.push(Skipped {
            pass,
            function: function.to_string(),
            loc,
            reason: reason.into(),
        });
    }

    pub fn extend(&mut self, other: PassReport) {
        self.skipped.extend(other.skipped);
    }
}

/// Runs the selected passes in canonical order.
pub fn normalize(unit: &mut SourceUnit, passes: &[Pass]) -> PassReport {
    let mut report = PassReport::default();
    for pass in Pass::ALL {
        if !passes.contains(&pass) {
            continue;
        }
        let r = match pass {
            Pass::SingleDeclarator => single_declarator(unit),
            Pass::UnaryExpansion => unary_expansion(unit),
            Pass::AssignExpansion => assign_expansion(unit),
            Pass::StructAssignDecomposition => struct_assign_decomposition(unit),
            Pass::NormalizeReturn => {
                let env = TypeEnv::from_unit(unit);
                let file_names = file_scope_names(unit);
                let mut r = PassReport::default();
                for f in unit.functions_mut() {
                    r.extend(normalize_return(f, &env, &file_names));
                }
                r
            }
        };
        report.extend(r);
    }
    report
}

/// Generates temporaries `<prefix><n>` that collide with nothing visible.
#[derive(Debug, Clone)]
pub struct TempNamer {
    prefix: String,
    counter: usize,
    taken: HashSet<String>,
}

impl TempNamer {
    pub fn new(prefix: impl Into<String>, taken: HashSet<String>) -> Self {
        Self {
            prefix: prefix.into(),
            counter: 0,
            taken,
        }
    }

    /// Namer for one function: avoids its locals, params and file-scope names.
    pub fn for_function(prefix: &str, f: &FunctionDef, file_names: &HashSet<String>) -> Self {
        let mut taken = file_names.clone();
        taken.extend(f.param_names().map(str::to_string));
        collect_block_names(&f.body, &mut taken);
        Self::new(prefix, taken)
    }

    pub fn fresh(&mut self) -> String {
        loop {
            let name = format!("{}{}", self.prefix, self.counter);
            self.counter += 1;
            if self.taken.insert(name.clone()) {
                return name;
            }
        }
    }
}

pub fn file_scope_names(unit: &SourceUnit) -> HashSet<String> {
    let mut names = HashSet::new();
    for item in &unit.items {
        match item {
            Item::Decl(d) => {
                for decl in &d.declarators {
                    names.insert(decl.name.clone());
                }
                if let Some(TagDef::Enum(e)) = &d.tag_def {
                    names.extend(e.variants.iter().map(|(n, _)| n.clone()));
                }
            }
            Item::Function(f) => {
                names.insert(f.name.clone());
            }
            _ => {}
        }
    }
    names
}

fn for_each_block_mut(b: &mut Block, f: &mut dyn FnMut(&mut Block)) {
    for s in &mut b.stmts {
        for_each_child_block_mut(s, &mut |child| for_each_block_mut(child, f));
    }
    f(b);
}

fn split_declaration(d: Declaration) -> Vec<Declaration> {
    let Declaration {
        storage,
        inline,
        tag_def,
        spec,
        declarators,
        loc,
    } = d;
    let mut out = Vec::with_capacity(declarators.len());
    let mut tag_def = tag_def;
    for decl in declarators {
        out.push(Declaration {
            storage,
            inline,
            tag_def: tag_def.take(),
            spec: spec.clone(),
            declarators: vec![decl],
            loc,
        });
    }
    out
}

fn splittable(d: &Declaration) -> Result<bool, &'static str> {
    if d.declarators.len() <= 1 {
        return Ok(false);
    }
    // Later declarators would have to name the tag, which an anonymous one lacks.
    match &d.tag_def {
        Some(TagDef::Record(RecordDef { tag: None, .. }))
        | Some(TagDef::Enum(EnumDef { tag: None, .. })) => Err("anonymous tag definition"),
        _ => Ok(true),
    }
}

/// Splits every multi-declarator declaration into single-declarator ones.
pub fn single_declarator(unit: &mut SourceUnit) -> PassReport {
    let mut report = PassReport::default();
    let mut items = Vec::with_capacity(unit.items.len());
    for item in std::mem::take(&mut unit.items) {
        match item {
            Item::Decl(d) => match splittable(&d) {
                Ok(true) => items.extend(split_declaration(d).into_iter().map(Item::Decl)),
                Ok(false) => items.push(Item::Decl(d)),
                Err(why) => {
                    report.skip(Pass::SingleDeclarator, "<file>", d.loc, why);
                    items.push(Item::Decl(d));
                }
            },
            Item::Function(mut f) => {
                let name = f.name.clone();
                for_each_block_mut(&mut f.body, &mut |b| {
                    let mut stmts = Vec::with_capacity(b.stmts.len());
                    for s in std::mem::take(&mut b.stmts) {
                        match s.kind {
                            StmtKind::Decl(d) => match splittable(&d) {
                                Ok(true) => stmts.extend(
                                    split_declaration(d)
                                        .into_iter()
                                        .map(|d| Stmt::new(StmtKind::Decl(d), s.loc)),
                                ),
                                Ok(false) => stmts.push(Stmt::new(StmtKind::Decl(d), s.loc)),
                                Err(why) => {
                                    report.skip(Pass::SingleDeclarator, &name, s.loc, why);
                                    stmts.push(Stmt::new(StmtKind::Decl(d), s.loc));
                                }
                            },
                            StmtKind::For {
                                init: ForInit::Decl(ref d),
                                ..
                            } if d.declarators.len() > 1 => {
                                report.skip(
                                    Pass::SingleDeclarator,
                                    &name,
                                    s.loc,
                                    "multiple declarators in a for-header",
                                );
                                stmts.push(s);
                            }
                            _ => stmts.push(s),
                        }
                    }
                    b.stmts = stmts;
                });
                items.push(Item::Function(f));
            }
            other => items.push(other),
        }
    }
    unit.items = items;
    report
}

/// `x++;`, `--x;` as whole statements become `x = x + 1;` / `x = x - 1;`.
pub fn unary_expansion(unit: &mut SourceUnit) -> PassReport {
    let mut report = PassReport::default();
    for f in unit.functions_mut() {
        let name = f.name.clone();
        for_each_block_mut(&mut f.body, &mut |b| {
            for s in &mut b.stmts {
                let StmtKind::Expr(e) = &mut s.kind else {
                    continue;
                };
                let Expr::Unary { op, operand } = e else {
                    continue;
                };
                if !op.is_inc_dec() {
                    continue;
                }
                if !operand.is_side_effect_free() {
                    report.skip(
                        Pass::UnaryExpansion,
                        &name,
                        s.loc,
                        "operand has side effects",
                    );
                    continue;
                }
                let bop = match op {
                    UnaryOp::PreInc | UnaryOp::PostInc => BinaryOp::Add,
                    _ => BinaryOp::Sub,
                };
                let target = (**operand).clone();
                *e = Expr::assign(target.clone(), Expr::binary(bop, target, Expr::int(1)));
            }
        });
    }
    report
}

/// Visits every expression of a function body with the location of the
/// statement holding it.
fn for_each_stmt_expr_mut(b: &mut Block, f: &mut dyn FnMut(&mut Expr, Loc)) {
    for s in &mut b.stmts {
        let loc = s.loc;
        match &mut s.kind {
            StmtKind::Decl(d) => decl_exprs_mut(d, loc, f),
            StmtKind::Expr(e) => f(e, loc),
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } | StmtKind::DoWhile { cond, .. } => {
                f(cond, loc)
            }
            StmtKind::For {
                init, cond, step, ..
            } => {
                match init {
                    ForInit::Expr(e) => f(e, loc),
                    ForInit::Decl(d) => decl_exprs_mut(d, loc, f),
                    ForInit::None => {}
                }
                if let Some(c) = cond {
                    f(c, loc);
                }
                if let Some(st) = step {
                    f(st, loc);
                }
            }
            StmtKind::Return(Some(e)) => f(e, loc),
            _ => {}
        }
        for_each_child_block_mut(s, &mut |child| for_each_stmt_expr_mut(child, f));
    }
}

fn decl_exprs_mut(d: &mut Declaration, loc: Loc, f: &mut dyn FnMut(&mut Expr, Loc)) {
    fn init_mut(i: &mut Initializer, loc: Loc, f: &mut dyn FnMut(&mut Expr, Loc)) {
        match i {
            Initializer::Expr(e) => f(e, loc),
            Initializer::List(items) => {
                for x in items {
                    init_mut(x, loc, f);
                }
            }
        }
    }
    for decl in &mut d.declarators {
        if let Some(i) = &mut decl.init {
            init_mut(i, loc, f);
        }
    }
}

/// `x op= e` becomes `x = x op (e)` wherever `x` is side-effect free.
pub fn assign_expansion(unit: &mut SourceUnit) -> PassReport {
    let mut report = PassReport::default();
    for f in unit.functions_mut() {
        let name = f.name.clone();
        for_each_stmt_expr_mut(&mut f.body, &mut |root, loc| {
            walk_expr_mut(root, &mut |e| {
                let Expr::CompoundAssign { op, lhs, rhs } = e else {
                    return;
                };
                if !lhs.is_side_effect_free() {
                    report.skip(
                        Pass::AssignExpansion,
                        &name,
                        loc,
                        format!("left-hand side of `{}=` has side effects", op.symbol()),
                    );
                    return;
                }
                let lhs = (**lhs).clone();
                let rhs = Expr::paren((**rhs).clone());
                *e = Expr::assign(lhs.clone(), Expr::binary(*op, lhs, rhs));
            });
        });
    }
    report
}

const STRUCT_TEMP: &str = "__rw_sm";
const RETURN_TEMP: &str = "__rw_ret";

fn is_temp(e: &Expr, prefix: &str) -> bool {
    e.as_ident().is_some_and(|n| n.starts_with(prefix))
}

/// `s->m = e;` / `s.m = e;` with a scalar member becomes
/// `T __rw_smN = e; s->m = __rw_smN;`.
pub fn struct_assign_decomposition(unit: &mut SourceUnit) -> PassReport {
    let env = TypeEnv::from_unit(unit);
    let file_names = file_scope_names(unit);
    let mut report = PassReport::default();
    for f in unit.functions_mut() {
        let mut namer = TempNamer::for_function(STRUCT_TEMP, f, &file_names);
        let mut scopes = Scopes::for_function(&env, f);
        let name = f.name.clone();
        decompose_block(&mut f.body, &mut scopes, &mut namer, &name, &mut report);
    }
    report
}

fn member_declared_type(scopes: &Scopes, lhs: &Expr) -> Option<TypeInfo> {
    let Expr::Member { base, field, arrow } = lhs.unparen() else {
        return None;
    };
    let mut bt = scopes.type_of(base)?;
    if *arrow {
        bt.pointer_depth = bt.pointer_depth.checked_sub(1)?;
    }
    if bt.pointer_depth != 0 || !bt.array_dims.is_empty() {
        return None;
    }
    let BaseType::Struct(key) = &bt.base else {
        return None;
    };
    scopes.env.field_type(key, field)
}

fn decompose_block(
    b: &mut Block,
    scopes: &mut Scopes,
    namer: &mut TempNamer,
    function: &str,
    report: &mut PassReport,
) {
    scopes.push();
    let mut out = Vec::with_capacity(b.stmts.len());
    for mut s in std::mem::take(&mut b.stmts) {
        match &mut s.kind {
            StmtKind::Decl(d) => scopes.declare_all(d),
            StmtKind::Expr(Expr::Assign { lhs, rhs })
                if matches!(lhs.unparen(), Expr::Member { .. }) && !is_temp(rhs, STRUCT_TEMP) =>
            {
                let Some(declared) = member_declared_type(scopes, lhs) else {
                    report.skip(
                        Pass::StructAssignDecomposition,
                        function,
                        s.loc,
                        "member type could not be resolved",
                    );
                    out.push(s);
                    continue;
                };
                let scalar = scopes.env.resolve(&declared).is_some_and(|t| t.is_scalar());
                if !scalar {
                    out.push(s);
                    continue;
                }
                if !lhs.is_side_effect_free() {
                    report.skip(
                        Pass::StructAssignDecomposition,
                        function,
                        s.loc,
                        "member base has side effects",
                    );
                    out.push(s);
                    continue;
                }
                let tmp = namer.fresh();
                let mut ty = declared;
                ty.is_const = false;
                let decl = Declaration {
                    storage: None,
                    inline: false,
                    tag_def: None,
                    spec: ty.base_only(),
                    declarators: vec![Declarator {
                        name: tmp.clone(),
                        ty: ty.clone(),
                        func: None,
                        init: Some(Initializer::Expr((**rhs).clone())),
                    }],
                    loc: s.loc,
                };
                scopes.declare(&tmp, ty);
                **rhs = Expr::ident(tmp);
                out.push(Stmt::new(StmtKind::Decl(decl), s.loc));
                out.push(s);
                continue;
            }
            StmtKind::For {
                init: ForInit::Decl(d),
                body,
                ..
            } => {
                scopes.push();
                scopes.declare_all(d);
                decompose_block(body, scopes, namer, function, report);
                scopes.pop();
                out.push(s);
                continue;
            }
            _ => {}
        }
        for_each_child_block_mut(&mut s, &mut |child| {
            decompose_block(child, scopes, namer, function, report)
        });
        out.push(s);
    }
    b.stmts = out;
    scopes.pop();
}

fn contains_return(b: &Block) -> bool {
    b.stmts.iter().any(|s| {
        if matches!(s.kind, StmtKind::Return(_)) {
            return true;
        }
        let mut found = false;
        crate::c_frontend::visit::for_each_child_block(s, &mut |c| found |= contains_return(c));
        found
    })
}

fn is_trivial_return(e: &Expr) -> bool {
    e.as_ident().is_some() || e.is_constant()
}

/// Every return of a non-void function returns a lone identifier or constant,
/// and every function has at least one return.
pub fn normalize_return(
    f: &mut FunctionDef,
    env: &TypeEnv,
    file_names: &HashSet<String>,
) -> PassReport {
    let mut report = PassReport::default();
    let mut namer = TempNamer::for_function(RETURN_TEMP, f, file_names);
    let void = f.returns_void();
    let mut ret_ty = f.return_type.clone();
    ret_ty.is_const = false;
    if !void {
        for_each_block_mut(&mut f.body, &mut |b| {
            let mut out = Vec::with_capacity(b.stmts.len());
            for s in std::mem::take(&mut b.stmts) {
                match s.kind {
                    StmtKind::Return(Some(e)) if !is_trivial_return(&e) => {
                        let tmp = namer.fresh();
                        out.push(Stmt::new(
                            StmtKind::Decl(Declaration {
                                storage: None,
                                inline: false,
                                tag_def: None,
                                spec: ret_ty.base_only(),
                                declarators: vec![Declarator {
                                    name: tmp.clone(),
                                    ty: ret_ty.clone(),
                                    func: None,
                                    init: Some(Initializer::Expr(e)),
                                }],
                                loc: s.loc,
                            }),
                            s.loc,
                        ));
                        out.push(Stmt::new(StmtKind::Return(Some(Expr::ident(tmp))), s.loc));
                    }
                    kind => out.push(Stmt::new(kind, s.loc)),
                }
            }
            b.stmts = out;
        });
    }
    if !contains_return(&f.body) {
        let loc = f.body.stmts.last().map(|s| s.loc).unwrap_or(f.loc);
        if void {
            f.body.stmts.push(Stmt::new(StmtKind::Return(None), loc));
        } else if env.resolve(&ret_ty).is_some_and(|t| t.is_scalar() || t.is_pointer()) {
            f.body
                .stmts
                .push(Stmt::new(StmtKind::Return(Some(Expr::int(0))), loc));
        } else {
            report.skip(
                Pass::NormalizeReturn,
                &f.name,
                f.loc,
                "aggregate return type with no return statement",
            );
        }
    }
    report
}
