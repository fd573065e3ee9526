//! Monitorable sites: parameter entries, statement-level assignments and
//! variables read by return expressions.

use std::collections::HashSet;
use std::fmt;
use std::fmt::Write as _;

use crate::c_frontend::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum JoinPointKind {
    ParamEntry,
    Assignment,
    ReturnVar,
}

impl JoinPointKind {
    pub fn name(self) -> &'static str {
        match self {
            JoinPointKind::ParamEntry => "param-entry",
            JoinPointKind::Assignment => "assignment",
            JoinPointKind::ReturnVar => "return-var",
        }
    }
}

impl fmt::Display for JoinPointKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JoinPoint {
    pub kind: JoinPointKind,
    pub function: String,
    pub variable: String,
    pub loc: Loc,
    /// Resolved type; `None` when the name or a typedef could not be resolved.
    pub var_type: Option<TypeInfo>,
}

impl JoinPoint {
    pub fn key(&self) -> (String, String) {
        (self.function.clone(), self.variable.clone())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SelectionReport {
    pub selected: usize,
    pub advised: usize,
}

impl fmt::Display for SelectionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "selected\t{}\nadvised\t{}\n", self.selected, self.advised)
    }
}

pub fn is_monitorable(jp: &JoinPoint) -> bool {
    jp.var_type.as_ref().is_some_and(TypeInfo::is_scalar)
}

/// Every join point of the unit, in source order per function.
pub fn enumerate_joinpoints(unit: &SourceUnit) -> Vec<JoinPoint> {
    let mut out = Vec::new();
    visit_sites(unit, &mut |site| out.push(site.jp));
    out
}

/// Join points whose type could not be resolved, as diagnostics.
pub fn unresolved(jps: &[JoinPoint]) -> Vec<String> {
    jps.iter()
        .filter(|jp| jp.var_type.is_none())
        .map(|jp| {
            format!(
                "{}: cannot resolve the type of `{}` in `{}`; not monitored",
                jp.loc, jp.variable, jp.function
            )
        })
        .collect()
}

pub fn joinpoints_tsv(jps: &[JoinPoint]) -> String {
    let mut s = String::from("kind\tfunction\tvariable\tline\n");
    for jp in jps {
        let _ = writeln!(s, "{}\t{}\t{}\t{}", jp.kind, jp.function, jp.variable, jp.loc.line);
    }
    s
}

/// Where code for a site goes: position `index` in the block reached by
/// `path`, a sequence of (statement index, child block index) steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Anchor {
    pub path: Vec<(usize, usize)>,
    pub index: usize,
}

pub(crate) struct Site {
    pub jp: JoinPoint,
    pub anchor: Anchor,
    /// Distinct variables read by the assigned value, for assignments.
    pub fanin: Option<usize>,
}

/// Walks every site of the unit in source order. Parameter entries come
/// first in each function and are anchored after the body's leading
/// declarations.
pub(crate) fn visit_sites(unit: &SourceUnit, cb: &mut dyn FnMut(Site)) {
    let env = TypeEnv::from_unit(unit);
    for f in unit.functions() {
        let mut w = Walker {
            env: &env,
            scopes: Scopes::for_function(&env, f),
            function: &f.name,
            cb,
        };
        let entry = Anchor {
            path: Vec::new(),
            index: leading_decls(&f.body),
        };
        for p in &f.params {
            let Some(name) = &p.name else { continue };
            w.emit(JoinPoint {
                kind: JoinPointKind::ParamEntry,
                function: f.name.clone(),
                variable: name.clone(),
                loc: p.loc,
                var_type: env.resolve(&p.ty),
            }, entry.clone(), None);
        }
        let mut path = Vec::new();
        w.block(&f.body, &mut path);
    }
}

/// Blocks directly nested in `s`, in the order instrumentation visits them.
pub(crate) fn child_blocks(s: &Stmt) -> Vec<&Block> {
    match &s.kind {
        StmtKind::If {
            then_branch,
            else_branch,
            ..
        } => std::iter::once(then_branch).chain(else_branch.as_ref()).collect(),
        StmtKind::While { body, .. } | StmtKind::DoWhile { body, .. } | StmtKind::For { body, .. } => {
            vec![body]
        }
        StmtKind::Block(b) => vec![b],
        _ => Vec::new(),
    }
}

/// Number of declarations at the start of a block.
pub(crate) fn leading_decls(b: &Block) -> usize {
    b.stmts
        .iter()
        .take_while(|s| matches!(s.kind, StmtKind::Decl(_)))
        .count()
}

struct Walker<'a, 'c> {
    env: &'a TypeEnv,
    scopes: Scopes<'a>,
    function: &'a str,
    cb: &'c mut dyn FnMut(Site),
}

impl Walker<'_, '_> {
    fn emit(&mut self, jp: JoinPoint, anchor: Anchor, fanin: Option<usize>) {
        (self.cb)(Site {
            jp,
            anchor,
            fanin,
        });
    }

    fn jp(&self, kind: JoinPointKind, var: &str, loc: Loc) -> JoinPoint {
        JoinPoint {
            kind,
            function: self.function.to_string(),
            variable: var.to_string(),
            loc,
            var_type: self.scopes.type_of(&Expr::ident(var)),
        }
    }

    fn block(&mut self, b: &Block, path: &mut Vec<(usize, usize)>) {
        self.scopes.push();
        let lead = leading_decls(b);
        for (i, s) in b.stmts.iter().enumerate() {
            // Updates for the leading declarations wait until the run ends so
            // the block stays valid C89.
            let after = if i < lead { lead } else { i + 1 };
            match &s.kind {
                StmtKind::Decl(d) => {
                    self.scopes.declare_all(d);
                    if matches!(d.storage, Some(Storage::Static | Storage::Extern | Storage::Typedef)) {
                        continue;
                    }
                    for decl in &d.declarators {
                        let Some(Initializer::Expr(init)) = &decl.init else {
                            continue;
                        };
                        if decl.func.is_some() {
                            continue;
                        }
                        let fanin = fanin_of(init, None, &self.scopes, self.env);
                        let jp = self.jp(JoinPointKind::Assignment, &decl.name, s.loc);
                        let anchor = Anchor {
                            path: path.clone(),
                            index: after,
                        };
                        self.emit(jp, anchor, Some(fanin));
                    }
                }
                StmtKind::Expr(e) => {
                    if let Some((var, fanin)) = statement_assignment(e, &self.scopes, self.env) {
                        let jp = self.jp(JoinPointKind::Assignment, var, s.loc);
                        let anchor = Anchor {
                            path: path.clone(),
                            index: after,
                        };
                        self.emit(jp, anchor, Some(fanin));
                    }
                }
                StmtKind::Return(Some(e)) => {
                    let mut vars = Vec::new();
                    collect_vars(e, true, &self.scopes, self.env, &mut vars);
                    for v in vars {
                        let jp = self.jp(JoinPointKind::ReturnVar, &v, s.loc);
                        let anchor = Anchor {
                            path: path.clone(),
                            index: i,
                        };
                        self.emit(jp, anchor, None);
                    }
                }
                _ => {}
            }
            let for_decl = match &s.kind {
                StmtKind::For {
                    init: ForInit::Decl(d),
                    ..
                } => Some(d),
                _ => None,
            };
            if let Some(d) = for_decl {
                self.scopes.push();
                self.scopes.declare_all(d);
            }
            for (child, c) in child_blocks(s).into_iter().enumerate() {
                path.push((i, child));
                self.block(c, path);
                path.pop();
            }
            if for_decl.is_some() {
                self.scopes.pop();
            }
        }
        self.scopes.pop();
    }
}

/// A statement-level write to a plain identifier and its fanin.
fn statement_assignment<'e>(e: &'e Expr, scopes: &Scopes, env: &TypeEnv) -> Option<(&'e str, usize)> {
    let var = e.assigned_ident()?;
    let fanin = match e {
        Expr::Assign { rhs, .. } => fanin_of(rhs, None, scopes, env),
        Expr::CompoundAssign { rhs, .. } => fanin_of(rhs, Some(var), scopes, env),
        _ => fanin_of(&Expr::ident(var), None, scopes, env),
    };
    Some((var, fanin))
}

/// Distinct variables in `e`, not counting the callee or arguments of calls.
fn fanin_of(e: &Expr, extra: Option<&str>, scopes: &Scopes, env: &TypeEnv) -> usize {
    let mut vars = Vec::new();
    if let Some(x) = extra {
        vars.push(x.to_string());
    }
    collect_vars(e, false, scopes, env, &mut vars);
    vars.len()
}

fn is_variable(name: &str, scopes: &Scopes, env: &TypeEnv) -> bool {
    if scopes.is_local(name) {
        return true;
    }
    if scopes.lookup(name).is_some() {
        return !env.is_function(name) || env.global(name).is_some();
    }
    !env.is_enumerator(name) && !env.is_function(name)
}

/// Pushes each distinct variable read by `e`, in first-occurrence order.
/// Operands of `sizeof` are not evaluated and never count.
pub(crate) fn collect_vars(
    e: &Expr,
    into_calls: bool,
    scopes: &Scopes,
    env: &TypeEnv,
    out: &mut Vec<String>,
) {
    let mut seen: HashSet<String> = out.iter().cloned().collect();
    collect_rec(e, into_calls, scopes, env, out, &mut seen);
}

fn collect_rec(
    e: &Expr,
    into_calls: bool,
    scopes: &Scopes,
    env: &TypeEnv,
    out: &mut Vec<String>,
    seen: &mut HashSet<String>,
) {
    let rec = |x: &Expr, out: &mut Vec<String>, seen: &mut HashSet<String>| {
        collect_rec(x, into_calls, scopes, env, out, seen)
    };
    match e {
        Expr::Ident(n) => {
            if is_variable(n, scopes, env) && seen.insert(n.clone()) {
                out.push(n.clone());
            }
        }
        Expr::IntLit(_)
        | Expr::FloatLit(_)
        | Expr::CharLit(_)
        | Expr::StrLit(_)
        | Expr::SizeofType(_)
        | Expr::SizeofExpr(_) => {}
        Expr::Paren(x) | Expr::Cast { expr: x, .. } => rec(x, out, seen),
        Expr::Unary { operand, .. } => rec(operand, out, seen),
        Expr::Binary { lhs, rhs, .. }
        | Expr::Assign { lhs, rhs }
        | Expr::CompoundAssign { lhs, rhs, .. } => {
            rec(lhs, out, seen);
            rec(rhs, out, seen);
        }
        Expr::Comma(a, b) => {
            rec(a, out, seen);
            rec(b, out, seen);
        }
        Expr::Call { callee, args } => {
            if callee.as_ident().is_none() {
                rec(callee, out, seen);
            }
            if into_calls {
                for a in args {
                    rec(a, out, seen);
                }
            }
        }
        Expr::Member { base, .. } => rec(base, out, seen),
        Expr::Index { base, index } => {
            rec(base, out, seen);
            rec(index, out, seen);
        }
        Expr::Conditional {
            cond,
            then_expr,
            else_expr,
        } => {
            rec(cond, out, seen);
            rec(then_expr, out, seen);
            rec(else_expr, out, seen);
        }
    }
}
