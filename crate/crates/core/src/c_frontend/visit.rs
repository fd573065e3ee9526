//! Small traversal helpers shared by the passes.

use super::ast::*;

pub fn clear_locs(unit: &mut SourceUnit) {
    for item in &mut unit.items {
        match item {
            Item::Directive { loc, .. } | Item::Opaque { loc, .. } => *loc = Loc::default(),
            Item::Decl(d) => clear_decl_locs(d),
            Item::Function(f) => {
                f.loc = Loc::default();
                for p in &mut f.params {
                    p.loc = Loc::default();
                }
                clear_block_locs(&mut f.body);
            }
        }
    }
}

fn clear_decl_locs(d: &mut Declaration) {
    d.loc = Loc::default();
    for decl in &mut d.declarators {
        if let Some(sig) = &mut decl.func {
            for p in &mut sig.params {
                p.loc = Loc::default();
            }
        }
    }
}

fn clear_block_locs(b: &mut Block) {
    for s in &mut b.stmts {
        s.loc = Loc::default();
        match &mut s.kind {
            StmtKind::Decl(d) => clear_decl_locs(d),
            StmtKind::For { init, body, .. } => {
                if let ForInit::Decl(d) = init {
                    clear_decl_locs(d);
                }
                clear_block_locs(body);
            }
            _ => for_each_child_block_mut(s, &mut clear_block_locs),
        }
    }
}

/// Calls `f` on every block directly nested in `s` (not recursively).
pub fn for_each_child_block_mut(s: &mut Stmt, f: &mut dyn FnMut(&mut Block)) {
    match &mut s.kind {
        StmtKind::If {
            then_branch,
            else_branch,
            ..
        } => {
            f(then_branch);
            if let Some(b) = else_branch {
                f(b);
            }
        }
        StmtKind::While { body, .. } | StmtKind::DoWhile { body, .. } | StmtKind::For { body, .. } => {
            f(body)
        }
        StmtKind::Block(b) => f(b),
        _ => {}
    }
}

pub fn for_each_child_block(s: &Stmt, f: &mut dyn FnMut(&Block)) {
    match &s.kind {
        StmtKind::If {
            then_branch,
            else_branch,
            ..
        } => {
            f(then_branch);
            if let Some(b) = else_branch {
                f(b);
            }
        }
        StmtKind::While { body, .. } | StmtKind::DoWhile { body, .. } | StmtKind::For { body, .. } => {
            f(body)
        }
        StmtKind::Block(b) => f(b),
        _ => {}
    }
}

/// Applies `f` to every expression node, children before parents.
pub fn walk_expr_mut(e: &mut Expr, f: &mut dyn FnMut(&mut Expr)) {
    match e {
        Expr::Paren(x) | Expr::SizeofExpr(x) => walk_expr_mut(x, f),
        Expr::Unary { operand, .. } => walk_expr_mut(operand, f),
        Expr::Cast { expr, .. } => walk_expr_mut(expr, f),
        Expr::Binary { lhs, rhs, .. }
        | Expr::Assign { lhs, rhs }
        | Expr::CompoundAssign { lhs, rhs, .. } => {
            walk_expr_mut(lhs, f);
            walk_expr_mut(rhs, f);
        }
        Expr::Comma(a, b) => {
            walk_expr_mut(a, f);
            walk_expr_mut(b, f);
        }
        Expr::Call { callee, args } => {
            walk_expr_mut(callee, f);
            for a in args {
                walk_expr_mut(a, f);
            }
        }
        Expr::Member { base, .. } => walk_expr_mut(base, f),
        Expr::Index { base, index } => {
            walk_expr_mut(base, f);
            walk_expr_mut(index, f);
        }
        Expr::Conditional {
            cond,
            then_expr,
            else_expr,
        } => {
            walk_expr_mut(cond, f);
            walk_expr_mut(then_expr, f);
            walk_expr_mut(else_expr, f);
        }
        Expr::Ident(_)
        | Expr::IntLit(_)
        | Expr::FloatLit(_)
        | Expr::CharLit(_)
        | Expr::StrLit(_)
        | Expr::SizeofType(_) => {}
    }
    f(e);
}

pub fn walk_expr(e: &Expr, f: &mut dyn FnMut(&Expr)) {
    f(e);
    match e {
        Expr::Paren(x) | Expr::SizeofExpr(x) => walk_expr(x, f),
        Expr::Unary { operand, .. } => walk_expr(operand, f),
        Expr::Cast { expr, .. } => walk_expr(expr, f),
        Expr::Binary { lhs, rhs, .. }
        | Expr::Assign { lhs, rhs }
        | Expr::CompoundAssign { lhs, rhs, .. } => {
            walk_expr(lhs, f);
            walk_expr(rhs, f);
        }
        Expr::Comma(a, b) => {
            walk_expr(a, f);
            walk_expr(b, f);
        }
        Expr::Call { callee, args } => {
            walk_expr(callee, f);
            for a in args {
                walk_expr(a, f);
            }
        }
        Expr::Member { base, .. } => walk_expr(base, f),
        Expr::Index { base, index } => {
            walk_expr(base, f);
            walk_expr(index, f);
        }
        Expr::Conditional {
            cond,
            then_expr,
            else_expr,
        } => {
            walk_expr(cond, f);
            walk_expr(then_expr, f);
            walk_expr(else_expr, f);
        }
        Expr::Ident(_)
        | Expr::IntLit(_)
        | Expr::FloatLit(_)
        | Expr::CharLit(_)
        | Expr::StrLit(_)
        | Expr::SizeofType(_) => {}
    }
}

/// Every expression in a block, including nested statements, declarations
/// initializers and loop headers.
pub fn walk_block_exprs_mut(b: &mut Block, f: &mut dyn FnMut(&mut Expr)) {
    for s in &mut b.stmts {
        match &mut s.kind {
            StmtKind::Decl(d) => walk_decl_exprs_mut(d, f),
            StmtKind::Expr(e) => walk_expr_mut(e, f),
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } | StmtKind::DoWhile { cond, .. } => {
                walk_expr_mut(cond, f)
            }
            StmtKind::For {
                init, cond, step, ..
            } => {
                match init {
                    ForInit::Expr(e) => walk_expr_mut(e, f),
                    ForInit::Decl(d) => walk_decl_exprs_mut(d, f),
                    ForInit::None => {}
                }
                if let Some(c) = cond {
                    walk_expr_mut(c, f);
                }
                if let Some(st) = step {
                    walk_expr_mut(st, f);
                }
            }
            StmtKind::Return(Some(e)) => walk_expr_mut(e, f),
            _ => {}
        }
        for_each_child_block_mut(s, &mut |blk| walk_block_exprs_mut(blk, f));
    }
}

fn walk_decl_exprs_mut(d: &mut Declaration, f: &mut dyn FnMut(&mut Expr)) {
    for decl in &mut d.declarators {
        if let Some(init) = &mut decl.init {
            walk_init_mut(init, f);
        }
    }
}

fn walk_init_mut(init: &mut Initializer, f: &mut dyn FnMut(&mut Expr)) {
    match init {
        Initializer::Expr(e) => walk_expr_mut(e, f),
        Initializer::List(items) => {
            for i in items {
                walk_init_mut(i, f);
            }
        }
    }
}

/// Identifiers referenced or declared anywhere in a block.
pub fn collect_block_names(b: &Block, out: &mut std::collections::HashSet<String>) {
    for s in &b.stmts {
        let add_decl = |d: &Declaration, out: &mut std::collections::HashSet<String>| {
            for decl in &d.declarators {
                out.insert(decl.name.clone());
                if let Some(init) = &decl.init {
                    collect_init_names(init, out);
                }
            }
        };
        let add = |e: &Expr, out: &mut std::collections::HashSet<String>| {
            walk_expr(e, &mut |x| {
                if let Expr::Ident(n) = x {
                    out.insert(n.clone());
                }
            })
        };
        match &s.kind {
            StmtKind::Decl(d) => add_decl(d, out),
            StmtKind::Expr(e) => add(e, out),
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } | StmtKind::DoWhile { cond, .. } => {
                add(cond, out)
            }
            StmtKind::For {
                init, cond, step, ..
            } => {
                match init {
                    ForInit::Expr(e) => add(e, out),
                    ForInit::Decl(d) => add_decl(d, out),
                    ForInit::None => {}
                }
                if let Some(c) = cond {
                    add(c, out);
                }
                if let Some(st) = step {
                    add(st, out);
                }
            }
            StmtKind::Return(Some(e)) => add(e, out),
            StmtKind::Opaque(text) => {
                for w in text.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_')) {
                    if !w.is_empty() {
                        out.insert(w.to_string());
                    }
                }
            }
            _ => {}
        }
        for_each_child_block(s, &mut |blk| collect_block_names(blk, out));
    }
}

fn collect_init_names(init: &Initializer, out: &mut std::collections::HashSet<String>) {
    match init {
        Initializer::Expr(e) => walk_expr(e, &mut |x| {
            if let Expr::Ident(n) = x {
                out.insert(n.clone());
            }
        }),
        Initializer::List(items) => {
            for i in items {
                collect_init_names(i, out);
            }
        }
    }
}
