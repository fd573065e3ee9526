//! Pretty-printer: one statement per line, four-space indent, braces always.

use super::ast::*;

pub fn print_c(unit: &SourceUnit) -> String {
    let mut p = Printer::default();
    let mut prev_was_fn = false;
    for (i, item) in unit.items.iter().enumerate() {
        let is_fn = matches!(item, Item::Function(_));
        if i > 0 && (is_fn || prev_was_fn) {
            p.out.push('\n');
        }
        match item {
            Item::Directive { text, .. } => {
                p.out.push_str(text);
                p.out.push('\n');
            }
            Item::Opaque { text, .. } => {
                p.out.push_str(text);
                p.out.push('\n');
            }
            Item::Decl(d) => {
                p.line(&declaration(d));
            }
            Item::Function(f) => p.function(f),
        }
        prev_was_fn = is_fn;
    }
    p.out
}

#[derive(Default)]
struct Printer {
    out: String,
    indent: usize,
}

impl Printer {
    fn line(&mut self, s: &str) {
        for _ in 0..self.indent {
            self.out.push_str("    ");
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn function(&mut self, f: &FunctionDef) {
        let mut head = String::new();
        if let Some(s) = f.storage {
            head.push_str(s.keyword());
            head.push(' ');
        }
        if f.inline {
            head.push_str("inline ");
        }
        let params = param_list(&f.params, f.variadic, f.explicit_void);
        head.push_str(&declarator_text(
            &f.return_type,
            &format!("{}({})", f.name, params),
        ));
        head.push_str(" {");
        self.line(&head);
        self.block_contents(&f.body);
        self.line("}");
    }

    fn block_contents(&mut self, b: &Block) {
        self.indent += 1;
        for s in &b.stmts {
            self.stmt(s);
        }
        self.indent -= 1;
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Decl(d) => self.line(&declaration(d)),
            StmtKind::Expr(e) => self.line(&format!("{};", expr(e))),
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                self.line(&format!("if ({}) {{", expr(cond)));
                self.if_tail(then_branch, else_branch.as_ref());
            }
            StmtKind::While { cond, body } => {
                self.line(&format!("while ({}) {{", expr(cond)));
                self.block_contents(body);
                self.line("}");
            }
            StmtKind::DoWhile { body, cond } => {
                self.line("do {");
                self.block_contents(body);
                self.line(&format!("}} while ({});", expr(cond)));
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                let init_s = match init {
                    ForInit::None => ";".to_string(),
                    ForInit::Expr(e) => format!("{};", expr(e)),
                    ForInit::Decl(d) => declaration(d),
                };
                let cond_s = cond.as_ref().map(|c| format!(" {}", expr(c))).unwrap_or_default();
                let step_s = step.as_ref().map(|c| format!(" {}", expr(c))).unwrap_or_default();
                self.line(&format!("for ({init_s}{cond_s};{step_s}) {{"));
                self.block_contents(body);
                self.line("}");
            }
            StmtKind::Return(None) => self.line("return;"),
            StmtKind::Return(Some(e)) => self.line(&format!("return {};", expr(e))),
            StmtKind::Block(b) => {
                self.line("{");
                self.block_contents(b);
                self.line("}");
            }
            StmtKind::Break => self.line("break;"),
            StmtKind::Continue => self.line("continue;"),
            StmtKind::Null => self.line(";"),
            StmtKind::Opaque(text) => {
                // Raw text is emitted as-is; only the first line is indented.
                for _ in 0..self.indent {
                    self.out.push_str("    ");
                }
                self.out.push_str(text);
                self.out.push('\n');
            }
        }
    }

    fn if_tail(&mut self, then_branch: &Block, else_branch: Option<&Block>) {
        self.block_contents(then_branch);
        match else_branch {
            None => self.line("}"),
            Some(b) => {
                if let [Stmt {
                    kind:
                        StmtKind::If {
                            cond,
                            then_branch,
                            else_branch,
                        },
                    ..
                }] = b.stmts.as_slice()
                {
                    self.line(&format!("}} else if ({}) {{", expr(cond)));
                    self.if_tail(then_branch, else_branch.as_ref());
                } else {
                    self.line("} else {");
                    self.block_contents(b);
                    self.line("}");
                }
            }
        }
    }
}

pub fn declaration(d: &Declaration) -> String {
    let mut s = String::new();
    if let Some(st) = d.storage {
        s.push_str(st.keyword());
        s.push(' ');
    }
    if d.inline {
        s.push_str("inline ");
    }
    match &d.tag_def {
        Some(def) => {
            if d.spec.is_const {
                s.push_str("const ");
            }
            s.push_str(&tag_def(def));
        }
        None => s.push_str(&specifier(&d.spec)),
    }
    for (i, decl) in d.declarators.iter().enumerate() {
        s.push_str(if i == 0 { " " } else { ", " });
        s.push_str(&declarator_suffix(decl));
        if let Some(init) = &decl.init {
            s.push_str(" = ");
            s.push_str(&initializer(init));
        }
    }
    s.push(';');
    s
}

fn declarator_suffix(d: &Declarator) -> String {
    let mut s = "*".repeat(d.ty.pointer_depth as usize);
    s.push_str(&d.name);
    if let Some(sig) = &d.func {
        s.push('(');
        s.push_str(&param_list(&sig.params, sig.variadic, sig.explicit_void));
        s.push(')');
    }
    s.push_str(&dims(&d.ty.array_dims));
    s
}

fn tag_def(def: &TagDef) -> String {
    match def {
        TagDef::Record(r) => {
            let mut s = String::from("struct ");
            if let Some(t) = &r.tag {
                s.push_str(t);
                s.push(' ');
            }
            s.push_str("{ ");
            for f in &r.fields {
                s.push_str(&declarator_text(&f.ty, &f.name));
                s.push_str("; ");
            }
            s.push('}');
            s
        }
        TagDef::Enum(e) => {
            let mut s = String::from("enum ");
            if let Some(t) = &e.tag {
                s.push_str(t);
                s.push(' ');
            }
            s.push_str("{ ");
            let vs: Vec<String> = e
                .variants
                .iter()
                .map(|(n, v)| match v {
                    Some(v) => format!("{n} = {}", expr(v)),
                    None => n.clone(),
                })
                .collect();
            s.push_str(&vs.join(", "));
            s.push_str(" }");
            s
        }
    }
}

fn initializer(init: &Initializer) -> String {
    match init {
        Initializer::Expr(e) => expr_prec(e, PREC_ASSIGN),
        Initializer::List(items) => {
            let parts: Vec<String> = items.iter().map(initializer).collect();
            format!("{{{}}}", parts.join(", "))
        }
    }
}

fn param_list(params: &[Param], variadic: bool, explicit_void: bool) -> String {
    if params.is_empty() && !variadic {
        return if explicit_void { "void".into() } else { String::new() };
    }
    let mut parts: Vec<String> = params
        .iter()
        .map(|p| match &p.name {
            Some(n) => declarator_text(&p.ty, n),
            None => type_name(&p.ty),
        })
        .collect();
    if variadic {
        parts.push("...".into());
    }
    parts.join(", ")
}

/// Base specifier text: qualifiers, signedness and base type.
pub fn specifier(ty: &TypeInfo) -> String {
    let mut s = String::new();
    if ty.is_const {
        s.push_str("const ");
    }
    match ty.signedness {
        Signedness::Implicit => {}
        Signedness::Signed => s.push_str("signed "),
        Signedness::Unsigned => s.push_str("unsigned "),
    }
    s.push_str(&match &ty.base {
        BaseType::Void => "void".to_string(),
        BaseType::Bool => "_Bool".to_string(),
        BaseType::Char => "char".to_string(),
        BaseType::Short => "short".to_string(),
        BaseType::Int => "int".to_string(),
        BaseType::Long => "long".to_string(),
        BaseType::LongLong => "long long".to_string(),
        BaseType::Float => "float".to_string(),
        BaseType::Double => "double".to_string(),
        BaseType::LongDouble => "long double".to_string(),
        BaseType::Struct(t) => format!("struct {t}"),
        BaseType::Enum(t) => format!("enum {t}"),
        BaseType::Typedef(t) => t.clone(),
    });
    s
}

/// `T *name[dims]`.
pub fn declarator_text(ty: &TypeInfo, name: &str) -> String {
    format!(
        "{} {}{}{}",
        specifier(ty),
        "*".repeat(ty.pointer_depth as usize),
        name,
        dims(&ty.array_dims)
    )
}

/// Abstract declarator form used in casts and `sizeof`.
pub fn type_name(ty: &TypeInfo) -> String {
    let mut s = specifier(ty);
    if ty.pointer_depth > 0 {
        s.push(' ');
        s.push_str(&"*".repeat(ty.pointer_depth as usize));
    }
    s.push_str(&dims(&ty.array_dims));
    s
}

fn dims(d: &[Option<Expr>]) -> String {
    d.iter()
        .map(|e| match e {
            Some(e) => format!("[{}]", expr(e)),
            None => "[]".to_string(),
        })
        .collect()
}

const PREC_COMMA: u8 = 1;
const PREC_ASSIGN: u8 = 2;
const PREC_COND: u8 = 3;
const PREC_UNARY: u8 = 14;
const PREC_POSTFIX: u8 = 15;
const PREC_PRIMARY: u8 = 16;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Comma(..) => PREC_COMMA,
        Expr::Assign { .. } | Expr::CompoundAssign { .. } => PREC_ASSIGN,
        Expr::Conditional { .. } => PREC_COND,
        Expr::Binary { op, .. } => op.precedence(),
        Expr::Unary { op, .. } if op.is_postfix() => PREC_POSTFIX,
        Expr::Unary { .. } | Expr::Cast { .. } | Expr::SizeofExpr(_) | Expr::SizeofType(_) => {
            PREC_UNARY
        }
        Expr::Call { .. } | Expr::Member { .. } | Expr::Index { .. } => PREC_POSTFIX,
        _ => PREC_PRIMARY,
    }
}

pub fn expr(e: &Expr) -> String {
    expr_prec(e, PREC_COMMA)
}

/// Prints `e`, parenthesizing if it binds looser than `min`.
fn expr_prec(e: &Expr, min: u8) -> String {
    let s = expr_raw(e);
    if precedence(e) < min {
        format!("({s})")
    } else {
        s
    }
}

fn expr_raw(e: &Expr) -> String {
    match e {
        Expr::Ident(n) => n.clone(),
        Expr::IntLit(s) | Expr::FloatLit(s) | Expr::CharLit(s) => s.clone(),
        Expr::StrLit(pieces) => pieces.join(" "),
        Expr::Paren(inner) => format!("({})", expr(inner)),
        Expr::Unary { op, operand } => {
            if op.is_postfix() {
                format!("{}{}", expr_prec(operand, PREC_POSTFIX), op.symbol())
            } else {
                let inner = expr_prec(operand, PREC_UNARY);
                // Avoid `- -x` fusing into `--x` and `&&`-style accidents.
                let sep = match (op, inner.chars().next()) {
                    (UnaryOp::Neg | UnaryOp::PreDec, Some('-'))
                    | (UnaryOp::Plus | UnaryOp::PreInc, Some('+'))
                    | (UnaryOp::AddrOf, Some('&')) => " ",
                    _ => "",
                };
                format!("{}{sep}{inner}", op.symbol())
            }
        }
        Expr::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            format!(
                "{} {} {}",
                expr_prec(lhs, p),
                op.symbol(),
                expr_prec(rhs, p + 1)
            )
        }
        Expr::Assign { lhs, rhs } => {
            format!("{} = {}", expr_prec(lhs, PREC_UNARY), expr_prec(rhs, PREC_ASSIGN))
        }
        Expr::CompoundAssign { op, lhs, rhs } => format!(
            "{} {}= {}",
            expr_prec(lhs, PREC_UNARY),
            op.symbol(),
            expr_prec(rhs, PREC_ASSIGN)
        ),
        Expr::Call { callee, args } => {
            let a: Vec<String> = args.iter().map(|x| expr_prec(x, PREC_ASSIGN)).collect();
            format!("{}({})", expr_prec(callee, PREC_POSTFIX), a.join(", "))
        }
        Expr::Member { base, field, arrow } => format!(
            "{}{}{}",
            expr_prec(base, PREC_POSTFIX),
            if *arrow { "->" } else { "." },
            field
        ),
        Expr::Index { base, index } => {
            format!("{}[{}]", expr_prec(base, PREC_POSTFIX), expr(index))
        }
        Expr::Cast { ty, expr: inner } => {
            format!("({}) {}", type_name(ty), expr_prec(inner, PREC_UNARY))
        }
        Expr::Conditional {
            cond,
            then_expr,
            else_expr,
        } => format!(
            "{} ? {} : {}",
            expr_prec(cond, PREC_COND + 1),
            expr(then_expr),
            expr_prec(else_expr, PREC_COND)
        ),
        Expr::SizeofType(ty) => format!("sizeof({})", type_name(ty)),
        Expr::SizeofExpr(inner) => format!("sizeof {}", expr_prec(inner, PREC_UNARY)),
        Expr::Comma(a, b) => format!("{}, {}", expr_prec(a, PREC_COMMA), expr_prec(b, PREC_ASSIGN)),
    }
}
