//! Recursive-descent parser for the supported C subset.

use std::collections::HashSet;

use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use super::FrontendError;

type PResult<T> = Result<T, FrontendError>;

/// Typedef names assumed to come from the standard headers that are passed
/// through as directives.
pub const KNOWN_TYPEDEFS: &[&str] = &[
    "size_t",
    "ssize_t",
    "ptrdiff_t",
    "intptr_t",
    "uintptr_t",
    "int8_t",
    "int16_t",
    "int32_t",
    "int64_t",
    "uint8_t",
    "uint16_t",
    "uint32_t",
    "uint64_t",
    "FILE",
    "Range",
];

const TYPE_KEYWORDS: &[&str] = &[
    "void", "char", "short", "int", "long", "float", "double", "signed", "unsigned", "_Bool",
    "struct", "enum", "union", "const", "volatile",
];

const STORAGE_KEYWORDS: &[&str] = &[
    "typedef", "extern", "static", "auto", "register", "inline", "__inline", "__inline__",
];

pub fn parse_c(source: &str, path: &str) -> PResult<SourceUnit> {
    let toks = tokenize(source, path)?;
    let mut p = Parser {
        src: source,
        path,
        toks,
        pos: 0,
        typedefs: KNOWN_TYPEDEFS.iter().map(|s| s.to_string()).collect(),
        anon: 0,
    };
    p.unit()
}

struct Parser<'a> {
    src: &'a str,
    path: &'a str,
    toks: Vec<Token>,
    pos: usize,
    typedefs: HashSet<String>,
    anon: usize,
}

#[derive(Default)]
struct Specifiers {
    storage: Option<Storage>,
    inline: bool,
    ty: Option<TypeInfo>,
    tag_def: Option<TagDef>,
}

struct RawDeclarator {
    name: Option<String>,
    ty: TypeInfo,
    func: Option<FuncSig>,
    loc: Loc,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, n: usize) -> &Token {
        let idx = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[idx]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if !matches!(t.kind, TokenKind::Eof) {
            self.pos += 1;
        }
        t
    }

    fn at_punct(&self, p: &str) -> bool {
        self.peek().is_punct(p)
    }

    fn at_kw(&self, k: &str) -> bool {
        self.peek().is_ident(k)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.at_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error_at(&self, tok: &Token, message: impl Into<String>) -> FrontendError {
        FrontendError::Syntax {
            path: self.path.to_string(),
            line: tok.loc.line,
            column: tok.loc.column,
            message: message.into(),
        }
    }

    fn unsupported(&self, tok: &Token, construct: impl Into<String>) -> FrontendError {
        FrontendError::Unsupported {
            path: self.path.to_string(),
            line: tok.loc.line,
            column: tok.loc.column,
            construct: construct.into(),
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<Token> {
        if self.at_punct(p) {
            Ok(self.bump())
        } else {
            let t = self.peek().clone();
            Err(self.error_at(&t, format!("expected `{p}`, found {}", t.describe())))
        }
    }

    fn expect_ident(&mut self) -> PResult<String> {
        let t = self.peek().clone();
        match &t.kind {
            TokenKind::Ident(n) if !is_keyword(n) => {
                self.bump();
                Ok(n.clone())
            }
            _ => Err(self.error_at(&t, format!("expected identifier, found {}", t.describe()))),
        }
    }

    fn is_type_start(&self, tok: &Token) -> bool {
        match &tok.kind {
            TokenKind::Ident(n) => TYPE_KEYWORDS.contains(&n.as_str()) || self.typedefs.contains(n),
            _ => false,
        }
    }

    fn is_decl_start(&self) -> bool {
        let t = self.peek();
        match &t.kind {
            TokenKind::Ident(n) => {
                if STORAGE_KEYWORDS.contains(&n.as_str()) || TYPE_KEYWORDS.contains(&n.as_str()) {
                    return true;
                }
                if self.typedefs.contains(n) {
                    // `T x`, `T *x`; a typedef name followed by an operator is an expression.
                    let next = self.peek_at(1);
                    return matches!(&next.kind, TokenKind::Ident(_)) || next.is_punct("*");
                }
                false
            }
            _ => false,
        }
    }

    /// True if a `union` keyword appears among the specifiers starting here.
    fn specifiers_mention_union(&self) -> bool {
        let mut i = self.pos;
        while let TokenKind::Ident(n) = &self.toks[i].kind {
            if n == "union" {
                return true;
            }
            if !(STORAGE_KEYWORDS.contains(&n.as_str()) || n == "const" || n == "volatile") {
                return false;
            }
            i += 1;
        }
        false
    }

    fn text_between(&self, first: usize, last: usize) -> String {
        self.src[self.toks[first].start..self.toks[last].end].to_string()
    }

    /// Consumes tokens up to and including a `;` at bracket depth zero.
    fn skip_to_semicolon(&mut self) -> PResult<usize> {
        let mut depth = 0i32;
        loop {
            let t = self.peek().clone();
            match &t.kind {
                TokenKind::Eof => return Err(self.error_at(&t, "unexpected end of file")),
                TokenKind::Punct("{") | TokenKind::Punct("(") | TokenKind::Punct("[") => depth += 1,
                TokenKind::Punct("}") | TokenKind::Punct(")") | TokenKind::Punct("]") => {
                    depth -= 1
                }
                TokenKind::Punct(";") if depth == 0 => {
                    let idx = self.pos;
                    self.bump();
                    return Ok(idx);
                }
                _ => {}
            }
            self.bump();
        }
    }

    /// Consumes a balanced `open ... close` group; returns the index of `close`.
    fn skip_balanced(&mut self, open: &str, close: &str) -> PResult<usize> {
        self.expect_punct(open)?;
        let mut depth = 1;
        loop {
            let t = self.peek().clone();
            if matches!(t.kind, TokenKind::Eof) {
                return Err(self.error_at(&t, format!("unbalanced `{open}`")));
            }
            if t.is_punct(open) {
                depth += 1;
            } else if t.is_punct(close) {
                depth -= 1;
                if depth == 0 {
                    let idx = self.pos;
                    self.bump();
                    return Ok(idx);
                }
            }
            self.bump();
        }
    }

    // ---- file scope ----

    fn unit(&mut self) -> PResult<SourceUnit> {
        let mut unit = SourceUnit::new(self.path);
        loop {
            let t = self.peek().clone();
            match &t.kind {
                TokenKind::Eof => break,
                TokenKind::Directive(text) => {
                    let word = text[1..].trim_start();
                    if word.starts_with("include") || word.starts_with("pragma") {
                        self.bump();
                        unit.items.push(Item::Directive {
                            text: text.clone(),
                            loc: t.loc,
                        });
                    } else {
                        let name = word.split_whitespace().next().unwrap_or("");
                        return Err(self.unsupported(
                            &t,
                            format!("preprocessor directive `#{name}` (run the preprocessor first)"),
                        ));
                    }
                }
                TokenKind::Punct(";") => {
                    self.bump();
                }
                _ => {
                    if self.specifiers_mention_union() {
                        let first = self.pos;
                        let last = self.skip_to_semicolon()?;
                        unit.items.push(Item::Opaque {
                            text: self.text_between(first, last),
                            loc: t.loc,
                        });
                        continue;
                    }
                    let item = self.external_decl()?;
                    unit.items.push(item);
                }
            }
        }
        let mut seen = HashSet::new();
        for f in unit.functions() {
            if !seen.insert(f.name.clone()) {
                return Err(FrontendError::Syntax {
                    path: self.path.to_string(),
                    line: f.loc.line,
                    column: f.loc.column,
                    message: format!("redefinition of function `{}`", f.name),
                });
            }
        }
        Ok(unit)
    }

    fn external_decl(&mut self) -> PResult<Item> {
        let start = self.peek().clone();
        let specs = self.specifiers(true)?;
        let spec_ty = specs
            .ty
            .clone()
            .ok_or_else(|| self.error_at(&start, format!("expected declaration, found {}", start.describe())))?;
        if self.eat_punct(";") {
            return Ok(Item::Decl(Declaration {
                storage: specs.storage,
                inline: specs.inline,
                tag_def: specs.tag_def,
                spec: spec_ty,
                declarators: Vec::new(),
                loc: start.loc,
            }));
        }
        let first = self.declarator(&spec_ty, false)?;
        if first.func.is_some() && self.at_punct("{") {
            let sig = first.func.unwrap();
            for p in &sig.params {
                if p.name.is_none() {
                    return Err(self.error_at(&start, "parameter name omitted in function definition"));
                }
            }
            let mut names = HashSet::new();
            for p in &sig.params {
                let n = p.name.as_ref().unwrap();
                if !names.insert(n.clone()) {
                    return Err(FrontendError::Syntax {
                        path: self.path.to_string(),
                        line: p.loc.line,
                        column: p.loc.column,
                        message: format!("duplicate parameter `{n}`"),
                    });
                }
            }
            let body = self.block()?;
            return Ok(Item::Function(FunctionDef {
                name: first.name.unwrap(),
                storage: specs.storage,
                inline: specs.inline,
                return_type: first.ty,
                params: sig.params,
                variadic: sig.variadic,
                explicit_void: sig.explicit_void,
                body,
                loc: first.loc,
            }));
        }
        let decl = self.finish_declaration(specs, spec_ty, first, start.loc)?;
        Ok(Item::Decl(decl))
    }

    fn finish_declaration(
        &mut self,
        specs: Specifiers,
        spec_ty: TypeInfo,
        first: RawDeclarator,
        loc: Loc,
    ) -> PResult<Declaration> {
        let mut declarators = Vec::new();
        let mut cur = first;
        loop {
            let name = match cur.name {
                Some(n) => n,
                None => {
                    let t = self.peek().clone();
                    return Err(self.error_at(&t, "expected declarator name"));
                }
            };
            let init = if self.eat_punct("=") {
                Some(self.initializer()?)
            } else {
                None
            };
            if specs.storage == Some(Storage::Typedef) {
                self.typedefs.insert(name.clone());
            }
            declarators.push(Declarator {
                name,
                ty: cur.ty,
                func: cur.func,
                init,
            });
            if self.eat_punct(",") {
                cur = self.declarator(&spec_ty, false)?;
                continue;
            }
            self.expect_punct(";")?;
            break;
        }
        Ok(Declaration {
            storage: specs.storage,
            inline: specs.inline,
            tag_def: specs.tag_def,
            spec: spec_ty,
            declarators,
            loc,
        })
    }

    fn initializer(&mut self) -> PResult<Initializer> {
        if self.at_punct("{") {
            self.bump();
            let mut items = Vec::new();
            while !self.at_punct("}") {
                if self.at_punct(".") || self.at_punct("[") {
                    let t = self.peek().clone();
                    return Err(self.unsupported(&t, "designated initializer"));
                }
                items.push(self.initializer()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
            self.expect_punct("}")?;
            Ok(Initializer::List(items))
        } else {
            Ok(Initializer::Expr(self.assign_expr()?))
        }
    }

    // ---- specifiers and declarators ----

    fn specifiers(&mut self, allow_storage: bool) -> PResult<Specifiers> {
        let mut specs = Specifiers::default();
        let mut is_const = false;
        let mut signedness = Signedness::Implicit;
        let mut longs = 0;
        let mut base: Option<BaseType> = None;
        let mut saw_int = false;
        loop {
            let t = self.peek().clone();
            let word = match &t.kind {
                TokenKind::Ident(w) => w.clone(),
                _ => break,
            };
            match word.as_str() {
                "typedef" | "extern" | "static" | "auto" | "register" if allow_storage => {
                    if specs.storage.is_some() {
                        return Err(self.error_at(&t, "multiple storage classes"));
                    }
                    specs.storage = Some(match word.as_str() {
                        "typedef" => Storage::Typedef,
                        "extern" => Storage::Extern,
                        "static" => Storage::Static,
                        "auto" => Storage::Auto,
                        _ => Storage::Register,
                    });
                }
                "inline" | "__inline" | "__inline__" if allow_storage => specs.inline = true,
                "const" => is_const = true,
                "volatile" => {}
                "signed" => signedness = Signedness::Signed,
                "unsigned" => signedness = Signedness::Unsigned,
                "long" => longs += 1,
                "short" => base = Some(BaseType::Short),
                "int" => saw_int = true,
                "char" => base = Some(BaseType::Char),
                "float" => base = Some(BaseType::Float),
                "double" => base = Some(BaseType::Double),
                "void" => base = Some(BaseType::Void),
                "_Bool" => base = Some(BaseType::Bool),
                "union" => return Err(self.unsupported(&t, "union")),
                "struct" | "enum" => {
                    if base.is_some() {
                        return Err(self.error_at(&t, "two or more data types in declaration"));
                    }
                    self.bump();
                    let (b, def) = if word == "struct" {
                        self.struct_spec()?
                    } else {
                        self.enum_spec()?
                    };
                    base = Some(b);
                    if def.is_some() {
                        specs.tag_def = def;
                    }
                    continue;
                }
                w if self.typedefs.contains(w)
                    && base.is_none()
                    && longs == 0
                    && !saw_int
                    && signedness == Signedness::Implicit =>
                {
                    base = Some(BaseType::Typedef(w.to_string()));
                }
                _ => break,
            }
            self.bump();
        }
        let base = match (base, longs) {
            (Some(BaseType::Double), 1) => Some(BaseType::LongDouble),
            (Some(b), 0) => Some(b),
            (Some(b), _) => {
                let t = self.peek().clone();
                return Err(self.error_at(&t, format!("`long` cannot qualify {b:?}")));
            }
            (None, 0) if saw_int || signedness != Signedness::Implicit => Some(BaseType::Int),
            (None, 0) => None,
            (None, 1) => Some(BaseType::Long),
            (None, _) => Some(BaseType::LongLong),
        };
        specs.ty = base.map(|b| TypeInfo {
            base: b,
            signedness,
            is_const,
            pointer_depth: 0,
            array_dims: Vec::new(),
        });
        Ok(specs)
    }

    fn next_anon(&mut self) -> String {
        let k = format!("__anon_{}", self.anon);
        self.anon += 1;
        k
    }

    fn struct_spec(&mut self) -> PResult<(BaseType, Option<TagDef>)> {
        let tag = if matches!(&self.peek().kind, TokenKind::Ident(n) if !is_keyword(n)) {
            Some(self.expect_ident()?)
        } else {
            None
        };
        if !self.at_punct("{") {
            let Some(tag) = tag else {
                let t = self.peek().clone();
                return Err(self.error_at(&t, "expected struct tag or `{`"));
            };
            return Ok((BaseType::Struct(tag), None));
        }
        self.bump();
        let mut fields = Vec::new();
        while !self.at_punct("}") {
            let t = self.peek().clone();
            let specs = self.specifiers(false)?;
            if specs.tag_def.is_some() {
                return Err(self.unsupported(&t, "nested struct or enum definition"));
            }
            let spec_ty = specs
                .ty
                .ok_or_else(|| self.error_at(&t, format!("expected field type, found {}", t.describe())))?;
            loop {
                let d = self.declarator(&spec_ty, false)?;
                if self.at_punct(":") {
                    let t = self.peek().clone();
                    return Err(self.unsupported(&t, "bit-field"));
                }
                if d.func.is_some() {
                    return Err(self.unsupported(&t, "function declarator in struct"));
                }
                let name = d
                    .name
                    .ok_or_else(|| self.error_at(&t, "anonymous struct field"))?;
                fields.push(Field { name, ty: d.ty });
                if !self.eat_punct(",") {
                    break;
                }
            }
            self.expect_punct(";")?;
        }
        self.expect_punct("}")?;
        let key = match &tag {
            Some(t) => t.clone(),
            None => self.next_anon(),
        };
        Ok((
            BaseType::Struct(key.clone()),
            Some(TagDef::Record(RecordDef { tag, key, fields })),
        ))
    }

    fn enum_spec(&mut self) -> PResult<(BaseType, Option<TagDef>)> {
        let tag = if matches!(&self.peek().kind, TokenKind::Ident(n) if !is_keyword(n)) {
            Some(self.expect_ident()?)
        } else {
            None
        };
        if !self.at_punct("{") {
            let Some(tag) = tag else {
                let t = self.peek().clone();
                return Err(self.error_at(&t, "expected enum tag or `{`"));
            };
            return Ok((BaseType::Enum(tag), None));
        }
        self.bump();
        let mut variants = Vec::new();
        while !self.at_punct("}") {
            let name = self.expect_ident()?;
            let value = if self.eat_punct("=") {
                Some(self.conditional_expr()?)
            } else {
                None
            };
            variants.push((name, value));
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct("}")?;
        let key = match &tag {
            Some(t) => t.clone(),
            None => self.next_anon(),
        };
        Ok((
            BaseType::Enum(key.clone()),
            Some(TagDef::Enum(EnumDef { tag, key, variants })),
        ))
    }

    /// Parses `*`s, an optional name, then one function suffix or array suffixes.
    fn declarator(&mut self, spec: &TypeInfo, abstract_ok: bool) -> PResult<RawDeclarator> {
        let mut ty = spec.clone();
        while self.eat_punct("*") {
            ty.pointer_depth += 1;
            while self.at_kw("const") || self.at_kw("volatile") || self.at_kw("restrict") {
                self.bump();
            }
        }
        let loc = self.peek().loc;
        if self.at_punct("(") && !abstract_ok {
            let t = self.peek().clone();
            return Err(self.unsupported(&t, "parenthesized declarator (function pointer)"));
        }
        let name = if matches!(&self.peek().kind, TokenKind::Ident(n) if !is_keyword(n)) {
            Some(self.expect_ident()?)
        } else if abstract_ok {
            None
        } else {
            let t = self.peek().clone();
            return Err(self.error_at(&t, format!("expected identifier, found {}", t.describe())));
        };
        let mut func = None;
        if self.at_punct("(") && name.is_some() {
            func = Some(self.param_list()?);
        } else {
            while self.eat_punct("[") {
                if self.eat_punct("]") {
                    ty.array_dims.push(None);
                } else {
                    let e = self.assign_expr()?;
                    self.expect_punct("]")?;
                    ty.array_dims.push(Some(e));
                }
            }
        }
        Ok(RawDeclarator { name, ty, func, loc })
    }

    fn param_list(&mut self) -> PResult<FuncSig> {
        self.expect_punct("(")?;
        let mut sig = FuncSig {
            params: Vec::new(),
            variadic: false,
            explicit_void: false,
        };
        if self.eat_punct(")") {
            return Ok(sig);
        }
        if self.at_kw("void") && self.peek_at(1).is_punct(")") {
            self.bump();
            self.bump();
            sig.explicit_void = true;
            return Ok(sig);
        }
        loop {
            if self.eat_punct("...") {
                sig.variadic = true;
                break;
            }
            let t = self.peek().clone();
            let specs = self.specifiers(false)?;
            if specs.tag_def.is_some() {
                return Err(self.unsupported(&t, "tag definition in parameter list"));
            }
            let spec_ty = specs
                .ty
                .ok_or_else(|| self.error_at(&t, format!("expected parameter type, found {}", t.describe())))?;
            let d = self.declarator(&spec_ty, true)?;
            if d.func.is_some() {
                return Err(self.unsupported(&t, "function-typed parameter"));
            }
            sig.params.push(Param {
                name: d.name,
                ty: d.ty,
                loc: d.loc,
            });
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct(")")?;
        Ok(sig)
    }

    fn type_name(&mut self) -> PResult<TypeInfo> {
        let t = self.peek().clone();
        let specs = self.specifiers(false)?;
        let spec = specs
            .ty
            .ok_or_else(|| self.error_at(&t, format!("expected type name, found {}", t.describe())))?;
        let d = self.declarator(&spec, true)?;
        if d.name.is_some() {
            return Err(self.error_at(&t, "unexpected identifier in type name"));
        }
        Ok(d.ty)
    }

    // ---- statements ----

    fn block(&mut self) -> PResult<Block> {
        self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.at_punct("}") {
            if matches!(self.peek().kind, TokenKind::Eof) {
                let t = self.peek().clone();
                return Err(self.error_at(&t, "expected `}` before end of file"));
            }
            stmts.push(self.stmt()?);
        }
        self.bump();
        Ok(Block::new(stmts))
    }

    fn body(&mut self) -> PResult<Block> {
        let s = self.stmt()?;
        Ok(match s.kind {
            StmtKind::Block(b) => b,
            _ => Block::new(vec![s]),
        })
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let t = self.peek().clone();
        let loc = t.loc;
        if let TokenKind::Directive(_) = &t.kind {
            return Err(self.unsupported(&t, "preprocessor directive inside a function"));
        }
        if t.is_punct("{") {
            return Ok(Stmt::new(StmtKind::Block(self.block()?), loc));
        }
        if t.is_punct(";") {
            self.bump();
            return Ok(Stmt::new(StmtKind::Null, loc));
        }
        if let TokenKind::Ident(word) = &t.kind {
            match word.as_str() {
                "if" => {
                    self.bump();
                    self.expect_punct("(")?;
                    let cond = self.expr()?;
                    self.expect_punct(")")?;
                    let then_branch = self.body()?;
                    let else_branch = if self.at_kw("else") {
                        self.bump();
                        Some(self.body()?)
                    } else {
                        None
                    };
                    return Ok(Stmt::new(
                        StmtKind::If {
                            cond,
                            then_branch,
                            else_branch,
                        },
                        loc,
                    ));
                }
                "while" => {
                    self.bump();
                    self.expect_punct("(")?;
                    let cond = self.expr()?;
                    self.expect_punct(")")?;
                    let body = self.body()?;
                    return Ok(Stmt::new(StmtKind::While { cond, body }, loc));
                }
                "do" => {
                    self.bump();
                    let body = self.body()?;
                    if !self.at_kw("while") {
                        let t = self.peek().clone();
                        return Err(self.error_at(&t, "expected `while` after do-body"));
                    }
                    self.bump();
                    self.expect_punct("(")?;
                    let cond = self.expr()?;
                    self.expect_punct(")")?;
                    self.expect_punct(";")?;
                    return Ok(Stmt::new(StmtKind::DoWhile { body, cond }, loc));
                }
                "for" => {
                    self.bump();
                    self.expect_punct("(")?;
                    let init = if self.eat_punct(";") {
                        ForInit::None
                    } else if self.is_decl_start() {
                        ForInit::Decl(self.local_decl()?)
                    } else {
                        let e = self.expr()?;
                        self.expect_punct(";")?;
                        ForInit::Expr(e)
                    };
                    let cond = if self.at_punct(";") {
                        None
                    } else {
                        Some(self.expr()?)
                    };
                    self.expect_punct(";")?;
                    let step = if self.at_punct(")") {
                        None
                    } else {
                        Some(self.expr()?)
                    };
                    self.expect_punct(")")?;
                    let body = self.body()?;
                    return Ok(Stmt::new(
                        StmtKind::For {
                            init,
                            cond,
                            step,
                            body,
                        },
                        loc,
                    ));
                }
                "return" => {
                    self.bump();
                    let e = if self.at_punct(";") {
                        None
                    } else {
                        Some(self.expr()?)
                    };
                    self.expect_punct(";")?;
                    return Ok(Stmt::new(StmtKind::Return(e), loc));
                }
                "break" => {
                    self.bump();
                    self.expect_punct(";")?;
                    return Ok(Stmt::new(StmtKind::Break, loc));
                }
                "continue" => {
                    self.bump();
                    self.expect_punct(";")?;
                    return Ok(Stmt::new(StmtKind::Continue, loc));
                }
                "switch" => {
                    let first = self.pos;
                    self.bump();
                    self.skip_balanced("(", ")")?;
                    let last = if self.at_punct("{") {
                        self.skip_balanced("{", "}")?
                    } else {
                        self.skip_to_semicolon()?
                    };
                    return Ok(Stmt::new(StmtKind::Opaque(self.text_between(first, last)), loc));
                }
                "goto" => {
                    let first = self.pos;
                    let last = self.skip_to_semicolon()?;
                    return Ok(Stmt::new(StmtKind::Opaque(self.text_between(first, last)), loc));
                }
                "case" | "default" => {
                    return Err(self.error_at(&t, format!("`{word}` label outside switch")));
                }
                "else" => return Err(self.error_at(&t, "`else` without a previous `if`")),
                _ => {}
            }
            if !is_keyword(word) && self.peek_at(1).is_punct(":") && !self.typedefs.contains(word) {
                let first = self.pos;
                self.bump();
                let last = self.pos;
                self.bump();
                return Ok(Stmt::new(StmtKind::Opaque(self.text_between(first, last)), loc));
            }
        }
        if self.is_decl_start() {
            if self.specifiers_mention_union() {
                let first = self.pos;
                let last = self.skip_to_semicolon()?;
                return Ok(Stmt::new(StmtKind::Opaque(self.text_between(first, last)), loc));
            }
            let d = self.local_decl()?;
            return Ok(Stmt::new(StmtKind::Decl(d), loc));
        }
        let e = self.expr()?;
        self.expect_punct(";")?;
        Ok(Stmt::expr(e, loc))
    }

    fn local_decl(&mut self) -> PResult<Declaration> {
        let start = self.peek().clone();
        let specs = self.specifiers(true)?;
        let spec_ty = specs
            .ty
            .clone()
            .ok_or_else(|| self.error_at(&start, "expected type specifier"))?;
        if self.eat_punct(";") {
            return Ok(Declaration {
                storage: specs.storage,
                inline: specs.inline,
                tag_def: specs.tag_def,
                spec: spec_ty,
                declarators: Vec::new(),
                loc: start.loc,
            });
        }
        let first = self.declarator(&spec_ty, false)?;
        if first.func.is_some() && self.at_punct("{") {
            return Err(self.unsupported(&start, "nested function definition"));
        }
        self.finish_declaration(specs, spec_ty, first, start.loc)
    }

    // ---- expressions ----

    fn expr(&mut self) -> PResult<Expr> {
        let mut e = self.assign_expr()?;
        while self.eat_punct(",") {
            let rhs = self.assign_expr()?;
            e = Expr::Comma(Box::new(e), Box::new(rhs));
        }
        Ok(e)
    }

    fn assign_expr(&mut self) -> PResult<Expr> {
        let lhs = self.conditional_expr()?;
        let t = self.peek().clone();
        let op = match &t.kind {
            TokenKind::Punct("=") => None,
            TokenKind::Punct(p) if p.len() >= 2 && p.ends_with('=') => match *p {
                "+=" => Some(BinaryOp::Add),
                "-=" => Some(BinaryOp::Sub),
                "*=" => Some(BinaryOp::Mul),
                "/=" => Some(BinaryOp::Div),
                "%=" => Some(BinaryOp::Rem),
                "&=" => Some(BinaryOp::BitAnd),
                "|=" => Some(BinaryOp::BitOr),
                "^=" => Some(BinaryOp::BitXor),
                "<<=" => Some(BinaryOp::Shl),
                ">>=" => Some(BinaryOp::Shr),
                _ => return Ok(lhs),
            },
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.assign_expr()?;
        Ok(match op {
            None => Expr::assign(lhs, rhs),
            Some(op) => Expr::CompoundAssign {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            },
        })
    }

    fn conditional_expr(&mut self) -> PResult<Expr> {
        let cond = self.binary_expr(4)?;
        if self.eat_punct("?") {
            let then_expr = self.expr()?;
            self.expect_punct(":")?;
            let else_expr = self.conditional_expr()?;
            return Ok(Expr::Conditional {
                cond: Box::new(cond),
                then_expr: Box::new(then_expr),
                else_expr: Box::new(else_expr),
            });
        }
        Ok(cond)
    }

    fn peek_binary_op(&self) -> Option<BinaryOp> {
        use BinaryOp::*;
        let TokenKind::Punct(p) = &self.peek().kind else {
            return None;
        };
        Some(match *p {
            "*" => Mul,
            "/" => Div,
            "%" => Rem,
            "+" => Add,
            "-" => Sub,
            "<<" => Shl,
            ">>" => Shr,
            "<" => Lt,
            ">" => Gt,
            "<=" => Le,
            ">=" => Ge,
            "==" => Eq,
            "!=" => Ne,
            "&" => BitAnd,
            "^" => BitXor,
            "|" => BitOr,
            "&&" => LogAnd,
            "||" => LogOr,
            _ => return None,
        })
    }

    fn binary_expr(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary_expr()?;
        while let Some(op) = self.peek_binary_op() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary_expr(prec + 1)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary_expr(&mut self) -> PResult<Expr> {
        let t = self.peek().clone();
        let op = match &t.kind {
            TokenKind::Punct("++") => Some(UnaryOp::PreInc),
            TokenKind::Punct("--") => Some(UnaryOp::PreDec),
            TokenKind::Punct("-") => Some(UnaryOp::Neg),
            TokenKind::Punct("+") => Some(UnaryOp::Plus),
            TokenKind::Punct("!") => Some(UnaryOp::Not),
            TokenKind::Punct("~") => Some(UnaryOp::BitNot),
            TokenKind::Punct("*") => Some(UnaryOp::Deref),
            TokenKind::Punct("&") => Some(UnaryOp::AddrOf),
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            let operand = self.unary_expr()?;
            return Ok(Expr::Unary {
                op,
                operand: Box::new(operand),
            });
        }
        if t.is_ident("sizeof") {
            self.bump();
            if self.at_punct("(") && self.is_type_start(&self.peek_at(1).clone()) {
                self.bump();
                let ty = self.type_name()?;
                self.expect_punct(")")?;
                return Ok(Expr::SizeofType(ty));
            }
            let operand = self.unary_expr()?;
            return Ok(Expr::SizeofExpr(Box::new(operand)));
        }
        if t.is_punct("(") && self.is_type_start(&self.peek_at(1).clone()) {
            self.bump();
            let ty = self.type_name()?;
            self.expect_punct(")")?;
            if self.at_punct("{") {
                let t = self.peek().clone();
                return Err(self.unsupported(&t, "compound literal"));
            }
            let operand = self.unary_expr()?;
            return Ok(Expr::Cast {
                ty,
                expr: Box::new(operand),
            });
        }
        self.postfix_expr()
    }

    fn postfix_expr(&mut self) -> PResult<Expr> {
        let mut e = self.primary_expr()?;
        loop {
            if self.eat_punct("[") {
                let index = self.expr()?;
                self.expect_punct("]")?;
                e = Expr::Index {
                    base: Box::new(e),
                    index: Box::new(index),
                };
            } else if self.eat_punct("(") {
                let mut args = Vec::new();
                if !self.at_punct(")") {
                    loop {
                        args.push(self.assign_expr()?);
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                }
                self.expect_punct(")")?;
                e = Expr::Call {
                    callee: Box::new(e),
                    args,
                };
            } else if self.at_punct(".") || self.at_punct("->") {
                let arrow = self.bump().is_punct("->");
                let field = self.expect_ident()?;
                e = Expr::Member {
                    base: Box::new(e),
                    field,
                    arrow,
                };
            } else if self.eat_punct("++") {
                e = Expr::Unary {
                    op: UnaryOp::PostInc,
                    operand: Box::new(e),
                };
            } else if self.eat_punct("--") {
                e = Expr::Unary {
                    op: UnaryOp::PostDec,
                    operand: Box::new(e),
                };
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn primary_expr(&mut self) -> PResult<Expr> {
        let t = self.peek().clone();
        match &t.kind {
            TokenKind::Ident(n) if !is_keyword(n) => {
                self.bump();
                Ok(Expr::Ident(n.clone()))
            }
            TokenKind::IntLit(s) => {
                self.bump();
                Ok(Expr::IntLit(s.clone()))
            }
            TokenKind::FloatLit(s) => {
                self.bump();
                Ok(Expr::FloatLit(s.clone()))
            }
            TokenKind::CharLit(s) => {
                self.bump();
                Ok(Expr::CharLit(s.clone()))
            }
            TokenKind::StrLit(_) => {
                let mut pieces = Vec::new();
                while let TokenKind::StrLit(s) = &self.peek().kind {
                    pieces.push(s.clone());
                    self.bump();
                }
                Ok(Expr::StrLit(pieces))
            }
            TokenKind::Punct("(") => {
                self.bump();
                if self.at_punct("{") {
                    let t = self.peek().clone();
                    return Err(self.unsupported(&t, "statement expression"));
                }
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(Expr::paren(e))
            }
            _ => Err(self.error_at(&t, format!("expected expression, found {}", t.describe()))),
        }
    }
}

pub fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        "auto"
            | "break"
            | "case"
            | "char"
            | "const"
            | "continue"
            | "default"
            | "do"
            | "double"
            | "else"
            | "enum"
            | "extern"
            | "float"
            | "for"
            | "goto"
            | "if"
            | "inline"
            | "int"
            | "long"
            | "register"
            | "restrict"
            | "return"
            | "short"
            | "signed"
            | "sizeof"
            | "static"
            | "struct"
            | "switch"
            | "typedef"
            | "union"
            | "unsigned"
            | "void"
            | "volatile"
            | "while"
            | "_Bool"
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c_frontend::print_c;

    fn parse(src: &str) -> SourceUnit {
        parse_c(src, "t.c").unwrap_or_else(|e| panic!("{e}"))
    }

    #[test]
    fn minimal_unit() {
        let u = parse("int f(void){return 0;}");
        assert_eq!(u.functions().count(), 1);
        let f = u.function("f").unwrap();
        assert!(f.params.is_empty());
        assert!(f.explicit_void);
        assert_eq!(f.body.stmts.len(), 1);
        assert!(matches!(f.body.stmts[0].kind, StmtKind::Return(Some(_))));
    }

    #[test]
    fn multi_declarator_global_kept() {
        let u = parse("int a, b;");
        let g: Vec<_> = u.globals().collect();
        assert_eq!(g.len(), 1);
        let names: Vec<_> = g[0].declarators.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, ["a", "b"]);
    }

    #[test]
    fn pointer_binds_to_declarator() {
        let u = parse("int *p, q;");
        let d = u.globals().next().unwrap();
        assert_eq!(d.declarators[0].ty.pointer_depth, 1);
        assert_eq!(d.declarators[1].ty.pointer_depth, 0);
    }

    // (source, expected line, expected column)
    const INVALID: &[(&str, u32, u32)] = &[
        ("int f({", 1, 7),
        ("int f(void) { return 0 }", 1, 24),
        ("int f(void) {\n  x = ;\n}", 2, 7),
        ("int f(void) {\n  if x) {}\n}", 2, 6),
        ("int f(void) {\n  int 3x;\n}", 2, 7),
        ("int g(int a, int a) { return a; }", 1, 18),
        ("int f(void) { return 0; }\nint f(void) { return 1; }", 2, 5),
        ("int f(void) {", 1, 14),
        ("int x = 1 +;", 1, 12),
        ("struct s { int a } x;", 1, 18),
    ];

    #[test]
    fn invalid_inputs_report_location() {
        for (src, line, col) in INVALID {
            match parse_c(src, "bad.c") {
                Err(e @ FrontendError::Syntax { .. }) => {
                    assert_eq!(e.line_column(), (*line, *col), "{src:?}: {e}");
                }
                other => panic!("{src:?}: expected syntax error, got {other:?}"),
            }
        }
    }

    #[test]
    fn unsupported_declaration_constructs_are_named() {
        for (src, needle) in [
            ("#define N 3\nint x;", "#define"),
            ("int (*fp)(int);", "function pointer"),
            ("struct s { int a : 3; };", "bit-field"),
            ("int x[] = { [2] = 1 };", "designated"),
        ] {
            match parse_c(src, "u.c") {
                Err(FrontendError::Unsupported { construct, .. }) => {
                    assert!(construct.contains(needle), "{construct}")
                }
                other => panic!("{src:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn opaque_statements_keep_source_text() {
        let src = "int f(int x) {\n    switch (x) { case 1: return 2; default: break; }\n    goto out;\nout:\n    return x;\n}\n";
        let u = parse(src);
        let f = u.function("f").unwrap();
        let texts: Vec<_> = f
            .body
            .stmts
            .iter()
            .filter_map(|s| match &s.kind {
                StmtKind::Opaque(t) => Some(t.as_str()),
                _ => None,
            })
            .collect();
        assert_eq!(
            texts,
            [
                "switch (x) { case 1: return 2; default: break; }",
                "goto out;",
                "out:"
            ]
        );
        let printed = print_c(&u);
        assert!(printed.contains("    switch (x) { case 1: return 2; default: break; }\n"));
    }

    #[test]
    fn unions_are_opaque_at_file_scope() {
        let u = parse("union u { int a; float b; };\nint x;");
        assert!(matches!(&u.items[0], Item::Opaque { text, .. } if text == "union u { int a; float b; };"));
    }

    #[test]
    fn casts_and_sizeof_need_type_names() {
        let u = parse("typedef double real_T;\nint f(int a) { long n; n = sizeof(long) + sizeof a; return (int) (real_T) a; }");
        let printed = print_c(&u);
        assert!(printed.contains("n = sizeof(long) + sizeof a;"), "{printed}");
        assert!(printed.contains("return (int) (real_T) a;"), "{printed}");
    }

    #[test]
    fn statement_locs_point_into_the_file() {
        let src = "int f(int a) {\n  int b;\n  b = a;\n  return b;\n}\n";
        let u = parse(src);
        let locs: Vec<_> = u.function("f").unwrap().body.stmts.iter().map(|s| s.loc).collect();
        assert_eq!(locs, [Loc::new(2, 3), Loc::new(3, 3), Loc::new(4, 3)]);
    }
}
