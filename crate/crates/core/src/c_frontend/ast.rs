//! AST for the supported C subset.
//!
//! Every `if`/`while`/`for`/`do` body is stored as a [`Block`], even when the
//! source used a single unbraced statement. The printer always emits braces,
//! so this keeps `parse(print(u))` structurally equal to `u`.

use std::fmt;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Loc {
    pub line: u32,
    pub column: u32,
}

impl Loc {
    pub fn new(line: u32, column: u32) -> Self {
        Self { line, column }
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// One preprocessed translation unit.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceUnit {
    pub path: String,
    pub items: Vec<Item>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    /// `#include`/`#pragma` line kept verbatim.
    Directive { text: String, loc: Loc },
    Decl(Declaration),
    Function(FunctionDef),
    /// File-scope construct outside the modelled subset, kept as raw text.
    Opaque { text: String, loc: Loc },
}

impl SourceUnit {
    pub fn new(path: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            items: Vec::new(),
        }
    }

    pub fn functions(&self) -> impl Iterator<Item = &FunctionDef> {
        self.items.iter().filter_map(|it| match it {
            Item::Function(f) => Some(f),
            _ => None,
        })
    }

    pub fn functions_mut(&mut self) -> impl Iterator<Item = &mut FunctionDef> {
        self.items.iter_mut().filter_map(|it| match it {
            Item::Function(f) => Some(f),
            _ => None,
        })
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions().find(|f| f.name == name)
    }

    /// File-scope declarations (globals, typedefs, prototypes, tag definitions).
    pub fn globals(&self) -> impl Iterator<Item = &Declaration> {
        self.items.iter().filter_map(|it| match it {
            Item::Decl(d) => Some(d),
            _ => None,
        })
    }

    /// Struct/union definitions, wherever they appear at file scope.
    pub fn records(&self) -> impl Iterator<Item = &RecordDef> {
        self.globals().filter_map(|d| match &d.tag_def {
            Some(TagDef::Record(r)) => Some(r),
            _ => None,
        })
    }

    pub fn has_main(&self) -> bool {
        self.function("main").is_some()
    }

    /// Copy with every location zeroed, for structural comparison.
    pub fn without_locs(&self) -> SourceUnit {
        let mut u = self.clone();
        crate::c_frontend::visit::clear_locs(&mut u);
        u
    }

    pub fn structurally_eq(&self, other: &SourceUnit) -> bool {
        self.without_locs().items == other.without_locs().items
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Storage {
    Typedef,
    Extern,
    Static,
    Auto,
    Register,
}

impl Storage {
    pub fn keyword(self) -> &'static str {
        match self {
            Storage::Typedef => "typedef",
            Storage::Extern => "extern",
            Storage::Static => "static",
            Storage::Auto => "auto",
            Storage::Register => "register",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Declaration {
    pub storage: Option<Storage>,
    pub inline: bool,
    /// Inline `struct tag { ... }` / `enum tag { ... }` carried by the specifier.
    pub tag_def: Option<TagDef>,
    /// Base specifier shared by all declarators; also used when a declaration
    /// only defines a tag.
    pub spec: TypeInfo,
    pub declarators: Vec<Declarator>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Declarator {
    pub name: String,
    pub ty: TypeInfo,
    pub func: Option<FuncSig>,
    pub init: Option<Initializer>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuncSig {
    pub params: Vec<Param>,
    pub variadic: bool,
    /// `f(void)` as opposed to `f()`.
    pub explicit_void: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Initializer {
    Expr(Expr),
    List(Vec<Initializer>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum TagDef {
    Record(RecordDef),
    Enum(EnumDef),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordDef {
    /// Source tag; anonymous records get a synthesized `__anon_N` key in
    /// [`BaseType::Struct`] but keep `tag: None` here for printing.
    pub tag: Option<String>,
    pub key: String,
    pub fields: Vec<Field>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub name: String,
    pub ty: TypeInfo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnumDef {
    pub tag: Option<String>,
    pub key: String,
    pub variants: Vec<(String, Option<Expr>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: Option<String>,
    pub ty: TypeInfo,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDef {
    pub name: String,
    pub storage: Option<Storage>,
    pub inline: bool,
    pub return_type: TypeInfo,
    pub params: Vec<Param>,
    pub variadic: bool,
    pub explicit_void: bool,
    pub body: Block,
    pub loc: Loc,
}

impl FunctionDef {
    pub fn returns_void(&self) -> bool {
        self.return_type.base == BaseType::Void
            && self.return_type.pointer_depth == 0
            && self.return_type.array_dims.is_empty()
    }

    pub fn param_names(&self) -> impl Iterator<Item = &str> {
        self.params.iter().filter_map(|p| p.name.as_deref())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Block {
    pub stmts: Vec<Stmt>,
}

impl Block {
    pub fn new(stmts: Vec<Stmt>) -> Self {
        Self { stmts }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub loc: Loc,
}

impl Stmt {
    pub fn new(kind: StmtKind, loc: Loc) -> Self {
        Self { kind, loc }
    }

    pub fn expr(e: Expr, loc: Loc) -> Self {
        Self::new(StmtKind::Expr(e), loc)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Decl(Declaration),
    Expr(Expr),
    If {
        cond: Expr,
        then_branch: Block,
        else_branch: Option<Block>,
    },
    While {
        cond: Expr,
        body: Block,
    },
    DoWhile {
        body: Block,
        cond: Expr,
    },
    For {
        init: ForInit,
        cond: Option<Expr>,
        step: Option<Expr>,
        body: Block,
    },
    Return(Option<Expr>),
    Block(Block),
    Break,
    Continue,
    Null,
    /// Statement outside the modelled subset (`switch`, `goto`, labels);
    /// printed byte-for-byte and never rewritten.
    Opaque(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForInit {
    None,
    Expr(Expr),
    Decl(Declaration),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Mul,
    Div,
    Rem,
    Add,
    Sub,
    Shl,
    Shr,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
    BitAnd,
    BitXor,
    BitOr,
    LogAnd,
    LogOr,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        use BinaryOp::*;
        match self {
            Mul => "*",
            Div => "/",
            Rem => "%",
            Add => "+",
            Sub => "-",
            Shl => "<<",
            Shr => ">>",
            Lt => "<",
            Gt => ">",
            Le => "<=",
            Ge => ">=",
            Eq => "==",
            Ne => "!=",
            BitAnd => "&",
            BitXor => "^",
            BitOr => "|",
            LogAnd => "&&",
            LogOr => "||",
        }
    }

    /// Binding strength, higher binds tighter.
    pub fn precedence(self) -> u8 {
        use BinaryOp::*;
        match self {
            Mul | Div | Rem => 13,
            Add | Sub => 12,
            Shl | Shr => 11,
            Lt | Gt | Le | Ge => 10,
            Eq | Ne => 9,
            BitAnd => 8,
            BitXor => 7,
            BitOr => 6,
            LogAnd => 5,
            LogOr => 4,
        }
    }

    /// Operators usable in a compound assignment (`op=`).
    pub fn is_compoundable(self) -> bool {
        use BinaryOp::*;
        matches!(
            self,
            Mul | Div | Rem | Add | Sub | Shl | Shr | BitAnd | BitXor | BitOr
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Plus,
    Not,
    BitNot,
    Deref,
    AddrOf,
    PreInc,
    PreDec,
    PostInc,
    PostDec,
}

impl UnaryOp {
    pub fn is_postfix(self) -> bool {
        matches!(self, UnaryOp::PostInc | UnaryOp::PostDec)
    }

    pub fn is_inc_dec(self) -> bool {
        matches!(
            self,
            UnaryOp::PreInc | UnaryOp::PreDec | UnaryOp::PostInc | UnaryOp::PostDec
        )
    }

    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Plus => "+",
            UnaryOp::Not => "!",
            UnaryOp::BitNot => "~",
            UnaryOp::Deref => "*",
            UnaryOp::AddrOf => "&",
            UnaryOp::PreInc | UnaryOp::PostInc => "++",
            UnaryOp::PreDec | UnaryOp::PostDec => "--",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Ident(String),
    /// Literals keep their source spelling.
    IntLit(String),
    FloatLit(String),
    CharLit(String),
    /// Adjacent string literal pieces, each with its quotes.
    StrLit(Vec<String>),
    Paren(Box<Expr>),
    Unary {
        op: UnaryOp,
        operand: Box<Expr>,
    },
    Binary {
        op: BinaryOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Assign {
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    CompoundAssign {
        op: BinaryOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Call {
        callee: Box<Expr>,
        args: Vec<Expr>,
    },
    Member {
        base: Box<Expr>,
        field: String,
        arrow: bool,
    },
    Index {
        base: Box<Expr>,
        index: Box<Expr>,
    },
    Cast {
        ty: TypeInfo,
        expr: Box<Expr>,
    },
    Conditional {
        cond: Box<Expr>,
        then_expr: Box<Expr>,
        else_expr: Box<Expr>,
    },
    SizeofType(TypeInfo),
    SizeofExpr(Box<Expr>),
    Comma(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn ident(name: impl Into<String>) -> Self {
        Expr::Ident(name.into())
    }

    pub fn int(v: i64) -> Self {
        Expr::IntLit(v.to_string())
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn assign(lhs: Expr, rhs: Expr) -> Self {
        Expr::Assign {
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn call(name: &str, args: Vec<Expr>) -> Self {
        Expr::Call {
            callee: Box::new(Expr::ident(name)),
            args,
        }
    }

    pub fn paren(e: Expr) -> Self {
        Expr::Paren(Box::new(e))
    }

    /// Strips any number of enclosing parentheses.
    pub fn unparen(&self) -> &Expr {
        let mut e = self;
        while let Expr::Paren(inner) = e {
            e = inner;
        }
        e
    }

    /// The plain identifier this expression names, if any.
    pub fn as_ident(&self) -> Option<&str> {
        match self.unparen() {
            Expr::Ident(n) => Some(n),
            _ => None,
        }
    }

    /// Left-hand side variable of an assignment when it is a plain identifier.
    pub fn assigned_ident(&self) -> Option<&str> {
        match self {
            Expr::Assign { lhs, .. } | Expr::CompoundAssign { lhs, .. } => lhs.as_ident(),
            Expr::Unary { op, operand } if op.is_inc_dec() => operand.as_ident(),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        match self.unparen() {
            Expr::IntLit(_) | Expr::FloatLit(_) | Expr::CharLit(_) => true,
            Expr::Unary {
                op: UnaryOp::Neg | UnaryOp::Plus,
                operand,
            } => operand.is_constant(),
            _ => false,
        }
    }

    /// True when evaluating the expression cannot write memory or call out.
    pub fn is_side_effect_free(&self) -> bool {
        match self {
            Expr::Ident(_)
            | Expr::IntLit(_)
            | Expr::FloatLit(_)
            | Expr::CharLit(_)
            | Expr::StrLit(_)
            | Expr::SizeofType(_)
            | Expr::SizeofExpr(_) => true,
            Expr::Paren(e) | Expr::Cast { expr: e, .. } => e.is_side_effect_free(),
            Expr::Unary { op, operand } => !op.is_inc_dec() && operand.is_side_effect_free(),
            Expr::Binary { lhs, rhs, .. } => lhs.is_side_effect_free() && rhs.is_side_effect_free(),
            Expr::Member { base, .. } => base.is_side_effect_free(),
            Expr::Index { base, index } => base.is_side_effect_free() && index.is_side_effect_free(),
            Expr::Conditional {
                cond,
                then_expr,
                else_expr,
            } => {
                cond.is_side_effect_free()
                    && then_expr.is_side_effect_free()
                    && else_expr.is_side_effect_free()
            }
            Expr::Comma(a, b) => a.is_side_effect_free() && b.is_side_effect_free(),
            Expr::Assign { .. } | Expr::CompoundAssign { .. } | Expr::Call { .. } => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Signedness {
    Implicit,
    Signed,
    Unsigned,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BaseType {
    Void,
    Bool,
    Char,
    Short,
    Int,
    Long,
    LongLong,
    Float,
    Double,
    LongDouble,
    /// Struct key (source tag or synthesized `__anon_N`).
    Struct(String),
    Enum(String),
    /// Typedef name not yet resolved to its target.
    Typedef(String),
}

impl BaseType {
    pub fn is_arithmetic(&self) -> bool {
        matches!(
            self,
            BaseType::Bool
                | BaseType::Char
                | BaseType::Short
                | BaseType::Int
                | BaseType::Long
                | BaseType::LongLong
                | BaseType::Float
                | BaseType::Double
                | BaseType::LongDouble
                | BaseType::Enum(_)
        )
    }

    pub fn is_floating(&self) -> bool {
        matches!(self, BaseType::Float | BaseType::Double | BaseType::LongDouble)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeInfo {
    pub base: BaseType,
    pub signedness: Signedness,
    pub is_const: bool,
    pub pointer_depth: u8,
    /// Outermost dimension first; `None` for `[]`.
    pub array_dims: Vec<Option<Expr>>,
}

impl TypeInfo {
    pub fn new(base: BaseType) -> Self {
        Self {
            base,
            signedness: Signedness::Implicit,
            is_const: false,
            pointer_depth: 0,
            array_dims: Vec::new(),
        }
    }

    pub fn int() -> Self {
        Self::new(BaseType::Int)
    }

    pub fn double() -> Self {
        Self::new(BaseType::Double)
    }

    pub fn pointer_to(mut self) -> Self {
        self.pointer_depth += 1;
        self
    }

    pub fn is_scalar(&self) -> bool {
        self.pointer_depth == 0 && self.array_dims.is_empty() && self.base.is_arithmetic()
    }

    pub fn is_pointer(&self) -> bool {
        self.pointer_depth > 0 && self.array_dims.is_empty()
    }

    pub fn is_unsigned(&self) -> bool {
        self.signedness == Signedness::Unsigned || self.base == BaseType::Bool
    }

    /// Same type with the array and pointer layers removed.
    pub fn base_only(&self) -> TypeInfo {
        TypeInfo {
            base: self.base.clone(),
            signedness: self.signedness,
            is_const: self.is_const,
            pointer_depth: 0,
            array_dims: Vec::new(),
        }
    }
}
