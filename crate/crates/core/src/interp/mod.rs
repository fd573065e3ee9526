//! Reference interpreter for the supported C subset.
//!
//! Runs original, normalized and instrumented programs in-process. The
//! runtime entry points (`update_range`, `rangeweaver_count`, the dump
//! functions) are provided natively with the same semantics and output
//! format as the C runtime library, so a campaign can execute without
//! compiling anything.
//!
//! Memory is modelled as objects made of scalar cells. A struct or array
//! occupies one cell per scalar leaf, so pointer arithmetic moves in units of
//! the pointee's cell count. Casts between pointers to differently shaped
//! types are rejected.

mod builtins;
mod ctype;

use std::collections::HashMap;
use std::rc::Rc;

use crate::c_frontend::*;
pub use ctype::CType;
use ctype::{common_type, wrap_int};

/// Exit codes reported for abnormal termination, matching a POSIX shell.
pub const EXIT_FPE: i32 = 136;
pub const EXIT_SEGV: i32 = 139;
pub const EXIT_ABORT: i32 = 134;
pub const EXIT_TIMEOUT: i32 = 124;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InterpError {
    #[error("program has no `main` function")]
    NoMain,
    #[error("{loc}: unsupported at run time: {what}")]
    Unsupported { loc: Loc, what: String },
    #[error("{loc}: {message}")]
    Type { loc: Loc, message: String },
    #[error("{loc}: undefined identifier `{name}`")]
    Undefined { loc: Loc, name: String },
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// `argv[1..]`.
    pub args: Vec<String>,
    pub program_name: String,
    /// Statement budget; exceeding it ends the run with [`EXIT_TIMEOUT`].
    pub max_steps: u64,
    pub max_depth: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            args: Vec::new(),
            program_name: "a.out".into(),
            max_steps: 50_000_000,
            max_depth: 4_000,
        }
    }
}

impl RunConfig {
    pub fn with_args(args: Vec<String>) -> Self {
        Self {
            args,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunOutcome {
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
    pub exit_code: i32,
    /// Text written by `rangeweaver_dump_ranges`, if it ran.
    pub range_dump: Option<String>,
    /// Text written by `rangeweaver_dump_counts`, if it ran.
    pub count_dump: Option<String>,
    pub steps: u64,
}

/// Interprets a program made of one or more translation units.
pub fn run(units: &[SourceUnit], config: &RunConfig) -> Result<RunOutcome, InterpError> {
    let mut merged = SourceUnit::new("<program>");
    for u in units {
        merged.items.extend(u.items.iter().cloned());
    }
    let env = TypeEnv::from_unit(&merged);
    let mut it = Interp::new(&merged, &env, config);
    it.execute()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Space {
    Null,
    Static,
    Stack,
    Stream,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Ptr {
    space: Space,
    obj: u32,
    idx: i64,
}

impl Ptr {
    const NULL: Ptr = Ptr {
        space: Space::Null,
        obj: 0,
        idx: 0,
    };

    fn is_null(&self) -> bool {
        self.space == Space::Null
    }

    fn offset(self, by: i64) -> Ptr {
        if self.is_null() {
            return self;
        }
        Ptr {
            idx: self.idx + by,
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Val {
    Int(i64),
    Float(f64),
    Ptr(Ptr),
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum RV {
    S(Val),
    Agg(Vec<Val>),
    Void,
}

type Typed = (RV, CType);

pub(crate) enum Trap {
    Exit(i32),
    Fault { code: i32, message: String },
    Error(InterpError),
}

impl From<InterpError> for Trap {
    fn from(e: InterpError) -> Self {
        Trap::Error(e)
    }
}

type R<T> = Result<T, Trap>;

enum Flow {
    Normal,
    Break,
    Continue,
    Return(Option<Typed>),
}

#[derive(Debug, Clone)]
struct FieldLayout {
    name: String,
    offset: usize,
    ty: CType,
}

#[derive(Debug, Clone)]
struct Layout {
    fields: Vec<FieldLayout>,
    cells: usize,
}

type Binding = (Ptr, CType);

#[derive(Default)]
struct Frame {
    scopes: Vec<HashMap<String, Binding>>,
    marks: Vec<usize>,
}

pub(crate) struct Interp<'a> {
    env: &'a TypeEnv,
    config: &'a RunConfig,
    functions: HashMap<&'a str, &'a FunctionDef>,
    file_decls: Vec<&'a Declaration>,
    statics: Vec<Vec<Val>>,
    stack: Vec<Vec<Val>>,
    globals: HashMap<String, Binding>,
    local_statics: HashMap<(String, Loc, String), Binding>,
    strings: HashMap<Vec<u8>, Ptr>,
    enumerators: HashMap<String, i64>,
    layouts: HashMap<String, Rc<Layout>>,
    frames: Vec<Frame>,
    current_fn: String,
    atexit: Vec<String>,
    loc: Loc,
    out: RunOutcome,
}

fn fault(code: i32, message: impl Into<String>) -> Trap {
    Trap::Fault {
        code,
        message: message.into(),
    }
}

impl<'a> Interp<'a> {
    fn new(unit: &'a SourceUnit, env: &'a TypeEnv, config: &'a RunConfig) -> Self {
        let mut functions = HashMap::new();
        let mut file_decls = Vec::new();
        for item in &unit.items {
            match item {
                Item::Function(f) => {
                    functions.insert(f.name.as_str(), f);
                }
                Item::Decl(d) => file_decls.push(d),
                _ => {}
            }
        }
        Interp {
            env,
            config,
            functions,
            file_decls,
            statics: Vec::new(),
            stack: Vec::new(),
            globals: HashMap::new(),
            local_statics: HashMap::new(),
            strings: HashMap::new(),
            enumerators: HashMap::new(),
            layouts: HashMap::new(),
            frames: Vec::new(),
            current_fn: String::new(),
            atexit: Vec::new(),
            loc: Loc::default(),
            out: RunOutcome::default(),
        }
    }

    fn execute(&mut self) -> Result<RunOutcome, InterpError> {
        let main = *self.functions.get("main").ok_or(InterpError::NoMain)?;
        let code = match self.start(main) {
            Ok(code) => code,
            Err(Trap::Exit(code)) => code,
            Err(Trap::Fault { code, message }) => {
                self.out.stderr.extend_from_slice(message.as_bytes());
                self.out.stderr.push(b'\n');
                self.out.exit_code = code;
                return Ok(std::mem::take(&mut self.out));
            }
            Err(Trap::Error(e)) => return Err(e),
        };
        // Only a normal exit runs the handlers, like the C library.
        match self.run_atexit() {
            Ok(()) | Err(Trap::Exit(_)) => {}
            Err(Trap::Fault { code, message }) => {
                self.out.stderr.extend_from_slice(message.as_bytes());
                self.out.exit_code = code;
                return Ok(std::mem::take(&mut self.out));
            }
            Err(Trap::Error(e)) => return Err(e),
        }
        self.out.exit_code = code & 0xff;
        Ok(std::mem::take(&mut self.out))
    }

    fn run_atexit(&mut self) -> R<()> {
        while let Some(name) = self.atexit.pop() {
            self.call_named(&name, Vec::new())?;
        }
        Ok(())
    }

    fn start(&mut self, main: &'a FunctionDef) -> R<i32> {
        self.init_enumerators()?;
        self.init_globals()?;
        let mut args = Vec::new();
        if !main.params.is_empty() {
            let mut ptrs = Vec::new();
            let mut argv = vec![self.config.program_name.clone()];
            argv.extend(self.config.args.iter().cloned());
            for a in &argv {
                let mut bytes = a.as_bytes().to_vec();
                bytes.push(0);
                let cells = bytes.iter().map(|b| Val::Int(*b as i8 as i64)).collect();
                ptrs.push(Val::Ptr(self.alloc_static(cells)));
            }
            ptrs.push(Val::Ptr(Ptr::NULL));
            let argv_ptr = self.alloc_static(ptrs);
            args.push((RV::S(Val::Int(argv.len() as i64)), CType::INT));
            args.push((
                RV::S(Val::Ptr(argv_ptr)),
                CType::ptr(CType::ptr(CType::CHAR)),
            ));
            args.truncate(main.params.len());
        }
        let (rv, _) = self.call_user(main, args)?;
        Ok(match rv {
            RV::S(Val::Int(v)) => v as i32,
            _ => 0,
        })
    }

    // ---- memory ----

    fn alloc_static(&mut self, cells: Vec<Val>) -> Ptr {
        self.statics.push(cells);
        Ptr {
            space: Space::Static,
            obj: (self.statics.len() - 1) as u32,
            idx: 0,
        }
    }

    fn alloc_stack(&mut self, cells: Vec<Val>) -> Ptr {
        self.stack.push(cells);
        Ptr {
            space: Space::Stack,
            obj: (self.stack.len() - 1) as u32,
            idx: 0,
        }
    }

    fn object(&self, p: Ptr) -> R<&Vec<Val>> {
        let o = match p.space {
            Space::Static => self.statics.get(p.obj as usize),
            Space::Stack => self.stack.get(p.obj as usize),
            _ => None,
        };
        o.ok_or_else(|| fault(EXIT_SEGV, format!("{}: invalid memory access", self.loc)))
    }

    fn object_mut(&mut self, p: Ptr) -> R<&mut Vec<Val>> {
        let loc = self.loc;
        let o = match p.space {
            Space::Static => self.statics.get_mut(p.obj as usize),
            Space::Stack => self.stack.get_mut(p.obj as usize),
            _ => None,
        };
        o.ok_or_else(|| fault(EXIT_SEGV, format!("{loc}: invalid memory access")))
    }

    fn cells(&self, p: Ptr, n: usize) -> R<&[Val]> {
        let o = self.object(p)?;
        let start = usize::try_from(p.idx).ok();
        match start {
            Some(s) if s + n <= o.len() => Ok(&o[s..s + n]),
            _ => Err(fault(
                EXIT_SEGV,
                format!("{}: out-of-bounds access", self.loc),
            )),
        }
    }

    fn cells_mut(&mut self, p: Ptr, n: usize) -> R<&mut [Val]> {
        let loc = self.loc;
        let o = self.object_mut(p)?;
        let start = usize::try_from(p.idx).ok();
        match start {
            Some(s) if s + n <= o.len() => Ok(&mut o[s..s + n]),
            _ => Err(fault(EXIT_SEGV, format!("{loc}: out-of-bounds access"))),
        }
    }

    fn load(&self, p: Ptr) -> R<Val> {
        Ok(self.cells(p, 1)?[0].clone())
    }

    fn store(&mut self, p: Ptr, v: Val) -> R<()> {
        self.cells_mut(p, 1)?[0] = v;
        Ok(())
    }

    // ---- types ----

    fn err_type(&self, message: impl Into<String>) -> Trap {
        Trap::Error(InterpError::Type {
            loc: self.loc,
            message: message.into(),
        })
    }

    fn unsupported(&self, what: impl Into<String>) -> Trap {
        Trap::Error(InterpError::Unsupported {
            loc: self.loc,
            what: what.into(),
        })
    }

    fn base_ctype(&self, t: &TypeInfo) -> R<CType> {
        let signed = t.signedness != Signedness::Unsigned;
        Ok(match &t.base {
            BaseType::Void => CType::Void,
            BaseType::Bool => CType::Bool,
            BaseType::Char => CType::Int { bytes: 1, signed },
            BaseType::Short => CType::Int { bytes: 2, signed },
            BaseType::Int | BaseType::Enum(_) => CType::Int { bytes: 4, signed },
            BaseType::Long | BaseType::LongLong => CType::Int { bytes: 8, signed },
            BaseType::Float => CType::Float,
            BaseType::Double | BaseType::LongDouble => CType::Double,
            BaseType::Struct(k) if k == "_IO_FILE" => CType::File,
            BaseType::Struct(k) => CType::Struct(k.clone()),
            BaseType::Typedef(n) => return Err(self.err_type(format!("unknown type `{n}`"))),
        })
    }

    /// Resolves a declared type; `open_len` supplies the length of a leading `[]`.
    fn ctype_sized(&mut self, t: &TypeInfo, open_len: Option<usize>) -> R<CType> {
        let r = self
            .env
            .resolve(t)
            .ok_or_else(|| self.err_type("unresolvable typedef"))?;
        let mut ty = self.base_ctype(&r)?;
        for _ in 0..r.pointer_depth {
            ty = CType::ptr(ty);
        }
        for (i, d) in r.array_dims.iter().enumerate().rev() {
            let n = match d {
                Some(e) => {
                    let v = self.const_int(e)?;
                    usize::try_from(v).map_err(|_| self.err_type("negative array size"))?
                }
                None if i == 0 => open_len.ok_or_else(|| self.err_type("array size unknown"))?,
                None => return Err(self.err_type("array size unknown")),
            };
            ty = CType::Array(Rc::new(ty), n);
        }
        Ok(ty)
    }

    fn ctype(&mut self, t: &TypeInfo) -> R<CType> {
        self.ctype_sized(t, None)
    }

    fn param_ctype(&mut self, t: &TypeInfo) -> R<CType> {
        if t.array_dims.is_empty() {
            return self.ctype(t);
        }
        let mut inner = t.clone();
        inner.array_dims.remove(0);
        let elem = self.ctype(&inner)?;
        Ok(CType::ptr(elem))
    }

    fn layout(&mut self, key: &str) -> R<Rc<Layout>> {
        if let Some(l) = self.layouts.get(key) {
            return Ok(l.clone());
        }
        let fields = self
            .env
            .record_fields(key)
            .ok_or_else(|| self.err_type(format!("incomplete struct `{key}`")))?
            .to_vec();
        let mut out = Vec::with_capacity(fields.len());
        let mut offset = 0;
        for f in &fields {
            let ty = self.ctype(&f.ty)?;
            let n = self.cell_count(&ty)?;
            out.push(FieldLayout {
                name: f.name.clone(),
                offset,
                ty,
            });
            offset += n;
        }
        let l = Rc::new(Layout {
            fields: out,
            cells: offset,
        });
        self.layouts.insert(key.to_string(), l.clone());
        Ok(l)
    }

    fn cell_count(&mut self, ty: &CType) -> R<usize> {
        Ok(match ty {
            CType::Array(t, n) => self.cell_count(t)? * n,
            CType::Struct(k) => self.layout(k)?.cells,
            _ => 1,
        })
    }

    /// Size and alignment in bytes on an LP64 target.
    fn size_align(&mut self, ty: &CType) -> R<(usize, usize)> {
        Ok(match ty {
            CType::Void => (1, 1),
            CType::Bool => (1, 1),
            CType::Int { bytes, .. } => (*bytes as usize, *bytes as usize),
            CType::Float => (4, 4),
            CType::Double => (8, 8),
            CType::Ptr(_) => (8, 8),
            CType::File => (216, 8),
            CType::Array(t, n) => {
                let (s, a) = self.size_align(t)?;
                (s * n, a)
            }
            CType::Struct(k) => {
                let l = self.layout(k)?;
                let (mut size, mut align) = (0usize, 1usize);
                for f in &l.fields {
                    let (s, a) = self.size_align(&f.ty)?;
                    size = size.div_ceil(a) * a + s;
                    align = align.max(a);
                }
                (size.div_ceil(align) * align, align)
            }
        })
    }

    fn zero_cells(&mut self, ty: &CType, out: &mut Vec<Val>) -> R<()> {
        match ty {
            CType::Float | CType::Double => out.push(Val::Float(0.0)),
            CType::Ptr(_) => out.push(Val::Ptr(Ptr::NULL)),
            CType::Array(t, n) => {
                let mut one = Vec::new();
                self.zero_cells(t, &mut one)?;
                for _ in 0..*n {
                    out.extend(one.iter().cloned());
                }
            }
            CType::Struct(k) => {
                let l = self.layout(k)?;
                for f in &l.fields {
                    self.zero_cells(&f.ty, out)?;
                }
            }
            _ => out.push(Val::Int(0)),
        }
        Ok(())
    }

    fn zero_rv(&mut self, ty: &CType) -> R<RV> {
        Ok(match ty {
            CType::Void => RV::Void,
            CType::Struct(_) | CType::Array(..) => RV::Agg(self.zeroed(ty)?),
            _ => RV::S(self.zeroed(ty)?.remove(0)),
        })
    }

    fn zeroed(&mut self, ty: &CType) -> R<Vec<Val>> {
        let mut v = Vec::new();
        self.zero_cells(ty, &mut v)?;
        Ok(v)
    }

    // ---- setup ----

    fn register_enum(&mut self, e: &EnumDef) -> R<()> {
        let mut next = 0i64;
        for (name, value) in &e.variants {
            if let Some(v) = value {
                next = self.const_int(v)?;
            }
            self.enumerators.insert(name.clone(), next);
            next += 1;
        }
        Ok(())
    }

    fn init_enumerators(&mut self) -> R<()> {
        let decls = self.file_decls.clone();
        for d in decls {
            if let Some(TagDef::Enum(e)) = &d.tag_def {
                self.register_enum(e)?;
            }
        }
        Ok(())
    }

    fn init_globals(&mut self) -> R<()> {
        let decls = self.file_decls.clone();
        // Definitions first, so initializers may take addresses of later globals.
        for d in &decls {
            if matches!(d.storage, Some(Storage::Typedef) | Some(Storage::Extern)) {
                continue;
            }
            for decl in &d.declarators {
                if decl.func.is_some() || self.globals.contains_key(&decl.name) {
                    continue;
                }
                let ty = self.decl_ctype(&decl.ty, decl.init.as_ref())?;
                let cells = self.zeroed(&ty)?;
                let p = self.alloc_static(cells);
                self.globals.insert(decl.name.clone(), (p, ty));
            }
        }
        for d in &decls {
            if d.storage == Some(Storage::Typedef) {
                continue;
            }
            for decl in &d.declarators {
                if decl.func.is_some() {
                    continue;
                }
                if !self.globals.contains_key(&decl.name) {
                    let ty = self.decl_ctype(&decl.ty, None)?;
                    let cells = self.zeroed(&ty)?;
                    let p = self.alloc_static(cells);
                    self.globals.insert(decl.name.clone(), (p, ty));
                }
                if let Some(init) = &decl.init {
                    self.loc = d.loc;
                    let (p, ty) = self.globals[&decl.name].clone();
                    self.initialize(p, &ty, init)?;
                }
            }
        }
        Ok(())
    }

    fn decl_ctype(&mut self, ty: &TypeInfo, init: Option<&Initializer>) -> R<CType> {
        let open_len = match (ty.array_dims.first(), init) {
            (Some(None), Some(Initializer::List(items))) => {
                let mut inner = ty.clone();
                inner.array_dims.remove(0);
                let elem = self.ctype(&inner)?;
                Some(self.list_len(&elem, items)?)
            }
            (Some(None), Some(Initializer::Expr(e))) => match e.unparen() {
                Expr::StrLit(parts) => Some(builtins::decode_string(parts).len() + 1),
                _ => None,
            },
            _ => None,
        };
        self.ctype_sized(ty, open_len)
    }

    /// Number of elements a brace list supplies for an open_len array.
    fn list_len(&mut self, elem: &CType, items: &[Initializer]) -> R<usize> {
        let per = match elem {
            CType::Array(..) | CType::Struct(_) => self.cell_count(elem)?,
            _ => 1,
        };
        let mut n = 0usize;
        let mut leaves = 0usize;
        for it in items {
            match it {
                Initializer::List(_) => {
                    if leaves > 0 {
                        n += 1;
                        leaves = 0;
                    }
                    n += 1;
                }
                Initializer::Expr(_) => {
                    leaves += 1;
                    if leaves == per {
                        n += 1;
                        leaves = 0;
                    }
                }
            }
        }
        Ok(n + usize::from(leaves > 0))
    }

    fn initialize(&mut self, p: Ptr, ty: &CType, init: &Initializer) -> R<()> {
        match init {
            Initializer::Expr(e) => {
                if let (CType::Array(elem, n), Expr::StrLit(parts)) = (ty, e.unparen()) {
                    if elem.is_integer() {
                        let bytes = builtins::decode_string(parts);
                        let cells = self.cells_mut(p, *n)?;
                        for (i, c) in cells.iter_mut().enumerate() {
                            *c = Val::Int(bytes.get(i).map_or(0, |b| *b as i8 as i64));
                        }
                        return Ok(());
                    }
                }
                let v = self.eval(e)?;
                self.assign_to(p, ty, v)
            }
            Initializer::List(items) => {
                let zero = self.zeroed(ty)?;
                let n = zero.len();
                self.cells_mut(p, n)?.clone_from_slice(&zero);
                let mut pos = 0;
                self.fill(p, ty, items, &mut pos)?;
                if pos < items.len() {
                    return Err(self.err_type("too many initializers"));
                }
                Ok(())
            }
        }
    }

    /// Brace-elided aggregate fill consuming `items[*pos..]`.
    fn fill(&mut self, p: Ptr, ty: &CType, items: &[Initializer], pos: &mut usize) -> R<()> {
        match ty {
            CType::Array(elem, n) => {
                let step = self.cell_count(elem)? as i64;
                for i in 0..*n {
                    if *pos >= items.len() {
                        break;
                    }
                    self.fill_one(p.offset(i as i64 * step), elem, items, pos)?;
                }
                Ok(())
            }
            CType::Struct(k) => {
                let l = self.layout(k)?;
                for f in &l.fields {
                    if *pos >= items.len() {
                        break;
                    }
                    self.fill_one(p.offset(f.offset as i64), &f.ty, items, pos)?;
                }
                Ok(())
            }
            _ => self.fill_one(p, ty, items, pos),
        }
    }

    fn fill_one(&mut self, p: Ptr, ty: &CType, items: &[Initializer], pos: &mut usize) -> R<()> {
        let item = &items[*pos];
        let aggregate = matches!(ty, CType::Array(..) | CType::Struct(_));
        match item {
            Initializer::List(_) => {
                *pos += 1;
                self.initialize(p, ty, item)
            }
            Initializer::Expr(e) if aggregate => {
                let is_str = matches!(e.unparen(), Expr::StrLit(_))
                    && matches!(ty, CType::Array(el, _) if el.is_integer());
                if is_str {
                    *pos += 1;
                    return self.initialize(p, ty, item);
                }
                if let CType::Struct(_) = ty {
                    let st = self.static_type(e)?;
                    if st == *ty {
                        *pos += 1;
                        return self.initialize(p, ty, item);
                    }
                }
                self.fill(p, ty, items, pos)
            }
            Initializer::Expr(_) => {
                *pos += 1;
                self.initialize(p, ty, item)
            }
        }
    }

    fn const_int(&mut self, e: &Expr) -> R<i64> {
        let (rv, ty) = self.eval(e)?;
        match self.convert(rv, &ty, &CType::LONG)? {
            RV::S(Val::Int(v)) => Ok(v),
            _ => Err(self.err_type("expected an integer constant")),
        }
    }

    // ---- names ----

    fn lookup(&self, name: &str) -> Option<Binding> {
        if let Some(f) = self.frames.last() {
            for s in f.scopes.iter().rev() {
                if let Some(b) = s.get(name) {
                    return Some(b.clone());
                }
            }
        }
        self.globals.get(name).cloned()
    }

    fn bind(&mut self, name: &str, b: Binding) {
        if let Some(f) = self.frames.last_mut() {
            if let Some(s) = f.scopes.last_mut() {
                s.insert(name.to_string(), b);
            }
        }
    }

    fn push_scope(&mut self) {
        let mark = self.stack.len();
        if let Some(f) = self.frames.last_mut() {
            f.scopes.push(HashMap::new());
            f.marks.push(mark);
        }
    }

    fn pop_scope(&mut self) {
        if let Some(f) = self.frames.last_mut() {
            f.scopes.pop();
            if let Some(m) = f.marks.pop() {
                self.stack.truncate(m);
            }
        }
    }

    fn declare_local(&mut self, d: &Declaration) -> R<()> {
        if let Some(TagDef::Enum(e)) = &d.tag_def {
            self.register_enum(e)?;
        }
        if d.storage == Some(Storage::Typedef) {
            return Err(self.unsupported("block-scope typedef"));
        }
        for decl in &d.declarators {
            if decl.func.is_some() {
                continue;
            }
            match d.storage {
                Some(Storage::Extern) => {
                    let b = self.globals.get(&decl.name).cloned().ok_or_else(|| {
                        Trap::Error(InterpError::Undefined {
                            loc: d.loc,
                            name: decl.name.clone(),
                        })
                    })?;
                    self.bind(&decl.name, b);
                }
                Some(Storage::Static) => {
                    let key = (self.current_fn.clone(), d.loc, decl.name.clone());
                    let b = match self.local_statics.get(&key) {
                        Some(b) => b.clone(),
                        None => {
                            let ty = self.decl_ctype(&decl.ty, decl.init.as_ref())?;
                            let cells = self.zeroed(&ty)?;
                            let p = self.alloc_static(cells);
                            if let Some(init) = &decl.init {
                                self.initialize(p, &ty, init)?;
                            }
                            self.local_statics.insert(key, (p, ty.clone()));
                            (p, ty)
                        }
                    };
                    self.bind(&decl.name, b);
                }
                _ => {
                    let ty = self.decl_ctype(&decl.ty, decl.init.as_ref())?;
                    let cells = self.zeroed(&ty)?;
                    let p = self.alloc_stack(cells);
                    // The name is in scope within its own initializer.
                    self.bind(&decl.name, (p, ty.clone()));
                    if let Some(init) = &decl.init {
                        self.initialize(p, &ty, init)?;
                    }
                }
            }
        }
        Ok(())
    }

    // ---- statements ----

    fn tick(&mut self) -> R<()> {
        self.out.steps += 1;
        if self.out.steps > self.config.max_steps {
            return Err(fault(EXIT_TIMEOUT, "step limit exceeded"));
        }
        Ok(())
    }

    fn exec_block(&mut self, b: &Block) -> R<Flow> {
        self.push_scope();
        let r = self.exec_stmts(&b.stmts);
        self.pop_scope();
        r
    }

    fn exec_stmts(&mut self, stmts: &[Stmt]) -> R<Flow> {
        for s in stmts {
            match self.exec(s)? {
                Flow::Normal => {}
                other => return Ok(other),
            }
        }
        Ok(Flow::Normal)
    }

    fn exec(&mut self, s: &Stmt) -> R<Flow> {
        self.loc = s.loc;
        self.tick()?;
        match &s.kind {
            StmtKind::Decl(d) => {
                self.declare_local(d)?;
                Ok(Flow::Normal)
            }
            StmtKind::Expr(e) => {
                self.eval(e)?;
                Ok(Flow::Normal)
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                if self.truthy(cond)? {
                    self.exec_block(then_branch)
                } else if let Some(b) = else_branch {
                    self.exec_block(b)
                } else {
                    Ok(Flow::Normal)
                }
            }
            StmtKind::While { cond, body } => {
                while self.truthy(cond)? {
                    self.tick()?;
                    match self.exec_block(body)? {
                        Flow::Break => break,
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        _ => {}
                    }
                }
                Ok(Flow::Normal)
            }
            StmtKind::DoWhile { body, cond } => {
                loop {
                    self.tick()?;
                    match self.exec_block(body)? {
                        Flow::Break => break,
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        _ => {}
                    }
                    if !self.truthy(cond)? {
                        break;
                    }
                }
                Ok(Flow::Normal)
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                self.push_scope();
                let r = self.exec_for(init, cond.as_ref(), step.as_ref(), body);
                self.pop_scope();
                r
            }
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => Some(self.eval(e)?),
                    None => None,
                };
                Ok(Flow::Return(v))
            }
            StmtKind::Block(b) => self.exec_block(b),
            StmtKind::Break => Ok(Flow::Break),
            StmtKind::Continue => Ok(Flow::Continue),
            StmtKind::Null => Ok(Flow::Normal),
            StmtKind::Opaque(text) => {
                let head: String = text.chars().take(24).collect();
                Err(self.unsupported(format!("opaque statement `{head}`")))
            }
        }
    }

    fn exec_for(
        &mut self,
        init: &ForInit,
        cond: Option<&Expr>,
        step: Option<&Expr>,
        body: &Block,
    ) -> R<Flow> {
        match init {
            ForInit::None => {}
            ForInit::Expr(e) => {
                self.eval(e)?;
            }
            ForInit::Decl(d) => self.declare_local(d)?,
        }
        loop {
            if let Some(c) = cond {
                if !self.truthy(c)? {
                    break;
                }
            }
            self.tick()?;
            match self.exec_block(body)? {
                Flow::Break => break,
                Flow::Return(v) => return Ok(Flow::Return(v)),
                _ => {}
            }
            if let Some(s) = step {
                self.eval(s)?;
            }
        }
        Ok(Flow::Normal)
    }

    // ---- calls ----

    fn call_user(&mut self, f: &'a FunctionDef, args: Vec<Typed>) -> R<Typed> {
        if self.frames.len() >= self.config.max_depth {
            return Err(fault(EXIT_SEGV, "stack overflow"));
        }
        if args.len() != f.params.len() && !(f.params.is_empty() && !f.explicit_void) {
            return Err(self.err_type(format!(
                "`{}` expects {} arguments, got {}",
                f.name,
                f.params.len(),
                args.len()
            )));
        }
        let mut bound = Vec::with_capacity(f.params.len());
        for (p, (rv, ty)) in f.params.iter().zip(args) {
            let pty = self.param_ctype(&p.ty)?;
            let v = self.convert(rv, &ty, &pty)?;
            bound.push((p.name.clone(), pty, v));
        }
        let ret_ty = self.ctype(&f.return_type)?;
        let saved_fn = std::mem::replace(&mut self.current_fn, f.name.clone());
        let saved_loc = self.loc;
        self.frames.push(Frame::default());
        self.push_scope();
        let mut result = Ok(Flow::Normal);
        for (name, pty, v) in bound {
            let cells = self.zeroed(&pty)?;
            let p = self.alloc_stack(cells);
            if let Err(e) = self.write(p, &pty, v) {
                result = Err(e);
                break;
            }
            if let Some(n) = name {
                self.bind(&n, (p, pty));
            }
        }
        if result.is_ok() {
            result = self.exec_block(&f.body);
        }
        self.pop_scope();
        self.frames.pop();
        self.current_fn = saved_fn;
        self.loc = saved_loc;
        let value = match result? {
            Flow::Return(Some((rv, ty))) if ret_ty != CType::Void => self.convert(rv, &ty, &ret_ty)?,
            _ if ret_ty == CType::Void => RV::Void,
            // Falling off a non-void function leaves the value indeterminate.
            _ => self.zero_rv(&ret_ty)?,
        };
        Ok((value, ret_ty))
    }

    fn call_named(&mut self, name: &str, args: Vec<Typed>) -> R<Typed> {
        if let Some(f) = self.functions.get(name).copied() {
            return self.call_user(f, args);
        }
        match self.builtin_values(name, args)? {
            Some(r) => Ok(r),
            None => Err(Trap::Error(InterpError::Undefined {
                loc: self.loc,
                name: name.to_string(),
            })),
        }
    }

    fn eval_call(&mut self, callee: &Expr, args: &[Expr]) -> R<Typed> {
        let Some(name) = callee.as_ident() else {
            return Err(self.unsupported("call through an expression"));
        };
        if name == "atexit" {
            let Some(target) = args.first().and_then(|a| a.as_ident()) else {
                return Err(self.unsupported("atexit with a non-name argument"));
            };
            self.atexit.push(target.to_string());
            return Ok((RV::S(Val::Int(0)), CType::INT));
        }
        let mut vals = Vec::with_capacity(args.len());
        for a in args {
            let (rv, ty) = self.eval(a)?;
            vals.push((rv, ty.decayed()));
        }
        let saved = self.loc;
        let r = self.call_named(name, vals);
        self.loc = saved;
        r
    }

    // ---- expressions ----

    fn truthy(&mut self, e: &Expr) -> R<bool> {
        let (rv, _) = self.eval(e)?;
        self.is_true(&rv)
    }

    fn is_true(&self, rv: &RV) -> R<bool> {
        match rv {
            RV::S(Val::Int(v)) => Ok(*v != 0),
            RV::S(Val::Float(f)) => Ok(*f != 0.0),
            RV::S(Val::Ptr(p)) => Ok(!p.is_null()),
            _ => Err(self.err_type("scalar value required")),
        }
    }

    fn read(&mut self, p: Ptr, ty: &CType) -> R<Typed> {
        match ty {
            CType::Array(elem, _) => Ok((RV::S(Val::Ptr(p)), CType::Ptr(elem.clone()))),
            CType::Struct(_) => {
                let n = self.cell_count(ty)?;
                Ok((RV::Agg(self.cells(p, n)?.to_vec()), ty.clone()))
            }
            _ => Ok((RV::S(self.load(p)?), ty.clone())),
        }
    }

    fn write(&mut self, p: Ptr, ty: &CType, v: RV) -> R<()> {
        match v {
            RV::S(val) => self.store(p, val),
            RV::Agg(cells) => {
                let n = self.cell_count(ty)?;
                if cells.len() != n {
                    return Err(self.err_type("aggregate size mismatch"));
                }
                self.cells_mut(p, n)?.clone_from_slice(&cells);
                Ok(())
            }
            RV::Void => Err(self.err_type("void value used")),
        }
    }

    fn assign_to(&mut self, p: Ptr, ty: &CType, (rv, from): Typed) -> R<()> {
        let v = self.convert(rv, &from.decayed(), ty)?;
        self.write(p, ty, v)
    }

    fn convert(&self, rv: RV, from: &CType, to: &CType) -> R<RV> {
        if from == to {
            return Ok(rv);
        }
        let RV::S(v) = rv else {
            return match (to, rv) {
                (CType::Void, _) => Ok(RV::Void),
                (CType::Struct(_), rv @ RV::Agg(_)) => Ok(rv),
                _ => Err(self.err_type("scalar value required")),
            };
        };
        Ok(match to {
            CType::Void => RV::Void,
            CType::Bool => RV::S(Val::Int(i64::from(self.is_true(&RV::S(v))?))),
            CType::Int { bytes, signed } => RV::S(Val::Int(match v {
                Val::Int(i) => wrap_int(i, *bytes, *signed),
                Val::Float(f) => {
                    let i = if *signed || *bytes < 8 {
                        f as i64
                    } else {
                        f as u64 as i64
                    };
                    wrap_int(i, *bytes, *signed)
                }
                Val::Ptr(p) if p.is_null() => 0,
                Val::Ptr(_) => return Err(self.unsupported("pointer to integer conversion")),
            })),
            CType::Float | CType::Double => {
                let f = match v {
                    Val::Int(i) => match from {
                        CType::Int {
                            bytes: 8,
                            signed: false,
                        } => i as u64 as f64,
                        _ => i as f64,
                    },
                    Val::Float(f) => f,
                    Val::Ptr(_) => return Err(self.err_type("pointer used as a number")),
                };
                RV::S(Val::Float(if *to == CType::Float {
                    f as f32 as f64
                } else {
                    f
                }))
            }
            CType::Ptr(pt) => match v {
                Val::Ptr(p) => {
                    if let Some(ft) = from.pointee() {
                        let compatible = **pt == CType::Void
                            || *ft == CType::Void
                            || same_shape(ft, pt);
                        if !compatible && !p.is_null() {
                            return Err(self.unsupported("cast between incompatible pointer types"));
                        }
                    }
                    RV::S(Val::Ptr(p))
                }
                Val::Int(0) => RV::S(Val::Ptr(Ptr::NULL)),
                _ => return Err(self.unsupported("integer to pointer conversion")),
            },
            CType::File => return Err(self.err_type("FILE by value")),
            CType::Array(..) | CType::Struct(_) => {
                return Err(self.err_type("cannot convert a scalar to an aggregate"))
            }
        })
    }

    pub(crate) fn eval(&mut self, e: &Expr) -> R<Typed> {
        match e {
            Expr::Ident(n) => {
                if let Some((p, ty)) = self.lookup(n) {
                    return self.read(p, &ty);
                }
                if let Some(v) = self.enumerators.get(n) {
                    return Ok((RV::S(Val::Int(*v)), CType::INT));
                }
                match n.as_str() {
                    "stdout" | "stderr" | "stdin" => {
                        let obj = match n.as_str() {
                            "stdout" => 1,
                            "stderr" => 2,
                            _ => 0,
                        };
                        Ok((
                            RV::S(Val::Ptr(Ptr {
                                space: Space::Stream,
                                obj,
                                idx: 0,
                            })),
                            CType::ptr(CType::File),
                        ))
                    }
                    "NULL" => Ok((RV::S(Val::Ptr(Ptr::NULL)), CType::ptr(CType::Void))),
                    "EXIT_SUCCESS" => Ok((RV::S(Val::Int(0)), CType::INT)),
                    "EXIT_FAILURE" => Ok((RV::S(Val::Int(1)), CType::INT)),
                    _ => Err(Trap::Error(InterpError::Undefined {
                        loc: self.loc,
                        name: n.clone(),
                    })),
                }
            }
            Expr::IntLit(s) => {
                let (v, ty) = parse_int_literal(s).ok_or_else(|| self.err_type("bad literal"))?;
                Ok((RV::S(Val::Int(v)), ty))
            }
            Expr::FloatLit(s) => {
                let single = s.ends_with(['f', 'F']);
                let t = s.trim_end_matches(['f', 'F', 'l', 'L']);
                let v: f64 = t.parse().map_err(|_| self.err_type("bad literal"))?;
                Ok(if single {
                    (RV::S(Val::Float(v as f32 as f64)), CType::Float)
                } else {
                    (RV::S(Val::Float(v)), CType::Double)
                })
            }
            Expr::CharLit(s) => {
                let v = builtins::decode_char(s).ok_or_else(|| self.err_type("bad literal"))?;
                Ok((RV::S(Val::Int(v)), CType::INT))
            }
            Expr::StrLit(parts) => {
                let mut bytes = builtins::decode_string(parts);
                bytes.push(0);
                let p = match self.strings.get(&bytes) {
                    Some(p) => *p,
                    None => {
                        let cells = bytes.iter().map(|b| Val::Int(*b as i8 as i64)).collect();
                        let p = self.alloc_static(cells);
                        self.strings.insert(bytes, p);
                        p
                    }
                };
                Ok((RV::S(Val::Ptr(p)), CType::ptr(CType::CHAR)))
            }
            Expr::Paren(x) => self.eval(x),
            Expr::Unary { op, operand } => self.eval_unary(*op, operand),
            Expr::Binary { op, lhs, rhs } => match op {
                BinaryOp::LogAnd => {
                    let v = self.truthy(lhs)? && self.truthy(rhs)?;
                    Ok((RV::S(Val::Int(v as i64)), CType::INT))
                }
                BinaryOp::LogOr => {
                    let v = self.truthy(lhs)? || self.truthy(rhs)?;
                    Ok((RV::S(Val::Int(v as i64)), CType::INT))
                }
                _ => {
                    let a = self.eval(lhs)?;
                    let b = self.eval(rhs)?;
                    self.binop(*op, a, b)
                }
            },
            Expr::Assign { lhs, rhs } => {
                let v = self.eval(rhs)?;
                let (p, ty) = self.place(lhs)?;
                self.assign_to(p, &ty, v)?;
                self.read(p, &ty)
            }
            Expr::CompoundAssign { op, lhs, rhs } => {
                let (p, ty) = self.place(lhs)?;
                let cur = self.read(p, &ty)?;
                let r = self.eval(rhs)?;
                let v = self.binop(*op, cur, r)?;
                self.assign_to(p, &ty, v)?;
                self.read(p, &ty)
            }
            Expr::Call { callee, args } => self.eval_call(callee, args),
            Expr::Member { .. } | Expr::Index { .. } => {
                let (p, ty) = self.place(e)?;
                self.read(p, &ty)
            }
            Expr::Cast { ty, expr } => {
                let to = self.ctype(ty)?;
                let (rv, from) = self.eval(expr)?;
                let v = self.convert(rv, &from.decayed(), &to)?;
                Ok((v, to))
            }
            Expr::Conditional {
                cond,
                then_expr,
                else_expr,
            } => {
                let pick = self.truthy(cond)?;
                let other = if pick { else_expr } else { then_expr };
                let other_ty = self.static_type(other)?.decayed();
                let (rv, ty) = self.eval(if pick { then_expr } else { else_expr })?;
                let ty = ty.decayed();
                if ty.is_arithmetic() && other_ty.is_arithmetic() {
                    let common = common_type(&ty, &other_ty);
                    let v = self.convert(rv, &ty, &common)?;
                    Ok((v, common))
                } else {
                    Ok((rv, ty))
                }
            }
            Expr::SizeofType(t) => {
                let ty = self.ctype(t)?;
                let (s, _) = self.size_align(&ty)?;
                Ok((RV::S(Val::Int(s as i64)), CType::ULONG))
            }
            Expr::SizeofExpr(x) => {
                let ty = self.static_type(x)?;
                let (s, _) = self.size_align(&ty)?;
                Ok((RV::S(Val::Int(s as i64)), CType::ULONG))
            }
            Expr::Comma(a, b) => {
                self.eval(a)?;
                self.eval(b)
            }
        }
    }

    fn eval_unary(&mut self, op: UnaryOp, operand: &Expr) -> R<Typed> {
        match op {
            UnaryOp::Deref => {
                let (p, ty) = self.place(&Expr::Unary {
                    op,
                    operand: Box::new(operand.clone()),
                })?;
                self.read(p, &ty)
            }
            UnaryOp::AddrOf => {
                let (p, ty) = self.place(operand)?;
                Ok((RV::S(Val::Ptr(p)), CType::ptr(ty)))
            }
            UnaryOp::PreInc | UnaryOp::PreDec | UnaryOp::PostInc | UnaryOp::PostDec => {
                let (p, ty) = self.place(operand)?;
                let old = self.read(p, &ty)?;
                let bop = if matches!(op, UnaryOp::PreInc | UnaryOp::PostInc) {
                    BinaryOp::Add
                } else {
                    BinaryOp::Sub
                };
                let new = self.binop(bop, old.clone(), (RV::S(Val::Int(1)), CType::INT))?;
                self.assign_to(p, &ty, new)?;
                if op.is_postfix() {
                    Ok(old)
                } else {
                    self.read(p, &ty)
                }
            }
            UnaryOp::Not => {
                let v = !self.truthy(operand)?;
                Ok((RV::S(Val::Int(v as i64)), CType::INT))
            }
            UnaryOp::Neg | UnaryOp::Plus | UnaryOp::BitNot => {
                let (rv, ty) = self.eval(operand)?;
                if !ty.is_arithmetic() {
                    return Err(self.err_type("arithmetic operand required"));
                }
                let pt = ty.promoted();
                let RV::S(v) = self.convert(rv, &ty, &pt)? else {
                    return Err(self.err_type("arithmetic operand required"));
                };
                let r = match (op, v, &pt) {
                    (UnaryOp::Plus, v, _) => v,
                    (UnaryOp::Neg, Val::Float(f), CType::Float) => Val::Float((-f) as f32 as f64),
                    (UnaryOp::Neg, Val::Float(f), _) => Val::Float(-f),
                    (UnaryOp::Neg, Val::Int(i), CType::Int { bytes, signed }) => {
                        Val::Int(wrap_int(i.wrapping_neg(), *bytes, *signed))
                    }
                    (UnaryOp::BitNot, Val::Int(i), CType::Int { bytes, signed }) => {
                        Val::Int(wrap_int(!i, *bytes, *signed))
                    }
                    _ => return Err(self.err_type("integer operand required")),
                };
                Ok((RV::S(r), pt))
            }
        }
    }

    /// Location and type of an lvalue. Struct-valued rvalues are
    /// materialized into a temporary so members can be read from them.
    fn place(&mut self, e: &Expr) -> R<Binding> {
        match e {
            Expr::Ident(n) => self.lookup(n).ok_or_else(|| {
                Trap::Error(InterpError::Undefined {
                    loc: self.loc,
                    name: n.clone(),
                })
            }),
            Expr::Paren(x) => self.place(x),
            Expr::Index { base, index } => {
                let (bv, bt) = self.eval(base)?;
                let (iv, it) = self.eval(index)?;
                let (pv, elem, iv, it) = match (&bt.decayed(), &it.decayed()) {
                    (CType::Ptr(el), _) => (bv, el.clone(), iv, it),
                    (_, CType::Ptr(el)) => (iv, el.clone(), bv, bt),
                    _ => return Err(self.err_type("subscript of a non-pointer")),
                };
                let RV::S(Val::Ptr(p)) = pv else {
                    return Err(self.err_type("subscript of a non-pointer"));
                };
                let i = self.as_int(iv, &it)?;
                let step = self.cell_count(&elem)? as i64;
                if p.is_null() {
                    return Err(fault(EXIT_SEGV, format!("{}: null dereference", self.loc)));
                }
                Ok((p.offset(i * step), (*elem).clone()))
            }
            Expr::Member { base, field, arrow } => {
                let (p, bt) = if *arrow {
                    let (bv, bt) = self.eval(base)?;
                    let RV::S(Val::Ptr(p)) = bv else {
                        return Err(self.err_type("`->` on a non-pointer"));
                    };
                    if p.is_null() {
                        return Err(fault(EXIT_SEGV, format!("{}: null dereference", self.loc)));
                    }
                    let Some(t) = bt.decayed().pointee().cloned() else {
                        return Err(self.err_type("`->` on a non-pointer"));
                    };
                    (p, t)
                } else {
                    self.place(base)?
                };
                let CType::Struct(key) = &bt else {
                    return Err(self.err_type(format!("member `{field}` of a non-struct")));
                };
                let l = self.layout(key)?;
                let f = l
                    .fields
                    .iter()
                    .find(|f| f.name == *field)
                    .ok_or_else(|| self.err_type(format!("no member `{field}`")))?;
                Ok((p.offset(f.offset as i64), f.ty.clone()))
            }
            Expr::Unary {
                op: UnaryOp::Deref,
                operand,
            } => {
                let (v, t) = self.eval(operand)?;
                let RV::S(Val::Ptr(p)) = v else {
                    return Err(self.err_type("dereference of a non-pointer"));
                };
                if p.is_null() {
                    return Err(fault(EXIT_SEGV, format!("{}: null dereference", self.loc)));
                }
                let t = t
                    .decayed()
                    .pointee()
                    .cloned()
                    .ok_or_else(|| self.err_type("dereference of a non-pointer"))?;
                Ok((p, t))
            }
            _ => {
                let (rv, ty) = self.eval(e)?;
                match rv {
                    RV::Agg(cells) => Ok((self.alloc_stack(cells), ty)),
                    _ => Err(self.err_type("expression is not an lvalue")),
                }
            }
        }
    }

    fn as_int(&self, rv: RV, ty: &CType) -> R<i64> {
        match self.convert(rv, &ty.decayed(), &CType::LONG)? {
            RV::S(Val::Int(v)) => Ok(v),
            _ => Err(self.err_type("integer required")),
        }
    }

    fn binop(&mut self, op: BinaryOp, (av, at): Typed, (bv, bt): Typed) -> R<Typed> {
        use BinaryOp::*;
        let (at, bt) = (at.decayed(), bt.decayed());
        let ptr_a = matches!(at, CType::Ptr(_));
        let ptr_b = matches!(bt, CType::Ptr(_));
        if ptr_a || ptr_b {
            return self.ptr_binop(op, (av, at), (bv, bt));
        }
        if !at.is_arithmetic() || !bt.is_arithmetic() {
            return Err(self.err_type("arithmetic operands required"));
        }
        if matches!(op, Shl | Shr) {
            let lt = at.promoted();
            let a = self.as_int(av, &at)?;
            let b = self.as_int(bv, &bt)?;
            let CType::Int { bytes, signed } = lt else {
                return Err(self.err_type("integer operands required"));
            };
            let bits = bytes as u32 * 8;
            let sh = (b as u32) & (bits - 1);
            let a = wrap_int(a, bytes, signed);
            let r = match op {
                Shl => a.wrapping_shl(sh),
                _ if signed => a >> sh,
                _ => ((a as u64) >> sh) as i64,
            };
            return Ok((RV::S(Val::Int(wrap_int(r, bytes, signed))), lt));
        }
        let ct = common_type(&at, &bt);
        let a = self.convert(av, &at, &ct)?;
        let b = self.convert(bv, &bt, &ct)?;
        let (RV::S(a), RV::S(b)) = (a, b) else {
            return Err(self.err_type("scalar operands required"));
        };
        let cmp = |o: std::cmp::Ordering| -> bool {
            match op {
                Lt => o.is_lt(),
                Gt => o.is_gt(),
                Le => o.is_le(),
                Ge => o.is_ge(),
                Eq => o.is_eq(),
                _ => o.is_ne(),
            }
        };
        match (a, b, &ct) {
            (Val::Float(x), Val::Float(y), _) => {
                let single = ct == CType::Float;
                let r = match op {
                    Add => x + y,
                    Sub => x - y,
                    Mul => x * y,
                    Div => x / y,
                    Lt | Gt | Le | Ge | Eq | Ne => {
                        let v = match x.partial_cmp(&y) {
                            Some(o) => cmp(o),
                            None => op == Ne,
                        };
                        return Ok((RV::S(Val::Int(v as i64)), CType::INT));
                    }
                    _ => return Err(self.err_type("invalid operands to a float operator")),
                };
                let r = if single { r as f32 as f64 } else { r };
                Ok((RV::S(Val::Float(r)), ct))
            }
            (Val::Int(x), Val::Int(y), CType::Int { bytes, signed }) => {
                let (bytes, signed) = (*bytes, *signed);
                let unsigned64 = bytes == 8 && !signed;
                let r = match op {
                    Add => x.wrapping_add(y),
                    Sub => x.wrapping_sub(y),
                    Mul => x.wrapping_mul(y),
                    Div | Rem => {
                        if y == 0 {
                            return Err(fault(EXIT_FPE, format!("{}: division by zero", self.loc)));
                        }
                        if !signed {
                            let (ux, uy) = if unsigned64 {
                                (x as u64, y as u64)
                            } else {
                                (x as u64 & 0xffff_ffff, y as u64 & 0xffff_ffff)
                            };
                            (if op == Div { ux / uy } else { ux % uy }) as i64
                        } else {
                            let r = if op == Div {
                                x.checked_div(y)
                            } else {
                                x.checked_rem(y)
                            };
                            match r {
                                Some(r) if wrap_int(r, bytes, true) == r || op == Rem => r,
                                _ => {
                                    return Err(fault(
                                        EXIT_FPE,
                                        format!("{}: integer overflow in division", self.loc),
                                    ))
                                }
                            }
                        }
                    }
                    BitAnd => x & y,
                    BitOr => x | y,
                    BitXor => x ^ y,
                    Lt | Gt | Le | Ge | Eq | Ne => {
                        let o = if unsigned64 {
                            (x as u64).cmp(&(y as u64))
                        } else {
                            x.cmp(&y)
                        };
                        return Ok((RV::S(Val::Int(cmp(o) as i64)), CType::INT));
                    }
                    _ => return Err(self.err_type("invalid integer operator")),
                };
                Ok((RV::S(Val::Int(wrap_int(r, bytes, signed))), ct))
            }
            _ => Err(self.err_type("mismatched operand kinds")),
        }
    }

    fn ptr_binop(&mut self, op: BinaryOp, (av, at): Typed, (bv, bt): Typed) -> R<Typed> {
        use BinaryOp::*;
        let as_ptr = |rv: &RV| match rv {
            RV::S(Val::Ptr(p)) => Some(*p),
            RV::S(Val::Int(0)) => Some(Ptr::NULL),
            _ => None,
        };
        match op {
            Add | Sub if at.pointee().is_some() && bt.is_integer() => {
                let p = as_ptr(&av).ok_or_else(|| self.err_type("pointer required"))?;
                let n = self.as_int(bv, &bt)?;
                let step = self.cell_count(at.pointee().unwrap_or(&CType::CHAR))? as i64;
                let by = if op == Add { n * step } else { -n * step };
                Ok((RV::S(Val::Ptr(p.offset(by))), at))
            }
            Add if bt.pointee().is_some() && at.is_integer() => {
                self.ptr_binop(op, (bv, bt), (av, at))
            }
            Sub if at.pointee().is_some() && bt.pointee().is_some() => {
                let (Some(a), Some(b)) = (as_ptr(&av), as_ptr(&bv)) else {
                    return Err(self.err_type("pointer required"));
                };
                let step = self.cell_count(at.pointee().unwrap_or(&CType::CHAR))?.max(1) as i64;
                Ok((RV::S(Val::Int((a.idx - b.idx) / step)), CType::LONG))
            }
            Lt | Gt | Le | Ge | Eq | Ne => {
                let (Some(a), Some(b)) = (as_ptr(&av), as_ptr(&bv)) else {
                    return Err(self.err_type("comparison of pointer with non-pointer"));
                };
                let o = (a.space, a.obj, a.idx).cmp(&(b.space, b.obj, b.idx));
                let v = match op {
                    Lt => o.is_lt(),
                    Gt => o.is_gt(),
                    Le => o.is_le(),
                    Ge => o.is_ge(),
                    Eq => o.is_eq(),
                    _ => o.is_ne(),
                };
                Ok((RV::S(Val::Int(v as i64)), CType::INT))
            }
            _ => Err(self.err_type(format!("invalid pointer operator `{}`", op.symbol()))),
        }
    }

    /// Type of an expression without evaluating it.
    fn static_type(&mut self, e: &Expr) -> R<CType> {
        Ok(match e {
            Expr::Ident(n) => match self.lookup(n) {
                Some((_, t)) => t,
                None if self.enumerators.contains_key(n) => CType::INT,
                None => return Err(Trap::Error(InterpError::Undefined {
                    loc: self.loc,
                    name: n.clone(),
                })),
            },
            Expr::IntLit(s) => parse_int_literal(s).map(|(_, t)| t).unwrap_or(CType::INT),
            Expr::FloatLit(s) if s.ends_with(['f', 'F']) => CType::Float,
            Expr::FloatLit(_) => CType::Double,
            Expr::CharLit(_) => CType::INT,
            Expr::StrLit(parts) => {
                CType::Array(Rc::new(CType::CHAR), builtins::decode_string(parts).len() + 1)
            }
            Expr::Paren(x) => self.static_type(x)?,
            Expr::Unary { op, operand } => {
                let t = self.static_type(operand)?;
                match op {
                    UnaryOp::Deref => t
                        .decayed()
                        .pointee()
                        .cloned()
                        .ok_or_else(|| self.err_type("dereference of a non-pointer"))?,
                    UnaryOp::AddrOf => CType::ptr(t),
                    UnaryOp::Not => CType::INT,
                    UnaryOp::Neg | UnaryOp::Plus | UnaryOp::BitNot => t.promoted(),
                    _ => t,
                }
            }
            Expr::Binary { op, lhs, rhs } => {
                use BinaryOp::*;
                let a = self.static_type(lhs)?.decayed();
                let b = self.static_type(rhs)?.decayed();
                match op {
                    Lt | Gt | Le | Ge | Eq | Ne | LogAnd | LogOr => CType::INT,
                    Shl | Shr => a.promoted(),
                    Sub if a.pointee().is_some() && b.pointee().is_some() => CType::LONG,
                    _ if a.pointee().is_some() => a,
                    _ if b.pointee().is_some() => b,
                    _ => common_type(&a, &b),
                }
            }
            Expr::Assign { lhs, .. } | Expr::CompoundAssign { lhs, .. } => self.static_type(lhs)?,
            Expr::Call { callee, .. } => {
                let name = callee.as_ident().unwrap_or_default();
                match self.functions.get(name).copied() {
                    Some(f) => self.ctype(&f.return_type)?,
                    None => builtins::builtin_return_type(name),
                }
            }
            Expr::Member { base, field, arrow } => {
                let mut bt = self.static_type(base)?;
                if *arrow {
                    bt = bt
                        .decayed()
                        .pointee()
                        .cloned()
                        .ok_or_else(|| self.err_type("`->` on a non-pointer"))?;
                }
                let CType::Struct(k) = bt else {
                    return Err(self.err_type("member of a non-struct"));
                };
                let l = self.layout(&k)?;
                l.fields
                    .iter()
                    .find(|f| f.name == *field)
                    .map(|f| f.ty.clone())
                    .ok_or_else(|| self.err_type(format!("no member `{field}`")))?
            }
            Expr::Index { base, index } => {
                let bt = self.static_type(base)?.decayed();
                let it = self.static_type(index)?.decayed();
                bt.pointee()
                    .or(it.pointee())
                    .cloned()
                    .ok_or_else(|| self.err_type("subscript of a non-pointer"))?
            }
            Expr::Cast { ty, .. } => self.ctype(ty)?,
            Expr::Conditional {
                then_expr,
                else_expr,
                ..
            } => {
                let a = self.static_type(then_expr)?.decayed();
                let b = self.static_type(else_expr)?.decayed();
                if a.is_arithmetic() && b.is_arithmetic() {
                    common_type(&a, &b)
                } else {
                    a
                }
            }
            Expr::SizeofType(_) | Expr::SizeofExpr(_) => CType::ULONG,
            Expr::Comma(_, b) => self.static_type(b)?,
        })
    }
}

fn same_shape(a: &CType, b: &CType) -> bool {
    match (a, b) {
        (CType::Int { bytes: x, .. }, CType::Int { bytes: y, .. }) => x == y,
        (CType::Ptr(_), CType::Ptr(_)) => true,
        _ => a == b,
    }
}

/// Value and type of an integer literal, following the C rules for
/// unsuffixed and suffixed constants.
fn parse_int_literal(s: &str) -> Option<(i64, CType)> {
    let lower = s.to_ascii_lowercase();
    let digits = lower.trim_end_matches(['u', 'l']);
    let suffix = &lower[digits.len()..];
    let unsigned = suffix.contains('u');
    let long = suffix.contains('l');
    let (radix, body) = if let Some(h) = digits.strip_prefix("0x") {
        (16, h)
    } else if digits.len() > 1 && digits.starts_with('0') {
        (8, &digits[1..])
    } else {
        (10, digits)
    };
    let v = u64::from_str_radix(body, radix).ok()?;
    let decimal = radix == 10;
    let ty = if !long && !unsigned && v <= i32::MAX as u64 {
        CType::INT
    } else if !long && (unsigned || !decimal) && v <= u32::MAX as u64 {
        CType::Int {
            bytes: 4,
            signed: false,
        }
    } else if !unsigned && v <= i64::MAX as u64 {
        CType::LONG
    } else {
        CType::ULONG
    };
    Some((v as i64, ty))
}

#[cfg(test)]
mod tests;
