//! Name and type resolution over a [`SourceUnit`].

use std::collections::HashMap;

use super::ast::*;

/// Struct key used for the runtime's `Range` typedef.
pub const RANGE_STRUCT_KEY: &str = "__rangeweaver_range";

/// File-scope symbol tables: typedefs, records, enumerators, globals, functions.
#[derive(Debug, Clone, Default)]
pub struct TypeEnv {
    typedefs: HashMap<String, TypeInfo>,
    records: HashMap<String, Vec<Field>>,
    enumerators: HashMap<String, Option<Expr>>,
    enum_order: Vec<(String, String)>,
    globals: HashMap<String, TypeInfo>,
    functions: HashMap<String, TypeInfo>,
}

fn unsigned(base: BaseType) -> TypeInfo {
    let mut t = TypeInfo::new(base);
    t.signedness = Signedness::Unsigned;
    t
}

impl TypeEnv {
    pub fn from_unit(unit: &SourceUnit) -> Self {
        let mut env = TypeEnv::default();
        for (name, ty) in [
            ("size_t", unsigned(BaseType::Long)),
            ("uintptr_t", unsigned(BaseType::Long)),
            ("uint64_t", unsigned(BaseType::Long)),
            ("uint32_t", unsigned(BaseType::Int)),
            ("uint16_t", unsigned(BaseType::Short)),
            ("uint8_t", unsigned(BaseType::Char)),
            ("ssize_t", TypeInfo::new(BaseType::Long)),
            ("ptrdiff_t", TypeInfo::new(BaseType::Long)),
            ("intptr_t", TypeInfo::new(BaseType::Long)),
            ("int64_t", TypeInfo::new(BaseType::Long)),
            ("int32_t", TypeInfo::new(BaseType::Int)),
            ("int16_t", TypeInfo::new(BaseType::Short)),
            ("int8_t", {
                let mut t = TypeInfo::new(BaseType::Char);
                t.signedness = Signedness::Signed;
                t
            }),
            ("FILE", TypeInfo::new(BaseType::Struct("_IO_FILE".into()))),
            ("Range", TypeInfo::new(BaseType::Struct(RANGE_STRUCT_KEY.into()))),
        ] {
            env.typedefs.insert(name.to_string(), ty);
        }
        env.records.insert(
            RANGE_STRUCT_KEY.to_string(),
            vec![
                Field {
                    name: "min".into(),
                    ty: TypeInfo::double(),
                },
                Field {
                    name: "max".into(),
                    ty: TypeInfo::double(),
                },
                Field {
                    name: "initialized".into(),
                    ty: TypeInfo::int(),
                },
            ],
        );
        for item in &unit.items {
            match item {
                Item::Decl(d) => env.add_file_decl(d),
                Item::Function(f) => {
                    env.functions.insert(f.name.clone(), f.return_type.clone());
                }
                _ => {}
            }
        }
        env
    }

    fn add_tag_def(&mut self, def: &TagDef) {
        match def {
            TagDef::Record(r) => {
                self.records.insert(r.key.clone(), r.fields.clone());
            }
            TagDef::Enum(e) => {
                for (n, v) in &e.variants {
                    self.enumerators.insert(n.clone(), v.clone());
                    self.enum_order.push((e.key.clone(), n.clone()));
                }
            }
        }
    }

    fn add_file_decl(&mut self, d: &Declaration) {
        self.add_decl(d, true);
    }

    /// Registers tags and typedefs from a declaration; file-scope variables
    /// also become globals.
    pub fn add_decl(&mut self, d: &Declaration, file_scope: bool) {
        if let Some(def) = &d.tag_def {
            self.add_tag_def(def);
        }
        for decl in &d.declarators {
            if d.storage == Some(Storage::Typedef) {
                self.typedefs.insert(decl.name.clone(), decl.ty.clone());
            } else if decl.func.is_some() {
                self.functions.insert(decl.name.clone(), decl.ty.clone());
            } else if file_scope {
                self.globals.insert(decl.name.clone(), decl.ty.clone());
            }
        }
    }

    pub fn global(&self, name: &str) -> Option<&TypeInfo> {
        self.globals.get(name)
    }

    pub fn is_function(&self, name: &str) -> bool {
        self.functions.contains_key(name)
    }

    pub fn function_return(&self, name: &str) -> Option<&TypeInfo> {
        self.functions.get(name)
    }

    pub fn is_enumerator(&self, name: &str) -> bool {
        self.enumerators.contains_key(name)
    }

    /// Enumerators in declaration order with their explicit values.
    pub fn enumerators(&self) -> impl Iterator<Item = (&str, Option<&Expr>)> {
        self.enum_order
            .iter()
            .map(|(_, n)| (n.as_str(), self.enumerators.get(n).and_then(|v| v.as_ref())))
    }

    pub fn record_fields(&self, key: &str) -> Option<&[Field]> {
        self.records.get(key).map(|v| v.as_slice())
    }

    /// Expands typedef chains. `None` when a typedef name is unknown.
    pub fn resolve(&self, ty: &TypeInfo) -> Option<TypeInfo> {
        let mut cur = ty.clone();
        for _ in 0..32 {
            let BaseType::Typedef(name) = &cur.base else {
                return Some(cur);
            };
            let target = self.typedefs.get(name)?;
            let mut next = target.clone();
            next.pointer_depth += cur.pointer_depth;
            next.is_const |= cur.is_const;
            // Declarator dimensions are outermost.
            let mut dims = cur.array_dims.clone();
            dims.extend(next.array_dims.iter().cloned());
            next.array_dims = dims;
            cur = next;
        }
        None
    }

    pub fn field_type(&self, record_key: &str, field: &str) -> Option<TypeInfo> {
        self.records
            .get(record_key)?
            .iter()
            .find(|f| f.name == field)
            .map(|f| f.ty.clone())
    }
}

/// Lexical scopes over locals and parameters, falling back to globals.
#[derive(Debug, Clone)]
pub struct Scopes<'e> {
    pub env: &'e TypeEnv,
    frames: Vec<HashMap<String, TypeInfo>>,
}

impl<'e> Scopes<'e> {
    pub fn new(env: &'e TypeEnv) -> Self {
        Self {
            env,
            frames: vec![HashMap::new()],
        }
    }

    pub fn for_function(env: &'e TypeEnv, f: &FunctionDef) -> Self {
        let mut s = Self::new(env);
        for p in &f.params {
            if let Some(n) = &p.name {
                s.declare(n, p.ty.clone());
            }
        }
        s
    }

    pub fn push(&mut self) {
        self.frames.push(HashMap::new());
    }

    pub fn pop(&mut self) {
        self.frames.pop();
    }

    pub fn declare(&mut self, name: &str, ty: TypeInfo) {
        if let Some(top) = self.frames.last_mut() {
            top.insert(name.to_string(), ty);
        }
    }

    pub fn declare_all(&mut self, d: &Declaration) {
        if d.storage == Some(Storage::Typedef) {
            return;
        }
        for decl in &d.declarators {
            if decl.func.is_none() {
                self.declare(&decl.name, decl.ty.clone());
            }
        }
    }

    /// Whether `name` is bound in a block or parameter scope.
    pub fn is_local(&self, name: &str) -> bool {
        self.frames.iter().any(|f| f.contains_key(name))
    }

    /// Declared (unresolved) type of a variable.
    pub fn lookup(&self, name: &str) -> Option<&TypeInfo> {
        self.frames
            .iter()
            .rev()
            .find_map(|f| f.get(name))
            .or_else(|| self.env.global(name))
    }

    /// Resolved type of an lvalue-like expression.
    pub fn type_of(&self, e: &Expr) -> Option<TypeInfo> {
        match e {
            Expr::Paren(x) => self.type_of(x),
            Expr::Ident(n) => self.env.resolve(self.lookup(n)?),
            Expr::Cast { ty, .. } => self.env.resolve(ty),
            Expr::Member { base, field, arrow } => {
                let mut bt = self.type_of(base)?;
                if *arrow {
                    if bt.pointer_depth != 1 || !bt.array_dims.is_empty() {
                        return None;
                    }
                    bt.pointer_depth = 0;
                } else if bt.pointer_depth != 0 || !bt.array_dims.is_empty() {
                    return None;
                }
                let BaseType::Struct(key) = &bt.base else {
                    return None;
                };
                self.env.resolve(&self.env.field_type(key, field)?)
            }
            Expr::Index { base, .. } => {
                let mut bt = self.type_of(base)?;
                if !bt.array_dims.is_empty() {
                    bt.array_dims.remove(0);
                } else if bt.pointer_depth > 0 {
                    bt.pointer_depth -= 1;
                } else {
                    return None;
                }
                Some(bt)
            }
            Expr::Unary {
                op: UnaryOp::Deref,
                operand,
            } => {
                let mut t = self.type_of(operand)?;
                if !t.array_dims.is_empty() {
                    t.array_dims.remove(0);
                } else if t.pointer_depth > 0 {
                    t.pointer_depth -= 1;
                } else {
                    return None;
                }
                Some(t)
            }
            _ => None,
        }
    }
}
