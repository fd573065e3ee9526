use std::rc::Rc;

/// Fully resolved type used during execution.
#[derive(Debug, Clone, PartialEq)]
pub enum CType {
    Void,
    Bool,
    Int { bytes: u8, signed: bool },
    Float,
    Double,
    Ptr(Rc<CType>),
    Array(Rc<CType>, usize),
    Struct(String),
    /// Opaque stdio stream.
    File,
}

impl CType {
    pub const INT: CType = CType::Int {
        bytes: 4,
        signed: true,
    };
    pub const LONG: CType = CType::Int {
        bytes: 8,
        signed: true,
    };
    pub const ULONG: CType = CType::Int {
        bytes: 8,
        signed: false,
    };
    pub const CHAR: CType = CType::Int {
        bytes: 1,
        signed: true,
    };

    pub fn ptr(to: CType) -> CType {
        CType::Ptr(Rc::new(to))
    }

    pub fn is_integer(&self) -> bool {
        matches!(self, CType::Int { .. } | CType::Bool)
    }

    pub fn is_floating(&self) -> bool {
        matches!(self, CType::Float | CType::Double)
    }

    pub fn is_arithmetic(&self) -> bool {
        self.is_integer() || self.is_floating()
    }

    pub fn is_scalar(&self) -> bool {
        self.is_arithmetic() || matches!(self, CType::Ptr(_))
    }

    pub fn pointee(&self) -> Option<&CType> {
        match self {
            CType::Ptr(t) => Some(t),
            _ => None,
        }
    }

    /// Integer promotion.
    pub fn promoted(&self) -> CType {
        match self {
            CType::Bool => CType::INT,
            CType::Int { bytes, .. } if *bytes < 4 => CType::INT,
            other => other.clone(),
        }
    }

    /// Array-to-pointer decay.
    pub fn decayed(&self) -> CType {
        match self {
            CType::Array(t, _) => CType::Ptr(t.clone()),
            other => other.clone(),
        }
    }
}

/// Usual arithmetic conversions for two arithmetic operands.
pub fn common_type(a: &CType, b: &CType) -> CType {
    if matches!(a, CType::Double) || matches!(b, CType::Double) {
        return CType::Double;
    }
    if matches!(a, CType::Float) || matches!(b, CType::Float) {
        return CType::Float;
    }
    let (a, b) = (a.promoted(), b.promoted());
    let (
        CType::Int {
            bytes: ab,
            signed: asg,
        },
        CType::Int {
            bytes: bb,
            signed: bsg,
        },
    ) = (&a, &b)
    else {
        return CType::INT;
    };
    if asg == bsg {
        return CType::Int {
            bytes: *ab.max(bb),
            signed: *asg,
        };
    }
    let (sb, ub) = if *asg { (*ab, *bb) } else { (*bb, *ab) };
    if ub >= sb {
        CType::Int {
            bytes: ub,
            signed: false,
        }
    } else {
        CType::Int {
            bytes: sb,
            signed: true,
        }
    }
}

/// Reduces `v` to the value range of an integer type.
pub fn wrap_int(v: i64, bytes: u8, signed: bool) -> i64 {
    match (bytes, signed) {
        (1, true) => v as i8 as i64,
        (1, false) => v as u8 as i64,
        (2, true) => v as i16 as i64,
        (2, false) => v as u16 as i64,
        (4, true) => v as i32 as i64,
        (4, false) => v as u32 as i64,
        _ => v,
    }
}
