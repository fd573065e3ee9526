//! Parsing and printing of the supported C subset.
//!
//! The subset covers C89/C99 functions, scalar/struct/enum/pointer/array
//! declarations, `if`/`while`/`do`/`for`, `return`, `break`/`continue`,
//! expression statements, calls, member access and casts. `switch`, `goto`
//! and labels are kept as opaque statements; file-scope unions as opaque
//! items. `#include`/`#pragma` lines pass through verbatim; any other
//! preprocessor directive is rejected.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod types;
pub mod visit;

pub use ast::*;
pub use parser::parse_c;
pub use printer::print_c;
pub use types::{Scopes, TypeEnv};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FrontendError {
    #[error("{path}:{line}:{column}: syntax error: {message}")]
    Syntax {
        path: String,
        line: u32,
        column: u32,
        message: String,
    },
    #[error("{path}:{line}:{column}: unsupported construct: {construct}")]
    Unsupported {
        path: String,
        line: u32,
        column: u32,
        construct: String,
    },
}

impl FrontendError {
    pub fn line_column(&self) -> (u32, u32) {
        match self {
            FrontendError::Syntax { line, column, .. }
            | FrontendError::Unsupported { line, column, .. } => (*line, *column),
        }
    }
}
