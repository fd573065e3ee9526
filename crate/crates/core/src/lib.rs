//! Range-value fault screening for C programs.
//!
//! The pipeline parses preprocessed C, normalizes it so every interesting
//! value flows through a plain scalar assignment, selects which variables to
//! monitor, weaves `update_range` calls into the source, and finally compares
//! the per-variable `[min, max]` ranges observed on test runs against ranges
//! learned on training runs to predict which tests fail.

pub mod c_frontend;
pub mod cfmt;
pub mod instrument;
pub mod harness;
pub mod interp;
pub mod joinpoints;
pub mod normalize;
pub mod rtformat;
pub mod strategies;
