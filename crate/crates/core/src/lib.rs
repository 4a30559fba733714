//! Executable definitional interpreters and type checkers for the ladder of
//! calculi from F<: to DOT.

pub mod bridge;
pub mod eval;
pub mod harness;
pub mod judgment;
pub mod runtime;
pub mod smallstep;
pub mod statics;
pub mod syntax;
