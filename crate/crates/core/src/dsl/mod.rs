//! A small expression language for radial functions `φ(s, ω)`.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := base ('^' intliteral)?
//! base   := number | ident | '(' expr ')' | func '(' expr ')'
//! func   := sin | cos | sqrt | abs | neg
//! ident  := s | w1 .. w9
//! ```
//!
//! `s` is time and `wk` is the k-th Cartesian component of the unit vector
//! `ω`. There is no unary minus; write `neg(x)`.

mod ast;
mod eval;
mod lexer;
mod parser;
mod spec;

pub use ast::{BinOp, RadialExpr, UnaryOp, Var};
pub use eval::{evaluate, EvalError, EvalErrorKind};
pub use parser::{parse, ParseError, ParseErrorKind};
pub use spec::{validate_spec, DomainConfig, RadialSpec, RangeWitness, ValidationReport};
