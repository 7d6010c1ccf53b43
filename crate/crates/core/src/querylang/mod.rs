//! Text query language: lexer, recursive-descent parser, canonical printer
//! and validator.
//!
//! ```text
//! query   := SELECT proj ("," proj)* PATTERNS pattern+ [ANTIPATTERNS pattern+]
//!            [WHERE cond (AND cond)*] [ORDERBY AVG "(" pattern ")" [ASC|DESC]] [LIMIT int]
//! pattern := vatom ("-" eatom "-" vatom)*
//! vatom   := KIND ["(" ident ")"]
//! eatom   := KIND ["." ident]
//! proj    := ident "." ident | KIND "(" ident ")" "." ident | KIND "." ident
//! cond    := proj op literal
//! ```

mod ast;
mod lexer;
mod parser;
mod presets;
mod unparse;
mod validate;

use thiserror::Error;

pub use ast::*;
pub use parser::parse;
pub use presets::{
    recommendation_query, refine, Refinement, RefinementError, LISTING_1, SAMPLE_STEAMID,
};
pub use unparse::unparse;
pub use validate::{
    validate, Atom, CompiledCondition, CompiledOrder, CompiledPattern, CompiledProjection, Step,
    TypedQuery, ValidationError, VarInfo,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: expected {expected}, found {found}")]
pub struct SyntaxError {
    pub line: usize,
    /// 1-based, counted in characters.
    pub column: usize,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

impl QueryError {
    /// Source position, when the error has one.
    pub fn position(&self) -> Option<(usize, usize)> {
        match self {
            QueryError::Syntax(e) => Some((e.line, e.column)),
            QueryError::Validation(_) => None,
        }
    }
}

/// Parses and validates in one step.
pub fn compile(text: &str) -> Result<TypedQuery, QueryError> {
    Ok(validate(&parse(text)?)?)
}
