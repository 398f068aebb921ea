//! Clause language: abstract syntax, parser, canonical rendering, and
//! stratification of action predicates.

mod ast;
mod parse;
mod strata;

pub use ast::{render_rules, Action, Clause, Literal, PredicateDecl, PredicateKind, RuleSet};
pub use parse::{parse_rules, Pos, RuleError};
pub use strata::{validate_stratification, StratificationReport};
