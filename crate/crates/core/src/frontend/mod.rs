//! IDL parsing, printing and well-formedness checks.

pub mod ast;
pub mod check;
mod lexer;
mod parser;
pub mod printer;

use thiserror::Error;

pub use ast::*;
pub use check::{diagnostics, resolve, DiagKind, Diagnostic, Symbol};
pub use parser::{parse_syntax, KEYWORDS};
pub use printer::print_program;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: u32, col: u32, message: String },
    #[error("routine `{0}` declared twice")]
    DuplicateRoutine(String),
    #[error("interrupt line {0} has two handlers")]
    DuplicateIrqLine(u32),
    #[error("{location}: unknown identifier `{name}`")]
    UnknownIdentifier { name: String, location: Location },
}

/// Parses `src` and rejects duplicate routines, duplicate interrupt lines and
/// unresolved identifiers. Other invariants are left to [`check_program`].
pub fn parse_program(src: &str) -> Result<Program, FrontendError> {
    let prog = parse_syntax(src)?;
    let mut names = std::collections::BTreeSet::new();
    let mut lines = std::collections::BTreeSet::new();
    for r in &prog.routines {
        if !names.insert(r.name.as_str()) {
            return Err(FrontendError::DuplicateRoutine(r.name.clone()));
        }
        if let Some(line) = r.irq_line() {
            if !lines.insert(line) {
                return Err(FrontendError::DuplicateIrqLine(line));
            }
        }
    }
    for d in diagnostics(&prog) {
        if matches!(d.kind, DiagKind::UnknownIdentifier | DiagKind::UnknownRoutine) {
            let name = d.message.split('`').nth(1).unwrap_or_default().to_string();
            return Err(FrontendError::UnknownIdentifier {
                name,
                location: d.location.unwrap_or_else(|| Location::new("", 0)),
            });
        }
    }
    Ok(prog)
}

/// Verifies every program invariant. Returns the program unchanged when it is
/// well formed.
pub fn check_program(p: Program) -> Result<Program, Vec<Diagnostic>> {
    let diags = diagnostics(&p);
    if diags.is_empty() {
        Ok(p)
    } else {
        Err(diags)
    }
}

/// Parses and checks in one step.
pub fn load(src: &str) -> Result<Program, LoadError> {
    let p = parse_program(src)?;
    check_program(p).map_err(LoadError::Invalid)
}

#[derive(Debug, Clone, Error)]
pub enum LoadError {
    #[error(transparent)]
    Parse(#[from] FrontendError),
    #[error("{} diagnostic(s); first: {}", .0.len(), .0[0])]
    Invalid(Vec<Diagnostic>),
}
