//! Guided symbolic execution that finds inputs driving a warning's two
//! events in order, or shows that none exist.

mod explore;
mod solver;
mod term;

pub use explore::{guided_explore, Budget, InconclusiveReason, SymExecResult};
pub use solver::{SolveResult, Solver, FULL_DOMAIN_BITS, SEARCH_LIMIT};
pub use term::{Constraint, Term};

pub use crate::vm::{identify_input_points, InputPoint};

use crate::detect::RaceWarning;
use crate::frontend::Program;
use crate::graphs::{build_context, build_iccfg, GraphError, Iccfg, LoopMode};

/// Joined graph used to explore `wn`, with loops kept.
pub fn iccfg_for(p: &Program, wn: &RaceWarning) -> Result<Iccfg, GraphError> {
    let gi = build_context(p, &wn.ei.ctx, LoopMode::Preserve)?;
    let gj = build_context(p, &wn.ej.ctx, LoopMode::Preserve)?;
    build_iccfg(&gi, &gj, &wn.ei.loc, &wn.ej.loc, true)
}
