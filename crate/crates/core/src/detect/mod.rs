//! Static race detection: shared resources, interrupt operations, interrupt
//! status propagation and candidate race pairs.

mod intb;
mod irqops;
mod races;
mod resources;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::alias::{link_alias_sets, AliasSet};
use crate::frontend::{Location, Program};
use crate::graphs::{build_icfg, GraphError, NodeKind, Ricfg};

pub use intb::{node_irq_op, propagate_intb, reenablers, Enables, Intb};
pub use irqops::{identify_interrupt_ops, InterruptOperation, IrqKind, IrqTarget};
pub use races::{detect_static_races, window_enabled};
pub use resources::{identify_shared_resources, node_accesses, NodeAccess, SharedResourceSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AccessKind {
    #[serde(rename = "R")]
    Read,
    #[serde(rename = "W")]
    Write,
}

impl fmt::Display for AccessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AccessKind::Read => "R",
            AccessKind::Write => "W",
        })
    }
}

/// One access to a shared resource: ⟨T, L, V, AV, R, A⟩.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct SharedResourceAccess {
    /// Task or ISR performing the access.
    pub t: String,
    pub l: Location,
    /// Name at the access site.
    pub v: String,
    /// True iff `v` is the declared name.
    pub av: bool,
    /// Declared name of the accessed memory.
    pub r: String,
    pub a: AccessKind,
}

/// One side of a race warning.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Event {
    /// Task or ISR the access runs in.
    pub ctx: String,
    pub loc: Location,
    /// Source line of `loc`.
    pub line: u32,
    pub access: AccessKind,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.ctx, self.line, self.access)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Static,
    InputFound,
    Infeasible,
    Inconclusive,
    Confirmed,
    RefutedDynamic,
    /// Forcing the interleaving blocked on a lock.
    Deadlock,
}

/// An ordered pair of accesses that may race: `ej`'s ISR preempting right
/// after `ei`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RaceWarning {
    pub id: usize,
    pub ei: Event,
    pub ej: Event,
    pub resource: String,
    pub status: Status,
}

impl RaceWarning {
    /// Deduplication key.
    pub fn key(&self) -> (String, Location, String, Location, String) {
        (
            self.ei.ctx.clone(),
            self.ei.loc.clone(),
            self.ej.ctx.clone(),
            self.ej.loc.clone(),
            self.resource.clone(),
        )
    }
}

impl fmt::Display for RaceWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WN{} = <{}, {}> on {}", self.id, self.ei, self.ej, self.resource)
    }
}

/// Everything the static stage computes for a program.
#[derive(Debug, Clone)]
pub struct StaticAnalysis {
    pub aliases: AliasSet,
    pub srs: SharedResourceSet,
    pub accesses: Vec<SharedResourceAccess>,
    pub itrl: Vec<InterruptOperation>,
    /// Reduced graph per task and ISR, in declaration order.
    pub ricfgs: Vec<Ricfg>,
    /// Post-state interrupt vector per reduced-graph node.
    pub intb: Vec<Vec<Intb>>,
    pub warnings: Vec<RaceWarning>,
}

/// Runs the full static stage on a checked program.
pub fn analyze(p: &Program) -> Result<StaticAnalysis, GraphError> {
    let aliases = link_alias_sets(p);
    let icfgs = build_icfg(p)?;
    let (srs, accesses) = identify_shared_resources(p, &aliases, &icfgs);
    let itrl = identify_interrupt_ops(p);
    let ricfgs: Vec<Ricfg> = icfgs
        .iter()
        .map(|g| {
            crate::graphs::prune(g, |n| {
                matches!(
                    g.nodes[n].kind,
                    NodeKind::Irq(_)
                        | NodeKind::Output(_)
                        | NodeKind::Lock(_)
                        | NodeKind::Unlock(_)
                        | NodeKind::RequestIrq { .. }
                ) || !node_accesses(p, &aliases, g, n).is_empty()
            })
        })
        .collect();
    let intb: Vec<Vec<Intb>> = ricfgs.iter().map(|r| propagate_intb(p, &r.cfg)).collect();
    let warnings = detect_static_races(p, &aliases, &srs, &ricfgs, &intb);
    Ok(StaticAnalysis {
        aliases,
        srs,
        accesses,
        itrl,
        ricfgs,
        intb,
        warnings,
    })
}
