//! Patch planning, application, merging and the repair-and-revalidate loop.

mod blocks;
mod catalog;
mod holdsets;
mod ide;
mod lockorder;
mod locks;
mod merge;
mod patch;
mod revalidate;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::RaceWarning;
use crate::frontend::Location;
use crate::graphs::GraphError;
use crate::pipeline::PipelineError;

pub use blocks::{find_sections, Section, SectionKind};
pub use catalog::{catalog, StrategyInfo};
pub use holdsets::{compute_hold_sets, lock_targets, HoldSets};
pub use ide::plan_ide_repair;
pub use lockorder::{compute_lock_order, LockOrderGraph};
pub use locks::{fresh_lock_name, plan_lock_repair, FRESH_LOCK_PREFIX};
pub use merge::{count_generated, merge_fixes};
pub use patch::{apply_patches, reline, strip_generated};
pub use revalidate::{plan_repairs, repair_and_validate, Method, RepairConfig, RepairOutcome, RepairStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Before,
    After,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PatchKind {
    InsertIrqDisable(u32),
    InsertIrqEnable(u32),
    InsertLock(String),
    InsertUnlock(String),
    /// Moves the lock or unlock statement at the given location.
    MoveLock(Location),
}

/// One edit: `kind` placed on `side` of the statement at `anchor`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PatchOp {
    pub kind: PatchKind,
    pub anchor: Location,
    pub side: Side,
}

impl PatchOp {
    pub fn new(kind: PatchKind, anchor: Location, side: Side) -> Self {
        PatchOp { kind, anchor, side }
    }
}

impl fmt::Display for PatchOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = match self.side {
            Side::Before => "before",
            Side::After => "after",
        };
        match &self.kind {
            PatchKind::InsertIrqDisable(l) => write!(f, "irq_disable({l}) {side} {}", self.anchor),
            PatchKind::InsertIrqEnable(l) => write!(f, "irq_enable({l}) {side} {}", self.anchor),
            PatchKind::InsertLock(n) => write!(f, "lock({n}) {side} {}", self.anchor),
            PatchKind::InsertUnlock(n) => write!(f, "unlock({n}) {side} {}", self.anchor),
            PatchKind::MoveLock(from) => write!(f, "move {from} {side} {}", self.anchor),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    Ide,
    Al,
    Ecs,
    Unrepairable(String),
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Ide => "IDE",
            Strategy::Al => "AL",
            Strategy::Ecs => "ECS",
            Strategy::Unrepairable(_) => "Unrepairable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairPlan {
    pub warning: RaceWarning,
    pub strategy: Strategy,
    pub patches: Vec<PatchOp>,
}

impl RepairPlan {
    pub fn unrepairable(warning: &RaceWarning, reason: impl Into<String>) -> Self {
        RepairPlan {
            warning: warning.clone(),
            strategy: Strategy::Unrepairable(reason.into()),
            patches: Vec::new(),
        }
    }

    pub fn is_repairable(&self) -> bool {
        !matches!(self.strategy, Strategy::Unrepairable(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RepairError {
    #[error("patch anchor {0} no longer exists")]
    AnchorVanished(Location),
    #[error("statement at {0} is not a lock operation")]
    NotALockOp(Location),
    #[error("patched program is ill formed: {0}")]
    IllFormed(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}
