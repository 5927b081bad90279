//! Deterministic interpreter with interrupt injection, race validation and
//! an exhaustive single-injection oracle.

mod inputs;
mod machine;
mod oracle;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::Serialize;
use thiserror::Error;

use crate::alias::link_alias_sets;
use crate::detect::AccessKind;
use crate::frontend::{Location, Program};
use crate::graphs::{build_context, Cfg, GraphError, IrqOp, LoopMode};

pub use inputs::{identify_input_points, InputPoint, InputSpace};
pub use machine::{Exec, Fired, Machine};
pub use oracle::{exhaustive_oracle, DeadlockWitness, OracleRace, OracleResult};
pub use validate::{baseline, covers_in_order, firing_point, validate_race, BaseStep, Baseline, ValidationVerdict};

/// Concrete values for input points, keyed by register or global name.
pub type Input = BTreeMap<String, u64>;

pub const DEFAULT_STEP_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VmError {
    #[error("step limit of {0} exceeded")]
    StepLimitExceeded(u64),
    #[error("no ISR on interrupt line {0}")]
    UnknownLine(u32),
    #[error("unknown routine `{0}`")]
    UnknownRoutine(String),
    #[error("input space of {size} exceeds budget {budget}")]
    BudgetExceeded { size: u128, budget: u128 },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A storage cell. Locals are owned by one activation and inlined frame.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cell {
    Global(String),
    Register(String),
    Local { act: u32, frame: u32, qname: String },
}

impl Cell {
    /// Declared name as used by the static stage.
    pub fn resource(&self) -> String {
        match self {
            Cell::Global(n) | Cell::Register(n) => n.clone(),
            Cell::Local { qname, .. } => qname.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Value {
    Int(u64),
    Ptr(Cell),
}

impl Value {
    /// Pointers read as zero in arithmetic and conditions.
    pub fn as_int(&self) -> u64 {
        match self {
            Value::Int(v) => *v,
            Value::Ptr(_) => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    Access {
        ctx: String,
        loc: Option<Location>,
        resource: String,
        cell: Cell,
        kind: AccessKind,
        value: u64,
    },
    Irq {
        ctx: String,
        loc: Option<Location>,
        op: IrqOp,
    },
    IsrEntry {
        isr: String,
        line: u32,
    },
    IsrExit {
        isr: String,
        line: u32,
    },
    Output {
        ctx: String,
        loc: Option<Location>,
        value: u64,
    },
    Block {
        ctx: String,
        loc: Option<Location>,
        lock: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Completed,
    Deadlock,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
    pub outputs: Vec<u64>,
    pub outcome: Outcome,
}

impl Trace {
    /// One line per event: `kind \t routine \t location \t detail`.
    pub fn dump(&self, p: &Program) -> String {
        let at = |loc: &Option<Location>| match loc {
            Some(l) => format!("{}:{}", l.routine, p.line_of(l)),
            None => "-".to_string(),
        };
        let mut out = String::new();
        for e in &self.events {
            let (kind, routine, loc, detail) = match e {
                TraceEvent::Access {
                    ctx,
                    loc,
                    resource,
                    kind,
                    value,
                    ..
                } => ("access", ctx.as_str(), at(loc), format!("{kind} {resource} = {value}")),
                TraceEvent::Irq { ctx, loc, op } => ("irq", ctx.as_str(), at(loc), irq_text(*op)),
                TraceEvent::IsrEntry { isr, line } => ("isr_entry", isr.as_str(), "-".into(), format!("line {line}")),
                TraceEvent::IsrExit { isr, line } => ("isr_exit", isr.as_str(), "-".into(), format!("line {line}")),
                TraceEvent::Output { ctx, loc, value } => ("output", ctx.as_str(), at(loc), value.to_string()),
                TraceEvent::Block { ctx, loc, lock } => ("block", ctx.as_str(), at(loc), lock.clone()),
            };
            let _ = writeln!(out, "{kind}\t{routine}\t{loc}\t{detail}");
        }
        let _ = writeln!(out, "end\t-\t-\t{:?}", self.outcome);
        out
    }
}

fn irq_text(op: IrqOp) -> String {
    match op {
        IrqOp::Disable(n) => format!("disable {n}"),
        IrqOp::Enable(n) => format!("enable {n}"),
        IrqOp::DisableAll => "disable all".into(),
        IrqOp::EnableAll => "enable all".into(),
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} events, outputs {:?}, {:?}",
            self.events.len(),
            self.outputs,
            self.outcome
        )
    }
}

/// A program prepared for execution.
#[derive(Debug, Clone)]
pub struct Vm {
    pub program: Program,
    graphs: Vec<Cfg>,
    /// Qualified locals whose address is taken somewhere.
    taken: BTreeSet<String>,
    pub step_limit: u64,
}

impl Vm {
    pub fn new(p: &Program) -> Result<Self, VmError> {
        let graphs = p
            .contexts()
            .map(|r| build_context(p, &r.name, LoopMode::Preserve))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Vm {
            program: p.clone(),
            graphs,
            taken: link_alias_sets(p).address_taken(),
            step_limit: DEFAULT_STEP_LIMIT,
        })
    }

    pub fn with_step_limit(mut self, limit: u64) -> Self {
        self.step_limit = limit;
        self
    }

    fn graph_index(&self, ctx: &str) -> Option<usize> {
        self.graphs.iter().position(|g| g.ctx == ctx)
    }
}

/// When a scheduled interrupt is raised.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TriggerPoint {
    /// After the next completed execution of a statement.
    After(Location),
    /// After the n-th statement (from 1) of the entry context.
    AfterStep(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trigger {
    pub at: TriggerPoint,
    pub line: u32,
}

/// Interrupts raised in order. A raised line that cannot fire yet stays
/// pending until it can.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InterruptSchedule {
    pub triggers: Vec<Trigger>,
}

impl InterruptSchedule {
    pub fn after(mut self, loc: Location, line: u32) -> Self {
        self.triggers.push(Trigger {
            at: TriggerPoint::After(loc),
            line,
        });
        self
    }

    pub fn after_step(mut self, step: u64, line: u32) -> Self {
        self.triggers.push(Trigger {
            at: TriggerPoint::AfterStep(step),
            line,
        });
        self
    }
}

/// Runs `entry` with the given inputs, raising scheduled interrupts at
/// statement boundaries.
pub fn execute(p: &Program, input: &Input, sched: &InterruptSchedule, entry: &str) -> Result<Trace, VmError> {
    let vm = Vm::new(p)?;
    execute_on(&vm, input, sched, entry)
}

pub fn execute_on(vm: &Vm, input: &Input, sched: &InterruptSchedule, entry: &str) -> Result<Trace, VmError> {
    for t in &sched.triggers {
        if vm.program.isr_for_line(t.line).is_none() {
            return Err(VmError::UnknownLine(t.line));
        }
    }
    let mut m = Machine::new(vm, input, entry)?;
    let mut next = 0usize;
    let mut base_steps = 0u64;
    let mut pending: Vec<u32> = Vec::new();
    let outcome = loop {
        match m.exec()? {
            Exec::Idle => break Outcome::Completed,
            Exec::Blocked { .. } => break Outcome::Deadlock,
            Exec::Instr { depth, loc } => {
                if depth == 1 {
                    base_steps += 1;
                }
                while let Some(t) = sched.triggers.get(next) {
                    let hit = match &t.at {
                        TriggerPoint::After(l) => *l == loc,
                        TriggerPoint::AfterStep(k) => depth == 1 && *k == base_steps,
                    };
                    if !hit {
                        break;
                    }
                    pending.push(t.line);
                    next += 1;
                }
                fire_pending(&mut m, &mut pending)?;
            }
            Exec::Popped { .. } => fire_pending(&mut m, &mut pending)?,
            Exec::Pass => {}
        }
    };
    Ok(Trace {
        events: m.events,
        outputs: m.outputs,
        outcome,
    })
}

fn fire_pending(m: &mut Machine<'_>, pending: &mut Vec<u32>) -> Result<(), VmError> {
    if m.is_finished() {
        return Ok(());
    }
    // Highest priority first, so a later lower-priority start cannot block it.
    pending.sort_by_key(|&l| std::cmp::Reverse(m.priority_of_line(l)));
    let mut i = pending.len();
    while i > 0 {
        i -= 1;
        if m.can_fire(pending[i])? {
            let line = pending.remove(i);
            m.raise(line)?;
            return Ok(());
        }
    }
    Ok(())
}
