use std::collections::BTreeMap;

use super::{Cell, Exec, Input, Machine, Outcome, Trace, TraceEvent, Vm, VmError};
use crate::detect::{AccessKind, RaceWarning};
use crate::frontend::Location;

/// One statement of an uninterrupted run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseStep {
    pub loc: Location,
    /// Observed accesses made by the statement.
    pub accesses: Vec<(Cell, AccessKind)>,
    /// Lines whose ISR could fire at the boundary right after this statement.
    pub can_fire: BTreeMap<u32, bool>,
}

impl BaseStep {
    pub fn touches(&self, cell: &Cell) -> bool {
        self.accesses.iter().any(|(c, _)| c == cell)
    }

    pub fn does(&self, cell: &Cell, kind: AccessKind) -> bool {
        self.accesses.iter().any(|(c, k)| c == cell && *k == kind)
    }
}

/// An uninterrupted run of one context.
#[derive(Debug, Clone)]
pub struct Baseline {
    pub ctx: String,
    pub steps: Vec<BaseStep>,
    pub trace: Trace,
}

fn accesses_since(m: &Machine<'_>, from: usize) -> Vec<(Cell, AccessKind)> {
    m.events[from..]
        .iter()
        .filter_map(|e| match e {
            TraceEvent::Access { cell, kind, .. } => Some((cell.clone(), *kind)),
            _ => None,
        })
        .collect()
}

pub fn baseline(vm: &Vm, input: &Input, ctx: &str) -> Result<Baseline, VmError> {
    let lines = vm.program.irq_lines();
    let mut m = Machine::new(vm, input, ctx)?;
    let mut steps = Vec::new();
    let outcome = loop {
        let mark = m.events.len();
        match m.step_base()? {
            Exec::Instr { loc, .. } => {
                let accesses = accesses_since(&m, mark);
                let mut can_fire = BTreeMap::new();
                for &l in &lines {
                    can_fire.insert(l, m.can_fire(l)?);
                }
                steps.push(BaseStep {
                    loc,
                    accesses,
                    can_fire,
                });
            }
            Exec::Blocked { .. } => break Outcome::Deadlock,
            _ => break Outcome::Completed,
        }
    };
    Ok(Baseline {
        ctx: ctx.to_string(),
        steps,
        trace: Trace {
            events: m.events,
            outputs: m.outputs,
            outcome,
        },
    })
}

/// Boundary (after step index) at which the ISR on `line` fires for the
/// access to `cell` at step `s`: right after it when possible, otherwise the
/// first possible boundary before the context touches `cell` again. `None`
/// when no such boundary exists.
pub fn firing_point(b: &Baseline, s: usize, cell: &Cell, line: u32) -> Option<usize> {
    let ok = |k: usize| b.steps[k].can_fire.get(&line).copied().unwrap_or(false);
    if ok(s) {
        return Some(s);
    }
    let next = (s + 1..b.steps.len()).find(|&k| b.steps[k].touches(cell))?;
    (s + 1..next).find(|&k| ok(k))
}

/// What the injected ISR did, and how the rest of the run went.
#[derive(Debug, Clone)]
pub(crate) struct Injection {
    /// Accesses by the ISR: statement, cell, kind.
    pub isr_accesses: Vec<(Location, Cell, AccessKind)>,
    /// The ISR itself blocked on a lock.
    pub isr_blocked: bool,
    pub isr_executed: Vec<Location>,
    pub trace: Trace,
}

/// Replays the first `count` statements of `ctx`, fires the ISR on `line`,
/// then lets the context finish.
pub(crate) fn inject(vm: &Vm, input: &Input, ctx: &str, count: usize, line: u32) -> Result<Injection, VmError> {
    let mut m = Machine::new(vm, input, ctx)?;
    for _ in 0..count {
        m.step_base()?;
    }
    let mark = m.events.len();
    let fired = m.fire(line)?;
    let blocked = fired.blocked;
    let isr_accesses = m.events[mark..]
        .iter()
        .filter_map(|e| match e {
            TraceEvent::Access {
                loc: Some(loc),
                cell,
                kind,
                ..
            } => Some((loc.clone(), cell.clone(), *kind)),
            _ => None,
        })
        .collect();
    let outcome = if blocked.is_some() || m.run_to_end()?.is_some() {
        Outcome::Deadlock
    } else {
        Outcome::Completed
    };
    Ok(Injection {
        isr_accesses,
        isr_blocked: blocked.is_some(),
        isr_executed: fired.executed,
        trace: Trace {
            events: m.events,
            outputs: m.outputs,
            outcome,
        },
    })
}

#[derive(Debug, Clone)]
pub enum ValidationVerdict {
    /// The ISR made the `ej` access after firing for `ei`. Harmful when the
    /// output stream differs from servicing the ISR just before `ei`.
    Confirmed {
        trace: Trace,
        harmful: bool,
    },
    /// The ISR could not fire anywhere in the window after `ei`.
    RefutedDisabled,
    /// The ISR fired but did not make the `ej` access.
    RefutedNoAccess,
    /// The input never executes `ei`.
    NotCovered,
    Deadlock {
        trace: Trace,
    },
}

impl ValidationVerdict {
    pub fn name(&self) -> &'static str {
        match self {
            ValidationVerdict::Confirmed { .. } => "Confirmed",
            ValidationVerdict::RefutedDisabled => "RefutedDisabled",
            ValidationVerdict::RefutedNoAccess => "RefutedNoAccess",
            ValidationVerdict::NotCovered => "NotCovered",
            ValidationVerdict::Deadlock { .. } => "Deadlock",
        }
    }

    pub fn is_confirmed(&self) -> bool {
        matches!(self, ValidationVerdict::Confirmed { .. })
    }
}

/// The same ISR serviced just before step `s` when it can fire there,
/// otherwise the uninterrupted run.
fn reference_run(vm: &Vm, input: &Input, base: &Baseline, s: usize, line: u32) -> Result<Trace, VmError> {
    let can_fire_before = if s == 0 {
        let m = Machine::new(vm, input, &base.ctx)?;
        m.can_fire(line)?
    } else {
        base.steps[s - 1].can_fire.get(&line).copied().unwrap_or(false)
    };
    if can_fire_before {
        Ok(inject(vm, input, &base.ctx, s, line)?.trace)
    } else {
        Ok(base.trace.clone())
    }
}

/// Replays `wn` under `input`, firing `ej`'s ISR after each execution of `ei`.
pub fn validate_race(vm: &Vm, wn: &RaceWarning, input: &Input) -> Result<ValidationVerdict, VmError> {
    let isr = vm
        .program
        .routine(&wn.ej.ctx)
        .ok_or_else(|| VmError::UnknownRoutine(wn.ej.ctx.clone()))?;
    let line = isr
        .irq_line()
        .ok_or_else(|| VmError::UnknownRoutine(wn.ej.ctx.clone()))?;
    let base = baseline(vm, input, &wn.ei.ctx)?;
    let mut covered = false;
    let mut fired = false;
    let mut tried = BTreeMap::new();
    for (s, step) in base.steps.iter().enumerate() {
        if step.loc != wn.ei.loc {
            continue;
        }
        let cells: Vec<&Cell> = step
            .accesses
            .iter()
            .filter(|(c, k)| c.resource() == wn.resource && *k == wn.ei.access)
            .map(|(c, _)| c)
            .collect();
        for cell in cells {
            covered = true;
            let Some(k) = firing_point(&base, s, cell, line) else {
                continue;
            };
            if let std::collections::btree_map::Entry::Vacant(e) = tried.entry(k) {
                e.insert(inject(vm, input, &wn.ei.ctx, k + 1, line)?);
            }
            let run = &tried[&k];
            fired = true;
            if run.isr_blocked {
                return Ok(ValidationVerdict::Deadlock {
                    trace: run.trace.clone(),
                });
            }
            let hit = run
                .isr_accesses
                .iter()
                .any(|(l, c, kind)| *l == wn.ej.loc && c == cell && *kind == wn.ej.access);
            if hit {
                let reference = reference_run(vm, input, &base, s, line)?;
                let harmful = run.trace.outputs != reference.outputs || run.trace.outcome != reference.outcome;
                return Ok(ValidationVerdict::Confirmed {
                    trace: run.trace.clone(),
                    harmful,
                });
            }
        }
    }
    Ok(if !covered {
        ValidationVerdict::NotCovered
    } else if fired {
        ValidationVerdict::RefutedNoAccess
    } else {
        ValidationVerdict::RefutedDisabled
    })
}

/// True iff some execution of `ei`, followed by forcing `ej`'s ISR
/// regardless of interrupt state, runs the `ej` statement.
pub fn covers_in_order(vm: &Vm, wn: &RaceWarning, input: &Input) -> Result<bool, VmError> {
    let line = vm
        .program
        .routine(&wn.ej.ctx)
        .and_then(|r| r.irq_line())
        .ok_or_else(|| VmError::UnknownRoutine(wn.ej.ctx.clone()))?;
    let base = baseline(vm, input, &wn.ei.ctx)?;
    for (s, step) in base.steps.iter().enumerate() {
        if step.loc == wn.ei.loc
            && inject(vm, input, &wn.ei.ctx, s + 1, line)?
                .isr_executed
                .contains(&wn.ej.loc)
        {
            return Ok(true);
        }
    }
    Ok(false)
}
