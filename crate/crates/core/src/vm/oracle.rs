use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::validate::inject;
use super::{baseline, firing_point, Cell, Input, InputSpace, Outcome, Vm, VmError};
use crate::detect::{AccessKind, RaceWarning};
use crate::frontend::Location;

/// A race observed by concrete execution, keyed like a static warning.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct OracleRace {
    pub ei_ctx: String,
    pub ei_loc: Location,
    pub ej_ctx: String,
    pub ej_loc: Location,
    pub resource: String,
}

impl OracleRace {
    pub fn matches(&self, wn: &RaceWarning) -> bool {
        self.ei_ctx == wn.ei.ctx
            && self.ei_loc == wn.ei.loc
            && self.ej_ctx == wn.ej.ctx
            && self.ej_loc == wn.ej.loc
            && self.resource == wn.resource
    }
}

/// A run that ended blocked on a lock.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct DeadlockWitness {
    pub ctx: String,
    /// Injected ISR, absent when the context deadlocks on its own.
    pub isr: Option<String>,
    /// Statement after which the ISR fired.
    pub after: Option<Location>,
}

#[derive(Debug, Clone, Default)]
pub struct OracleResult {
    /// Every race with the first input exhibiting it.
    pub races: BTreeMap<OracleRace, Input>,
    pub deadlocks: BTreeMap<DeadlockWitness, Input>,
    pub inputs: u128,
    pub runs: u64,
}

impl OracleResult {
    pub fn contains(&self, wn: &RaceWarning) -> bool {
        self.races.keys().any(|r| r.matches(wn))
    }

    pub fn race_set(&self) -> BTreeSet<OracleRace> {
        self.races.keys().cloned().collect()
    }
}

fn kind_of(writes: bool) -> AccessKind {
    if writes {
        AccessKind::Write
    } else {
        AccessKind::Read
    }
}

/// Runs every context under every input in `space`, injecting each
/// preempting ISR once at every point where it can fire.
pub fn exhaustive_oracle(vm: &Vm, space: &InputSpace, budget: u128) -> Result<OracleResult, VmError> {
    let size = space.size();
    if size > budget {
        return Err(VmError::BudgetExceeded { size, budget });
    }
    let p = &vm.program;
    let mut res = OracleResult {
        inputs: size,
        ..OracleResult::default()
    };
    for input in space.iter() {
        for e in p.contexts() {
            let base = baseline(vm, &input, &e.name)?;
            res.runs += 1;
            if base.trace.outcome == Outcome::Deadlock {
                res.deadlocks
                    .entry(DeadlockWitness {
                        ctx: e.name.clone(),
                        isr: None,
                        after: None,
                    })
                    .or_insert_with(|| input.clone());
            }
            for h in p.isrs().filter(|h| p.preempts(&h.name, &e.name)) {
                let line = h.irq_line().expect("ISR has a line");
                let mut runs = BTreeMap::new();
                for k in 0..base.steps.len() {
                    if base.steps[k].can_fire.get(&line).copied().unwrap_or(false) {
                        let inj = inject(vm, &input, &e.name, k + 1, line)?;
                        res.runs += 1;
                        if inj.trace.outcome == Outcome::Deadlock {
                            res.deadlocks
                                .entry(DeadlockWitness {
                                    ctx: e.name.clone(),
                                    isr: Some(h.name.clone()),
                                    after: Some(base.steps[k].loc.clone()),
                                })
                                .or_insert_with(|| input.clone());
                        }
                        runs.insert(k, inj);
                    }
                }
                for (s, step) in base.steps.iter().enumerate() {
                    let cells: BTreeSet<&Cell> = step.accesses.iter().map(|(c, _)| c).collect();
                    for cell in cells {
                        let Some(k) = firing_point(&base, s, cell, line) else {
                            continue;
                        };
                        let run = &runs[&k];
                        let ei_kind = kind_of(step.does(cell, AccessKind::Write));
                        let mut at_loc: BTreeMap<&Location, bool> = BTreeMap::new();
                        for (l, c, kind) in &run.isr_accesses {
                            if c == cell {
                                *at_loc.entry(l).or_default() |= *kind == AccessKind::Write;
                            }
                        }
                        for (l, w) in at_loc {
                            if ei_kind == AccessKind::Read && !w {
                                continue;
                            }
                            res.races
                                .entry(OracleRace {
                                    ei_ctx: e.name.clone(),
                                    ei_loc: step.loc.clone(),
                                    ej_ctx: h.name.clone(),
                                    ej_loc: l.clone(),
                                    resource: cell.resource(),
                                })
                                .or_insert_with(|| input.clone());
                        }
                    }
                }
            }
        }
    }
    Ok(res)
}
