use std::collections::BTreeSet;

use serde::Serialize;

use super::blocks::{block_mut, find_sections, locate, Section, SectionKind};
use super::holdsets::compute_hold_sets;
use super::ide::plan_ide_repair;
use super::lockorder::compute_lock_order;
use super::locks::plan_lock_repair;
use super::merge::{count_generated, flatten_nested, merge_fixes};
use super::patch::{apply_patches, reline};
use super::{PatchKind, PatchOp, RepairError, RepairPlan};
use crate::detect::{analyze, RaceWarning};
use crate::frontend::{Location, Program};
use crate::pipeline::{run_pipeline, PipelineConfig, PipelineRun};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    /// Interrupt disable and enable.
    Ide,
    /// A fresh lock, else widening an existing one.
    Locks,
}

#[derive(Debug, Clone)]
pub struct RepairConfig {
    pub pipeline: PipelineConfig,
    /// Cap on revalidation rounds that widen sections.
    pub max_widen: u32,
    /// Methods tried for each warning, in order.
    pub methods: Vec<Method>,
}

impl Default for RepairConfig {
    fn default() -> Self {
        RepairConfig {
            pipeline: PipelineConfig::default(),
            max_widen: 32,
            methods: vec![Method::Ide, Method::Locks],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RepairStatus {
    Unchanged,
    Repaired,
    PartiallyRepaired,
}

#[derive(Debug, Clone)]
pub struct RepairOutcome {
    pub program: Program,
    pub status: RepairStatus,
    pub plans: Vec<RepairPlan>,
    pub widenings: u32,
    pub ops_before_merge: usize,
    pub ops_after_merge: usize,
    /// Races and deadlocks still reproduced on the final program.
    pub surviving: Vec<RaceWarning>,
    /// Pipeline run on the final program.
    pub final_run: Option<PipelineRun>,
}

/// Plans one repair per warning against `p`.
pub fn plan_repairs(p: &Program, warnings: &[RaceWarning], methods: &[Method]) -> Result<Vec<RepairPlan>, RepairError> {
    let sa = analyze(p)?;
    let holds: Vec<_> = sa
        .ricfgs
        .iter()
        .map(|r| compute_hold_sets(p, &r.cfg, &sa.aliases))
        .collect();
    let order = compute_lock_order(p, &sa.ricfgs, &sa.aliases);
    let mut plans = Vec::new();
    // Fresh locks of earlier plans stay reserved.
    let mut reserved = p.clone();
    for wn in warnings {
        let mut plan = RepairPlan::unrepairable(wn, "no method enabled");
        for m in methods {
            plan = match m {
                Method::Ide => plan_ide_repair(p, &sa, &holds, wn),
                Method::Locks => plan_lock_repair(&reserved, &sa, &order, wn),
            };
            if plan.is_repairable() {
                break;
            }
        }
        for op in &plan.patches {
            if let PatchKind::InsertLock(n) = &op.kind {
                if !reserved.is_lock(n) {
                    reserved.locks.push(n.clone());
                }
            }
        }
        plans.push(plan);
    }
    Ok(plans)
}

fn collect_ops(plans: &[RepairPlan]) -> Vec<PatchOp> {
    let mut ops: Vec<PatchOp> = Vec::new();
    for op in plans.iter().flat_map(|pl| &pl.patches) {
        if !ops.contains(op) {
            ops.push(op.clone());
        }
    }
    ops
}

/// Position of `loc` relative to `sec`: 0 inside, otherwise the number of
/// statements between them. `None` when `loc` is outside the section's block.
fn gap(p: &Program, sec: &Section, loc: &Location) -> Option<(usize, bool)> {
    if loc.routine != sec.routine {
        return None;
    }
    let (path, k) = locate(p, loc)?;
    let n = sec.path.len();
    if path.len() < n || path[..n] != sec.path[..] {
        return None;
    }
    let pos = if path.len() == n { k } else { path[n].0 };
    if sec.open < pos && pos < sec.close {
        Some((0, true))
    } else if pos > sec.close {
        Some((pos - sec.close, true))
    } else {
        Some((sec.open - pos, false))
    }
}

/// Moves one boundary of `sec` outward past one original statement, or
/// lifts the section around its enclosing statement at a block edge.
fn widen(p: &mut Program, sec: &Section, forward: bool) -> bool {
    let Some(r) = p.routine_mut(&sec.routine) else {
        return false;
    };
    let b = block_mut(&mut r.body, &sec.path);
    if forward {
        if let Some(m) = (sec.close + 1..b.len()).find(|&m| !b[m].generated) {
            let s = b.remove(sec.close);
            b.insert(m, s);
            return true;
        }
    } else if let Some(m) = (0..sec.open).rev().find(|&m| !b[m].generated) {
        let s = b.remove(sec.open);
        b.insert(m, s);
        return true;
    }
    let Some((&(parent_idx, _), outer)) = sec.path.split_last() else {
        return false;
    };
    let close = b.remove(sec.close);
    let open = b.remove(sec.open);
    let pb = block_mut(&mut r.body, outer);
    pb.insert(parent_idx + 1, close);
    pb.insert(parent_idx, open);
    true
}

fn section_for(p: &Program, sections: &[Section], wn: &RaceWarning) -> Option<(Section, bool)> {
    let line = p.routine(&wn.ej.ctx).and_then(|r| r.irq_line());
    sections
        .iter()
        .filter(|s| match &s.kind {
            SectionKind::Irq(l) => Some(*l) == line,
            SectionKind::Lock(_) => true,
        })
        .filter_map(|s| gap(p, s, &wn.ei.loc).map(|(d, fwd)| (d, s, fwd)))
        .min_by_key(|(d, s, _)| (*d, s.path.len(), s.open))
        .map(|(_, s, fwd)| (s.clone(), fwd))
}

/// Repairs `warnings`, then revalidates and widens critical sections until
/// the pipeline reproduces no race or deadlock, and finally merges sections.
pub fn repair_and_validate(
    p: &Program,
    warnings: &[RaceWarning],
    cfg: &RepairConfig,
) -> Result<RepairOutcome, RepairError> {
    if warnings.is_empty() {
        return Ok(RepairOutcome {
            program: p.clone(),
            status: RepairStatus::Unchanged,
            plans: Vec::new(),
            widenings: 0,
            ops_before_merge: 0,
            ops_after_merge: 0,
            surviving: Vec::new(),
            final_run: None,
        });
    }
    let mut plans = plan_repairs(p, warnings, &cfg.methods)?;
    let mut q = apply_patches(p, &collect_ops(&plans))?;
    let mut widenings = 0;
    let mut planned: BTreeSet<(String, String, String)> = warnings
        .iter()
        .map(|w| (w.ei.ctx.clone(), w.ej.ctx.clone(), w.resource.clone()))
        .collect();
    for _ in 0..cfg.max_widen {
        let run = run_pipeline(&q, &cfg.pipeline)?;
        let failing: Vec<RaceWarning> = run.failures().map(|r| r.warning.clone()).collect();
        if failing.is_empty() {
            break;
        }
        let mut changed = false;
        let mut widened: Vec<(String, Vec<(usize, u8)>, usize)> = Vec::new();
        let mut fresh = Vec::new();
        for wn in &failing {
            let sections = find_sections(&q);
            match section_for(&q, &sections, wn) {
                Some((sec, fwd)) => {
                    let key = (sec.routine.clone(), sec.path.clone(), sec.open);
                    if !widened.contains(&key) && widen(&mut q, &sec, fwd) {
                        widened.push(key);
                        widenings += 1;
                        changed = true;
                    }
                }
                None => {
                    let key = (wn.ei.ctx.clone(), wn.ej.ctx.clone(), wn.resource.clone());
                    if planned.insert(key) {
                        fresh.push(wn.clone());
                    }
                }
            }
        }
        for r in &mut q.routines {
            flatten_nested(&mut r.body);
        }
        q.renumber();
        if !fresh.is_empty() {
            let more = plan_repairs(&q, &fresh, &cfg.methods)?;
            let ops = collect_ops(&more);
            if !ops.is_empty() {
                q = apply_patches(&q, &ops)?;
                changed = true;
            }
            plans.extend(more);
        }
        if !changed {
            break;
        }
    }
    let ops_before_merge = count_generated(&q);
    let merged = reline(&merge_fixes(&q));
    let ops_after_merge = count_generated(&merged);
    let run = run_pipeline(&merged, &cfg.pipeline)?;
    let surviving: Vec<RaceWarning> = run.failures().map(|r| r.warning.clone()).collect();
    Ok(RepairOutcome {
        program: merged,
        status: if surviving.is_empty() {
            RepairStatus::Repaired
        } else {
            RepairStatus::PartiallyRepaired
        },
        plans,
        widenings,
        ops_before_merge,
        ops_after_merge,
        surviving,
        final_run: Some(run),
    })
}
