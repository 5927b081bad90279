use std::collections::BTreeSet;

use super::blocks::{block, locate};
use super::ide::context_index;
use super::lockorder::{compute_lock_order, locks_after, locks_before, LockOrderGraph};
use super::patch::apply_patches;
use super::{PatchKind, PatchOp, RepairPlan, Side, Strategy};
use crate::alias::link_alias_sets;
use crate::detect::{Event, RaceWarning, StaticAnalysis};
use crate::frontend::{walk_stmts, LValue, Location, Program, Stmt, StmtKind};
use crate::graphs::{build_icfg, prune, NodeKind};

pub const FRESH_LOCK_PREFIX: &str = "__sdr_lock_";

/// Smallest generated lock name not yet declared.
pub fn fresh_lock_name(p: &Program) -> String {
    (0..)
        .map(|k| format!("{FRESH_LOCK_PREFIX}{k}"))
        .find(|n| !p.is_lock(n) && p.global(n).is_none() && p.register(n).is_none())
        .unwrap()
}

fn lock_order_of(q: &Program) -> Option<LockOrderGraph> {
    let aliases = link_alias_sets(q);
    let icfgs = build_icfg(q).ok()?;
    let ricfgs: Vec<_> = icfgs
        .iter()
        .map(|g| {
            prune(g, |n| {
                matches!(g.nodes[n].kind, NodeKind::Lock(_) | NodeKind::Unlock(_))
            })
        })
        .collect();
    Some(compute_lock_order(q, &ricfgs, &aliases))
}

/// Rule 2: the patched program acquires no pair of locks in an order that
/// contradicts another acquisition, unless the original already did.
fn keeps_order(original: &LockOrderGraph, patched: &Program) -> bool {
    match lock_order_of(patched) {
        Some(lo) => lo.inconsistencies().is_subset(&original.inconsistencies()),
        None => false,
    }
}

fn wrap(lock: &str, loc: &Location) -> [PatchOp; 2] {
    [
        PatchOp::new(PatchKind::InsertLock(lock.to_string()), loc.clone(), Side::Before),
        PatchOp::new(PatchKind::InsertUnlock(lock.to_string()), loc.clone(), Side::After),
    ]
}

fn is_op_on(s: &Stmt, lock: &str) -> Option<bool> {
    match &s.kind {
        StmtKind::Lock(LValue::Var(n)) if n == lock => Some(true),
        StmtKind::Unlock(LValue::Var(n)) if n == lock => Some(false),
        _ => None,
    }
}

fn mentions(s: &Stmt, lock: &str) -> bool {
    let mut hit = false;
    walk_stmts(std::slice::from_ref(s), &mut |t| {
        hit |= match &t.kind {
            StmtKind::Lock(lv) | StmtKind::Unlock(lv) => lv.base() == lock || matches!(lv, LValue::Deref(_)),
            _ => false,
        };
    });
    hit
}

/// Moves the nearest existing operation on `lock` in the block of `loc` so
/// that the statement at `loc` runs with `lock` held. `Some(vec![])` when it
/// already does.
fn extend_over(p: &Program, loc: &Location, lock: &str) -> Option<Vec<PatchOp>> {
    let (path, k) = locate(p, loc)?;
    let b = block(&p.routine(&loc.routine)?.body, &path);
    for u in (0..k).rev() {
        match is_op_on(&b[u], lock) {
            Some(true) => {
                let closed = b[k + 1..].iter().any(|s| is_op_on(s, lock) == Some(false));
                return closed.then(Vec::new);
            }
            Some(false) => {
                return Some(vec![PatchOp::new(
                    PatchKind::MoveLock(b[u].loc.clone()),
                    loc.clone(),
                    Side::After,
                )]);
            }
            None if mentions(&b[u], lock) => return None,
            None => {}
        }
    }
    for m in k + 1..b.len() {
        match is_op_on(&b[m], lock) {
            Some(true) => {
                return Some(vec![PatchOp::new(
                    PatchKind::MoveLock(b[m].loc.clone()),
                    loc.clone(),
                    Side::Before,
                )]);
            }
            _ if mentions(&b[m], lock) => return None,
            _ => {}
        }
    }
    None
}

/// Locks acquired up to `e` plus the nearest acquisition after it.
fn lock_prefix(p: &Program, sa: &StaticAnalysis, e: &Event) -> Option<BTreeSet<String>> {
    let g = &sa.ricfgs[context_index(sa, &e.ctx)?].cfg;
    let n = *g.nodes_at(&e.loc).first()?;
    let mut out = locks_before(p, g, n, &sa.aliases);
    if let Some((_, next)) = locks_after(p, g, n, &sa.aliases).into_iter().next() {
        out.extend(next);
    }
    Some(out)
}

/// Adds a fresh lock around both events; falls back to widening a common
/// existing lock when the fresh lock would break the lock order.
pub fn plan_lock_repair(p: &Program, sa: &StaticAnalysis, order: &LockOrderGraph, wn: &RaceWarning) -> RepairPlan {
    let fresh = fresh_lock_name(p);
    let mut al: Vec<PatchOp> = wrap(&fresh, &wn.ei.loc).into();
    al.extend(wrap(&fresh, &wn.ej.loc));
    if let Ok(q) = apply_patches(p, &al) {
        if keeps_order(order, &q) {
            return RepairPlan {
                warning: wn.clone(),
                strategy: Strategy::Al,
                patches: al,
            };
        }
    }

    let (Some(li), Some(lj)) = (lock_prefix(p, sa, &wn.ei), lock_prefix(p, sa, &wn.ej)) else {
        return RepairPlan::unrepairable(wn, "events not found");
    };
    let cand: BTreeSet<String> = li.intersection(&lj).cloned().collect();
    if cand.is_empty() {
        return RepairPlan::unrepairable(wn, "LS_cand is empty");
    }
    for c in &cand {
        let (Some(mut ops), Some(oj)) = (extend_over(p, &wn.ei.loc, c), extend_over(p, &wn.ej.loc, c)) else {
            continue;
        };
        ops.extend(oj);
        if ops.is_empty() {
            continue;
        }
        if let Ok(q) = apply_patches(p, &ops) {
            if keeps_order(order, &q) {
                return RepairPlan {
                    warning: wn.clone(),
                    strategy: Strategy::Ecs,
                    patches: ops,
                };
            }
        }
    }
    RepairPlan::unrepairable(wn, "no lock in LS_cand can be extended")
}
