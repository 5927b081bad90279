use std::collections::{BTreeSet, VecDeque};

use super::blocks::locate;
use super::holdsets::{lock_targets, HoldSets};
use super::{PatchKind, PatchOp, RepairPlan, Side, Strategy};
use crate::detect::{RaceWarning, StaticAnalysis};
use crate::frontend::Program;
use crate::graphs::{distance, Cfg, DomInfo, NodeId, NodeKind, UNREACHABLE};

pub(crate) fn context_index(sa: &StaticAnalysis, ctx: &str) -> Option<usize> {
    sa.ricfgs.iter().position(|r| r.cfg.ctx == ctx)
}

/// Every lock a context may acquire.
pub(crate) fn acquired_locks(p: &Program, sa: &StaticAnalysis, g: &Cfg) -> BTreeSet<String> {
    (0..g.len())
        .filter(|&n| matches!(g.nodes[n].kind, NodeKind::Lock(_)))
        .flat_map(|n| lock_targets(p, g, n, &sa.aliases))
        .collect()
}

fn anchorable(p: &Program, g: &Cfg, n: NodeId) -> bool {
    g.nodes[n].is_instruction() && g.nodes[n].loc.as_ref().is_some_and(|l| locate(p, l).is_some())
}

/// Nodes on some path from `a` to `b`, both included.
fn between(g: &Cfg, a: NodeId, b: NodeId) -> Vec<NodeId> {
    let fwd = reach(&g.succ, a);
    let bwd = reach(&g.pred, b);
    (0..g.len()).filter(|&n| fwd[n] && bwd[n]).collect()
}

fn reach(edges: &[Vec<NodeId>], from: NodeId) -> Vec<bool> {
    let mut seen = vec![false; edges.len()];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(n) = queue.pop_front() {
        for &m in &edges[n] {
            if !seen[m] {
                seen[m] = true;
                queue.push_back(m);
            }
        }
    }
    seen
}

/// Interrupt disable/enable around `wn.ei`, masking only `wn.ej`'s line.
pub fn plan_ide_repair(p: &Program, sa: &StaticAnalysis, holds: &[HoldSets], wn: &RaceWarning) -> RepairPlan {
    let Some(line) = p.routine(&wn.ej.ctx).and_then(|r| r.irq_line()) else {
        return RepairPlan::unrepairable(wn, "e_j does not run in an ISR");
    };
    let (Some(i), Some(j)) = (context_index(sa, &wn.ei.ctx), context_index(sa, &wn.ej.ctx)) else {
        return RepairPlan::unrepairable(wn, "no I_d/I_e");
    };
    let g = &sa.ricfgs[i].cfg;
    let Some(&ii) = g.nodes_at(&wn.ei.loc).first() else {
        return RepairPlan::unrepairable(wn, "no I_d/I_e");
    };
    let held_j = holds[j].union_all();

    // Predecessors of I_i by distance, nearest first.
    let mut dist = vec![UNREACHABLE; g.len()];
    dist[ii] = 0;
    let mut queue = VecDeque::from([ii]);
    let mut preds = Vec::new();
    while let Some(n) = queue.pop_front() {
        preds.push(n);
        for &m in &g.pred[n] {
            if dist[m] == UNREACHABLE {
                dist[m] = dist[n] + 1;
                queue.push_back(m);
            }
        }
    }
    let free = |n: NodeId| holds[i].at(n).is_disjoint(&held_j);
    let Some(id) = preds.into_iter().find(|&n| anchorable(p, g, n) && free(n)) else {
        return RepairPlan::unrepairable(wn, "no I_d/I_e");
    };

    let dom = DomInfo::new(g);
    let ie = (0..g.len())
        .filter(|&n| {
            anchorable(p, g, n) && dom.post_dominates(n, id) && dom.dominates(id, n) && dom.post_dominates(n, ii)
        })
        .filter_map(|n| distance(&g.succ, id, n).map(|d| (d, n)))
        .min()
        .map(|(_, n)| n);
    let Some(ie) = ie else {
        return RepairPlan::unrepairable(wn, "no I_d/I_e");
    };

    let acquired_j = acquired_locks(p, sa, &sa.ricfgs[j].cfg);
    let blocking = between(g, id, ie).into_iter().any(|n| {
        matches!(g.nodes[n].kind, NodeKind::Lock(_)) && !lock_targets(p, g, n, &sa.aliases).is_disjoint(&acquired_j)
    });
    if blocking {
        return RepairPlan::unrepairable(wn, "interrupt disable would span a blocking lock acquire");
    }

    let (ld, le) = (g.nodes[id].loc.clone().unwrap(), g.nodes[ie].loc.clone().unwrap());
    match (locate(p, &ld), locate(p, &le)) {
        (Some((pd, kd)), Some((pe, ke))) if ld.routine == le.routine && pd == pe && kd <= ke => {}
        _ => return RepairPlan::unrepairable(wn, "no I_d/I_e"),
    }
    RepairPlan {
        warning: wn.clone(),
        strategy: Strategy::Ide,
        patches: vec![
            PatchOp::new(PatchKind::InsertIrqDisable(line), ld, Side::Before),
            PatchOp::new(PatchKind::InsertIrqEnable(line), le, Side::After),
        ],
    }
}
