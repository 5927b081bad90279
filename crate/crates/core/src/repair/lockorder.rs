use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::holdsets::{compute_hold_sets, lock_targets};
use crate::alias::AliasSet;
use crate::frontend::Program;
use crate::graphs::{Cfg, NodeId, NodeKind, Ricfg};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LockOrderGraph {
    /// `(a, b)`: some context acquires `b` while still holding `a`.
    pub edges: BTreeSet<(String, String)>,
    /// Locks acquired together through one aliased operand.
    pub classes: BTreeSet<BTreeSet<String>>,
    /// Per context, `(a, b)` when some path acquires `a` and later `b`.
    pub sequences: BTreeMap<String, BTreeSet<(String, String)>>,
}

impl LockOrderGraph {
    /// True iff some context acquires `a` before `b`.
    pub fn before(&self, a: &str, b: &str) -> bool {
        self.sequences
            .values()
            .any(|s| s.contains(&(a.to_string(), b.to_string())))
    }

    /// Lock pairs acquired in both orders, each reported once with the
    /// smaller name first.
    pub fn inconsistencies(&self) -> BTreeSet<(String, String)> {
        let all: BTreeSet<&(String, String)> = self.sequences.values().flatten().collect();
        all.iter()
            .filter(|(a, b)| a < b && all.contains(&(b.clone(), a.clone())))
            .map(|&pair| pair.clone())
            .collect()
    }

    /// Order of acquisition in one context, as an ordered list of locks
    /// where each lock precedes every lock it is acquired before.
    pub fn sequence(&self, ctx: &str) -> Vec<String> {
        let Some(rel) = self.sequences.get(ctx) else {
            return Vec::new();
        };
        let locks: BTreeSet<&String> = rel.iter().flat_map(|(a, b)| [a, b]).collect();
        let mut out: Vec<String> = locks.into_iter().cloned().collect();
        out.sort_by_key(|l| rel.iter().filter(|(_, b)| b == l).count());
        out
    }
}

fn acquired_before(p: &Program, g: &Cfg, aliases: &AliasSet) -> Vec<BTreeSet<String>> {
    let mut acq: Vec<BTreeSet<String>> = vec![BTreeSet::new(); g.len()];
    let mut seen = vec![false; g.len()];
    seen[g.entry] = true;
    let mut queue = VecDeque::from([g.entry]);
    while let Some(n) = queue.pop_front() {
        let mut out = acq[n].clone();
        if matches!(g.nodes[n].kind, NodeKind::Lock(_)) {
            out.extend(lock_targets(p, g, n, aliases));
        }
        for &s in &g.succ[n] {
            let before = acq[s].len();
            acq[s].extend(out.iter().cloned());
            if acq[s].len() != before || !seen[s] {
                seen[s] = true;
                if !queue.contains(&s) {
                    queue.push_back(s);
                }
            }
        }
    }
    acq
}

/// Lock order of every context, from its reduced graph.
pub fn compute_lock_order(p: &Program, ricfgs: &[Ricfg], aliases: &AliasSet) -> LockOrderGraph {
    let mut lo = LockOrderGraph::default();
    for r in ricfgs {
        let g = &r.cfg;
        let holds = compute_hold_sets(p, g, aliases);
        let acq = acquired_before(p, g, aliases);
        let seq = lo.sequences.entry(g.ctx.clone()).or_default();
        for n in (0..g.len()).filter(|&n| matches!(g.nodes[n].kind, NodeKind::Lock(_))) {
            let targets = lock_targets(p, g, n, aliases);
            if targets.len() > 1 {
                lo.classes.insert(targets.clone());
            }
            for t in &targets {
                for a in acq[n].iter().filter(|a| !targets.contains(*a)) {
                    seq.insert((a.clone(), t.clone()));
                }
                for h in holds.at(n).iter().filter(|h| !targets.contains(*h)) {
                    lo.edges.insert((h.clone(), t.clone()));
                }
            }
        }
    }
    lo
}

/// Lock acquisitions of `g` reachable from `from`, nearest first.
pub(crate) fn locks_after(p: &Program, g: &Cfg, from: NodeId, aliases: &AliasSet) -> Vec<(NodeId, BTreeSet<String>)> {
    let mut dist = vec![u32::MAX; g.len()];
    dist[from] = 0;
    let mut queue = VecDeque::from([from]);
    let mut out = Vec::new();
    while let Some(n) = queue.pop_front() {
        if n != from && matches!(g.nodes[n].kind, NodeKind::Lock(_)) {
            out.push((n, lock_targets(p, g, n, aliases)));
        }
        for &m in &g.succ[n] {
            if dist[m] == u32::MAX {
                dist[m] = dist[n] + 1;
                queue.push_back(m);
            }
        }
    }
    out
}

/// Locks acquired on some path from the entry to `to`, excluding `to`.
pub(crate) fn locks_before(p: &Program, g: &Cfg, to: NodeId, aliases: &AliasSet) -> BTreeSet<String> {
    acquired_before(p, g, aliases)[to].clone()
}
