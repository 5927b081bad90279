use std::collections::BTreeSet;

use super::{Cfg, DomInfo, NodeId, NodeKind};

/// A context graph reduced to the nodes relevant for race detection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ricfg {
    pub cfg: Cfg,
    /// Node of the unreduced graph each retained node came from.
    pub origin: Vec<NodeId>,
    /// Unreduced nodes that were dropped.
    pub pruned: Vec<NodeId>,
}

/// Keeps the entry, the exit, every node satisfying `keep`, and every branch
/// or call node that dominates such a node. Edges are routed through the
/// dropped nodes.
pub fn prune(g: &Cfg, keep: impl Fn(NodeId) -> bool) -> Ricfg {
    let dom = DomInfo::new(g);
    let mut retained = vec![false; g.len()];
    retained[g.entry] = true;
    retained[g.exit] = true;
    let anchors: Vec<NodeId> = (0..g.len()).filter(|&n| keep(n)).collect();
    for &a in &anchors {
        retained[a] = true;
        for d in dom.dom_set(a) {
            if matches!(g.nodes[d].kind, NodeKind::Branch(_) | NodeKind::CallEnter { .. }) {
                retained[d] = true;
            }
        }
    }

    let origin: Vec<NodeId> = (0..g.len()).filter(|&n| retained[n]).collect();
    let mut new_id = vec![usize::MAX; g.len()];
    for (i, &n) in origin.iter().enumerate() {
        new_id[n] = i;
    }
    let mut succ = Vec::with_capacity(origin.len());
    for &n in &origin {
        let mut out: Vec<NodeId> = Vec::new();
        for &s in &g.succ[n] {
            for r in first_retained(g, &retained, s) {
                if !out.contains(&new_id[r]) {
                    out.push(new_id[r]);
                }
            }
        }
        succ.push(out);
    }
    let mut cfg = Cfg {
        ctx: g.ctx.clone(),
        priority: g.priority,
        nodes: origin.iter().map(|&n| g.nodes[n].clone()).collect(),
        succ,
        pred: Vec::new(),
        entry: new_id[g.entry],
        exit: new_id[g.exit],
        frames: g.frames.clone(),
    };
    cfg.rebuild_preds();
    Ricfg {
        cfg,
        pruned: (0..g.len()).filter(|&n| !retained[n]).collect(),
        origin,
    }
}

/// Retained nodes reachable from `start` through dropped nodes only.
fn first_retained(g: &Cfg, retained: &[bool], start: NodeId) -> Vec<NodeId> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let mut stack = vec![start];
    while let Some(n) = stack.pop() {
        if !seen.insert(n) {
            continue;
        }
        if retained[n] {
            out.push(n);
            continue;
        }
        for &m in g.succ[n].iter().rev() {
            stack.push(m);
        }
    }
    out.sort_unstable();
    out
}

impl Ricfg {
    /// Retained node carrying statement `loc`, first copy only.
    pub fn node_at(&self, loc: &crate::frontend::Location) -> Option<NodeId> {
        self.cfg.nodes_at(loc).into_iter().next()
    }
}
