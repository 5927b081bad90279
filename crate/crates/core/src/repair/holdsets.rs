use std::collections::{BTreeSet, VecDeque};

use crate::alias::{qualify, AliasSet};
use crate::frontend::{LValue, Program};
use crate::graphs::{Cfg, NodeId, NodeKind};

/// Locks possibly held on entry to each node of one context graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HoldSets {
    pub ctx: String,
    pub held: Vec<BTreeSet<String>>,
}

impl HoldSets {
    pub fn at(&self, n: NodeId) -> &BTreeSet<String> {
        &self.held[n]
    }

    /// Locks held anywhere in the context.
    pub fn union_all(&self) -> BTreeSet<String> {
        self.held.iter().flatten().cloned().collect()
    }
}

/// Locks a lock or unlock node may operate on, closed under aliasing.
pub fn lock_targets(p: &Program, g: &Cfg, n: NodeId, aliases: &AliasSet) -> BTreeSet<String> {
    let lv = match &g.nodes[n].kind {
        NodeKind::Lock(lv) | NodeKind::Unlock(lv) => lv,
        _ => return BTreeSet::new(),
    };
    let mut out: BTreeSet<String> = match lv {
        LValue::Var(name) => BTreeSet::from([name.clone()]),
        LValue::Deref(ptr) => match p.routine(g.routine_of(n)) {
            Some(r) => aliases.points_to(&qualify(r, ptr)),
            None => BTreeSet::new(),
        },
    };
    let direct: Vec<String> = out.iter().cloned().collect();
    for l in direct {
        out.extend(aliases.class(&l));
    }
    out.retain(|l| p.is_lock(l));
    out
}

/// May-analysis: a lock is held at a node if some path acquires it (or an
/// alias) and does not surely release it before reaching the node.
pub fn compute_hold_sets(p: &Program, g: &Cfg, aliases: &AliasSet) -> HoldSets {
    let targets: Vec<BTreeSet<String>> = (0..g.len()).map(|n| lock_targets(p, g, n, aliases)).collect();
    let transfer = |n: NodeId, held: &BTreeSet<String>| -> BTreeSet<String> {
        let mut out = held.clone();
        match g.nodes[n].kind {
            NodeKind::Lock(_) => out.extend(targets[n].iter().cloned()),
            NodeKind::Unlock(_) if targets[n].len() == 1 => {
                out.remove(targets[n].iter().next().unwrap());
            }
            _ => {}
        }
        out
    };
    let mut held: Vec<BTreeSet<String>> = vec![BTreeSet::new(); g.len()];
    let mut seen = vec![false; g.len()];
    let mut queue: VecDeque<NodeId> = VecDeque::from([g.entry]);
    seen[g.entry] = true;
    while let Some(n) = queue.pop_front() {
        let out = transfer(n, &held[n]);
        for &s in &g.succ[n] {
            let before = held[s].len();
            held[s].extend(out.iter().cloned());
            if held[s].len() != before || !seen[s] {
                seen[s] = true;
                if !queue.contains(&s) {
                    queue.push_back(s);
                }
            }
        }
    }
    HoldSets {
        ctx: g.ctx.clone(),
        held,
    }
}
