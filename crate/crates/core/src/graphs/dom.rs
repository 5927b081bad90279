use super::{Cfg, NodeId};

/// Immediate dominators and post-dominators of a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomInfo {
    /// `None` for the entry and for nodes unreachable from it.
    pub idom: Vec<Option<NodeId>>,
    /// `None` for the exit and for nodes that cannot reach it.
    pub ipdom: Vec<Option<NodeId>>,
    entry: NodeId,
    exit: NodeId,
}

impl DomInfo {
    pub fn new(g: &Cfg) -> Self {
        DomInfo {
            idom: dominators(&g.succ, &g.pred, g.entry),
            ipdom: post_dominators(&g.succ, &g.pred, g.exit),
            entry: g.entry,
            exit: g.exit,
        }
    }

    /// True iff every path from the entry to `b` passes through `a`.
    pub fn dominates(&self, a: NodeId, b: NodeId) -> bool {
        chain_contains(&self.idom, self.entry, a, b)
    }

    /// True iff every path from `b` to the exit passes through `a`.
    pub fn post_dominates(&self, a: NodeId, b: NodeId) -> bool {
        chain_contains(&self.ipdom, self.exit, a, b)
    }

    /// All dominators of `n`, including `n`, nearest first.
    pub fn dom_set(&self, n: NodeId) -> Vec<NodeId> {
        chain(&self.idom, self.entry, n)
    }

    pub fn post_dom_set(&self, n: NodeId) -> Vec<NodeId> {
        chain(&self.ipdom, self.exit, n)
    }
}

fn chain(tree: &[Option<NodeId>], root: NodeId, n: NodeId) -> Vec<NodeId> {
    if n != root && tree[n].is_none() {
        return Vec::new();
    }
    let mut out = vec![n];
    let mut cur = n;
    while let Some(up) = tree[cur] {
        out.push(up);
        cur = up;
    }
    out
}

fn chain_contains(tree: &[Option<NodeId>], root: NodeId, a: NodeId, b: NodeId) -> bool {
    if b != root && tree[b].is_none() {
        return false;
    }
    let mut cur = b;
    loop {
        if cur == a {
            return true;
        }
        match tree[cur] {
            Some(up) => cur = up,
            None => return false,
        }
    }
}

/// Immediate dominators by the iterative Cooper–Harvey–Kennedy scheme.
pub fn dominators(succ: &[Vec<NodeId>], pred: &[Vec<NodeId>], root: NodeId) -> Vec<Option<NodeId>> {
    let n = succ.len();
    // Post-order numbering of nodes reachable from root.
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    let mut stack = vec![(root, 0usize)];
    seen[root] = true;
    while let Some((v, i)) = stack.pop() {
        if i < succ[v].len() {
            stack.push((v, i + 1));
            let w = succ[v][i];
            if !seen[w] {
                seen[w] = true;
                stack.push((w, 0));
            }
        } else {
            order.push(v);
        }
    }
    let mut po = vec![usize::MAX; n];
    for (i, &v) in order.iter().enumerate() {
        po[v] = i;
    }
    let mut idom: Vec<Option<NodeId>> = vec![None; n];
    idom[root] = Some(root);
    let mut changed = true;
    while changed {
        changed = false;
        for &v in order.iter().rev() {
            if v == root {
                continue;
            }
            let mut new: Option<NodeId> = None;
            for &p in &pred[v] {
                if idom[p].is_none() {
                    continue;
                }
                new = Some(match new {
                    None => p,
                    Some(cur) => intersect(&idom, &po, p, cur),
                });
            }
            if new.is_some() && idom[v] != new {
                idom[v] = new;
                changed = true;
            }
        }
    }
    idom[root] = None;
    idom
}

fn intersect(idom: &[Option<NodeId>], po: &[usize], mut a: NodeId, mut b: NodeId) -> NodeId {
    while a != b {
        while po[a] < po[b] {
            a = idom[a].expect("processed node");
        }
        while po[b] < po[a] {
            b = idom[b].expect("processed node");
        }
    }
    a
}

/// Immediate post-dominators: dominators of the reversed graph rooted at `exit`.
pub fn post_dominators(succ: &[Vec<NodeId>], pred: &[Vec<NodeId>], exit: NodeId) -> Vec<Option<NodeId>> {
    dominators(pred, succ, exit)
}
