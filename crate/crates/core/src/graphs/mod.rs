//! Control-flow graphs over execution contexts.
//!
//! Each task or ISR gets one graph with every call inlined. Loops are either
//! unrolled twice (for the static stages) or kept with real back edges (for
//! execution).

mod build;
mod dom;
mod dot;
mod iccfg;
mod ricfg;

use std::collections::VecDeque;

use thiserror::Error;

use crate::frontend::{Expr, LValue, Location, Program};

pub use build::{build_context, build_icfg, LoopMode};
pub use dom::{dominators, post_dominators, DomInfo};
pub use dot::to_dot;
pub use iccfg::{build_iccfg, Iccfg};
pub use ricfg::{prune, Ricfg};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("recursive call through `{0}`")]
    RecursionDetected(String),
    #[error("unknown routine `{0}`")]
    UnknownRoutine(String),
    #[error("event {0} not found in graph")]
    EventNotInGraph(Location),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IrqOp {
    Disable(u32),
    Enable(u32),
    DisableAll,
    EnableAll,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Entry,
    Exit,
    Assign {
        target: LValue,
        value: Expr,
    },
    Output(Expr),
    Lock(LValue),
    Unlock(LValue),
    Irq(IrqOp),
    /// `succ[0]` is the true edge, `succ[1]` the false edge.
    Branch(Expr),
    /// Evaluates `args` in the caller frame and binds them to `params` in
    /// `callee_frame`.
    CallEnter {
        callee: String,
        args: Vec<Expr>,
        params: Vec<String>,
        callee_frame: u32,
    },
    /// Marks the end of an inlined call; not an instruction.
    CallReturn {
        callee_frame: u32,
    },
    RequestIrq {
        line: u32,
        args: Vec<Expr>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub kind: NodeKind,
    /// Source statement, absent for entry, exit and call-return nodes.
    pub loc: Option<Location>,
    /// Inlined call instance the node runs in; 0 is the context body.
    pub frame: u32,
    /// Loop copy indices from the outermost enclosing loop inward.
    pub unroll: Vec<u8>,
}

impl Node {
    /// True for nodes that execute a statement.
    pub fn is_instruction(&self) -> bool {
        !matches!(
            self.kind,
            NodeKind::Entry | NodeKind::Exit | NodeKind::CallReturn { .. }
        )
    }
}

/// Control-flow graph of one execution context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cfg {
    /// Name of the task or ISR.
    pub ctx: String,
    pub priority: u32,
    pub nodes: Vec<Node>,
    pub succ: Vec<Vec<NodeId>>,
    pub pred: Vec<Vec<NodeId>>,
    pub entry: NodeId,
    pub exit: NodeId,
    /// Routine executed by each frame.
    pub frames: Vec<String>,
}

impl Cfg {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Routine whose body contains `n`.
    pub fn routine_of(&self, n: NodeId) -> &str {
        &self.frames[self.nodes[n].frame as usize]
    }

    /// Nodes carrying statement `loc`, in ascending id order.
    pub fn nodes_at(&self, loc: &Location) -> Vec<NodeId> {
        (0..self.len())
            .filter(|&n| self.nodes[n].loc.as_ref() == Some(loc))
            .collect()
    }

    /// Node ids in reverse post-order from the entry. On an acyclic graph
    /// this is a topological order.
    pub fn reverse_postorder(&self) -> Vec<NodeId> {
        let mut seen = vec![false; self.len()];
        let mut order = Vec::with_capacity(self.len());
        let mut stack = vec![(self.entry, 0usize)];
        seen[self.entry] = true;
        while let Some((n, i)) = stack.pop() {
            if i < self.succ[n].len() {
                stack.push((n, i + 1));
                let m = self.succ[n][i];
                if !seen[m] {
                    seen[m] = true;
                    stack.push((m, 0));
                }
            } else {
                order.push(n);
            }
        }
        order.reverse();
        order
    }

    fn rebuild_preds(&mut self) {
        self.pred = vec![Vec::new(); self.len()];
        for (n, ss) in self.succ.iter().enumerate() {
            for &m in ss {
                if !self.pred[m].contains(&n) {
                    self.pred[m].push(n);
                }
            }
        }
    }
}

/// Unreachable marker for [`distances_to`].
pub const UNREACHABLE: u32 = u32::MAX;

/// Shortest instruction count from every node to the nearest target, with
/// unit weight per edge. Unreachable nodes get [`UNREACHABLE`].
pub fn distances_to(pred: &[Vec<NodeId>], targets: &[NodeId]) -> Vec<u32> {
    let mut dist = vec![UNREACHABLE; pred.len()];
    let mut queue = VecDeque::new();
    for &t in targets {
        if dist[t] != 0 {
            dist[t] = 0;
            queue.push_back(t);
        }
    }
    while let Some(n) = queue.pop_front() {
        for &p in &pred[n] {
            if dist[p] == UNREACHABLE {
                dist[p] = dist[n] + 1;
                queue.push_back(p);
            }
        }
    }
    dist
}

/// Shortest path length from `from` to `to`, or `None` when unreachable.
pub fn distance(succ: &[Vec<NodeId>], from: NodeId, to: NodeId) -> Option<u32> {
    let mut dist = vec![UNREACHABLE; succ.len()];
    dist[from] = 0;
    let mut queue = VecDeque::from([from]);
    while let Some(n) = queue.pop_front() {
        if n == to {
            return Some(dist[n]);
        }
        for &m in &succ[n] {
            if dist[m] == UNREACHABLE {
                dist[m] = dist[n] + 1;
                queue.push_back(m);
            }
        }
    }
    None
}

/// Graphs for every task and ISR of `p`.
pub fn context_graphs(p: &Program, mode: LoopMode) -> Result<Vec<Cfg>, GraphError> {
    p.contexts().map(|r| build_context(p, &r.name, mode)).collect()
}
