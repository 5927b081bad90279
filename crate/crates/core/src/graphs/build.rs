use super::{Cfg, GraphError, IrqOp, Node, NodeId, NodeKind};
use crate::frontend::{Location, Program, Stmt, StmtKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopMode {
    /// Every loop becomes two guarded copies of its body and no back edge.
    UnrollTwice,
    /// Loops keep their back edge.
    Preserve,
}

/// Graphs for every task and ISR with loops unrolled twice.
pub fn build_icfg(p: &Program) -> Result<Vec<Cfg>, GraphError> {
    super::context_graphs(p, LoopMode::UnrollTwice)
}

/// Builds the graph of context `ctx` with every call inlined.
pub fn build_context(p: &Program, ctx: &str, mode: LoopMode) -> Result<Cfg, GraphError> {
    let routine = p
        .routine(ctx)
        .ok_or_else(|| GraphError::UnknownRoutine(ctx.to_string()))?;
    let mut b = Builder {
        p,
        mode,
        nodes: Vec::new(),
        succ: Vec::new(),
        frames: vec![ctx.to_string()],
        stack: vec![ctx.to_string()],
        unroll: Vec::new(),
    };
    let exit = b.add(NodeKind::Exit, None, 0);
    let first = b.block(&routine.body, 0, exit)?;
    let entry = b.add(NodeKind::Entry, None, 0);
    b.succ[entry] = vec![first];

    let mut cfg = Cfg {
        ctx: ctx.to_string(),
        priority: routine.priority.unwrap_or(u32::MAX),
        nodes: b.nodes,
        succ: b.succ,
        pred: Vec::new(),
        entry,
        exit,
        frames: b.frames,
    };
    renumber(&mut cfg);
    Ok(cfg)
}

/// Relabels nodes in reverse post-order so that the entry is node 0.
fn renumber(cfg: &mut Cfg) {
    let order = cfg.reverse_postorder();
    let mut new_id = vec![usize::MAX; cfg.len()];
    for (i, &n) in order.iter().enumerate() {
        new_id[n] = i;
    }
    let nodes = order.iter().map(|&n| cfg.nodes[n].clone()).collect();
    let succ = order
        .iter()
        .map(|&n| cfg.succ[n].iter().map(|&m| new_id[m]).collect())
        .collect();
    cfg.nodes = nodes;
    cfg.succ = succ;
    cfg.entry = new_id[cfg.entry];
    cfg.exit = new_id[cfg.exit];
    cfg.rebuild_preds();
}

struct Builder<'a> {
    p: &'a Program,
    mode: LoopMode,
    nodes: Vec<Node>,
    succ: Vec<Vec<NodeId>>,
    frames: Vec<String>,
    stack: Vec<String>,
    unroll: Vec<u8>,
}

impl Builder<'_> {
    fn add(&mut self, kind: NodeKind, loc: Option<Location>, frame: u32) -> NodeId {
        self.nodes.push(Node {
            kind,
            loc,
            frame,
            unroll: self.unroll.clone(),
        });
        self.succ.push(Vec::new());
        self.nodes.len() - 1
    }

    fn simple(&mut self, kind: NodeKind, s: &Stmt, frame: u32, next: NodeId) -> NodeId {
        let n = self.add(kind, Some(s.loc.clone()), frame);
        self.succ[n] = vec![next];
        n
    }

    /// Builds `body` so that it falls through to `next`; returns its first node.
    fn block(&mut self, body: &[Stmt], frame: u32, next: NodeId) -> Result<NodeId, GraphError> {
        let mut next = next;
        for s in body.iter().rev() {
            next = self.stmt(s, frame, next)?;
        }
        Ok(next)
    }

    fn stmt(&mut self, s: &Stmt, frame: u32, next: NodeId) -> Result<NodeId, GraphError> {
        let kind = match &s.kind {
            StmtKind::Assign { target, value } => NodeKind::Assign {
                target: target.clone(),
                value: value.clone(),
            },
            StmtKind::Output(e) => NodeKind::Output(e.clone()),
            StmtKind::Lock(l) => NodeKind::Lock(l.clone()),
            StmtKind::Unlock(l) => NodeKind::Unlock(l.clone()),
            StmtKind::IrqDisable(n) => NodeKind::Irq(IrqOp::Disable(*n)),
            StmtKind::IrqEnable(n) => NodeKind::Irq(IrqOp::Enable(*n)),
            StmtKind::IrqDisableAll => NodeKind::Irq(IrqOp::DisableAll),
            StmtKind::IrqEnableAll => NodeKind::Irq(IrqOp::EnableAll),
            StmtKind::RequestIrq { line, args } => NodeKind::RequestIrq {
                line: *line,
                args: args.clone(),
            },
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                let t = self.block(then_body, frame, next)?;
                let e = self.block(else_body, frame, next)?;
                let b = self.add(NodeKind::Branch(cond.clone()), Some(s.loc.clone()), frame);
                self.succ[b] = vec![t, e];
                return Ok(b);
            }
            StmtKind::While { cond, body } => return self.looped(s, cond, body, frame, next),
            StmtKind::Call { callee, args } => return self.call(s, callee, args, frame, next),
        };
        Ok(self.simple(kind, s, frame, next))
    }

    fn looped(
        &mut self,
        s: &Stmt,
        cond: &crate::frontend::Expr,
        body: &[Stmt],
        frame: u32,
        next: NodeId,
    ) -> Result<NodeId, GraphError> {
        match self.mode {
            LoopMode::Preserve => {
                let b = self.add(NodeKind::Branch(cond.clone()), Some(s.loc.clone()), frame);
                let first = self.block(body, frame, b)?;
                self.succ[b] = vec![first, next];
                Ok(b)
            }
            LoopMode::UnrollTwice => {
                let mut after = next;
                for copy in [1u8, 0] {
                    self.unroll.push(copy);
                    let b = self.add(NodeKind::Branch(cond.clone()), Some(s.loc.clone()), frame);
                    let first = self.block(body, frame, after)?;
                    self.succ[b] = vec![first, next];
                    self.unroll.pop();
                    after = b;
                }
                Ok(after)
            }
        }
    }

    fn call(
        &mut self,
        s: &Stmt,
        callee: &str,
        args: &[crate::frontend::Expr],
        frame: u32,
        next: NodeId,
    ) -> Result<NodeId, GraphError> {
        if self.stack.iter().any(|r| r == callee) {
            return Err(GraphError::RecursionDetected(callee.to_string()));
        }
        let routine = self
            .p
            .routine(callee)
            .ok_or_else(|| GraphError::UnknownRoutine(callee.to_string()))?;
        let callee_frame = self.frames.len() as u32;
        self.frames.push(callee.to_string());
        let ret = self.add(NodeKind::CallReturn { callee_frame }, None, callee_frame);
        self.succ[ret] = vec![next];
        self.stack.push(callee.to_string());
        let first = self.block(&routine.body, callee_frame, ret)?;
        self.stack.pop();
        let enter = self.add(
            NodeKind::CallEnter {
                callee: callee.to_string(),
                args: args.to_vec(),
                params: routine.params.clone(),
                callee_frame,
            },
            Some(s.loc.clone()),
            frame,
        );
        self.succ[enter] = vec![first];
        Ok(enter)
    }
}
