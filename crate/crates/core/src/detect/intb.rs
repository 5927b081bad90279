use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::irqops::{stmt_irq_op, IrqKind, IrqTarget};
use crate::frontend::{walk_stmts, LValue, Program, StmtKind};
use crate::graphs::{Cfg, IrqOp, NodeId, NodeKind};

/// Interrupt lines disabled at a program point. Absent lines are enabled.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Intb {
    disabled: BTreeSet<u32>,
}

impl Intb {
    pub fn is_enabled(&self, line: u32) -> bool {
        !self.disabled.contains(&line)
    }

    pub fn disabled(&self) -> &BTreeSet<u32> {
        &self.disabled
    }

    /// Bit per line of `lines`, 1 meaning disabled.
    pub fn bits(&self, lines: &[u32]) -> Vec<u8> {
        lines.iter().map(|l| u8::from(self.disabled.contains(l))).collect()
    }

    pub fn render(&self, lines: &[u32]) -> String {
        let bits: Vec<String> = self.bits(lines).iter().map(|b| b.to_string()).collect();
        format!("<{}>", bits.join(", "))
    }

    fn meet(&mut self, other: &Intb) {
        self.disabled = self.disabled.intersection(&other.disabled).copied().collect();
    }
}

impl fmt::Display for Intb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "disabled{:?}", self.disabled)
    }
}

/// Interrupt lines an ISR may enable, directly or through its callees.
#[derive(Debug, Clone, Default)]
pub struct Enables {
    pub all: bool,
    pub lines: BTreeSet<u32>,
}

impl Enables {
    pub fn covers(&self, line: u32) -> bool {
        self.all || self.lines.contains(&line)
    }
}

/// What every ISR may re-enable while it runs.
pub fn reenablers(p: &Program) -> BTreeMap<String, Enables> {
    let mut out = BTreeMap::new();
    for isr in p.isrs() {
        let mut en = Enables::default();
        let mut stack = vec![isr.name.clone()];
        let mut seen = BTreeSet::new();
        while let Some(name) = stack.pop() {
            if !seen.insert(name.clone()) {
                continue;
            }
            let Some(r) = p.routine(&name) else { continue };
            walk_stmts(&r.body, &mut |s| {
                if let Some((target, IrqKind::Enable)) = stmt_irq_op(p, r, s) {
                    match target {
                        IrqTarget::All => en.all = true,
                        IrqTarget::Line(l) => {
                            en.lines.insert(l);
                        }
                    }
                }
                if let StmtKind::Call { callee, .. } = &s.kind {
                    stack.push(callee.clone());
                }
            });
        }
        out.insert(isr.name.clone(), en);
    }
    out
}

/// Interrupt effect of graph node `n`.
pub fn node_irq_op(p: &Program, g: &Cfg, n: NodeId) -> Option<IrqOp> {
    match &g.nodes[n].kind {
        NodeKind::Irq(op) => Some(*op),
        NodeKind::Assign {
            target: LValue::Var(name),
            ..
        } => {
            let r = p.routine(g.routine_of(n))?;
            let irqctl = !r.declares_local(name) && p.register(name).is_some_and(|reg| reg.irqctl);
            irqctl.then_some(IrqOp::EnableAll)
        }
        _ => None,
    }
}

/// Post-state interrupt vector of every node of an acyclic graph. Joins take
/// the intersection of disabled lines, the owning ISR's line stays disabled,
/// and a disable is ignored when some ISR that can still preempt may
/// re-enable that line.
pub fn propagate_intb(p: &Program, g: &Cfg) -> Vec<Intb> {
    let own = p.routine(&g.ctx).and_then(|r| r.irq_line());
    let all_lines = p.irq_lines();
    let enablers = reenablers(p);
    let mut post: Vec<Option<Intb>> = vec![None; g.len()];
    for n in g.reverse_postorder() {
        let mut state: Option<Intb> = None;
        for &pr in &g.pred[n] {
            if let Some(ps) = &post[pr] {
                match &mut state {
                    None => state = Some(ps.clone()),
                    Some(s) => s.meet(ps),
                }
            }
        }
        let mut state = state.unwrap_or_default();
        match node_irq_op(p, g, n) {
            Some(IrqOp::Disable(k)) => {
                let mut after = state.clone();
                after.disabled.insert(k);
                let reenabled = p.isrs().any(|h| {
                    h.name != g.ctx
                        && p.preempts(&h.name, &g.ctx)
                        && h.irq_line().is_some_and(|l| after.is_enabled(l))
                        && enablers.get(&h.name).is_some_and(|e| e.covers(k))
                });
                if !reenabled {
                    state = after;
                }
            }
            Some(IrqOp::Enable(k)) => {
                state.disabled.remove(&k);
            }
            Some(IrqOp::DisableAll) => state.disabled.extend(all_lines.iter().copied()),
            Some(IrqOp::EnableAll) => state.disabled.clear(),
            None => {}
        }
        if let Some(l) = own {
            state.disabled.insert(l);
        }
        post[n] = Some(state);
    }
    post.into_iter().map(Option::unwrap_or_default).collect()
}
