use serde::Serialize;

use crate::frontend::{walk_stmts, LValue, Location, Program, Routine, Stmt, StmtKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IrqTarget {
    Line(u32),
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IrqKind {
    Enable,
    Disable,
}

/// ⟨M, L, I, T⟩
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InterruptOperation {
    pub m: String,
    pub l: Location,
    pub i: IrqTarget,
    pub t: IrqKind,
}

/// The interrupt effect of one statement. Writes to interrupt-controlling
/// registers count as enabling everything.
pub fn stmt_irq_op(p: &Program, r: &Routine, s: &Stmt) -> Option<(IrqTarget, IrqKind)> {
    match &s.kind {
        StmtKind::IrqDisable(n) => Some((IrqTarget::Line(*n), IrqKind::Disable)),
        StmtKind::IrqEnable(n) => Some((IrqTarget::Line(*n), IrqKind::Enable)),
        StmtKind::IrqDisableAll => Some((IrqTarget::All, IrqKind::Disable)),
        StmtKind::IrqEnableAll => Some((IrqTarget::All, IrqKind::Enable)),
        StmtKind::Assign {
            target: LValue::Var(name),
            ..
        } if !r.declares_local(name) && p.register(name).is_some_and(|reg| reg.irqctl) => {
            Some((IrqTarget::All, IrqKind::Enable))
        }
        _ => None,
    }
}

/// Every interrupt operation in source order, routine by routine.
pub fn identify_interrupt_ops(p: &Program) -> Vec<InterruptOperation> {
    let mut out = Vec::new();
    for r in &p.routines {
        walk_stmts(&r.body, &mut |s| {
            if let Some((i, t)) = stmt_irq_op(p, r, s) {
                out.push(InterruptOperation {
                    m: r.name.clone(),
                    l: s.loc.clone(),
                    i,
                    t,
                });
            }
        });
    }
    out
}
