use std::collections::BTreeMap;

use super::blocks::{block_mut, locate};
use super::{PatchKind, PatchOp, RepairError, Side};
use crate::frontend::{check_program, LValue, Location, Program, Stmt, StmtKind};

fn generated(routine: &str, kind: StmtKind) -> Stmt {
    Stmt {
        loc: Location::new(routine, 0),
        line: 0,
        kind,
        generated: true,
    }
}

/// Nesting rank at one insertion point: lower ranks sit further out.
fn rank(kind: &StmtKind, side: Side) -> u8 {
    let r = match kind {
        StmtKind::IrqDisable(_) | StmtKind::IrqEnable(_) => 0,
        StmtKind::Lock(_) | StmtKind::Unlock(_) => 1,
        _ => 2,
    };
    match side {
        Side::Before => r,
        Side::After => 2 - r,
    }
}

fn remove_at(p: &mut Program, loc: &Location) -> Result<Stmt, RepairError> {
    let (path, k) = locate(p, loc).ok_or_else(|| RepairError::AnchorVanished(loc.clone()))?;
    let r = p.routine_mut(&loc.routine).unwrap();
    Ok(block_mut(&mut r.body, &path).remove(k))
}

fn insert_at(p: &mut Program, anchor: &Location, side: Side, stmts: Vec<Stmt>) -> Result<(), RepairError> {
    let (path, k) = locate(p, anchor).ok_or_else(|| RepairError::AnchorVanished(anchor.clone()))?;
    let r = p.routine_mut(&anchor.routine).unwrap();
    let b = block_mut(&mut r.body, &path);
    let at = match side {
        Side::Before => k,
        Side::After => k + 1,
    };
    b.splice(at..at, stmts);
    Ok(())
}

/// Applies `patches` and renumbers statements. Inserted statements are
/// marked as generated; moved statements keep their identity.
pub fn apply_patches(p: &Program, patches: &[PatchOp]) -> Result<Program, RepairError> {
    let mut q = p.clone();
    for op in patches {
        if locate(&q, &op.anchor).is_none() {
            return Err(RepairError::AnchorVanished(op.anchor.clone()));
        }
    }
    let mut groups: BTreeMap<(Location, Side), Vec<(u8, usize, Stmt)>> = BTreeMap::new();
    for (seq, op) in patches.iter().enumerate() {
        let routine = op.anchor.routine.as_str();
        let stmt = match &op.kind {
            PatchKind::InsertIrqDisable(l) => generated(routine, StmtKind::IrqDisable(*l)),
            PatchKind::InsertIrqEnable(l) => generated(routine, StmtKind::IrqEnable(*l)),
            PatchKind::InsertLock(n) | PatchKind::InsertUnlock(n) => {
                if !q.is_lock(n) {
                    q.locks.push(n.clone());
                }
                let lv = LValue::Var(n.clone());
                let kind = if matches!(op.kind, PatchKind::InsertLock(_)) {
                    StmtKind::Lock(lv)
                } else {
                    StmtKind::Unlock(lv)
                };
                generated(routine, kind)
            }
            PatchKind::MoveLock(from) => {
                match q.stmt(from) {
                    Some(s) if s.kind.is_lock_op() => {}
                    Some(_) => return Err(RepairError::NotALockOp(from.clone())),
                    None => return Err(RepairError::AnchorVanished(from.clone())),
                }
                remove_at(&mut q, from)?
            }
        };
        let key = rank(&stmt.kind, op.side);
        groups
            .entry((op.anchor.clone(), op.side))
            .or_default()
            .push((key, seq, stmt));
    }
    for ((anchor, side), mut stmts) in groups {
        match side {
            Side::Before => stmts.sort_by_key(|(r, seq, _)| (*r, *seq)),
            Side::After => stmts.sort_by_key(|(r, seq, _)| (*r, std::cmp::Reverse(*seq))),
        }
        insert_at(&mut q, &anchor, side, stmts.into_iter().map(|(_, _, s)| s).collect())?;
    }
    q.renumber();
    check_program(q)
        .map_err(|d| RepairError::IllFormed(d.iter().map(|x| x.message.clone()).collect::<Vec<_>>().join("; ")))
}

/// Removes every generated statement and unused generated lock.
pub fn strip_generated(p: &Program) -> Program {
    fn strip(body: &mut Vec<Stmt>) {
        body.retain(|s| !s.generated);
        for s in body {
            match &mut s.kind {
                StmtKind::If {
                    then_body, else_body, ..
                } => {
                    strip(then_body);
                    strip(else_body);
                }
                StmtKind::While { body, .. } => strip(body),
                _ => {}
            }
        }
    }
    let mut q = p.clone();
    for r in &mut q.routines {
        strip(&mut r.body);
    }
    q.locks.retain(|l| !l.starts_with(super::FRESH_LOCK_PREFIX));
    q.renumber();
    q
}

/// Reassigns source lines as if `p` had been printed and parsed again,
/// keeping the generated marks.
pub fn reline(p: &Program) -> Program {
    fn copy(from: &[Stmt], to: &mut [Stmt]) {
        for (a, b) in from.iter().zip(to.iter_mut()) {
            b.generated = a.generated;
            match (&a.kind, &mut b.kind) {
                (
                    StmtKind::If {
                        then_body: t1,
                        else_body: e1,
                        ..
                    },
                    StmtKind::If {
                        then_body: t2,
                        else_body: e2,
                        ..
                    },
                ) => {
                    copy(t1, t2);
                    copy(e1, e2);
                }
                (StmtKind::While { body: b1, .. }, StmtKind::While { body: b2, .. }) => copy(b1, b2),
                _ => {}
            }
        }
    }
    let Ok(mut q) = crate::frontend::parse_program(&crate::frontend::print_program(p)) else {
        return p.clone();
    };
    for (a, b) in p.routines.iter().zip(q.routines.iter_mut()) {
        copy(&a.body, &mut b.body);
    }
    q
}
