use serde::Serialize;

use crate::frontend::{LValue, Location, Program, Stmt, StmtKind};

/// Route from a routine body to a nested block: statement index and arm
/// (0 then, 1 else, 2 loop body) at each level.
pub type BlockPath = Vec<(usize, u8)>;

fn arm(s: &Stmt, a: u8) -> Option<&Vec<Stmt>> {
    match (&s.kind, a) {
        (StmtKind::If { then_body, .. }, 0) => Some(then_body),
        (StmtKind::If { else_body, .. }, 1) => Some(else_body),
        (StmtKind::While { body, .. }, 2) => Some(body),
        _ => None,
    }
}

fn arm_mut(s: &mut Stmt, a: u8) -> Option<&mut Vec<Stmt>> {
    match (&mut s.kind, a) {
        (StmtKind::If { then_body, .. }, 0) => Some(then_body),
        (StmtKind::If { else_body, .. }, 1) => Some(else_body),
        (StmtKind::While { body, .. }, 2) => Some(body),
        _ => None,
    }
}

fn arms(s: &Stmt) -> &'static [u8] {
    match s.kind {
        StmtKind::If { .. } => &[0, 1],
        StmtKind::While { .. } => &[2],
        _ => &[],
    }
}

/// Block path and position of the first statement satisfying `pred`.
pub(crate) fn find(body: &[Stmt], pred: &impl Fn(&Stmt) -> bool) -> Option<(BlockPath, usize)> {
    for (i, s) in body.iter().enumerate() {
        if pred(s) {
            return Some((Vec::new(), i));
        }
        for &a in arms(s) {
            if let Some((mut path, k)) = arm(s, a).and_then(|b| find(b, pred)) {
                path.insert(0, (i, a));
                return Some((path, k));
            }
        }
    }
    None
}

/// Position of the original statement at `loc`.
pub(crate) fn locate(p: &Program, loc: &Location) -> Option<(BlockPath, usize)> {
    let r = p.routine(&loc.routine)?;
    find(&r.body, &|s| s.loc == *loc && !s.generated)
}

pub(crate) fn block<'a>(body: &'a [Stmt], path: &[(usize, u8)]) -> &'a [Stmt] {
    let mut cur = body;
    for &(i, a) in path {
        cur = arm(&cur[i], a).expect("valid block path");
    }
    cur
}

pub(crate) fn block_mut<'a>(body: &'a mut Vec<Stmt>, path: &[(usize, u8)]) -> &'a mut Vec<Stmt> {
    let mut cur = body;
    for &(i, a) in path {
        cur = arm_mut(&mut cur[i], a).expect("valid block path");
    }
    cur
}

/// Calls `f` on every block of `body` with its path.
pub(crate) fn each_block(body: &[Stmt], path: &mut BlockPath, f: &mut impl FnMut(&BlockPath, &[Stmt])) {
    f(path, body);
    for (i, s) in body.iter().enumerate() {
        for &a in arms(s) {
            if let Some(b) = arm(s, a) {
                path.push((i, a));
                each_block(b, path, f);
                path.pop();
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum SectionKind {
    Irq(u32),
    Lock(String),
}

/// A critical section made of two generated statements in one block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Section {
    pub routine: String,
    pub path: BlockPath,
    /// Index of the opening statement within the block.
    pub open: usize,
    pub close: usize,
    pub kind: SectionKind,
}

impl Section {
    /// True iff the original statement at `loc` lies strictly between the
    /// section's boundaries.
    pub fn covers(&self, p: &Program, loc: &Location) -> bool {
        if loc.routine != self.routine {
            return false;
        }
        match locate(p, loc) {
            Some((path, k)) => {
                let n = self.path.len();
                if path.len() < n || path[..n] != self.path[..] {
                    return false;
                }
                let pos = if path.len() == n { k } else { path[n].0 };
                self.open < pos && pos < self.close
            }
            None => false,
        }
    }
}

pub(crate) fn opener(s: &Stmt) -> Option<SectionKind> {
    if !s.generated {
        return None;
    }
    match &s.kind {
        StmtKind::IrqDisable(l) => Some(SectionKind::Irq(*l)),
        StmtKind::Lock(LValue::Var(n)) => Some(SectionKind::Lock(n.clone())),
        _ => None,
    }
}

pub(crate) fn closer(s: &Stmt) -> Option<SectionKind> {
    if !s.generated {
        return None;
    }
    match &s.kind {
        StmtKind::IrqEnable(l) => Some(SectionKind::Irq(*l)),
        StmtKind::Unlock(LValue::Var(n)) => Some(SectionKind::Lock(n.clone())),
        _ => None,
    }
}

/// Sections of one block, matched innermost first.
pub(crate) fn block_sections(routine: &str, path: &BlockPath, body: &[Stmt]) -> Vec<Section> {
    let mut open: Vec<(SectionKind, usize)> = Vec::new();
    let mut out = Vec::new();
    for (i, s) in body.iter().enumerate() {
        if let Some(k) = opener(s) {
            open.push((k, i));
        } else if let Some(k) = closer(s) {
            if let Some(pos) = open.iter().rposition(|(ok, _)| *ok == k) {
                let (_, start) = open.remove(pos);
                out.push(Section {
                    routine: routine.to_string(),
                    path: path.clone(),
                    open: start,
                    close: i,
                    kind: k,
                });
            }
        }
    }
    out.sort_by_key(|s| (s.open, s.close));
    out
}

/// Every generated critical section of `p`.
pub fn find_sections(p: &Program) -> Vec<Section> {
    let mut out = Vec::new();
    for r in &p.routines {
        each_block(&r.body, &mut Vec::new(), &mut |path, body| {
            out.extend(block_sections(&r.name, path, body));
        });
    }
    out
}
