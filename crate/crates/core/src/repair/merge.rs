use std::collections::BTreeSet;

use super::blocks::{block_sections, closer, each_block, opener, SectionKind};
use super::FRESH_LOCK_PREFIX;
use crate::frontend::{walk_stmts, LValue, Program, Stmt, StmtKind};

/// Number of generated statements in `p`.
pub fn count_generated(p: &Program) -> usize {
    let mut n = 0;
    for r in &p.routines {
        walk_stmts(&r.body, &mut |s| n += usize::from(s.generated));
    }
    n
}

fn touching(a: (usize, usize), b: (usize, usize)) -> bool {
    a.0 <= b.1 + 1 && b.0 <= a.1 + 1
}

/// A pair of generated locks whose sections touch in some block.
fn mergeable_locks(p: &Program) -> Option<(String, String)> {
    let mut found = None;
    for r in &p.routines {
        each_block(&r.body, &mut Vec::new(), &mut |path, body| {
            if found.is_some() {
                return;
            }
            let secs = block_sections(&r.name, path, body);
            for a in &secs {
                for b in &secs {
                    if let (SectionKind::Lock(x), SectionKind::Lock(y)) = (&a.kind, &b.kind) {
                        if x < y
                            && x.starts_with(FRESH_LOCK_PREFIX)
                            && y.starts_with(FRESH_LOCK_PREFIX)
                            && touching((a.open, a.close), (b.open, b.close))
                        {
                            found = Some((x.clone(), y.clone()));
                            return;
                        }
                    }
                }
            }
        });
    }
    found
}

fn rename(body: &mut [Stmt], from: &str, to: &str) {
    for s in body {
        match &mut s.kind {
            StmtKind::Lock(LValue::Var(n)) | StmtKind::Unlock(LValue::Var(n)) if s.generated && n == from => {
                *n = to.to_string();
            }
            StmtKind::If {
                then_body, else_body, ..
            } => {
                rename(then_body, from, to);
                rename(else_body, from, to);
            }
            StmtKind::While { body, .. } => rename(body, from, to),
            _ => {}
        }
    }
}

/// Removes generated sections of kind `k` anywhere inside `body`.
fn strip_kind(body: &mut Vec<Stmt>, k: &SectionKind) {
    body.retain(|s| opener(s).as_ref() != Some(k) && closer(s).as_ref() != Some(k));
    for s in body.iter_mut() {
        for b in sub_blocks(s) {
            strip_kind(b, k);
        }
    }
}

fn sub_blocks(s: &mut Stmt) -> Vec<&mut Vec<Stmt>> {
    match &mut s.kind {
        StmtKind::If {
            then_body, else_body, ..
        } => vec![then_body, else_body],
        StmtKind::While { body, .. } => vec![body],
        _ => Vec::new(),
    }
}

/// Drops generated sections nested inside a generated section of the same
/// kind, since interrupt masking does not count nesting.
pub(crate) fn flatten_nested(body: &mut Vec<Stmt>) {
    coalesce_with(body, false);
}

/// Replaces nested, overlapping and back-to-back sections of one kind by
/// a single section.
fn coalesce(body: &mut Vec<Stmt>) {
    coalesce_with(body, true);
}

fn coalesce_with(body: &mut Vec<Stmt>, adjacent: bool) {
    let kinds: BTreeSet<SectionKind> = body.iter().filter_map(opener).collect();
    for k in kinds {
        let mut ranges: Vec<(usize, usize)> = Vec::new();
        let mut depth = 0usize;
        let mut start = 0;
        for (i, s) in body.iter().enumerate() {
            if opener(s).as_ref() == Some(&k) {
                if depth == 0 {
                    start = i;
                }
                depth += 1;
            } else if closer(s).as_ref() == Some(&k) && depth > 0 {
                depth -= 1;
                if depth == 0 {
                    match ranges.last_mut() {
                        Some(last) if adjacent && last.1 + 1 == start => last.1 = i,
                        _ => ranges.push((start, i)),
                    }
                }
            }
        }
        let mut drop = vec![false; body.len()];
        for &(a, b) in &ranges {
            for (i, d) in drop.iter_mut().enumerate().take(b).skip(a + 1) {
                let s = &body[i];
                *d = opener(s).as_ref() == Some(&k) || closer(s).as_ref() == Some(&k);
            }
        }
        for &(a, b) in &ranges {
            for s in &mut body[a + 1..b] {
                for sub in sub_blocks(s) {
                    strip_kind(sub, &k);
                }
            }
        }
        let mut i = 0;
        body.retain(|_| {
            i += 1;
            !drop[i - 1]
        });
    }
    for s in body.iter_mut() {
        for b in sub_blocks(s) {
            coalesce_with(b, adjacent);
        }
    }
}

/// Coalesces generated critical sections that overlap or touch. Sections
/// of generated locks that touch first share one lock.
pub fn merge_fixes(p: &Program) -> Program {
    let mut q = p.clone();
    while let Some((keep, gone)) = mergeable_locks(&q) {
        for r in &mut q.routines {
            rename(&mut r.body, &gone, &keep);
        }
        q.locks.retain(|l| *l != gone);
    }
    for r in &mut q.routines {
        coalesce(&mut r.body);
    }
    q.renumber();
    q
}
