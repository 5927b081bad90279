//! Inclusion-based (Andersen) points-to analysis and the derived alias sets.
//!
//! Names are qualified: globals keep their name, locals and parameters become
//! `routine::name`. Registers never take part.

use std::collections::{BTreeMap, BTreeSet};

use crate::frontend::{walk_stmts, Expr, LValue, Program, Routine, StmtKind};

/// Qualified name of `name` as seen from inside `r`.
pub fn qualify(r: &Routine, name: &str) -> String {
    if r.declares_local(name) {
        format!("{}::{}", r.name, name)
    } else {
        name.to_string()
    }
}

/// Right-hand sides that carry pointer values.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Src {
    Addr(String),
    Copy(String),
    Load(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Constraint {
    /// `dst = src`
    Assign(String, Src),
    /// `*dst = src`
    Store(String, Src),
}

fn source(p: &Program, r: &Routine, e: &Expr) -> Option<Src> {
    let ok = |n: &str| p.register(n).is_none() && !p.is_lock(n) || r.declares_local(n);
    match e {
        Expr::AddrOf(n) => Some(Src::Addr(qualify(r, n))),
        Expr::Var(n) if ok(n) => Some(Src::Copy(qualify(r, n))),
        Expr::Deref(n) => Some(Src::Load(qualify(r, n))),
        _ => None,
    }
}

fn routine_constraints(p: &Program, r: &Routine, out: &mut BTreeSet<Constraint>, link: bool) {
    walk_stmts(&r.body, &mut |s| match &s.kind {
        StmtKind::Assign { target, value } => {
            if let Some(src) = source(p, r, value) {
                match target {
                    LValue::Var(n) if p.register(n).is_none() || r.declares_local(n) => {
                        out.insert(Constraint::Assign(qualify(r, n), src));
                    }
                    LValue::Deref(n) => {
                        out.insert(Constraint::Store(qualify(r, n), src));
                    }
                    _ => {}
                }
            }
        }
        StmtKind::Call { callee, args } if link => {
            if let Some(f) = p.routine(callee) {
                bind(p, r, f, args, out);
            }
        }
        StmtKind::RequestIrq { line, args } if link => {
            if let Some(isr) = p.isr_for_line(*line) {
                bind(p, r, isr, args, out);
            }
        }
        _ => {}
    });
}

fn bind(p: &Program, caller: &Routine, callee: &Routine, args: &[Expr], out: &mut BTreeSet<Constraint>) {
    for (param, arg) in callee.params.iter().zip(args) {
        if let Some(src) = source(p, caller, arg) {
            out.insert(Constraint::Assign(qualify(callee, param), src));
        }
    }
}

/// Solved points-to sets plus the alias relation they induce.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliasSet {
    pts: BTreeMap<String, BTreeSet<String>>,
    /// Union-find parent over access paths (`x` or `*p`).
    parent: BTreeMap<String, String>,
}

impl AliasSet {
    /// Memory names `ptr` may point to.
    pub fn points_to(&self, ptr: &str) -> BTreeSet<String> {
        self.pts.get(ptr).cloned().unwrap_or_default()
    }

    /// Every pointer name with a non-empty points-to set.
    pub fn pointers(&self) -> impl Iterator<Item = (&String, &BTreeSet<String>)> {
        self.pts.iter().filter(|(_, s)| !s.is_empty())
    }

    /// Names whose address is stored in some pointer.
    pub fn address_taken(&self) -> BTreeSet<String> {
        self.pts.values().flatten().cloned().collect()
    }

    fn find(&self, path: &str) -> String {
        let mut cur = path.to_string();
        while let Some(up) = self.parent.get(&cur) {
            if *up == cur {
                break;
            }
            cur = up.clone();
        }
        cur
    }

    fn union(&mut self, a: &str, b: &str) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller representative wins, for determinism.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent.insert(hi, lo.clone());
            self.parent.entry(lo.clone()).or_insert(lo);
        }
    }

    /// True iff the access paths `a` and `b` may denote the same memory.
    /// Paths are qualified names, optionally prefixed by `*`.
    pub fn may_alias(&self, a: &str, b: &str) -> bool {
        a == b || self.find(a) == self.find(b)
    }

    /// All access paths in the alias class of `path`, including itself.
    pub fn class(&self, path: &str) -> BTreeSet<String> {
        let root = self.find(path);
        let mut out: BTreeSet<String> = self.parent.keys().filter(|k| self.find(k) == root).cloned().collect();
        out.insert(path.to_string());
        out
    }

    /// Every pair of distinct access paths that may alias.
    pub fn pairs(&self) -> BTreeSet<(String, String)> {
        let keys: Vec<&String> = self.parent.keys().collect();
        let mut out = BTreeSet::new();
        for (i, a) in keys.iter().enumerate() {
            for b in &keys[i + 1..] {
                if self.may_alias(a, b) {
                    out.insert(((*a).clone(), (*b).clone()));
                }
            }
        }
        out
    }

    fn close(&mut self) {
        let pts = self.pts.clone();
        for (ptr, targets) in &pts {
            let deref = format!("*{ptr}");
            for t in targets {
                self.union(&deref, t);
            }
        }
    }
}

fn solve(constraints: &BTreeSet<Constraint>) -> AliasSet {
    let mut pts: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let get = |pts: &BTreeMap<String, BTreeSet<String>>, n: &str| -> BTreeSet<String> {
        pts.get(n).cloned().unwrap_or_default()
    };
    loop {
        let mut changed = false;
        for c in constraints {
            let (dsts, src) = match c {
                Constraint::Assign(d, src) => (BTreeSet::from([d.clone()]), src),
                Constraint::Store(d, src) => (get(&pts, d), src),
            };
            let values: BTreeSet<String> = match src {
                Src::Addr(x) => BTreeSet::from([x.clone()]),
                Src::Copy(y) => get(&pts, y),
                Src::Load(y) => get(&pts, y).iter().flat_map(|o| get(&pts, o)).collect(),
            };
            if values.is_empty() {
                continue;
            }
            for d in dsts {
                let entry = pts.entry(d).or_default();
                let before = entry.len();
                entry.extend(values.iter().cloned());
                changed |= entry.len() != before;
            }
        }
        if !changed {
            break;
        }
    }
    let mut set = AliasSet {
        pts,
        parent: BTreeMap::new(),
    };
    set.close();
    set
}

/// Points-to facts from the statements of `r` alone.
pub fn andersen_points_to(p: &Program, r: &Routine) -> AliasSet {
    let mut cs = BTreeSet::new();
    routine_constraints(p, r, &mut cs, false);
    solve(&cs)
}

/// Whole-program analysis: every routine's constraints plus argument to
/// parameter flow at calls and interrupt registrations, solved to a fixpoint.
pub fn link_alias_sets(p: &Program) -> AliasSet {
    let mut cs = BTreeSet::new();
    for r in &p.routines {
        routine_constraints(p, r, &mut cs, true);
    }
    solve(&cs)
}
