use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{AccessKind, SharedResourceAccess};
use crate::alias::{qualify, AliasSet};
use crate::frontend::{Expr, LValue, NameUse, Program, Routine};
use crate::graphs::{Cfg, NodeId, NodeKind};

/// A memory access performed by one graph node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct NodeAccess {
    /// Name as written at the site, e.g. `x` or `*p`.
    pub v: String,
    /// Qualified declared name of the memory.
    pub r: String,
    pub kind: AccessKind,
    /// False when the access goes through a pointer.
    pub by_name: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SharedResourceSet {
    pub members: BTreeSet<String>,
    /// Access paths that may alias each member, e.g. `*q`.
    pub aliases: BTreeMap<String, BTreeSet<String>>,
    /// Contexts accessing each member.
    pub provenance: BTreeMap<String, BTreeSet<String>>,
}

impl SharedResourceSet {
    pub fn contains(&self, name: &str) -> bool {
        self.members.contains(name)
    }
}

struct Collector<'a> {
    p: &'a Program,
    r: &'a Routine,
    aliases: &'a AliasSet,
    taken: BTreeSet<String>,
    out: Vec<NodeAccess>,
}

impl Collector<'_> {
    /// Declared memory behind a bare name, if it can be shared at all.
    fn memory(&self, name: &str) -> Option<String> {
        if !self.r.declares_local(name) {
            if self.p.register(name).is_some() || self.p.global(name).is_some() {
                return Some(name.to_string());
            }
            return None;
        }
        let q = qualify(self.r, name);
        self.taken.contains(&q).then_some(q)
    }

    fn direct(&mut self, name: &str, kind: AccessKind) {
        if let Some(r) = self.memory(name) {
            self.out.push(NodeAccess {
                v: name.to_string(),
                r,
                kind,
                by_name: true,
            });
        }
    }

    fn through(&mut self, ptr: &str, kind: AccessKind) {
        self.direct(ptr, AccessKind::Read);
        let q = qualify(self.r, ptr);
        for target in self.aliases.points_to(&q) {
            if self.p.is_lock(&target) {
                continue;
            }
            self.out.push(NodeAccess {
                v: format!("*{ptr}"),
                r: target,
                kind,
                by_name: false,
            });
        }
    }

    fn read_expr(&mut self, e: &Expr) {
        let mut uses = Vec::new();
        e.visit_names(&mut |n, u| uses.push((n.to_string(), u)));
        for (n, u) in uses {
            match u {
                NameUse::Read => self.direct(&n, AccessKind::Read),
                NameUse::Deref => self.through(&n, AccessKind::Read),
                NameUse::AddressOf => {}
            }
        }
    }
}

/// Accesses to globals, registers and address-taken locals made by node `n`.
pub fn node_accesses(p: &Program, aliases: &AliasSet, g: &Cfg, n: NodeId) -> Vec<NodeAccess> {
    let Some(r) = p.routine(g.routine_of(n)) else {
        return Vec::new();
    };
    let mut c = Collector {
        p,
        r,
        aliases,
        taken: aliases.address_taken(),
        out: Vec::new(),
    };
    match &g.nodes[n].kind {
        NodeKind::Assign { target, value } => {
            c.read_expr(value);
            match target {
                LValue::Var(name) => c.direct(name, AccessKind::Write),
                LValue::Deref(ptr) => c.through(ptr, AccessKind::Write),
            }
        }
        NodeKind::Output(e) | NodeKind::Branch(e) => c.read_expr(e),
        NodeKind::CallEnter { args, .. } | NodeKind::RequestIrq { args, .. } => {
            for a in args {
                c.read_expr(a);
            }
        }
        NodeKind::Lock(LValue::Deref(ptr)) | NodeKind::Unlock(LValue::Deref(ptr)) => {
            c.direct(ptr, AccessKind::Read);
        }
        _ => {}
    }
    c.out.sort();
    c.out.dedup();
    c.out
}

/// Resources touched by at least two ISRs, or by a task and an ISR, together
/// with every access to them.
pub fn identify_shared_resources(
    p: &Program,
    aliases: &AliasSet,
    graphs: &[Cfg],
) -> (SharedResourceSet, Vec<SharedResourceAccess>) {
    let mut users: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut all = Vec::new();
    for g in graphs {
        for n in 0..g.len() {
            for a in node_accesses(p, aliases, g, n) {
                users.entry(a.r.clone()).or_default().insert(g.ctx.clone());
                all.push((g.ctx.clone(), n, g, a));
            }
        }
    }
    let is_isr = |c: &str| p.routine(c).is_some_and(|r| r.is_isr());
    let mut srs = SharedResourceSet::default();
    for (r, ctxs) in &users {
        let isrs = ctxs.iter().filter(|c| is_isr(c)).count();
        let tasks = ctxs.len() - isrs;
        if isrs >= 2 || (isrs >= 1 && tasks >= 1) {
            srs.members.insert(r.clone());
            srs.provenance.insert(r.clone(), ctxs.clone());
        }
    }
    for (ptr, targets) in aliases.pointers() {
        for t in targets {
            if srs.members.contains(t) {
                srs.aliases.entry(t.clone()).or_default().insert(format!("*{ptr}"));
            }
        }
    }
    let mut accesses = BTreeSet::new();
    for (ctx, n, g, a) in all {
        if !srs.members.contains(&a.r) {
            continue;
        }
        let Some(loc) = g.nodes[n].loc.clone() else {
            continue;
        };
        accesses.insert(SharedResourceAccess {
            t: ctx,
            l: loc,
            av: a.by_name,
            v: a.v,
            r: a.r,
            a: a.kind,
        });
    }
    (srs, accesses.into_iter().collect())
}
