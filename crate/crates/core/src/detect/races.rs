use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::intb::Intb;
use super::resources::{node_accesses, SharedResourceSet};
use super::{AccessKind, Event, RaceWarning, Status};
use crate::alias::AliasSet;
use crate::frontend::Program;
use crate::graphs::{Cfg, NodeId, Ricfg};

/// True iff interrupt `line` is enabled right after node `n`, or after some
/// later node that lies before the next by-name access to `resource` and from
/// which a further access to `resource` is still reachable. A postponed
/// firing only matters if the context touches the resource again.
pub fn window_enabled(
    p: &Program,
    aliases: &AliasSet,
    g: &Cfg,
    intb: &[Intb],
    n: NodeId,
    resource: &str,
    line: u32,
) -> bool {
    if intb[n].is_enabled(line) {
        return true;
    }
    let touches = |m: NodeId| {
        let acc = node_accesses(p, aliases, g, m);
        let any = acc.iter().any(|a| a.r == resource);
        let named = acc.iter().any(|a| a.by_name && a.r == resource);
        (any, named)
    };
    // Window: nodes reachable from n before a by-name access.
    let mut window = BTreeSet::new();
    let mut stops = BTreeSet::new();
    let mut queue: VecDeque<NodeId> = g.succ[n].iter().copied().collect();
    while let Some(m) = queue.pop_front() {
        if window.contains(&m) || stops.contains(&m) {
            continue;
        }
        if touches(m).1 {
            stops.insert(m);
            continue;
        }
        window.insert(m);
        queue.extend(g.succ[m].iter().copied());
    }
    for &m in &window {
        if m == g.exit || !intb[m].is_enabled(line) {
            continue;
        }
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<NodeId> = g.succ[m].iter().copied().collect();
        while let Some(k) = queue.pop_front() {
            if !seen.insert(k) || !(window.contains(&k) || stops.contains(&k)) {
                continue;
            }
            if touches(k).0 {
                return true;
            }
            if window.contains(&k) {
                queue.extend(g.succ[k].iter().copied());
            }
        }
    }
    false
}

/// Access kinds per resource for every node of `g`.
fn node_kinds(
    p: &Program,
    aliases: &AliasSet,
    srs: &SharedResourceSet,
    g: &Cfg,
) -> Vec<BTreeMap<String, BTreeSet<AccessKind>>> {
    (0..g.len())
        .map(|n| {
            let mut m: BTreeMap<String, BTreeSet<AccessKind>> = BTreeMap::new();
            for a in node_accesses(p, aliases, g, n) {
                if srs.contains(&a.r) {
                    m.entry(a.r).or_default().insert(a.kind);
                }
            }
            m
        })
        .collect()
}

fn strongest(kinds: &BTreeSet<AccessKind>) -> AccessKind {
    if kinds.contains(&AccessKind::Write) {
        AccessKind::Write
    } else {
        AccessKind::Read
    }
}

/// Pairs of accesses to one shared resource, at least one a write, where the
/// second access's ISR preempts the first's context and is enabled when the
/// first access completes.
pub fn detect_static_races(
    p: &Program,
    aliases: &AliasSet,
    srs: &SharedResourceSet,
    ricfgs: &[Ricfg],
    intb: &[Vec<Intb>],
) -> Vec<RaceWarning> {
    let kinds: Vec<_> = ricfgs.iter().map(|r| node_kinds(p, aliases, srs, &r.cfg)).collect();
    let order: BTreeMap<&str, usize> = p
        .routines
        .iter()
        .enumerate()
        .map(|(i, r)| (r.name.as_str(), i))
        .collect();
    let mut found: BTreeMap<_, RaceWarning> = BTreeMap::new();
    for (i, gi) in ricfgs.iter().enumerate() {
        for (j, gj) in ricfgs.iter().enumerate() {
            let Some(line_j) = p.routine(&gj.cfg.ctx).and_then(|r| r.irq_line()) else {
                continue;
            };
            if i == j || !p.preempts(&gj.cfg.ctx, &gi.cfg.ctx) {
                continue;
            }
            for n in 0..gi.cfg.len() {
                for (res, ki) in &kinds[i][n] {
                    if !window_enabled(p, aliases, &gi.cfg, &intb[i], n, res, line_j) {
                        continue;
                    }
                    for m in 0..gj.cfg.len() {
                        let Some(kj) = kinds[j][m].get(res) else {
                            continue;
                        };
                        let (ai, aj) = (strongest(ki), strongest(kj));
                        if ai == AccessKind::Read && aj == AccessKind::Read {
                            continue;
                        }
                        let (Some(li), Some(lj)) = (gi.cfg.nodes[n].loc.clone(), gj.cfg.nodes[m].loc.clone()) else {
                            continue;
                        };
                        let w = RaceWarning {
                            id: 0,
                            ei: Event {
                                ctx: gi.cfg.ctx.clone(),
                                line: p.line_of(&li),
                                loc: li,
                                access: ai,
                            },
                            ej: Event {
                                ctx: gj.cfg.ctx.clone(),
                                line: p.line_of(&lj),
                                loc: lj,
                                access: aj,
                            },
                            resource: res.clone(),
                            status: Status::Static,
                        };
                        let sort_key = (
                            order[w.ei.ctx.as_str()],
                            w.ei.loc.clone(),
                            order[w.ej.ctx.as_str()],
                            w.ej.loc.clone(),
                            w.resource.clone(),
                        );
                        found.entry(sort_key).or_insert(w);
                    }
                }
            }
        }
    }
    found
        .into_values()
        .enumerate()
        .map(|(k, mut w)| {
            w.id = k + 1;
            w
        })
        .collect()
}
