use super::{distances_to, Cfg, GraphError, NodeId};
use crate::frontend::Location;

/// Two context graphs joined by an injected edge from just after the first
/// event into the entry of the second event's context.
///
/// Nodes of `gi` keep their ids; nodes of `gj` are shifted by `offset`.
#[derive(Debug, Clone)]
pub struct Iccfg {
    pub gi: Cfg,
    pub gj: Cfg,
    pub offset: usize,
    pub succ: Vec<Vec<NodeId>>,
    pub pred: Vec<Vec<NodeId>>,
    /// Injected cross-context edges, in combined ids.
    pub injected: Vec<(NodeId, NodeId)>,
    /// Nodes of the first and second event, in combined ids.
    pub ei_nodes: Vec<NodeId>,
    pub ej_nodes: Vec<NodeId>,
}

/// Joins `gi` and `gj` for the ordered event pair (`ei`, `ej`). With
/// `all_copies` every node of `ei` gets an injected edge; otherwise only the
/// first one does.
pub fn build_iccfg(gi: &Cfg, gj: &Cfg, ei: &Location, ej: &Location, all_copies: bool) -> Result<Iccfg, GraphError> {
    let mut ei_nodes = gi.nodes_at(ei);
    if ei_nodes.is_empty() {
        return Err(GraphError::EventNotInGraph(ei.clone()));
    }
    let offset = gi.len();
    let ej_nodes: Vec<NodeId> = gj.nodes_at(ej).into_iter().map(|n| n + offset).collect();
    if ej_nodes.is_empty() {
        return Err(GraphError::EventNotInGraph(ej.clone()));
    }
    if !all_copies {
        ei_nodes.truncate(1);
    }
    let mut succ: Vec<Vec<NodeId>> = gi.succ.clone();
    succ.extend(
        gj.succ
            .iter()
            .map(|ss| ss.iter().map(|&m| m + offset).collect::<Vec<_>>()),
    );
    let target = gj.entry + offset;
    let mut injected = Vec::new();
    for &n in &ei_nodes {
        let src = match gi.succ[n].as_slice() {
            [only] => *only,
            _ => n,
        };
        if !injected.contains(&(src, target)) {
            injected.push((src, target));
            succ[src].push(target);
        }
    }
    let mut pred = vec![Vec::new(); succ.len()];
    for (n, ss) in succ.iter().enumerate() {
        for &m in ss {
            pred[m].push(n);
        }
    }
    Ok(Iccfg {
        gi: gi.clone(),
        gj: gj.clone(),
        offset,
        succ,
        pred,
        injected,
        ei_nodes,
        ej_nodes,
    })
}

impl Iccfg {
    /// Distance from every combined node to the nearest node of `ej`.
    pub fn distances_to_ej(&self) -> Vec<u32> {
        distances_to(&self.pred, &self.ej_nodes)
    }

    /// Distance from every node of `gi` to the nearest node of `ei`.
    pub fn distances_to_ei(&self) -> Vec<u32> {
        distances_to(&self.gi.pred, &self.ei_nodes)
    }
}
