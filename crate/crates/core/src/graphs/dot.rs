use std::fmt::Write;

use super::{Cfg, IrqOp, NodeKind};
use crate::frontend::printer::{expr, lvalue};

/// DOT text for `g`; node labels start with the statement Location.
pub fn to_dot(g: &Cfg) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", g.ctx);
    for (id, n) in g.nodes.iter().enumerate() {
        let what = match &n.kind {
            NodeKind::Entry => "entry".to_string(),
            NodeKind::Exit => "exit".to_string(),
            NodeKind::Assign { target, value } => format!("{} = {}", lvalue(target), expr(value)),
            NodeKind::Output(e) => format!("output({})", expr(e)),
            NodeKind::Lock(l) => format!("lock({})", lvalue(l)),
            NodeKind::Unlock(l) => format!("unlock({})", lvalue(l)),
            NodeKind::Irq(op) => match op {
                IrqOp::Disable(k) => format!("irq_disable({k})"),
                IrqOp::Enable(k) => format!("irq_enable({k})"),
                IrqOp::DisableAll => "irq_disable_all()".to_string(),
                IrqOp::EnableAll => "irq_enable_all()".to_string(),
            },
            NodeKind::Branch(c) => format!("branch {}", expr(c)),
            NodeKind::CallEnter { callee, .. } => format!("call {callee}"),
            NodeKind::CallReturn { .. } => "return".to_string(),
            NodeKind::RequestIrq { line, .. } => format!("request_irq({line})"),
        };
        let loc = match &n.loc {
            Some(l) => format!("{l}"),
            None => g.frames[n.frame as usize].clone(),
        };
        let copy = if n.unroll.is_empty() {
            String::new()
        } else {
            format!(
                " [{}]",
                n.unroll.iter().map(|u| u.to_string()).collect::<Vec<_>>().join(".")
            )
        };
        let label = format!("{loc}{copy}\\n{what}").replace('"', "\\\"");
        let _ = writeln!(out, "  n{id} [label=\"{label}\"];");
    }
    for (id, ss) in g.succ.iter().enumerate() {
        for (k, m) in ss.iter().enumerate() {
            let attr = match (&g.nodes[id].kind, k) {
                (NodeKind::Branch(_), 0) => " [label=\"T\"]",
                (NodeKind::Branch(_), _) => " [label=\"F\"]",
                _ => "",
            };
            let _ = writeln!(out, "  n{id} -> n{m}{attr};");
        }
    }
    out.push_str("}\n");
    out
}
