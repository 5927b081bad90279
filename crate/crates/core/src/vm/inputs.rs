use std::collections::BTreeSet;

use super::Input;
use crate::frontend::{walk_stmts, Expr, NameUse, Program, StmtKind};
use crate::sem;

/// A register or `input` global whose initial value comes from the test input.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct InputPoint {
    pub name: String,
    pub width: u32,
}

fn read_names(p: &Program) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for r in &p.routines {
        let mut visit = |e: &Expr| {
            e.visit_names(&mut |n, u| {
                if u == NameUse::Read && !r.declares_local(n) {
                    out.insert(n.to_string());
                }
            })
        };
        walk_stmts(&r.body, &mut |s| match &s.kind {
            StmtKind::Assign { value, .. } => visit(value),
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => visit(cond),
            StmtKind::Output(e) => visit(e),
            StmtKind::Call { args, .. } | StmtKind::RequestIrq { args, .. } => args.iter().for_each(&mut visit),
            _ => {}
        });
    }
    out
}

/// Registers that are read somewhere, then globals marked `input`, each in
/// declaration order.
pub fn identify_input_points(p: &Program) -> Vec<InputPoint> {
    let read = read_names(p);
    let regs = p
        .registers
        .iter()
        .filter(|r| read.contains(&r.name))
        .map(|r| InputPoint {
            name: r.name.clone(),
            width: r.width,
        });
    let globals = p.globals.iter().filter(|g| g.input).map(|g| InputPoint {
        name: g.name.clone(),
        width: p.width,
    });
    regs.chain(globals).collect()
}

/// Cartesian product of candidate values per input point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputSpace {
    pub points: Vec<(String, Vec<u64>)>,
}

/// Points at most this wide are enumerated in full.
pub const FULL_RANGE_BITS: u32 = 4;

impl InputSpace {
    /// Full range for narrow points, boundary and literal-derived values
    /// otherwise.
    pub fn for_program(p: &Program) -> Self {
        let mut literals = BTreeSet::new();
        for r in &p.routines {
            walk_stmts(&r.body, &mut |s| {
                let mut grab = |e: &Expr| collect_literals(e, &mut literals);
                match &s.kind {
                    StmtKind::Assign { value, .. } => grab(value),
                    StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => grab(cond),
                    StmtKind::Output(e) => grab(e),
                    StmtKind::Call { args, .. } | StmtKind::RequestIrq { args, .. } => args.iter().for_each(grab),
                    _ => {}
                }
            });
        }
        for g in &p.globals {
            literals.insert(g.init);
        }
        let points = identify_input_points(p)
            .into_iter()
            .map(|ip| {
                let values = if ip.width <= FULL_RANGE_BITS {
                    (0..=sem::max_value(ip.width)).collect()
                } else {
                    interesting(ip.width, &literals)
                };
                (ip.name, values)
            })
            .collect();
        InputSpace { points }
    }

    /// Every point ranging over its whole domain.
    pub fn full(p: &Program) -> Self {
        InputSpace {
            points: identify_input_points(p)
                .into_iter()
                .map(|ip| (ip.name, (0..=sem::max_value(ip.width.min(20))).collect()))
                .collect(),
        }
    }

    pub fn size(&self) -> u128 {
        self.points.iter().map(|(_, v)| v.len() as u128).product()
    }

    /// All assignments in lexicographic order of value indices.
    pub fn iter(&self) -> impl Iterator<Item = Input> + '_ {
        let total = self.size();
        let mut idx = vec![0usize; self.points.len()];
        let mut emitted = 0u128;
        std::iter::from_fn(move || {
            if emitted >= total {
                return None;
            }
            let input: Input = self
                .points
                .iter()
                .zip(&idx)
                .map(|((n, vals), &i)| (n.clone(), vals[i]))
                .collect();
            emitted += 1;
            for (k, (_, vals)) in self.points.iter().enumerate().rev() {
                idx[k] += 1;
                if idx[k] < vals.len() {
                    break;
                }
                idx[k] = 0;
            }
            Some(input)
        })
    }
}

fn collect_literals(e: &Expr, out: &mut BTreeSet<u64>) {
    match e {
        Expr::Int(v) => {
            out.insert(*v);
        }
        Expr::Unary(_, a) => collect_literals(a, out),
        Expr::Binary(_, a, b) => {
            collect_literals(a, out);
            collect_literals(b, out);
        }
        _ => {}
    }
}

fn interesting(width: u32, literals: &BTreeSet<u64>) -> Vec<u64> {
    let max = sem::max_value(width);
    let mut vals: BTreeSet<u64> = [0, 1, max, max - 1, 1u64 << (width - 1)].into_iter().collect();
    for &l in literals {
        let l = sem::mask(l, width);
        vals.insert(l);
        vals.insert(sem::mask(l.wrapping_add(1), width));
        vals.insert(sem::mask(l.wrapping_sub(1), width));
        vals.insert(sem::mask(!l, width));
    }
    vals.into_iter().collect()
}
