use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::rc::Rc;

use crate::frontend::{BinOp, UnOp};
use crate::sem;

/// A symbolic integer built from input points and constants.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Term {
    Const(u64),
    /// Input point with its declared width.
    Var(String, u32),
    Un(UnOp, Rc<Term>),
    Bin(BinOp, Rc<Term>, Rc<Term>),
    /// Truncation to a width, as performed by stores.
    Mask(u32, Rc<Term>),
}

impl Term {
    pub fn un(op: UnOp, a: Term, width: u32) -> Term {
        match a {
            Term::Const(v) => Term::Const(sem::unary(op, v, width)),
            a => Term::Un(op, Rc::new(a)),
        }
    }

    pub fn bin(op: BinOp, a: Term, b: Term, width: u32) -> Term {
        match (&a, &b) {
            (Term::Const(x), Term::Const(y)) => Term::Const(sem::binary(op, *x, *y, width)),
            _ => Term::Bin(op, Rc::new(a), Rc::new(b)),
        }
    }

    /// `t` truncated to `w` bits, omitted when it cannot change the value.
    pub fn masked(t: Term, w: u32, program_width: u32) -> Term {
        match t {
            Term::Const(v) => Term::Const(sem::mask(v, w)),
            Term::Var(n, vw) if vw <= w => Term::Var(n, vw),
            t @ (Term::Un(..) | Term::Bin(..)) if program_width <= w => t,
            Term::Mask(m, inner) if m <= w => Term::Mask(m, inner),
            t => Term::Mask(w, Rc::new(t)),
        }
    }

    pub fn as_const(&self) -> Option<u64> {
        match self {
            Term::Const(v) => Some(*v),
            _ => None,
        }
    }

    pub fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Const(_) => {}
            Term::Var(n, _) => {
                out.insert(n.clone());
            }
            Term::Un(_, a) | Term::Mask(_, a) => a.vars(out),
            Term::Bin(_, a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }

    pub fn consts(&self, out: &mut BTreeSet<u64>) {
        match self {
            Term::Const(v) => {
                out.insert(*v);
            }
            Term::Var(..) => {}
            Term::Un(_, a) | Term::Mask(_, a) => a.consts(out),
            Term::Bin(_, a, b) => {
                a.consts(out);
                b.consts(out);
            }
        }
    }

    /// Value under `env`; unassigned inputs read as zero.
    pub fn eval(&self, env: &BTreeMap<String, u64>, width: u32) -> u64 {
        match self {
            Term::Const(v) => *v,
            Term::Var(n, w) => sem::mask(env.get(n).copied().unwrap_or(0), *w),
            Term::Un(op, a) => sem::unary(*op, a.eval(env, width), width),
            Term::Bin(op, a, b) => sem::binary(*op, a.eval(env, width), b.eval(env, width), width),
            Term::Mask(w, a) => sem::mask(a.eval(env, width), *w),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(v) => write!(f, "{v:#x}"),
            Term::Var(n, _) => f.write_str(n),
            Term::Un(op, a) => {
                let s = match op {
                    UnOp::Neg => "-",
                    UnOp::BitNot => "~",
                    UnOp::Not => "!",
                };
                write!(f, "{s}({a})")
            }
            Term::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Term::Mask(w, a) => write!(f, "trunc{w}({a})"),
        }
    }
}

/// Atom of a path condition: `term` is non-zero iff `holds`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Constraint {
    pub term: Term,
    pub holds: bool,
}

impl Constraint {
    pub fn new(term: Term, holds: bool) -> Self {
        Constraint { term, holds }
    }

    pub fn check(&self, env: &BTreeMap<String, u64>, width: u32) -> bool {
        (self.term.eval(env, width) != 0) == self.holds
    }

    pub fn negated(&self) -> Constraint {
        Constraint::new(self.term.clone(), !self.holds)
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.holds {
            write!(f, "{}", self.term)
        } else {
            write!(f, "!{}", self.term)
        }
    }
}
