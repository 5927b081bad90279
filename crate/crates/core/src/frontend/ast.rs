//! Syntax tree for IDL programs.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Default machine word width in bits.
pub const DEFAULT_WIDTH: u32 = 16;

/// Position of a statement: the owning routine and the statement's ordinal
/// in a pre-order walk of the routine body.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Location {
    pub routine: String,
    pub index: u32,
}

impl Location {
    pub fn new(routine: impl Into<String>, index: u32) -> Self {
        Location {
            routine: routine.into(),
            index,
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.routine, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub width: u32,
    pub globals: Vec<GlobalDecl>,
    pub registers: Vec<RegisterDecl>,
    pub locks: Vec<String>,
    pub routines: Vec<Routine>,
}

impl Default for Program {
    fn default() -> Self {
        Program {
            width: DEFAULT_WIDTH,
            globals: Vec::new(),
            registers: Vec::new(),
            locks: Vec::new(),
            routines: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalDecl {
    pub name: String,
    pub init: u64,
    /// Marked `input`: the initial value comes from the test input.
    pub input: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterDecl {
    pub name: String,
    pub width: u32,
    pub readonly: bool,
    /// Writes to this register change interrupt masking.
    pub irqctl: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RoutineKind {
    Task,
    Isr { line: u32 },
    Func,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Routine {
    pub name: String,
    pub kind: RoutineKind,
    /// Smaller number means higher priority. `None` for plain functions.
    pub priority: Option<u32>,
    pub params: Vec<String>,
    pub locals: Vec<String>,
    pub body: Vec<Stmt>,
}

impl Routine {
    pub fn is_task(&self) -> bool {
        matches!(self.kind, RoutineKind::Task)
    }

    pub fn is_isr(&self) -> bool {
        matches!(self.kind, RoutineKind::Isr { .. })
    }

    pub fn irq_line(&self) -> Option<u32> {
        match self.kind {
            RoutineKind::Isr { line } => Some(line),
            _ => None,
        }
    }

    /// Tasks and ISRs are execution contexts; functions only run inside one.
    pub fn is_context(&self) -> bool {
        !matches!(self.kind, RoutineKind::Func)
    }

    pub fn declares_local(&self, name: &str) -> bool {
        self.params.iter().any(|p| p == name) || self.locals.iter().any(|l| l == name)
    }
}

#[derive(Debug, Clone, Eq)]
pub struct Stmt {
    pub loc: Location,
    /// Source line, for reporting only.
    pub line: u32,
    pub kind: StmtKind,
    /// Inserted by the repair engine.
    pub generated: bool,
}

// Source lines and the generated marker do not survive printing, so they are
// not part of structural equality.
impl PartialEq for Stmt {
    fn eq(&self, other: &Self) -> bool {
        self.loc == other.loc && self.kind == other.kind
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Assign {
        target: LValue,
        value: Expr,
    },
    If {
        cond: Expr,
        then_body: Vec<Stmt>,
        else_body: Vec<Stmt>,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
    },
    Lock(LValue),
    Unlock(LValue),
    IrqDisable(u32),
    IrqEnable(u32),
    IrqDisableAll,
    IrqEnableAll,
    Output(Expr),
    Call {
        callee: String,
        args: Vec<Expr>,
    },
    RequestIrq {
        line: u32,
        args: Vec<Expr>,
    },
}

impl StmtKind {
    pub fn is_lock_op(&self) -> bool {
        matches!(self, StmtKind::Lock(_) | StmtKind::Unlock(_))
    }

    pub fn is_irq_op(&self) -> bool {
        matches!(
            self,
            StmtKind::IrqDisable(_) | StmtKind::IrqEnable(_) | StmtKind::IrqDisableAll | StmtKind::IrqEnableAll
        )
    }
}

/// Assignment target, also used for lock operands.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LValue {
    Var(String),
    Deref(String),
}

impl LValue {
    pub fn base(&self) -> &str {
        match self {
            LValue::Var(n) | LValue::Deref(n) => n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UnOp {
    Neg,
    BitNot,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    And,
    Or,
    Xor,
    Shl,
    Shr,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    LogAnd,
    LogOr,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::And => "&",
            BinOp::Or => "|",
            BinOp::Xor => "^",
            BinOp::Shl => "<<",
            BinOp::Shr => ">>",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::LogAnd => "&&",
            BinOp::LogOr => "||",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::LogOr => 1,
            BinOp::LogAnd => 2,
            BinOp::Or => 3,
            BinOp::Xor => 4,
            BinOp::And => 5,
            BinOp::Eq | BinOp::Ne => 6,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 7,
            BinOp::Shl | BinOp::Shr => 8,
            BinOp::Add | BinOp::Sub => 9,
            BinOp::Mul => 10,
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(u64),
    Var(String),
    AddrOf(String),
    Deref(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// Calls `f` on every variable name the expression mentions, with a flag
    /// telling whether the mention is a dereference.
    pub fn visit_names(&self, f: &mut impl FnMut(&str, NameUse)) {
        match self {
            Expr::Int(_) => {}
            Expr::Var(n) => f(n, NameUse::Read),
            Expr::AddrOf(n) => f(n, NameUse::AddressOf),
            Expr::Deref(n) => f(n, NameUse::Deref),
            Expr::Unary(_, e) => e.visit_names(f),
            Expr::Binary(_, a, b) => {
                a.visit_names(f);
                b.visit_names(f);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NameUse {
    Read,
    AddressOf,
    Deref,
}

impl Program {
    pub fn routine(&self, name: &str) -> Option<&Routine> {
        self.routines.iter().find(|r| r.name == name)
    }

    pub fn routine_mut(&mut self, name: &str) -> Option<&mut Routine> {
        self.routines.iter_mut().find(|r| r.name == name)
    }

    pub fn global(&self, name: &str) -> Option<&GlobalDecl> {
        self.globals.iter().find(|g| g.name == name)
    }

    pub fn register(&self, name: &str) -> Option<&RegisterDecl> {
        self.registers.iter().find(|r| r.name == name)
    }

    pub fn is_lock(&self, name: &str) -> bool {
        self.locks.iter().any(|l| l == name)
    }

    pub fn isr_for_line(&self, line: u32) -> Option<&Routine> {
        self.routines.iter().find(|r| r.irq_line() == Some(line))
    }

    pub fn tasks(&self) -> impl Iterator<Item = &Routine> {
        self.routines.iter().filter(|r| r.is_task())
    }

    pub fn isrs(&self) -> impl Iterator<Item = &Routine> {
        self.routines.iter().filter(|r| r.is_isr())
    }

    pub fn contexts(&self) -> impl Iterator<Item = &Routine> {
        self.routines.iter().filter(|r| r.is_context())
    }

    /// Declared interrupt lines in ascending order.
    pub fn irq_lines(&self) -> Vec<u32> {
        let mut lines: Vec<u32> = self.routines.iter().filter_map(|r| r.irq_line()).collect();
        lines.sort_unstable();
        lines
    }

    /// True iff routine `a` may preempt routine `b`.
    pub fn preempts(&self, a: &str, b: &str) -> bool {
        match (self.routine(a), self.routine(b)) {
            (Some(ra), Some(rb)) => {
                ra.is_isr() && matches!((ra.priority, rb.priority), (Some(pa), Some(pb)) if pa < pb)
            }
            _ => false,
        }
    }

    /// Looks up the statement at `loc`.
    pub fn stmt(&self, loc: &Location) -> Option<&Stmt> {
        fn find(body: &[Stmt], index: u32) -> Option<&Stmt> {
            for s in body {
                if s.loc.index == index {
                    return Some(s);
                }
                let nested = match &s.kind {
                    StmtKind::If {
                        then_body, else_body, ..
                    } => find(then_body, index).or_else(|| find(else_body, index)),
                    StmtKind::While { body, .. } => find(body, index),
                    _ => None,
                };
                if nested.is_some() {
                    return nested;
                }
            }
            None
        }
        find(&self.routine(&loc.routine)?.body, loc.index)
    }

    /// Source line of the statement at `loc`, or 0 when unknown.
    pub fn line_of(&self, loc: &Location) -> u32 {
        self.stmt(loc).map(|s| s.line).unwrap_or(0)
    }

    /// Reassigns statement ordinals in pre-order for every routine and returns
    /// the map from old to new Locations.
    pub fn renumber(&mut self) -> std::collections::BTreeMap<Location, Location> {
        fn walk(
            body: &mut [Stmt],
            routine: &str,
            next: &mut u32,
            map: &mut std::collections::BTreeMap<Location, Location>,
        ) {
            for s in body {
                let new = Location::new(routine, *next);
                *next += 1;
                let old = std::mem::replace(&mut s.loc, new.clone());
                if !s.generated {
                    map.insert(old, new);
                }
                match &mut s.kind {
                    StmtKind::If {
                        then_body, else_body, ..
                    } => {
                        walk(then_body, routine, next, map);
                        walk(else_body, routine, next, map);
                    }
                    StmtKind::While { body, .. } => walk(body, routine, next, map),
                    _ => {}
                }
            }
        }
        let mut map = std::collections::BTreeMap::new();
        for r in &mut self.routines {
            let mut next = 1;
            let name = r.name.clone();
            walk(&mut r.body, &name, &mut next, &mut map);
        }
        map
    }
}

/// Pre-order iteration over a statement list, descending into blocks.
pub fn walk_stmts<'a>(body: &'a [Stmt], f: &mut impl FnMut(&'a Stmt)) {
    for s in body {
        f(s);
        match &s.kind {
            StmtKind::If {
                then_body, else_body, ..
            } => {
                walk_stmts(then_body, f);
                walk_stmts(else_body, f);
            }
            StmtKind::While { body, .. } => walk_stmts(body, f),
            _ => {}
        }
    }
}
