use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::ast::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagKind {
    DuplicateRoutine,
    DuplicateIrqLine,
    DuplicateDeclaration,
    DuplicatePriority,
    PriorityOverlap,
    TaskPriority,
    UnknownIdentifier,
    UndeclaredLock,
    UnknownRoutine,
    UnknownIrqLine,
    ArityMismatch,
    Recursion,
    ReadOnlyWrite,
    InvalidUse,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub kind: DiagKind,
    pub location: Option<Location>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.location {
            Some(loc) => write!(f, "{loc}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

fn diag(kind: DiagKind, location: Option<Location>, message: String) -> Diagnostic {
    Diagnostic {
        kind,
        location,
        message,
    }
}

/// What a bare identifier refers to inside a routine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symbol {
    Local,
    Global,
    Register,
    Lock,
}

pub fn resolve(p: &Program, r: &Routine, name: &str) -> Option<Symbol> {
    if r.declares_local(name) {
        Some(Symbol::Local)
    } else if p.global(name).is_some() {
        Some(Symbol::Global)
    } else if p.register(name).is_some() {
        Some(Symbol::Register)
    } else if p.is_lock(name) {
        Some(Symbol::Lock)
    } else {
        None
    }
}

/// Every violated program invariant, in a deterministic order.
pub fn diagnostics(p: &Program) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    declarations(p, &mut out);
    priorities(p, &mut out);
    for r in &p.routines {
        if r.is_task() && !r.params.is_empty() {
            out.push(diag(
                DiagKind::InvalidUse,
                None,
                format!("task `{}` cannot take parameters", r.name),
            ));
        }
        let mut seen = BTreeSet::new();
        for name in r.params.iter().chain(&r.locals) {
            if !seen.insert(name.as_str()) {
                out.push(diag(
                    DiagKind::DuplicateDeclaration,
                    None,
                    format!("`{name}` declared twice in `{}`", r.name),
                ));
            }
        }
        walk_stmts(&r.body, &mut |s| statement(p, r, s, &mut out));
    }
    recursion(p, &mut out);
    out
}

fn declarations(p: &Program, out: &mut Vec<Diagnostic>) {
    let mut routines = BTreeSet::new();
    for r in &p.routines {
        if !routines.insert(r.name.as_str()) {
            out.push(diag(
                DiagKind::DuplicateRoutine,
                None,
                format!("routine `{}` declared twice", r.name),
            ));
        }
    }
    let mut lines = BTreeSet::new();
    for r in &p.routines {
        if let Some(line) = r.irq_line() {
            if !lines.insert(line) {
                out.push(diag(
                    DiagKind::DuplicateIrqLine,
                    None,
                    format!("interrupt line {line} has two handlers"),
                ));
            }
        }
    }
    let mut names = BTreeSet::new();
    let all = p
        .globals
        .iter()
        .map(|g| &g.name)
        .chain(p.registers.iter().map(|r| &r.name))
        .chain(&p.locks)
        .chain(p.routines.iter().map(|r| &r.name));
    for name in all {
        if !names.insert(name.as_str()) && !routines.contains(name.as_str()) {
            out.push(diag(
                DiagKind::DuplicateDeclaration,
                None,
                format!("`{name}` declared twice"),
            ));
        }
    }
    for r in &p.registers {
        if r.width == 0 || r.width > 64 {
            out.push(diag(
                DiagKind::InvalidUse,
                None,
                format!("register `{}` has width {}", r.name, r.width),
            ));
        }
    }
}

fn priorities(p: &Program, out: &mut Vec<Diagnostic>) {
    let task_prios: BTreeSet<u32> = p.tasks().filter_map(|t| t.priority).collect();
    if task_prios.len() > 1 {
        out.push(diag(
            DiagKind::TaskPriority,
            None,
            "all tasks must share one priority".to_string(),
        ));
    }
    let lowest_task = task_prios.iter().next().copied();
    let mut isr_prios: BTreeMap<u32, &str> = BTreeMap::new();
    for isr in p.isrs() {
        let Some(prio) = isr.priority else { continue };
        if let Some(other) = isr_prios.insert(prio, &isr.name) {
            out.push(diag(
                DiagKind::DuplicatePriority,
                None,
                format!("ISRs `{other}` and `{}` share priority {prio}", isr.name),
            ));
        }
        if matches!(lowest_task, Some(t) if prio >= t) {
            out.push(diag(
                DiagKind::PriorityOverlap,
                None,
                format!(
                    "priority overlap: ISR `{}` priority {prio} is not above task priority",
                    isr.name
                ),
            ));
        }
    }
}

fn statement(p: &Program, r: &Routine, s: &Stmt, out: &mut Vec<Diagnostic>) {
    let at = || Some(s.loc.clone());
    let check_expr = |e: &Expr, out: &mut Vec<Diagnostic>| {
        e.visit_names(&mut |name, usage| match (resolve(p, r, name), usage) {
            (None, _) => out.push(diag(
                DiagKind::UnknownIdentifier,
                at(),
                format!("unknown identifier `{name}`"),
            )),
            (Some(Symbol::Register), NameUse::AddressOf | NameUse::Deref) => out.push(diag(
                DiagKind::InvalidUse,
                at(),
                format!("register `{name}` cannot be used through a pointer"),
            )),
            (Some(Symbol::Lock), NameUse::Read | NameUse::Deref) => out.push(diag(
                DiagKind::InvalidUse,
                at(),
                format!("lock `{name}` used as a value"),
            )),
            _ => {}
        });
    };
    match &s.kind {
        StmtKind::Assign { target, value } => {
            check_expr(value, out);
            let name = target.base();
            match (resolve(p, r, name), target) {
                (None, _) => out.push(diag(
                    DiagKind::UnknownIdentifier,
                    at(),
                    format!("unknown identifier `{name}`"),
                )),
                (Some(Symbol::Lock), _) => out.push(diag(
                    DiagKind::InvalidUse,
                    at(),
                    format!("cannot assign to lock `{name}`"),
                )),
                (Some(Symbol::Register), LValue::Deref(_)) => out.push(diag(
                    DiagKind::InvalidUse,
                    at(),
                    format!("register `{name}` cannot be used through a pointer"),
                )),
                (Some(Symbol::Register), LValue::Var(_)) if p.register(name).is_some_and(|reg| reg.readonly) => {
                    out.push(diag(
                        DiagKind::ReadOnlyWrite,
                        at(),
                        format!("write to read-only register `{name}`"),
                    ));
                }
                _ => {}
            }
        }
        StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => check_expr(cond, out),
        StmtKind::Output(e) => check_expr(e, out),
        StmtKind::Lock(lv) | StmtKind::Unlock(lv) => {
            let name = lv.base();
            let ok = match lv {
                LValue::Var(_) => {
                    matches!(resolve(p, r, name), Some(Symbol::Lock))
                }
                LValue::Deref(_) => {
                    matches!(resolve(p, r, name), Some(Symbol::Local | Symbol::Global))
                }
            };
            if !ok {
                out.push(diag(
                    DiagKind::UndeclaredLock,
                    at(),
                    format!("undeclared lock `{}`", super::printer::lvalue(lv)),
                ));
            }
        }
        StmtKind::IrqDisable(n) | StmtKind::IrqEnable(n) => {
            if p.isr_for_line(*n).is_none() {
                out.push(diag(
                    DiagKind::UnknownIrqLine,
                    at(),
                    format!("no ISR handles interrupt line {n}"),
                ));
            }
        }
        StmtKind::IrqDisableAll | StmtKind::IrqEnableAll => {}
        StmtKind::Call { callee, args } => {
            for a in args {
                check_expr(a, out);
            }
            match p.routine(callee) {
                Some(f) if matches!(f.kind, RoutineKind::Func) => {
                    if f.params.len() != args.len() {
                        out.push(diag(
                            DiagKind::ArityMismatch,
                            at(),
                            format!("`{callee}` takes {} arguments, {} given", f.params.len(), args.len()),
                        ));
                    }
                }
                Some(_) => out.push(diag(
                    DiagKind::InvalidUse,
                    at(),
                    format!("`{callee}` is not a function"),
                )),
                None => out.push(diag(
                    DiagKind::UnknownRoutine,
                    at(),
                    format!("unknown function `{callee}`"),
                )),
            }
        }
        StmtKind::RequestIrq { line, args } => {
            for a in args {
                check_expr(a, out);
            }
            match p.isr_for_line(*line) {
                Some(isr) => {
                    if isr.params.len() != args.len() {
                        out.push(diag(
                            DiagKind::ArityMismatch,
                            at(),
                            format!(
                                "ISR `{}` takes {} arguments, {} given",
                                isr.name,
                                isr.params.len(),
                                args.len()
                            ),
                        ));
                    }
                }
                None => out.push(diag(
                    DiagKind::UnknownIrqLine,
                    at(),
                    format!("no ISR handles interrupt line {line}"),
                )),
            }
        }
    }
}

/// Call-graph edges from each routine to the functions it calls.
pub fn call_graph(p: &Program) -> BTreeMap<&str, BTreeSet<&str>> {
    let mut g: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for r in &p.routines {
        let entry = g.entry(r.name.as_str()).or_default();
        walk_stmts(&r.body, &mut |s| {
            if let StmtKind::Call { callee, .. } = &s.kind {
                entry.insert(callee.as_str());
            }
        });
    }
    g
}

/// Name of some routine that lies on a call cycle, if any.
pub fn find_recursion(p: &Program) -> Option<String> {
    let g = call_graph(p);
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn dfs<'a>(
        n: &'a str,
        g: &BTreeMap<&'a str, BTreeSet<&'a str>>,
        marks: &mut BTreeMap<&'a str, Mark>,
    ) -> Option<&'a str> {
        match marks.get(n) {
            Some(Mark::Active) => return Some(n),
            Some(Mark::Done) => return None,
            None => {}
        }
        marks.insert(n, Mark::Active);
        for m in g.get(n).into_iter().flatten() {
            if let Some(hit) = dfs(m, g, marks) {
                return Some(hit);
            }
        }
        marks.insert(n, Mark::Done);
        None
    }
    let mut marks = BTreeMap::new();
    for n in g.keys() {
        if let Some(hit) = dfs(n, &g, &mut marks) {
            return Some(hit.to_string());
        }
    }
    None
}

fn recursion(p: &Program, out: &mut Vec<Diagnostic>) {
    if let Some(name) = find_recursion(p) {
        out.push(diag(
            DiagKind::Recursion,
            None,
            format!("recursive call cycle through `{name}`"),
        ));
    }
}
