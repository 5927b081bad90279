use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::solver::{SolveResult, Solver};
use super::term::{Constraint, Term};
use crate::detect::RaceWarning;
use crate::frontend::{Expr, LValue, Program};
use crate::graphs::{Cfg, Iccfg, NodeId, NodeKind, UNREACHABLE};
use crate::sem;
use crate::vm::{identify_input_points, Cell, Input};

#[derive(Debug, Clone)]
pub struct Budget {
    pub timeout: Duration,
    /// Largest loop iteration bound tried.
    pub l_max: u32,
    pub seed: u64,
    /// Defer feasibility checks of multi-variable branch conditions until the
    /// target is reached.
    pub solver_skip: bool,
    /// Cap on explored states per loop bound.
    pub max_states: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            timeout: Duration::from_secs(600),
            l_max: 1000,
            seed: 0,
            solver_skip: true,
            max_states: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InconclusiveReason {
    Timeout,
    SolverLimit,
    ExternalUnknown,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SymExecResult {
    Reachable(Input),
    Infeasible,
    Inconclusive(InconclusiveReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Phase {
    /// Ordered so that states past the first event are preferred.
    BetweenEvents,
    BeforeFirstEvent,
}

#[derive(Debug, Clone)]
enum SVal {
    Int(Term),
    Ptr(Cell),
}

impl SVal {
    fn term(&self) -> Term {
        match self {
            SVal::Int(t) => t.clone(),
            SVal::Ptr(_) => Term::Const(0),
        }
    }
}

#[derive(Debug, Clone)]
struct SymState {
    node: NodeId,
    phase: Phase,
    mem: BTreeMap<Cell, SVal>,
    pc: Vec<Constraint>,
    visits: BTreeMap<NodeId, u32>,
    isr_args: BTreeMap<u32, Vec<SVal>>,
}

enum RunEnd {
    Reached(Input),
    Exhausted { cut: bool, unknown: bool },
    OutOfBudget,
}

struct Explorer<'a> {
    p: &'a Program,
    g: &'a Iccfg,
    line: u32,
    solver: Solver,
    seed_input: Input,
    dist_ei: Vec<u32>,
    dist_ej: Vec<u32>,
    weight: Vec<u32>,
    headers: Vec<bool>,
    budget: &'a Budget,
    started: Instant,
}

/// Searches the joined graph for inputs that reach `wn.ei` and then, in the
/// injected ISR, `wn.ej`. Loop bounds double from 2 up to `l_max`.
pub fn guided_explore(p: &Program, iccfg: &Iccfg, wn: &RaceWarning, budget: &Budget) -> SymExecResult {
    let Some(line) = p.routine(&wn.ej.ctx).and_then(|r| r.irq_line()) else {
        return SymExecResult::Infeasible;
    };
    let points = identify_input_points(p);
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let seed_input: Input = points
        .iter()
        .map(|ip| (ip.name.clone(), rng.gen::<u64>() & sem::max_value(ip.width)))
        .collect();
    let n = iccfg.succ.len();
    let mut dist_ei = vec![UNREACHABLE; n];
    for (i, d) in iccfg.distances_to_ei().into_iter().enumerate() {
        dist_ei[i] = d;
    }
    let targets: Vec<NodeId> = iccfg.ei_nodes.iter().chain(&iccfg.ej_nodes).copied().collect();
    let ex = Explorer {
        p,
        g: iccfg,
        line,
        solver: Solver::new(p.width, points, budget.seed),
        seed_input,
        dist_ei,
        dist_ej: iccfg.distances_to_ej(),
        weight: reachable_counts(&iccfg.succ, &targets),
        headers: loop_headers(iccfg),
        budget,
        started: Instant::now(),
    };
    let mut bound = 2.min(budget.l_max.max(1));
    loop {
        match ex.run(bound) {
            RunEnd::Reached(t) => return SymExecResult::Reachable(t),
            RunEnd::OutOfBudget => return SymExecResult::Inconclusive(InconclusiveReason::Timeout),
            RunEnd::Exhausted { cut, unknown } => {
                if cut && bound < budget.l_max {
                    bound = (bound * 2).min(budget.l_max);
                } else if unknown {
                    return SymExecResult::Inconclusive(InconclusiveReason::SolverLimit);
                } else {
                    return SymExecResult::Infeasible;
                }
            }
        }
    }
}

/// Per node, how many target nodes are reachable from it.
fn reachable_counts(succ: &[Vec<NodeId>], targets: &[NodeId]) -> Vec<u32> {
    (0..succ.len())
        .map(|s| {
            let mut seen = vec![false; succ.len()];
            let mut q = VecDeque::from([s]);
            seen[s] = true;
            let mut count = 0;
            while let Some(n) = q.pop_front() {
                if targets.contains(&n) {
                    count += 1;
                }
                for &m in &succ[n] {
                    if !seen[m] {
                        seen[m] = true;
                        q.push_back(m);
                    }
                }
            }
            count
        })
        .collect()
}

/// Targets of back edges, in combined ids. Graphs are numbered in reverse
/// post-order, so a back edge never increases the id.
fn loop_headers(g: &Iccfg) -> Vec<bool> {
    let mut h = vec![false; g.succ.len()];
    for (cfg, off) in [(&g.gi, 0), (&g.gj, g.offset)] {
        for (n, ss) in cfg.succ.iter().enumerate() {
            for &m in ss {
                if m <= n {
                    h[m + off] = true;
                }
            }
        }
    }
    h
}

impl Explorer<'_> {
    fn graph_of(&self, n: NodeId) -> (&Cfg, usize, u32) {
        if n < self.g.offset {
            (&self.g.gi, 0, 0)
        } else {
            (&self.g.gj, self.g.offset, 1)
        }
    }

    fn initial(&self) -> SymState {
        let p = self.p;
        let mut mem = BTreeMap::new();
        let inputs: Vec<String> = self.solver.points.iter().map(|ip| ip.name.clone()).collect();
        for g in &p.globals {
            let v = if g.input {
                Term::Var(g.name.clone(), p.width)
            } else {
                Term::Const(sem::mask(g.init, p.width))
            };
            mem.insert(Cell::Global(g.name.clone()), SVal::Int(v));
        }
        for r in &p.registers {
            let v = if inputs.contains(&r.name) {
                Term::Var(r.name.clone(), r.width)
            } else {
                Term::Const(0)
            };
            mem.insert(Cell::Register(r.name.clone()), SVal::Int(v));
        }
        SymState {
            node: self.g.gi.entry,
            phase: Phase::BeforeFirstEvent,
            mem,
            pc: Vec::new(),
            visits: BTreeMap::new(),
            isr_args: BTreeMap::new(),
        }
    }

    fn distance(&self, s: &SymState) -> u32 {
        match s.phase {
            Phase::BeforeFirstEvent => self.dist_ei[s.node],
            Phase::BetweenEvents => self.dist_ej[s.node],
        }
    }

    fn run(&self, bound: u32) -> RunEnd {
        let mut rng = ChaCha8Rng::seed_from_u64(self.budget.seed.wrapping_add(u64::from(bound)));
        let mut heap = BinaryHeap::new();
        let mut states: Vec<Option<SymState>> = Vec::new();
        let mut cut = false;
        let mut unknown = false;
        let mut explored = 0usize;
        let push = |s: SymState, heap: &mut BinaryHeap<_>, states: &mut Vec<Option<SymState>>, rng: &mut ChaCha8Rng| {
            let d = self.distance(&s);
            if d == UNREACHABLE {
                return;
            }
            let key = (s.phase, d, Reverse(self.weight[s.node]), rng.gen::<u32>(), states.len());
            states.push(Some(s));
            heap.push(Reverse(key));
        };
        push(self.initial(), &mut heap, &mut states, &mut rng);
        while let Some(Reverse(key)) = heap.pop() {
            explored += 1;
            if explored > self.budget.max_states || self.started.elapsed() > self.budget.timeout {
                return RunEnd::OutOfBudget;
            }
            let s = states[key.4].take().expect("state queued once");
            if s.phase == Phase::BetweenEvents && self.g.ej_nodes.contains(&s.node) {
                match self.solver.solve(&s.pc, Some(&self.seed_input)) {
                    SolveResult::Sat(t) => return RunEnd::Reached(t),
                    SolveResult::Unsat => continue,
                    SolveResult::Unknown => {
                        unknown = true;
                        continue;
                    }
                }
            }
            if self.headers[s.node] {
                let c = s.visits.get(&s.node).copied().unwrap_or(0);
                if c > bound {
                    cut = true;
                    continue;
                }
            }
            for next in self.step(s) {
                let next = match next {
                    Step::State(st) => st,
                    Step::Check(st) => match self.solver.solve(&st.pc, Some(&self.seed_input)) {
                        SolveResult::Unsat => continue,
                        SolveResult::Unknown => {
                            unknown = true;
                            st
                        }
                        SolveResult::Sat(_) => st,
                    },
                };
                push(next, &mut heap, &mut states, &mut rng);
            }
        }
        RunEnd::Exhausted { cut, unknown }
    }

    fn step(&self, mut s: SymState) -> Vec<Step> {
        if self.headers[s.node] {
            *s.visits.entry(s.node).or_default() += 1;
        }
        let (cfg, off, act) = self.graph_of(s.node);
        let local = s.node - off;
        let node = &cfg.nodes[local];
        let frame = node.frame;
        let routine = cfg.frames[frame as usize].clone();
        let at = (act, frame, routine.as_str());
        let first = cfg.succ[local].first().map(|&m| m + off);
        let mut out = Vec::new();
        match &node.kind {
            NodeKind::Exit => return out,
            NodeKind::Entry
            | NodeKind::CallReturn { .. }
            | NodeKind::Lock(_)
            | NodeKind::Unlock(_)
            | NodeKind::Irq(_)
            | NodeKind::Output(_) => {}
            NodeKind::Assign { target, value } => {
                let v = self.eval(&s, at, value);
                self.store(&mut s, at, target, v);
            }
            NodeKind::CallEnter {
                callee,
                args,
                params,
                callee_frame,
            } => {
                let vals: Vec<SVal> = args.iter().map(|a| self.eval(&s, at, a)).collect();
                s.mem.retain(
                    |c, _| !matches!(c, Cell::Local { act: a, frame, .. } if *a == act && frame == callee_frame),
                );
                for (param, v) in params.iter().zip(vals) {
                    s.mem.insert(local_cell(act, *callee_frame, callee, param), v);
                }
            }
            NodeKind::RequestIrq { line, args } => {
                let vals: Vec<SVal> = args.iter().map(|a| self.eval(&s, at, a)).collect();
                s.isr_args.insert(*line, vals);
            }
            NodeKind::Branch(cond) => {
                let t = self.eval(&s, at, cond).term();
                let (on_true, on_false) = (cfg.succ[local][0] + off, cfg.succ[local][1] + off);
                if let Some(v) = t.as_const() {
                    s.node = if v != 0 { on_true } else { on_false };
                    out.push(Step::State(s));
                    return self.after_event(out, local, off);
                }
                let mut vars = std::collections::BTreeSet::new();
                t.vars(&mut vars);
                let check = !self.budget.solver_skip || vars.len() <= 1;
                for (target, holds) in [(on_true, true), (on_false, false)] {
                    let mut c = s.clone();
                    c.node = target;
                    c.pc.push(Constraint::new(t.clone(), holds));
                    out.push(if check { Step::Check(c) } else { Step::State(c) });
                }
                return self.after_event(out, local, off);
            }
        }
        s.node = first.expect("non-exit node has a successor");
        out.push(Step::State(s));
        self.after_event(out, local, off)
    }

    /// After executing a copy of the first event, also fork a state that
    /// switches into the injected ISR.
    fn after_event(&self, mut out: Vec<Step>, local: NodeId, off: usize) -> Vec<Step> {
        if off != 0 || !self.g.ei_nodes.contains(&local) {
            return out;
        }
        let mut extra = Vec::new();
        for st in &out {
            let (Step::State(s) | Step::Check(s)) = st;
            if s.phase != Phase::BeforeFirstEvent {
                continue;
            }
            let mut sw = s.clone();
            sw.phase = Phase::BetweenEvents;
            sw.node = self.g.gj.entry + self.g.offset;
            sw.visits.retain(|&n, _| n < self.g.offset);
            let isr = &self.g.gj.ctx;
            let params = self.p.routine(isr).map(|r| r.params.clone()).unwrap_or_default();
            let args = sw.isr_args.get(&self.line).cloned().unwrap_or_default();
            for (i, param) in params.iter().enumerate() {
                let v = args.get(i).cloned().unwrap_or(SVal::Int(Term::Const(0)));
                sw.mem.insert(local_cell(1, 0, isr, param), v);
            }
            extra.push(match st {
                Step::State(_) => Step::State(sw),
                Step::Check(_) => Step::Check(sw),
            });
        }
        out.extend(extra);
        out
    }

    fn resolve(&self, at: (u32, u32, &str), name: &str) -> Cell {
        let (act, frame, routine) = at;
        if self.p.routine(routine).is_some_and(|r| r.declares_local(name)) {
            local_cell(act, frame, routine, name)
        } else if self.p.register(name).is_some() {
            Cell::Register(name.to_string())
        } else {
            Cell::Global(name.to_string())
        }
    }

    fn read(&self, s: &SymState, c: &Cell) -> SVal {
        s.mem.get(c).cloned().unwrap_or(SVal::Int(Term::Const(0)))
    }

    fn eval(&self, s: &SymState, at: (u32, u32, &str), e: &Expr) -> SVal {
        let w = self.p.width;
        match e {
            Expr::Int(v) => SVal::Int(Term::Const(sem::mask(*v, w))),
            Expr::Var(n) => self.read(s, &self.resolve(at, n)),
            Expr::AddrOf(n) => SVal::Ptr(self.resolve(at, n)),
            Expr::Deref(n) => match self.read(s, &self.resolve(at, n)) {
                SVal::Ptr(c) => self.read(s, &c),
                SVal::Int(_) => SVal::Int(Term::Const(0)),
            },
            Expr::Unary(op, a) => SVal::Int(Term::un(*op, self.eval(s, at, a).term(), w)),
            Expr::Binary(op, a, b) => {
                let a = self.eval(s, at, a).term();
                let b = self.eval(s, at, b).term();
                SVal::Int(Term::bin(*op, a, b, w))
            }
        }
    }

    fn write(&self, s: &mut SymState, c: Cell, v: SVal) {
        let w = match &c {
            Cell::Register(n) => self.p.register(n).map_or(self.p.width, |r| r.width),
            _ => self.p.width,
        };
        let v = match (v, &c) {
            (SVal::Int(t), _) => SVal::Int(Term::masked(t, w, self.p.width)),
            (SVal::Ptr(_), Cell::Register(_)) => SVal::Int(Term::Const(0)),
            (ptr, _) => ptr,
        };
        s.mem.insert(c, v);
    }

    fn store(&self, s: &mut SymState, at: (u32, u32, &str), target: &LValue, v: SVal) {
        match target {
            LValue::Var(n) => {
                let c = self.resolve(at, n);
                self.write(s, c, v);
            }
            LValue::Deref(n) => {
                if let SVal::Ptr(c) = self.read(s, &self.resolve(at, n)) {
                    self.write(s, c, v);
                }
            }
        }
    }
}

enum Step {
    State(SymState),
    /// Needs a feasibility check before it is queued.
    Check(SymState),
}

fn local_cell(act: u32, frame: u32, routine: &str, name: &str) -> Cell {
    Cell::Local {
        act,
        frame,
        qname: format!("{routine}::{name}"),
    }
}
