use std::collections::{BTreeMap, BTreeSet};

use super::{Cell, Input, TraceEvent, Value, Vm, VmError};
use crate::detect::AccessKind;
use crate::frontend::{Expr, LValue, Location};
use crate::graphs::{IrqOp, NodeId, NodeKind};
use crate::sem;

#[derive(Debug, Clone)]
struct Activation {
    id: u32,
    /// Index into `Vm::graphs`.
    graph: usize,
    node: NodeId,
    line: Option<u32>,
    priority: u32,
}

/// Result of executing one graph node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Exec {
    /// A statement ran at stack depth `depth`.
    Instr { depth: usize, loc: Location },
    /// Bookkeeping node (entry, call return) with no statement.
    Pass,
    /// The top activation finished and was popped.
    Popped { depth: usize },
    /// The top activation tried to take a held lock.
    Blocked { lock: String },
    /// Nothing left to run.
    Idle,
}

/// What a fired ISR did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fired {
    /// Lock the ISR blocked on.
    pub blocked: Option<String>,
    /// Statements executed while the ISR ran, nested ISRs included.
    pub executed: Vec<Location>,
}

/// Concrete machine state plus the recorded trace.
#[derive(Debug, Clone)]
pub struct Machine<'v> {
    vm: &'v Vm,
    memory: BTreeMap<Cell, Value>,
    global_enabled: bool,
    masked: BTreeSet<u32>,
    pin_raised: BTreeSet<u32>,
    locks: BTreeMap<String, u32>,
    stack: Vec<Activation>,
    isr_args: BTreeMap<u32, Vec<Value>>,
    next_id: u32,
    steps: u64,
    pub events: Vec<TraceEvent>,
    pub outputs: Vec<u64>,
}

impl<'v> Machine<'v> {
    /// Fresh state with inputs loaded and `entry` ready to run.
    pub fn new(vm: &'v Vm, input: &Input, entry: &str) -> Result<Self, VmError> {
        let p = &vm.program;
        let mut memory = BTreeMap::new();
        for g in &p.globals {
            let v = match (g.input, input.get(&g.name)) {
                (true, Some(&v)) => v,
                _ => g.init,
            };
            memory.insert(Cell::Global(g.name.clone()), Value::Int(sem::mask(v, p.width)));
        }
        for r in &p.registers {
            let v = input.get(&r.name).copied().unwrap_or(0);
            memory.insert(Cell::Register(r.name.clone()), Value::Int(sem::mask(v, r.width)));
        }
        let mut m = Machine {
            vm,
            memory,
            global_enabled: true,
            masked: BTreeSet::new(),
            pin_raised: BTreeSet::new(),
            locks: BTreeMap::new(),
            stack: Vec::new(),
            isr_args: BTreeMap::new(),
            next_id: 0,
            steps: 0,
            events: Vec::new(),
            outputs: Vec::new(),
        };
        let graph = vm
            .graph_index(entry)
            .ok_or_else(|| VmError::UnknownRoutine(entry.to_string()))?;
        m.push(graph);
        Ok(m)
    }

    fn push(&mut self, graph: usize) {
        let g = &self.vm.graphs[graph];
        let line = self.vm.program.routine(&g.ctx).and_then(|r| r.irq_line());
        if let Some(l) = line {
            self.pin_raised.insert(l);
            if !self.stack.is_empty() {
                self.events.push(TraceEvent::IsrEntry {
                    isr: g.ctx.clone(),
                    line: l,
                });
            }
        }
        self.stack.push(Activation {
            id: self.next_id,
            graph,
            node: g.entry,
            line,
            priority: g.priority,
        });
        self.next_id += 1;
    }

    pub fn depth(&self) -> usize {
        self.stack.len()
    }

    pub fn is_finished(&self) -> bool {
        self.stack.is_empty()
    }

    /// Global bit set, line unmasked and pin low.
    pub fn isr_enabled(&self, line: u32) -> Result<bool, VmError> {
        if self.vm.program.isr_for_line(line).is_none() {
            return Err(VmError::UnknownLine(line));
        }
        Ok(self.global_enabled && !self.masked.contains(&line) && !self.pin_raised.contains(&line))
    }

    /// Enabled and of strictly higher priority than the running context.
    pub fn can_fire(&self, line: u32) -> Result<bool, VmError> {
        let Some(isr) = self.vm.program.isr_for_line(line) else {
            return Err(VmError::UnknownLine(line));
        };
        let prio = isr.priority.unwrap_or(u32::MAX);
        let above = self.stack.last().is_none_or(|a| prio < a.priority);
        Ok(above && self.isr_enabled(line)?)
    }

    pub(crate) fn priority_of_line(&self, line: u32) -> u32 {
        self.vm
            .program
            .isr_for_line(line)
            .and_then(|r| r.priority)
            .unwrap_or(u32::MAX)
    }

    /// Starts the ISR on `line` on top of the current stack.
    pub fn raise(&mut self, line: u32) -> Result<(), VmError> {
        let isr = self.vm.program.isr_for_line(line).ok_or(VmError::UnknownLine(line))?;
        let graph = self
            .vm
            .graph_index(&isr.name)
            .ok_or_else(|| VmError::UnknownRoutine(isr.name.clone()))?;
        self.push(graph);
        let params = self
            .vm
            .program
            .routine(&isr.name)
            .map(|r| r.params.clone())
            .unwrap_or_default();
        let args = self.isr_args.get(&line).cloned().unwrap_or_default();
        let act = self.stack.last().expect("just pushed").id;
        for (i, param) in params.iter().enumerate() {
            let v = args.get(i).cloned().unwrap_or(Value::Int(0));
            self.memory.insert(local_cell(act, 0, &isr.name, param), v);
        }
        Ok(())
    }

    /// Runs the base context until it completes one statement.
    pub fn step_base(&mut self) -> Result<Exec, VmError> {
        loop {
            match self.exec()? {
                e @ Exec::Instr { depth: 1, .. } => return Ok(e),
                e @ (Exec::Blocked { .. } | Exec::Idle) => return Ok(e),
                Exec::Popped { depth: 1 } => return Ok(Exec::Idle),
                _ => {}
            }
        }
    }

    /// Runs the ISR on `line` to completion.
    pub fn fire(&mut self, line: u32) -> Result<Fired, VmError> {
        let base = self.depth();
        self.raise(line)?;
        let mut executed = Vec::new();
        loop {
            match self.exec()? {
                Exec::Instr { loc, .. } => executed.push(loc),
                Exec::Blocked { lock } => {
                    return Ok(Fired {
                        blocked: Some(lock),
                        executed,
                    })
                }
                Exec::Popped { depth } if depth == base + 1 => break,
                Exec::Idle => break,
                _ => {}
            }
        }
        Ok(Fired {
            blocked: None,
            executed,
        })
    }

    /// Runs the base context to completion without interruption.
    pub fn run_to_end(&mut self) -> Result<Option<String>, VmError> {
        loop {
            match self.step_base()? {
                Exec::Blocked { lock } => return Ok(Some(lock)),
                Exec::Idle => return Ok(None),
                _ => {}
            }
        }
    }

    /// Executes the next node of the top activation.
    pub fn exec(&mut self) -> Result<Exec, VmError> {
        let Some(top) = self.stack.last().cloned() else {
            return Ok(Exec::Idle);
        };
        self.steps += 1;
        if self.steps > self.vm.step_limit {
            return Err(VmError::StepLimitExceeded(self.vm.step_limit));
        }
        let g = &self.vm.graphs[top.graph];
        let node = &g.nodes[top.node];
        let ctx = g.ctx.clone();
        let frame = node.frame;
        let routine = g.frames[frame as usize].clone();
        let at = Site {
            ctx: ctx.clone(),
            loc: node.loc.clone(),
            act: top.id,
            frame,
            routine,
        };
        let mut next = g.succ[top.node].first().copied();
        match node.kind.clone() {
            NodeKind::Entry | NodeKind::CallReturn { .. } => {}
            NodeKind::Exit => {
                self.stack.pop();
                if let Some(l) = top.line {
                    self.pin_raised.remove(&l);
                    if !self.stack.is_empty() {
                        self.events.push(TraceEvent::IsrExit { isr: ctx, line: l });
                    }
                }
                return Ok(Exec::Popped {
                    depth: self.stack.len() + 1,
                });
            }
            NodeKind::Assign { target, value } => {
                let v = self.eval(&at, &value);
                self.store(&at, &target, v);
            }
            NodeKind::Output(e) => {
                let v = self.eval(&at, &e).as_int();
                self.outputs.push(v);
                self.events.push(TraceEvent::Output {
                    ctx,
                    loc: at.loc.clone(),
                    value: v,
                });
            }
            NodeKind::Lock(lv) => {
                if let Some(l) = self.lock_name(&at, &lv) {
                    if self.locks.contains_key(&l) {
                        self.events.push(TraceEvent::Block {
                            ctx,
                            loc: at.loc.clone(),
                            lock: l.clone(),
                        });
                        return Ok(Exec::Blocked { lock: l });
                    }
                    self.locks.insert(l, top.id);
                }
            }
            NodeKind::Unlock(lv) => {
                if let Some(l) = self.lock_name(&at, &lv) {
                    self.locks.remove(&l);
                }
            }
            NodeKind::Irq(op) => {
                match op {
                    IrqOp::Disable(k) => {
                        self.masked.insert(k);
                    }
                    IrqOp::Enable(k) => {
                        self.masked.remove(&k);
                    }
                    IrqOp::DisableAll => self.global_enabled = false,
                    IrqOp::EnableAll => self.global_enabled = true,
                }
                self.events.push(TraceEvent::Irq {
                    ctx,
                    loc: at.loc.clone(),
                    op,
                });
            }
            NodeKind::Branch(cond) => {
                let taken = self.eval(&at, &cond).as_int() != 0;
                next = if taken {
                    g.succ[top.node].first().copied()
                } else {
                    g.succ[top.node].get(1).copied()
                };
            }
            NodeKind::CallEnter {
                callee,
                args,
                params,
                callee_frame,
            } => {
                let vals: Vec<Value> = args.iter().map(|a| self.eval(&at, a)).collect();
                self.memory.retain(
                    |c, _| !matches!(c, Cell::Local { act, frame, .. } if *act == top.id && *frame == callee_frame),
                );
                for (param, v) in params.iter().zip(vals) {
                    self.memory.insert(local_cell(top.id, callee_frame, &callee, param), v);
                }
            }
            NodeKind::RequestIrq { line, args } => {
                let vals: Vec<Value> = args.iter().map(|a| self.eval(&at, a)).collect();
                self.isr_args.insert(line, vals);
            }
        }
        let next = next.expect("non-exit node has a successor");
        self.stack.last_mut().expect("top exists").node = next;
        Ok(match at.loc {
            Some(loc) => Exec::Instr {
                depth: self.stack.len(),
                loc,
            },
            None => Exec::Pass,
        })
    }

    fn resolve(&self, at: &Site, name: &str) -> Cell {
        let r = self.vm.program.routine(&at.routine);
        if r.is_some_and(|r| r.declares_local(name)) {
            return local_cell(at.act, at.frame, &at.routine, name);
        }
        if self.vm.program.register(name).is_some() {
            Cell::Register(name.to_string())
        } else {
            Cell::Global(name.to_string())
        }
    }

    fn observed(&self, cell: &Cell) -> bool {
        match cell {
            Cell::Global(n) => !self.vm.program.is_lock(n),
            Cell::Register(_) => true,
            Cell::Local { qname, .. } => self.vm.taken.contains(qname),
        }
    }

    fn read(&mut self, at: &Site, cell: Cell, by_name: bool) -> Value {
        let v = self.memory.get(&cell).cloned().unwrap_or(Value::Int(0));
        if !by_name || self.observed(&cell) {
            self.events.push(TraceEvent::Access {
                ctx: at.ctx.clone(),
                loc: at.loc.clone(),
                resource: cell.resource(),
                cell,
                kind: AccessKind::Read,
                value: v.as_int(),
            });
        }
        v
    }

    fn write(&mut self, at: &Site, cell: Cell, v: Value, by_name: bool) {
        let v = match (&cell, v) {
            (Cell::Register(n), v) => {
                let w = self.vm.program.register(n).map_or(self.vm.program.width, |r| r.width);
                Value::Int(sem::mask(v.as_int(), w))
            }
            (_, Value::Int(x)) => Value::Int(sem::mask(x, self.vm.program.width)),
            (_, ptr) => ptr,
        };
        if let Cell::Register(n) = &cell {
            if self.vm.program.register(n).is_some_and(|r| r.irqctl) {
                let bits = v.as_int();
                for line in self.vm.program.irq_lines() {
                    let on = (1..=64).contains(&line) && bits >> (line - 1) & 1 == 1;
                    if on {
                        self.masked.remove(&line);
                    } else {
                        self.masked.insert(line);
                    }
                }
            }
        }
        if !by_name || self.observed(&cell) {
            self.events.push(TraceEvent::Access {
                ctx: at.ctx.clone(),
                loc: at.loc.clone(),
                resource: cell.resource(),
                cell: cell.clone(),
                kind: AccessKind::Write,
                value: v.as_int(),
            });
        }
        self.memory.insert(cell, v);
    }

    fn eval(&mut self, at: &Site, e: &Expr) -> Value {
        let w = self.vm.program.width;
        match e {
            Expr::Int(v) => Value::Int(sem::mask(*v, w)),
            Expr::Var(n) => {
                let c = self.resolve(at, n);
                self.read(at, c, true)
            }
            Expr::AddrOf(n) => Value::Ptr(self.resolve(at, n)),
            Expr::Deref(n) => {
                let c = self.resolve(at, n);
                match self.read(at, c, true) {
                    Value::Ptr(target) => self.read(at, target, false),
                    Value::Int(_) => Value::Int(0),
                }
            }
            Expr::Unary(op, a) => {
                let a = self.eval(at, a).as_int();
                Value::Int(sem::unary(*op, a, w))
            }
            Expr::Binary(op, a, b) => {
                let a = self.eval(at, a).as_int();
                let b = self.eval(at, b).as_int();
                Value::Int(sem::binary(*op, a, b, w))
            }
        }
    }

    fn store(&mut self, at: &Site, target: &LValue, v: Value) {
        match target {
            LValue::Var(n) => {
                let c = self.resolve(at, n);
                self.write(at, c, v, true);
            }
            LValue::Deref(n) => {
                let c = self.resolve(at, n);
                if let Value::Ptr(cell) = self.read(at, c, true) {
                    self.write(at, cell, v, false);
                }
            }
        }
    }

    fn lock_name(&mut self, at: &Site, lv: &LValue) -> Option<String> {
        match lv {
            LValue::Var(n) => Some(n.clone()),
            LValue::Deref(n) => {
                let c = self.resolve(at, n);
                match self.read(at, c, true) {
                    Value::Ptr(Cell::Global(l)) if self.vm.program.is_lock(&l) => Some(l),
                    _ => None,
                }
            }
        }
    }
}

struct Site {
    ctx: String,
    loc: Option<Location>,
    act: u32,
    frame: u32,
    routine: String,
}

fn local_cell(act: u32, frame: u32, routine: &str, name: &str) -> Cell {
    Cell::Local {
        act,
        frame,
        qname: format!("{routine}::{name}"),
    }
}
