use std::collections::BTreeSet;

use irqracer_core::detect::{analyze, AccessKind, RaceWarning};
use irqracer_core::frontend::{parse_program, Location};
use irqracer_core::vm::*;

const UART: &str = include_str!("../../../corpus/uart.idl");

fn t1() -> Input {
    [("IIR", 0x0111), ("THR", 0x0111), ("port_bugs", 0)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

fn warning(ws: &[RaceWarning], id: usize) -> &RaceWarning {
    ws.iter().find(|w| w.id == id).unwrap()
}

#[test]
fn straight_line_trace_lists_accesses_in_order() {
    let p = parse_program("global x; global y; task t prio 1 { x = 3; y = x + 1; output(y); }").unwrap();
    let tr = execute(&p, &Input::new(), &InterruptSchedule::default(), "t").unwrap();
    let dump = tr.dump(&p);
    assert_eq!(
        dump,
        "access\tt\tt:1\tW x = 3\n\
         access\tt\tt:1\tR x = 3\n\
         access\tt\tt:1\tW y = 4\n\
         access\tt\tt:1\tR y = 4\n\
         output\tt\tt:1\t4\n\
         end\t-\t-\tCompleted\n"
    );
    assert_eq!(tr.outputs, vec![4]);
}

#[test]
fn isr_enabled_clauses() {
    let src = "task t prio 9 { irq_disable(2); irq_disable_all(); }
               isr a line 1 prio 1 { }
               isr b line 2 prio 2 { }";
    let p = parse_program(src).unwrap();
    let vm = Vm::new(&p).unwrap();
    let mut m = Machine::new(&vm, &Input::new(), "t").unwrap();
    assert!(m.isr_enabled(1).unwrap() && m.isr_enabled(2).unwrap());
    m.step_base().unwrap();
    assert!(m.isr_enabled(1).unwrap());
    assert!(!m.isr_enabled(2).unwrap());
    m.step_base().unwrap();
    assert!(!m.isr_enabled(1).unwrap());
    assert_eq!(m.isr_enabled(7), Err(VmError::UnknownLine(7)));

    let mut inside = Machine::new(&vm, &Input::new(), "a").unwrap();
    assert!(!inside.isr_enabled(1).unwrap());
    assert!(inside.isr_enabled(2).unwrap());
    // Lower priority cannot preempt.
    assert!(!inside.can_fire(2).unwrap());
    inside.run_to_end().unwrap();
}

#[test]
fn uart_injection_after_line_14() {
    let p = parse_program(UART).unwrap();
    let at14 = Location::new("transmit", 6);
    assert_eq!(p.line_of(&at14), 14);
    let sched = InterruptSchedule::default().after(at14, 1);
    let tr = execute(&p, &t1(), &sched, "transmit").unwrap();
    let dump = tr.dump(&p);
    let lines: Vec<&str> = dump.lines().collect();
    let read14 = lines
        .iter()
        .position(|l| *l == "access\ttransmit\ttransmit:14\tR xmit_tail = 0")
        .unwrap();
    assert_eq!(lines[read14 + 1], "isr_entry\tirq1_handler\t-\tline 1");
    let write22 = lines
        .iter()
        .position(|l| *l == "access\tirq1_handler\tirq1_handler:22\tW xmit_tail = 1")
        .unwrap();
    assert!(write22 > read14);
    let exit = lines
        .iter()
        .position(|l| l.starts_with("isr_exit\tirq1_handler"))
        .unwrap();
    let out15 = lines
        .iter()
        .position(|l| *l == "output\ttransmit\ttransmit:15\t1")
        .unwrap();
    assert!(exit < out15);
    assert_eq!(tr.outcome, Outcome::Completed);
}

#[test]
fn uart_wn1_confirmed_and_harmful() {
    let p = parse_program(UART).unwrap();
    let sa = analyze(&p).unwrap();
    let vm = Vm::new(&p).unwrap();
    match validate_race(&vm, warning(&sa.warnings, 1), &t1()).unwrap() {
        ValidationVerdict::Confirmed { harmful, .. } => assert!(harmful),
        v => panic!("unexpected {}", v.name()),
    }
}

#[test]
fn uart_wn2_refuted_disabled() {
    let p = parse_program(UART).unwrap();
    let sa = analyze(&p).unwrap();
    let vm = Vm::new(&p).unwrap();
    let v = validate_race(&vm, warning(&sa.warnings, 2), &t1()).unwrap();
    assert!(matches!(v, ValidationVerdict::RefutedDisabled), "{}", v.name());
}

#[test]
fn uart_uncovered_warning() {
    let p = parse_program(UART).unwrap();
    let sa = analyze(&p).unwrap();
    let vm = Vm::new(&p).unwrap();
    // IIR bit 0 clear and TXEN flag clear: line 14 never runs.
    let mut input = t1();
    input.insert("IIR".into(), 0);
    let v = validate_race(&vm, warning(&sa.warnings, 1), &input).unwrap();
    assert!(matches!(v, ValidationVerdict::NotCovered), "{}", v.name());
}

#[test]
fn uart_oracle_finds_wn1_and_wn4() {
    let p = parse_program(UART).unwrap();
    let sa = analyze(&p).unwrap();
    let vm = Vm::new(&p).unwrap();
    let space = InputSpace::for_program(&p);
    assert_eq!(
        space.points.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>(),
        vec!["IIR", "THR", "port_bugs"]
    );
    let res = exhaustive_oracle(&vm, &space, 1 << 20).unwrap();
    let ids: BTreeSet<usize> = sa.warnings.iter().filter(|w| res.contains(w)).map(|w| w.id).collect();
    assert_eq!(ids, BTreeSet::from([1, 4]));
    // Static warnings cover every observed race.
    for r in res.races.keys() {
        assert!(sa.warnings.iter().any(|w| r.matches(w)), "missed {r:?}");
    }
    assert!(res.deadlocks.is_empty());
}

const TOY: &str = "global x;
task t prio 5 {
    local a;
    x = 1;
    a = x;
    output(a);
}
isr h line 1 prio 1 {
    x = 7;
}";

#[test]
fn toy_oracle_pairs() {
    let p = parse_program(TOY).unwrap();
    let vm = Vm::new(&p).unwrap();
    let res = exhaustive_oracle(&vm, &InputSpace::for_program(&p), 1).unwrap();
    let got: Vec<(u32, u32)> = res.races.keys().map(|r| (r.ei_loc.index, r.ej_loc.index)).collect();
    assert_eq!(got, vec![(1, 1), (2, 1)]);
}

#[test]
fn race_free_toy_has_empty_oracle() {
    let src = "global x;
task t prio 5 {
    local a;
    irq_disable(1);
    x = 1;
    a = x;
    irq_enable(1);
    output(a);
}
isr h line 1 prio 1 {
    x = 7;
}";
    let p = parse_program(src).unwrap();
    let vm = Vm::new(&p).unwrap();
    let res = exhaustive_oracle(&vm, &InputSpace::for_program(&p), 1).unwrap();
    assert!(res.races.is_empty());
    assert!(analyze(&p).unwrap().warnings.is_empty());
}

#[test]
fn postponed_firing_confirms_split_section() {
    let src = "global x;
task t prio 5 {
    local a;
    irq_disable(1);
    x = 1;
    irq_enable(1);
    a = x;
    output(a);
}
isr h line 1 prio 1 {
    x = 7;
}";
    let p = parse_program(src).unwrap();
    let sa = analyze(&p).unwrap();
    let vm = Vm::new(&p).unwrap();
    let wn = sa
        .warnings
        .iter()
        .find(|w| w.ei.loc.index == 2 && w.ei.access == AccessKind::Write)
        .unwrap();
    match validate_race(&vm, wn, &Input::new()).unwrap() {
        ValidationVerdict::Confirmed { harmful, trace } => {
            assert!(harmful);
            assert_eq!(trace.outputs, vec![7]);
        }
        v => panic!("unexpected {}", v.name()),
    }
}

#[test]
fn lock_held_by_preempted_task_deadlocks() {
    let src = "global x; lock l;
task t prio 5 { lock(l); x = 1; unlock(l); }
isr h line 1 prio 1 { lock(l); x = 2; unlock(l); }";
    let p = parse_program(src).unwrap();
    let sa = analyze(&p).unwrap();
    let vm = Vm::new(&p).unwrap();
    let wn = sa.warnings.iter().find(|w| w.ei.ctx == "t").unwrap();
    let v = validate_race(&vm, wn, &Input::new()).unwrap();
    match v {
        ValidationVerdict::Deadlock { trace } => {
            assert!(trace.dump(&p).contains("block\th\th:3\tl"));
        }
        v => panic!("unexpected {}", v.name()),
    }
    let res = exhaustive_oracle(&vm, &InputSpace::for_program(&p), 1).unwrap();
    assert!(!res.deadlocks.is_empty());
}

#[test]
fn pointer_passed_through_request_irq() {
    let src = "task t prio 5 {
    local buf, v;
    request_irq(1, &buf);
    buf = 4;
    v = buf;
    output(v);
}
isr h(dev) line 1 prio 1 {
    *dev = 9;
}";
    let p = parse_program(src).unwrap();
    let sa = analyze(&p).unwrap();
    let vm = Vm::new(&p).unwrap();
    let res = exhaustive_oracle(&vm, &InputSpace::for_program(&p), 1).unwrap();
    assert!(res.races.keys().any(|r| r.resource == "t::buf"));
    for r in res.races.keys() {
        assert!(sa.warnings.iter().any(|w| r.matches(w)), "missed {r:?}");
    }
}

#[test]
fn step_limit_stops_infinite_loops() {
    let p = parse_program("global x; task t prio 1 { while (1) { x = x + 1; } }").unwrap();
    let vm = Vm::new(&p).unwrap().with_step_limit(1000);
    let err = execute_on(&vm, &Input::new(), &InterruptSchedule::default(), "t").unwrap_err();
    assert_eq!(err, VmError::StepLimitExceeded(1000));
}

#[test]
fn irqctl_register_masks_lines() {
    let src = "register CTL width 8 irqctl;
task t prio 9 { CTL = 1; }
isr a line 1 prio 1 { }
isr b line 2 prio 2 { }";
    let p = parse_program(src).unwrap();
    let vm = Vm::new(&p).unwrap();
    let mut m = Machine::new(&vm, &Input::new(), "t").unwrap();
    m.step_base().unwrap();
    assert!(m.isr_enabled(1).unwrap());
    assert!(!m.isr_enabled(2).unwrap());
}

#[test]
fn execution_is_deterministic() {
    let p = parse_program(UART).unwrap();
    let sched = InterruptSchedule::default().after_step(3, 1).after_step(5, 2);
    let a = execute(&p, &t1(), &sched, "transmit").unwrap();
    let b = execute(&p, &t1(), &sched, "transmit").unwrap();
    assert_eq!(a, b);
}
