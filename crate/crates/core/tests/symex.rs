use std::collections::BTreeMap;
use std::time::Duration;

use irqracer_core::detect::{analyze, RaceWarning};
use irqracer_core::frontend::{parse_program, BinOp, Program};
use irqracer_core::symex::*;
use irqracer_core::vm::{covers_in_order, Input, Vm};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const UART: &str = include_str!("../../../corpus/uart.idl");

fn budget() -> Budget {
    Budget {
        timeout: Duration::from_secs(60),
        ..Budget::default()
    }
}

fn explore(p: &Program, wn: &RaceWarning, b: &Budget) -> SymExecResult {
    let g = iccfg_for(p, wn).unwrap();
    guided_explore(p, &g, wn, b)
}

fn names(p: &Program) -> Vec<String> {
    identify_input_points(p).into_iter().map(|ip| ip.name).collect()
}

#[test]
fn input_points() {
    assert!(names(&parse_program("global x; task t prio 1 { x = 1; }").unwrap()).is_empty());
    assert_eq!(names(&parse_program(UART).unwrap()), vec!["IIR", "THR", "port_bugs"]);
    let p = parse_program("register R width 8 readonly; global g; task t prio 1 { g = R; }").unwrap();
    assert_eq!(names(&p), vec!["R"]);
}

fn x8() -> Solver {
    Solver::new(
        8,
        vec![
            InputPoint {
                name: "x".into(),
                width: 8,
            },
            InputPoint {
                name: "y".into(),
                width: 8,
            },
        ],
        7,
    )
}

fn var(n: &str) -> Term {
    Term::Var(n.into(), 8)
}

#[test]
fn solver_trivial_cases() {
    let s = x8();
    let eq5 = Constraint::new(Term::bin(BinOp::Eq, var("x"), Term::Const(5), 8), true);
    match s.solve(&[eq5], None) {
        SolveResult::Sat(t) => assert_eq!(t["x"], 5),
        r => panic!("{r:?}"),
    }
    let ne = Constraint::new(Term::bin(BinOp::Ne, var("x"), var("x"), 8), true);
    assert_eq!(s.solve(&[ne], None), SolveResult::Unsat);
}

fn random_term(rng: &mut ChaCha8Rng) -> Term {
    let a: u64 = rng.gen_range(0..4);
    let b: u64 = rng.gen_range(0..4);
    let c: u64 = rng.gen_range(0..256);
    let ax = Term::bin(BinOp::Mul, Term::Const(a), var("x"), 8);
    let by = Term::bin(BinOp::Mul, Term::Const(b), var("y"), 8);
    let lhs = Term::bin(BinOp::Add, Term::bin(BinOp::Add, ax, by, 8), Term::Const(c), 8);
    let op = [BinOp::Eq, BinOp::Ne, BinOp::Lt, BinOp::Le, BinOp::Gt][rng.gen_range(0..5)];
    Term::bin(op, lhs, Term::Const(rng.gen_range(0..256)), 8)
}

#[test]
fn solver_agrees_with_enumeration() {
    let s = x8();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut sat = 0;
    for _ in 0..200 {
        let pc: Vec<Constraint> = (0..5)
            .map(|_| Constraint::new(random_term(&mut rng), rng.gen_bool(0.7)))
            .collect();
        let mut exists = false;
        'outer: for x in 0..256u64 {
            for y in 0..256u64 {
                let env: BTreeMap<String, u64> = [("x".to_string(), x), ("y".to_string(), y)].into();
                if pc.iter().all(|c| c.check(&env, 8)) {
                    exists = true;
                    break 'outer;
                }
            }
        }
        match s.solve(&pc, None) {
            SolveResult::Sat(t) => {
                assert!(exists);
                assert!(pc.iter().all(|c| c.check(&t, 8)));
                sat += 1;
            }
            SolveResult::Unsat => assert!(!exists),
            SolveResult::Unknown => panic!("16-bit space must be decided"),
        }
    }
    assert!(sat > 0 && sat < 200);
}

#[test]
fn uart_verdicts() {
    let p = parse_program(UART).unwrap();
    let sa = analyze(&p).unwrap();
    let vm = Vm::new(&p).unwrap();
    let b = budget();
    let verdict = |id: usize| explore(&p, &sa.warnings[id - 1], &b);
    assert_eq!(verdict(3), SymExecResult::Infeasible);
    for id in [1, 2, 4] {
        match verdict(id) {
            SymExecResult::Reachable(t) => {
                assert!(covers_in_order(&vm, &sa.warnings[id - 1], &t).unwrap(), "WN{id} {t:?}");
            }
            r => panic!("WN{id}: {r:?}"),
        }
    }
}

#[test]
fn reference_input_satisfies_wn1_path() {
    let p = parse_program(UART).unwrap();
    let sa = analyze(&p).unwrap();
    let vm = Vm::new(&p).unwrap();
    let t1: Input = [("IIR", 0x0111), ("THR", 0x0111), ("port_bugs", 0)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    assert!(covers_in_order(&vm, &sa.warnings[0], &t1).unwrap());
}

#[test]
fn branch_free_warning_is_reachable() {
    let p = parse_program("global x; task t prio 5 { x = 1; } isr h line 1 prio 1 { x = 2; }").unwrap();
    let sa = analyze(&p).unwrap();
    assert!(matches!(
        explore(&p, &sa.warnings[0], &budget()),
        SymExecResult::Reachable(_)
    ));
}

const LOOPY: &str = "input global n;
global x;
width 8;
task t prio 5 {
    local i;
    i = 0;
    while (i < n) {
        i = i + 1;
    }
    if (i == 9) {
        x = 1;
    }
}
isr h line 1 prio 1 {
    x = 2;
}";

#[test]
fn loop_bound_grows_until_reached() {
    let p = parse_program(LOOPY).unwrap();
    let sa = analyze(&p).unwrap();
    let wn = sa.warnings.iter().find(|w| w.ei.ctx == "t").unwrap();
    match explore(&p, wn, &budget()) {
        SymExecResult::Reachable(t) => assert_eq!(t["n"], 9),
        r => panic!("{r:?}"),
    }
    let tight = Budget { l_max: 4, ..budget() };
    assert_eq!(explore(&p, wn, &tight), SymExecResult::Infeasible);
}

#[test]
fn deterministic_and_skip_invariant() {
    let p = parse_program(UART).unwrap();
    let sa = analyze(&p).unwrap();
    for wn in &sa.warnings {
        let a = explore(&p, wn, &budget());
        let b = explore(&p, wn, &budget());
        assert_eq!(a, b);
        let noskip = explore(
            &p,
            wn,
            &Budget {
                solver_skip: false,
                ..budget()
            },
        );
        assert_eq!(
            std::mem::discriminant(&a),
            std::mem::discriminant(&noskip),
            "WN{}",
            wn.id
        );
    }
}
