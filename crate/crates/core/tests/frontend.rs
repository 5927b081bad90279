use irqracer_core::frontend::*;
use proptest::prelude::*;

const UART: &str = include_str!("../../../corpus/uart.idl");

#[test]
fn empty_source_has_no_routines() {
    let p = parse_program("").unwrap();
    assert!(p.routines.is_empty());
    assert_eq!(p.width, DEFAULT_WIDTH);
}

#[test]
fn uart_structure() {
    let p = parse_program(UART).unwrap();
    assert_eq!(p.tasks().count(), 1);
    assert_eq!(p.isrs().count(), 2);
    let irq1 = p.routine("irq1_handler").unwrap();
    assert_eq!(irq1.irq_line(), Some(1));
    assert_eq!(irq1.priority, Some(1));
    let irq2 = p.routine("irq2_handler").unwrap();
    assert_eq!(irq2.irq_line(), Some(2));
    assert_eq!(irq2.priority, Some(2));
    assert!(p.global("xmit_tail").is_some());
    for reg in ["IIR", "THR", "IER"] {
        assert!(p.register(reg).is_some(), "{reg}");
    }
    assert!(p.register("IIR").unwrap().readonly);
    assert!(p.register("IER").unwrap().irqctl);
    assert!(check_program(p).is_ok());
}

#[test]
fn uart_source_lines_follow_the_figure() {
    let p = parse_program(UART).unwrap();
    let mut lines = Vec::new();
    for r in &p.routines {
        walk_stmts(&r.body, &mut |s| lines.push((r.name.clone(), s.line)));
    }
    let t: Vec<u32> = lines.iter().filter(|(r, _)| r == "transmit").map(|(_, l)| *l).collect();
    assert_eq!(t, vec![3, 4, 5, 9, 12, 14, 15]);
    let i1: Vec<u32> = lines
        .iter()
        .filter(|(r, _)| r == "irq1_handler")
        .map(|(_, l)| *l)
        .collect();
    assert_eq!(i1, vec![21, 22, 24, 25]);
}

#[test]
fn locations_are_preorder_from_one() {
    let p = parse_program(UART).unwrap();
    let t = p.routine("transmit").unwrap();
    let mut idx = Vec::new();
    walk_stmts(&t.body, &mut |s| idx.push(s.loc.index));
    assert_eq!(idx, (1..=7).collect::<Vec<_>>());
    assert_eq!(p.line_of(&Location::new("transmit", 6)), 14);
}

#[test]
fn duplicate_irq_line() {
    let src = "isr a line 1 prio 1 { } isr b line 1 prio 2 { }";
    assert_eq!(parse_program(src), Err(FrontendError::DuplicateIrqLine(1)));
}

#[test]
fn duplicate_routine() {
    let src = "task t prio 5 { } task t prio 5 { }";
    assert!(matches!(
        parse_program(src),
        Err(FrontendError::DuplicateRoutine(n)) if n == "t"
    ));
}

#[test]
fn unknown_identifier() {
    let src = "task t prio 5 {\n x = 1;\n}";
    match parse_program(src) {
        Err(FrontendError::UnknownIdentifier { name, location }) => {
            assert_eq!(name, "x");
            assert_eq!(location, Location::new("t", 1));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn syntax_error_position() {
    let err = parse_program("global x;\ntask t prio 5 {\n  x = ;\n}").unwrap_err();
    match err {
        FrontendError::Syntax { line, col, .. } => assert_eq!((line, col), (3, 7)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn priority_overlap() {
    let p = parse_syntax("task t prio 3 { } isr h line 1 prio 3 { }").unwrap();
    let diags = check_program(p).unwrap_err();
    assert!(diags
        .iter()
        .any(|d| d.kind == DiagKind::PriorityOverlap && d.message.contains("priority overlap")));
}

#[test]
fn undeclared_lock_reports_location() {
    let p = parse_syntax("task t prio 3 { output(1); lock(l9); }").unwrap();
    let diags = check_program(p).unwrap_err();
    let d = diags.iter().find(|d| d.kind == DiagKind::UndeclaredLock).unwrap();
    assert_eq!(d.location, Some(Location::new("t", 2)));
}

#[test]
fn recursion_is_rejected() {
    let src = "func f() { call g(); } func g() { call f(); } task t prio 3 { call f(); }";
    let diags = check_program(parse_program(src).unwrap()).unwrap_err();
    assert!(diags.iter().any(|d| d.kind == DiagKind::Recursion));
}

#[test]
fn readonly_register_write() {
    let src = "register R width 8 readonly; task t prio 3 { R = 1; }";
    let diags = check_program(parse_program(src).unwrap()).unwrap_err();
    assert_eq!(diags[0].kind, DiagKind::ReadOnlyWrite);
}

#[test]
fn tasks_share_priority() {
    let src = "task a prio 3 { } task b prio 4 { }";
    let diags = check_program(parse_program(src).unwrap()).unwrap_err();
    assert_eq!(diags[0].kind, DiagKind::TaskPriority);
}

#[test]
fn else_if_chain_round_trips() {
    let src = "global x; task t prio 3 { if (x == 1) { x = 2; } else if (x) { x = 3; } else { x = 4; } }";
    let p = parse_program(src).unwrap();
    let q = parse_program(&print_program(&p)).unwrap();
    assert_eq!(p, q);
}

#[test]
fn corpus_round_trips() {
    for entry in std::fs::read_dir(concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("idl") {
            continue;
        }
        let src = std::fs::read_to_string(&path).unwrap();
        let p = parse_program(&src).unwrap();
        let printed = print_program(&p);
        assert_eq!(parse_program(&printed).unwrap(), p, "{}", path.display());
        assert_eq!(print_program(&parse_program(&printed).unwrap()), printed);
    }
}

#[test]
fn parse_is_deterministic() {
    let a = parse_program(UART).unwrap();
    let b = parse_program(UART).unwrap();
    let locs = |p: &Program| {
        let mut v = Vec::new();
        for r in &p.routines {
            walk_stmts(&r.body, &mut |s| v.push((s.loc.clone(), s.line)));
        }
        v
    };
    assert_eq!(locs(&a), locs(&b));
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0u64..70000).prop_map(Expr::Int),
        prop::sample::select(vec!["x", "y", "p"]).prop_map(|s| Expr::Var(s.into())),
        Just(Expr::AddrOf("x".into())),
        Just(Expr::Deref("p".into())),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        let ops = vec![
            BinOp::Add,
            BinOp::Sub,
            BinOp::Mul,
            BinOp::And,
            BinOp::Or,
            BinOp::Xor,
            BinOp::Shl,
            BinOp::Shr,
            BinOp::Eq,
            BinOp::Ne,
            BinOp::Lt,
            BinOp::Le,
            BinOp::Gt,
            BinOp::Ge,
            BinOp::LogAnd,
            BinOp::LogOr,
        ];
        prop_oneof![
            (prop::sample::select(ops), inner.clone(), inner.clone()).prop_map(|(op, a, b)| Expr::bin(op, a, b)),
            (prop::sample::select(vec![UnOp::Neg, UnOp::BitNot, UnOp::Not]), inner)
                .prop_map(|(op, e)| Expr::Unary(op, Box::new(e))),
        ]
    })
}

proptest! {
    #[test]
    fn expressions_round_trip(e in arb_expr()) {
        let src = format!(
            "global x; global y; global p; task t prio 3 {{ output({}); }}",
            printer::expr(&e)
        );
        let p = parse_program(&src).unwrap();
        let StmtKind::Output(back) = &p.routines[0].body[0].kind else { panic!() };
        prop_assert_eq!(back, &e);
    }
}
