use irqracer_core::alias::link_alias_sets;
use irqracer_core::detect::*;
use irqracer_core::frontend::{parse_program, Location};
use irqracer_core::graphs::build_icfg;

const UART: &str = include_str!("../../../corpus/uart.idl");

fn summary(ws: &[RaceWarning]) -> Vec<(String, u32, AccessKind, String, u32, AccessKind)> {
    ws.iter()
        .map(|w| {
            (
                w.ei.ctx.clone(),
                w.ei.line,
                w.ei.access,
                w.ej.ctx.clone(),
                w.ej.line,
                w.ej.access,
            )
        })
        .collect()
}

#[test]
fn uart_has_four_warnings() {
    let p = parse_program(UART).unwrap();
    let sa = analyze(&p).unwrap();
    use AccessKind::*;
    let s = |x: &str| x.to_string();
    assert_eq!(
        summary(&sa.warnings),
        vec![
            (s("transmit"), 14, Read, s("irq1_handler"), 22, Write),
            (s("transmit"), 14, Read, s("irq2_handler"), 31, Write),
            (s("irq2_handler"), 31, Write, s("irq1_handler"), 22, Write),
            (s("irq2_handler"), 31, Write, s("irq1_handler"), 24, Read),
        ]
    );
    assert!(sa.warnings.iter().all(|w| w.resource == "xmit_tail"));
    assert_eq!(sa.warnings.iter().map(|w| w.id).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
}

#[test]
fn uart_shared_resources() {
    let p = parse_program(UART).unwrap();
    let sa = analyze(&p).unwrap();
    // THR is read by both ISRs, so it is shared too, but read-only.
    assert_eq!(sa.srs.members.iter().collect::<Vec<_>>(), vec!["THR", "xmit_tail"]);
    let acc: Vec<(String, u32, AccessKind)> = sa
        .accesses
        .iter()
        .filter(|a| a.r == "xmit_tail")
        .map(|a| (a.t.clone(), p.line_of(&a.l), a.a))
        .collect();
    assert!(acc.contains(&("transmit".into(), 14, AccessKind::Read)));
    assert!(acc.contains(&("irq1_handler".into(), 22, AccessKind::Write)));
    assert!(acc.contains(&("irq1_handler".into(), 24, AccessKind::Read)));
    assert!(acc.contains(&("irq2_handler".into(), 31, AccessKind::Write)));
    assert_eq!(acc.len(), 4);
    assert!(sa.accesses.iter().all(|a| a.av && a.v == a.r));
    assert!(sa
        .accesses
        .iter()
        .filter(|a| a.r == "THR")
        .all(|a| a.a == AccessKind::Read));
}

#[test]
fn uart_interrupt_ops() {
    let p = parse_program(UART).unwrap();
    let itrl = identify_interrupt_ops(&p);
    assert_eq!(itrl.len(), 1);
    assert_eq!(itrl[0].m, "transmit");
    assert_eq!(p.line_of(&itrl[0].l), 9);
    assert_eq!(itrl[0].i, IrqTarget::All);
    assert_eq!(itrl[0].t, IrqKind::Enable);
}

#[test]
fn uart_intb_values() {
    let p = parse_program(UART).unwrap();
    let sa = analyze(&p).unwrap();
    let lines = p.irq_lines();
    let t = &sa.ricfgs[0];
    let n14 = t.node_at(&Location::new("transmit", 6)).unwrap();
    assert_eq!(sa.intb[0][n14].bits(&lines), vec![0, 0]);
    let i1 = &sa.ricfgs[1];
    let n22 = i1.node_at(&Location::new("irq1_handler", 2)).unwrap();
    assert_eq!(sa.intb[1][n22].bits(&lines), vec![1, 0]);
}

#[test]
fn uart_ricfg_retains_figure_lines() {
    let p = parse_program(UART).unwrap();
    let sa = analyze(&p).unwrap();
    let t = &sa.ricfgs[0];
    let mut lines: Vec<u32> = t
        .cfg
        .nodes
        .iter()
        .filter_map(|n| n.loc.as_ref())
        .map(|l| p.line_of(l))
        .collect();
    lines.sort();
    assert_eq!(lines, vec![3, 4, 5, 9, 12, 14, 15]);
}

#[test]
fn disabling_around_the_read_removes_wn1() {
    let src = UART.replace(
        "        p = xmit_tail + 1;",
        "        irq_disable(1); p = xmit_tail + 1; irq_enable(1);",
    );
    let p = parse_program(&src).unwrap();
    let sa = analyze(&p).unwrap();
    assert!(!sa
        .warnings
        .iter()
        .any(|w| w.ei.ctx == "transmit" && w.ej.ctx == "irq1_handler"));
    assert_eq!(sa.warnings.len(), 3);
}

#[test]
fn single_task_global_is_not_shared() {
    let p = parse_program("global g; task t prio 5 { g = 1; } isr h line 1 prio 1 { output(2); }").unwrap();
    let sa = analyze(&p).unwrap();
    assert!(sa.srs.members.is_empty());
    assert!(sa.warnings.is_empty());
}

#[test]
fn pointer_write_in_isr_shares_the_target() {
    let src = "global g; global q; task t prio 5 { q = &g; g = 1; } isr h line 1 prio 1 { *q = 2; }";
    let p = parse_program(src).unwrap();
    let sa = analyze(&p).unwrap();
    assert!(sa.srs.contains("g"));
    assert!(sa.srs.aliases["g"].contains("*q"));
    let via = sa.accesses.iter().find(|a| a.t == "h" && a.r == "g").unwrap();
    assert_eq!(via.v, "*q");
    assert!(!via.av);
    assert!(sa.warnings.iter().any(|w| w.resource == "g" && w.ej.ctx == "h"));
}

#[test]
fn read_read_and_equal_priority_are_never_reported() {
    let src = "global g; task t prio 5 { output(g); } isr h line 1 prio 1 { output(g); }";
    assert!(analyze(&parse_program(src).unwrap()).unwrap().warnings.is_empty());
    let src = "global g; isr a line 1 prio 1 { g = 1; } isr b line 2 prio 2 { g = 2; }";
    let ws = analyze(&parse_program(src).unwrap()).unwrap().warnings;
    assert_eq!(ws.len(), 1);
    assert_eq!(ws[0].ei.ctx, "b");
}

#[test]
fn reenabling_isr_neutralises_disable() {
    let src = "global g; task t prio 5 { irq_disable(2); g = 1; irq_enable(2); } \
               isr h1 line 1 prio 1 { irq_enable(2); } isr h2 line 2 prio 2 { g = 2; }";
    let p = parse_program(src).unwrap();
    let sa = analyze(&p).unwrap();
    let t = &sa.ricfgs[0];
    let dis = t.node_at(&Location::new("t", 1)).unwrap();
    assert!(sa.intb[0][dis].is_enabled(2));
    assert!(sa.warnings.iter().any(|w| w.ej.ctx == "h2"));

    let src = src.replace("irq_enable(2); }", "output(1); }");
    let sa = analyze(&parse_program(&src).unwrap()).unwrap();
    assert!(sa.warnings.is_empty());
}

#[test]
fn no_interrupt_ops_and_empty_program() {
    let p = parse_program("global g; task t prio 5 { g = 1; }").unwrap();
    assert!(identify_interrupt_ops(&p).is_empty());
    let sa = analyze(&parse_program("").unwrap()).unwrap();
    assert!(sa.warnings.is_empty());
    let icfgs = build_icfg(&p).unwrap();
    let al = link_alias_sets(&p);
    let intb = propagate_intb(&p, &icfgs[0]);
    assert!(intb.iter().all(|v| v.disabled().is_empty()));
    let (srs, _) = identify_shared_resources(&p, &al, &icfgs);
    assert!(srs.members.is_empty());
}

#[test]
fn disable_pair_order_in_itrl() {
    let p = parse_program("isr h line 2 prio 1 { } task t prio 5 { irq_disable(2); irq_enable(2); }").unwrap();
    let itrl = identify_interrupt_ops(&p);
    assert_eq!(itrl.len(), 2);
    assert_eq!(itrl[0].t, IrqKind::Disable);
    assert_eq!(itrl[1].t, IrqKind::Enable);
    assert!(itrl[0].l < itrl[1].l);
}

#[test]
fn postponed_firing_needs_a_later_access() {
    // The ISR can only fire after the enable; the task reads g again, so the
    // write is still exposed.
    let src = "global g; task t prio 5 { irq_disable(1); g = 1; irq_enable(1); output(g); } \
               isr h line 1 prio 1 { g = 2; }";
    let sa = analyze(&parse_program(src).unwrap()).unwrap();
    assert!(sa
        .warnings
        .iter()
        .any(|w| w.ei.loc == Location::new("t", 2) && w.ej.ctx == "h"));
    // Without the later read nothing is exposed.
    let src = src.replace("output(g);", "output(1);");
    let sa = analyze(&parse_program(&src).unwrap()).unwrap();
    assert!(sa.warnings.is_empty());
}
