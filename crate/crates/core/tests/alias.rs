use std::collections::BTreeSet;

use irqracer_core::alias::*;
use irqracer_core::frontend::parse_program;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn no_pointers_means_identity() {
    let p = parse_program("global x; global y; task t prio 5 { x = y + 1; }").unwrap();
    let a = andersen_points_to(&p, p.routine("t").unwrap());
    assert!(a.pairs().is_empty());
    assert!(a.may_alias("x", "x"));
    assert!(!a.may_alias("x", "y"));
}

#[test]
fn copy_then_store() {
    let src = "global x; global p; global q; task t prio 5 { p = &x; q = p; *q = 1; }";
    let p = parse_program(src).unwrap();
    let a = andersen_points_to(&p, p.routine("t").unwrap());
    assert!(a.may_alias("*q", "x"));
    assert!(a.may_alias("*p", "*q"));
}

#[test]
fn registration_links_isr_parameter() {
    let src = "global buf; isr h(dev) line 1 prio 1 { *dev = 2; } task t prio 5 { request_irq(1, &buf); }";
    let p = parse_program(src).unwrap();
    let a = link_alias_sets(&p);
    assert_eq!(a.points_to("h::dev"), BTreeSet::from(["buf".to_string()]));
    assert!(a.may_alias("*h::dev", "buf"));
}

#[test]
fn two_level_call_chain() {
    let src = "global g; func inner(b) { *b = 1; } func outer(a) { call inner(a); } task t prio 5 { call outer(&g); }";
    let p = parse_program(src).unwrap();
    let a = link_alias_sets(&p);
    assert!(a.may_alias("*inner::b", "g"));
    assert!(a.may_alias("*outer::a", "g"));
}

#[test]
fn locals_are_qualified() {
    let src = "global g; task t prio 5 { local p; p = &g; }";
    let p = parse_program(src).unwrap();
    let a = link_alias_sets(&p);
    assert!(a.may_alias("*t::p", "g"));
    assert!(a.points_to("p").is_empty());
}

// Oracle: pointer facts as (ptr, target) pairs, saturated under the four
// inclusion rules with calls expanded into parameter copies.
#[derive(Clone, Debug)]
enum S {
    Addr(usize, usize),
    Copy(usize, usize),
    Load(usize, usize),
    Store(usize, usize),
}

fn saturate(stmts: &[S], n: usize) -> Vec<Vec<bool>> {
    let mut pt = vec![vec![false; n]; n];
    loop {
        let mut changed = false;
        let mut set = |pt: &mut Vec<Vec<bool>>, a: usize, b: usize| {
            if !pt[a][b] {
                pt[a][b] = true;
                changed = true;
            }
        };
        for s in stmts {
            match *s {
                S::Addr(a, b) => set(&mut pt, a, b),
                S::Copy(a, b) => {
                    for o in 0..n {
                        if pt[b][o] {
                            set(&mut pt, a, o);
                        }
                    }
                }
                S::Load(a, b) => {
                    for o in 0..n {
                        if pt[b][o] {
                            for o2 in 0..n {
                                if pt[o][o2] {
                                    set(&mut pt, a, o2);
                                }
                            }
                        }
                    }
                }
                S::Store(a, b) => {
                    for o in 0..n {
                        if pt[a][o] {
                            for o2 in 0..n {
                                if pt[b][o2] {
                                    set(&mut pt, o, o2);
                                }
                            }
                        }
                    }
                }
            }
        }
        if !changed {
            return pt;
        }
    }
}

const VARS: [&str; 5] = ["a", "b", "c", "d", "e"];

fn render(s: &S, names: &[&str]) -> String {
    match *s {
        S::Addr(a, b) => format!("{} = &{};", names[a], names[b]),
        S::Copy(a, b) => format!("{} = {};", names[a], names[b]),
        S::Load(a, b) => format!("{} = *{};", names[a], names[b]),
        S::Store(a, b) => format!("*{} = {};", names[a], names[b]),
    }
}

fn random_stmt(rng: &mut ChaCha8Rng, n: usize) -> S {
    let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
    match rng.gen_range(0..4) {
        0 => S::Addr(a, b),
        1 => S::Copy(a, b),
        2 => S::Load(a, b),
        _ => S::Store(a, b),
    }
}

#[test]
fn matches_saturation_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..400 {
        let stmts: Vec<S> = (0..10).map(|_| random_stmt(&mut rng, VARS.len())).collect();
        let body: String = stmts.iter().map(|s| render(s, &VARS)).collect();
        let decls: String = VARS.iter().map(|v| format!("global {v}; ")).collect();
        let p = parse_program(&format!("{decls} task t prio 5 {{ {body} }}")).unwrap();
        let a = andersen_points_to(&p, p.routine("t").unwrap());
        let oracle = saturate(&stmts, VARS.len());
        for (i, x) in VARS.iter().enumerate() {
            let expected: BTreeSet<String> = (0..VARS.len())
                .filter(|&j| oracle[i][j])
                .map(|j| VARS[j].to_string())
                .collect();
            assert_eq!(a.points_to(x), expected, "{body}");
        }
    }
}

#[test]
fn inlined_calls_match_oracle() {
    // Globals a..e, a function f(u, w) whose body uses its parameters, and a
    // task calling it. The oracle copies arguments into the parameters and
    // analyses the function body once, as inlining every site would.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let names = ["a", "b", "c", "d", "e", "f::u", "f::w"];
    let local = ["a", "b", "c", "d", "e", "u", "w"];
    for _ in 0..300 {
        let fbody: Vec<S> = (0..4).map(|_| random_stmt(&mut rng, names.len())).collect();
        let tbody: Vec<S> = (0..4).map(|_| random_stmt(&mut rng, 5)).collect();
        let args: Vec<(bool, usize)> = (0..2).map(|_| (rng.gen_bool(0.5), rng.gen_range(0..5))).collect();
        let arg_text: Vec<String> = args
            .iter()
            .map(|&(addr, v)| format!("{}{}", if addr { "&" } else { "" }, VARS[v]))
            .collect();
        let src = format!(
            "global a; global b; global c; global d; global e; func f(u, w) {{ {} }} task t prio 5 {{ {} call f({}); }}",
            fbody.iter().map(|s| render(s, &local)).collect::<String>(),
            tbody.iter().map(|s| render(s, &VARS)).collect::<String>(),
            arg_text.join(", ")
        );
        let p = parse_program(&src).unwrap();
        let a = link_alias_sets(&p);
        let mut all = tbody.clone();
        all.extend(fbody.iter().cloned());
        for (k, &(addr, v)) in args.iter().enumerate() {
            all.push(if addr { S::Addr(5 + k, v) } else { S::Copy(5 + k, v) });
        }
        let oracle = saturate(&all, names.len());
        for (i, x) in names.iter().enumerate() {
            for (j, y) in names.iter().enumerate() {
                if oracle[i][j] {
                    assert!(a.points_to(x).contains(*y), "{src}: {x} -> {y}");
                }
            }
        }
    }
}

#[test]
fn adding_a_statement_never_removes_aliases() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let decls: String = VARS.iter().map(|v| format!("global {v}; ")).collect();
    for _ in 0..200 {
        let stmts: Vec<S> = (0..8).map(|_| random_stmt(&mut rng, VARS.len())).collect();
        let mut body: String = stmts.iter().map(|s| render(s, &VARS)).collect();
        let p = parse_program(&format!("{decls} task t prio 5 {{ {body} }}")).unwrap();
        let before = link_alias_sets(&p).pairs();
        body.push_str(&render(&random_stmt(&mut rng, VARS.len()), &VARS));
        let p = parse_program(&format!("{decls} task t prio 5 {{ {body} }}")).unwrap();
        let after = link_alias_sets(&p).pairs();
        assert!(before.is_subset(&after), "{body}");
    }
}
