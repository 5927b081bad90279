use irqracer_core::frontend::{parse_program, Location};
use irqracer_core::graphs::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn preds(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut p = vec![Vec::new(); succ.len()];
    for (n, ss) in succ.iter().enumerate() {
        for &m in ss {
            p[m].push(n);
        }
    }
    p
}

fn reachable(succ: &[Vec<usize>], root: usize, removed: Option<usize>) -> Vec<bool> {
    let mut seen = vec![false; succ.len()];
    if Some(root) == removed {
        return seen;
    }
    let mut stack = vec![root];
    seen[root] = true;
    while let Some(n) = stack.pop() {
        for &m in &succ[n] {
            if !seen[m] && Some(m) != removed {
                seen[m] = true;
                stack.push(m);
            }
        }
    }
    seen
}

/// `a` dominates `b` iff `b` is unreachable once `a` is removed.
fn naive_dominates(succ: &[Vec<usize>], root: usize, a: usize, b: usize) -> bool {
    a == b || !reachable(succ, root, Some(a))[b]
}

fn check_tree(succ: &[Vec<usize>], root: usize, idom: &[Option<usize>]) {
    let reach = reachable(succ, root, None);
    for b in 0..succ.len() {
        if !reach[b] {
            assert_eq!(idom[b], None);
            continue;
        }
        let mut chain = vec![b];
        let mut cur = b;
        while let Some(up) = idom[cur] {
            chain.push(up);
            cur = up;
        }
        for a in 0..succ.len() {
            let expected = reach[a] && naive_dominates(succ, root, a, b);
            assert_eq!(chain.contains(&a), expected, "a={a} b={b} succ={succ:?}");
        }
    }
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize, dag: bool) -> Vec<Vec<usize>> {
    let mut succ = vec![Vec::new(); n];
    for (v, out) in succ.iter_mut().enumerate() {
        let k = rng.gen_range(0..=3);
        for _ in 0..k {
            let w = if dag {
                if v + 1 >= n {
                    break;
                }
                rng.gen_range(v + 1..n)
            } else {
                rng.gen_range(0..n)
            };
            if !out.contains(&w) {
                out.push(w);
            }
        }
    }
    succ
}

#[test]
fn dominators_match_brute_force_on_small_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for round in 0..3000 {
        let n = rng.gen_range(1..=15);
        let succ = random_graph(&mut rng, n, round % 2 == 0);
        let pred = preds(&succ);
        let idom = dominators(&succ, &pred, 0);
        check_tree(&succ, 0, &idom);
        let exit = n - 1;
        let ipdom = post_dominators(&succ, &pred, exit);
        check_tree(&pred, exit, &ipdom);
    }
}

#[test]
fn chain_and_diamond() {
    let chain = vec![vec![1], vec![2], vec![]];
    let idom = dominators(&chain, &preds(&chain), 0);
    assert_eq!(idom, vec![None, Some(0), Some(1)]);
    let ipdom = post_dominators(&chain, &preds(&chain), 2);
    assert_eq!(ipdom, vec![Some(1), Some(2), None]);

    let diamond = vec![vec![1, 2], vec![3], vec![3], vec![]];
    let ipdom = post_dominators(&diamond, &preds(&diamond), 3);
    assert_eq!(ipdom[0], Some(3));
}

#[test]
fn distance_basics() {
    let chain = vec![vec![1], vec![2], vec![3], vec![]];
    assert_eq!(distance(&chain, 0, 0), Some(0));
    assert_eq!(distance(&chain, 0, 3), Some(3));
    assert_eq!(distance(&chain, 3, 0), None);
    let d = distances_to(&preds(&chain), &[3]);
    assert_eq!(d, vec![3, 2, 1, 0]);
}

#[test]
fn distances_satisfy_triangle_inequality() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let n = rng.gen_range(2..=12);
        let succ = random_graph(&mut rng, n, false);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if let (Some(ab), Some(bc)) = (distance(&succ, a, b), distance(&succ, b, c)) {
                        let ac = distance(&succ, a, c).expect("composable path");
                        assert!(ac <= ab + bc);
                    }
                }
            }
        }
    }
}

#[test]
fn straight_line_is_a_chain() {
    let p = parse_program("global x; task t prio 5 { x = 1; x = 2; x = 3; }").unwrap();
    let g = build_context(&p, "t", LoopMode::UnrollTwice).unwrap();
    let instrs: Vec<_> = (0..g.len()).filter(|&n| g.nodes[n].is_instruction()).collect();
    assert_eq!(instrs.len(), 3);
    for w in instrs.windows(2) {
        assert_eq!(g.succ[w[0]], vec![w[1]]);
    }
    assert_eq!(distance(&g.succ, g.entry, g.exit), Some(4));
}

#[test]
fn while_unrolls_twice() {
    let p = parse_program("global x; task t prio 5 { while (x < 9) { x = x + 1; output(x); } }").unwrap();
    let g = build_context(&p, "t", LoopMode::UnrollTwice).unwrap();
    let guards = g.nodes_at(&Location::new("t", 1));
    assert_eq!(guards.len(), 2);
    assert_eq!(g.nodes_at(&Location::new("t", 2)).len(), 2);
    assert_eq!(g.nodes_at(&Location::new("t", 3)).len(), 2);
    // No back edge: the graph is acyclic.
    let rpo = g.reverse_postorder();
    let pos: Vec<usize> = {
        let mut v = vec![0; g.len()];
        for (i, &n) in rpo.iter().enumerate() {
            v[n] = i;
        }
        v
    };
    for (n, ss) in g.succ.iter().enumerate() {
        for &m in ss {
            assert!(pos[n] < pos[m]);
        }
    }
    let copies: Vec<_> = guards.iter().map(|&n| g.nodes[n].unroll.clone()).collect();
    assert_eq!(copies, vec![vec![0], vec![1]]);

    let h = build_context(&p, "t", LoopMode::Preserve).unwrap();
    assert_eq!(h.nodes_at(&Location::new("t", 1)).len(), 1);
}

#[test]
fn calls_are_inlined_per_site() {
    let src = "global x; func f(a) { x = a; } task t prio 5 { call f(1); call f(2); }";
    let p = parse_program(src).unwrap();
    let g = build_context(&p, "t", LoopMode::UnrollTwice).unwrap();
    let body = g.nodes_at(&Location::new("f", 1));
    assert_eq!(body.len(), 2);
    assert_ne!(g.nodes[body[0]].frame, g.nodes[body[1]].frame);
    assert_eq!(g.routine_of(body[0]), "f");
}

#[test]
fn recursion_is_detected() {
    let p = irqracer_core::frontend::parse_syntax("func f() { call f(); } task t prio 5 { call f(); }").unwrap();
    assert_eq!(
        build_context(&p, "t", LoopMode::UnrollTwice),
        Err(GraphError::RecursionDetected("f".into()))
    );
}

#[test]
fn pruning_keeps_only_the_accessing_branch() {
    let src =
        "global g; task t prio 5 { local a; if (a) { a = 1; a = 2; } else { g = 1; } } isr h line 1 prio 1 { g = 2; }";
    let p = parse_program(src).unwrap();
    let g = build_context(&p, "t", LoopMode::UnrollTwice).unwrap();
    let access = g.nodes_at(&Location::new("t", 4))[0];
    let r = prune(&g, |n| n == access);
    // entry, branch, access, exit
    assert_eq!(r.cfg.len(), 4);
    assert_eq!(r.pruned.len(), g.len() - 4);
    let b = r.node_at(&Location::new("t", 1)).unwrap();
    assert_eq!(r.cfg.succ[b].len(), 2);
}

#[test]
fn iccfg_edge_targets_second_entry() {
    let src = "global g; task t prio 5 { g = 1; output(2); } isr h line 1 prio 1 { g = 2; }";
    let p = parse_program(src).unwrap();
    let gi = build_context(&p, "t", LoopMode::UnrollTwice).unwrap();
    let gj = build_context(&p, "h", LoopMode::UnrollTwice).unwrap();
    let ic = build_iccfg(&gi, &gj, &Location::new("t", 1), &Location::new("h", 1), false).unwrap();
    assert_eq!(ic.injected.len(), 1);
    let (src_node, dst) = ic.injected[0];
    assert_eq!(dst, gj.entry + ic.offset);
    assert_eq!(gi.nodes[src_node].loc, Some(Location::new("t", 2)));
    let d = ic.distances_to_ej();
    assert_eq!(d[gi.entry], 4);

    // Event at the end of the routine: the edge leaves the exit node.
    let ic = build_iccfg(&gj, &gi, &Location::new("h", 1), &Location::new("t", 1), false).unwrap();
    assert_eq!(ic.injected[0].0, gj.exit);
}

#[test]
fn dot_dump_labels_locations() {
    let p = parse_program("global x; task t prio 5 { x = 1; }").unwrap();
    let g = build_context(&p, "t", LoopMode::UnrollTwice).unwrap();
    let dot = to_dot(&g);
    assert!(dot.starts_with("digraph"));
    assert!(dot.contains("t#1"));
}
