use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::term::{Constraint, Term};
use crate::frontend::BinOp;
use crate::sem;
use crate::vm::{Input, InputPoint};

/// Largest search space explored per variable group.
pub const SEARCH_LIMIT: u128 = 1 << 20;

/// Variables at most this wide always get their full range.
pub const FULL_DOMAIN_BITS: u32 = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveResult {
    Sat(Input),
    /// Refuted by propagation or by exhausting every candidate value.
    Unsat,
    Unknown,
}

#[derive(Debug, Clone)]
pub struct Solver {
    /// Arithmetic width of the program.
    pub width: u32,
    pub points: Vec<InputPoint>,
    pub rng_seed: u64,
}

struct Group {
    vars: Vec<String>,
    atoms: Vec<Constraint>,
}

impl Solver {
    pub fn new(width: u32, points: Vec<InputPoint>, rng_seed: u64) -> Self {
        Solver {
            width,
            points,
            rng_seed,
        }
    }

    fn var_width(&self, name: &str) -> u32 {
        self.points
            .iter()
            .find(|p| p.name == name)
            .map_or(self.width, |p| p.width)
    }

    /// Finds values for every input point satisfying `pc`. Points the
    /// constraints do not mention take their `seed` value, else zero.
    pub fn solve(&self, pc: &[Constraint], seed: Option<&Input>) -> SolveResult {
        let mut atoms = Vec::new();
        for c in pc {
            match c.term.as_const() {
                Some(v) if (v != 0) != c.holds => return SolveResult::Unsat,
                Some(_) => {}
                None => atoms.push(c.clone()),
            }
        }
        atoms.sort();
        atoms.dedup();
        if atoms.iter().any(|a| atoms.binary_search(&a.negated()).is_ok()) {
            return SolveResult::Unsat;
        }
        let mut env: Input = self
            .points
            .iter()
            .map(|p| {
                let v = seed.and_then(|s| s.get(&p.name)).copied().unwrap_or(0);
                (p.name.clone(), sem::mask(v, p.width))
            })
            .collect();
        let mut unknown = false;
        for g in groups(&atoms) {
            match self.solve_group(&g, seed) {
                SolveResult::Sat(vals) => env.extend(vals),
                SolveResult::Unsat => return SolveResult::Unsat,
                SolveResult::Unknown => unknown = true,
            }
        }
        if unknown {
            return SolveResult::Unknown;
        }
        if pc.iter().all(|c| c.check(&env, self.width)) {
            SolveResult::Sat(env)
        } else {
            SolveResult::Unknown
        }
    }

    fn solve_group(&self, g: &Group, seed: Option<&Input>) -> SolveResult {
        let mut fixed: BTreeMap<String, u64> = BTreeMap::new();
        let mut excluded: BTreeMap<String, BTreeSet<u64>> = BTreeMap::new();
        for a in &g.atoms {
            if let Some((v, c, eq)) = self.equality(a) {
                if eq {
                    if fixed.get(&v).is_some_and(|&old| old != c) {
                        return SolveResult::Unsat;
                    }
                    fixed.insert(v, c);
                } else {
                    excluded.entry(v).or_default().insert(c);
                }
            }
        }
        for (v, c) in &fixed {
            if *c > sem::max_value(self.var_width(v)) || excluded.get(v).is_some_and(|e| e.contains(c)) {
                return SolveResult::Unsat;
            }
        }
        let domain_size = |v: &String| -> u128 {
            if fixed.contains_key(v) {
                1
            } else {
                let w = self.var_width(v);
                (1u128 << w).saturating_sub(excluded.get(v).map_or(0, |e| e.len() as u128))
            }
        };
        let total: u128 = g.vars.iter().map(domain_size).fold(1u128, |a, b| a.saturating_mul(b));
        let exhaustive = total <= SEARCH_LIMIT;
        let domains: Vec<Vec<u64>> = g
            .vars
            .iter()
            .map(|v| {
                if let Some(&c) = fixed.get(v) {
                    return vec![c];
                }
                let w = self.var_width(v);
                let ex = excluded.get(v);
                let keep = |x: &u64| ex.is_none_or(|e| !e.contains(x));
                if exhaustive || w <= FULL_DOMAIN_BITS {
                    (0..=sem::max_value(w)).filter(keep).collect()
                } else {
                    self.candidates(v, w, g, seed).into_iter().filter(keep).collect()
                }
            })
            .collect();
        // Each atom is checked once its last variable is assigned.
        let mut due: Vec<Vec<&Constraint>> = vec![Vec::new(); g.vars.len()];
        for a in &g.atoms {
            let mut vs = BTreeSet::new();
            a.term.vars(&mut vs);
            let last = g.vars.iter().rposition(|v| vs.contains(v)).unwrap_or(0);
            due[last].push(a);
        }
        let mut env = Input::new();
        let mut budget = if exhaustive { u128::MAX } else { SEARCH_LIMIT };
        if self.search(&g.vars, &due, &domains, 0, &mut env, &mut budget) {
            SolveResult::Sat(env)
        } else if exhaustive {
            SolveResult::Unsat
        } else {
            SolveResult::Unknown
        }
    }

    /// `v == c` or `v != c` atoms, in either operand order.
    fn equality(&self, a: &Constraint) -> Option<(String, u64, bool)> {
        let (op, l, r) = match &a.term {
            Term::Bin(op @ (BinOp::Eq | BinOp::Ne), l, r) => (*op, l.as_ref(), r.as_ref()),
            Term::Var(n, _) if !a.holds => return Some((n.clone(), 0, true)),
            Term::Var(n, _) => return Some((n.clone(), 0, false)),
            _ => return None,
        };
        let (v, vw, c) = match (l, r) {
            (Term::Var(n, w), Term::Const(c)) | (Term::Const(c), Term::Var(n, w)) => (n, *w, *c),
            _ => return None,
        };
        // Comparisons mask both sides to the program width.
        if vw > self.width {
            return None;
        }
        let eq = (op == BinOp::Eq) == a.holds;
        Some((v.clone(), sem::mask(c, self.width), eq))
    }

    fn candidates(&self, v: &str, w: u32, g: &Group, seed: Option<&Input>) -> Vec<u64> {
        let max = sem::max_value(w);
        let mut set: BTreeSet<u64> = [0, 1, max, max - 1, 1u64 << (w - 1)].into_iter().collect();
        if let Some(s) = seed.and_then(|s| s.get(v)) {
            set.insert(sem::mask(*s, w));
        }
        let mut consts = BTreeSet::new();
        for a in &g.atoms {
            a.term.consts(&mut consts);
        }
        for c in consts {
            for x in [c, c.wrapping_add(1), c.wrapping_sub(1), !c, c.wrapping_neg()] {
                set.insert(sem::mask(x, w));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed ^ fxhash(v));
        for _ in 0..64 {
            set.insert(rng.gen::<u64>() & max);
        }
        set.into_iter().collect()
    }

    fn search(
        &self,
        vars: &[String],
        due: &[Vec<&Constraint>],
        domains: &[Vec<u64>],
        i: usize,
        env: &mut Input,
        budget: &mut u128,
    ) -> bool {
        if i == vars.len() {
            return true;
        }
        for &x in &domains[i] {
            if *budget == 0 {
                return false;
            }
            *budget -= 1;
            env.insert(vars[i].clone(), x);
            if due[i].iter().all(|a| a.check(env, self.width)) && self.search(vars, due, domains, i + 1, env, budget) {
                return true;
            }
        }
        env.remove(&vars[i]);
        false
    }
}

fn fxhash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Splits atoms into groups that share no variables.
fn groups(atoms: &[Constraint]) -> Vec<Group> {
    let vars: Vec<BTreeSet<String>> = atoms
        .iter()
        .map(|a| {
            let mut s = BTreeSet::new();
            a.term.vars(&mut s);
            s
        })
        .collect();
    let mut owner: BTreeMap<String, usize> = BTreeMap::new();
    let mut parent: Vec<usize> = (0..atoms.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (i, vs) in vars.iter().enumerate() {
        for v in vs {
            match owner.get(v) {
                Some(&j) => {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a.max(b)] = a.min(b);
                }
                None => {
                    owner.insert(v.clone(), i);
                }
            }
        }
    }
    let mut out: BTreeMap<usize, Group> = BTreeMap::new();
    for (i, a) in atoms.iter().enumerate() {
        let root = find(&mut parent, i);
        let g = out.entry(root).or_insert_with(|| Group {
            vars: Vec::new(),
            atoms: Vec::new(),
        });
        g.atoms.push(a.clone());
        for v in &vars[i] {
            if !g.vars.contains(v) {
                g.vars.push(v.clone());
            }
        }
    }
    out.into_values().collect()
}
