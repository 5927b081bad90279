//! Seeded generator of small interrupt-driven programs, used by property
//! suites and benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct GenConfig {
    /// Upper bound on statements over all routines, nested ones included.
    pub max_stmts: usize,
    pub max_isrs: u32,
    pub max_inputs: usize,
    /// Inclusive bit-width range of input registers.
    pub input_bits: (u32, u32),
    pub width: u32,
    /// Emit a lock used by both the task and one handler.
    pub locks: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_stmts: 20,
            max_isrs: 2,
            max_inputs: 2,
            input_bits: (2, 4),
            width: 8,
            locks: true,
        }
    }
}

struct Gen<'c> {
    rng: ChaCha8Rng,
    cfg: &'c GenConfig,
    globals: Vec<String>,
    inputs: Vec<String>,
    lines: Vec<u32>,
    lock: Option<String>,
    left: usize,
}

impl Gen<'_> {
    fn atom(&mut self, locals: &[&str]) -> String {
        match self.rng.gen_range(0..4) {
            0 => self.rng.gen_range(0..8).to_string(),
            1 => self.inputs.choose(&mut self.rng).unwrap().clone(),
            2 if !locals.is_empty() => locals.choose(&mut self.rng).unwrap().to_string(),
            _ => self.globals.choose(&mut self.rng).unwrap().clone(),
        }
    }

    fn expr(&mut self, locals: &[&str]) -> String {
        let a = self.atom(locals);
        if self.rng.gen_bool(0.5) {
            return a;
        }
        let op = ["+", "-", "&", "|", "^"].choose(&mut self.rng).unwrap();
        let b = self.atom(locals);
        format!("{a} {op} {b}")
    }

    fn cond(&mut self, locals: &[&str]) -> String {
        let a = self.atom(locals);
        let op = ["==", "!=", "<", ">", "&"].choose(&mut self.rng).unwrap();
        let b = self.rng.gen_range(0..8);
        format!("{a} {op} {b}")
    }

    fn block(&mut self, out: &mut String, indent: usize, locals: &[&str], depth: u32, isr: Option<u32>, n: usize) {
        for _ in 0..n {
            if self.left == 0 {
                return;
            }
            self.stmt(out, indent, locals, depth, isr);
        }
    }

    fn stmt(&mut self, out: &mut String, indent: usize, locals: &[&str], depth: u32, isr: Option<u32>) {
        let pad = " ".repeat(indent);
        self.left -= 1;
        let roll = self.rng.gen_range(0..100);
        if roll < 12 && depth < 2 && self.left >= 1 {
            let c = self.cond(locals);
            out.push_str(&format!("{pad}if ({c}) {{\n"));
            let k = self.rng.gen_range(1..=2);
            self.block(out, indent + 4, locals, depth + 1, isr, k);
            if self.left > 0 && self.rng.gen_bool(0.3) {
                out.push_str(&format!("{pad}}} else {{\n"));
                self.block(out, indent + 4, locals, depth + 1, isr, 1);
            }
            out.push_str(&format!("{pad}}}\n"));
        } else if roll < 18 && depth < 2 && self.left >= 3 && !locals.is_empty() {
            let i = locals[0];
            out.push_str(&format!("{pad}{i} = 0;\n"));
            out.push_str(&format!("{pad}while ({i} < 2) {{\n"));
            self.left -= 2;
            self.block(out, indent + 4, &locals[1..], depth + 1, isr, 1);
            out.push_str(&format!("{pad}    {i} = {i} + 1;\n{pad}}}\n"));
        } else if roll < 30 && self.left >= 2 {
            // Mask a line the current context may be preempted by.
            let cands: Vec<u32> = self
                .lines
                .iter()
                .copied()
                .filter(|&l| isr.is_none_or(|me| l < me))
                .collect();
            let Some(&line) = cands.choose(&mut self.rng) else {
                return self.assign(out, &pad, locals);
            };
            self.left -= 1;
            out.push_str(&format!("{pad}irq_disable({line});\n"));
            self.block(out, indent, locals, depth, isr, 1);
            out.push_str(&format!("{pad}irq_enable({line});\n"));
        } else if roll < 38 && self.left >= 2 && self.lock.is_some() && depth == 0 {
            let l = self.lock.clone().unwrap();
            self.left -= 1;
            out.push_str(&format!("{pad}lock({l});\n"));
            self.block(out, indent, locals, depth, isr, 1);
            out.push_str(&format!("{pad}unlock({l});\n"));
        } else if roll < 50 {
            let e = self.expr(locals);
            out.push_str(&format!("{pad}output({e});\n"));
        } else {
            self.assign(out, &pad, locals);
        }
    }

    fn assign(&mut self, out: &mut String, pad: &str, locals: &[&str]) {
        let e = self.expr(locals);
        let target = if !locals.is_empty() && self.rng.gen_bool(0.3) {
            locals.choose(&mut self.rng).unwrap().to_string()
        } else {
            self.globals.choose(&mut self.rng).unwrap().clone()
        };
        out.push_str(&format!("{pad}{target} = {e};\n"));
    }
}

/// IDL source of a random program determined by `seed`.
pub fn random_program(seed: u64, cfg: &GenConfig) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_globals = rng.gen_range(1..=3);
    let n_inputs = rng.gen_range(1..=cfg.max_inputs.max(1));
    let n_isrs = rng.gen_range(1..=cfg.max_isrs.max(1));
    let globals: Vec<String> = (0..n_globals).map(|k| format!("g{k}")).collect();
    let inputs: Vec<String> = (0..n_inputs).map(|k| format!("IN{k}")).collect();
    let lines: Vec<u32> = (1..=n_isrs).collect();
    let lock = (cfg.locks && rng.gen_bool(0.3)).then(|| "m".to_string());

    let mut out = format!("width {};\n", cfg.width);
    for g in &globals {
        out.push_str(&format!("global {g};\n"));
    }
    for i in &inputs {
        let w = rng.gen_range(cfg.input_bits.0..=cfg.input_bits.1);
        out.push_str(&format!("register {i} width {w} readonly;\n"));
    }
    if let Some(l) = &lock {
        out.push_str(&format!("lock {l};\n"));
    }

    let mut g = Gen {
        rng,
        cfg,
        globals,
        inputs,
        lines: lines.clone(),
        lock,
        left: cfg.max_stmts,
    };
    let task_share = g.cfg.max_stmts / 2;
    g.left = task_share;
    out.push_str("\ntask t prio 9 {\n    local i, a;\n");
    g.block(&mut out, 4, &["i", "a"], 0, None, task_share);
    out.push_str("}\n");

    let per_isr = (g.cfg.max_stmts - task_share) / lines.len();
    for &line in &lines {
        g.left = per_isr;
        out.push_str(&format!("\nisr h{line} line {line} prio {line} {{\n    local j, b;\n"));
        let n = g.rng.gen_range(1..=per_isr);
        g.block(&mut out, 4, &["j", "b"], 0, Some(line), n);
        out.push_str("}\n");
    }
    out
}

/// Statements in `p`, nested ones included.
pub fn statement_count(p: &crate::Program) -> usize {
    let mut n = 0;
    for r in &p.routines {
        crate::frontend::walk_stmts(&r.body, &mut |_| n += 1);
    }
    n
}
