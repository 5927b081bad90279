//! Workloads shared by the benchmarks.

use irqracer_core::frontend::load;
use irqracer_core::gen::{random_program, GenConfig};
use irqracer_core::Program;

pub const UART: &str = include_str!("../../../corpus/uart.idl");
pub const KEYBOARD: &str = include_str!("../../../corpus/keyboard.idl");

pub fn program(src: &str) -> Program {
    load(src).expect("workload parses")
}

/// Seeded random programs of the property-suite shape.
pub fn random_programs(n: u64) -> Vec<Program> {
    let cfg = GenConfig::default();
    (0..n).map(|s| program(&random_program(s, &cfg))).collect()
}
