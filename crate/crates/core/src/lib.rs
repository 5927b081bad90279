//! Detection, validation and repair of interrupt-induced races in IDL programs.

pub mod alias;
pub mod config;
pub mod detect;
pub mod frontend;
pub mod gen;
pub mod graphs;
pub mod pipeline;
pub mod repair;
pub mod report;
pub mod sem;
pub mod symex;
pub mod vm;

pub use frontend::{parse_program, Location, Program};
