//! Tool settings shared by the command line and the report.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::Program;
use crate::pipeline::PipelineConfig;
use crate::repair::RepairConfig;
use crate::symex::Budget;
use crate::vm::DEFAULT_STEP_LIMIT;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolConfig {
    pub timeout_secs: u64,
    pub l_max: u32,
    pub step_limit: u64,
    pub seed: u64,
    /// Registers whose writes change interrupt masking, on top of those
    /// declared `irqctl` in the program.
    pub irqctl_registers: Vec<String>,
    pub max_widen: u32,
    /// Most input assignments the oracle may enumerate.
    pub oracle_budget: u64,
    /// Most states explored per loop bound.
    pub max_states: usize,
}

impl Default for ToolConfig {
    fn default() -> Self {
        ToolConfig {
            timeout_secs: 600,
            l_max: 1000,
            step_limit: DEFAULT_STEP_LIMIT,
            seed: 0,
            irqctl_registers: Vec::new(),
            max_widen: 32,
            oracle_budget: 1 << 16,
            max_states: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("`{0}` must be positive")]
    NotPositive(&'static str),
    #[error("unknown interrupt-controlling register `{0}`")]
    UnknownRegister(String),
}

impl ToolConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let checks: [(&'static str, bool); 6] = [
            ("timeout_secs", self.timeout_secs > 0),
            ("l_max", self.l_max > 0),
            ("step_limit", self.step_limit > 0),
            ("max_widen", self.max_widen > 0),
            ("oracle_budget", self.oracle_budget > 0),
            ("max_states", self.max_states > 0),
        ];
        match checks.iter().find(|(_, ok)| !ok) {
            Some((name, _)) => Err(ConfigError::NotPositive(name)),
            None => Ok(()),
        }
    }

    /// Marks the configured registers of `p` as interrupt-controlling.
    pub fn prepare(&self, p: &mut Program) -> Result<(), ConfigError> {
        for name in &self.irqctl_registers {
            let r = p
                .registers
                .iter_mut()
                .find(|r| &r.name == name)
                .ok_or_else(|| ConfigError::UnknownRegister(name.clone()))?;
            r.irqctl = true;
        }
        Ok(())
    }

    pub fn budget(&self) -> Budget {
        Budget {
            timeout: Duration::from_secs(self.timeout_secs),
            l_max: self.l_max,
            seed: self.seed,
            max_states: self.max_states,
            ..Budget::default()
        }
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            budget: self.budget(),
            step_limit: self.step_limit,
            ..PipelineConfig::default()
        }
    }

    pub fn repair(&self) -> RepairConfig {
        RepairConfig {
            pipeline: self.pipeline(),
            max_widen: self.max_widen,
            ..RepairConfig::default()
        }
    }
}
