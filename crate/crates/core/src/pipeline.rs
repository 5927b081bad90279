//! Static detection, guided symbolic execution and dynamic validation run
//! back to back on one program.

use thiserror::Error;

use crate::detect::{analyze, RaceWarning, StaticAnalysis, Status};
use crate::frontend::Program;
use crate::graphs::GraphError;
use crate::symex::{guided_explore, iccfg_for, Budget, SymExecResult};
use crate::vm::{covers_in_order, validate_race, ValidationVerdict, Vm, VmError, DEFAULT_STEP_LIMIT};

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub budget: Budget,
    pub step_limit: u64,
    /// Worker threads for per-warning stages; 0 picks the machine's count.
    pub workers: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            budget: Budget::default(),
            step_limit: DEFAULT_STEP_LIMIT,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Vm(#[from] VmError),
}

/// Outcome of every stage for one static warning.
#[derive(Debug, Clone)]
pub struct WarningRecord {
    pub warning: RaceWarning,
    pub symbolic: SymExecResult,
    pub verdict: Option<ValidationVerdict>,
    /// Replaying the symbolic input reached `ei` and then `ej`.
    pub replay_ok: Option<bool>,
    pub error: Option<String>,
}

impl WarningRecord {
    /// A race or deadlock was reproduced.
    pub fn is_failure(&self) -> bool {
        matches!(
            self.verdict,
            Some(ValidationVerdict::Confirmed { .. } | ValidationVerdict::Deadlock { .. })
        )
    }
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub analysis: StaticAnalysis,
    pub records: Vec<WarningRecord>,
}

impl PipelineRun {
    pub fn failures(&self) -> impl Iterator<Item = &WarningRecord> {
        self.records.iter().filter(|r| r.is_failure())
    }

    pub fn is_clean(&self) -> bool {
        self.failures().next().is_none()
    }
}

fn process(p: &Program, vm: &Vm, wn: &RaceWarning, budget: &Budget) -> WarningRecord {
    let mut rec = WarningRecord {
        warning: wn.clone(),
        symbolic: SymExecResult::Infeasible,
        verdict: None,
        replay_ok: None,
        error: None,
    };
    match iccfg_for(p, wn) {
        Ok(g) => rec.symbolic = guided_explore(p, &g, wn, budget),
        Err(e) => {
            rec.error = Some(e.to_string());
            rec.warning.status = Status::Inconclusive;
            return rec;
        }
    }
    rec.warning.status = match &rec.symbolic {
        SymExecResult::Infeasible => Status::Infeasible,
        SymExecResult::Inconclusive(_) => Status::Inconclusive,
        SymExecResult::Reachable(input) => {
            let verdict = validate_race(vm, wn, input);
            match covers_in_order(vm, wn, input) {
                Ok(ok) => {
                    // A handler blocked on a lock never reaches its access.
                    let blocked = matches!(verdict, Ok(ValidationVerdict::Deadlock { .. }));
                    debug_assert!(ok || blocked, "replay of {wn} does not cover both events");
                    rec.replay_ok = Some(ok);
                }
                Err(e) => rec.error = Some(e.to_string()),
            }
            match verdict {
                Ok(v) => {
                    let s = match v {
                        ValidationVerdict::Confirmed { .. } => Status::Confirmed,
                        ValidationVerdict::Deadlock { .. } => Status::Deadlock,
                        _ => Status::RefutedDynamic,
                    };
                    rec.verdict = Some(v);
                    s
                }
                Err(e) => {
                    rec.error = Some(e.to_string());
                    Status::InputFound
                }
            }
        }
    };
    rec
}

/// Runs every stage on `p`. Warnings are processed in parallel and
/// reported in id order.
pub fn run_pipeline(p: &Program, cfg: &PipelineConfig) -> Result<PipelineRun, PipelineError> {
    let analysis = analyze(p)?;
    let vm = Vm::new(p)?.with_step_limit(cfg.step_limit);
    let ws = &analysis.warnings;
    let workers = match cfg.workers {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    }
    .min(ws.len().max(1));
    let mut records: Vec<Option<WarningRecord>> = vec![None; ws.len()];
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let vm = &vm;
                s.spawn(move || {
                    (w..ws.len())
                        .step_by(workers)
                        .map(|k| (k, process(p, vm, &ws[k], &cfg.budget)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (k, rec) in h.join().expect("pipeline worker panicked") {
                records[k] = Some(rec);
            }
        }
    });
    Ok(PipelineRun {
        analysis,
        records: records.into_iter().map(|r| r.unwrap()).collect(),
    })
}
