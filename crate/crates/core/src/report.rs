//! Versioned JSON report and its plain-text summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ToolConfig;
use crate::detect::{AccessKind, Event, RaceWarning, StaticAnalysis, Status};
use crate::frontend::{print_program, Program};
use crate::pipeline::{PipelineRun, WarningRecord};
use crate::repair::{RepairOutcome, RepairPlan, RepairStatus, Strategy};
use crate::symex::SymExecResult;
use crate::vm::{DeadlockWitness, OracleRace, OracleResult, ValidationVerdict};

pub const SCHEMA: &str = "irqracer-report/1";

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    pub program: ProgramInfo,
    pub config: ToolConfig,
    pub summary: Summary,
    pub warnings: Vec<WarningReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repair: Option<RepairReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProgramInfo {
    pub name: String,
    /// SHA-256 of the canonical printed program.
    pub digest: String,
    pub width: u32,
    pub contexts: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub warnings: usize,
    pub reachable: usize,
    pub infeasible: usize,
    pub inconclusive: usize,
    pub confirmed: usize,
    pub refuted: usize,
    pub deadlocks: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct EventReport {
    pub ctx: String,
    pub routine: String,
    pub line: u32,
    pub access: AccessKind,
}

impl From<&Event> for EventReport {
    fn from(e: &Event) -> Self {
        EventReport {
            ctx: e.ctx.clone(),
            routine: e.loc.routine.clone(),
            line: e.line,
            access: e.access,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WarningReport {
    pub id: usize,
    pub resource: String,
    pub ei: EventReport,
    pub ej: EventReport,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symbolic: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<BTreeMap<String, u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub harmful: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replay_ok: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl WarningReport {
    fn bare(w: &RaceWarning) -> Self {
        WarningReport {
            id: w.id,
            resource: w.resource.clone(),
            ei: (&w.ei).into(),
            ej: (&w.ej).into(),
            status: w.status,
            symbolic: None,
            input: None,
            verdict: None,
            harmful: None,
            replay_ok: None,
            trace: None,
            error: None,
        }
    }

    fn from_record(p: &Program, r: &WarningRecord) -> Self {
        let mut w = WarningReport::bare(&r.warning);
        w.symbolic = Some(match &r.symbolic {
            SymExecResult::Reachable(_) => "Reachable".into(),
            SymExecResult::Infeasible => "Infeasible".into(),
            SymExecResult::Inconclusive(why) => format!("Inconclusive({why:?})"),
        });
        if let SymExecResult::Reachable(input) = &r.symbolic {
            w.input = Some(input.clone());
        }
        if let Some(v) = &r.verdict {
            w.verdict = Some(v.name().into());
            match v {
                ValidationVerdict::Confirmed { trace, harmful } => {
                    w.harmful = Some(*harmful);
                    w.trace = Some(trace.dump(p).lines().map(String::from).collect());
                }
                ValidationVerdict::Deadlock { trace } => {
                    w.trace = Some(trace.dump(p).lines().map(String::from).collect());
                }
                _ => {}
            }
        }
        w.replay_ok = r.replay_ok;
        w.error = r.error.clone();
        w
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanReport {
    pub warning: usize,
    pub strategy: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub patches: Vec<String>,
}

impl From<&RepairPlan> for PlanReport {
    fn from(pl: &RepairPlan) -> Self {
        PlanReport {
            warning: pl.warning.id,
            strategy: pl.strategy.name(),
            reason: match &pl.strategy {
                Strategy::Unrepairable(why) => Some(why.clone()),
                _ => None,
            },
            patches: pl.patches.iter().map(|o| o.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RepairReport {
    pub status: RepairStatus,
    pub plans: Vec<PlanReport>,
    pub widenings: u32,
    pub ops_before_merge: usize,
    pub ops_after_merge: usize,
    pub surviving: Vec<WarningReport>,
    pub patched_digest: String,
    /// Unified diff from the original to the patched program, both printed
    /// canonically.
    pub diff: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub inputs: u64,
    pub runs: u64,
    pub races: Vec<OracleRace>,
    pub deadlocks: Vec<DeadlockWitness>,
}

impl From<&OracleResult> for OracleReport {
    fn from(o: &OracleResult) -> Self {
        OracleReport {
            inputs: o.inputs as u64,
            runs: o.runs,
            races: o.races.keys().cloned().collect(),
            deadlocks: o.deadlocks.keys().cloned().collect(),
        }
    }
}

pub fn digest(p: &Program) -> String {
    let h = Sha256::digest(print_program(p).as_bytes());
    h.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Unified diff between the canonical prints of `a` and `b`.
pub fn program_diff(a: &Program, b: &Program, name: &str) -> String {
    let (x, y) = (print_program(a), print_program(b));
    similar::TextDiff::from_lines(&x, &y)
        .unified_diff()
        .header(name, &format!("{name} (patched)"))
        .to_string()
}

fn summarize(ws: &[WarningReport]) -> Summary {
    let mut s = Summary {
        warnings: ws.len(),
        ..Summary::default()
    };
    for w in ws {
        match w.symbolic.as_deref() {
            Some("Reachable") => s.reachable += 1,
            Some("Infeasible") => s.infeasible += 1,
            Some(_) => s.inconclusive += 1,
            None => {}
        }
        match w.status {
            Status::Confirmed => s.confirmed += 1,
            Status::RefutedDynamic => s.refuted += 1,
            Status::Deadlock => s.deadlocks += 1,
            _ => {}
        }
    }
    s
}

fn sorted(mut ws: Vec<WarningReport>) -> Vec<WarningReport> {
    ws.sort_by_key(|w| w.id);
    ws
}

impl Report {
    fn new(command: &str, name: &str, p: &Program, cfg: &ToolConfig, warnings: Vec<WarningReport>) -> Self {
        let warnings = sorted(warnings);
        Report {
            schema: SCHEMA,
            command: command.into(),
            program: ProgramInfo {
                name: name.into(),
                digest: digest(p),
                width: p.width,
                contexts: p.contexts().map(|r| r.name.clone()).collect(),
            },
            config: cfg.clone(),
            summary: summarize(&warnings),
            warnings,
            repair: None,
            oracle: None,
        }
    }

    pub fn detect(name: &str, p: &Program, sa: &StaticAnalysis, cfg: &ToolConfig) -> Self {
        let ws = sa.warnings.iter().map(WarningReport::bare).collect();
        Report::new("detect", name, p, cfg, ws)
    }

    pub fn validate(name: &str, p: &Program, run: &PipelineRun, cfg: &ToolConfig) -> Self {
        let ws = run.records.iter().map(|r| WarningReport::from_record(p, r)).collect();
        Report::new("validate", name, p, cfg, ws)
    }

    /// Validation of the original program plus the repair outcome.
    pub fn repair(name: &str, p: &Program, run: &PipelineRun, out: &RepairOutcome, cfg: &ToolConfig) -> Self {
        let mut r = Report::validate(name, p, run, cfg);
        r.command = "repair".into();
        let surviving = match &out.final_run {
            Some(fr) => fr
                .failures()
                .map(|rec| WarningReport::from_record(&out.program, rec))
                .collect(),
            None => out.surviving.iter().map(WarningReport::bare).collect(),
        };
        r.repair = Some(RepairReport {
            status: out.status,
            plans: out.plans.iter().map(PlanReport::from).collect(),
            widenings: out.widenings,
            ops_before_merge: out.ops_before_merge,
            ops_after_merge: out.ops_after_merge,
            surviving: sorted(surviving),
            patched_digest: digest(&out.program),
            diff: program_diff(p, &out.program, name),
        });
        r
    }

    pub fn oracle(name: &str, p: &Program, sa: &StaticAnalysis, o: &OracleResult, cfg: &ToolConfig) -> Self {
        let mut r = Report::detect(name, p, sa, cfg);
        r.command = "oracle".into();
        r.oracle = Some(o.into());
        r
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Human-readable summary.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let s = &self.summary;
        let _ = writeln!(out, "{}: {} ({} warnings)", self.command, self.program.name, s.warnings);
        for w in &self.warnings {
            let _ = write!(
                out,
                "  WN{} <({}, {}, {}), ({}, {}, {})> on {}: {:?}",
                w.id, w.ei.ctx, w.ei.line, w.ei.access, w.ej.ctx, w.ej.line, w.ej.access, w.resource, w.status
            );
            if let Some(v) = &w.verdict {
                let _ = write!(out, " [{v}]");
            }
            out.push('\n');
        }
        if self.command != "detect" && self.command != "oracle" {
            let _ = writeln!(
                out,
                "  reachable {}, infeasible {}, inconclusive {}, confirmed {}, refuted {}, deadlocks {}",
                s.reachable, s.infeasible, s.inconclusive, s.confirmed, s.refuted, s.deadlocks
            );
        }
        if let Some(r) = &self.repair {
            let _ = writeln!(
                out,
                "  repair: {:?}, {} widening(s), {} -> {} inserted operations",
                r.status, r.widenings, r.ops_before_merge, r.ops_after_merge
            );
            for pl in &r.plans {
                let _ = write!(out, "    WN{} {}", pl.warning, pl.strategy);
                if let Some(why) = &pl.reason {
                    let _ = write!(out, " ({why})");
                }
                out.push('\n');
            }
            for w in &r.surviving {
                let _ = writeln!(out, "    surviving: WN{} on {}", w.id, w.resource);
            }
        }
        if let Some(o) = &self.oracle {
            let _ = writeln!(
                out,
                "  oracle: {} inputs, {} runs, {} races, {} deadlocks",
                o.inputs,
                o.runs,
                o.races.len(),
                o.deadlocks.len()
            );
        }
        out
    }
}
