use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use irqracer_core::config::ToolConfig;
use irqracer_core::detect::analyze;
use irqracer_core::frontend::{load, print_program, Program};
use irqracer_core::pipeline::run_pipeline;
use irqracer_core::repair::{repair_and_validate, RepairStatus};
use irqracer_core::report::{program_diff, Report};
use irqracer_core::vm::{exhaustive_oracle, InputSpace, Vm};

/// Race detection, validation and repair for interrupt-driven programs.
#[derive(Parser)]
#[command(name = "irqracer", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// List static race warnings.
    Detect(Common),
    /// Detect, then confirm or refute each warning.
    Validate(Common),
    /// Validate, then patch the program until it is race-free.
    Repair(Common),
    /// Enumerate inputs and interrupt points exhaustively.
    Oracle(Common),
}

#[derive(Args)]
struct Common {
    file: PathBuf,
    /// Symbolic execution timeout in seconds.
    #[arg(long)]
    timeout: Option<u64>,
    /// Largest loop bound for symbolic execution.
    #[arg(long)]
    lmax: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Where `repair` writes the patched program.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the JSON report.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Settings file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input assignments the oracle may enumerate.
    #[arg(long)]
    budget: Option<u64>,
}

impl Common {
    fn tool_config(&self) -> Result<ToolConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => ToolConfig::default(),
        };
        if let Some(t) = self.timeout {
            cfg.timeout_secs = t;
        }
        if let Some(l) = self.lmax {
            cfg.l_max = l;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(b) = self.budget {
            cfg.oracle_budget = b;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn load(&self, cfg: &ToolConfig) -> Result<(String, String, Program)> {
        let src = fs::read_to_string(&self.file).with_context(|| format!("reading {}", self.file.display()))?;
        let mut p = load(&src).map_err(|e| anyhow::anyhow!("{}: {e}", self.file.display()))?;
        cfg.prepare(&mut p)?;
        let name = self
            .file
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        Ok((name, src, p))
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit(args: &Common, report: &Report) -> Result<()> {
    print!("{}", report.render());
    if let Some(path) = &args.json {
        write(path, &report.to_json())?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    let (cmd, args) = match &cli.cmd {
        Cmd::Detect(a) => ("detect", a),
        Cmd::Validate(a) => ("validate", a),
        Cmd::Repair(a) => ("repair", a),
        Cmd::Oracle(a) => ("oracle", a),
    };
    let cfg = args.tool_config()?;
    let (name, src, p) = args.load(&cfg)?;
    execute(cmd, args, &cfg, &name, &src, &p)
}

fn execute(cmd: &str, args: &Common, cfg: &ToolConfig, name: &str, src: &str, p: &Program) -> Result<u8> {
    match cmd {
        "detect" => {
            let sa = analyze(p)?;
            emit(args, &Report::detect(name, p, &sa, cfg))?;
            Ok(u8::from(!sa.warnings.is_empty()))
        }
        "validate" => {
            let run = run_pipeline(p, &cfg.pipeline())?;
            emit(args, &Report::validate(name, p, &run, cfg))?;
            Ok(u8::from(!run.is_clean()))
        }
        "repair" => {
            let run = run_pipeline(p, &cfg.pipeline())?;
            let failing: Vec<_> = run.failures().map(|r| r.warning.clone()).collect();
            let out = repair_and_validate(p, &failing, &cfg.repair())?;
            let report = Report::repair(name, p, &run, &out, cfg);
            emit(args, &report)?;
            let patched = if out.status == RepairStatus::Unchanged {
                src.to_string()
            } else {
                print_program(&out.program)
            };
            match &args.out {
                Some(path) => {
                    write(path, &patched)?;
                    let mut diff_path = path.clone().into_os_string();
                    diff_path.push(".diff");
                    write(Path::new(&diff_path), &program_diff(p, &out.program, name))?;
                }
                None => print!("{patched}"),
            }
            Ok(0)
        }
        _ => {
            let sa = analyze(p)?;
            let vm = Vm::new(p)?.with_step_limit(cfg.step_limit);
            let space = InputSpace::for_program(p);
            let o = exhaustive_oracle(&vm, &space, u128::from(cfg.oracle_budget))?;
            emit(args, &Report::oracle(name, p, &sa, &o, cfg))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
