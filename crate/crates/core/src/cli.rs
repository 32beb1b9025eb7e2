//! The `x10clocks` command-line tool.
//!
//! Exit codes: 0 success, 1 static type error, 2 run-time error (or a
//! failed oracle, replay or equivalence check), 3 deadlock, 4 step or state
//! limit reached, 5 usage or parse error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::counter::lockstep_compare;
use crate::explore::{explore, ExploreConfig};
use crate::runtime::{
    load, replay, run_observed, SchedulerPolicy, Trace, Verdict,
};
use crate::statecheck::typecheck_state;
use crate::syntax::{format, parse, Expr};
use crate::typecheck::check_program;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Success,
    TypeError,
    RuntimeError,
    Deadlock,
    Limit,
    Usage,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::TypeError => 1,
            ExitStatus::RuntimeError => 2,
            ExitStatus::Deadlock => 3,
            ExitStatus::Limit => 4,
            ExitStatus::Usage => 5,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "x10clocks", version, about = "Check, run and explore X10 clock programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Policy {
    First,
    Random,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Type-check a program.
    Check {
        file: PathBuf,
        /// Print the (Γ, R, Q) holding at each annotated program point.
        #[arg(long)]
        annotate: bool,
    },
    /// Execute a program under one schedule.
    Run {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "first")]
        policy: Policy,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
        /// Write the executed steps as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Check well-formedness and typability of every state.
        #[arg(long)]
        typed_exec: bool,
        /// Skip the static check.
        #[arg(long)]
        unchecked: bool,
    },
    /// Search all interleavings for errors and deadlocks.
    Explore {
        file: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        max_states: usize,
        #[arg(long, default_value_t = 10_000)]
        max_depth: usize,
        #[arg(long)]
        unchecked: bool,
    },
    /// Compare the set-based and counter-based clocks step by step.
    Equiv {
        file: PathBuf,
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
        #[arg(long)]
        unchecked: bool,
    },
    /// Re-execute a recorded trace.
    Replay {
        file: PathBuf,
        #[arg(long)]
        trace: PathBuf,
    },
    /// Pretty-print a program.
    Fmt { file: PathBuf },
}

/// Runs the tool with `args` (including the program name).
pub fn main(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    ExitStatus::Success
                }
                _ => {
                    let _ = write!(err, "{text}");
                    ExitStatus::Usage
                }
            };
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(status) => status,
        Err(Failure(status, msg)) => {
            let _ = writeln!(err, "{msg}");
            status
        }
    }
}

struct Failure(ExitStatus, String);

type Outcome = Result<ExitStatus, Failure>;

fn io(e: std::io::Error) -> Failure {
    Failure(ExitStatus::Usage, format!("error: {e}"))
}

fn load_program(path: &Path) -> Result<Expr, Failure> {
    let src = fs::read_to_string(path)
        .map_err(|e| Failure(ExitStatus::Usage, format!("error: {}: {e}", path.display())))?;
    parse(&src).map_err(|e| Failure(ExitStatus::Usage, format!("{}:{e}", path.display())))
}

fn require_typed(path: &Path, e: &Expr, unchecked: bool) -> Result<(), Failure> {
    if unchecked {
        return Ok(());
    }
    check_program(e)
        .map(|_| ())
        .map_err(|r| Failure(ExitStatus::TypeError, format!("{}:{r}", path.display())))
}

fn verdict_status(v: &Verdict) -> ExitStatus {
    match v {
        Verdict::Finished(_) => ExitStatus::Success,
        Verdict::RuntimeError(_) => ExitStatus::RuntimeError,
        Verdict::Deadlock => ExitStatus::Deadlock,
        Verdict::StepLimit => ExitStatus::Limit,
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    match cmd {
        Command::Check { file, annotate } => {
            let e = load_program(&file)?;
            let checked = check_program(&e)
                .map_err(|r| Failure(ExitStatus::TypeError, format!("{}:{r}", file.display())))?;
            if annotate {
                write!(out, "{}", checked.render()).map_err(io)?;
            }
            writeln!(out, "ok: {}", checked.result.ty).map_err(io)?;
            Ok(ExitStatus::Success)
        }
        Command::Run {
            file,
            policy,
            seed,
            max_steps,
            trace,
            typed_exec,
            unchecked,
        } => {
            let e = load_program(&file)?;
            require_typed(&file, &e, unchecked)?;
            let policy = match policy {
                Policy::First => SchedulerPolicy::First,
                Policy::Random => SchedulerPolicy::Random(seed),
            };
            let mut check = |s: &crate::runtime::State| {
                if typed_exec {
                    typecheck_state(s).map_err(|e| e.to_string())
                } else {
                    Ok(())
                }
            };
            let result = run_observed(load(&e), policy.build().as_mut(), max_steps, &mut check);
            let (status, recorded) = match result {
                Ok(outcome) => {
                    writeln!(out, "{}", outcome.verdict).map_err(io)?;
                    writeln!(out, "steps: {}", outcome.trace.len()).map_err(io)?;
                    (verdict_status(&outcome.verdict), outcome.trace)
                }
                Err(failure) => {
                    writeln!(
                        err,
                        "state check failed after {} steps: {}\n{}",
                        failure.trace.len(),
                        failure.message,
                        failure.state
                    )
                    .map_err(io)?;
                    (ExitStatus::RuntimeError, failure.trace)
                }
            };
            if let Some(path) = trace {
                fs::write(&path, recorded.to_jsonl()).map_err(io)?;
            }
            Ok(status)
        }
        Command::Explore {
            file,
            max_states,
            max_depth,
            unchecked,
        } => {
            let e = load_program(&file)?;
            require_typed(&file, &e, unchecked)?;
            let report = explore(&e, ExploreConfig { max_states, max_depth });
            write!(out, "{report}").map_err(io)?;
            Ok(if !report.errors.is_empty() {
                ExitStatus::RuntimeError
            } else if !report.deadlocks.is_empty() {
                ExitStatus::Deadlock
            } else if report.truncated {
                ExitStatus::Limit
            } else {
                ExitStatus::Success
            })
        }
        Command::Equiv {
            file,
            seeds,
            max_steps,
            unchecked,
        } => {
            let e = load_program(&file)?;
            require_typed(&file, &e, unchecked)?;
            let mut divergent = 0;
            for seed in 0..seeds {
                let r = lockstep_compare(&e, SchedulerPolicy::Random(seed), max_steps);
                if let Some(d) = r.divergence {
                    if divergent == 0 {
                        writeln!(err, "seed {seed}: {d}").map_err(io)?;
                    }
                    divergent += 1;
                }
            }
            writeln!(out, "schedules: {seeds}\ndivergences: {divergent}").map_err(io)?;
            Ok(if divergent == 0 {
                ExitStatus::Success
            } else {
                ExitStatus::RuntimeError
            })
        }
        Command::Replay { file, trace } => {
            let e = load_program(&file)?;
            let text = fs::read_to_string(&trace).map_err(io)?;
            let t = Trace::from_jsonl(&text)
                .map_err(|x| Failure(ExitStatus::Usage, format!("{}: {x}", trace.display())))?;
            let s = replay(&e, &t)
                .map_err(|x| Failure(ExitStatus::RuntimeError, format!("replay failed: {x}")))?;
            writeln!(out, "replayed {} steps", t.len()).map_err(io)?;
            write!(out, "{s}").map_err(io)?;
            Ok(ExitStatus::Success)
        }
        Command::Fmt { file } => {
            let e = load_program(&file)?;
            writeln!(out, "{}", format(&e)).map_err(io)?;
            Ok(ExitStatus::Success)
        }
    }
}
