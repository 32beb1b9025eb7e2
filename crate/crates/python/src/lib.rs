//! Python bindings: parse, check, run, explore and compare programs.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use x10clocks_core::counter::lockstep_compare;
use x10clocks_core::explore::{explore, ExploreConfig};
use x10clocks_core::runtime::{run, SchedulerPolicy};
use x10clocks_core::statecheck::typecheck_state;
use x10clocks_core::{check_program, format, load, parse, Expr, Verdict};

create_exception!(x10clocks, ParseError, PyException);
create_exception!(x10clocks, TypeCheckError, PyException);

fn policy(name: &str, seed: u64) -> PyResult<SchedulerPolicy> {
    match name {
        "first" => Ok(SchedulerPolicy::First),
        "random" => Ok(SchedulerPolicy::Random(seed)),
        other => Err(PyValueError::new_err(format!("unknown policy {other:?}"))),
    }
}

/// A parsed program.
#[pyclass(frozen)]
struct Program {
    expr: Expr,
}

#[pymethods]
impl Program {
    #[new]
    fn new(source: &str) -> PyResult<Self> {
        let expr = parse(source).map_err(|e| ParseError::new_err(e.to_string()))?;
        Ok(Program { expr })
    }

    /// Type-checks the program and returns one `line:col  sets` string per
    /// annotated point.
    fn check(&self) -> PyResult<Vec<String>> {
        let checked = check_program(&self.expr).map_err(|e| TypeCheckError::new_err(e.to_string()))?;
        Ok(checked.annotations.iter().map(|a| a.to_string()).collect())
    }

    fn is_well_typed(&self) -> bool {
        check_program(&self.expr).is_ok()
    }

    fn format(&self) -> String {
        format(&self.expr)
    }

    #[pyo3(signature = (policy="first", seed=0, max_steps=10_000, typed_exec=false))]
    fn run(&self, policy: &str, seed: u64, max_steps: usize, typed_exec: bool) -> PyResult<RunResult> {
        let p = self::policy(policy, seed)?;
        if !typed_exec {
            return Ok(RunResult::from_outcome(run(load(&self.expr), p, max_steps)));
        }
        let mut check = |s: &x10clocks_core::State| typecheck_state(s).map_err(|e| e.to_string());
        match x10clocks_core::runtime::run_observed(load(&self.expr), p.build().as_mut(), max_steps, &mut check) {
            Ok(out) => Ok(RunResult::from_outcome(out)),
            Err(f) => Err(TypeCheckError::new_err(format!(
                "state check failed after {} steps: {}",
                f.trace.len(),
                f.message
            ))),
        }
    }

    #[pyo3(signature = (max_states=100_000, max_depth=10_000))]
    fn explore(&self, max_states: usize, max_depth: usize) -> ExploreResult {
        let r = explore(&self.expr, ExploreConfig { max_states, max_depth });
        ExploreResult {
            states: r.states_visited,
            transitions: r.transitions,
            errors: r.errors.iter().map(|(e, _)| e.to_string()).collect(),
            deadlocks: r.deadlocks.len(),
            terminal_states: r.terminal_states.len(),
            truncated: r.truncated,
            report: r.to_string(),
        }
    }

    /// Number of seeded random schedules on which the counter-based clocks
    /// diverge from the set-based ones.
    #[pyo3(signature = (seeds=100, max_steps=10_000))]
    fn equiv(&self, seeds: u64, max_steps: usize) -> usize {
        (0..seeds)
            .filter(|&s| !lockstep_compare(&self.expr, SchedulerPolicy::Random(s), max_steps).agrees())
            .count()
    }

    fn __repr__(&self) -> String {
        format!("Program({:?})", format(&self.expr))
    }
}

#[pyclass(frozen, get_all)]
struct RunResult {
    /// `finished`, `error`, `deadlock` or `limit`.
    verdict: String,
    /// Error kind such as `E-resume`, when the run failed.
    error_kind: Option<String>,
    steps: usize,
    message: String,
    trace_jsonl: String,
    final_state: String,
}

impl RunResult {
    fn from_outcome(out: x10clocks_core::runtime::RunOutcome) -> Self {
        let (verdict, error_kind) = match &out.verdict {
            Verdict::Finished(_) => ("finished", None),
            Verdict::RuntimeError(e) => ("error", Some(e.kind.to_string())),
            Verdict::Deadlock => ("deadlock", None),
            Verdict::StepLimit => ("limit", None),
        };
        RunResult {
            verdict: verdict.to_string(),
            error_kind,
            steps: out.trace.len(),
            message: out.verdict.to_string(),
            trace_jsonl: out.trace.to_jsonl(),
            final_state: out.state.to_string(),
        }
    }
}

#[pymethods]
impl RunResult {
    fn __repr__(&self) -> String {
        format!("RunResult({}, steps={})", self.message, self.steps)
    }
}

#[pyclass(frozen, get_all)]
struct ExploreResult {
    states: usize,
    transitions: usize,
    errors: Vec<String>,
    deadlocks: usize,
    terminal_states: usize,
    truncated: bool,
    report: String,
}

#[pymethods]
impl ExploreResult {
    fn is_clean(&self) -> bool {
        self.errors.is_empty() && self.deadlocks == 0 && !self.truncated
    }

    fn __repr__(&self) -> String {
        format!(
            "ExploreResult(states={}, errors={}, deadlocks={}, truncated={})",
            self.states,
            self.errors.len(),
            self.deadlocks,
            self.truncated
        )
    }
}

/// Parses and type-checks `source`, returning the annotations.
#[pyfunction]
fn check(source: &str) -> PyResult<Vec<String>> {
    Program::new(source)?.check()
}

#[pymodule]
fn x10clocks(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Program>()?;
    m.add_class::<RunResult>()?;
    m.add_class::<ExploreResult>()?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add("ParseError", m.py().get_type::<ParseError>())?;
    m.add("TypeCheckError", m.py().get_type::<TypeCheckError>())?;
    Ok(())
}
