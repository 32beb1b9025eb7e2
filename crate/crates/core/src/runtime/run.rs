use super::sched::{Scheduler, SchedulerPolicy};
use super::semantics::{detect_error, enabled, is_terminal};
use super::{State, Trace, Verdict, ROOT_LABEL};
use crate::syntax::{Name, Value};

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub verdict: Verdict,
    pub trace: Trace,
    /// The state the run stopped in.
    pub state: State,
}

pub fn run(s: State, policy: SchedulerPolicy, max_steps: usize) -> RunOutcome {
    run_with(s, policy.build().as_mut(), max_steps)
}

pub fn run_with(s: State, sched: &mut dyn Scheduler, max_steps: usize) -> RunOutcome {
    match run_observed(s, sched, max_steps, &mut |_| Ok(())) {
        Ok(out) => out,
        Err(_) => unreachable!("the no-op observer never fails"),
    }
}

/// A state rejected by a run observer.
#[derive(Clone, Debug)]
pub struct ObserverFailure {
    pub message: String,
    /// The steps leading to the rejected state.
    pub trace: Trace,
    pub state: State,
}

/// Like [`run_with`], calling `observe` on the initial state and after
/// every step; the run stops at the first state it rejects.
pub fn run_observed(
    mut s: State,
    sched: &mut dyn Scheduler,
    max_steps: usize,
    observe: &mut dyn FnMut(&State) -> Result<(), String>,
) -> Result<RunOutcome, ObserverFailure> {
    let mut trace = Trace::default();
    let verdict = loop {
        if let Err(message) = observe(&s) {
            return Err(ObserverFailure {
                message,
                trace,
                state: s,
            });
        }
        if let Some(e) = detect_error(&s) {
            break Verdict::RuntimeError(e);
        }
        if is_terminal(&s) {
            let root = s
                .activities
                .get(&Name::new(ROOT_LABEL))
                .or_else(|| s.activities.values().next());
            let v = root
                .and_then(|a| a.expr.as_value().cloned())
                .unwrap_or(Value::Unit);
            break Verdict::Finished(v);
        }
        let ts = enabled(&s);
        if ts.is_empty() {
            break Verdict::Deadlock;
        }
        if trace.len() >= max_steps {
            break Verdict::StepLimit;
        }
        let t = &ts[sched.choose(&s, &ts)];
        let fresh = s.apply(t).expect("enabled transitions apply");
        trace.push(t, fresh, &s);
    };
    Ok(RunOutcome {
        verdict,
        trace,
        state: s,
    })
}
