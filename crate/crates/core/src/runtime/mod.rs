//! Reference small-step semantics.
//!
//! A state is a heap of clocks plus a forest of named activities. Each clock
//! carries its global phase, the labels registered with it and those that
//! have resumed it in the current phase. Each activity carries its local
//! view of the clocks it holds, the expression it runs, and the activities
//! started by a pending `finish`.
//!
//! Expressions reduce only inside `let` evaluation contexts
//! (`E ::= [] | let x = E in e`), so every activity body is wrapped as
//! `let x#0 = e in x#0` when spawned.

mod redex;
mod run;
mod sched;
mod semantics;
mod trace;
pub mod tree;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{format, Expr, Name, Value};

pub use redex::{contract as contract_redex, redex, Redex};
pub use run::{run, run_observed, run_with, ObserverFailure, RunOutcome};
pub use sched::{FirstPolicy, RandomPolicy, Scheduler, SchedulerPolicy};
pub use semantics::{detect_error, enabled, is_terminal, statuses, step, ActivityStatus};
pub use trace::{heap_digest, replay, ReplayError, Trace, TraceRecord};
pub use tree::Activities;

/// A heap-resident clock: global phase, registered and quiescent labels.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ClockValue {
    pub phase: u64,
    pub registered: BTreeSet<Name>,
    pub quiescent: BTreeSet<Name>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Heap {
    pub clocks: BTreeMap<Name, ClockValue>,
}

impl Heap {
    pub fn get(&self, c: &Name) -> Option<&ClockValue> {
        self.clocks.get(c)
    }

    pub fn contains(&self, c: &Name) -> bool {
        self.clocks.contains_key(c)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &ClockValue)> {
        self.clocks.iter()
    }

    pub fn len(&self) -> usize {
        self.clocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clocks.is_empty()
    }
}

/// An activity's local phase for each clock it holds.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct LocalView {
    pub phases: BTreeMap<Name, u64>,
}

impl LocalView {
    pub fn get(&self, c: &Name) -> Option<u64> {
        self.phases.get(c).copied()
    }

    pub fn contains(&self, c: &Name) -> bool {
        self.phases.contains_key(c)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, u64)> {
        self.phases.iter().map(|(c, p)| (c, *p))
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }
}

impl FromIterator<(Name, u64)> for LocalView {
    fn from_iter<I: IntoIterator<Item = (Name, u64)>>(iter: I) -> Self {
        LocalView {
            phases: iter.into_iter().collect(),
        }
    }
}

/// Views that an activity tree can carry.
pub trait View: Clone + Default {
    fn is_empty(&self) -> bool;
}

impl View for LocalView {
    fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Activity<V = LocalView> {
    pub view: V,
    pub expr: Expr,
    pub children: BTreeMap<Name, Activity<V>>,
}

impl<V: View> Activity<V> {
    pub fn new(view: V, expr: Expr) -> Self {
        Activity {
            view,
            expr,
            children: BTreeMap::new(),
        }
    }

    /// `(∅, v, ∅)`: finished with no clocks and no pending children.
    pub fn is_settled(&self) -> bool {
        self.view.is_empty() && self.expr.is_value() && self.children.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct State {
    pub heap: Heap,
    pub activities: Activities,
    pub fresh_counter: u64,
}

pub const ROOT_LABEL: &str = "l#0";
pub const WRAP_VAR: &str = "x#0";

/// Wraps an activity body so its tail redex sits in a `let` context.
pub fn wrap(e: Expr) -> Expr {
    if e.is_value() {
        e
    } else {
        Expr::let_in(WRAP_VAR, e, Expr::value(Value::Var(Name::new(WRAP_VAR))))
    }
}

/// Initial state: empty heap and one root activity running
/// `let x#0 = e in ()`.
pub fn load(e: &Expr) -> State {
    let root = Activity::new(LocalView::default(), Expr::let_in(WRAP_VAR, e.clone(), Expr::unit()));
    State {
        heap: Heap::default(),
        activities: [(Name::new(ROOT_LABEL), root)].into_iter().collect(),
        fresh_counter: 1,
    }
}

impl State {
    pub(crate) fn fresh(&mut self, prefix: char) -> Name {
        let n = Name::new(format!("{prefix}#{}", self.fresh_counter));
        self.fresh_counter += 1;
        n
    }

    /// The activity at `path`, if any.
    pub fn activity(&self, path: &[Name]) -> Option<&Activity> {
        tree::locate(&self.activities, path).map(|(a, _)| a)
    }

    /// All activities with their paths, in tree order.
    pub fn paths(&self) -> Vec<Vec<Name>> {
        let mut out = Vec::new();
        tree::walk(&self.activities, &mut |path, _, _| out.push(path.to_vec()));
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    RAsync,
    RMake,
    RResume,
    RNext,
    RDrop,
    RFinish,
    RJoin,
    RLetVal,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rule::RAsync => "R-async",
            Rule::RMake => "R-make",
            Rule::RResume => "R-resume",
            Rule::RNext => "R-next",
            Rule::RDrop => "R-drop",
            Rule::RFinish => "R-finish",
            Rule::RJoin => "R-join",
            Rule::RLetVal => "R-let-val",
        };
        f.write_str(s)
    }
}

/// One enabled reduction: the rule and the path from a top-level activity
/// down to the acting one.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Transition {
    pub path: Vec<Name>,
    pub rule: Rule,
}

impl Transition {
    pub fn label(&self) -> &Name {
        self.path.last().expect("transition path is never empty")
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} by {}", self.rule, display_path(&self.path))
    }
}

pub fn display_path(path: &[Name]) -> String {
    path.iter().map(Name::as_str).collect::<Vec<_>>().join("/")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RuntimeErrorKind {
    EAsync,
    EResume,
    EDrop,
    ENext1,
    ENext2,
    EAct,
}

impl fmt::Display for RuntimeErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RuntimeErrorKind::EAsync => "E-async",
            RuntimeErrorKind::EResume => "E-resume",
            RuntimeErrorKind::EDrop => "E-drop",
            RuntimeErrorKind::ENext1 => "E-next1",
            RuntimeErrorKind::ENext2 => "E-next2",
            RuntimeErrorKind::EAct => "E-act",
        };
        f.write_str(s)
    }
}

/// A faulty state: the rule, the offending activity and clock.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RuntimeError {
    pub kind: RuntimeErrorKind,
    pub path: Vec<Name>,
    pub clock: Option<String>,
}

impl fmt::Display for RuntimeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} in activity {}", self.kind, display_path(&self.path))?;
        if let Some(c) = &self.clock {
            write!(f, " on {c}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Finished(Value),
    RuntimeError(RuntimeError),
    Deadlock,
    StepLimit,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Finished(v) => write!(f, "finished with {v}"),
            Verdict::RuntimeError(e) => write!(f, "run-time error: {e}"),
            Verdict::Deadlock => f.write_str("deadlock"),
            Verdict::StepLimit => f.write_str("step limit reached"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("illegal transition: {0}")]
    IllegalTransition(Transition),
}

impl fmt::Display for Heap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let set = |s: &BTreeSet<Name>| {
            s.iter().map(Name::as_str).collect::<Vec<_>>().join(",")
        };
        f.write_str("{")?;
        for (i, (c, v)) in self.clocks.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(
                f,
                "{c}: ({}, {{{}}}, {{{}}})",
                v.phase,
                set(&v.registered),
                set(&v.quiescent)
            )?;
        }
        f.write_str("}")
    }
}

impl fmt::Display for LocalView {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.iter().map(|(c, p)| format!("{c}:{p}")).collect();
        write!(f, "{{{}}}", items.join(", "))
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "heap {}", self.heap)?;
        let mut res = Ok(());
        tree::walk(&self.activities, &mut |path, a, _| {
            if res.is_ok() {
                let indent = "  ".repeat(path.len());
                res = writeln!(
                    f,
                    "{indent}{}: {} {}",
                    path.last().unwrap(),
                    a.view,
                    format(&a.expr)
                );
            }
        });
        res
    }
}
