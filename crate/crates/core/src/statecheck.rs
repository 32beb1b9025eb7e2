//! Oracles over run-time states: well-formedness and typability.
//!
//! A state is well formed when every heap clock lists as registered exactly
//! the activities whose local view holds it. Typability rebuilds a typing
//! from the state itself: each heap clock gets its own singleton type, each
//! activity is checked with `R` taken from its view and `Q` from the heap,
//! and must end with both sets empty.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::runtime::{display_path, tree, Activity, State};
use crate::syntax::Name;
use crate::typecheck::{check_expr, ClockSet, SingletonId, Type, TypeErrorReport, Typing};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViolationKind {
    RegisteredMismatch,
    QuiescentNotRegistered,
    DanglingView,
    PhaseLagViolation,
    OrphanChildren,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub witness: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.witness)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WellFormedReport {
    pub violations: Vec<Violation>,
}

impl WellFormedReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

impl fmt::Display for WellFormedReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            return f.write_str("well formed");
        }
        let items: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&items.join("; "))
    }
}

/// All checks, including dangling views and phase lag.
pub fn check_wellformed(s: &State) -> WellFormedReport {
    check_wellformed_with(s, true)
}

/// `extended` enables the dangling-view and phase-lag checks.
pub fn check_wellformed_with(s: &State, extended: bool) -> WellFormedReport {
    let mut out = WellFormedReport::default();
    let mut push = |kind, witness: String| out.violations.push(Violation { kind, witness });

    let mut holders: BTreeMap<&Name, BTreeSet<Name>> = BTreeMap::new();
    tree::walk(&s.activities, &mut |path, a, _| {
        let label = path.last().expect("nonempty path");
        for (c, local) in a.view.iter() {
            holders.entry(c).or_default().insert(label.clone());
            match s.heap.get(c) {
                None if extended => push(
                    ViolationKind::DanglingView,
                    format!("{} holds {c}, which is not in the heap", display_path(path)),
                ),
                Some(cv) if extended && !(cv.phase == local || cv.phase == local + 1) => push(
                    ViolationKind::PhaseLagViolation,
                    format!(
                        "{} is at phase {local} of {c}, whose phase is {}",
                        display_path(path),
                        cv.phase
                    ),
                ),
                _ => {}
            }
        }
        if !a.children.is_empty() {
            let pending = tree::joined_child(a).is_some_and(|l| a.children.contains_key(l));
            if !pending {
                push(
                    ViolationKind::OrphanChildren,
                    format!("{} has children but is not joining", display_path(path)),
                );
            }
        }
    });

    let empty = BTreeSet::new();
    for (c, cv) in s.heap.iter() {
        let held = holders.get(c).unwrap_or(&empty);
        if &cv.registered != held || cv.registered.is_empty() {
            push(
                ViolationKind::RegisteredMismatch,
                format!(
                    "{c} lists {{{}}} as registered but is held by {{{}}}",
                    names(&cv.registered),
                    names(held)
                ),
            );
        }
        if !cv.quiescent.is_subset(&cv.registered) {
            push(
                ViolationKind::QuiescentNotRegistered,
                format!("{c} has quiescent {{{}}}", names(&cv.quiescent)),
            );
        }
    }
    out
}

fn names(s: &BTreeSet<Name>) -> String {
    s.iter().map(Name::as_str).collect::<Vec<_>>().join(",")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StateCheckError {
    #[error("ill-formed state: {0}")]
    IllFormed(WellFormedReport),
    #[error("activity {path} is not typable: {report}")]
    Untypable { path: String, report: TypeErrorReport },
    #[error("activity {path} ends with registered clocks ({sets})")]
    Unfinished { path: String, sets: String },
}

/// Checks that a state is well formed and typable under the typing
/// reconstructed from it.
pub fn typecheck_state(s: &State) -> Result<(), StateCheckError> {
    let wf = check_wellformed(s);
    if !wf.ok() {
        return Err(StateCheckError::IllFormed(wf));
    }
    let mut gamma = Typing::default();
    let mut alpha = BTreeMap::new();
    for (i, c) in s.heap.clocks.keys().enumerate() {
        let a = SingletonId(i as u32 + 1);
        gamma.insert(c.clone(), Type::Clock(a));
        alpha.insert(c.clone(), a);
    }
    let cx = Cx { s, gamma, alpha };
    let mut path = Vec::new();
    for (l, a) in &s.activities {
        cx.activity(l, a, &mut path)?;
    }
    Ok(())
}

struct Cx<'a> {
    s: &'a State,
    gamma: Typing,
    alpha: BTreeMap<Name, SingletonId>,
}

impl Cx<'_> {
    fn activity(&self, label: &Name, a: &Activity, path: &mut Vec<Name>) -> Result<Type, StateCheckError> {
        path.push(label.clone());
        let mut gamma = self.gamma.clone();
        for (cl, child) in &a.children {
            let t = self.activity(cl, child, path)?;
            gamma.insert(cl.clone(), t);
        }
        let mut reg = ClockSet::default();
        let mut quiet = ClockSet::default();
        for (c, local) in a.view.iter() {
            let id = self.alpha[c];
            reg = reg.with(id);
            let cv = &self.s.heap.clocks[c];
            // Behind the global phase means quiescent in the local phase.
            if cv.quiescent.contains(label) || cv.phase == local + 1 {
                quiet = quiet.with(id);
            }
        }
        let here = display_path(path);
        let r = check_expr(&gamma, &reg, &quiet, &a.expr).map_err(|report| {
            StateCheckError::Untypable {
                path: here.clone(),
                report,
            }
        })?;
        if !r.reg.is_empty() || !r.quiesced.is_empty() {
            return Err(StateCheckError::Unfinished {
                path: here,
                sets: format!("{},{}", r.reg, r.quiesced),
            });
        }
        path.pop();
        Ok(r.ty)
    }
}
