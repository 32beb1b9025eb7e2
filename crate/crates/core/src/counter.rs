//! Counter-based clocks.
//!
//! Instead of the sets of registered and quiescent activities, a heap clock
//! keeps its phase and the two cardinalities `⟨p, r, q⟩`; a local view entry
//! keeps the local phase and whether the activity has resumed in it,
//! `⟨p, b⟩`. A clock can advance when `q = r`.
//!
//! On advance the quiescent count `q` is reset. A literal reading that
//! resets `r` instead would forget every registration.
//!
//! [`lockstep_compare`] runs this engine next to the set-based one under the
//! same choices and checks that projecting the set state gives the counter
//! state after every step.

use std::collections::BTreeMap;
use std::fmt;

use crate::runtime::tree::{self, apply_at, locate, Activities};
use crate::runtime::{
    load, redex, wrap, Activity, Redex, Rule, RuntimeError, RuntimeErrorKind, Scheduler,
    SchedulerPolicy, State, StepError, Transition, View, ROOT_LABEL,
};
use crate::syntax::{Expr, ExprKind, Name, Value};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct ClockCounters {
    pub phase: u64,
    pub r: u64,
    pub q: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct CounterViewEntry {
    pub phase: u64,
    pub resumed: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct CounterView {
    pub entries: BTreeMap<Name, CounterViewEntry>,
}

impl View for CounterView {
    fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CounterState {
    pub heap: BTreeMap<Name, ClockCounters>,
    pub activities: Activities<CounterView>,
    pub fresh_counter: u64,
}

/// The counter state corresponding to a set-based state.
pub fn project(s: &State) -> CounterState {
    fn act(label: &Name, a: &Activity, s: &State) -> Activity<CounterView> {
        let entries = a
            .view
            .iter()
            .map(|(c, local)| {
                let resumed = s
                    .heap
                    .get(c)
                    .is_some_and(|cv| cv.quiescent.contains(label) || local < cv.phase);
                (c.clone(), CounterViewEntry { phase: local, resumed })
            })
            .collect();
        Activity {
            view: CounterView { entries },
            expr: a.expr.clone(),
            children: a.children.iter().map(|(l, c)| (l.clone(), act(l, c, s))).collect(),
        }
    }
    CounterState {
        heap: s
            .heap
            .iter()
            .map(|(c, cv)| {
                let counters = ClockCounters {
                    phase: cv.phase,
                    r: cv.registered.len() as u64,
                    q: cv.quiescent.len() as u64,
                };
                (c.clone(), counters)
            })
            .collect(),
        activities: s.activities.iter().map(|(l, a)| (l.clone(), act(l, a, s))).collect(),
        fresh_counter: s.fresh_counter,
    }
}

/// Counter-based counterpart of [`crate::runtime::ActivityStatus`].
#[derive(Clone, Debug, PartialEq, Eq)]
enum Status {
    Done,
    Enabled(Rule),
    Blocked,
    Faulty(RuntimeErrorKind, Option<String>),
}

type Owners<'a> = [(&'a Name, &'a Activity<CounterView>)];

fn holder(c: &Name, a: &Activity<CounterView>, owners: &Owners<'_>) -> Option<CounterViewEntry> {
    a.view
        .entries
        .get(c)
        .or_else(|| owners.iter().rev().find_map(|(_, o)| o.view.entries.get(c)))
        .copied()
}

fn witness(v: &Value) -> Option<String> {
    v.name().map(|n| n.to_string())
}

impl CounterState {
    pub fn load(e: &Expr) -> CounterState {
        project(&load(e))
    }

    fn classify(&self, a: &Activity<CounterView>, owners: &Owners<'_>) -> Status {
        use RuntimeErrorKind::*;
        use Status::*;
        let Some(r) = redex(&a.expr) else {
            return match a.view.entries.keys().next() {
                None => Done,
                Some(c) => Faulty(EAct, Some(c.to_string())),
            };
        };
        match r {
            Redex::LetVal { .. } => Enabled(Rule::RLetVal),
            Redex::Make => Enabled(Rule::RMake),
            Redex::Finish(_) => Enabled(Rule::RFinish),
            Redex::Join(l0) => {
                if a.children.contains_key(l0) && a.children.values().all(Activity::is_settled) {
                    Enabled(Rule::RJoin)
                } else {
                    Blocked
                }
            }
            Redex::Async { clocks, .. } => {
                for v in clocks {
                    match v.as_clock() {
                        Some(c) if self.heap.contains_key(c) && holder(c, a, owners).is_some() => {}
                        _ => return Faulty(EAsync, witness(v)),
                    }
                }
                Enabled(Rule::RAsync)
            }
            Redex::Resume(v) => match v.as_clock() {
                Some(c) => match a.view.entries.get(c) {
                    Some(entry) if self.heap.contains_key(c) && !entry.resumed => {
                        Enabled(Rule::RResume)
                    }
                    _ => Faulty(EResume, witness(v)),
                },
                None => Faulty(EResume, witness(v)),
            },
            Redex::Drop(v) => match v.as_clock() {
                Some(c) if self.heap.contains_key(c) && a.view.entries.contains_key(c) => {
                    Enabled(Rule::RDrop)
                }
                _ => Faulty(EDrop, witness(v)),
            },
            Redex::Next => {
                for (c, entry) in &a.view.entries {
                    if let Some(k) = self.heap.get(c) {
                        if k.phase == entry.phase && !entry.resumed {
                            return Faulty(ENext1, Some(c.to_string()));
                        }
                    }
                }
                if let Some(c) = a.view.entries.keys().find(|c| !self.heap.contains_key(*c)) {
                    return Faulty(ENext2, Some(c.to_string()));
                }
                let ready = a.view.entries.iter().all(|(c, entry)| {
                    let k = &self.heap[c];
                    (k.phase == entry.phase && k.q == k.r) || k.phase == entry.phase + 1
                });
                if ready {
                    Enabled(Rule::RNext)
                } else {
                    Blocked
                }
            }
        }
    }

    fn statuses(&self) -> Vec<(Vec<Name>, Status)> {
        let mut out = Vec::new();
        tree::walk(&self.activities, &mut |path, a, owners| {
            out.push((path.to_vec(), self.classify(a, owners)));
        });
        out
    }

    pub fn enabled(&self) -> Vec<Transition> {
        self.statuses()
            .into_iter()
            .filter_map(|(path, st)| match st {
                Status::Enabled(rule) => Some(Transition { path, rule }),
                _ => None,
            })
            .collect()
    }

    pub fn detect_error(&self) -> Option<RuntimeError> {
        self.statuses().into_iter().find_map(|(path, st)| match st {
            Status::Faulty(kind, clock) => Some(RuntimeError { kind, path, clock }),
            _ => None,
        })
    }

    pub fn is_terminal(&self) -> bool {
        self.activities.values().all(Activity::is_settled)
    }

    fn fresh(&mut self, prefix: char) -> Name {
        let n = Name::new(format!("{prefix}#{}", self.fresh_counter));
        self.fresh_counter += 1;
        n
    }

    /// Applies one transition in place and returns the fresh names it
    /// allocated.
    pub fn apply(&mut self, t: &Transition) -> Result<Vec<Name>, StepError> {
        let illegal = || StepError::IllegalTransition(t.clone());
        let (act, owners) = locate(&self.activities, &t.path).ok_or_else(illegal)?;
        if self.classify(act, &owners) != Status::Enabled(t.rule) {
            return Err(illegal());
        }
        let r = redex(&act.expr).ok_or_else(illegal)?;
        let mut fresh = Vec::new();
        let contract = |with: Expr| {
            move |a: &mut Activity<CounterView>| {
                crate::runtime::contract_redex(&mut a.expr, with);
                (vec![], ())
            }
        };
        match (t.rule, r) {
            (Rule::RLetVal, Redex::LetVal { name, value, body }) => {
                let next = body.subst(name, value);
                apply_at(&mut self.activities, &t.path, contract(next));
            }
            (Rule::RMake, _) => {
                let c = self.fresh('c');
                fresh.push(c.clone());
                self.heap.insert(c.clone(), ClockCounters { phase: 0, r: 1, q: 0 });
                apply_at(&mut self.activities, &t.path, |a| {
                    a.view.entries.insert(c.clone(), CounterViewEntry::default());
                    crate::runtime::contract_redex(&mut a.expr, Expr::value(Value::Clock(c)));
                    (vec![], ())
                });
            }
            (Rule::RAsync, Redex::Async { clocks, body }) => {
                let mut entries = BTreeMap::new();
                for v in clocks {
                    let c = v.as_clock().ok_or_else(illegal)?;
                    entries.insert(c.clone(), holder(c, act, &owners).ok_or_else(illegal)?);
                }
                let body = wrap(body.clone());
                let l = self.fresh('l');
                fresh.push(l.clone());
                for (c, entry) in &entries {
                    let k = self.heap.get_mut(c).expect("checked by classify");
                    k.r += 1;
                    if entry.resumed && entry.phase == k.phase {
                        k.q += 1;
                    }
                }
                let child = Activity::new(CounterView { entries }, body);
                apply_at(&mut self.activities, &t.path, |a| {
                    crate::runtime::contract_redex(&mut a.expr, Expr::unit());
                    (vec![(l, child)], ())
                });
            }
            (Rule::RResume, Redex::Resume(v)) => {
                let c = v.as_clock().ok_or_else(illegal)?.clone();
                let local = act.view.entries[&c].phase;
                let k = self.heap.get_mut(&c).ok_or_else(illegal)?;
                let in_sync = k.phase == local;
                if in_sync {
                    k.q += 1;
                }
                apply_at(&mut self.activities, &t.path, |a| {
                    if in_sync {
                        a.view.entries.get_mut(&c).expect("held").resumed = true;
                    }
                    crate::runtime::contract_redex(&mut a.expr, Expr::unit());
                    (vec![], ())
                });
            }
            (Rule::RNext, _) => {
                let view = act.view.entries.clone();
                for (c, entry) in &view {
                    let k = self.heap.get_mut(c).ok_or_else(illegal)?;
                    if k.phase == entry.phase && k.q == k.r {
                        k.phase += 1;
                        k.q = 0;
                    }
                }
                apply_at(&mut self.activities, &t.path, |a| {
                    for entry in a.view.entries.values_mut() {
                        entry.phase += 1;
                        entry.resumed = false;
                    }
                    crate::runtime::contract_redex(&mut a.expr, Expr::unit());
                    (vec![], ())
                });
            }
            (Rule::RDrop, Redex::Drop(v)) => {
                let c = v.as_clock().ok_or_else(illegal)?.clone();
                let entry = act.view.entries[&c];
                let k = self.heap.get_mut(&c).ok_or_else(illegal)?;
                if k.r == 1 {
                    self.heap.remove(&c);
                } else {
                    k.r -= 1;
                    if entry.resumed && entry.phase == k.phase {
                        k.q -= 1;
                    }
                }
                apply_at(&mut self.activities, &t.path, |a| {
                    a.view.entries.remove(&c);
                    crate::runtime::contract_redex(&mut a.expr, Expr::unit());
                    (vec![], ())
                });
            }
            (Rule::RFinish, Redex::Finish(body)) => {
                let body = wrap(body.clone());
                let l0 = self.fresh('l');
                fresh.push(l0.clone());
                apply_at(&mut self.activities, &t.path, |a| {
                    a.children.insert(l0.clone(), Activity::new(CounterView::default(), body));
                    crate::runtime::contract_redex(&mut a.expr, Expr::synth(ExprKind::Join(l0)));
                    (vec![], ())
                });
            }
            (Rule::RJoin, Redex::Join(l0)) => {
                let v = act.children[l0].expr.as_value().cloned().ok_or_else(illegal)?;
                apply_at(&mut self.activities, &t.path, |a| {
                    a.children.clear();
                    crate::runtime::contract_redex(&mut a.expr, Expr::value(v));
                    (vec![], ())
                });
            }
            _ => return Err(illegal()),
        }
        Ok(fresh)
    }
}

impl fmt::Display for CounterState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let heap: Vec<String> = self
            .heap
            .iter()
            .map(|(c, k)| format!("{c}: <{},{},{}>", k.phase, k.r, k.q))
            .collect();
        writeln!(f, "heap {{{}}}", heap.join(", "))?;
        let mut res = Ok(());
        tree::walk(&self.activities, &mut |path, a, _| {
            if res.is_ok() {
                let view: Vec<String> = a
                    .view
                    .entries
                    .iter()
                    .map(|(c, e)| format!("{c}:<{},{}>", e.phase, e.resumed))
                    .collect();
                res = writeln!(
                    f,
                    "{}{}: {{{}}} {}",
                    "  ".repeat(path.len()),
                    path.last().unwrap(),
                    view.join(", "),
                    crate::syntax::format(&a.expr)
                );
            }
        });
        res
    }
}

/// Outcome of one lockstep run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LockstepReport {
    pub steps: usize,
    pub verdict: String,
    pub divergence: Option<Divergence>,
}

impl LockstepReport {
    pub fn agrees(&self) -> bool {
        self.divergence.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Divergence {
    pub step: usize,
    pub detail: String,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "diverged at step {}: {}", self.step, self.detail)
    }
}

/// Runs both engines under the same choices from `load(e)`.
pub fn lockstep_compare(e: &Expr, policy: SchedulerPolicy, max_steps: usize) -> LockstepReport {
    lockstep_with(e, policy.build().as_mut(), max_steps)
}

pub fn lockstep_with(e: &Expr, sched: &mut dyn Scheduler, max_steps: usize) -> LockstepReport {
    let mut s = load(e);
    let mut k = CounterState::load(e);
    let diverge = |step, detail: String, verdict: &str| LockstepReport {
        steps: step,
        verdict: verdict.to_string(),
        divergence: Some(Divergence { step, detail }),
    };
    for step in 0.. {
        let projected = project(&s);
        if projected != k {
            return diverge(
                step,
                format!("projection\n{projected}differs from counter state\n{k}"),
                "diverged",
            );
        }
        let (e1, e2) = (crate::runtime::detect_error(&s), k.detect_error());
        if e1 != e2 {
            return diverge(step, format!("errors differ: {e1:?} vs {e2:?}"), "diverged");
        }
        if let Some(err) = e1 {
            return done(step, format!("run-time error: {err}"));
        }
        if crate::runtime::is_terminal(&s) != k.is_terminal() {
            return diverge(step, "termination differs".into(), "diverged");
        }
        if k.is_terminal() {
            let v = s
                .activities
                .get(&Name::new(ROOT_LABEL))
                .and_then(|a| a.expr.as_value().cloned())
                .unwrap_or(Value::Unit);
            return done(step, format!("finished with {v}"));
        }
        let (t1, t2) = (crate::runtime::enabled(&s), k.enabled());
        if t1 != t2 {
            return diverge(step, format!("enabled sets differ: {t1:?} vs {t2:?}"), "diverged");
        }
        if t1.is_empty() {
            return done(step, "deadlock".into());
        }
        if step >= max_steps {
            return done(step, "step limit reached".into());
        }
        let t = &t1[sched.choose(&s, &t1)];
        let f1 = s.apply(t).expect("enabled");
        match k.apply(t) {
            Ok(f2) if f1 == f2 => {}
            other => {
                return diverge(step, format!("applying {t}: fresh {f1:?} vs {other:?}"), "diverged")
            }
        }
    }
    unreachable!()
}

fn done(steps: usize, verdict: String) -> LockstepReport {
    LockstepReport {
        steps,
        verdict,
        divergence: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    fn fire(k: &mut CounterState, label: &str, rule: Rule) {
        let t = k
            .enabled()
            .into_iter()
            .find(|t| t.label().as_str() == label && t.rule == rule)
            .unwrap_or_else(|| panic!("{rule} by {label} not enabled in\n{k}"));
        k.apply(&t).unwrap();
    }

    fn settle(k: &mut CounterState, label: &str) {
        while k
            .enabled()
            .iter()
            .any(|t| t.label().as_str() == label && t.rule == Rule::RLetVal)
        {
            fire(k, label, Rule::RLetVal);
        }
    }

    #[test]
    fn two_participants_one_advances() {
        let src = "let c = makeClock in (async [c] (resume c; next; drop c); resume c; next; drop c)";
        let mut k = CounterState::load(&parse(src).unwrap());
        fire(&mut k, "l#0", Rule::RMake);
        settle(&mut k, "l#0");
        fire(&mut k, "l#0", Rule::RAsync);
        settle(&mut k, "l#0");
        settle(&mut k, "l#2");
        fire(&mut k, "l#0", Rule::RResume);
        fire(&mut k, "l#2", Rule::RResume);
        settle(&mut k, "l#0");
        fire(&mut k, "l#0", Rule::RNext);
        let c = Name::new("c#1");
        assert_eq!(k.heap[&c], ClockCounters { phase: 1, r: 2, q: 0 });
        let view = |l: &str| k.activities[&Name::new(l)].view.entries[&c];
        assert_eq!(view("l#0"), CounterViewEntry { phase: 1, resumed: false });
        assert_eq!(view("l#2"), CounterViewEntry { phase: 0, resumed: true });
    }

    #[test]
    fn sole_drop_deletes() {
        let mut k = CounterState::load(&parse("let c = makeClock in drop c").unwrap());
        while let Some(t) = k.enabled().into_iter().next() {
            k.apply(&t).unwrap();
        }
        assert!(k.heap.is_empty() && k.is_terminal());
    }

    #[test]
    fn lockstep_agrees_on_small_programs() {
        for src in [
            "()",
            "let x = makeClock in (resume x; async [x] (next; drop x); drop x)",
            "let x = makeClock in (resume x; resume x; drop x)",
        ] {
            let e = parse(src).unwrap();
            for seed in 0..20 {
                let r = lockstep_compare(&e, SchedulerPolicy::Random(seed), 1000);
                assert!(r.agrees(), "{src}: {:?}", r.divergence);
            }
        }
    }
}
