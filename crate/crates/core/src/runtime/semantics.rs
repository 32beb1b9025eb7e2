use std::collections::{BTreeMap, BTreeSet};

use super::redex::{contract, contract_let, redex, Redex};
use super::tree::{self, apply_at, locate};
use super::{
    wrap, Activity, ClockValue, Heap, LocalView, Rule, RuntimeError, RuntimeErrorKind, State,
    StepError, Transition,
};
use crate::syntax::{Expr, ExprKind, Name, Value};

/// How a single activity stands in a state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ActivityStatus {
    /// A value with an empty view.
    Done,
    Enabled(Rule),
    /// Waiting on other activities (next or join).
    Blocked,
    Faulty(RuntimeErrorKind, Option<String>),
}

/// Where an activity finds clock `c` for transmission: its own view, or
/// the view of an activity it runs a finish body for.
fn holder<'a>(
    c: &Name,
    label: &'a Name,
    a: &'a Activity,
    owners: &[(&'a Name, &'a Activity)],
) -> Option<(&'a Name, u64)> {
    if let Some(p) = a.view.get(c) {
        return Some((label, p));
    }
    owners
        .iter()
        .rev()
        .find_map(|(l, o)| o.view.get(c).map(|p| (*l, p)))
}

fn clock_arg(v: &Value) -> Option<&Name> {
    v.as_clock()
}

fn witness(v: &Value) -> Option<String> {
    v.name().map(|n| n.to_string())
}

pub(crate) fn classify(
    label: &Name,
    a: &Activity,
    owners: &[(&Name, &Activity)],
    heap: &Heap,
) -> ActivityStatus {
    use ActivityStatus::*;
    use RuntimeErrorKind::*;
    let Some(r) = redex(&a.expr) else {
        return match a.view.iter().next() {
            None => Done,
            Some((c, _)) => Faulty(EAct, Some(c.to_string())),
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
                match clock_arg(v) {
                    Some(c) if heap.contains(c) && holder(c, label, a, owners).is_some() => {}
                    _ => return Faulty(EAsync, witness(v)),
                }
            }
            Enabled(Rule::RAsync)
        }
        Redex::Resume(v) => match clock_arg(v) {
            Some(c) => match heap.get(c) {
                Some(cv) if a.view.contains(c) && !cv.quiescent.contains(label) => {
                    Enabled(Rule::RResume)
                }
                _ => Faulty(EResume, witness(v)),
            },
            None => Faulty(EResume, witness(v)),
        },
        Redex::Drop(v) => match clock_arg(v) {
            Some(c) if heap.contains(c) && a.view.contains(c) => Enabled(Rule::RDrop),
            _ => Faulty(EDrop, witness(v)),
        },
        Redex::Next => {
            for (c, local) in a.view.iter() {
                if let Some(cv) = heap.get(c) {
                    if cv.phase == local && !cv.quiescent.contains(label) {
                        return Faulty(ENext1, Some(c.to_string()));
                    }
                }
            }
            if let Some((c, _)) = a.view.iter().find(|(c, _)| !heap.contains(c)) {
                return Faulty(ENext2, Some(c.to_string()));
            }
            let ready = a.view.iter().all(|(c, local)| {
                let cv = &heap.clocks[c];
                (cv.phase == local && cv.registered == cv.quiescent) || cv.phase == local + 1
            });
            if ready {
                Enabled(Rule::RNext)
            } else {
                Blocked
            }
        }
    }
}

/// Status of every activity, in tree order.
pub fn statuses(s: &State) -> Vec<(Vec<Name>, ActivityStatus)> {
    let mut out = Vec::new();
    tree::walk(&s.activities, &mut |path, a, owners| {
        let label = path.last().expect("nonempty path");
        out.push((path.to_vec(), classify(label, a, owners, &s.heap)));
    });
    out
}

/// Enabled transitions in tree order. Erroneous redexes contribute none.
pub fn enabled(s: &State) -> Vec<Transition> {
    statuses(s)
        .into_iter()
        .filter_map(|(path, st)| match st {
            ActivityStatus::Enabled(rule) => Some(Transition { path, rule }),
            _ => None,
        })
        .collect()
}

/// The first run-time error in tree order, if any.
pub fn detect_error(s: &State) -> Option<RuntimeError> {
    statuses(s).into_iter().find_map(|(path, st)| match st {
        ActivityStatus::Faulty(kind, clock) => Some(RuntimeError { kind, path, clock }),
        _ => None,
    })
}

/// All top-level activities are finished values with no clocks.
pub fn is_terminal(s: &State) -> bool {
    s.activities.values().all(Activity::is_settled)
}

/// Applies one transition, returning the successor state.
pub fn step(s: &State, t: &Transition) -> Result<State, StepError> {
    let mut next = s.clone();
    next.apply(t)?;
    Ok(next)
}

fn set_of(l: &Name) -> BTreeSet<Name> {
    [l.clone()].into_iter().collect()
}

impl State {
    /// Applies one transition in place and returns the fresh names it
    /// allocated.
    pub fn apply(&mut self, t: &Transition) -> Result<Vec<Name>, StepError> {
        let illegal = || StepError::IllegalTransition(t.clone());
        let label = t.label().clone();
        let (act, owners) = locate(&self.activities, &t.path).ok_or_else(illegal)?;
        if classify(&label, act, &owners, &self.heap) != ActivityStatus::Enabled(t.rule) {
            return Err(illegal());
        }
        let r = redex(&act.expr).ok_or_else(illegal)?;

        let mut fresh = Vec::new();
        match (t.rule, r) {
            (Rule::RLetVal, _) => {
                apply_at(&mut self.activities, &t.path, |a| {
                    contract_let(&mut a.expr);
                    (vec![], ())
                });
            }
            (Rule::RMake, _) => {
                let c = self.fresh('c');
                fresh.push(c.clone());
                self.heap.clocks.insert(
                    c.clone(),
                    ClockValue {
                        phase: 0,
                        registered: set_of(&label),
                        quiescent: BTreeSet::new(),
                    },
                );
                apply_at(&mut self.activities, &t.path, |a| {
                    a.view.phases.insert(c.clone(), 0);
                    contract(&mut a.expr, Expr::value(Value::Clock(c)));
                    (vec![], ())
                });
            }
            (Rule::RAsync, Redex::Async { clocks, body }) => {
                // Entry phase and quiescence come from whoever holds the clock.
                let mut entries: BTreeMap<Name, (u64, bool)> = BTreeMap::new();
                for v in clocks {
                    let c = clock_arg(v).ok_or_else(illegal)?;
                    let (owner, phase) = holder(c, &label, act, &owners).ok_or_else(illegal)?;
                    let quiet = self.heap.clocks[c].quiescent.contains(owner);
                    entries.insert(c.clone(), (phase, quiet));
                }
                let body = wrap(body.clone());
                let l = self.fresh('l');
                fresh.push(l.clone());
                for (c, (_, quiet)) in &entries {
                    let cv = self.heap.clocks.get_mut(c).expect("checked by classify");
                    cv.registered.insert(l.clone());
                    if *quiet {
                        cv.quiescent.insert(l.clone());
                    }
                }
                let view: LocalView = entries.into_iter().map(|(c, (p, _))| (c, p)).collect();
                let child = Activity::new(view, body);
                apply_at(&mut self.activities, &t.path, |a| {
                    contract(&mut a.expr, Expr::unit());
                    (vec![(l, child)], ())
                });
            }
            (Rule::RResume, Redex::Resume(v)) => {
                let c = clock_arg(v).ok_or_else(illegal)?.clone();
                let local = act.view.get(&c).ok_or_else(illegal)?;
                let cv = self.heap.clocks.get_mut(&c).ok_or_else(illegal)?;
                if cv.phase == local {
                    cv.quiescent.insert(label.clone());
                }
                apply_at(&mut self.activities, &t.path, |a| {
                    contract(&mut a.expr, Expr::unit());
                    (vec![], ())
                });
            }
            (Rule::RNext, _) => {
                let view = act.view.clone();
                for (c, local) in view.iter() {
                    let cv = self.heap.clocks.get_mut(c).ok_or_else(illegal)?;
                    if cv.phase == local && cv.registered == cv.quiescent {
                        cv.phase += 1;
                        cv.quiescent.clear();
                    }
                }
                apply_at(&mut self.activities, &t.path, |a| {
                    for p in a.view.phases.values_mut() {
                        *p += 1;
                    }
                    contract(&mut a.expr, Expr::unit());
                    (vec![], ())
                });
            }
            (Rule::RDrop, Redex::Drop(v)) => {
                let c = clock_arg(v).ok_or_else(illegal)?.clone();
                let cv = self.heap.clocks.get_mut(&c).ok_or_else(illegal)?;
                if cv.registered == set_of(&label) {
                    self.heap.clocks.remove(&c);
                } else {
                    cv.registered.remove(&label);
                    cv.quiescent.remove(&label);
                }
                apply_at(&mut self.activities, &t.path, |a| {
                    a.view.phases.remove(&c);
                    contract(&mut a.expr, Expr::unit());
                    (vec![], ())
                });
            }
            (Rule::RFinish, Redex::Finish(body)) => {
                let body = wrap(body.clone());
                let l0 = self.fresh('l');
                fresh.push(l0.clone());
                apply_at(&mut self.activities, &t.path, |a| {
                    a.children
                        .insert(l0.clone(), Activity::new(LocalView::default(), body));
                    contract(&mut a.expr, Expr::synth(ExprKind::Join(l0)));
                    (vec![], ())
                });
            }
            (Rule::RJoin, Redex::Join(l0)) => {
                let l0 = l0.clone();
                apply_at(&mut self.activities, &t.path, |a| {
                    let v = a.children[&l0]
                        .expr
                        .as_value()
                        .cloned()
                        .expect("checked by classify");
                    a.children.clear();
                    contract(&mut a.expr, Expr::value(v));
                    (vec![], ())
                });
            }
            _ => return Err(illegal()),
        }
        Ok(fresh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::load;
    use crate::syntax::parse;

    fn n(s: &str) -> Name {
        Name::new(s)
    }

    fn run_first(s: &mut State, limit: usize) {
        for _ in 0..limit {
            if detect_error(s).is_some() || is_terminal(s) {
                return;
            }
            let Some(t) = enabled(s).into_iter().next() else { return };
            s.apply(&t).unwrap();
        }
    }

    fn fire(s: &mut State, label: &str, rule: Rule) {
        let t = enabled(s)
            .into_iter()
            .find(|t| t.label().as_str() == label && t.rule == rule)
            .unwrap_or_else(|| panic!("{rule} by {label} not enabled in\n{s}"));
        s.apply(&t).unwrap();
    }

    /// Fires let-val steps of `label` until another rule is next.
    fn settle(s: &mut State, label: &str) {
        while enabled(s)
            .iter()
            .any(|t| t.label().as_str() == label && t.rule == Rule::RLetVal)
        {
            fire(s, label, Rule::RLetVal);
        }
    }

    #[test]
    fn unit_program_finishes_after_one_step() {
        let mut s = load(&Expr::unit());
        assert_eq!(enabled(&s).len(), 1);
        fire(&mut s, "l#0", Rule::RLetVal);
        assert!(is_terminal(&s));
        assert!(enabled(&s).is_empty());
    }

    #[test]
    fn make_registers_the_creator() {
        let mut s = load(&parse("let x = makeClock in drop x").unwrap());
        fire(&mut s, "l#0", Rule::RMake);
        let cv = &s.heap.clocks[&n("c#1")];
        assert_eq!(cv.phase, 0);
        assert_eq!(cv.registered, set_of(&n("l#0")));
        assert!(cv.quiescent.is_empty());
        assert_eq!(s.activities[&n("l#0")].view.get(&n("c#1")), Some(0));
    }

    #[test]
    fn sole_participant_drop_deallocates() {
        let mut s = load(&parse("let x = makeClock in drop x").unwrap());
        run_first(&mut s, 100);
        assert!(is_terminal(&s));
        assert!(s.heap.is_empty());
    }

    fn two_party() -> State {
        // l#0 spawns l#2 on c#1; both then resume and next.
        let src = "let c = makeClock in (async [c] (resume c; next; drop c); resume c; next; drop c)";
        let mut s = load(&parse(src).unwrap());
        fire(&mut s, "l#0", Rule::RMake);
        settle(&mut s, "l#0");
        fire(&mut s, "l#0", Rule::RAsync);
        settle(&mut s, "l#0");
        settle(&mut s, "l#2");
        s
    }

    #[test]
    fn next_blocks_until_all_resumed() {
        let mut s = two_party();
        fire(&mut s, "l#0", Rule::RResume);
        settle(&mut s, "l#0");
        assert!(!enabled(&s)
            .iter()
            .any(|t| t.rule == Rule::RNext), "{s}");
        fire(&mut s, "l#2", Rule::RResume);
        settle(&mut s, "l#2");
        let c = n("c#1");
        assert_eq!(s.heap.clocks[&c].quiescent.len(), 2);
        fire(&mut s, "l#0", Rule::RNext);
        let cv = &s.heap.clocks[&c];
        assert_eq!(cv.phase, 1);
        assert!(cv.quiescent.is_empty());
        assert_eq!(s.activities[&n("l#0")].view.get(&c), Some(1));
        assert_eq!(s.activities[&n("l#2")].view.get(&c), Some(0));
        // l#2 is behind and may follow without a fresh resume.
        fire(&mut s, "l#2", Rule::RNext);
        assert_eq!(s.heap.clocks[&c].phase, 1);
        run_first(&mut s, 100);
        assert!(is_terminal(&s), "{s}");
    }

    #[test]
    fn resume_while_behind_is_discarded() {
        let mut s = two_party();
        fire(&mut s, "l#0", Rule::RResume);
        fire(&mut s, "l#2", Rule::RResume);
        settle(&mut s, "l#0");
        settle(&mut s, "l#2");
        fire(&mut s, "l#0", Rule::RNext);
        let mut s2 = s.clone();
        // Build a resume by l#2 at phase 0 against a phase-1 clock.
        let a = s2.activities.get_mut(&n("l#2")).unwrap();
        a.expr = Expr::let_in(
            "x#0",
            Expr::synth(ExprKind::Resume(Value::Clock(n("c#1")))),
            Expr::unit(),
        );
        let before = s2.heap.clone();
        fire(&mut s2, "l#2", Rule::RResume);
        assert_eq!(s2.heap, before);
    }

    #[test]
    fn second_resume_is_an_error() {
        let mut s = load(&parse("let x = makeClock in (resume x; resume x; drop x)").unwrap());
        run_first(&mut s, 100);
        let err = detect_error(&s).expect("error");
        assert_eq!(err.kind, RuntimeErrorKind::EResume);
        assert_eq!(err.path, vec![n("l#0")]);
    }

    #[test]
    fn next_without_resume_is_an_error() {
        let mut s = load(&parse("let x = makeClock in (next; drop x)").unwrap());
        run_first(&mut s, 100);
        assert_eq!(detect_error(&s).unwrap().kind, RuntimeErrorKind::ENext1);
    }

    #[test]
    fn value_with_clocks_is_an_error() {
        let mut s = load(&parse("let x = makeClock in ()").unwrap());
        run_first(&mut s, 100);
        assert_eq!(detect_error(&s).unwrap().kind, RuntimeErrorKind::EAct);
    }

    #[test]
    fn dangling_view_at_next() {
        let mut s = load(&parse("next").unwrap());
        let a = s.activities.get_mut(&n("l#0")).unwrap();
        a.view.phases.insert(n("c#9"), 0);
        assert_eq!(detect_error(&s).unwrap().kind, RuntimeErrorKind::ENext2);
    }

    #[test]
    fn finish_waits_for_spawned_children() {
        let mut s = load(&parse("finish (async [] (()); ()); ()").unwrap());
        fire(&mut s, "l#0", Rule::RFinish);
        let l0 = &s.activities[&n("l#0")];
        assert_eq!(l0.children.len(), 1);
        assert!(!enabled(&s).iter().any(|t| t.rule == Rule::RJoin));
        run_first(&mut s, 100);
        assert!(is_terminal(&s), "{s}");
    }

    #[test]
    fn illegal_transition_rejected() {
        let mut s = load(&parse("next").unwrap());
        let t = Transition {
            path: vec![n("l#0")],
            rule: Rule::RMake,
        };
        assert!(s.apply(&t).is_err());
        let t = Transition {
            path: vec![n("l#7")],
            rule: Rule::RLetVal,
        };
        assert!(s.apply(&t).is_err());
    }
}
