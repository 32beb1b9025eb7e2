//! Exhaustive interleaving search with deduplication up to renaming of
//! machine-generated names.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use sha2::{Digest, Sha256};

use crate::runtime::{
    detect_error, enabled, heap_digest, is_terminal, load, Activity, RuntimeError, State, Trace,
    TraceRecord, Transition,
};
use crate::syntax::{format_with, Expr, Name};

pub type CanonicalDigest = [u8; 32];

/// Deterministic serialization of a state with labels renamed `L0, L1, …`
/// and clocks `C0, C1, …` in canonical traversal order.
///
/// Sibling activities are ordered by their shape with machine names erased;
/// clocks by first mention along that order. Ties fall back to the original
/// names, so equal strings always mean isomorphic states, but some
/// isomorphic states may serialize differently.
pub fn canonical_form(s: &State) -> String {
    let mut cx = Canon::default();
    let order = ordered(&s.activities);
    for (l, a) in &order {
        cx.number_labels(l, a);
    }
    for (_, a) in &order {
        cx.number_clocks(s, a);
    }
    let mut rest: Vec<&Name> = s.heap.clocks.keys().filter(|c| !cx.clocks.contains_key(*c)).collect();
    rest.sort_by_key(|c| (clock_shape(s, c), (*c).clone()));
    for c in rest {
        cx.clock(c);
    }

    let mut out = String::from("H{");
    let mut heap: Vec<(String, String)> = s
        .heap
        .iter()
        .map(|(c, cv)| {
            let set = |ls: &std::collections::BTreeSet<Name>| {
                let mut v: Vec<String> = ls.iter().map(|l| cx.rename(l)).collect();
                v.sort();
                v.join(",")
            };
            (
                cx.rename(c),
                format!("({},{{{}}},{{{}}})", cv.phase, set(&cv.registered), set(&cv.quiescent)),
            )
        })
        .collect();
    heap.sort();
    for (c, v) in heap {
        out.push_str(&c);
        out.push(':');
        out.push_str(&v);
        out.push(';');
    }
    out.push('}');
    for (l, a) in &order {
        cx.write_activity(l, a, &mut out);
    }
    out
}

pub fn canonicalize(s: &State) -> CanonicalDigest {
    Sha256::digest(canonical_form(s).as_bytes()).into()
}

fn erase(n: &Name) -> String {
    if n.is_fresh_label_or_clock() {
        "_".to_string()
    } else {
        n.to_string()
    }
}

fn clock_shape(s: &State, c: &Name) -> String {
    match s.heap.get(c) {
        Some(cv) => format!("{}/{}/{}", cv.phase, cv.registered.len(), cv.quiescent.len()),
        None => "-".to_string(),
    }
}

fn shape(a: &Activity) -> String {
    let mut phases: Vec<u64> = a.view.iter().map(|(_, p)| p).collect();
    phases.sort_unstable();
    let mut kids: Vec<String> = a.children.values().map(shape).collect();
    kids.sort();
    format!("{:?}|{}|[{}]", phases, format_with(&a.expr, &|n| erase(n)), kids.join(","))
}

fn ordered(acts: &BTreeMap<Name, Activity>) -> Vec<(&Name, &Activity)> {
    let mut v: Vec<(String, &Name, &Activity)> = acts.iter().map(|(l, a)| (shape(a), l, a)).collect();
    v.sort_by(|x, y| (&x.0, x.1).cmp(&(&y.0, y.1)));
    v.into_iter().map(|(_, l, a)| (l, a)).collect()
}

#[derive(Default)]
struct Canon {
    labels: HashMap<Name, String>,
    clocks: HashMap<Name, String>,
}

impl Canon {
    fn clock(&mut self, c: &Name) {
        if !self.clocks.contains_key(c) {
            let id = format!("C{}", self.clocks.len());
            self.clocks.insert(c.clone(), id);
        }
    }

    fn rename(&self, n: &Name) -> String {
        self.labels
            .get(n)
            .or_else(|| self.clocks.get(n))
            .cloned()
            .unwrap_or_else(|| n.to_string())
    }

    fn number_labels(&mut self, l: &Name, a: &Activity) {
        let id = format!("L{}", self.labels.len());
        self.labels.insert(l.clone(), id);
        for (cl, child) in ordered(&a.children) {
            self.number_labels(cl, child);
        }
    }

    fn number_clocks(&mut self, s: &State, a: &Activity) {
        let mut mentioned = Vec::new();
        a.expr.visit(&mut |e| {
            use crate::syntax::{ExprKind, Value};
            let mut see = |v: &Value| {
                if let Value::Clock(c) = v {
                    mentioned.push(c.clone());
                }
            };
            match &e.kind {
                ExprKind::Val(v) | ExprKind::Resume(v) | ExprKind::Drop(v) => see(v),
                ExprKind::Async { clocks, .. } => clocks.iter().for_each(see),
                _ => {}
            }
        });
        for c in mentioned {
            self.clock(&c);
        }
        let mut held: Vec<(u64, String, &Name)> = a
            .view
            .iter()
            .filter(|(c, _)| !self.clocks.contains_key(*c))
            .map(|(c, p)| (p, clock_shape(s, c), c))
            .collect();
        held.sort();
        for (_, _, c) in held {
            self.clock(c);
        }
        for (_, child) in ordered(&a.children) {
            self.number_clocks(s, child);
        }
    }

    fn write_activity(&self, l: &Name, a: &Activity, out: &mut String) {
        let mut view: Vec<(String, u64)> = a.view.iter().map(|(c, p)| (self.rename(c), p)).collect();
        view.sort();
        out.push('[');
        out.push_str(&self.rename(l));
        out.push('|');
        for (c, p) in view {
            out.push_str(&format!("{c}:{p},"));
        }
        out.push('|');
        out.push_str(&format_with(&a.expr, &|n| self.rename(n)));
        for (cl, child) in ordered(&a.children) {
            self.write_activity(cl, child, out);
        }
        out.push(']');
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExploreConfig {
    pub max_states: usize,
    pub max_depth: usize,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        ExploreConfig {
            max_states: 100_000,
            max_depth: 10_000,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct ExploreReport {
    pub states_visited: usize,
    pub transitions: usize,
    /// One entry per distinct error state, shortest traces first.
    pub errors: Vec<(RuntimeError, Trace)>,
    /// One entry per distinct deadlocked state, shortest traces first.
    pub deadlocks: Vec<Trace>,
    /// Canonical forms of the distinct terminal states.
    pub terminal_states: Vec<String>,
    pub truncated: bool,
    /// Digest matches whose canonical forms differed.
    pub digest_collisions: usize,
}

impl ExploreReport {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty() && self.deadlocks.is_empty() && !self.truncated
    }
}

impl fmt::Display for ExploreReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "states: {}", self.states_visited)?;
        writeln!(f, "transitions: {}", self.transitions)?;
        writeln!(f, "terminal states: {}", self.terminal_states.len())?;
        writeln!(f, "errors: {}", self.errors.len())?;
        writeln!(f, "deadlocks: {}", self.deadlocks.len())?;
        writeln!(f, "truncated: {}", self.truncated)?;
        if let Some((err, trace)) = self.errors.first() {
            writeln!(f, "first error: {err} after {} steps", trace.len())?;
            write_trace(f, trace)?;
        }
        if let Some(trace) = self.deadlocks.first() {
            writeln!(f, "first deadlock after {} steps", trace.len())?;
            write_trace(f, trace)?;
        }
        Ok(())
    }
}

fn write_trace(f: &mut fmt::Formatter<'_>, t: &Trace) -> fmt::Result {
    for r in &t.records {
        writeln!(f, "  {:>3}. {}", r.step, r.transition())?;
    }
    Ok(())
}

struct Node {
    parent: Option<usize>,
    record: Option<(Transition, Vec<Name>, String)>,
    depth: usize,
}

fn trace_to(nodes: &[Node], mut i: usize) -> Trace {
    let mut rev = Vec::new();
    while let Some(p) = nodes[i].parent {
        rev.push(nodes[i].record.clone().expect("non-root nodes carry a record"));
        i = p;
    }
    let records = rev
        .into_iter()
        .rev()
        .enumerate()
        .map(|(step, (t, fresh, heap_digest))| TraceRecord {
            step,
            path: t.path,
            rule: t.rule,
            fresh,
            heap_digest,
        })
        .collect();
    Trace { records }
}

/// Breadth-first search from `load(e)`.
pub fn explore(e: &Expr, cfg: ExploreConfig) -> ExploreReport {
    explore_from(load(e), cfg)
}

pub fn explore_from(start: State, cfg: ExploreConfig) -> ExploreReport {
    let mut report = ExploreReport::default();
    let mut seen: HashMap<CanonicalDigest, Vec<(String, usize)>> = HashMap::new();
    let mut nodes = vec![Node {
        parent: None,
        record: None,
        depth: 0,
    }];
    let form = canonical_form(&start);
    seen.entry(digest_of(&form)).or_default().push((form, 0));
    let mut queue = VecDeque::from([(0usize, start)]);

    while let Some((id, s)) = queue.pop_front() {
        report.states_visited += 1;
        if let Some(err) = detect_error(&s) {
            report.errors.push((err, trace_to(&nodes, id)));
            continue;
        }
        if is_terminal(&s) {
            report.terminal_states.push(canonical_form(&s));
            continue;
        }
        let ts = enabled(&s);
        if ts.is_empty() {
            report.deadlocks.push(trace_to(&nodes, id));
            continue;
        }
        if nodes[id].depth >= cfg.max_depth {
            report.truncated = true;
            continue;
        }
        for t in ts {
            let mut next = s.clone();
            let fresh = next.apply(&t).expect("enabled transitions apply");
            report.transitions += 1;
            let form = canonical_form(&next);
            let bucket = seen.entry(digest_of(&form)).or_default();
            if bucket.iter().any(|(f, _)| *f == form) {
                continue;
            }
            if !bucket.is_empty() {
                report.digest_collisions += 1;
            }
            if nodes.len() >= cfg.max_states {
                report.truncated = true;
                continue;
            }
            let nid = nodes.len();
            bucket.push((form, nid));
            nodes.push(Node {
                parent: Some(id),
                record: Some((t, fresh, heap_digest(&next.heap))),
                depth: nodes[id].depth + 1,
            });
            queue.push_back((nid, next));
        }
    }
    report
}

fn digest_of(form: &str) -> CanonicalDigest {
    Sha256::digest(form.as_bytes()).into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::{replay, Rule};
    use crate::syntax::parse;

    fn fire(s: &mut State, label: &str, rule: Rule) {
        let t = enabled(s)
            .into_iter()
            .find(|t| t.label().as_str() == label && t.rule == rule)
            .unwrap_or_else(|| panic!("{rule} by {label} not enabled in\n{s}"));
        s.apply(&t).unwrap();
    }

    #[test]
    fn unit_has_one_terminal_state() {
        let r = explore(&Expr::unit(), ExploreConfig::default());
        assert_eq!(r.terminal_states.len(), 1);
        assert!(r.errors.is_empty() && r.deadlocks.is_empty() && !r.truncated);
    }

    #[test]
    fn equal_up_to_fresh_names() {
        let e = parse("async [] (let a = makeClock in drop a); let b = makeClock in drop b").unwrap();
        let mut s = load(&e);
        fire(&mut s, "l#0", Rule::RAsync);
        fire(&mut s, "l#0", Rule::RLetVal);
        let mut one = s.clone();
        fire(&mut one, "l#1", Rule::RMake);
        fire(&mut one, "l#0", Rule::RMake);
        let mut two = s;
        fire(&mut two, "l#0", Rule::RMake);
        fire(&mut two, "l#1", Rule::RMake);
        assert_ne!(one, two);
        assert_eq!(canonicalize(&one), canonicalize(&two));
    }

    #[test]
    fn phase_is_significant() {
        let e = parse("let x = makeClock in (resume x; next; drop x)").unwrap();
        let mut s = load(&e);
        fire(&mut s, "l#0", Rule::RMake);
        let mut t = s.clone();
        t.heap.clocks.values_mut().next().unwrap().phase = 1;
        assert_ne!(canonicalize(&s), canonicalize(&t));
        assert_eq!(canonicalize(&load(&e)), canonicalize(&load(&e)));
    }

    #[test]
    fn reported_traces_replay() {
        let e = parse("let x = makeClock in (resume x; resume x; drop x)").unwrap();
        let r = explore(&e, ExploreConfig::default());
        assert_eq!(r.errors.len(), 1);
        let (err, trace) = &r.errors[0];
        assert_eq!(err.kind, crate::runtime::RuntimeErrorKind::EResume);
        let s = replay(&e, trace).unwrap();
        assert_eq!(detect_error(&s).as_ref(), Some(err));
    }

    #[test]
    fn bounds_truncate() {
        let e = parse("let x = makeClock in (async [x] (resume x; next; drop x); resume x; next; drop x)").unwrap();
        let r = explore(&e, ExploreConfig { max_states: 3, max_depth: 100 });
        assert!(r.truncated);
        let r = explore(&e, ExploreConfig { max_states: 1000, max_depth: 2 });
        assert!(r.truncated);
    }
}
