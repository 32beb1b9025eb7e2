#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use x10clocks_core::{parse, Expr};

pub const TYPABLE: [&str; 5] = ["ex1", "ex2", "ex3", "ex7", "syntax"];
pub const ILL_TYPED: [&str; 3] = ["ex4", "ex5", "ex6"];
pub const CORPUS: [&str; 8] = ["ex1", "ex2", "ex3", "ex4", "ex5", "ex6", "ex7", "syntax"];

pub fn corpus_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("corpus")
        .join(format!("{name}.xc"))
}

pub fn source(name: &str) -> String {
    std::fs::read_to_string(corpus_path(name)).expect("corpus file")
}

pub fn program(name: &str) -> Expr {
    parse(&source(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn golden(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("corpus")
        .join(format!("{name}.annot"));
    std::fs::read_to_string(p).expect("golden file")
}

/// Splits an annotation into tokens, marking singleton names.
fn tokens(sets: &str) -> Vec<(bool, String)> {
    let mut out = Vec::new();
    let mut chars = sets.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_alphanumeric() || c == '_' {
            let mut word = String::new();
            while let Some(&d) = chars.peek() {
                if d.is_alphanumeric() || d == '_' {
                    word.push(d);
                    chars.next();
                } else {
                    break;
                }
            }
            let singleton = word.starts_with("alpha") || word.starts_with("beta");
            out.push((singleton, word));
        } else if !c.is_whitespace() {
            out.push((false, c.to_string()));
            chars.next();
        } else {
            chars.next();
        }
    }
    out
}

type Bijection = (BTreeMap<String, String>, BTreeMap<String, String>);

fn unify(golden: &str, actual: &str, m: &Bijection) -> Option<Bijection> {
    let (g, a) = (tokens(golden), tokens(actual));
    if g.len() != a.len() {
        return None;
    }
    let mut m = m.clone();
    for ((gs, gw), (as_, aw)) in g.iter().zip(&a) {
        if gs != as_ {
            return None;
        }
        if !gs {
            if gw != aw {
                return None;
            }
            continue;
        }
        match (m.0.get(gw), m.1.get(aw)) {
            (Some(x), _) if x != aw => return None,
            (_, Some(y)) if y != gw => return None,
            _ => {
                m.0.insert(gw.clone(), aw.clone());
                m.1.insert(aw.clone(), gw.clone());
            }
        }
    }
    Some(m)
}

/// Parses `L: sets` lines.
fn golden_lines(text: &str) -> Vec<(u32, String)> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let (n, sets) = l.split_once(':').expect("line number");
            (n.trim().parse().expect("line number"), sets.trim().to_string())
        })
        .collect()
}

/// Parses `L:C  sets` lines as produced by `check --annotate`.
fn rendered_lines(text: &str) -> Vec<(u32, String)> {
    text.lines()
        .filter_map(|l| {
            let (pos, sets) = l.split_once("  ")?;
            let line = pos.split(':').next()?.parse().ok()?;
            Some((line, sets.trim().to_string()))
        })
        .collect()
}

/// Every golden line must be matched by some annotation on the same
/// source line, under one renaming of singleton names shared by the whole
/// file. Returns the first golden line that cannot be matched.
pub fn match_annotations(golden: &str, rendered: &str) -> Result<(), String> {
    let want = golden_lines(golden);
    let have = rendered_lines(rendered);
    fn go(i: usize, want: &[(u32, String)], have: &[(u32, String)], m: &Bijection) -> Result<(), usize> {
        let Some((line, sets)) = want.get(i) else {
            return Ok(());
        };
        let mut deepest = i;
        for (l, a) in have {
            if l != line {
                continue;
            }
            if let Some(m2) = unify(sets, a, m) {
                match go(i + 1, want, have, &m2) {
                    Ok(()) => return Ok(()),
                    Err(d) => deepest = deepest.max(d),
                }
            }
        }
        Err(deepest)
    }
    go(0, &want, &have, &Default::default()).map_err(|i| {
        let (line, sets) = &want[i];
        let found: Vec<&str> = have
            .iter()
            .filter(|(l, _)| l == line)
            .map(|(_, s)| s.as_str())
            .collect();
        format!("line {line}: expected {sets}, found {found:?}")
    })
}

use x10clocks_core::runtime::{replay, run_observed, RandomPolicy};
use x10clocks_core::{load, State, Verdict};

/// Structural invariants of a single state.
pub fn state_invariants(s: &State) -> Result<(), String> {
    for (c, cv) in s.heap.iter() {
        if !cv.quiescent.is_subset(&cv.registered) {
            return Err(format!("{c}: quiescent set not within registered set\n{s}"));
        }
        if cv.registered.is_empty() {
            return Err(format!("{c}: no registered activity left but still allocated\n{s}"));
        }
    }
    for path in s.paths() {
        let a = s.activity(&path).expect("listed path");
        for (c, local) in a.view.iter() {
            let Some(cv) = s.heap.get(c) else {
                return Err(format!("{path:?} holds deallocated {c}\n{s}"));
            };
            if cv.phase != local && cv.phase != local + 1 {
                return Err(format!("{path:?} at phase {local} of {c}, global {}\n{s}", cv.phase));
            }
        }
    }
    Ok(())
}

pub struct RunSummary {
    pub verdict: Verdict,
    pub steps: usize,
}

/// Runs `e` under a seeded random schedule, checking the invariants at
/// every state, that a clock disappears exactly when its last holder drops
/// it, and that replaying the trace reproduces the final state.
pub fn check_run(e: &x10clocks_core::Expr, seed: u64, max_steps: usize) -> Result<RunSummary, String> {
    let mut prev: Option<State> = None;
    let mut observe = |s: &State| {
        state_invariants(s)?;
        if let Some(p) = &prev {
            for (c, cv) in p.heap.iter() {
                if !s.heap.contains(c) && cv.registered.len() != 1 {
                    return Err(format!("{c} vanished with holders {:?}", cv.registered));
                }
            }
        }
        prev = Some(s.clone());
        Ok(())
    };
    let mut sched = RandomPolicy::new(seed);
    let out = run_observed(load(e), &mut sched, max_steps, &mut observe).map_err(|f| f.message)?;
    let again = replay(e, &out.trace).map_err(|err| format!("replay failed: {err}"))?;
    if again != out.state {
        return Err("replay reached a different state".into());
    }
    Ok(RunSummary {
        verdict: out.verdict,
        steps: out.trace.len(),
    })
}
