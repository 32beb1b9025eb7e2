//! Seeded generator of well-typed programs, for property tests.
//!
//! Programs are built statement by statement while tracking, per held
//! clock, its aliases and whether it was resumed in the current phase, so
//! every choice respects the typing rules. Each activity drops whatever it
//! still holds before it ends.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::syntax::{Expr, ExprKind, Name, Value, SEQ_PREFIX};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenConfig {
    /// Maximum nesting of `async` and `finish` bodies.
    pub max_depth: usize,
    /// Statement budget for the whole program.
    pub max_statements: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_depth: 6,
            max_statements: 24,
        }
    }
}

#[derive(Clone, Debug)]
struct Held {
    aliases: Vec<Name>,
    resumed: bool,
}

struct Gen {
    rng: ChaCha8Rng,
    cfg: GenConfig,
    budget: usize,
    next_var: usize,
    next_seq: usize,
}

pub fn generate(seed: u64, cfg: GenConfig) -> Expr {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        cfg,
        budget: cfg.max_statements,
        next_var: 0,
        next_seq: 0,
    };
    g.block(Vec::new(), 0)
}

#[derive(Clone, Copy, Debug)]
enum Action {
    Make,
    Alias,
    Resume,
    Next,
    Drop,
    Async,
    Finish,
    Unit,
}

impl Gen {
    fn var(&mut self, prefix: &str) -> Name {
        self.next_var += 1;
        Name::new(format!("{prefix}{}", self.next_var))
    }

    fn seq(&mut self, first: Expr, rest: Expr) -> Expr {
        let n = Name::new(format!("{SEQ_PREFIX}{}", self.next_seq));
        self.next_seq += 1;
        Expr::let_in(n, first, rest)
    }

    fn alias_of(&mut self, h: &Held) -> Value {
        Value::Var(h.aliases.choose(&mut self.rng).expect("aliases nonempty").clone())
    }

    fn close(&mut self, held: Vec<Held>) -> Expr {
        let mut drops: Vec<Expr> = Vec::new();
        for h in &held {
            let v = self.alias_of(h);
            drops.push(Expr::synth(ExprKind::Drop(v)));
        }
        match drops.pop() {
            None => Expr::unit(),
            Some(last) => drops.into_iter().rev().fold(last, |acc, d| self.seq(d, acc)),
        }
    }

    fn pick_action(&mut self, held: &[Held], depth: usize) -> Action {
        let mut options = vec![(Action::Make, 3), (Action::Unit, 1)];
        if !held.is_empty() {
            options.push((Action::Alias, 1));
            options.push((Action::Drop, 2));
            if held.iter().any(|h| !h.resumed) {
                options.push((Action::Resume, 5));
            }
        }
        if held.iter().all(|h| h.resumed) {
            options.push((Action::Next, if held.is_empty() { 1 } else { 5 }));
        }
        if depth < self.cfg.max_depth {
            options.push((Action::Async, 4));
            options.push((Action::Finish, 2));
        }
        options
            .choose_weighted(&mut self.rng, |o| o.1)
            .expect("weights positive")
            .0
    }

    fn block(&mut self, mut held: Vec<Held>, depth: usize) -> Expr {
        if self.budget == 0 || self.rng.gen_ratio(1, 8) {
            return self.close(held);
        }
        self.budget -= 1;
        match self.pick_action(&held, depth) {
            Action::Make => {
                let x = self.var("c");
                held.push(Held {
                    aliases: vec![x.clone()],
                    resumed: false,
                });
                let rest = self.block(held, depth);
                Expr::let_in(x, Expr::synth(ExprKind::MakeClock), rest)
            }
            Action::Alias => {
                let i = self.rng.gen_range(0..held.len());
                let v = self.alias_of(&held[i]);
                let y = self.var("a");
                held[i].aliases.push(y.clone());
                let rest = self.block(held, depth);
                Expr::let_in(y, Expr::value(v), rest)
            }
            Action::Resume => {
                let candidates: Vec<usize> = (0..held.len()).filter(|&i| !held[i].resumed).collect();
                let i = *candidates.choose(&mut self.rng).expect("some unresumed clock");
                let v = self.alias_of(&held[i]);
                held[i].resumed = true;
                let rest = self.block(held, depth);
                self.seq(Expr::synth(ExprKind::Resume(v)), rest)
            }
            Action::Next => {
                for h in &mut held {
                    h.resumed = false;
                }
                let rest = self.block(held, depth);
                self.seq(Expr::synth(ExprKind::Next), rest)
            }
            Action::Drop => {
                let i = self.rng.gen_range(0..held.len());
                let h = held.remove(i);
                let v = self.alias_of(&h);
                let rest = self.block(held, depth);
                self.seq(Expr::synth(ExprKind::Drop(v)), rest)
            }
            Action::Async => {
                let passed: Vec<Held> = held
                    .iter()
                    .filter(|_| self.rng.gen_bool(0.6))
                    .cloned()
                    .collect();
                let args: Vec<Value> = passed.iter().map(|h| self.alias_of(h)).collect();
                let body = self.block(passed, depth + 1);
                let rest = self.block(held, depth);
                let spawn = Expr::synth(ExprKind::Async {
                    clocks: args,
                    body: Box::new(body),
                });
                self.seq(spawn, rest)
            }
            Action::Finish => {
                let body = self.block(Vec::new(), depth + 1);
                let rest = self.block(held, depth);
                self.seq(Expr::synth(ExprKind::Finish(Box::new(body))), rest)
            }
            Action::Unit => {
                let rest = self.block(held, depth);
                self.seq(Expr::unit(), rest)
            }
        }
    }
}

/// Depth of `async`/`finish` nesting.
pub fn nesting_depth(e: &Expr) -> usize {
    match &e.kind {
        ExprKind::Let { bound, body, .. } => nesting_depth(bound).max(nesting_depth(body)),
        ExprKind::Async { body, .. } | ExprKind::Finish(body) => 1 + nesting_depth(body),
        _ => 0,
    }
}
