use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{State, Transition};

/// Picks one of the enabled transitions. `enabled` is never empty.
pub trait Scheduler {
    fn choose(&mut self, state: &State, enabled: &[Transition]) -> usize;
}

/// Always the first transition in tree order.
#[derive(Clone, Copy, Debug, Default)]
pub struct FirstPolicy;

impl Scheduler for FirstPolicy {
    fn choose(&mut self, _: &State, _: &[Transition]) -> usize {
        0
    }
}

/// Uniform choice from a seeded generator.
#[derive(Clone, Debug)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        RandomPolicy {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Scheduler for RandomPolicy {
    fn choose(&mut self, _: &State, enabled: &[Transition]) -> usize {
        self.rng.gen_range(0..enabled.len())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchedulerPolicy {
    First,
    Random(u64),
}

impl SchedulerPolicy {
    pub fn build(self) -> Box<dyn Scheduler> {
        match self {
            SchedulerPolicy::First => Box::new(FirstPolicy),
            SchedulerPolicy::Random(seed) => Box::new(RandomPolicy::new(seed)),
        }
    }
}

impl fmt::Display for SchedulerPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchedulerPolicy::First => f.write_str("first"),
            SchedulerPolicy::Random(seed) => write!(f, "random:{seed}"),
        }
    }
}

impl FromStr for SchedulerPolicy {
    type Err = String;

    /// `first`, `random` (seed 0) or `random:<seed>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "first" => Ok(SchedulerPolicy::First),
            None if s == "random" => Ok(SchedulerPolicy::Random(0)),
            Some(("random", seed)) => seed
                .parse()
                .map(SchedulerPolicy::Random)
                .map_err(|_| format!("bad seed `{seed}`")),
            _ => Err(format!("unknown scheduler `{s}` (use first or random:<seed>)")),
        }
    }
}
