use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{load, Heap, Rule, State, StepError, Transition};
use crate::syntax::{Expr, Name};

/// One executed step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub path: Vec<Name>,
    pub rule: Rule,
    pub fresh: Vec<Name>,
    pub heap_digest: String,
}

impl TraceRecord {
    pub fn transition(&self) -> Transition {
        Transition {
            path: self.path.clone(),
            rule: self.rule,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("trace line {line}: {source}")]
    Malformed {
        line: usize,
        source: serde_json::Error,
    },
    #[error("step {step}: {source}")]
    Step { step: usize, source: StepError },
    #[error("step {step}: expected fresh names {expected:?}, got {found:?}")]
    FreshMismatch {
        step: usize,
        expected: Vec<Name>,
        found: Vec<Name>,
    },
    #[error("step {step}: heap digest mismatch")]
    DigestMismatch { step: usize },
}

/// Short content hash of a heap, with actual clock and label names.
pub fn heap_digest(h: &Heap) -> String {
    let d = Sha256::digest(h.to_string().as_bytes());
    d.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub(crate) fn push(&mut self, t: &Transition, fresh: Vec<Name>, after: &State) {
        self.records.push(TraceRecord {
            step: self.records.len(),
            path: t.path.clone(),
            rule: t.rule,
            fresh,
            heap_digest: heap_digest(&after.heap),
        });
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Trace, ReplayError> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let r = serde_json::from_str(line).map_err(|source| ReplayError::Malformed {
                line: i + 1,
                source,
            })?;
            records.push(r);
        }
        Ok(Trace { records })
    }
}

/// Re-executes a recorded trace from `load(e)`, checking fresh names and
/// heap digests at every step.
pub fn replay(e: &Expr, trace: &Trace) -> Result<State, ReplayError> {
    let mut s = load(e);
    for r in &trace.records {
        let fresh = s.apply(&r.transition()).map_err(|source| ReplayError::Step {
            step: r.step,
            source,
        })?;
        if fresh != r.fresh {
            return Err(ReplayError::FreshMismatch {
                step: r.step,
                expected: r.fresh.clone(),
                found: fresh,
            });
        }
        if heap_digest(&s.heap) != r.heap_digest {
            return Err(ReplayError::DigestMismatch { step: r.step });
        }
    }
    Ok(s)
}
