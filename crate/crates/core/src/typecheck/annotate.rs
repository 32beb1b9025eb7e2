use std::fmt;

use super::types::{ClockSet, EffectResult, Typing};
use crate::syntax::Pos;

/// The `(Γ, R, Q)` holding at one program point.
///
/// Simple expressions are annotated with the state after them, at their
/// first token. `let`, `async` and `finish` get two annotations: the state
/// their body starts in, at their first token, and the state after them, at
/// their last token. Sequencing binders are not shown.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Annotation {
    pub pos: Pos,
    pub gamma: Typing,
    pub reg: ClockSet,
    pub quiesced: ClockSet,
}

impl Annotation {
    /// `{x:clock(alpha1)},{alpha1},emptyset`
    pub fn sets(&self) -> String {
        let visible: Vec<String> = self
            .gamma
            .iter()
            .filter(|(n, _)| !n.is_seq() && !n.is_machine())
            .map(|(n, t)| format!("{n}:{t}"))
            .collect();
        let gamma = if visible.is_empty() {
            "emptyset".to_string()
        } else {
            format!("{{{}}}", visible.join(","))
        };
        format!("{gamma},{},{}", self.reg, self.quiesced)
    }
}

impl fmt::Display for Annotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}  {}", self.pos, self.sets())
    }
}

#[derive(Clone, Debug)]
pub struct CheckedProgram {
    pub result: EffectResult,
    pub annotations: Vec<Annotation>,
}

impl CheckedProgram {
    /// One annotation per line, in evaluation order.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for a in &self.annotations {
            out.push_str(&a.to_string());
            out.push('\n');
        }
        out
    }
}
