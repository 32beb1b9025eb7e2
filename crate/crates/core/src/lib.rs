//! A clocks-and-finish fragment of X10: parser, singleton-type effect
//! checker, small-step interpreter with run-time error detection, an
//! exhaustive interleaving explorer, and a counter-based clock backend that
//! is checked in lockstep against the set-based reference semantics.

pub mod cli;
pub mod counter;
pub mod explore;
pub mod runtime;
pub mod statecheck;
pub mod syntax;
pub mod testgen;
pub mod typecheck;

pub use runtime::{load, run, State, Transition, Verdict};
pub use syntax::{format, parse, Expr, ExprKind, Name, Value};
pub use typecheck::{check_program, TypeErrorKind, TypeErrorReport};
