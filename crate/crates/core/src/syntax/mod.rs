//! Abstract syntax, parser and pretty-printer.
//!
//! Source programs use a small expression language:
//!
//! ```text
//! expr   := seq
//! seq    := bind (";" bind)*
//! bind   := "let" IDENT "=" bind "in" bind | simple
//! simple := "()" | IDENT | "makeClock" | "next" | "resume" IDENT | "drop" IDENT
//!         | "async" "[" (IDENT ("," IDENT)*)? "]" "(" expr ")"
//!         | "finish" "(" expr ")" | "(" expr ")"
//! ```
//!
//! `e1; e2` is sugar for `let _seqN = e1 in e2`. Clock references and
//! `join l` only appear at run time.

mod format;
mod lexer;
mod parser;

use std::borrow::Borrow;
use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use format::{format, format_with};
pub use parser::{parse, ParseError};

/// Prefix of the binders introduced by desugaring `e1; e2`.
pub const SEQ_PREFIX: &str = "_seq";

/// An identifier: variable, activity label or clock name.
///
/// Machine-generated names (`l#3`, `c#4`, `x#0`) contain a `#` and can never
/// be written in source text. Ordering is "natural": a trailing run of
/// digits compares numerically, so `l#2 < l#10`.
#[derive(Clone)]
pub struct Name(Arc<str>);

impl Name {
    pub fn new(s: impl AsRef<str>) -> Self {
        Name(Arc::from(s.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// True for names containing `#`.
    pub fn is_machine(&self) -> bool {
        self.0.contains('#')
    }

    /// True for fresh activity labels and clock names (`l#n`, `c#n`).
    pub fn is_fresh_label_or_clock(&self) -> bool {
        let s = self.as_str();
        (s.starts_with("l#") || s.starts_with("c#"))
            && s.len() > 2
            && s[2..].bytes().all(|b| b.is_ascii_digit())
    }

    /// True for the binders introduced by sequencing sugar.
    pub fn is_seq(&self) -> bool {
        self.0.starts_with(SEQ_PREFIX)
    }

    fn split_numeric(&self) -> (&str, Option<u64>) {
        let s = self.as_str();
        let digits = s.bytes().rev().take_while(u8::is_ascii_digit).count();
        if digits == 0 || digits > 18 {
            return (s, None);
        }
        let (head, tail) = s.split_at(s.len() - digits);
        (head, tail.parse().ok())
    }
}

impl PartialEq for Name {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl Eq for Name {}

impl Hash for Name {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash(state)
    }
}

impl Ord for Name {
    fn cmp(&self, other: &Self) -> Ordering {
        let (ha, na) = self.split_numeric();
        let (hb, nb) = other.split_numeric();
        ha.cmp(hb)
            .then(na.cmp(&nb))
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Name {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Borrow<str> for Name {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Self {
        Name::new(s)
    }
}

impl Serialize for Name {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Name {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d).map(Name::new)
    }
}

/// A 1-based source position.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Source extent of a node; `end` is the start of its last token.
///
/// Spans are positional metadata and never participate in equality or
/// hashing of expressions.
#[derive(Clone, Copy, Debug, Default)]
pub struct Span {
    pub start: Pos,
    pub end: Pos,
}

impl Span {
    pub fn new(start: Pos, end: Pos) -> Self {
        Span { start, end }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

impl Hash for Span {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Unit,
    Var(Name),
    /// Heap clock reference; run time only.
    Clock(Name),
}

impl Value {
    /// The name carried by a variable or clock reference.
    pub fn name(&self) -> Option<&Name> {
        match self {
            Value::Unit => None,
            Value::Var(n) | Value::Clock(n) => Some(n),
        }
    }

    pub fn as_clock(&self) -> Option<&Name> {
        match self {
            Value::Clock(c) => Some(c),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => f.write_str("()"),
            Value::Var(x) => write!(f, "{x}"),
            Value::Clock(c) => write!(f, "clock {c}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExprKind {
    Val(Value),
    Let {
        name: Name,
        bound: Box<Expr>,
        body: Box<Expr>,
    },
    MakeClock,
    Async {
        clocks: Vec<Value>,
        body: Box<Expr>,
    },
    Resume(Value),
    Drop(Value),
    Next,
    Finish(Box<Expr>),
    /// Pending finish waiting on its body activity; run time only.
    Join(Name),
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    /// Expression with an empty span, for machine-built terms.
    pub fn synth(kind: ExprKind) -> Self {
        Expr {
            kind,
            span: Span::default(),
        }
    }

    pub fn value(v: Value) -> Self {
        Expr::synth(ExprKind::Val(v))
    }

    pub fn unit() -> Self {
        Expr::value(Value::Unit)
    }

    pub fn let_in(name: impl Into<Name>, bound: Expr, body: Expr) -> Self {
        Expr::synth(ExprKind::Let {
            name: name.into(),
            bound: Box::new(bound),
            body: Box::new(body),
        })
    }

    pub fn as_value(&self) -> Option<&Value> {
        match &self.kind {
            ExprKind::Val(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_value(&self) -> bool {
        matches!(self.kind, ExprKind::Val(_))
    }

    /// True when the expression contains no run-time-only forms.
    pub fn is_source_level(&self) -> bool {
        let mut ok = true;
        self.visit(&mut |e| match &e.kind {
            ExprKind::Join(_) => ok = false,
            ExprKind::Val(Value::Clock(_))
            | ExprKind::Resume(Value::Clock(_))
            | ExprKind::Drop(Value::Clock(_)) => ok = false,
            ExprKind::Async { clocks, .. } if clocks.iter().any(|c| matches!(c, Value::Clock(_))) => {
                ok = false
            }
            _ => {}
        });
        ok
    }

    /// Pre-order traversal.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Let { bound, body, .. } => {
                bound.visit(f);
                body.visit(f);
            }
            ExprKind::Async { body, .. } | ExprKind::Finish(body) => body.visit(f),
            _ => {}
        }
    }

    /// Free variables (not clock references or labels).
    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        let mut value = |v: &Value, bound: &Vec<Name>| {
            if let Value::Var(x) = v {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
        };
        match &self.kind {
            ExprKind::Val(v) | ExprKind::Resume(v) | ExprKind::Drop(v) => value(v, bound),
            ExprKind::Async { clocks, body } => {
                for c in clocks {
                    value(c, bound);
                }
                body.collect_free(bound, out);
            }
            ExprKind::Let { name, bound: b, body } => {
                b.collect_free(bound, out);
                bound.push(name.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            ExprKind::Finish(body) => body.collect_free(bound, out),
            ExprKind::MakeClock | ExprKind::Next | ExprKind::Join(_) => {}
        }
    }

    fn mentions_binder(&self, x: &Name) -> bool {
        let mut found = false;
        self.visit(&mut |e| {
            if let ExprKind::Let { name, .. } = &e.kind {
                if name == x {
                    found = true;
                }
            }
        });
        found
    }

    /// Capture-avoiding substitution `self[v/x]`.
    pub fn subst(&self, x: &Name, v: &Value) -> Expr {
        let sv = |w: &Value| match w {
            Value::Var(y) if y == x => v.clone(),
            other => other.clone(),
        };
        let kind = match &self.kind {
            ExprKind::Val(w) => ExprKind::Val(sv(w)),
            ExprKind::Resume(w) => ExprKind::Resume(sv(w)),
            ExprKind::Drop(w) => ExprKind::Drop(sv(w)),
            ExprKind::Async { clocks, body } => ExprKind::Async {
                clocks: clocks.iter().map(sv).collect(),
                body: Box::new(body.subst(x, v)),
            },
            ExprKind::Finish(body) => ExprKind::Finish(Box::new(body.subst(x, v))),
            ExprKind::Let { name, bound, body } => {
                let bound = Box::new(bound.subst(x, v));
                if name == x {
                    ExprKind::Let {
                        name: name.clone(),
                        bound,
                        body: body.clone(),
                    }
                } else if matches!(v, Value::Var(y) if y == name)
                    && body.free_vars().contains(x)
                {
                    let fresh = fresh_variant(name, body);
                    let renamed = body.subst(name, &Value::Var(fresh.clone()));
                    ExprKind::Let {
                        name: fresh,
                        bound,
                        body: Box::new(renamed.subst(x, v)),
                    }
                } else {
                    ExprKind::Let {
                        name: name.clone(),
                        bound,
                        body: Box::new(body.subst(x, v)),
                    }
                }
            }
            k @ (ExprKind::MakeClock | ExprKind::Next | ExprKind::Join(_)) => k.clone(),
        };
        Expr {
            kind,
            span: self.span,
        }
    }
}

fn fresh_variant(base: &Name, body: &Expr) -> Name {
    let free = body.free_vars();
    (0u64..)
        .map(|k| Name::new(format!("{base}#{k}")))
        .find(|n| !free.contains(n) && !body.mentions_binder(n))
        .expect("unbounded supply of names")
}
