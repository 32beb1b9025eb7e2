use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::syntax::{Name, Span};

/// A singleton clock type, rendered `alpha<n>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SingletonId(pub u32);

impl fmt::Display for SingletonId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "alpha{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Type {
    Unit,
    Clock(SingletonId),
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Unit => f.write_str("unit"),
            Type::Clock(a) => write!(f, "clock({a})"),
        }
    }
}

/// The typing environment Γ over variables, clock names and activity labels.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Typing(BTreeMap<Name, Type>);

impl Typing {
    pub fn get(&self, name: &Name) -> Option<Type> {
        self.0.get(name).copied()
    }

    /// `Γ, x:τ`. A binding already present for `x` is shadowed.
    pub fn extended(&self, name: Name, ty: Type) -> Typing {
        let mut out = self.clone();
        out.0.insert(name, ty);
        out
    }

    pub fn insert(&mut self, name: Name, ty: Type) {
        self.0.insert(name, ty);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &Type)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<(Name, Type)> for Typing {
    fn from_iter<I: IntoIterator<Item = (Name, Type)>>(iter: I) -> Self {
        Typing(iter.into_iter().collect())
    }
}

/// A set of singleton types: the registered (R) or quiescent (Q) clocks.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ClockSet(BTreeSet<SingletonId>);

impl ClockSet {
    pub fn contains(&self, a: SingletonId) -> bool {
        self.0.contains(&a)
    }

    pub fn with(&self, a: SingletonId) -> ClockSet {
        let mut out = self.clone();
        out.0.insert(a);
        out
    }

    pub fn without(&self, a: SingletonId) -> ClockSet {
        let mut out = self.clone();
        out.0.remove(&a);
        out
    }

    pub fn intersection(&self, other: &ClockSet) -> ClockSet {
        ClockSet(self.0.intersection(&other.0).copied().collect())
    }

    pub fn difference(&self, other: &ClockSet) -> ClockSet {
        ClockSet(self.0.difference(&other.0).copied().collect())
    }

    pub fn is_subset(&self, other: &ClockSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = SingletonId> + '_ {
        self.0.iter().copied()
    }
}

impl FromIterator<SingletonId> for ClockSet {
    fn from_iter<I: IntoIterator<Item = SingletonId>>(iter: I) -> Self {
        ClockSet(iter.into_iter().collect())
    }
}

impl fmt::Display for ClockSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("emptyset");
        }
        let items: Vec<String> = self.0.iter().map(|a| a.to_string()).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

/// The triple `(τ, R', Q')` produced by checking an expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EffectResult {
    pub ty: Type,
    pub reg: ClockSet,
    pub quiesced: ClockSet,
}

impl EffectResult {
    pub fn new(ty: Type, reg: ClockSet, quiesced: ClockSet) -> Self {
        debug_assert!(quiesced.is_subset(&reg));
        EffectResult { ty, reg, quiesced }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeErrorKind {
    UnboundName,
    NotAClock,
    ClockNotRegistered,
    AlreadyQuiescent,
    NotAllResumed,
    UndroppedClocks,
    ClockEscapesFinish,
    DuplicateClockArg,
    /// A finish body ended still registered with clocks it created.
    AsyncBodyLeak,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{}: error: {message}", location.start)]
pub struct TypeErrorReport {
    pub kind: TypeErrorKind,
    pub location: Span,
    pub message: String,
}
