//! Singleton-type effect system.
//!
//! Judgements have the shape `Γ; R; Q ⊢ e : (τ, R', Q')`: `R` holds the
//! clocks the current activity is registered with, `Q ⊆ R` those it has
//! resumed in the current phase. Every `makeClock` gets its own singleton
//! type, so aliases of one clock share a type and effects on one alias are
//! seen through all of them.

mod annotate;
mod types;

use std::collections::BTreeMap;

use crate::syntax::{Expr, ExprKind, Name, Pos, Span, Value};

pub use annotate::{Annotation, CheckedProgram};
pub use types::{ClockSet, EffectResult, SingletonId, Type, TypeErrorKind, TypeErrorReport, Typing};

/// Types a value under `Γ; R`, enforcing that clock types are registered.
pub fn type_of_value(gamma: &Typing, reg: &ClockSet, v: &Value) -> Result<Type, TypeErrorReport> {
    Checker::new(false).value(gamma, reg, v, Span::default())
}

/// Types a sequence of values that must denote pairwise distinct clocks.
pub fn type_of_clock_seq(
    gamma: &Typing,
    reg: &ClockSet,
    vs: &[Value],
) -> Result<Vec<SingletonId>, TypeErrorReport> {
    Checker::new(false).clock_seq(gamma, reg, vs, Span::default())
}

/// Checks `e` under `Γ; R; Q`. Run-time forms (clock references, `join`)
/// are accepted; their types come from `gamma`.
pub fn check_expr(
    gamma: &Typing,
    reg: &ClockSet,
    quiesced: &ClockSet,
    e: &Expr,
) -> Result<EffectResult, TypeErrorReport> {
    let mut c = Checker::new(false);
    c.alloc_past(gamma);
    c.expr(gamma, reg, quiesced, e)
}

/// Checks a whole program from the empty context and requires it to end
/// with no registered clocks. On success returns per-node annotations.
pub fn check_program(e: &Expr) -> Result<CheckedProgram, TypeErrorReport> {
    let mut c = Checker::new(true);
    let empty = ClockSet::default();
    let result = c.expr(&Typing::default(), &empty, &empty, e)?;
    if !result.reg.is_empty() {
        return Err(c.report(
            TypeErrorKind::UndroppedClocks,
            e.span,
            format!(
                "activity {} did not drop {}",
                c.activity_name(),
                c.clock_list(&result.reg, &Typing::default())
            ),
        ));
    }
    Ok(CheckedProgram {
        result,
        annotations: c.annotations.unwrap_or_default(),
    })
}

pub(crate) struct Checker {
    next_alpha: u32,
    next_activity: u32,
    activities: Vec<u32>,
    /// Registered sets hidden by each enclosing `finish`.
    hidden: Vec<ClockSet>,
    /// Source name first bound to each singleton, for diagnostics.
    origin: BTreeMap<SingletonId, Name>,
    annotations: Option<Vec<Annotation>>,
}

impl Checker {
    pub(crate) fn new(annotate: bool) -> Self {
        Checker {
            next_alpha: 1,
            next_activity: 2,
            activities: vec![1],
            hidden: Vec::new(),
            origin: BTreeMap::new(),
            annotations: annotate.then(Vec::new),
        }
    }

    /// Makes sure fresh singletons never collide with ones already in `gamma`.
    pub(crate) fn alloc_past(&mut self, gamma: &Typing) {
        for ty in gamma.iter().map(|(_, t)| t) {
            if let Type::Clock(a) = ty {
                self.next_alpha = self.next_alpha.max(a.0 + 1);
            }
        }
    }

    fn fresh(&mut self) -> SingletonId {
        let a = SingletonId(self.next_alpha);
        self.next_alpha += 1;
        a
    }

    fn activity_name(&self) -> String {
        format!("a{}", self.activities.last().copied().unwrap_or(1))
    }

    fn report(&self, kind: TypeErrorKind, span: Span, message: String) -> TypeErrorReport {
        TypeErrorReport {
            kind,
            location: span,
            message,
        }
    }

    fn clock_name(&self, a: SingletonId, gamma: &Typing) -> String {
        if let Some(n) = self.origin.get(&a) {
            return n.to_string();
        }
        gamma
            .iter()
            .find(|(n, t)| **t == Type::Clock(a) && !n.is_machine() && !n.is_seq())
            .map(|(n, _)| n.to_string())
            .unwrap_or_else(|| format!("clock({a})"))
    }

    fn clock_list(&self, set: &ClockSet, gamma: &Typing) -> String {
        set.iter()
            .map(|a| self.clock_name(a, gamma))
            .collect::<Vec<_>>()
            .join(", ")
    }

    fn note(&mut self, pos: Pos, gamma: &Typing, reg: &ClockSet, q: &ClockSet) {
        if let Some(notes) = &mut self.annotations {
            notes.push(Annotation {
                pos,
                gamma: gamma.clone(),
                reg: reg.clone(),
                quiesced: q.clone(),
            });
        }
    }

    fn value(
        &mut self,
        gamma: &Typing,
        reg: &ClockSet,
        v: &Value,
        span: Span,
    ) -> Result<Type, TypeErrorReport> {
        let name = match v {
            Value::Unit => return Ok(Type::Unit),
            Value::Var(x) | Value::Clock(x) => x,
        };
        let ty = gamma.get(name).ok_or_else(|| {
            self.report(
                TypeErrorKind::UnboundName,
                span,
                format!("unbound name {name}"),
            )
        })?;
        if let Type::Clock(a) = ty {
            if !reg.contains(a) {
                return Err(self.unregistered(name, a, span));
            }
        }
        Ok(ty)
    }

    fn unregistered(&self, name: &Name, a: SingletonId, span: Span) -> TypeErrorReport {
        if self.hidden.iter().any(|h| h.contains(a)) {
            self.report(
                TypeErrorKind::ClockEscapesFinish,
                span,
                format!("clock {name} is not in scope of finish"),
            )
        } else {
            self.report(
                TypeErrorKind::ClockNotRegistered,
                span,
                format!(
                    "clock {name} is not registered with activity {}",
                    self.activity_name()
                ),
            )
        }
    }

    fn clock_of(
        &mut self,
        gamma: &Typing,
        reg: &ClockSet,
        v: &Value,
        span: Span,
    ) -> Result<SingletonId, TypeErrorReport> {
        match self.value(gamma, reg, v, span)? {
            Type::Clock(a) => Ok(a),
            Type::Unit => Err(self.report(
                TypeErrorKind::NotAClock,
                span,
                format!("{v} is not a clock"),
            )),
        }
    }

    fn clock_seq(
        &mut self,
        gamma: &Typing,
        reg: &ClockSet,
        vs: &[Value],
        span: Span,
    ) -> Result<Vec<SingletonId>, TypeErrorReport> {
        let mut out = Vec::with_capacity(vs.len());
        for v in vs {
            let a = self.clock_of(gamma, reg, v, span)?;
            if out.contains(&a) {
                return Err(self.report(
                    TypeErrorKind::DuplicateClockArg,
                    span,
                    format!("clock {} passed to async more than once", self.clock_name(a, gamma)),
                ));
            }
            out.push(a);
        }
        Ok(out)
    }

    pub(crate) fn expr(
        &mut self,
        gamma: &Typing,
        reg: &ClockSet,
        q: &ClockSet,
        e: &Expr,
    ) -> Result<EffectResult, TypeErrorReport> {
        debug_assert!(q.is_subset(reg));
        let span = e.span;
        let result = match &e.kind {
            ExprKind::Val(v) => {
                let ty = self.value(gamma, reg, v, span)?;
                EffectResult::new(ty, reg.clone(), q.clone())
            }
            ExprKind::MakeClock => {
                let a = self.fresh();
                EffectResult::new(Type::Clock(a), reg.with(a), q.clone())
            }
            ExprKind::Resume(v) => {
                let a = self.clock_of(gamma, reg, v, span)?;
                if q.contains(a) {
                    return Err(self.report(
                        TypeErrorKind::AlreadyQuiescent,
                        span,
                        format!(
                            "clock {} already quiescent for activity {}",
                            display_name(v),
                            self.activity_name()
                        ),
                    ));
                }
                EffectResult::new(Type::Unit, reg.clone(), q.with(a))
            }
            ExprKind::Drop(v) => {
                let a = self.clock_of(gamma, reg, v, span)?;
                EffectResult::new(Type::Unit, reg.without(a), q.without(a))
            }
            ExprKind::Next => {
                if q != reg {
                    let missing = reg.difference(q);
                    return Err(self.report(
                        TypeErrorKind::NotAllResumed,
                        span,
                        format!(
                            "activity {} did not resume {} before next",
                            self.activity_name(),
                            self.clock_list(&missing, gamma)
                        ),
                    ));
                }
                EffectResult::new(Type::Unit, reg.clone(), ClockSet::default())
            }
            ExprKind::Async { clocks, body } => {
                let alphas = self.clock_seq(gamma, reg, clocks, span)?;
                let inner_reg: ClockSet = alphas.iter().copied().collect();
                let inner_q = q.intersection(&inner_reg);
                self.note(span.start, gamma, &inner_reg, &inner_q);
                let id = self.next_activity;
                self.next_activity += 1;
                self.activities.push(id);
                let inner = self.expr(gamma, &inner_reg, &inner_q, body)?;
                if !inner.reg.is_empty() {
                    return Err(self.report(
                        TypeErrorKind::UndroppedClocks,
                        Span::new(span.end, span.end),
                        format!(
                            "activity {} did not drop {}",
                            self.activity_name(),
                            self.clock_list(&inner.reg, gamma)
                        ),
                    ));
                }
                self.activities.pop();
                let out = EffectResult::new(Type::Unit, reg.clone(), q.clone());
                self.note(span.end, gamma, &out.reg, &out.quiesced);
                return Ok(out);
            }
            ExprKind::Finish(body) => {
                let empty = ClockSet::default();
                self.note(span.start, gamma, &empty, &empty);
                self.hidden.push(reg.clone());
                let res = self.expr(gamma, &empty, &empty, body);
                self.hidden.pop();
                let inner = res?;
                if !inner.reg.is_empty() {
                    return Err(self.report(
                        TypeErrorKind::AsyncBodyLeak,
                        Span::new(span.end, span.end),
                        format!(
                            "body of finish did not drop {}",
                            self.clock_list(&inner.reg, gamma)
                        ),
                    ));
                }
                let out = EffectResult::new(inner.ty, reg.clone(), q.clone());
                self.note(span.end, gamma, &out.reg, &out.quiesced);
                return Ok(out);
            }
            ExprKind::Let { name, bound, body } => {
                let first = self.expr(gamma, reg, q, bound)?;
                if let (Type::Clock(a), false) = (first.ty, name.is_seq() || name.is_machine()) {
                    self.origin.entry(a).or_insert_with(|| name.clone());
                }
                let inner_gamma = gamma.extended(name.clone(), first.ty);
                if !name.is_seq() {
                    self.note(span.start, &inner_gamma, &first.reg, &first.quiesced);
                }
                let out = self.expr(&inner_gamma, &first.reg, &first.quiesced, body)?;
                if !name.is_seq() {
                    self.note(span.end, gamma, &out.reg, &out.quiesced);
                }
                return Ok(out);
            }
            ExprKind::Join(l) => {
                let ty = gamma.get(l).ok_or_else(|| {
                    self.report(
                        TypeErrorKind::UnboundName,
                        span,
                        format!("unbound activity label {l}"),
                    )
                })?;
                EffectResult::new(ty, reg.clone(), q.clone())
            }
        };
        self.note(span.start, gamma, &result.reg, &result.quiesced);
        Ok(result)
    }
}

fn display_name(v: &Value) -> String {
    match v {
        Value::Unit => "()".into(),
        Value::Var(x) | Value::Clock(x) => x.to_string(),
    }
}
