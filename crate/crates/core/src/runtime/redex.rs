//! Decomposition of an activity body into evaluation context and redex.

use crate::syntax::{Expr, ExprKind, Name, Value};

/// The next reducible subterm of an activity body.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Redex<'a> {
    /// `let x = v in e`
    LetVal {
        name: &'a Name,
        value: &'a Value,
        body: &'a Expr,
    },
    Make,
    Async {
        clocks: &'a [Value],
        body: &'a Expr,
    },
    Resume(&'a Value),
    Drop(&'a Value),
    Next,
    Finish(&'a Expr),
    Join(&'a Name),
}

enum Step {
    Here,
    IntoLet,
    Bound,
}

fn descend(e: &Expr) -> Step {
    match &e.kind {
        ExprKind::Let { bound, .. } => match bound.kind {
            ExprKind::Val(_) => Step::Here,
            ExprKind::Let { .. } => Step::IntoLet,
            _ => Step::Bound,
        },
        _ => Step::Here,
    }
}

/// The node holding the redex: a `let` with a value bound, or an operation.
pub(crate) fn focus(e: &Expr) -> &Expr {
    match (descend(e), &e.kind) {
        (Step::IntoLet, ExprKind::Let { bound, .. }) => focus(bound),
        (Step::Bound, ExprKind::Let { bound, .. }) => bound,
        _ => e,
    }
}

pub(crate) fn focus_mut(e: &mut Expr) -> &mut Expr {
    match descend(e) {
        Step::Here => e,
        Step::IntoLet => match &mut e.kind {
            ExprKind::Let { bound, .. } => focus_mut(bound),
            _ => unreachable!(),
        },
        Step::Bound => match &mut e.kind {
            ExprKind::Let { bound, .. } => bound,
            _ => unreachable!(),
        },
    }
}

/// The redex of `e`, or `None` when `e` is a value.
pub fn redex(e: &Expr) -> Option<Redex<'_>> {
    let f = focus(e);
    Some(match &f.kind {
        ExprKind::Val(_) => return None,
        ExprKind::Let { name, bound, body } => match &bound.kind {
            ExprKind::Val(value) => Redex::LetVal { name, value, body },
            _ => unreachable!("focus stops only at value-bound lets"),
        },
        ExprKind::MakeClock => Redex::Make,
        ExprKind::Async { clocks, body } => Redex::Async { clocks, body },
        ExprKind::Resume(v) => Redex::Resume(v),
        ExprKind::Drop(v) => Redex::Drop(v),
        ExprKind::Next => Redex::Next,
        ExprKind::Finish(body) => Redex::Finish(body),
        ExprKind::Join(l) => Redex::Join(l),
    })
}

/// Replaces the redex node of `e` with `with`.
pub fn contract(e: &mut Expr, with: Expr) {
    *focus_mut(e) = with;
}

/// Contracts a `let x = v in e` redex by substitution.
pub(crate) fn contract_let(e: &mut Expr) {
    let node = focus_mut(e);
    let next = match &node.kind {
        ExprKind::Let { name, bound, body } => match bound.as_value() {
            Some(v) => body.subst(name, v),
            None => return,
        },
        _ => return,
    };
    *node = next;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    #[test]
    fn redex_in_nested_bound() {
        let e = Expr::let_in("x#0", parse("let x = makeClock in drop x").unwrap(), Expr::unit());
        assert_eq!(redex(&e), Some(Redex::Make));
    }

    #[test]
    fn value_bound_is_let_val() {
        let e = parse("let x = () in next").unwrap();
        assert!(matches!(redex(&e), Some(Redex::LetVal { .. })));
        let mut e = e;
        contract_let(&mut e);
        assert_eq!(e, parse("next").unwrap());
    }

    #[test]
    fn values_have_no_redex() {
        assert_eq!(redex(&Expr::unit()), None);
    }

    #[test]
    fn contract_replaces_inner_redex() {
        let mut e = Expr::let_in("x#0", parse("next; ()").unwrap(), Expr::unit());
        contract(&mut e, Expr::unit());
        let want = Expr::let_in(
            "x#0",
            Expr::let_in("_seq0", Expr::unit(), Expr::unit()),
            Expr::unit(),
        );
        assert_eq!(e, want);
    }
}
