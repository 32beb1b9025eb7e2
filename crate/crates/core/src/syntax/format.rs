use super::{Expr, ExprKind, Name, Value};

/// Deterministic single-line rendering. Source-level expressions reparse to
/// the same tree; sequencing binders print back as `;`.
pub fn format(e: &Expr) -> String {
    format_with(e, &|n: &Name| n.to_string())
}

/// Like [`format`], with every name passed through `rename` first.
pub fn format_with(e: &Expr, rename: &dyn Fn(&Name) -> String) -> String {
    let mut out = String::new();
    Printer { rename }.seq(e, &mut out);
    out
}

struct Printer<'a> {
    rename: &'a dyn Fn(&Name) -> String,
}

fn is_seq_let(e: &Expr) -> bool {
    matches!(&e.kind, ExprKind::Let { name, .. } if name.is_seq())
}

impl Printer<'_> {
    fn value(&self, v: &Value, out: &mut String) {
        match v {
            Value::Unit => out.push_str("()"),
            Value::Var(x) => out.push_str(&(self.rename)(x)),
            Value::Clock(c) => {
                out.push_str("clock ");
                out.push_str(&(self.rename)(c));
            }
        }
    }

    /// Any context: a sequence may appear bare.
    fn seq(&self, e: &Expr, out: &mut String) {
        match &e.kind {
            ExprKind::Let { name, bound, body } if name.is_seq() => {
                self.bind(bound, out);
                out.push_str("; ");
                self.seq(body, out);
            }
            _ => self.bind(e, out),
        }
    }

    /// Operand of `let`, left of `;`: sequences need parentheses.
    fn bind(&self, e: &Expr, out: &mut String) {
        match &e.kind {
            _ if is_seq_let(e) => {
                out.push('(');
                self.seq(e, out);
                out.push(')');
            }
            ExprKind::Let { name, bound, body } => {
                out.push_str("let ");
                out.push_str(&(self.rename)(name));
                out.push_str(" = ");
                if matches!(bound.kind, ExprKind::Let { .. }) {
                    out.push('(');
                    self.seq(bound, out);
                    out.push(')');
                } else {
                    self.bind(bound, out);
                }
                out.push_str(" in ");
                self.bind(body, out);
            }
            ExprKind::Val(v) => self.value(v, out),
            ExprKind::MakeClock => out.push_str("makeClock"),
            ExprKind::Next => out.push_str("next"),
            ExprKind::Resume(v) => {
                out.push_str("resume ");
                self.value(v, out);
            }
            ExprKind::Drop(v) => {
                out.push_str("drop ");
                self.value(v, out);
            }
            ExprKind::Async { clocks, body } => {
                out.push_str("async [");
                for (i, c) in clocks.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    self.value(c, out);
                }
                out.push_str("] ");
                self.body(body, out);
            }
            ExprKind::Finish(body) => {
                out.push_str("finish ");
                self.body(body, out);
            }
            ExprKind::Join(l) => {
                out.push_str("join ");
                out.push_str(&(self.rename)(l));
            }
        }
    }

    fn body(&self, e: &Expr, out: &mut String) {
        if matches!(e.kind, ExprKind::Val(Value::Unit)) {
            out.push_str("()");
            return;
        }
        out.push('(');
        self.seq(e, out);
        out.push(')');
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn direct_syntax() {
        assert_eq!(format(&Expr::unit()), "()");
        let e = Expr::let_in(
            "x",
            Expr::synth(ExprKind::MakeClock),
            Expr::synth(ExprKind::Drop(Value::Var(Name::new("x")))),
        );
        assert_eq!(format(&e), "let x = makeClock in drop x");
    }

    #[test]
    fn run_time_forms() {
        let e = Expr::let_in(
            "x#0",
            Expr::synth(ExprKind::Join(Name::new("l#1"))),
            Expr::value(Value::Clock(Name::new("c#2"))),
        );
        assert_eq!(format(&e), "let x#0 = join l#1 in clock c#2");
    }

    #[test]
    fn round_trips_tricky_nesting() {
        for src in [
            "(a; b); c",
            "let x = (let y = a in b) in c",
            "let x = (a; b) in (c; d)",
            "let x = a in b; c",
            "async [x, y] (async [] (); finish (next; ()))",
            "finish (())",
            "((()))",
        ] {
            let e = parse(src).unwrap();
            let printed = format(&e);
            assert_eq!(parse(&printed).unwrap(), e, "{src} -> {printed}");
        }
    }
}
