use thiserror::Error;

use super::lexer::{lex, Tok, Token};
use super::{Expr, ExprKind, Name, Pos, Span, Value, SEQ_PREFIX};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{pos}: syntax error: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        pos: Pos,
        expected: Vec<String>,
        found: String,
    },
    #[error("{pos}: `{name}` is a reserved name")]
    ReservedName { pos: Pos, name: String },
    #[error("{pos}: unexpected character {ch:?}")]
    UnexpectedChar { pos: Pos, ch: char },
}

impl ParseError {
    pub fn pos(&self) -> Pos {
        match self {
            ParseError::Syntax { pos, .. }
            | ParseError::ReservedName { pos, .. }
            | ParseError::UnexpectedChar { pos, .. } => *pos,
        }
    }
}

/// Parses and desugars a program.
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    let tokens = lex(source).map_err(|e| ParseError::UnexpectedChar {
        pos: e.pos,
        ch: e.ch,
    })?;
    let mut p = Parser {
        tokens,
        at: 0,
        next_seq: 0,
    };
    let e = p.expr()?;
    p.expect(Tok::Eof, "end of input")?;
    Ok(e)
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
    next_seq: u32,
}

const SIMPLE_START: &[&str] = &[
    "`()`",
    "identifier",
    "`let`",
    "`makeClock`",
    "`next`",
    "`resume`",
    "`drop`",
    "`async`",
    "`finish`",
    "`(`",
];

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.at]
    }

    fn peek2(&self) -> Option<&Tok> {
        self.tokens.get(self.at + 1).map(|t| &t.tok)
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if t.tok != Tok::Eof {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        let t = self.peek();
        Err(ParseError::Syntax {
            pos: t.pos,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.tok.to_string(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Token, ParseError> {
        if self.peek().tok == tok {
            Ok(self.bump())
        } else {
            self.error(&[what])
        }
    }

    fn ident(&mut self) -> Result<(Name, Pos), ParseError> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let pos = self.peek().pos;
                if s.contains('#') || s.starts_with(SEQ_PREFIX) {
                    return Err(ParseError::ReservedName {
                        pos,
                        name: s.clone(),
                    });
                }
                let name = Name::new(s);
                self.bump();
                Ok((name, pos))
            }
            _ => self.error(&["identifier"]),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut items = vec![self.bind()?];
        while self.peek().tok == Tok::Semi {
            self.bump();
            items.push(self.bind()?);
        }
        let names: Vec<Name> = (1..items.len())
            .map(|_| {
                let n = Name::new(format!("{SEQ_PREFIX}{}", self.next_seq));
                self.next_seq += 1;
                n
            })
            .collect();
        let mut acc = items.pop().expect("at least one item");
        for (first, name) in items.into_iter().zip(names).rev() {
            let span = Span::new(first.span.start, acc.span.end);
            acc = Expr::new(
                ExprKind::Let {
                    name,
                    bound: Box::new(first),
                    body: Box::new(acc),
                },
                span,
            );
        }
        Ok(acc)
    }

    fn bind(&mut self) -> Result<Expr, ParseError> {
        if self.peek().tok != Tok::Let {
            return self.simple();
        }
        let start = self.bump().pos;
        let (name, _) = self.ident()?;
        self.expect(Tok::Eq, "`=`")?;
        let bound = self.bind()?;
        self.expect(Tok::In, "`in`")?;
        let body = self.bind()?;
        let span = Span::new(start, body.span.end);
        Ok(Expr::new(
            ExprKind::Let {
                name,
                bound: Box::new(bound),
                body: Box::new(body),
            },
            span,
        ))
    }

    fn simple(&mut self) -> Result<Expr, ParseError> {
        let start = self.peek().pos;
        let at = |kind| Expr::new(kind, Span::new(start, start));
        match self.peek().tok.clone() {
            Tok::LParen => {
                self.bump();
                if self.peek().tok == Tok::RParen {
                    let end = self.bump().pos;
                    return Ok(Expr::new(ExprKind::Val(Value::Unit), Span::new(start, end)));
                }
                let mut inner = self.expr()?;
                let end = self.expect(Tok::RParen, "`)`")?.pos;
                inner.span = Span::new(start, end);
                Ok(inner)
            }
            Tok::Ident(_) => {
                let (x, _) = self.ident()?;
                Ok(at(ExprKind::Val(Value::Var(x))))
            }
            Tok::MakeClock => {
                self.bump();
                Ok(at(ExprKind::MakeClock))
            }
            Tok::Next => {
                self.bump();
                Ok(at(ExprKind::Next))
            }
            Tok::Resume | Tok::Drop => {
                let kw = self.bump().tok;
                let (x, end) = self.ident()?;
                let v = Value::Var(x);
                let kind = if kw == Tok::Resume {
                    ExprKind::Resume(v)
                } else {
                    ExprKind::Drop(v)
                };
                Ok(Expr::new(kind, Span::new(start, end)))
            }
            Tok::Async => {
                self.bump();
                self.expect(Tok::LBracket, "`[`")?;
                let mut clocks = Vec::new();
                if self.peek().tok != Tok::RBracket {
                    clocks.push(Value::Var(self.ident()?.0));
                    while self.peek().tok == Tok::Comma {
                        self.bump();
                        clocks.push(Value::Var(self.ident()?.0));
                    }
                }
                if self.peek().tok != Tok::RBracket {
                    return self.error(&["`,`", "`]`"]);
                }
                self.bump();
                let (body, end) = self.parenthesized()?;
                let span = Span::new(start, end);
                Ok(Expr::new(
                    ExprKind::Async {
                        clocks,
                        body: Box::new(body),
                    },
                    span,
                ))
            }
            Tok::Finish => {
                self.bump();
                let (body, end) = self.parenthesized()?;
                let span = Span::new(start, end);
                Ok(Expr::new(ExprKind::Finish(Box::new(body)), span))
            }
            _ => self.error(SIMPLE_START),
        }
    }

    /// `"(" expr ")"`, where `()` is the unit body. Also returns the
    /// position of the closing parenthesis.
    fn parenthesized(&mut self) -> Result<(Expr, Pos), ParseError> {
        if self.peek().tok != Tok::LParen {
            return self.error(&["`(`"]);
        }
        if self.peek2() == Some(&Tok::RParen) {
            let unit = self.simple()?;
            let end = unit.span.end;
            return Ok((unit, end));
        }
        self.bump();
        let inner = self.expr()?;
        let end = self.expect(Tok::RParen, "`)`")?.pos;
        Ok((inner, end))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(x: &str) -> Value {
        Value::Var(Name::new(x))
    }

    fn k(kind: ExprKind) -> Expr {
        Expr::synth(kind)
    }

    #[test]
    fn sequencing_desugars_to_let() {
        let got = parse("let x = makeClock in (resume x; drop x)").unwrap();
        let want = Expr::let_in(
            "x",
            k(ExprKind::MakeClock),
            Expr::let_in(
                "_seq0",
                k(ExprKind::Resume(var("x"))),
                k(ExprKind::Drop(var("x"))),
            ),
        );
        assert_eq!(got, want);
    }

    #[test]
    fn unit_program() {
        assert_eq!(parse("()").unwrap(), Expr::unit());
        assert_eq!(parse("  ( )  // trailing").unwrap(), Expr::unit());
    }

    #[test]
    fn zero_clock_async() {
        let got = parse("async [] (next)").unwrap();
        assert_eq!(
            got,
            k(ExprKind::Async {
                clocks: vec![],
                body: Box::new(k(ExprKind::Next)),
            })
        );
    }

    #[test]
    fn drop_of_number_is_syntax_error() {
        match parse("drop 3") {
            Err(ParseError::Syntax { pos, expected, .. }) => {
                assert_eq!(pos, Pos { line: 1, col: 6 });
                assert_eq!(expected, vec!["identifier".to_string()]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reserved_names_rejected() {
        for src in ["resume l#0", "let c#1 = () in ()", "let _seq3 = () in ()", "x#"] {
            assert!(
                matches!(parse(src), Err(ParseError::ReservedName { .. })),
                "{src}"
            );
        }
    }

    #[test]
    fn sequencing_is_right_nested_and_binds_looser_than_let() {
        let got = parse("let x = () in x; next; ()").unwrap();
        let want = Expr::let_in(
            "_seq0",
            Expr::let_in("x", Expr::unit(), Expr::value(var("x"))),
            Expr::let_in("_seq1", k(ExprKind::Next), Expr::unit()),
        );
        assert_eq!(got, want);
    }

    #[test]
    fn errors_report_line_and_column() {
        let err = parse("let x = makeClock in (\n  resume x;\n  drop )").unwrap_err();
        assert_eq!(err.pos(), Pos { line: 3, col: 8 });
        let err = parse("async [x y] (next)").unwrap_err();
        assert!(err.to_string().contains("`,` or `]`"), "{err}");
        let err = parse("next next").unwrap_err();
        assert!(err.to_string().contains("end of input"), "{err}");
        assert!(matches!(
            parse("resume x $"),
            Err(ParseError::UnexpectedChar { ch: '$', .. })
        ));
    }

    #[test]
    fn spans_cover_parenthesized_bodies() {
        let e = parse("async [x] (\n  next\n)").unwrap();
        assert_eq!(e.span.start, Pos { line: 1, col: 1 });
        assert_eq!(e.span.end, Pos { line: 3, col: 1 });
    }
}
