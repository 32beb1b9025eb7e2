use std::fmt;

use super::Pos;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Let,
    In,
    MakeClock,
    Next,
    Resume,
    Drop,
    Async,
    Finish,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Eq,
    /// Anything else that looks like a word, e.g. a number literal.
    Other(String),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Other(s) => write!(f, "`{s}`"),
            Tok::Let => f.write_str("`let`"),
            Tok::In => f.write_str("`in`"),
            Tok::MakeClock => f.write_str("`makeClock`"),
            Tok::Next => f.write_str("`next`"),
            Tok::Resume => f.write_str("`resume`"),
            Tok::Drop => f.write_str("`drop`"),
            Tok::Async => f.write_str("`async`"),
            Tok::Finish => f.write_str("`finish`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

pub(crate) struct LexError {
    pub pos: Pos,
    pub ch: char,
}

pub(crate) fn lex(src: &str) -> Result<Vec<Token>, LexError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut col) = (1u32, 1u32);

    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        if c == '\n' {
            chars.next();
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            col += 1;
            continue;
        }
        if c == '/' {
            chars.next();
            if chars.peek() == Some(&'/') {
                for c in chars.by_ref() {
                    if c == '\n' {
                        line += 1;
                        col = 1;
                        break;
                    }
                }
                continue;
            }
            return Err(LexError { pos, ch: '/' });
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            ';' => Some(Tok::Semi),
            '=' => Some(Tok::Eq),
            _ => None,
        };
        if let Some(tok) = single {
            chars.next();
            col += 1;
            out.push(Token { tok, pos });
            continue;
        }
        if c.is_ascii_alphanumeric() || c == '_' {
            let mut word = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' || c == '#' {
                    word.push(c);
                    chars.next();
                    col += 1;
                } else {
                    break;
                }
            }
            let tok = match word.as_str() {
                "let" => Tok::Let,
                "in" => Tok::In,
                "makeClock" => Tok::MakeClock,
                "next" => Tok::Next,
                "resume" => Tok::Resume,
                "drop" => Tok::Drop,
                "async" => Tok::Async,
                "finish" => Tok::Finish,
                _ if word.starts_with(|c: char| c.is_ascii_digit()) => Tok::Other(word),
                _ => Tok::Ident(word),
            };
            out.push(Token { tok, pos });
            continue;
        }
        return Err(LexError { pos, ch: c });
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Pos { line, col },
    });
    Ok(out)
}
