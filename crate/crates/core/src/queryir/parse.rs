//! Tokenizer and recursive-descent parser for nested query text:
//!
//! ```text
//! query { FIELD }
//! FIELD := name ( "(" arg ("," arg)* ")" )? "{" ( FIELD+ | name+ ) "}"
//! arg   := name ":" literal
//! ```

use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

use super::ast::{FieldNode, Literal, QueryAst};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("syntax error at line {line}, column {column}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Colon,
    Comma,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(n) => write!(f, "number {n}"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

fn tokenize(text: &str) -> Result<Vec<Spanned>, SyntaxError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1usize, 1usize);
    let err = |line, column, message: String| SyntaxError { line, column, message };

    while let Some(&c) = chars.peek() {
        let (l, col) = (line, column);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars<'_>>| {
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
            c
        };
        if c.is_whitespace() {
            bump(&mut chars);
            continue;
        }
        if c == '#' {
            while chars.peek().is_some_and(|&c| c != '\n') {
                bump(&mut chars);
            }
            continue;
        }
        let tok = match c {
            '{' | '}' | '(' | ')' | ':' | ',' => {
                bump(&mut chars);
                match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ':' => Tok::Colon,
                    _ => Tok::Comma,
                }
            }
            '\'' | '"' => {
                let quote = c;
                bump(&mut chars);
                let mut s = String::new();
                loop {
                    match bump(&mut chars) {
                        None => return Err(err(l, col, "unterminated string".into())),
                        Some('\\') => match bump(&mut chars) {
                            Some(e @ ('\\' | '\'' | '"')) => s.push(e),
                            Some('n') => s.push('\n'),
                            Some(other) => {
                                return Err(err(l, col, format!("unknown escape \\{other}")))
                            }
                            None => return Err(err(l, col, "unterminated string".into())),
                        },
                        Some(ch) if ch == quote => break,
                        Some(ch) => s.push(ch),
                    }
                }
                Tok::Str(s)
            }
            c if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_alphanumeric() || matches!(d, '.' | '-' | '+') {
                        s.push(d);
                        bump(&mut chars);
                    } else {
                        break;
                    }
                }
                let v: f64 = s
                    .parse()
                    .map_err(|_| err(l, col, format!("invalid number `{s}`")))?;
                if !v.is_finite() {
                    return Err(err(l, col, format!("number `{s}` is not finite")));
                }
                Tok::Number(v)
            }
            c if is_ident_start(c) => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if is_ident_char(d) {
                        s.push(d);
                        bump(&mut chars);
                    } else {
                        break;
                    }
                }
                Tok::Ident(s)
            }
            other => return Err(err(l, col, format!("unexpected character {other:?}"))),
        };
        out.push(Spanned { tok, line: l, column: col });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(t: &Spanned, message: String) -> SyntaxError {
        SyntaxError {
            line: t.line,
            column: t.column,
            message,
        }
    }

    fn expect(&mut self, want: Tok) -> Result<(), SyntaxError> {
        let t = self.next();
        if t.tok == want {
            Ok(())
        } else {
            Err(Self::error_at(&t, format!("expected {want}, found {}", t.tok)))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, SyntaxError> {
        let t = self.next();
        match t.tok.clone() {
            Tok::Ident(s) => Ok(s),
            other => Err(Self::error_at(&t, format!("expected {what}, found {other}"))),
        }
    }

    fn query(&mut self) -> Result<QueryAst, SyntaxError> {
        let t = self.next();
        if t.tok != Tok::Ident("query".into()) {
            return Err(Self::error_at(&t, format!("expected `query`, found {}", t.tok)));
        }
        self.expect(Tok::LBrace)?;
        let root = self.field()?;
        self.expect(Tok::RBrace)?;
        let t = self.next();
        if t.tok != Tok::Eof {
            return Err(Self::error_at(&t, format!("expected end of input, found {}", t.tok)));
        }
        Ok(QueryAst { root })
    }

    fn field(&mut self) -> Result<FieldNode, SyntaxError> {
        let name = self.ident("field name")?;
        let mut args = IndexMap::new();
        if self.peek().tok == Tok::LParen {
            self.next();
            loop {
                let at = self.peek().clone();
                let arg = self.ident("argument name")?;
                self.expect(Tok::Colon)?;
                let lit = self.literal()?;
                if args.insert(arg.clone(), lit).is_some() {
                    return Err(Self::error_at(&at, format!("duplicate argument `{arg}`")));
                }
                let t = self.next();
                match t.tok.clone() {
                    Tok::Comma => continue,
                    Tok::RParen => break,
                    other => {
                        return Err(Self::error_at(&t, format!("expected `,` or `)`, found {other}")))
                    }
                }
            }
        }
        self.expect(Tok::LBrace)?;
        let mut children = Vec::new();
        let mut selections = Vec::new();
        loop {
            let t = self.peek().clone();
            match &t.tok {
                Tok::RBrace if children.is_empty() && selections.is_empty() => {
                    return Err(Self::error_at(&t, "empty selection set".into()))
                }
                Tok::RBrace => {
                    self.next();
                    break;
                }
                Tok::Ident(item) => {
                    let after = &self.toks[self.pos + 1].tok;
                    let nested = matches!(after, Tok::LParen | Tok::LBrace);
                    if nested {
                        if !selections.is_empty() {
                            return Err(Self::error_at(&t, format!("cannot mix nested field `{item}` with leaf selections")));
                        }
                        children.push(self.field()?);
                    } else {
                        if !children.is_empty() {
                            return Err(Self::error_at(&t, format!("cannot mix leaf `{item}` with nested fields")));
                        }
                        selections.push(item.clone());
                        self.next();
                    }
                }
                other => return Err(Self::error_at(&t, format!("expected field name or `}}`, found {other}"))),
            }
        }
        Ok(FieldNode {
            name,
            args,
            children,
            selections,
        })
    }

    fn literal(&mut self) -> Result<Literal, SyntaxError> {
        let t = self.next();
        match t.tok.clone() {
            Tok::Number(n) => Ok(Literal::Number(n)),
            Tok::Str(s) | Tok::Ident(s) => Ok(Literal::Text(s)),
            other => Err(Self::error_at(&t, format!("expected literal, found {other}"))),
        }
    }
}

pub fn parse(text: &str) -> Result<QueryAst, SyntaxError> {
    let toks = tokenize(text)?;
    Parser { toks, pos: 0 }.query()
}
