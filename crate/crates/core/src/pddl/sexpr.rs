//! Whitespace-insensitive s-expression reader for PDDL text.
//!
//! Comments (`;` to end of line) are stripped and all symbols are folded to
//! lowercase during tokenization.

use crate::pddl::PddlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sexpr {
    Sym(String, Pos),
    List(Vec<Sexpr>, Pos),
}

impl Sexpr {
    pub fn pos(&self) -> Pos {
        match self {
            Sexpr::Sym(_, p) | Sexpr::List(_, p) => *p,
        }
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            Sexpr::Sym(s, _) => Some(s.as_str()),
            Sexpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List(items, _) => Some(items),
            Sexpr::Sym(..) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    LParen(Pos),
    RParen(Pos),
    Sym(String, Pos),
}

fn tokenize(text: &str) -> Result<Vec<Token>, PddlError> {
    let mut tokens = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        let pos = Pos { line, col };
        match c {
            '\n' => {
                line += 1;
                col = 1;
                continue;
            }
            ';' => {
                while let Some(&c2) = chars.peek() {
                    if c2 == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
                col += 1;
                continue;
            }
            '(' => tokens.push(Token::LParen(pos)),
            ')' => tokens.push(Token::RParen(pos)),
            c if c.is_whitespace() => {}
            c => {
                let mut sym = String::new();
                sym.push(c);
                while let Some(&c2) = chars.peek() {
                    if c2.is_whitespace() || c2 == '(' || c2 == ')' || c2 == ';' {
                        break;
                    }
                    sym.push(c2);
                    chars.next();
                    col += 1;
                }
                tokens.push(Token::Sym(sym.to_lowercase(), pos));
            }
        }
        col += 1;
    }
    Ok(tokens)
}

/// Reads a single top-level s-expression; trailing tokens are an error.
pub fn parse(text: &str) -> Result<Sexpr, PddlError> {
    let tokens = tokenize(text)?;
    let mut idx = 0usize;
    let expr = parse_at(&tokens, &mut idx)?;
    if idx != tokens.len() {
        let pos = token_pos(&tokens[idx]);
        return Err(PddlError::Parse {
            line: pos.line,
            col: pos.col,
            message: "expected end of input after top-level expression".into(),
        });
    }
    Ok(expr)
}

fn token_pos(t: &Token) -> Pos {
    match t {
        Token::LParen(p) | Token::RParen(p) | Token::Sym(_, p) => *p,
    }
}

fn parse_at(tokens: &[Token], idx: &mut usize) -> Result<Sexpr, PddlError> {
    match tokens.get(*idx) {
        None => Err(PddlError::Parse {
            line: 0,
            col: 0,
            message: "unexpected end of input, expected expression".into(),
        }),
        Some(Token::Sym(s, pos)) => {
            *idx += 1;
            Ok(Sexpr::Sym(s.clone(), *pos))
        }
        Some(Token::RParen(pos)) => Err(PddlError::Parse {
            line: pos.line,
            col: pos.col,
            message: "unexpected ')', expected expression".into(),
        }),
        Some(Token::LParen(pos)) => {
            let open = *pos;
            *idx += 1;
            let mut items = Vec::new();
            loop {
                match tokens.get(*idx) {
                    None => {
                        return Err(PddlError::Parse {
                            line: open.line,
                            col: open.col,
                            message: "unclosed '('".into(),
                        })
                    }
                    Some(Token::RParen(_)) => {
                        *idx += 1;
                        return Ok(Sexpr::List(items, open));
                    }
                    Some(_) => items.push(parse_at(tokens, idx)?),
                }
            }
        }
    }
}
