//! Tokenizer and s-expression reader with source positions.

use std::fmt;

use super::PddlError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SExpr {
    Atom(String, Pos),
    List(Vec<SExpr>, Pos),
}

impl SExpr {
    pub fn pos(&self) -> Pos {
        match self {
            SExpr::Atom(_, p) | SExpr::List(_, p) => *p,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(s, _) => Some(s),
            SExpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(items, _) => Some(items),
            SExpr::Atom(..) => None,
        }
    }

    /// First element of a list when it is an atom, e.g. `and` in `(and ...)`.
    pub fn head(&self) -> Option<&str> {
        self.as_list().and_then(|l| l.first()).and_then(SExpr::as_atom)
    }
}

#[derive(Debug, PartialEq)]
enum Tok {
    Open,
    Close,
    Word(String),
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, PddlError> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut col = 0;
    let mut word: Option<(String, Pos)> = None;
    let mut in_comment = false;
    for c in text.chars() {
        col += 1;
        if c == '\n' {
            if let Some((w, p)) = word.take() {
                out.push((Tok::Word(w), p));
            }
            in_comment = false;
            line += 1;
            col = 0;
            continue;
        }
        if in_comment {
            continue;
        }
        let pos = Pos { line, col };
        match c {
            '(' | ')' | ';' => {
                if let Some((w, p)) = word.take() {
                    out.push((Tok::Word(w), p));
                }
                match c {
                    '(' => out.push((Tok::Open, pos)),
                    ')' => out.push((Tok::Close, pos)),
                    _ => in_comment = true,
                }
            }
            c if c.is_whitespace() => {
                if let Some((w, p)) = word.take() {
                    out.push((Tok::Word(w), p));
                }
            }
            c if c.is_ascii_alphanumeric() || "-_?:.=<>".contains(c) => match word.as_mut() {
                Some((w, _)) => w.push(c.to_ascii_lowercase()),
                None => word = Some((c.to_ascii_lowercase().to_string(), pos)),
            },
            other => {
                return Err(PddlError::Lex { line, col, message: format!("unexpected character {other:?}") });
            }
        }
    }
    if let Some((w, p)) = word.take() {
        out.push((Tok::Word(w), p));
    }
    Ok(out)
}

/// Reads exactly one top-level s-expression; all atoms are lower-cased.
pub fn read(text: &str) -> Result<SExpr, PddlError> {
    let toks = lex(text)?;
    let mut stack: Vec<(Vec<SExpr>, Pos)> = Vec::new();
    let mut done: Option<SExpr> = None;
    for (tok, pos) in toks {
        if let Some(first) = &done {
            return Err(PddlError::Syntax {
                line: pos.line,
                col: pos.col,
                message: format!("unexpected content after the expression that ends the document (started at {})", first.pos()),
            });
        }
        match tok {
            Tok::Open => stack.push((Vec::new(), pos)),
            Tok::Close => {
                let (items, open) = stack.pop().ok_or(PddlError::Syntax {
                    line: pos.line,
                    col: pos.col,
                    message: "unmatched `)`".into(),
                })?;
                let list = SExpr::List(items, open);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(list),
                    None => done = Some(list),
                }
            }
            Tok::Word(w) => match stack.last_mut() {
                Some((parent, _)) => parent.push(SExpr::Atom(w, pos)),
                None => {
                    return Err(PddlError::Syntax {
                        line: pos.line,
                        col: pos.col,
                        message: format!("`{w}` outside of any expression"),
                    })
                }
            },
        }
    }
    if let Some((_, open)) = stack.pop() {
        // report the innermost unclosed list
        return Err(PddlError::Syntax { line: open.line, col: open.col, message: "unclosed `(`".into() });
    }
    done.ok_or(PddlError::Syntax { line: 1, col: 1, message: "empty document".into() })
}
