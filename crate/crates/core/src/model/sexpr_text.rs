//! Parsing of the compact `(pred arg ...)` text form used in JSON files.

use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TextError(pub String);

impl fmt::Display for TextError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for TextError {}

fn tokens(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '(' | ')' => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(c.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Parses `(pred a1 a2 ...)` into its predicate and argument names.
pub fn parse_atom(s: &str) -> Result<(String, Vec<String>), TextError> {
    let toks = tokens(s);
    let err = || TextError(format!("malformed atom {s:?}"));
    if toks.len() < 3 || toks[0] != "(" || toks[toks.len() - 1] != ")" {
        return Err(err());
    }
    let inner = &toks[1..toks.len() - 1];
    if inner.iter().any(|t| t == "(" || t == ")") {
        return Err(err());
    }
    Ok((inner[0].clone(), inner[1..].to_vec()))
}

/// Splits `(not X)` into `(false, X)`; anything else is `(true, s)`.
pub fn strip_not(s: &str) -> Result<(bool, &str), TextError> {
    let t = s.trim();
    if let Some(rest) = t.strip_prefix('(') {
        let rest = rest.trim_start();
        if let Some(after) = rest.strip_prefix("not") {
            if after.starts_with(|c: char| c.is_whitespace() || c == '(') {
                let inner = after.trim();
                let inner = inner
                    .strip_suffix(')')
                    .ok_or_else(|| TextError(format!("malformed negation {s:?}")))?;
                return Ok((false, inner.trim()));
            }
        }
    }
    Ok((true, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atoms_and_negations() {
        assert_eq!(
            parse_atom("(at ?r  hab)").unwrap(),
            ("at".to_string(), vec!["?r".to_string(), "hab".to_string()])
        );
        assert_eq!(parse_atom("(door-open)").unwrap().1.len(), 0);
        assert!(parse_atom("at r").is_err());
        assert!(parse_atom("(at (r))").is_err());
        assert_eq!(strip_not("(not (p a))").unwrap(), (false, "(p a)"));
        assert_eq!(strip_not("(nothing a)").unwrap(), (true, "(nothing a)"));
    }
}
