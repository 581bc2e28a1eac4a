//! Minimal s-expression reader for solver output.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

impl Sexp {
    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            Sexp::List(_) => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(items) => Some(items),
            Sexp::Atom(_) => None,
        }
    }

    /// `(head ...)` with the given head atom.
    pub fn is_app(&self, head: &str) -> bool {
        matches!(self.list(), Some([Sexp::Atom(h), ..]) if h == head)
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(a) => f.write_str(a),
            Sexp::List(items) => {
                f.write_str("(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{it}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed s-expression at byte {offset}: {message}")]
pub struct SexpError {
    pub offset: usize,
    pub message: String,
}

/// Parses every top-level s-expression in `src`. Quoted symbols `|x|` are
/// returned without their bars.
pub fn parse_all(src: &str) -> Result<Vec<Sexp>, SexpError> {
    let bytes = src.as_bytes();
    let mut i = 0;
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let err = |offset, message: &str| SexpError {
        offset,
        message: message.to_string(),
    };
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b';' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'(' => {
                stack.push(Vec::new());
                i += 1;
            }
            b')' => {
                if stack.len() < 2 {
                    return Err(err(i, "unbalanced `)`"));
                }
                let done = stack.pop().unwrap();
                stack.last_mut().unwrap().push(Sexp::List(done));
                i += 1;
            }
            b'|' => {
                let start = i + 1;
                let end = src[start..]
                    .find('|')
                    .ok_or_else(|| err(i, "unterminated quoted symbol"))?;
                stack
                    .last_mut()
                    .unwrap()
                    .push(Sexp::Atom(src[start..start + end].to_string()));
                i = start + end + 1;
            }
            b'"' => {
                let start = i;
                i += 1;
                loop {
                    if i >= bytes.len() {
                        return Err(err(start, "unterminated string"));
                    }
                    if bytes[i] == b'"' {
                        if bytes.get(i + 1) == Some(&b'"') {
                            i += 2;
                            continue;
                        }
                        i += 1;
                        break;
                    }
                    i += 1;
                }
                stack
                    .last_mut()
                    .unwrap()
                    .push(Sexp::Atom(src[start..i].to_string()));
            }
            _ => {
                let start = i;
                while i < bytes.len() && !matches!(bytes[i], b' ' | b'\t' | b'\n' | b'\r' | b'(' | b')' | b';') {
                    i += 1;
                }
                stack
                    .last_mut()
                    .unwrap()
                    .push(Sexp::Atom(src[start..i].to_string()));
            }
        }
    }
    if stack.len() != 1 {
        return Err(err(bytes.len(), "unbalanced `(`"));
    }
    Ok(stack.pop().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_lists_and_quoted_symbols() {
        let out = parse_all("sat\n((define-fun |g#a| () Int (- 5)) ; note\n)").unwrap();
        assert_eq!(out[0], Sexp::Atom("sat".into()));
        let model = out[1].list().unwrap();
        assert!(model[0].is_app("define-fun"));
        assert_eq!(model[0].list().unwrap()[1], Sexp::Atom("g#a".into()));
        assert_eq!(model[0].to_string(), "(define-fun g#a () Int (- 5))");
    }

    #[test]
    fn strings_and_errors() {
        let out = parse_all("(error \"line 1: \"\"x\"\" not available\")").unwrap();
        assert!(out[0].is_app("error"));
        assert!(parse_all("(a (b)").is_err());
        assert!(parse_all("a)").is_err());
    }
}
