//! Concrete syntax: lexing, parsing, printing and well-formedness checks.

pub mod ast;
mod lexer;
mod parser;
mod pretty;
mod validate;

use std::fmt;

use ast::{Expr, Library, Pos};
use crate::formula::Formula;

pub use pretty::{pretty_print, pretty_procedure, pretty_stmt};
pub use validate::{check, validate, Diagnostic, DiagnosticKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical,
    Syntax,
    Duplicate,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParseErrorKind::Lexical => "lexical error",
            ParseErrorKind::Syntax => "syntax error",
            ParseErrorKind::Duplicate => "duplicate declaration",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {kind}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub pos: Pos,
    pub message: String,
}

impl ParseError {
    pub fn new(kind: ParseErrorKind, pos: Pos, message: impl Into<String>) -> ParseError {
        ParseError {
            kind,
            pos,
            message: message.into(),
        }
    }
}

/// Either stage of turning source text into a checked library.
#[derive(Debug, Clone, thiserror::Error)]
pub enum FrontendError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Diagnostic>),
}

pub fn parse_library(src: &str) -> Result<Library, ParseError> {
    let mut p = parser::Parser::new(src)?;
    let lib = p.library()?;
    p.expect_eof()?;
    Ok(lib)
}

pub fn parse_formula(src: &str) -> Result<Formula, ParseError> {
    let mut p = parser::Parser::new(src)?;
    let f = p.formula()?;
    p.expect_eof()?;
    Ok(f)
}

pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut p = parser::Parser::new(src)?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

/// Parses and validates.
pub fn load(src: &str) -> Result<Library, FrontendError> {
    let lib = parse_library(src)?;
    validate(lib).map_err(FrontendError::Invalid)
}

#[cfg(test)]
mod tests {
    use super::ast::*;
    use super::*;

    const FACT_CACHE: &str = "
        var g: int := -1;
        var lastN: int := 0;
        proc factCache(n)
          invariant g == -1 || g == lastN * factCache(lastN - 1);
        {
          if (n <= 1) {
            result := 1;
          } else if (g != -1 && n == lastN) {
            result := g;
          } else {
            t2 := factCache(n - 1);
            g := n * t2;
            lastN := n;
            result := g;
          }
          return result;
        }";

    #[test]
    fn parses_fact_cache() {
        let lib = parse_library(FACT_CACHE).unwrap();
        assert_eq!(lib.globals.len(), 2);
        assert_eq!(lib.globals[0].init, -1);
        assert_eq!(lib.globals[1].name, "lastN");
        let p = &lib.procedures[0];
        assert_eq!(p.params, vec!["n".to_string()]);
        assert_eq!(p.return_var(), Some("result"));
        assert_eq!(p.body.path_count(), 3);
        assert_eq!(p.body.count(|s| matches!(s, Stmt::Call { .. })), 1);
        assert!(validate(lib).is_ok());
    }

    #[test]
    fn minimal_procedure_without_keyword_or_trailing_semicolon() {
        let lib = parse_library("id (n) { r := n; return r }").unwrap();
        assert!(lib.globals.is_empty());
        let Stmt::Seq(items) = &lib.procedures[0].body else {
            panic!("expected a sequence")
        };
        assert!(matches!(items[0], Stmt::Assign { .. }));
        assert!(matches!(items[1], Stmt::Return { .. }));
    }

    #[test]
    fn array_declarations() {
        let lib = parse_library(
            "var g: [int] int := 0; var m: [int, int] int := -1;
             proc f(k) { g[k] := m[k, k]; r := g[k]; return r; }",
        )
        .unwrap();
        assert_eq!(lib.globals[0].kind, GlobalKind::Array1);
        assert_eq!(lib.globals[1].kind, GlobalKind::Array2);
        assert_eq!(lib.globals[1].init, -1);
        assert!(validate(lib).is_ok());
    }

    #[test]
    fn round_trip_is_identity() {
        for src in [
            FACT_CACHE,
            "id (n) { r := n; return r }",
            "var g: [int] int := 0;
             proc f(k) invariant forall k. g[k] == 0 || g[k] == k * f(k - 1); {
               if (k > 0) { } else { g[k] := -(1); }
               r := -k % 3 / 2; return r; }",
        ] {
            let lib = parse_library(src).unwrap();
            let text = pretty_print(&lib);
            assert_eq!(parse_library(&text).unwrap(), lib, "{text}");
        }
    }

    #[test]
    fn errors_are_positioned() {
        let e = parse_library("proc f(n) {\n  r := ;\n return r; }").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Syntax);
        assert_eq!((e.pos.line, e.pos.col), (2, 8));
        let e = parse_library("var g: int := 0;\nvar g: int := 1; proc f(n) { return n; }")
            .unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Duplicate);
        assert_eq!(e.pos.line, 2);
        assert!(parse_library("var g: int := 0;").is_err());
    }

    fn kinds(src: &str) -> Vec<DiagnosticKind> {
        let lib = parse_library(src).unwrap();
        check(&lib).into_iter().map(|d| d.kind).collect()
    }

    #[test]
    fn validation_rules() {
        assert_eq!(
            kinds("proc f(n) { n := n - 1; return n; }"),
            vec![DiagnosticKind::AssignToFormal]
        );
        assert_eq!(
            kinds("var g: int := 0; proc f(n) invariant result == 1; { result := 1; return result; }"),
            vec![DiagnosticKind::InvariantScope]
        );
        assert_eq!(
            kinds("proc f(n) { return n; r := 1; }"),
            vec![DiagnosticKind::ReturnNotLast]
        );
        assert_eq!(
            kinds("proc f(n) { r := h(n); return r; }"),
            vec![DiagnosticKind::UndeclaredProcedure]
        );
        assert_eq!(
            kinds("proc f(n) { r := f(n, n); return r; }"),
            vec![DiagnosticKind::ArityMismatch]
        );
        assert_eq!(
            kinds("proc f(n) { r := f(n) + 1; return r; }"),
            vec![DiagnosticKind::CallInExpression]
        );
        assert_eq!(
            kinds("proc f(n) { if (n > 0) { r := 1; } return r; }"),
            vec![DiagnosticKind::UseBeforeAssign]
        );
        assert_eq!(
            kinds("var a: [int] int := 0; proc f(n) { r := a; return r; }"),
            vec![DiagnosticKind::ArrayMisuse]
        );
        assert_eq!(
            kinds("proc f(n) { r := q; return r; }"),
            vec![DiagnosticKind::UnknownVariable]
        );
        assert_eq!(
            kinds("var n: int := 0; proc f(n) { return n; }"),
            vec![DiagnosticKind::NameClash]
        );
        assert!(kinds("proc f(n) { r := n; }").contains(&DiagnosticKind::MissingReturn));
    }

    #[test]
    fn formula_syntax() {
        let f = parse_formula("forall i, j. m[i, j] == -1 || m[i, j] == c(i, j, i, -1)").unwrap();
        assert!(matches!(f, Formula::Forall(ref bs, _) if bs.len() == 2));
        let f = parse_formula("a ==> b ==> c").unwrap();
        let Formula::Implies(_, rhs) = f else { panic!() };
        assert!(matches!(*rhs, Formula::Implies(..)));
        assert_eq!(parse_formula("x = 1").unwrap(), parse_formula("x == 1").unwrap());
        assert!(parse_expr("exists x. x == 1").is_err());
        assert_eq!(parse_expr("-1").unwrap(), Expr::Int(-1));
        assert_eq!(parse_expr("-(1)").unwrap(), Expr::Unary(UnOp::Neg, Box::new(Expr::Int(1))));
    }
}
