use std::fmt::{self, Write as _};

use super::{Binder, Formula, Sort};
use crate::frontend::ast::{BinOp, Expr, UnOp};

const PREC_UNARY: u8 = 8;
const PREC_IMPLIES: u8 = 1;

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self, 0)
    }
}

fn write_expr(out: &mut impl fmt::Write, e: &Expr, ctx: u8) -> fmt::Result {
    match e {
        Expr::Int(c) => write!(out, "{c}"),
        Expr::Var(x) => out.write_str(x),
        Expr::Select(a, idx) => {
            write_postfix_base(out, a)?;
            out.write_char('[')?;
            write_list(out, idx)?;
            out.write_char(']')
        }
        Expr::Store(a, idx, v) => {
            write_postfix_base(out, a)?;
            out.write_char('[')?;
            write_list(out, idx)?;
            out.write_str(" := ")?;
            write_expr(out, v, 0)?;
            out.write_char(']')
        }
        Expr::App(p, args) => {
            write!(out, "{p}(")?;
            write_list(out, args)?;
            out.write_char(')')
        }
        Expr::Unary(op, inner) => {
            let paren = ctx > PREC_UNARY;
            if paren {
                out.write_char('(')?;
            }
            out.write_str(match op {
                UnOp::Not => "!",
                UnOp::Neg => "-",
            })?;
            // `-(1)` keeps a negated literal distinct from the literal `-1`.
            let needs_paren = matches!(
                (op, &**inner),
                (UnOp::Neg, Expr::Int(_)) | (UnOp::Neg, Expr::Unary(UnOp::Neg, _))
            );
            if needs_paren {
                out.write_char('(')?;
                write_expr(out, inner, 0)?;
                out.write_char(')')?;
            } else {
                write_expr(out, inner, PREC_UNARY)?;
            }
            if paren {
                out.write_char(')')?;
            }
            Ok(())
        }
        Expr::Binary(op, l, r) => {
            let p = op.precedence();
            let paren = ctx > p;
            if paren {
                out.write_char('(')?;
            }
            write_expr(out, l, p)?;
            write!(out, " {} ", op.symbol())?;
            write_expr(out, r, p + 1)?;
            if paren {
                out.write_char(')')?;
            }
            Ok(())
        }
    }
}

fn write_postfix_base(out: &mut impl fmt::Write, a: &Expr) -> fmt::Result {
    match a {
        Expr::Var(_) | Expr::Select(..) | Expr::Store(..) | Expr::App(..) => write_expr(out, a, 0),
        _ => {
            out.write_char('(')?;
            write_expr(out, a, 0)?;
            out.write_char(')')
        }
    }
}

fn write_list(out: &mut impl fmt::Write, items: &[Expr]) -> fmt::Result {
    for (i, e) in items.iter().enumerate() {
        if i > 0 {
            out.write_str(", ")?;
        }
        write_expr(out, e, 0)?;
    }
    Ok(())
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::Int => "int",
            Sort::Array1 => "[int] int",
            Sort::Array2 => "[int, int] int",
        })
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(f, self, 0)
    }
}

fn write_binders(out: &mut impl fmt::Write, bs: &[Binder]) -> fmt::Result {
    for (i, b) in bs.iter().enumerate() {
        if i > 0 {
            out.write_str(", ")?;
        }
        out.write_str(&b.name)?;
        if b.sort != Sort::Int {
            write!(out, ": {}", b.sort)?;
        }
    }
    Ok(())
}

fn write_formula(out: &mut impl fmt::Write, f: &Formula, ctx: u8) -> fmt::Result {
    match f {
        Formula::True => out.write_str("true"),
        Formula::False => out.write_str("false"),
        Formula::Atom(e) => write_expr(out, e, ctx.max(BinOp::Eq.precedence())),
        Formula::Not(g) => {
            out.write_char('!')?;
            match &**g {
                Formula::Atom(Expr::Var(_) | Expr::Select(..) | Expr::App(..) | Expr::Int(_))
                | Formula::True
                | Formula::False => write_formula(out, g, PREC_UNARY),
                _ => {
                    out.write_char('(')?;
                    write_formula(out, g, 0)?;
                    out.write_char(')')
                }
            }
        }
        Formula::And(gs) if gs.is_empty() => out.write_str("true"),
        Formula::Or(gs) if gs.is_empty() => out.write_str("false"),
        Formula::And(gs) | Formula::Or(gs) if gs.len() == 1 => write_formula(out, &gs[0], ctx),
        Formula::And(gs) | Formula::Or(gs) => {
            let (p, sym) = if matches!(f, Formula::And(_)) {
                (BinOp::And.precedence(), " && ")
            } else {
                (BinOp::Or.precedence(), " || ")
            };
            let paren = ctx > p;
            if paren {
                out.write_char('(')?;
            }
            for (i, g) in gs.iter().enumerate() {
                if i > 0 {
                    out.write_str(sym)?;
                }
                write_formula(out, g, p + 1)?;
            }
            if paren {
                out.write_char(')')?;
            }
            Ok(())
        }
        Formula::Implies(a, b) => {
            let paren = ctx > PREC_IMPLIES;
            if paren {
                out.write_char('(')?;
            }
            write_formula(out, a, PREC_IMPLIES + 1)?;
            out.write_str(" ==> ")?;
            write_formula(out, b, PREC_IMPLIES)?;
            if paren {
                out.write_char(')')?;
            }
            Ok(())
        }
        Formula::Exists(bs, body) | Formula::Forall(bs, body) => {
            let paren = ctx > 0;
            if paren {
                out.write_char('(')?;
            }
            out.write_str(if matches!(f, Formula::Exists(..)) {
                "exists "
            } else {
                "forall "
            })?;
            write_binders(out, bs)?;
            out.write_str(". ")?;
            write_formula(out, body, 0)?;
            if paren {
                out.write_char(')')?;
            }
            Ok(())
        }
    }
}

impl Formula {
    /// S-expression rendering used by debug output and golden files.
    pub fn to_sexp(&self) -> String {
        let mut s = String::new();
        sexp_formula(&mut s, self);
        s
    }
}

impl Expr {
    pub fn to_sexp(&self) -> String {
        let mut s = String::new();
        sexp_expr(&mut s, self);
        s
    }
}

fn sexp_formula(out: &mut String, f: &Formula) {
    match f {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Atom(e) => sexp_expr(out, e),
        Formula::Not(g) => {
            out.push_str("(not ");
            sexp_formula(out, g);
            out.push(')');
        }
        Formula::And(gs) | Formula::Or(gs) => {
            out.push_str(if matches!(f, Formula::And(_)) { "(and" } else { "(or" });
            for g in gs {
                out.push(' ');
                sexp_formula(out, g);
            }
            out.push(')');
        }
        Formula::Implies(a, b) => {
            out.push_str("(=> ");
            sexp_formula(out, a);
            out.push(' ');
            sexp_formula(out, b);
            out.push(')');
        }
        Formula::Exists(bs, body) | Formula::Forall(bs, body) => {
            out.push_str(if matches!(f, Formula::Exists(..)) {
                "(exists ("
            } else {
                "(forall ("
            });
            for (i, b) in bs.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let sort = match b.sort {
                    Sort::Int => "Int",
                    Sort::Array1 => "(Array Int Int)",
                    Sort::Array2 => "(Array Int (Array Int Int))",
                };
                let _ = write!(out, "({} {sort})", b.name);
            }
            out.push_str(") ");
            sexp_formula(out, body);
            out.push(')');
        }
    }
}

fn sexp_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Int(c) => {
            let _ = write!(out, "{c}");
        }
        Expr::Var(x) => out.push_str(x),
        Expr::Select(a, idx) => {
            out.push_str("(select ");
            sexp_expr(out, a);
            for i in idx {
                out.push(' ');
                sexp_expr(out, i);
            }
            out.push(')');
        }
        Expr::Store(a, idx, v) => {
            out.push_str("(store ");
            sexp_expr(out, a);
            for i in idx {
                out.push(' ');
                sexp_expr(out, i);
            }
            out.push(' ');
            sexp_expr(out, v);
            out.push(')');
        }
        Expr::App(p, args) => {
            let _ = write!(out, "({p}");
            for a in args {
                out.push(' ');
                sexp_expr(out, a);
            }
            out.push(')');
        }
        Expr::Unary(op, inner) => {
            out.push_str(match op {
                UnOp::Not => "(not ",
                UnOp::Neg => "(- ",
            });
            sexp_expr(out, inner);
            out.push(')');
        }
        Expr::Binary(op, l, r) => {
            let sym = match op {
                BinOp::Eq => "=",
                BinOp::Ne => "distinct",
                BinOp::And => "and",
                BinOp::Or => "or",
                BinOp::Div => "div",
                BinOp::Mod => "mod",
                other => other.symbol(),
            };
            let _ = write!(out, "({sym} ");
            sexp_expr(out, l);
            out.push(' ');
            sexp_expr(out, r);
            out.push(')');
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::frontend::parse_formula;

    #[test]
    fn prints_in_annotation_syntax() {
        let phi = parse_formula("g == -1 || g == lastN * p(lastN - 1)").unwrap();
        assert_eq!(phi.to_string(), "g == -1 || g == lastN * p(lastN - 1)");
        let q = parse_formula("forall k. g[k] == 0 || g[k] == k * p(k - 1)").unwrap();
        assert_eq!(q.to_string(), "forall k. g[k] == 0 || g[k] == k * p(k - 1)");
        let n = parse_formula("!(n <= 1) && (a ==> b == c)").unwrap();
        assert_eq!(n.to_string(), "!(n <= 1) && (a ==> b == c)");
    }

    #[test]
    fn sexp_form() {
        let phi = parse_formula("g == -1 || g == lastN * p(lastN - 1)").unwrap();
        assert_eq!(phi.to_sexp(), "(or (= g -1) (= g (* lastN (p (- lastN 1)))))");
    }

    #[test]
    fn sorted_binders_print_their_sort() {
        let phi = parse_formula("exists a: [int] int, x. a[x] == 1").unwrap();
        assert_eq!(phi.to_string(), "exists a: [int] int, x. a[x] == 1");
    }
}
