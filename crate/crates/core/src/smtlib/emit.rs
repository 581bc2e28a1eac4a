use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::formula::{base_name, Binder, Formula, Sort};
use crate::frontend::ast::{BinOp, Expr, Ident, Library, UnOp};

pub const LOGIC: &str = "ALL";

/// Sorts of program variables and arities of procedure symbols. Derived names
/// (`g#a`, `g#3`, `x~1`) take the sort of the variable they descend from.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolTable {
    vars: BTreeMap<Ident, Sort>,
    funs: BTreeMap<Ident, usize>,
}

impl SymbolTable {
    pub fn new() -> SymbolTable {
        SymbolTable::default()
    }

    /// Globals with their sorts and every procedure symbol.
    pub fn for_library(lib: &Library) -> SymbolTable {
        let mut t = SymbolTable::new();
        for g in &lib.globals {
            t.declare_var(&g.name, Sort::from_dims(g.kind.dims()));
        }
        for p in &lib.procedures {
            t.declare_fun(&p.name, p.params.len());
        }
        t
    }

    pub fn declare_var(&mut self, name: &str, sort: Sort) {
        self.vars.insert(name.to_string(), sort);
    }

    pub fn declare_fun(&mut self, name: &str, arity: usize) {
        self.funs.insert(name.to_string(), arity);
    }

    pub fn sort_of(&self, name: &str) -> Option<Sort> {
        self.vars
            .get(name)
            .or_else(|| self.vars.get(base_name(name)))
            .copied()
    }

    pub fn arity_of(&self, name: &str) -> Option<usize> {
        self.funs.get(name).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EmitError {
    #[error("undeclared symbol `{0}`")]
    Undeclared(String),
    #[error("`{name}` applied to {given} argument(s) but declared with {declared}")]
    Arity {
        name: String,
        given: usize,
        declared: usize,
    },
}

/// A complete, self-contained solver script.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmtQuery {
    pub logic: String,
    pub declarations: Vec<String>,
    pub assertions: Vec<String>,
    pub produce_models: bool,
    /// Solver symbol back to formula name, for model reading.
    pub names: BTreeMap<String, Ident>,
    /// Declared procedure symbols with arities.
    pub functions: Vec<(Ident, usize)>,
}

impl SmtQuery {
    pub fn text(&self) -> String {
        let mut out = String::new();
        if self.produce_models {
            out.push_str("(set-option :produce-models true)\n");
        }
        let _ = writeln!(out, "(set-logic {})", self.logic);
        for d in &self.declarations {
            out.push_str(d);
            out.push('\n');
        }
        for a in &self.assertions {
            let _ = writeln!(out, "(assert {a})");
        }
        out.push_str("(check-sat)\n");
        if self.produce_models {
            out.push_str("(get-model)\n");
        }
        out.push_str("(exit)\n");
        out
    }
}

const RESERVED: &[&str] = &[
    "_", "!", "as", "let", "exists", "forall", "match", "par", "true", "false", "not", "and",
    "or", "xor", "ite", "distinct", "div", "mod", "abs", "select", "store", "const", "Int",
    "Bool", "Array", "BINARY", "DECIMAL", "HEXADECIMAL", "NUMERAL", "STRING", "assert",
    "check-sat", "declare-fun", "declare-const", "define-fun", "to_real", "to_int", "is_int",
    "Real",
];

/// The solver-side spelling of a formula name.
pub fn smt_symbol(name: &str) -> String {
    if RESERVED.contains(&name) {
        return format!("{name}!u");
    }
    let simple = !name.is_empty()
        && !name.as_bytes()[0].is_ascii_digit()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c));
    if simple {
        name.to_string()
    } else {
        format!("|{name}|")
    }
}

fn sort_text(s: Sort) -> &'static str {
    match s {
        Sort::Int => "Int",
        Sort::Array1 => "(Array Int Int)",
        Sort::Array2 => "(Array Int (Array Int Int))",
    }
}

/// Translates the conjunction of `assertions` into a script whose
/// declarations cover exactly the free symbols used.
pub fn emit_smt2(
    assertions: &[Formula],
    table: &SymbolTable,
    produce_models: bool,
) -> Result<SmtQuery, EmitError> {
    let mut consts: BTreeSet<Ident> = BTreeSet::new();
    let mut funs: BTreeSet<(Ident, usize)> = BTreeSet::new();
    for a in assertions {
        consts.extend(a.free_vars());
        funs.extend(a.apps());
    }
    let mut declarations = Vec::new();
    let mut names = BTreeMap::new();
    let mut functions = Vec::new();
    for (f, n) in &funs {
        match table.arity_of(f) {
            None => return Err(EmitError::Undeclared(f.clone())),
            Some(m) if m != *n => {
                return Err(EmitError::Arity {
                    name: f.clone(),
                    given: *n,
                    declared: m,
                })
            }
            _ => {}
        }
        let sym = smt_symbol(f);
        let args = vec!["Int"; *n].join(" ");
        declarations.push(format!("(declare-fun {sym} ({args}) Int)"));
        names.insert(sym.trim_matches('|').to_string(), f.clone());
        functions.push((f.clone(), *n));
    }
    for c in &consts {
        let sort = table
            .sort_of(c)
            .ok_or_else(|| EmitError::Undeclared(c.clone()))?;
        let sym = smt_symbol(c);
        declarations.push(format!("(declare-const {sym} {})", sort_text(sort)));
        names.insert(sym.trim_matches('|').to_string(), c.clone());
    }
    let assertions = assertions.iter().map(formula_text).collect();
    Ok(SmtQuery {
        logic: LOGIC.to_string(),
        declarations,
        assertions,
        produce_models,
        names,
        functions,
    })
}

pub fn formula_text(f: &Formula) -> String {
    let mut out = String::new();
    write_formula(&mut out, f);
    out
}

fn write_formula(out: &mut String, f: &Formula) {
    match f {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Atom(e) => write_bool(out, e),
        Formula::Not(g) => {
            out.push_str("(not ");
            write_formula(out, g);
            out.push(')');
        }
        Formula::And(gs) | Formula::Or(gs) => {
            let and = matches!(f, Formula::And(_));
            match gs.len() {
                0 => out.push_str(if and { "true" } else { "false" }),
                1 => write_formula(out, &gs[0]),
                _ => {
                    out.push_str(if and { "(and" } else { "(or" });
                    for g in gs {
                        out.push(' ');
                        write_formula(out, g);
                    }
                    out.push(')');
                }
            }
        }
        Formula::Implies(a, b) => {
            out.push_str("(=> ");
            write_formula(out, a);
            out.push(' ');
            write_formula(out, b);
            out.push(')');
        }
        Formula::Exists(bs, body) | Formula::Forall(bs, body) => {
            out.push_str(if matches!(f, Formula::Exists(..)) {
                "(exists ("
            } else {
                "(forall ("
            });
            write_binders(out, bs);
            out.push_str(") ");
            write_formula(out, body);
            out.push(')');
        }
    }
}

fn write_binders(out: &mut String, bs: &[Binder]) {
    for (i, b) in bs.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "({} {})", smt_symbol(&b.name), sort_text(b.sort));
    }
}

fn write_bool(out: &mut String, e: &Expr) {
    match e {
        Expr::Binary(op, l, r) if op.is_comparison() => {
            let head = match op {
                BinOp::Lt => "<",
                BinOp::Le => "<=",
                BinOp::Gt => ">",
                BinOp::Ge => ">=",
                BinOp::Eq => "=",
                BinOp::Ne => "distinct",
                _ => unreachable!(),
            };
            let _ = write!(out, "({head} ");
            write_int(out, l);
            out.push(' ');
            write_int(out, r);
            out.push(')');
        }
        Expr::Binary(op @ (BinOp::And | BinOp::Or), l, r) => {
            out.push_str(if *op == BinOp::And { "(and " } else { "(or " });
            write_bool(out, l);
            out.push(' ');
            write_bool(out, r);
            out.push(')');
        }
        Expr::Unary(UnOp::Not, inner) => {
            out.push_str("(not ");
            write_bool(out, inner);
            out.push(')');
        }
        Expr::Int(c) => out.push_str(if *c != 0 { "true" } else { "false" }),
        other => {
            out.push_str("(not (= ");
            write_int(out, other);
            out.push_str(" 0))");
        }
    }
}

/// Integer-valued (or array-valued) rendering of a term.
fn write_int(out: &mut String, e: &Expr) {
    match e {
        Expr::Int(c) if *c < 0 => {
            let _ = write!(out, "(- {})", c.unsigned_abs());
        }
        Expr::Int(c) => {
            let _ = write!(out, "{c}");
        }
        Expr::Var(x) => out.push_str(&smt_symbol(x)),
        Expr::Select(a, idx) => {
            let mut s = String::new();
            write_int(&mut s, a);
            for i in idx {
                let mut next = format!("(select {s} ");
                write_int(&mut next, i);
                next.push(')');
                s = next;
            }
            out.push_str(&s);
        }
        Expr::Store(a, idx, v) => {
            let mut base = String::new();
            write_int(&mut base, a);
            let idx_text: Vec<String> = idx
                .iter()
                .map(|i| {
                    let mut s = String::new();
                    write_int(&mut s, i);
                    s
                })
                .collect();
            let mut val = String::new();
            write_int(&mut val, v);
            out.push_str(&nested_store(&base, &idx_text, &val));
        }
        Expr::App(p, args) => {
            if args.is_empty() {
                out.push_str(&smt_symbol(p));
                return;
            }
            let _ = write!(out, "({}", smt_symbol(p));
            for a in args {
                out.push(' ');
                write_int(out, a);
            }
            out.push(')');
        }
        Expr::Unary(UnOp::Neg, inner) => {
            out.push_str("(- ");
            write_int(out, inner);
            out.push(')');
        }
        Expr::Binary(op @ (BinOp::Add | BinOp::Sub | BinOp::Mul), l, r) => {
            let _ = write!(out, "({} ", op.symbol());
            write_int(out, l);
            out.push(' ');
            write_int(out, r);
            out.push(')');
        }
        Expr::Binary(op @ (BinOp::Div | BinOp::Mod), l, r) => {
            let head = if *op == BinOp::Div { "div" } else { "mod" };
            let mut rt = String::new();
            write_int(&mut rt, r);
            let mut lt = String::new();
            write_int(&mut lt, l);
            let _ = write!(out, "(ite (= {rt} 0) 0 ({head} {lt} {rt}))");
        }
        other => {
            out.push_str("(ite ");
            write_bool(out, other);
            out.push_str(" 1 0)");
        }
    }
}

/// `a[i1, ..., ik := v]` over curried arrays.
fn nested_store(base: &str, idx: &[String], val: &str) -> String {
    match idx {
        [] => val.to_string(),
        [i] => format!("(store {base} {i} {val})"),
        [i, rest @ ..] => {
            let inner_base = format!("(select {base} {i})");
            format!("(store {base} {i} {})", nested_store(&inner_base, rest, val))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_formula, parse_library};

    fn table() -> SymbolTable {
        let lib = parse_library(
            "var g: int := -1; var lastN: int := 0; var a: [int] int := 0; var m: [int, int] int := 0;
             proc p(n) { return n; }",
        )
        .unwrap();
        SymbolTable::for_library(&lib)
    }

    #[test]
    fn recent_invariant() {
        let phi = parse_formula("g == -1 || g == lastN * p(lastN - 1)").unwrap();
        let q = emit_smt2(&[phi], &table(), false).unwrap();
        let text = q.text();
        assert!(text.contains("(declare-fun p (Int) Int)"));
        assert!(text.contains("(declare-const g Int)"));
        assert!(text.contains("(assert (or (= g (- 1)) (= g (* lastN (p (- lastN 1))))))"), "{text}");
    }

    #[test]
    fn false_and_quantified_select() {
        assert!(emit_smt2(&[Formula::False], &table(), false)
            .unwrap()
            .text()
            .contains("(assert false)"));
        let phi = parse_formula("forall k. a[k] == 0 || a[k] == k * p(k - 1)").unwrap();
        let text = emit_smt2(&[phi], &table(), false).unwrap().text();
        assert!(text.contains("(forall ((k Int)) (or (= (select a k) 0)"), "{text}");
    }

    #[test]
    fn renamed_copies_take_their_base_sort() {
        let phi = parse_formula("a#a[1] == g#b && m#3[1, 2] == 0").unwrap();
        let text = emit_smt2(&[phi], &table(), true).unwrap().text();
        assert!(text.contains("(declare-const |a#a| (Array Int Int))"));
        assert!(text.contains("(declare-const |m#3| (Array Int (Array Int Int)))"));
        assert!(text.contains("(select (select |m#3| 1) 2)"));
        assert!(text.starts_with("(set-option :produce-models true)\n(set-logic ALL)\n"));
    }

    #[test]
    fn two_dimensional_store() {
        let phi = parse_formula("m == m#1[i, j := 5]").unwrap();
        let mut t = table();
        t.declare_var("i", Sort::Int);
        t.declare_var("j", Sort::Int);
        let text = emit_smt2(&[phi], &t, false).unwrap().text();
        assert!(text.contains("(= m (store |m#1| i (store (select |m#1| i) j 5)))"), "{text}");
    }

    #[test]
    fn undeclared_and_coercions() {
        let phi = parse_formula("zz == 1").unwrap();
        assert_eq!(
            emit_smt2(&[phi], &table(), false).unwrap_err(),
            EmitError::Undeclared("zz".into())
        );
        let phi = parse_formula("(g < 1) + 1 == g / 0").unwrap();
        assert_eq!(
            formula_text(&phi),
            "(= (+ (ite (< g 1) 1 0) 1) (ite (= 0 0) 0 (div g 0)))"
        );
        assert_eq!(smt_symbol("select"), "select!u");
    }
}
