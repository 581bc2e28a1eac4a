use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::ast::*;
use crate::formula::{Formula, Sort};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DiagnosticKind {
    AssignToFormal,
    ReturnNotLast,
    MissingReturn,
    UndeclaredProcedure,
    InvariantScope,
    ArityMismatch,
    UseBeforeAssign,
    CallInExpression,
    ArrayMisuse,
    UnknownVariable,
    NameClash,
    ReservedName,
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiagnosticKind::AssignToFormal => "assignment-to-formal",
            DiagnosticKind::ReturnNotLast => "return-not-last",
            DiagnosticKind::MissingReturn => "missing-return",
            DiagnosticKind::UndeclaredProcedure => "undeclared-procedure",
            DiagnosticKind::InvariantScope => "invariant-scope",
            DiagnosticKind::ArityMismatch => "arity-mismatch",
            DiagnosticKind::UseBeforeAssign => "use-before-assign",
            DiagnosticKind::CallInExpression => "call-in-expression",
            DiagnosticKind::ArrayMisuse => "array-misuse",
            DiagnosticKind::UnknownVariable => "unknown-variable",
            DiagnosticKind::NameClash => "name-clash",
            DiagnosticKind::ReservedName => "reserved-name",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub pos: Pos,
    pub procedure: Option<Ident>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.kind)?;
        if let Some(p) = &self.procedure {
            write!(f, " in {p}")?;
        }
        write!(f, ": {}", self.message)
    }
}

/// Returns the library unchanged when it is well formed, otherwise every
/// violation found.
pub fn validate(lib: Library) -> Result<Library, Vec<Diagnostic>> {
    let diags = check(&lib);
    if diags.is_empty() {
        Ok(lib)
    } else {
        Err(diags)
    }
}

pub fn check(lib: &Library) -> Vec<Diagnostic> {
    let mut v = Validator {
        lib,
        diags: Vec::new(),
        proc_name: None,
    };
    for g in &lib.globals {
        v.check_declared_name(&g.name, g.pos);
    }
    for p in &lib.procedures {
        v.procedure(p);
    }
    v.diags
}

struct Validator<'a> {
    lib: &'a Library,
    diags: Vec<Diagnostic>,
    proc_name: Option<Ident>,
}

impl<'a> Validator<'a> {
    fn report(&mut self, kind: DiagnosticKind, pos: Pos, message: impl Into<String>) {
        self.diags.push(Diagnostic {
            kind,
            pos,
            procedure: self.proc_name.clone(),
            message: message.into(),
        });
    }

    fn check_declared_name(&mut self, name: &str, pos: Pos) {
        if name.contains(['#', '\'', '~']) {
            self.report(
                DiagnosticKind::ReservedName,
                pos,
                format!("`{name}` uses a character reserved for generated names"),
            );
        }
    }

    fn procedure(&mut self, p: &Procedure) {
        self.proc_name = Some(p.name.clone());
        self.check_declared_name(&p.name, p.pos);
        for x in &p.params {
            self.check_declared_name(x, p.pos);
            if self.lib.is_global(x) {
                self.report(
                    DiagnosticKind::NameClash,
                    p.pos,
                    format!("parameter `{x}` has the name of a global"),
                );
            }
            if self.lib.procedure(x).is_some() {
                self.report(
                    DiagnosticKind::NameClash,
                    p.pos,
                    format!("parameter `{x}` has the name of a procedure"),
                );
            }
        }
        let locals = p.locals(self.lib);
        for x in &locals {
            self.check_declared_name(x, p.pos);
            if self.lib.procedure(x).is_some() {
                self.report(
                    DiagnosticKind::NameClash,
                    p.pos,
                    format!("local `{x}` has the name of a procedure"),
                );
            }
        }

        let returns = p.body.count(|s| matches!(s, Stmt::Return { .. }));
        let ends_with_return = p.return_var().is_some();
        if returns == 0 {
            self.report(DiagnosticKind::MissingReturn, p.pos, "procedure has no return");
        } else if returns > 1 || !ends_with_return {
            p.body.walk(&mut |s| {
                if let Stmt::Return { pos, .. } = s {
                    self.diags.push(Diagnostic {
                        kind: DiagnosticKind::ReturnNotLast,
                        pos: *pos,
                        procedure: Some(p.name.clone()),
                        message: "return must be the last statement and the only one".into(),
                    });
                }
            });
        }

        let mut assigned: BTreeSet<Ident> = p.params.iter().cloned().collect();
        self.stmt(p, &p.body, &mut assigned);

        if let Some(inv) = &p.invariant {
            self.invariant(inv, p.pos);
        }
        self.proc_name = None;
    }

    fn stmt(&mut self, p: &Procedure, s: &Stmt, assigned: &mut BTreeSet<Ident>) {
        match s {
            Stmt::Skip => {}
            Stmt::Seq(items) => items.iter().for_each(|i| self.stmt(p, i, assigned)),
            Stmt::Assign { lhs, rhs, pos } => {
                self.program_expr(p, rhs, *pos, assigned);
                match lhs {
                    LValue::Var(x) => {
                        self.assign_target(p, x, *pos);
                        if self.global_dims(x).is_some_and(|d| d > 0) {
                            self.report(
                                DiagnosticKind::ArrayMisuse,
                                *pos,
                                format!("array `{x}` can only be assigned cell by cell"),
                            );
                        }
                        assigned.insert(x.clone());
                    }
                    LValue::Cell(a, idx) => {
                        for i in idx {
                            self.program_expr(p, i, *pos, assigned);
                        }
                        match self.global_dims(a) {
                            Some(d) if d == idx.len() && d > 0 => {}
                            _ => self.report(
                                DiagnosticKind::ArrayMisuse,
                                *pos,
                                format!("`{a}` is not a {}-dimensional global array", idx.len()),
                            ),
                        }
                    }
                }
            }
            Stmt::Call {
                lhs,
                callee,
                args,
                pos,
            } => {
                for a in args {
                    self.program_expr(p, a, *pos, assigned);
                }
                match self.lib.arity(callee) {
                    None => self.report(
                        DiagnosticKind::UndeclaredProcedure,
                        *pos,
                        format!("call to undeclared procedure `{callee}`"),
                    ),
                    Some(n) if n != args.len() => self.report(
                        DiagnosticKind::ArityMismatch,
                        *pos,
                        format!("`{callee}` takes {n} argument(s), {} given", args.len()),
                    ),
                    _ => {}
                }
                self.assign_target(p, lhs, *pos);
                if self.global_dims(lhs).is_some_and(|d| d > 0) {
                    self.report(
                        DiagnosticKind::ArrayMisuse,
                        *pos,
                        format!("call result cannot be stored into array `{lhs}`"),
                    );
                }
                assigned.insert(lhs.clone());
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
                pos,
            } => {
                self.program_expr(p, cond, *pos, assigned);
                let mut a_then = assigned.clone();
                let mut a_else = assigned.clone();
                self.stmt(p, then_branch, &mut a_then);
                self.stmt(p, else_branch, &mut a_else);
                *assigned = a_then.intersection(&a_else).cloned().collect();
            }
            Stmt::Return { var, pos } => {
                self.read_var(p, var, *pos, assigned);
            }
            Stmt::Havoc(_) | Stmt::Assume(_) | Stmt::Assert { .. } => {}
        }
    }

    fn assign_target(&mut self, p: &Procedure, x: &str, pos: Pos) {
        if p.params.iter().any(|f| f == x) {
            self.report(
                DiagnosticKind::AssignToFormal,
                pos,
                format!("formal parameter `{x}` is read-only"),
            );
        }
    }

    fn global_dims(&self, x: &str) -> Option<usize> {
        self.lib.global(x).map(|g| g.kind.dims())
    }

    fn read_var(&mut self, p: &Procedure, x: &str, pos: Pos, assigned: &BTreeSet<Ident>) {
        match self.global_dims(x) {
            Some(0) => {}
            Some(_) => self.report(
                DiagnosticKind::ArrayMisuse,
                pos,
                format!("array `{x}` used without an index"),
            ),
            None if assigned.contains(x) => {}
            None if p.params.iter().any(|f| f == x) => {}
            None if p.body.assigned_names().contains(x) => self.report(
                DiagnosticKind::UseBeforeAssign,
                pos,
                format!("`{x}` may be read before it is assigned"),
            ),
            None => self.report(
                DiagnosticKind::UnknownVariable,
                pos,
                format!("unknown variable `{x}`"),
            ),
        }
    }

    fn program_expr(&mut self, p: &Procedure, e: &Expr, pos: Pos, assigned: &BTreeSet<Ident>) {
        match e {
            Expr::Int(_) => {}
            Expr::Var(x) => self.read_var(p, x, pos, assigned),
            Expr::Select(a, idx) => {
                match &**a {
                    Expr::Var(name) => match self.global_dims(name) {
                        Some(d) if d == idx.len() && d > 0 => {}
                        _ => self.report(
                            DiagnosticKind::ArrayMisuse,
                            pos,
                            format!("`{name}` is not a {}-dimensional global array", idx.len()),
                        ),
                    },
                    _ => self.report(
                        DiagnosticKind::ArrayMisuse,
                        pos,
                        "only global arrays can be indexed",
                    ),
                }
                for i in idx {
                    self.program_expr(p, i, pos, assigned);
                }
            }
            Expr::Store(..) => self.report(
                DiagnosticKind::ArrayMisuse,
                pos,
                "array update expressions are not allowed in programs",
            ),
            Expr::App(q, _) => self.report(
                DiagnosticKind::CallInExpression,
                pos,
                format!("call to `{q}` inside an expression; calls must be statements `x := {q}(...)`"),
            ),
            Expr::Unary(_, inner) => self.program_expr(p, inner, pos, assigned),
            Expr::Binary(_, l, r) => {
                self.program_expr(p, l, pos, assigned);
                self.program_expr(p, r, pos, assigned);
            }
        }
    }

    fn invariant(&mut self, inv: &Formula, pos: Pos) {
        for x in inv.free_vars() {
            if !self.lib.is_global(&x) {
                self.report(
                    DiagnosticKind::InvariantScope,
                    pos,
                    format!("invariant mentions `{x}`, which is not a global"),
                );
            }
        }
        for (q, n) in inv.apps() {
            match self.lib.arity(&q) {
                None => self.report(
                    DiagnosticKind::UndeclaredProcedure,
                    pos,
                    format!("invariant applies undeclared procedure `{q}`"),
                ),
                Some(m) if m != n => self.report(
                    DiagnosticKind::ArityMismatch,
                    pos,
                    format!("`{q}` takes {m} argument(s), applied to {n}"),
                ),
                _ => {}
            }
        }
        let mut env = BTreeMap::new();
        self.formula_sorts(inv, &mut env, pos);
    }

    fn formula_sorts(&mut self, f: &Formula, env: &mut BTreeMap<Ident, Sort>, pos: Pos) {
        match f {
            Formula::True | Formula::False => {}
            Formula::Atom(e) => self.term_sort(e, env, pos, 0),
            Formula::Not(g) => self.formula_sorts(g, env, pos),
            Formula::And(gs) | Formula::Or(gs) => {
                gs.iter().for_each(|g| self.formula_sorts(g, env, pos))
            }
            Formula::Implies(a, b) => {
                self.formula_sorts(a, env, pos);
                self.formula_sorts(b, env, pos);
            }
            Formula::Exists(bs, body) | Formula::Forall(bs, body) => {
                let saved = env.clone();
                for b in bs {
                    env.insert(b.name.clone(), b.sort);
                }
                self.formula_sorts(body, env, pos);
                *env = saved;
            }
        }
    }

    /// Checks that `e` is used at array dimension `want` (0 for scalars).
    fn term_sort(&mut self, e: &Expr, env: &BTreeMap<Ident, Sort>, pos: Pos, want: usize) {
        let mismatch = |v: &mut Self, what: String| {
            v.report(DiagnosticKind::ArrayMisuse, pos, what);
        };
        match e {
            Expr::Int(_) => {
                if want != 0 {
                    mismatch(self, "integer used where an array is expected".into());
                }
            }
            Expr::Var(x) => {
                let dims = env
                    .get(x)
                    .map(|s| s.dims())
                    .or_else(|| self.global_dims(x));
                if let Some(d) = dims {
                    if d != want {
                        mismatch(self, format!("`{x}` has {d} dimension(s), used with {want}"));
                    }
                }
            }
            Expr::Select(a, idx) => {
                if want != 0 {
                    mismatch(self, "array read used as an array".into());
                }
                self.term_sort(a, env, pos, idx.len());
                idx.iter().for_each(|i| self.term_sort(i, env, pos, 0));
            }
            Expr::Store(a, idx, v) => {
                if want != idx.len() {
                    mismatch(self, "array update used at the wrong dimension".into());
                }
                self.term_sort(a, env, pos, idx.len());
                idx.iter().for_each(|i| self.term_sort(i, env, pos, 0));
                self.term_sort(v, env, pos, 0);
            }
            Expr::App(_, args) => {
                if want != 0 {
                    mismatch(self, "procedure application used as an array".into());
                }
                args.iter().for_each(|a| self.term_sort(a, env, pos, 0));
            }
            Expr::Unary(_, inner) => {
                if want != 0 {
                    mismatch(self, "arithmetic result used as an array".into());
                }
                self.term_sort(inner, env, pos, 0);
            }
            Expr::Binary(op, l, r) => {
                if *op == BinOp::Eq || *op == BinOp::Ne {
                    // Array (in)equality is allowed when both sides agree.
                    let d = self.array_dims_of(l, env).or_else(|| self.array_dims_of(r, env));
                    let d = d.unwrap_or(0);
                    if want != 0 {
                        mismatch(self, "comparison used as an array".into());
                    }
                    self.term_sort(l, env, pos, d);
                    self.term_sort(r, env, pos, d);
                    return;
                }
                if want != 0 {
                    mismatch(self, "arithmetic result used as an array".into());
                }
                self.term_sort(l, env, pos, 0);
                self.term_sort(r, env, pos, 0);
            }
        }
    }

    fn array_dims_of(&self, e: &Expr, env: &BTreeMap<Ident, Sort>) -> Option<usize> {
        match e {
            Expr::Var(x) => env
                .get(x)
                .map(|s| s.dims())
                .or_else(|| self.global_dims(x))
                .filter(|d| *d > 0),
            Expr::Store(_, idx, _) => Some(idx.len()),
            _ => None,
        }
    }
}
