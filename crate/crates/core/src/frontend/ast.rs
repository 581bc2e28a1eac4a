//! Abstract syntax of libraries: global declarations plus procedures.

use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::formula::Formula;

pub type Ident = String;

/// Source position (1-based). Positions never participate in structural
/// equality, so a re-parsed library compares equal to the original.
#[derive(Debug, Clone, Copy, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub fn new(line: u32, col: u32) -> Self {
        Pos { line, col }
    }
}

impl PartialEq for Pos {
    fn eq(&self, _: &Pos) -> bool {
        true
    }
}

impl Eq for Pos {}

impl Hash for Pos {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength used by both the parser and the printer.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 2,
            BinOp::And => 3,
            BinOp::Eq | BinOp::Ne => 4,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 5,
            BinOp::Add | BinOp::Sub => 6,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 7,
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne
        )
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }

    /// Total integer semantics shared by the interpreter, the simplifier and
    /// the solver encoding: Euclidean division and remainder, with `x / 0` and
    /// `x % 0` both 0. `None` only on machine overflow.
    pub fn apply(self, a: i128, b: i128) -> Option<i128> {
        let bool_val = |c: bool| Some(c as i128);
        match self {
            BinOp::Add => a.checked_add(b),
            BinOp::Sub => a.checked_sub(b),
            BinOp::Mul => a.checked_mul(b),
            BinOp::Div if b == 0 => Some(0),
            BinOp::Mod if b == 0 => Some(0),
            BinOp::Div => a.checked_div_euclid(b),
            BinOp::Mod => a.checked_rem_euclid(b),
            BinOp::Lt => bool_val(a < b),
            BinOp::Le => bool_val(a <= b),
            BinOp::Gt => bool_val(a > b),
            BinOp::Ge => bool_val(a >= b),
            BinOp::Eq => bool_val(a == b),
            BinOp::Ne => bool_val(a != b),
            BinOp::And => bool_val(a != 0 && b != 0),
            BinOp::Or => bool_val(a != 0 || b != 0),
        }
    }
}

impl UnOp {
    pub fn apply(self, a: i128) -> Option<i128> {
        match self {
            UnOp::Not => Some((a == 0) as i128),
            UnOp::Neg => a.checked_neg(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnOp {
    Not,
    Neg,
}

/// Integer-valued terms. Conditions use the convention that zero is false and
/// any other value is true; comparisons and logical operators yield 0 or 1.
///
/// `App` (procedure symbols) and `Store` only occur inside formulas; program
/// expressions are rejected by validation if they contain either.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Int(i128),
    Var(Ident),
    Select(Box<Expr>, Vec<Expr>),
    Store(Box<Expr>, Vec<Expr>, Box<Expr>),
    App(Ident, Vec<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<Ident>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn eq(lhs: Expr, rhs: Expr) -> Expr {
        Expr::bin(BinOp::Eq, lhs, rhs)
    }

    pub fn ne(lhs: Expr, rhs: Expr) -> Expr {
        Expr::bin(BinOp::Ne, lhs, rhs)
    }

    pub fn not(e: Expr) -> Expr {
        Expr::Unary(UnOp::Not, Box::new(e))
    }

    pub fn select(array: impl Into<Ident>, index: Vec<Expr>) -> Expr {
        Expr::Select(Box::new(Expr::Var(array.into())), index)
    }

    pub fn app(name: impl Into<Ident>, args: Vec<Expr>) -> Expr {
        Expr::App(name.into(), args)
    }

    /// Variables (scalar and array) occurring in the term.
    pub fn vars(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Ident>) {
        match self {
            Expr::Int(_) => {}
            Expr::Var(x) => {
                out.insert(x.clone());
            }
            Expr::Select(a, idx) => {
                a.collect_vars(out);
                idx.iter().for_each(|i| i.collect_vars(out));
            }
            Expr::Store(a, idx, v) => {
                a.collect_vars(out);
                idx.iter().for_each(|i| i.collect_vars(out));
                v.collect_vars(out);
            }
            Expr::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            Expr::Unary(_, e) => e.collect_vars(out),
            Expr::Binary(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    pub fn mentions(&self, name: &str) -> bool {
        match self {
            Expr::Int(_) => false,
            Expr::Var(x) => x == name,
            Expr::Select(a, idx) => a.mentions(name) || idx.iter().any(|i| i.mentions(name)),
            Expr::Store(a, idx, v) => {
                a.mentions(name) || idx.iter().any(|i| i.mentions(name)) || v.mentions(name)
            }
            Expr::App(_, args) => args.iter().any(|a| a.mentions(name)),
            Expr::Unary(_, e) => e.mentions(name),
            Expr::Binary(_, l, r) => l.mentions(name) || r.mentions(name),
        }
    }

    /// Procedure symbols applied in the term, with their arities.
    pub fn collect_apps(&self, out: &mut BTreeSet<(Ident, usize)>) {
        match self {
            Expr::Int(_) | Expr::Var(_) => {}
            Expr::Select(a, idx) => {
                a.collect_apps(out);
                idx.iter().for_each(|i| i.collect_apps(out));
            }
            Expr::Store(a, idx, v) => {
                a.collect_apps(out);
                idx.iter().for_each(|i| i.collect_apps(out));
                v.collect_apps(out);
            }
            Expr::App(f, args) => {
                out.insert((f.clone(), args.len()));
                args.iter().for_each(|a| a.collect_apps(out));
            }
            Expr::Unary(_, e) => e.collect_apps(out),
            Expr::Binary(_, l, r) => {
                l.collect_apps(out);
                r.collect_apps(out);
            }
        }
    }

    pub fn contains_app(&self) -> bool {
        let mut apps = BTreeSet::new();
        self.collect_apps(&mut apps);
        !apps.is_empty()
    }

    pub fn contains_store(&self) -> bool {
        match self {
            Expr::Int(_) | Expr::Var(_) => false,
            Expr::Store(..) => true,
            Expr::Select(a, idx) => a.contains_store() || idx.iter().any(Expr::contains_store),
            Expr::App(_, args) => args.iter().any(Expr::contains_store),
            Expr::Unary(_, e) => e.contains_store(),
            Expr::Binary(_, l, r) => l.contains_store() || r.contains_store(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LValue {
    Var(Ident),
    Cell(Ident, Vec<Expr>),
}

impl LValue {
    pub fn name(&self) -> &str {
        match self {
            LValue::Var(x) | LValue::Cell(x, _) => x,
        }
    }
}

/// Where an `assert` was inserted by the body transformation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Site {
    /// The n-th call site, in textual order.
    Call(usize),
    /// The procedure exit (replaces `return`).
    Exit,
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Site::Call(i) => write!(f, "call site {}", i + 1),
            Site::Exit => f.write_str("exit"),
        }
    }
}

/// Statements. `Havoc`, `Assume` and `Assert` are produced only by the body
/// transformation; the parser never creates them.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Stmt {
    Skip,
    Assign {
        lhs: LValue,
        rhs: Expr,
        pos: Pos,
    },
    Call {
        lhs: Ident,
        callee: Ident,
        args: Vec<Expr>,
        pos: Pos,
    },
    Seq(Vec<Stmt>),
    If {
        cond: Expr,
        then_branch: Box<Stmt>,
        else_branch: Box<Stmt>,
        pos: Pos,
    },
    Return {
        var: Ident,
        pos: Pos,
    },
    Havoc(Ident),
    Assume(Formula),
    Assert {
        cond: Formula,
        site: Site,
    },
}

impl Stmt {
    /// Builds a sequence, flattening nested sequences and dropping `Skip`.
    pub fn seq(items: Vec<Stmt>) -> Stmt {
        let mut flat = Vec::with_capacity(items.len());
        for s in items {
            match s {
                Stmt::Seq(inner) => flat.extend(inner),
                Stmt::Skip => {}
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Stmt::Skip,
            1 => flat.pop().unwrap(),
            _ => Stmt::Seq(flat),
        }
    }

    pub fn assign(lhs: impl Into<Ident>, rhs: Expr) -> Stmt {
        Stmt::Assign {
            lhs: LValue::Var(lhs.into()),
            rhs,
            pos: Pos::default(),
        }
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Stmt)) {
        f(self);
        match self {
            Stmt::Seq(items) => items.iter().for_each(|s| s.walk(f)),
            Stmt::If {
                then_branch,
                else_branch,
                ..
            } => {
                then_branch.walk(f);
                else_branch.walk(f);
            }
            _ => {}
        }
    }

    pub fn count(&self, pred: impl Fn(&Stmt) -> bool) -> usize {
        let mut n = 0;
        self.walk(&mut |s| {
            if pred(s) {
                n += 1
            }
        });
        n
    }

    /// Number of root-to-exit paths through the conditional structure.
    pub fn path_count(&self) -> usize {
        match self {
            Stmt::Seq(items) => items.iter().map(Stmt::path_count).product(),
            Stmt::If {
                then_branch,
                else_branch,
                ..
            } => then_branch.path_count() + else_branch.path_count(),
            _ => 1,
        }
    }

    /// Names written by assignments, calls and havocs anywhere in the tree.
    pub fn assigned_names(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        self.walk(&mut |s| match s {
            Stmt::Assign { lhs, .. } => {
                out.insert(lhs.name().to_string());
            }
            Stmt::Call { lhs, .. } | Stmt::Havoc(lhs) => {
                out.insert(lhs.clone());
            }
            _ => {}
        });
        out
    }

    /// Every identifier mentioned anywhere in the tree (variables, callees,
    /// procedure symbols, bound variables of embedded formulas).
    pub fn all_names(&self, out: &mut BTreeSet<Ident>) {
        self.walk(&mut |s| match s {
            Stmt::Assign { lhs, rhs, .. } => {
                out.insert(lhs.name().to_string());
                if let LValue::Cell(_, idx) = lhs {
                    idx.iter().for_each(|i| i.collect_vars(out));
                }
                rhs.collect_vars(out);
            }
            Stmt::Call {
                lhs, callee, args, ..
            } => {
                out.insert(lhs.clone());
                out.insert(callee.clone());
                args.iter().for_each(|a| a.collect_vars(out));
            }
            Stmt::If { cond, .. } => cond.collect_vars(out),
            Stmt::Return { var, .. } | Stmt::Havoc(var) => {
                out.insert(var.clone());
            }
            Stmt::Assume(f) | Stmt::Assert { cond: f, .. } => f.all_names(out),
            Stmt::Skip | Stmt::Seq(_) => {}
        });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GlobalKind {
    Scalar,
    Array1,
    Array2,
}

impl GlobalKind {
    pub fn dims(self) -> usize {
        match self {
            GlobalKind::Scalar => 0,
            GlobalKind::Array1 => 1,
            GlobalKind::Array2 => 2,
        }
    }
}

/// `var g: int := c;` or an array whose every cell starts at `init`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GlobalDecl {
    pub name: Ident,
    pub kind: GlobalKind,
    pub init: i128,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Procedure {
    pub name: Ident,
    pub params: Vec<Ident>,
    pub invariant: Option<Formula>,
    pub body: Stmt,
    pub pos: Pos,
}

impl Procedure {
    /// The variable named by the final `return`, if the body ends with one.
    pub fn return_var(&self) -> Option<&str> {
        match &self.body {
            Stmt::Return { var, .. } => Some(var),
            Stmt::Seq(items) => match items.last() {
                Some(Stmt::Return { var, .. }) => Some(var),
                _ => None,
            },
            _ => None,
        }
    }

    /// Local variables: assigned names that are not globals.
    pub fn locals(&self, lib: &Library) -> BTreeSet<Ident> {
        self.body
            .assigned_names()
            .into_iter()
            .filter(|x| lib.global(x).is_none())
            .collect()
    }

    /// The annotated invariant, or `true` when none was given.
    pub fn invariant_or_true(&self) -> Formula {
        self.invariant.clone().unwrap_or(Formula::True)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Library {
    pub globals: Vec<GlobalDecl>,
    pub procedures: Vec<Procedure>,
}

impl Library {
    pub fn global(&self, name: &str) -> Option<&GlobalDecl> {
        self.globals.iter().find(|g| g.name == name)
    }

    pub fn procedure(&self, name: &str) -> Option<&Procedure> {
        self.procedures.iter().find(|p| p.name == name)
    }

    pub fn is_global(&self, name: &str) -> bool {
        self.global(name).is_some()
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.procedure(name).map(|p| p.params.len())
    }

    /// All identifiers declared or used anywhere; fresh-name generators avoid these.
    pub fn all_names(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        for g in &self.globals {
            out.insert(g.name.clone());
        }
        for p in &self.procedures {
            out.insert(p.name.clone());
            out.extend(p.params.iter().cloned());
            p.body.all_names(&mut out);
            if let Some(inv) = &p.invariant {
                inv.all_names(&mut out);
            }
        }
        out
    }
}
