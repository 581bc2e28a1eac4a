//! Logic IR for invariants, postconditions and verification conditions.
//!
//! Atoms are integer-valued [`Expr`] terms read as conditions (non-zero is
//! true). The boolean skeleton above the atoms is kept explicit so that path
//! conditions, conjunct lists and disjunct lists can be inspected directly.

mod lift;
mod print;
mod simplify;

use std::collections::{BTreeMap, BTreeSet};

use crate::frontend::ast::{BinOp, Expr, Ident, UnOp};

pub use lift::{dnf, lift_existentials, nnf, skolemize, LiftError, Lifted};
pub use simplify::{alpha_canonical, alpha_eq, eliminate_one_point, simplify, simplify_expr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Int,
    Array1,
    Array2,
}

impl Sort {
    pub fn dims(self) -> usize {
        match self {
            Sort::Int => 0,
            Sort::Array1 => 1,
            Sort::Array2 => 2,
        }
    }

    pub fn from_dims(dims: usize) -> Sort {
        match dims {
            0 => Sort::Int,
            1 => Sort::Array1,
            _ => Sort::Array2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Binder {
    pub name: Ident,
    pub sort: Sort,
}

impl Binder {
    pub fn int(name: impl Into<Ident>) -> Binder {
        Binder {
            name: name.into(),
            sort: Sort::Int,
        }
    }

    pub fn new(name: impl Into<Ident>, sort: Sort) -> Binder {
        Binder {
            name: name.into(),
            sort,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom(Expr),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Exists(Vec<Binder>, Box<Formula>),
    Forall(Vec<Binder>, Box<Formula>),
}

impl Formula {
    /// Lifts the boolean skeleton (`&&`, `||`, `!`) of a condition into
    /// formula nodes; everything below it becomes an atom.
    pub fn from_expr(e: &Expr) -> Formula {
        match e {
            Expr::Binary(BinOp::And, l, r) => {
                Formula::conj(vec![Formula::from_expr(l), Formula::from_expr(r)])
            }
            Expr::Binary(BinOp::Or, l, r) => {
                Formula::disj(vec![Formula::from_expr(l), Formula::from_expr(r)])
            }
            Expr::Unary(UnOp::Not, inner) => Formula::not(Formula::from_expr(inner)),
            other => Formula::Atom(other.clone()),
        }
    }

    pub fn atom(e: Expr) -> Formula {
        Formula::from_expr(&e)
    }

    pub fn eq(lhs: Expr, rhs: Expr) -> Formula {
        Formula::Atom(Expr::eq(lhs, rhs))
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    /// Conjunction; flattens nested conjunctions and drops `true`.
    pub fn conj(items: Vec<Formula>) -> Formula {
        let mut flat = Vec::with_capacity(items.len());
        for f in items {
            match f {
                Formula::And(inner) => flat.extend(inner),
                Formula::True => {}
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Formula::True,
            1 => flat.pop().unwrap(),
            _ => Formula::And(flat),
        }
    }

    /// Disjunction; flattens nested disjunctions and drops `false`.
    pub fn disj(items: Vec<Formula>) -> Formula {
        let mut flat = Vec::with_capacity(items.len());
        for f in items {
            match f {
                Formula::Or(inner) => flat.extend(inner),
                Formula::False => {}
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Formula::False,
            1 => flat.pop().unwrap(),
            _ => Formula::Or(flat),
        }
    }

    pub fn exists(binders: Vec<Binder>, body: Formula) -> Formula {
        if binders.is_empty() {
            body
        } else {
            Formula::Exists(binders, Box::new(body))
        }
    }

    pub fn forall(binders: Vec<Binder>, body: Formula) -> Formula {
        if binders.is_empty() {
            body
        } else {
            Formula::Forall(binders, Box::new(body))
        }
    }

    /// Top-level conjuncts (a non-conjunction is its own single conjunct).
    pub fn conjuncts(&self) -> Vec<&Formula> {
        match self {
            Formula::And(items) => items.iter().collect(),
            Formula::True => vec![],
            other => vec![other],
        }
    }

    /// Top-level disjuncts (a non-disjunction is its own single disjunct).
    pub fn disjuncts(&self) -> Vec<&Formula> {
        match self {
            Formula::Or(items) => items.iter().collect(),
            Formula::False => vec![],
            other => vec![other],
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => true,
            Formula::Not(f) => f.is_quantifier_free(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().all(Formula::is_quantifier_free),
            Formula::Implies(a, b) => a.is_quantifier_free() && b.is_quantifier_free(),
            Formula::Exists(..) | Formula::Forall(..) => false,
        }
    }

    /// Free variables (procedure symbols are not variables).
    pub fn free_vars(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Ident>, out: &mut BTreeSet<Ident>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(e) => {
                let mut vs = BTreeSet::new();
                e.collect_vars(&mut vs);
                out.extend(vs.into_iter().filter(|v| !bound.contains(v)));
            }
            Formula::Not(f) => f.collect_free(bound, out),
            Formula::And(fs) | Formula::Or(fs) => {
                fs.iter().for_each(|f| f.collect_free(bound, out))
            }
            Formula::Implies(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Exists(bs, body) | Formula::Forall(bs, body) => {
                let depth = bound.len();
                bound.extend(bs.iter().map(|b| b.name.clone()));
                body.collect_free(bound, out);
                bound.truncate(depth);
            }
        }
    }

    pub fn has_free(&self, name: &str) -> bool {
        match self {
            Formula::True | Formula::False => false,
            Formula::Atom(e) => e.mentions(name),
            Formula::Not(f) => f.has_free(name),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().any(|f| f.has_free(name)),
            Formula::Implies(a, b) => a.has_free(name) || b.has_free(name),
            Formula::Exists(bs, body) | Formula::Forall(bs, body) => {
                !bs.iter().any(|b| b.name == name) && body.has_free(name)
            }
        }
    }

    /// Procedure symbols with arities.
    pub fn apps(&self) -> BTreeSet<(Ident, usize)> {
        let mut out = BTreeSet::new();
        self.visit_atoms(&mut |e| e.collect_apps(&mut out));
        out
    }

    /// Every identifier, free or bound, including procedure symbols.
    pub fn all_names(&self, out: &mut BTreeSet<Ident>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(e) => {
                e.collect_vars(out);
                let mut apps = BTreeSet::new();
                e.collect_apps(&mut apps);
                out.extend(apps.into_iter().map(|(f, _)| f));
            }
            Formula::Not(f) => f.all_names(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.all_names(out)),
            Formula::Implies(a, b) => {
                a.all_names(out);
                b.all_names(out);
            }
            Formula::Exists(bs, body) | Formula::Forall(bs, body) => {
                out.extend(bs.iter().map(|b| b.name.clone()));
                body.all_names(out);
            }
        }
    }

    pub fn visit_atoms(&self, f: &mut impl FnMut(&Expr)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(e) => f(e),
            Formula::Not(g) => g.visit_atoms(f),
            Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| g.visit_atoms(f)),
            Formula::Implies(a, b) => {
                a.visit_atoms(f);
                b.visit_atoms(f);
            }
            Formula::Exists(_, body) | Formula::Forall(_, body) => body.visit_atoms(f),
        }
    }

    /// Capture-avoiding substitution of `e` for free occurrences of `var`.
    pub fn substitute(&self, var: &str, e: &Expr) -> Formula {
        let mut map = BTreeMap::new();
        map.insert(var.to_string(), e.clone());
        self.substitute_many(&map)
    }

    /// Simultaneous capture-avoiding substitution.
    pub fn substitute_many(&self, map: &BTreeMap<Ident, Expr>) -> Formula {
        if map.is_empty() {
            return self.clone();
        }
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Atom(e) => Formula::Atom(subst_expr(e, map)),
            Formula::Not(f) => Formula::not(f.substitute_many(map)),
            Formula::And(fs) => Formula::And(fs.iter().map(|f| f.substitute_many(map)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|f| f.substitute_many(map)).collect()),
            Formula::Implies(a, b) => {
                Formula::implies(a.substitute_many(map), b.substitute_many(map))
            }
            Formula::Exists(bs, body) => {
                let (bs, body) = subst_under_binders(bs, body, map);
                Formula::Exists(bs, Box::new(body))
            }
            Formula::Forall(bs, body) => {
                let (bs, body) = subst_under_binders(bs, body, map);
                Formula::Forall(bs, Box::new(body))
            }
        }
    }

    /// Renames every free variable `x` to `x#tag`; procedure symbols and
    /// bound variables are left alone.
    pub fn rename_free(&self, tag: &str) -> Formula {
        let map: BTreeMap<Ident, Expr> = self
            .free_vars()
            .into_iter()
            .map(|x| {
                let renamed = tagged(&x, tag);
                (x, Expr::Var(renamed))
            })
            .collect();
        self.substitute_many(&map)
    }
}

/// The name `x#tag` used for renamed copies of `x`.
pub fn tagged(name: &str, tag: &str) -> Ident {
    format!("{name}#{tag}")
}

/// The program variable a (possibly renamed or freshened) name descends from.
pub fn base_name(name: &str) -> &str {
    let end = name.find(['#', '\'', '~']).unwrap_or(name.len());
    &name[..end]
}

pub fn subst_expr(e: &Expr, map: &BTreeMap<Ident, Expr>) -> Expr {
    match e {
        Expr::Int(_) => e.clone(),
        Expr::Var(x) => map.get(x).cloned().unwrap_or_else(|| e.clone()),
        Expr::Select(a, idx) => Expr::Select(
            Box::new(subst_expr(a, map)),
            idx.iter().map(|i| subst_expr(i, map)).collect(),
        ),
        Expr::Store(a, idx, v) => Expr::Store(
            Box::new(subst_expr(a, map)),
            idx.iter().map(|i| subst_expr(i, map)).collect(),
            Box::new(subst_expr(v, map)),
        ),
        Expr::App(f, args) => Expr::App(f.clone(), args.iter().map(|a| subst_expr(a, map)).collect()),
        Expr::Unary(op, inner) => Expr::Unary(*op, Box::new(subst_expr(inner, map))),
        Expr::Binary(op, l, r) => {
            Expr::Binary(*op, Box::new(subst_expr(l, map)), Box::new(subst_expr(r, map)))
        }
    }
}

fn subst_under_binders(
    bs: &[Binder],
    body: &Formula,
    map: &BTreeMap<Ident, Expr>,
) -> (Vec<Binder>, Formula) {
    let mut inner: BTreeMap<Ident, Expr> = map
        .iter()
        .filter(|(k, _)| !bs.iter().any(|b| &b.name == *k) && body.has_free(k))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    if inner.is_empty() {
        return (bs.to_vec(), body.clone());
    }
    let mut incoming = BTreeSet::new();
    for v in inner.values() {
        v.collect_vars(&mut incoming);
    }
    let mut avoid = incoming.clone();
    body.all_names(&mut avoid);
    avoid.extend(inner.keys().cloned());
    avoid.extend(bs.iter().map(|b| b.name.clone()));
    let mut new_bs = Vec::with_capacity(bs.len());
    for b in bs {
        if incoming.contains(&b.name) {
            let fresh = fresh_variant(&b.name, &avoid);
            avoid.insert(fresh.clone());
            inner.insert(b.name.clone(), Expr::Var(fresh.clone()));
            new_bs.push(Binder::new(fresh, b.sort));
        } else {
            new_bs.push(b.clone());
        }
    }
    (new_bs, body.substitute_many(&inner))
}

/// `x'`, `x''`, ...: the first variant of `name` not in `avoid`.
pub fn fresh_variant(name: &str, avoid: &BTreeSet<Ident>) -> Ident {
    let mut candidate = format!("{name}'");
    while avoid.contains(&candidate) {
        candidate.push('\'');
    }
    candidate
}
