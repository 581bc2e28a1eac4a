use std::collections::BTreeMap;

use super::{subst_expr, Binder, Formula};
use crate::frontend::ast::{BinOp, Expr, Ident, UnOp};

/// Constant folding plus a few reflexive comparison and read-over-write
/// rewrites. Never changes the value of the term.
pub fn simplify_expr(e: &Expr) -> Expr {
    match e {
        Expr::Int(_) | Expr::Var(_) => e.clone(),
        Expr::App(f, args) => Expr::App(f.clone(), args.iter().map(simplify_expr).collect()),
        Expr::Unary(op, inner) => {
            let inner = simplify_expr(inner);
            match (&inner, op) {
                (Expr::Int(c), _) => match op.apply(*c) {
                    Some(v) => Expr::Int(v),
                    None => Expr::Unary(*op, Box::new(inner)),
                },
                (Expr::Unary(UnOp::Neg, x), UnOp::Neg) => (**x).clone(),
                _ => Expr::Unary(*op, Box::new(inner)),
            }
        }
        Expr::Binary(op, l, r) => {
            let l = simplify_expr(l);
            let r = simplify_expr(r);
            if let (Expr::Int(a), Expr::Int(b)) = (&l, &r) {
                if let Some(v) = op.apply(*a, *b) {
                    return Expr::Int(v);
                }
            }
            if matches!((op, &r), (BinOp::Div | BinOp::Mod, Expr::Int(0))) {
                return Expr::Int(0);
            }
            if l == r {
                match op {
                    BinOp::Eq | BinOp::Le | BinOp::Ge => return Expr::Int(1),
                    BinOp::Ne | BinOp::Lt | BinOp::Gt => return Expr::Int(0),
                    _ => {}
                }
            }
            Expr::bin(*op, l, r)
        }
        Expr::Select(a, idx) => {
            let a = simplify_expr(a);
            let idx: Vec<Expr> = idx.iter().map(simplify_expr).collect();
            read_over_write(a, idx)
        }
        Expr::Store(a, idx, v) => Expr::Store(
            Box::new(simplify_expr(a)),
            idx.iter().map(simplify_expr).collect(),
            Box::new(simplify_expr(v)),
        ),
    }
}

fn read_over_write(a: Expr, idx: Vec<Expr>) -> Expr {
    if let Expr::Store(base, widx, v) = &a {
        if *widx == idx {
            return (**v).clone();
        }
        let distinct = widx
            .iter()
            .zip(&idx)
            .any(|(w, i)| matches!((w, i), (Expr::Int(x), Expr::Int(y)) if x != y));
        if distinct {
            return read_over_write((**base).clone(), idx);
        }
    }
    Expr::Select(Box::new(a), idx)
}

/// Equivalence-preserving syntactic cleanup.
pub fn simplify(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Atom(e) => {
            let e = simplify_expr(e);
            match e {
                Expr::Int(c) => bool_formula(c != 0),
                Expr::Binary(BinOp::And | BinOp::Or, ..) | Expr::Unary(UnOp::Not, _) => {
                    simplify(&Formula::from_expr(&e))
                }
                other => Formula::Atom(other),
            }
        }
        Formula::Not(inner) => match simplify(inner) {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(g) => *g,
            g => Formula::not(g),
        },
        Formula::And(items) => {
            let mut out: Vec<Formula> = Vec::new();
            let mut keys = Vec::new();
            for g in items.iter().map(simplify) {
                for c in flatten_and(g) {
                    match c {
                        Formula::True => {}
                        Formula::False => return Formula::False,
                        c => push_unique(&mut out, &mut keys, c),
                    }
                }
            }
            Formula::conj(out)
        }
        Formula::Or(items) => {
            let mut out: Vec<Formula> = Vec::new();
            let mut keys = Vec::new();
            for g in items.iter().map(simplify) {
                for d in flatten_or(g) {
                    match d {
                        Formula::False => {}
                        Formula::True => return Formula::True,
                        d => push_unique(&mut out, &mut keys, d),
                    }
                }
            }
            Formula::disj(out)
        }
        Formula::Implies(a, b) => {
            let a = simplify(a);
            let b = simplify(b);
            match (&a, &b) {
                (Formula::True, _) => b,
                (Formula::False, _) | (_, Formula::True) => Formula::True,
                (_, Formula::False) => simplify(&Formula::not(a)),
                _ if alpha_eq(&a, &b) => Formula::True,
                _ => Formula::implies(a, b),
            }
        }
        Formula::Exists(bs, body) => simplify_quantifier(bs, body, true),
        Formula::Forall(bs, body) => simplify_quantifier(bs, body, false),
    }
}

fn bool_formula(b: bool) -> Formula {
    if b {
        Formula::True
    } else {
        Formula::False
    }
}

fn flatten_and(f: Formula) -> Vec<Formula> {
    match f {
        Formula::And(items) => items,
        other => vec![other],
    }
}

fn flatten_or(f: Formula) -> Vec<Formula> {
    match f {
        Formula::Or(items) => items,
        other => vec![other],
    }
}

fn push_unique(out: &mut Vec<Formula>, keys: &mut Vec<Formula>, f: Formula) {
    let key = alpha_canonical(&f);
    if !keys.contains(&key) {
        keys.push(key);
        out.push(f);
    }
}

fn simplify_quantifier(bs: &[Binder], body: &Formula, existential: bool) -> Formula {
    let body = simplify(body);
    let mut kept: Vec<Binder> = Vec::new();
    for b in bs {
        if body.has_free(&b.name) && !kept.iter().any(|k| k.name == b.name) {
            kept.push(b.clone());
        }
    }
    if kept.is_empty() {
        return body;
    }
    match (body, existential) {
        (Formula::Exists(inner, b2), true) => {
            kept.extend(inner);
            Formula::Exists(kept, b2)
        }
        (Formula::Forall(inner, b2), false) => {
            kept.extend(inner);
            Formula::Forall(kept, b2)
        }
        (body, true) => Formula::Exists(kept, Box::new(body)),
        (body, false) => Formula::Forall(kept, Box::new(body)),
    }
}

/// Renames bound variables to positional names so alpha-equivalent formulas
/// become structurally equal.
pub fn alpha_canonical(f: &Formula) -> Formula {
    canon(f, &BTreeMap::new(), &mut 0)
}

pub fn alpha_eq(a: &Formula, b: &Formula) -> bool {
    alpha_canonical(a) == alpha_canonical(b)
}

fn canon(f: &Formula, env: &BTreeMap<Ident, Expr>, next: &mut usize) -> Formula {
    match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Atom(e) => Formula::Atom(subst_expr(e, env)),
        Formula::Not(g) => Formula::not(canon(g, env, next)),
        Formula::And(gs) => Formula::And(gs.iter().map(|g| canon(g, env, next)).collect()),
        Formula::Or(gs) => Formula::Or(gs.iter().map(|g| canon(g, env, next)).collect()),
        Formula::Implies(a, b) => Formula::implies(canon(a, env, next), canon(b, env, next)),
        Formula::Exists(bs, body) | Formula::Forall(bs, body) => {
            let mut inner = env.clone();
            let mut new_bs = Vec::with_capacity(bs.len());
            for b in bs {
                let name = format!("%{}", *next);
                *next += 1;
                inner.insert(b.name.clone(), Expr::Var(name.clone()));
                new_bs.push(Binder::new(name, b.sort));
            }
            let body = Box::new(canon(body, &inner, next));
            if matches!(f, Formula::Exists(..)) {
                Formula::Exists(new_bs, body)
            } else {
                Formula::Forall(new_bs, body)
            }
        }
    }
}

/// One-point rule: `exists x. (x == e && φ)` becomes `φ[x := e]` when `x`
/// does not occur in `e`. Existentials are first pushed through
/// disjunctions so each disjunct is eliminated independently.
pub fn eliminate_one_point(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => f.clone(),
        Formula::Not(g) => Formula::not(eliminate_one_point(g)),
        Formula::And(gs) => Formula::conj(gs.iter().map(eliminate_one_point).collect()),
        Formula::Or(gs) => Formula::disj(gs.iter().map(eliminate_one_point).collect()),
        Formula::Implies(a, b) => {
            Formula::implies(eliminate_one_point(a), eliminate_one_point(b))
        }
        Formula::Forall(bs, body) => Formula::forall(bs.clone(), eliminate_one_point(body)),
        Formula::Exists(bs, body) => {
            let body = eliminate_one_point(body);
            if let Formula::Or(ds) = &body {
                return Formula::disj(
                    ds.iter()
                        .map(|d| eliminate_one_point(&Formula::exists(bs.clone(), d.clone())))
                        .collect(),
                );
            }
            eliminate_in_conjunction(bs.to_vec(), body)
        }
    }
}

fn eliminate_in_conjunction(mut bs: Vec<Binder>, body: Formula) -> Formula {
    let mut conjuncts: Vec<Formula> = match body {
        Formula::And(items) => items,
        other => vec![other],
    };
    'outer: loop {
        for bi in 0..bs.len() {
            let x = bs[bi].name.clone();
            for ci in 0..conjuncts.len() {
                if let Some(def) = defining_term(&conjuncts[ci], &x) {
                    conjuncts.remove(ci);
                    bs.remove(bi);
                    conjuncts = conjuncts.iter().map(|c| c.substitute(&x, &def)).collect();
                    continue 'outer;
                }
            }
        }
        break;
    }
    let rest = Formula::conj(conjuncts);
    let kept: Vec<Binder> = bs.into_iter().filter(|b| rest.has_free(&b.name)).collect();
    Formula::exists(kept, rest)
}

fn defining_term(f: &Formula, x: &str) -> Option<Expr> {
    if let Formula::Atom(Expr::Binary(BinOp::Eq, l, r)) = f {
        match (&**l, &**r) {
            (Expr::Var(v), e) if v == x && !e.mentions(x) => return Some(e.clone()),
            (e, Expr::Var(v)) if v == x && !e.mentions(x) => return Some(e.clone()),
            _ => {}
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_formula;

    fn f(src: &str) -> Formula {
        parse_formula(src).unwrap()
    }

    #[test]
    fn drops_unused_existential() {
        assert_eq!(simplify(&f("exists result. g == -1")), f("g == -1"));
    }

    #[test]
    fn idempotent_or() {
        let phi = f("g == lastN * p(lastN - 1)");
        assert_eq!(simplify(&Formula::Or(vec![phi.clone(), phi.clone()])), phi);
    }

    #[test]
    fn removes_duplicate_disjuncts() {
        let input = f("(g == -1 && lastN == 0) || (g == -1 && lastN == 0) || g == lastN * p(lastN - 1)");
        let expected = f("(g == -1 && lastN == 0) || g == lastN * p(lastN - 1)");
        assert_eq!(simplify(&input), expected);
    }

    #[test]
    fn dedup_is_up_to_alpha() {
        let input = f("(exists x. x == g) || (exists y. y == g)");
        assert_eq!(simplify(&input), f("exists x. x == g"));
    }

    #[test]
    fn constant_folding_and_annihilators() {
        assert_eq!(simplify(&f("0 - 1 == -1 || g == 3")), Formula::True);
        assert_eq!(simplify(&f("1 < 0 && g == 3")), Formula::False);
        assert_eq!(simplify(&f("true ==> g == 3")), f("g == 3"));
        assert_eq!(simplify(&f("g == 3 ==> false")), f("!(g == 3)"));
        assert_eq!(simplify(&f("x / 0 == 0")), Formula::True);
    }

    #[test]
    fn read_over_write_rules() {
        assert_eq!(simplify(&f("a[5 := v][5] == v")), Formula::True);
        assert_eq!(simplify(&f("a[5 := v][4] == w")), f("a[4] == w"));
        assert_eq!(simplify(&f("a[i := v][j] == w")), f("a[i := v][j] == w"));
    }

    #[test]
    fn one_point_elimination() {
        let input = f("exists r. r == g && g == lastN * p(lastN - 1) && r > 0");
        assert_eq!(eliminate_one_point(&input), f("g == lastN * p(lastN - 1) && g > 0"));
        let split = f("exists x. (x == 1 && g == x) || (g == 2 && x > 0)");
        assert_eq!(
            eliminate_one_point(&split),
            f("g == 1 || (exists x. g == 2 && x > 0)")
        );
    }
}
