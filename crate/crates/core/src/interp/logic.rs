use std::collections::BTreeMap;

use super::value::{eval_int, eval_value, EvalError, Scope, Value};
use crate::formula::{Binder, Formula};
use crate::frontend::ast::{BinOp, Expr, Ident};

/// Values a quantified variable ranges over during evaluation. `complete`
/// means the list is known to contain every relevant value, which makes a
/// failed search conclusive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    pub values: Vec<Value>,
    pub complete: bool,
}

pub trait Domains {
    fn domain(&self, binder: &Binder, env: &BTreeMap<Ident, Value>) -> Domain;
}

/// Integers in a window, plus every index stored in an array of the
/// environment. Treated as complete: a bounded check.
pub struct Window(pub i128);

impl Domains for Window {
    fn domain(&self, binder: &Binder, env: &BTreeMap<Ident, Value>) -> Domain {
        if binder.sort != crate::formula::Sort::Int {
            return Domain {
                values: Vec::new(),
                complete: false,
            };
        }
        let mut set: std::collections::BTreeSet<i128> = (-self.0..=self.0).collect();
        for v in env.values() {
            if let Value::Array(a) = v {
                for idx in a.cells.keys() {
                    set.extend(idx.iter().copied());
                }
            }
        }
        Domain {
            values: set.into_iter().map(Value::Int).collect(),
            complete: true,
        }
    }
}

struct Env<'e> {
    vars: &'e BTreeMap<Ident, Value>,
    funs: &'e dyn Fn(&str, &[i128]) -> Option<i128>,
}

impl Scope for Env<'_> {
    fn lookup(&self, name: &str) -> Option<&Value> {
        self.vars.get(name)
    }

    fn apply(&self, name: &str, args: &[i128]) -> Result<i128, EvalError> {
        (self.funs)(name, args).ok_or_else(|| EvalError::Uninterpreted(format!("{name}{args:?}")))
    }
}

/// Three-valued evaluation: `None` when an application has no known value,
/// a fault occurs, or a quantifier search is inconclusive.
pub fn eval_formula(
    f: &Formula,
    vars: &BTreeMap<Ident, Value>,
    funs: &dyn Fn(&str, &[i128]) -> Option<i128>,
    domains: &dyn Domains,
) -> Option<bool> {
    let mut env = vars.clone();
    eval_in(f, &mut env, funs, domains)
}

pub fn eval_term(
    e: &Expr,
    vars: &BTreeMap<Ident, Value>,
    funs: &dyn Fn(&str, &[i128]) -> Option<i128>,
) -> Option<Value> {
    eval_value(e, &Env { vars, funs }).ok()
}

fn eval_in(
    f: &Formula,
    env: &mut BTreeMap<Ident, Value>,
    funs: &dyn Fn(&str, &[i128]) -> Option<i128>,
    domains: &dyn Domains,
) -> Option<bool> {
    match f {
        Formula::True => Some(true),
        Formula::False => Some(false),
        Formula::Atom(e) => atom(e, env, funs),
        Formula::Not(g) => eval_in(g, env, funs, domains).map(|b| !b),
        Formula::And(gs) | Formula::Or(gs) => {
            let is_and = matches!(f, Formula::And(_));
            let mut unknown = false;
            for g in gs {
                match eval_in(g, env, funs, domains) {
                    Some(b) if b != is_and => return Some(b),
                    Some(_) => {}
                    None => unknown = true,
                }
            }
            if unknown {
                None
            } else {
                Some(is_and)
            }
        }
        Formula::Implies(a, b) => match eval_in(a, env, funs, domains) {
            Some(false) => Some(true),
            Some(true) => eval_in(b, env, funs, domains),
            None => match eval_in(b, env, funs, domains) {
                Some(true) => Some(true),
                _ => None,
            },
        },
        Formula::Exists(bs, body) => quantify(bs, body, true, env, funs, domains),
        Formula::Forall(bs, body) => quantify(bs, body, false, env, funs, domains),
    }
}

fn atom(
    e: &Expr,
    env: &BTreeMap<Ident, Value>,
    funs: &dyn Fn(&str, &[i128]) -> Option<i128>,
) -> Option<bool> {
    // Array equality is extensional; everything else is an integer test.
    if let Expr::Binary(op @ (BinOp::Eq | BinOp::Ne), l, r) = e {
        let scope = Env { vars: env, funs };
        let lv = eval_value(l, &scope).ok()?;
        if matches!(lv, Value::Array(_)) {
            let rv = eval_value(r, &scope).ok()?;
            let same = lv == rv;
            return Some(if *op == BinOp::Eq { same } else { !same });
        }
    }
    eval_int(e, &Env { vars: env, funs }).ok().map(|n| n != 0)
}

fn quantify(
    bs: &[Binder],
    body: &Formula,
    existential: bool,
    env: &mut BTreeMap<Ident, Value>,
    funs: &dyn Fn(&str, &[i128]) -> Option<i128>,
    domains: &dyn Domains,
) -> Option<bool> {
    let Some((first, rest)) = bs.split_first() else {
        return eval_in(body, env, funs, domains);
    };
    let dom = domains.domain(first, env);
    let saved = env.remove(&first.name);
    let mut unknown = !dom.complete;
    let mut decided = None;
    for v in dom.values {
        env.insert(first.name.clone(), v);
        match quantify(rest, body, existential, env, funs, domains) {
            Some(b) if b == existential => {
                decided = Some(b);
                break;
            }
            Some(_) => {}
            None => unknown = true,
        }
    }
    env.remove(&first.name);
    if let Some(v) = saved {
        env.insert(first.name.clone(), v);
    }
    match decided {
        Some(b) => Some(b),
        None if unknown => None,
        None => Some(!existential),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_formula;
    use crate::interp::value::ArrayVal;

    fn no_funs(_: &str, _: &[i128]) -> Option<i128> {
        None
    }

    #[test]
    fn bounded_forall_over_array_cells() {
        let phi = parse_formula("forall k. g[k] == 0 || g[k] == k * F(k - 1)").unwrap();
        let mut g = ArrayVal::filled(0);
        g.set(vec![3], 6);
        let mut env = BTreeMap::new();
        env.insert("g".to_string(), Value::Array(g));
        let fact = |name: &str, a: &[i128]| -> Option<i128> {
            (name == "F").then(|| (1..=a[0].max(1)).product())
        };
        assert_eq!(eval_formula(&phi, &env, &fact, &Window(4)), Some(true));
        let wrong = |_: &str, _: &[i128]| Some(5);
        assert_eq!(eval_formula(&phi, &env, &wrong, &Window(4)), Some(false));
        assert_eq!(eval_formula(&phi, &env, &no_funs, &Window(4)), None);
    }

    #[test]
    fn unknown_application_is_inconclusive_unless_masked() {
        let phi = parse_formula("x == 1 || p(x) == 2").unwrap();
        let mut env = BTreeMap::new();
        env.insert("x".to_string(), Value::Int(1));
        assert_eq!(eval_formula(&phi, &env, &no_funs, &Window(0)), Some(true));
        env.insert("x".to_string(), Value::Int(0));
        assert_eq!(eval_formula(&phi, &env, &no_funs, &Window(0)), None);
    }
}
