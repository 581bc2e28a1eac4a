//! Strongest postconditions and verification conditions over transformed
//! bodies, computed path by path.

use std::collections::{BTreeMap, BTreeSet};

use crate::formula::{Binder, Formula, Sort};
use crate::frontend::ast::*;
use crate::transform::{init_formula, transform_body, TransformedBody};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VcError {
    #[error("malformed input: {0}")]
    MalformedInput(String),
}

/// One root-to-exit path through a transformed body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathCondition {
    pub formula: Formula,
    /// Branch decisions in execution order (`true` = then).
    pub choices: Vec<bool>,
    /// `(fresh, var)`: `fresh` names the value `var` had just before the
    /// statement that introduced it, in execution order.
    pub ghosts: Vec<(Ident, Ident)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Obligation {
    pub site: Site,
    /// Disjunction of the path conditions reaching the assertion.
    pub pre: Formula,
    pub assertion: Formula,
    /// Number of paths reaching the site.
    pub paths: usize,
}

impl Obligation {
    pub fn formula(&self) -> Formula {
        Formula::implies(self.pre.clone(), self.assertion.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostVcResult {
    pub post: Formula,
    pub vc: Formula,
    pub paths: Vec<PathCondition>,
    pub obligations: Vec<Obligation>,
    pub init: Formula,
    pub tb: TransformedBody,
}

struct Engine {
    taken: BTreeSet<Ident>,
    counter: usize,
    sorts: BTreeMap<Ident, Sort>,
    obligations: Vec<(Site, Formula, Formula)>,
}

impl Engine {
    fn new(taken: BTreeSet<Ident>, sorts: BTreeMap<Ident, Sort>) -> Engine {
        Engine {
            taken,
            counter: 0,
            sorts,
            obligations: Vec::new(),
        }
    }

    fn fresh(&mut self, x: &str) -> Ident {
        loop {
            self.counter += 1;
            let name = format!("{x}#{}", self.counter);
            if self.taken.insert(name.clone()) {
                return name;
            }
        }
    }

    fn sort_of(&self, x: &str) -> Sort {
        self.sorts.get(x).copied().unwrap_or(Sort::Int)
    }

    fn run(&mut self, paths: Vec<PathCondition>, s: &Stmt) -> Result<Vec<PathCondition>, VcError> {
        match s {
            Stmt::Skip => Ok(paths),
            Stmt::Seq(items) => {
                let mut cur = paths;
                for item in items {
                    cur = self.run(cur, item)?;
                }
                Ok(cur)
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
                ..
            } => {
                let c = Formula::from_expr(cond);
                let mut out = Vec::new();
                for p in paths {
                    let then_in = PathCondition {
                        formula: Formula::conj(vec![p.formula.clone(), c.clone()]),
                        choices: extend(&p.choices, true),
                        ghosts: p.ghosts.clone(),
                    };
                    let else_in = PathCondition {
                        formula: Formula::conj(vec![p.formula, Formula::not(c.clone())]),
                        choices: extend(&p.choices, false),
                        ghosts: p.ghosts,
                    };
                    out.extend(self.run(vec![then_in], then_branch)?);
                    out.extend(self.run(vec![else_in], else_branch)?);
                }
                Ok(out)
            }
            Stmt::Assign { lhs, rhs, .. } => Ok(paths
                .into_iter()
                .map(|p| self.assign(p, lhs, rhs))
                .collect()),
            Stmt::Havoc(x) => Ok(paths
                .into_iter()
                .map(|mut p| {
                    if p.formula.has_free(x) {
                        let old = self.fresh(x);
                        let body = p.formula.substitute(x, &Expr::Var(old.clone()));
                        p.formula = Formula::Exists(
                            vec![Binder::new(old.clone(), self.sort_of(x))],
                            Box::new(body),
                        );
                        p.ghosts.push((old, x.clone()));
                    }
                    p
                })
                .collect()),
            Stmt::Assume(f) => Ok(paths
                .into_iter()
                .map(|mut p| {
                    p.formula = Formula::conj(vec![p.formula, f.clone()]);
                    p
                })
                .collect()),
            Stmt::Assert { cond, site } => {
                for p in &paths {
                    self.obligations.push((*site, p.formula.clone(), cond.clone()));
                }
                Ok(paths)
            }
            Stmt::Call { callee, .. } => Err(VcError::MalformedInput(format!(
                "call to `{callee}` in an untransformed body"
            ))),
            Stmt::Return { var, .. } => Err(VcError::MalformedInput(format!(
                "`return {var}` in an untransformed body"
            ))),
        }
    }

    fn assign(&mut self, mut p: PathCondition, lhs: &LValue, rhs: &Expr) -> PathCondition {
        match lhs {
            LValue::Var(x) => {
                let mentioned = p.formula.has_free(x) || rhs.mentions(x);
                if mentioned {
                    let old = self.fresh(x);
                    let mut map = BTreeMap::new();
                    map.insert(x.clone(), Expr::Var(old.clone()));
                    let pre = p.formula.substitute_many(&map);
                    let e = crate::formula::subst_expr(rhs, &map);
                    let binder = vec![Binder::new(old.clone(), self.sort_of(x))];
                    let eq = Formula::eq(Expr::Var(x.clone()), e);
                    p.formula = if eq.has_free(&old) {
                        // Only reachable without the self-assignment rewrite.
                        Formula::Exists(binder, Box::new(Formula::conj(vec![pre, eq])))
                    } else if pre.has_free(&old) {
                        Formula::conj(vec![Formula::Exists(binder, Box::new(pre)), eq])
                    } else {
                        Formula::conj(vec![pre, eq])
                    };
                    p.ghosts.push((old, x.clone()));
                } else {
                    p.formula = Formula::conj(vec![p.formula, Formula::eq(Expr::Var(x.clone()), rhs.clone())]);
                }
                p
            }
            LValue::Cell(a, idx) => {
                let old = self.fresh(a);
                let mut map = BTreeMap::new();
                map.insert(a.clone(), Expr::Var(old.clone()));
                let pre = p.formula.substitute_many(&map);
                let idx: Vec<Expr> = idx.iter().map(|i| crate::formula::subst_expr(i, &map)).collect();
                let e = crate::formula::subst_expr(rhs, &map);
                let update = Formula::eq(
                    Expr::Var(a.clone()),
                    Expr::Store(Box::new(Expr::Var(old.clone())), idx, Box::new(e)),
                );
                p.formula = Formula::Exists(
                    vec![Binder::new(old.clone(), self.sort_of(a))],
                    Box::new(Formula::conj(vec![pre, update])),
                );
                p.ghosts.push((old, a.clone()));
                p
            }
        }
    }
}

fn extend(v: &[bool], b: bool) -> Vec<bool> {
    let mut out = v.to_vec();
    out.push(b);
    out
}

fn sorts_of(lib: &Library) -> BTreeMap<Ident, Sort> {
    lib.globals
        .iter()
        .map(|g| (g.name.clone(), Sort::from_dims(g.kind.dims())))
        .collect()
}

fn start(pre: &Formula) -> Vec<PathCondition> {
    vec![PathCondition {
        formula: pre.clone(),
        choices: Vec::new(),
        ghosts: Vec::new(),
    }]
}

fn engine_for(pre: &Formula, s: &Stmt, sorts: BTreeMap<Ident, Sort>) -> Engine {
    let mut taken = BTreeSet::new();
    pre.all_names(&mut taken);
    s.all_names(&mut taken);
    Engine::new(taken, sorts)
}

/// `POST(pre, s)` as a disjunction with one disjunct per path.
pub fn post(pre: &Formula, s: &Stmt) -> Result<Formula, VcError> {
    let mut eng = engine_for(pre, s, BTreeMap::new());
    let paths = eng.run(start(pre), s)?;
    Ok(Formula::Or(paths.into_iter().map(|p| p.formula).collect()))
}

/// `VC(pre, s)`: one implication per assertion site, `true` if there is none.
pub fn vc(pre: &Formula, s: &Stmt) -> Result<Formula, VcError> {
    let mut eng = engine_for(pre, s, BTreeMap::new());
    eng.run(start(pre), s)?;
    let obligations = group(eng.obligations);
    Ok(Formula::conj(obligations.iter().map(Obligation::formula).collect()))
}

fn group(raw: Vec<(Site, Formula, Formula)>) -> Vec<Obligation> {
    let mut out: Vec<Obligation> = Vec::new();
    let mut pres: Vec<Vec<Formula>> = Vec::new();
    for (site, pre, assertion) in raw {
        match out.iter().position(|o| o.site == site) {
            Some(i) => pres[i].push(pre),
            None => {
                out.push(Obligation {
                    site,
                    pre: Formula::False,
                    assertion,
                    paths: 0,
                });
                pres.push(vec![pre]);
            }
        }
    }
    for (o, ps) in out.iter_mut().zip(pres) {
        o.paths = ps.len();
        o.pre = if ps.len() == 1 {
            ps.into_iter().next().unwrap()
        } else {
            Formula::Or(ps)
        };
    }
    out
}

/// `POSTVC(p, inv)`.
pub fn postvc(lib: &Library, p: &Procedure, inv: &Formula) -> Result<PostVcResult, VcError> {
    let tb = transform_body(lib, p, inv);
    postvc_of(lib, tb)
}

pub fn postvc_of(lib: &Library, tb: TransformedBody) -> Result<PostVcResult, VcError> {
    let inv = tb.invariant.clone();
    let mut eng = engine_for(&inv, &tb.body, sorts_of(lib));
    eng.taken.extend(lib.all_names());
    let paths = eng.run(start(&inv), &tb.body)?;
    let obligations = group(std::mem::take(&mut eng.obligations));
    let init = init_formula(lib);
    let mut conjuncts: Vec<Formula> = obligations.iter().map(Obligation::formula).collect();
    conjuncts.push(Formula::implies(init.clone(), inv));
    Ok(PostVcResult {
        post: Formula::Or(paths.iter().map(|p| p.formula.clone()).collect()),
        vc: Formula::And(conjuncts),
        paths,
        obligations,
        init,
        tb,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_formula, parse_library};

    fn f(src: &str) -> Formula {
        parse_formula(src).unwrap()
    }

    #[test]
    fn assignment_rule() {
        let s = Stmt::assign("result", Expr::Int(1));
        assert_eq!(post(&f("g == -1"), &s).unwrap(), Formula::Or(vec![f("g == -1 && result == 1")]));
        let s = Stmt::assign("g", Expr::Int(1));
        let out = post(&f("g == -1"), &s).unwrap();
        assert_eq!(out.to_string(), "(exists g#1. g#1 == -1) && g == 1");
    }

    #[test]
    fn assume_and_assert_rules() {
        let assume = Stmt::Assume(f("x > 0"));
        assert_eq!(post(&Formula::True, &assume).unwrap(), Formula::Or(vec![f("x > 0")]));
        let assert = Stmt::Assert {
            cond: f("x > 0"),
            site: Site::Exit,
        };
        assert_eq!(post(&f("x == 2"), &assert).unwrap(), Formula::Or(vec![f("x == 2")]));
        assert_eq!(vc(&f("x == 2"), &assert).unwrap(), f("x == 2 ==> x > 0"));
        assert_eq!(vc(&f("x == 2"), &Stmt::assign("y", Expr::Int(1))).unwrap(), Formula::True);
    }

    #[test]
    fn havoc_rule_binds_old_value() {
        let out = post(&f("g == 3 && h == g"), &Stmt::Havoc("g".into())).unwrap();
        assert_eq!(out.to_string(), "exists g#1. g#1 == 3 && h == g#1");
    }

    #[test]
    fn array_store_rule() {
        let lib = parse_library("var a: [int] int := 0; proc f(i) { a[i] := a[i] + 1; return i; }").unwrap();
        let r = postvc(&lib, &lib.procedures[0], &Formula::True).unwrap();
        assert_eq!(
            r.post.to_string(),
            "exists a#1: [int] int. t1 == a#1[i] + 1 && a == a#1[i := t1]"
        );
    }

    #[test]
    fn fact_cache_paths_and_obligations() {
        let lib = parse_library(
            "var g: int := -1; var lastN: int := 0;
             proc factCache(n) invariant g == -1 || g == lastN * factCache(lastN - 1); {
               if (n <= 1) { result := 1; }
               else if (g != -1 && n == lastN) { result := g; }
               else { t2 := factCache(n - 1); g := n * t2; lastN := n; result := g; }
               return result; }",
        )
        .unwrap();
        let p = &lib.procedures[0];
        let r = postvc(&lib, p, p.invariant.as_ref().unwrap()).unwrap();
        assert_eq!(r.paths.len(), 3);
        assert_eq!(r.post.disjuncts().len(), 3);
        assert_eq!(
            r.paths[0].formula,
            f("(g == -1 || g == lastN * factCache(lastN - 1)) && n <= 1 && result == 1")
        );
        assert_eq!(r.obligations.len(), 2);
        assert_eq!(r.obligations[0].site, Site::Call(0));
        assert_eq!(r.obligations[1].site, Site::Exit);
        assert_eq!(r.obligations[1].paths, 3);
        assert_eq!(r.vc.conjuncts().len(), 3);
        assert_eq!(r.init, f("g == -1 && lastN == 0"));
    }

    #[test]
    fn calls_are_rejected() {
        let lib = parse_library("proc f(n) { r := f(n); return r; }").unwrap();
        assert!(post(&Formula::True, &lib.procedures[0].body).is_err());
    }
}
