use std::collections::{BTreeMap, BTreeSet};

use super::{Binder, Formula};
use crate::frontend::ast::{Expr, Ident};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LiftError {
    #[error("universal quantifier over {0} cannot be lifted to an existential prefix")]
    Universal(String),
}

/// An existential prefix over a matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lifted {
    pub binders: Vec<Binder>,
    pub matrix: Formula,
}

impl Lifted {
    pub fn into_formula(self) -> Formula {
        Formula::exists(self.binders, self.matrix)
    }
}

/// Negation normal form: no implications, negation only directly above atoms.
pub fn nnf(f: &Formula) -> Formula {
    to_nnf(f, true)
}

fn to_nnf(f: &Formula, positive: bool) -> Formula {
    match (f, positive) {
        (Formula::True, true) | (Formula::False, false) => Formula::True,
        (Formula::True, false) | (Formula::False, true) => Formula::False,
        (Formula::Atom(_), true) => f.clone(),
        (Formula::Atom(_), false) => Formula::not(f.clone()),
        (Formula::Not(g), _) => to_nnf(g, !positive),
        (Formula::And(gs), true) | (Formula::Or(gs), false) => {
            Formula::conj(gs.iter().map(|g| to_nnf(g, positive)).collect())
        }
        (Formula::Or(gs), true) | (Formula::And(gs), false) => {
            Formula::disj(gs.iter().map(|g| to_nnf(g, positive)).collect())
        }
        (Formula::Implies(a, b), true) => Formula::disj(vec![to_nnf(a, false), to_nnf(b, true)]),
        (Formula::Implies(a, b), false) => {
            Formula::conj(vec![to_nnf(a, true), to_nnf(b, false)])
        }
        (Formula::Exists(bs, body), true) | (Formula::Forall(bs, body), false) => {
            Formula::Exists(bs.clone(), Box::new(to_nnf(body, positive)))
        }
        (Formula::Forall(bs, body), true) | (Formula::Exists(bs, body), false) => {
            Formula::Forall(bs.clone(), Box::new(to_nnf(body, positive)))
        }
    }
}

/// Moves every existential to a single outermost prefix with unique binder
/// names. Fails if the formula contains a universal quantifier, or an
/// existential under negation (which is one in disguise).
pub fn lift_existentials(f: &Formula) -> Result<Lifted, LiftError> {
    let mut h = Hoister::new(f, true);
    let matrix = h.hoist(&nnf(f))?;
    Ok(Lifted {
        binders: h.binders,
        matrix,
    })
}

/// Like [`lift_existentials`], but universally quantified subformulas are left
/// in place (existentials beneath them stay there too). The prefix variables
/// can be read as Skolem constants for a satisfiability check.
pub fn skolemize(f: &Formula) -> Lifted {
    let mut h = Hoister::new(f, false);
    let matrix = h.hoist(&nnf(f)).expect("lenient hoisting cannot fail");
    Lifted {
        binders: h.binders,
        matrix,
    }
}

struct Hoister {
    strict: bool,
    free: BTreeSet<Ident>,
    taken: BTreeSet<Ident>,
    binders: Vec<Binder>,
}

impl Hoister {
    fn new(f: &Formula, strict: bool) -> Hoister {
        let mut taken = BTreeSet::new();
        f.all_names(&mut taken);
        let mut free = f.free_vars();
        free.extend(f.apps().into_iter().map(|(p, _)| p));
        Hoister {
            strict,
            free,
            taken,
            binders: Vec::new(),
        }
    }

    fn choose(&mut self, name: &str) -> Ident {
        let chosen = self.binders.iter().any(|b| b.name == name);
        if !chosen && !self.free.contains(name) {
            return name.to_string();
        }
        let mut k = 1;
        loop {
            let candidate = format!("{name}~{k}");
            if !self.taken.contains(&candidate) {
                self.taken.insert(candidate.clone());
                return candidate;
            }
            k += 1;
        }
    }

    fn hoist(&mut self, f: &Formula) -> Result<Formula, LiftError> {
        Ok(match f {
            Formula::And(gs) => {
                Formula::And(gs.iter().map(|g| self.hoist(g)).collect::<Result<_, _>>()?)
            }
            Formula::Or(gs) => {
                Formula::Or(gs.iter().map(|g| self.hoist(g)).collect::<Result<_, _>>()?)
            }
            Formula::Exists(bs, body) => {
                let mut map = BTreeMap::new();
                for b in bs {
                    let name = self.choose(&b.name);
                    if name != b.name {
                        map.insert(b.name.clone(), Expr::Var(name.clone()));
                    }
                    self.binders.push(Binder::new(name, b.sort));
                }
                self.hoist(&body.substitute_many(&map))?
            }
            Formula::Forall(bs, _) if self.strict => {
                let names: Vec<&str> = bs.iter().map(|b| b.name.as_str()).collect();
                return Err(LiftError::Universal(names.join(", ")));
            }
            other => other.clone(),
        })
    }
}

/// Disjunctive normal form of an NNF formula, as a list of cubes (conjunct
/// lists). Quantified subformulas are treated as literals. `None` when more
/// than `cap` cubes would be produced.
pub fn dnf(f: &Formula, cap: usize) -> Option<Vec<Vec<Formula>>> {
    match f {
        Formula::True => Some(vec![vec![]]),
        Formula::False => Some(vec![]),
        Formula::Or(gs) => {
            let mut out = Vec::new();
            for g in gs {
                out.extend(dnf(g, cap)?);
                if out.len() > cap {
                    return None;
                }
            }
            Some(out)
        }
        Formula::And(gs) => {
            let mut acc: Vec<Vec<Formula>> = vec![vec![]];
            for g in gs {
                let cubes = dnf(g, cap)?;
                if acc.len() * cubes.len() > cap {
                    return None;
                }
                let mut next = Vec::with_capacity(acc.len() * cubes.len());
                for a in &acc {
                    for c in &cubes {
                        let mut cube = a.clone();
                        cube.extend(c.iter().cloned());
                        next.push(cube);
                    }
                }
                acc = next;
            }
            Some(acc)
        }
        other => Some(vec![vec![other.clone()]]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_formula;

    fn f(src: &str) -> Formula {
        parse_formula(src).unwrap()
    }

    #[test]
    fn lifts_nested_with_fresh_names() {
        let lifted = lift_existentials(&f("exists x. x == 1 && (exists x. x == 2)")).unwrap();
        assert_eq!(lifted.binders.len(), 2);
        assert_ne!(lifted.binders[0].name, lifted.binders[1].name);
        assert!(lifted.matrix.is_quantifier_free());
        let (a, b) = (&lifted.binders[0].name, &lifted.binders[1].name);
        let expected = Formula::And(vec![
            Formula::eq(Expr::var(a.clone()), Expr::Int(1)),
            Formula::eq(Expr::var(b.clone()), Expr::Int(2)),
        ]);
        assert_eq!(lifted.matrix, expected);
    }

    #[test]
    fn quantifier_free_is_identity() {
        let phi = f("g == -1 || g == lastN * p(lastN - 1)");
        let lifted = lift_existentials(&phi).unwrap();
        assert!(lifted.binders.is_empty());
        assert_eq!(lifted.matrix, phi);
    }

    #[test]
    fn binder_clashing_with_free_variable_is_renamed() {
        let lifted = lift_existentials(&f("x == 0 && (exists x. x == 2)")).unwrap();
        assert_eq!(lifted.binders[0].name, "x~1");
        assert_eq!(lifted.matrix, f("x == 0 && x~1 == 2"));
    }

    #[test]
    fn universal_is_rejected_strictly_and_kept_leniently() {
        let phi = f("(exists y. y == g) && (forall k. a[k] == 0)");
        assert!(matches!(lift_existentials(&phi), Err(LiftError::Universal(_))));
        let sk = skolemize(&phi);
        assert_eq!(sk.binders, vec![Binder::int("y")]);
        assert_eq!(sk.matrix, f("y == g && (forall k. a[k] == 0)"));
    }

    #[test]
    fn negated_existential_becomes_universal() {
        let phi = f("!(exists y. y == g)");
        assert!(lift_existentials(&phi).is_err());
        let sk = skolemize(&phi);
        assert!(sk.binders.is_empty());
        assert_eq!(sk.matrix, f("forall y. !(y == g)"));
    }

    #[test]
    fn dnf_cross_product() {
        let cubes = dnf(&f("(a == 1 || b == 1) && c == 1"), 16).unwrap();
        assert_eq!(cubes.len(), 2);
        assert!(dnf(&f("(a == 1 || b == 1) && (c == 1 || d == 1)"), 3).is_none());
    }
}
