//! Candidate invariants by iterated weakening: `I_0` is the initial state,
//! `I_k = Simplify(I_{k-1} || Next(I_{k-1}))`, stopping at the first `I_k`
//! equivalent to its predecessor.

use serde::Serialize;

use crate::formula::{
    alpha_eq, dnf, eliminate_one_point, simplify, skolemize, Binder, Formula,
};
use crate::frontend::ast::{BinOp, Expr, Library, Procedure};
use crate::smtlib::{
    check_sat, emit_smt2, EmitError, Model, SolverAnswer, SolverConfig, SolverError, SymbolTable,
};
use crate::transform::{init_formula, transform_body, TransformedBody};
use crate::vcgen::{postvc_of, VcError};

/// How a disjunct produced by `Next` is simplified before it joins the
/// candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimplifyMode {
    /// Keep only the equations and universally quantified facts over
    /// globals; every other conjunct is dropped (a weakening).
    #[default]
    Equational,
    /// Keep the disjunct as computed, after one-point elimination.
    Exact,
}

pub const DEFAULT_MAX_ITERS: usize = 8;
const DNF_CAP: usize = 256;

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub max_iters: usize,
    pub mode: SimplifyMode,
    pub solver: SolverConfig,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_iters: DEFAULT_MAX_ITERS,
            mode: SimplifyMode::default(),
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum InvGenError {
    #[error(transparent)]
    Vc(#[from] VcError),
    #[error(transparent)]
    Emit(#[from] EmitError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Validity {
    Valid,
    Invalid(Model),
    Unknown(String),
}

/// Validity of the universal closure of `f`, by unsatisfiability of its
/// negation. Free names that are not globals are integers.
pub fn valid(lib: &Library, f: &Formula, cfg: &SolverConfig) -> Result<Validity, InvGenError> {
    let neg = skolemize(&Formula::not(f.clone()));
    let mut table = SymbolTable::for_library(lib);
    for b in &neg.binders {
        table.declare_var(&b.name, b.sort);
    }
    for x in neg.matrix.free_vars() {
        if table.sort_of(&x).is_none() {
            table.declare_var(&x, crate::formula::Sort::Int);
        }
    }
    let q = emit_smt2(std::slice::from_ref(&neg.matrix), &table, true)?;
    Ok(match check_sat(&q, cfg)?.answer {
        SolverAnswer::Unsat => Validity::Valid,
        SolverAnswer::Sat(m) => Validity::Invalid(m),
        SolverAnswer::Unknown(r) => Validity::Unknown(r),
        SolverAnswer::Timeout => Validity::Unknown("timeout".to_string()),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Equivalence {
    Yes,
    /// A model separating the two formulas.
    No(Model),
    Unknown(String),
}

pub fn equiv(lib: &Library, a: &Formula, b: &Formula, cfg: &SolverConfig) -> Result<Equivalence, InvGenError> {
    for f in [
        Formula::implies(a.clone(), b.clone()),
        Formula::implies(b.clone(), a.clone()),
    ] {
        match valid(lib, &f, cfg)? {
            Validity::Valid => {}
            Validity::Invalid(m) => return Ok(Equivalence::No(m)),
            Validity::Unknown(r) => return Ok(Equivalence::Unknown(r)),
        }
    }
    Ok(Equivalence::Yes)
}

/// Splits `exists bound. f` into cubes, each closed over the bound names it
/// still mentions after one-point elimination.
fn cubes(f: &Formula, bound: &[Binder]) -> Vec<Formula> {
    let lifted = skolemize(f);
    let mut binders: Vec<Binder> = bound.to_vec();
    binders.extend(lifted.binders);
    let raw = dnf(&lifted.matrix, DNF_CAP).unwrap_or_else(|| vec![vec![lifted.matrix.clone()]]);
    raw.into_iter()
        .map(|cube| {
            let body = Formula::conj(cube);
            let used = binders
                .iter()
                .filter(|b| body.has_free(&b.name))
                .cloned()
                .collect();
            simplify(&eliminate_one_point(&Formula::exists(used, body)))
        })
        .filter(|c| *c != Formula::False)
        .collect()
}

fn is_equation(f: &Formula) -> bool {
    matches!(f, Formula::Atom(Expr::Binary(BinOp::Eq, _, _)))
}

/// The conjuncts of a cube that survive the equational abstraction.
fn abstract_cube(cube: &Formula) -> Formula {
    let (binders, body) = match cube {
        Formula::Exists(bs, body) => (bs.clone(), (**body).clone()),
        other => (Vec::new(), other.clone()),
    };
    let kept = body
        .conjuncts()
        .into_iter()
        .filter(|c| is_equation(c) || matches!(c, Formula::Forall(..)))
        .filter(|c| !binders.iter().any(|b| c.has_free(&b.name)))
        .cloned()
        .collect();
    simplify(&Formula::conj(kept))
}

/// `Next(pre, TB)`: for every assertion site, the condition reaching it
/// with the locals of the transformed body existentially quantified, as a
/// list of cubes.
pub fn next_cubes(lib: &Library, tb: &TransformedBody) -> Result<Vec<Formula>, VcError> {
    let res = postvc_of(lib, tb.clone())?;
    let locals: Vec<Binder> = tb.local_names(lib).into_iter().map(Binder::int).collect();
    let mut out = Vec::new();
    for o in &res.obligations {
        out.extend(cubes(&o.pre, &locals));
    }
    Ok(out)
}

pub fn next(lib: &Library, tb: &TransformedBody) -> Result<Formula, VcError> {
    Ok(Formula::disj(next_cubes(lib, tb)?))
}

/// `Simplify(prev || next)`: simplified cubes, duplicates removed up to
/// renaming of bound variables, then cubes implied by another cube dropped.
pub fn simplify_candidate(
    lib: &Library,
    prev: &Formula,
    next: &[Formula],
    mode: SimplifyMode,
    cfg: &SolverConfig,
) -> Result<Formula, InvGenError> {
    let mut all: Vec<Formula> = Vec::new();
    let mut push = |c: Formula| {
        if !all.iter().any(|d| alpha_eq(d, &c)) {
            all.push(c);
        }
    };
    for c in prev.disjuncts() {
        push(simplify(c));
    }
    for c in next {
        push(match mode {
            SimplifyMode::Equational => abstract_cube(c),
            SimplifyMode::Exact => c.clone(),
        });
    }
    if all.iter().any(|c| *c == Formula::True) {
        return Ok(Formula::True);
    }
    let mut keep = vec![true; all.len()];
    for i in 0..all.len() {
        for j in 0..all.len() {
            if i == j || !keep[j] || !keep[i] {
                continue;
            }
            let implied = Formula::implies(all[i].clone(), all[j].clone());
            if valid(lib, &implied, cfg)? == Validity::Valid {
                keep[i] = false;
            }
        }
    }
    Ok(Formula::disj(
        all.into_iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(c, _)| c)
            .collect(),
    ))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InvGenOutcome {
    /// `invariant` is `I_iteration`, and `I_{iteration+1}` is equivalent.
    Fixpoint { invariant: Formula, iteration: usize },
    NoFixpoint { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvGenState {
    /// `I_0, I_1, ...` as computed.
    pub history: Vec<Formula>,
    pub outcome: InvGenOutcome,
}

impl InvGenState {
    pub fn invariant(&self) -> Option<&Formula> {
        match &self.outcome {
            InvGenOutcome::Fixpoint { invariant, .. } => Some(invariant),
            InvGenOutcome::NoFixpoint { .. } => None,
        }
    }
}

/// One step: `Simplify(inv || Next(inv, TB(p, inv)))`.
pub fn step(lib: &Library, p: &Procedure, inv: &Formula, cfg: &GenConfig) -> Result<Formula, InvGenError> {
    let tb = transform_body(lib, p, inv);
    let n = next_cubes(lib, &tb)?;
    simplify_candidate(lib, inv, &n, cfg.mode, &cfg.solver)
}

pub fn generate_invariant(lib: &Library, p: &Procedure, cfg: &GenConfig) -> Result<InvGenState, InvGenError> {
    let mut cur = simplify(&init_formula(lib));
    let mut history = vec![cur.clone()];
    for k in 1..=cfg.max_iters {
        let cand = step(lib, p, &cur, cfg)?;
        history.push(cand.clone());
        match equiv(lib, &cand, &cur, &cfg.solver)? {
            Equivalence::Yes => {
                return Ok(InvGenState {
                    history,
                    outcome: InvGenOutcome::Fixpoint {
                        invariant: cur,
                        iteration: k - 1,
                    },
                })
            }
            Equivalence::No(_) => cur = cand,
            Equivalence::Unknown(r) => {
                return Ok(InvGenState {
                    history,
                    outcome: InvGenOutcome::NoFixpoint {
                        reason: format!("equivalence of I_{} and I_{k} undecided: {r}", k - 1),
                    },
                })
            }
        }
    }
    Ok(InvGenState {
        history,
        outcome: InvGenOutcome::NoFixpoint {
            reason: format!("no fixpoint within {} iterations", cfg.max_iters),
        },
    })
}
