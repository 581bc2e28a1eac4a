//! Purity checks: the impurity-witness approach (two satisfiability queries)
//! and the existential approach (one quantified query).

use std::collections::BTreeMap;
use std::time::Duration;

use serde::Serialize;

use crate::formula::{skolemize, tagged, Binder, Formula};
use crate::frontend::ast::{Expr, Ident, Library, Procedure};
use crate::interp::{replay, RunStatus, Witness, DEFAULT_FUEL};
use crate::smtlib::{
    check_sat, emit_smt2, solver_identity, Answered, EmitError, FunctionTable, Model,
    ModelValue, SmtQuery, SolverAnswer, SolverConfig, SolverError, SymbolTable,
};
use crate::vcgen::{postvc, PostVcResult, VcError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Approach {
    ImpurityWitness,
    Existential,
}

impl Approach {
    pub fn short(self) -> &'static str {
        match self {
            Approach::ImpurityWitness => "iw",
            Approach::Existential => "ea",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NotCertifiedKind {
    InvariantViolation,
    ImpurityWitness,
    TooWeakToCertify,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "reason", content = "detail")]
pub enum UnknownReason {
    Timeout,
    SolverUnknown(String),
}

/// Solver model restricted to what a reader needs: constants and the
/// interpretation of procedure symbols.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CounterModel {
    pub values: BTreeMap<Ident, ModelValue>,
    pub functions: BTreeMap<Ident, FunctionTable>,
}

impl CounterModel {
    fn from_model(model: &Model, q: &SmtQuery) -> CounterModel {
        let mut out = CounterModel::default();
        for name in model.names() {
            if let Some(v) = model.value(&name) {
                out.values.insert(name, v);
            }
        }
        for (f, _) in &q.functions {
            if let Some(t) = model.function(f) {
                out.functions.insert(f.clone(), t);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "verdict")]
pub enum Verdict {
    PureCertified {
        approach: Approach,
    },
    NotCertified {
        kind: NotCertifiedKind,
        model: CounterModel,
        #[serde(skip_serializing_if = "Option::is_none")]
        witness: Option<Witness>,
        #[serde(skip_serializing_if = "Option::is_none")]
        note: Option<String>,
    },
    Unknown {
        #[serde(flatten)]
        reason: UnknownReason,
    },
}

impl Verdict {
    pub fn is_pure(&self) -> bool {
        matches!(self, Verdict::PureCertified { .. })
    }

    pub fn kind(&self) -> Option<NotCertifiedKind> {
        match self {
            Verdict::NotCertified { kind, .. } => Some(*kind),
            _ => None,
        }
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        match self {
            Verdict::PureCertified { .. } => "PURE (certified)".to_string(),
            Verdict::NotCertified { kind, .. } => match kind {
                NotCertifiedKind::InvariantViolation => "NOT CERTIFIED (invariant violated)",
                NotCertifiedKind::ImpurityWitness => "NOT CERTIFIED (impure: concrete witness)",
                NotCertifiedKind::TooWeakToCertify => "NOT CERTIFIED (invariant too weak)",
            }
            .to_string(),
            Verdict::Unknown { reason } => match reason {
                UnknownReason::Timeout => "UNKNOWN (timeout)".to_string(),
                UnknownReason::SolverUnknown(r) => format!("UNKNOWN (solver: {r})"),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryStat {
    pub query: String,
    pub answer: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolverStats {
    pub solver: String,
    pub queries: Vec<QueryStat>,
}

impl SolverStats {
    fn push(&mut self, query: &str, a: &Answered) {
        self.queries.push(QueryStat {
            query: query.to_string(),
            answer: a.answer.label().to_string(),
            seconds: a.elapsed.as_secs_f64(),
        });
    }

    pub fn max_seconds(&self) -> f64 {
        self.queries.iter().map(|q| q.seconds).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProcedureResult {
    pub procedure: Ident,
    pub verdict: Verdict,
    pub stats: SolverStats,
}

#[derive(Debug, thiserror::Error)]
pub enum CheckError {
    #[error(transparent)]
    Vc(#[from] VcError),
    #[error(transparent)]
    Emit(#[from] EmitError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("no procedure `{0}`")]
    UnknownProcedure(Ident),
}

#[derive(Debug, Clone)]
pub struct CheckConfig {
    pub solver: SolverConfig,
    /// Step budget for replaying a twin model.
    pub replay_fuel: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            solver: SolverConfig::default(),
            replay_fuel: DEFAULT_FUEL,
        }
    }
}

/// The two halves of the impurity-witness formula, existentials skolemized.
#[derive(Debug, Clone)]
pub struct IwFormulas {
    pub not_vc: Formula,
    pub twin: Formula,
    pub table: SymbolTable,
    pub postvc: PostVcResult,
}

/// Symbols of a procedure: globals, procedure functions and every local of
/// the transformed body as an integer.
pub fn procedure_table(lib: &Library, res: &PostVcResult) -> SymbolTable {
    let mut table = SymbolTable::for_library(lib);
    for x in res.tb.local_names(lib) {
        table.declare_var(&x, crate::formula::Sort::Int);
    }
    table
}

fn declare(table: &mut SymbolTable, binders: &[Binder]) {
    for b in binders {
        table.declare_var(&b.name, b.sort);
    }
}

pub fn build_iw(lib: &Library, p: &Procedure, inv: &Formula) -> Result<IwFormulas, CheckError> {
    let res = postvc(lib, p, inv)?;
    let mut table = procedure_table(lib, &res);
    let neg = skolemize(&Formula::not(res.vc.clone()));
    declare(&mut table, &neg.binders);
    let mut parts = vec![res.post.rename_free("a"), res.post.rename_free("b")];
    for x in &res.tb.params {
        parts.push(Formula::eq(
            Expr::Var(tagged(x, "a")),
            Expr::Var(tagged(x, "b")),
        ));
    }
    let r = &res.tb.return_var;
    parts.push(Formula::atom(Expr::ne(
        Expr::Var(tagged(r, "a")),
        Expr::Var(tagged(r, "b")),
    )));
    let twin = skolemize(&Formula::conj(parts));
    declare(&mut table, &twin.binders);
    Ok(IwFormulas {
        not_vc: neg.matrix,
        twin: twin.matrix,
        table,
        postvc: res,
    })
}

/// `forall x̄. vc && (post ==> r == p(n̄))` over every free variable.
pub fn build_ea(lib: &Library, p: &Procedure, inv: &Formula) -> Result<(Formula, SymbolTable), CheckError> {
    let res = postvc(lib, p, inv)?;
    let table = procedure_table(lib, &res);
    let call = Expr::App(
        p.name.clone(),
        res.tb.params.iter().map(|x| Expr::Var(x.clone())).collect(),
    );
    let body = Formula::conj(vec![
        res.vc.clone(),
        Formula::implies(
            res.post.clone(),
            Formula::eq(Expr::Var(res.tb.return_var.clone()), call),
        ),
    ]);
    let binders = body
        .free_vars()
        .into_iter()
        .map(|x| {
            let sort = table.sort_of(&x).unwrap_or(crate::formula::Sort::Int);
            Binder::new(x, sort)
        })
        .collect();
    Ok((Formula::forall(binders, body), table))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub kind: NotCertifiedKind,
    pub witness: Option<Witness>,
    pub note: Option<String>,
}

/// Replays the twin model's input on the interpreter: two top-level calls
/// with the α arguments. A concrete disagreement anywhere in the replay makes
/// the model an impurity witness.
pub fn classify_twin_model(
    lib: &Library,
    procedure: &str,
    model: &Model,
    fuel: u64,
) -> Classification {
    let Some(p) = lib.procedure(procedure) else {
        return Classification {
            kind: NotCertifiedKind::TooWeakToCertify,
            witness: None,
            note: Some(format!("no procedure `{procedure}`")),
        };
    };
    let args: Vec<i128> = p
        .params
        .iter()
        .map(|x| model.int(&tagged(x, "a")).unwrap_or(0))
        .collect();
    let seq = vec![(p.name.clone(), args.clone()), (p.name.clone(), args)];
    let (witness, status) = replay(lib, &seq, fuel);
    let note = match status {
        RunStatus::Completed => None,
        RunStatus::FuelExhausted { call } => Some(format!("replay call {} ran out of fuel", call + 1)),
        RunStatus::Fault { call, error } => Some(format!("replay call {} faulted: {error}", call + 1)),
    };
    match witness {
        Some(w) => Classification {
            kind: NotCertifiedKind::ImpurityWitness,
            witness: Some(w),
            note,
        },
        None => Classification {
            kind: NotCertifiedKind::TooWeakToCertify,
            witness: None,
            note,
        },
    }
}

fn unknown_of(answers: &[&SolverAnswer]) -> Verdict {
    let reason = if answers.iter().any(|a| matches!(a, SolverAnswer::Timeout)) {
        UnknownReason::Timeout
    } else {
        let r = answers
            .iter()
            .find_map(|a| match a {
                SolverAnswer::Unknown(r) => Some(r.clone()),
                _ => None,
            })
            .unwrap_or_else(|| "unknown".to_string());
        UnknownReason::SolverUnknown(r)
    };
    Verdict::Unknown { reason }
}

/// Impurity-witness check of one procedure against `inv`. The two queries
/// run concurrently in separate solver processes.
pub fn check_procedure_iw(
    lib: &Library,
    p: &Procedure,
    inv: &Formula,
    cfg: &CheckConfig,
) -> Result<ProcedureResult, CheckError> {
    let iw = build_iw(lib, p, inv)?;
    let q_vc = emit_smt2(std::slice::from_ref(&iw.not_vc), &iw.table, true)?;
    let q_twin = emit_smt2(std::slice::from_ref(&iw.twin), &iw.table, true)?;
    let (a_vc, a_twin) = std::thread::scope(|s| {
        let h = s.spawn(|| check_sat(&q_vc, &cfg.solver));
        let t = check_sat(&q_twin, &cfg.solver);
        (h.join().expect("solver thread"), t)
    });
    let (a_vc, a_twin) = (a_vc?, a_twin?);
    let mut stats = SolverStats {
        solver: solver_identity(&cfg.solver)?,
        queries: Vec::new(),
    };
    stats.push("not-vc", &a_vc);
    stats.push("twin", &a_twin);
    let verdict = match (&a_vc.answer, &a_twin.answer) {
        (SolverAnswer::Sat(m), _) => Verdict::NotCertified {
            kind: NotCertifiedKind::InvariantViolation,
            model: CounterModel::from_model(m, &q_vc),
            witness: None,
            note: None,
        },
        (_, SolverAnswer::Sat(m)) => {
            let c = classify_twin_model(lib, &p.name, m, cfg.replay_fuel);
            Verdict::NotCertified {
                kind: c.kind,
                model: CounterModel::from_model(m, &q_twin),
                witness: c.witness,
                note: c.note,
            }
        }
        (SolverAnswer::Unsat, SolverAnswer::Unsat) => Verdict::PureCertified {
            approach: Approach::ImpurityWitness,
        },
        (a, b) => unknown_of(&[a, b]),
    };
    Ok(ProcedureResult {
        procedure: p.name.clone(),
        verdict,
        stats,
    })
}

/// Existential check of one procedure: satisfiable means some
/// interpretation of the procedure symbol explains every path.
pub fn check_procedure_ea(
    lib: &Library,
    p: &Procedure,
    inv: &Formula,
    cfg: &CheckConfig,
) -> Result<ProcedureResult, CheckError> {
    let (ea, table) = build_ea(lib, p, inv)?;
    let q = emit_smt2(std::slice::from_ref(&ea), &table, true)?;
    let a = check_sat(&q, &cfg.solver)?;
    let mut stats = SolverStats {
        solver: solver_identity(&cfg.solver)?,
        queries: Vec::new(),
    };
    stats.push("ea", &a);
    let verdict = match &a.answer {
        SolverAnswer::Sat(_) => Verdict::PureCertified {
            approach: Approach::Existential,
        },
        SolverAnswer::Unsat => Verdict::NotCertified {
            kind: NotCertifiedKind::TooWeakToCertify,
            model: CounterModel::default(),
            witness: None,
            note: None,
        },
        other => unknown_of(&[other]),
    };
    Ok(ProcedureResult {
        procedure: p.name.clone(),
        verdict,
        stats,
    })
}

pub fn check_procedure(
    lib: &Library,
    name: &str,
    inv: Option<&Formula>,
    approach: Approach,
    cfg: &CheckConfig,
) -> Result<ProcedureResult, CheckError> {
    let p = lib
        .procedure(name)
        .ok_or_else(|| CheckError::UnknownProcedure(name.to_string()))?;
    let inv = inv.cloned().unwrap_or_else(|| p.invariant_or_true());
    match approach {
        Approach::ImpurityWitness => check_procedure_iw(lib, p, &inv, cfg),
        Approach::Existential => check_procedure_ea(lib, p, &inv, cfg),
    }
}

/// Every procedure against its annotated invariant (`true` when absent).
pub fn check_impurity_witness(lib: &Library, cfg: &CheckConfig) -> Result<Vec<ProcedureResult>, CheckError> {
    lib.procedures
        .iter()
        .map(|p| check_procedure_iw(lib, p, &p.invariant_or_true(), cfg))
        .collect()
}

pub fn check_existential(lib: &Library, cfg: &CheckConfig) -> Result<Vec<ProcedureResult>, CheckError> {
    lib.procedures
        .iter()
        .map(|p| check_procedure_ea(lib, p, &p.invariant_or_true(), cfg))
        .collect()
}

pub fn with_timeout(cfg: &CheckConfig, timeout: Duration) -> CheckConfig {
    CheckConfig {
        solver: cfg.solver.clone().with_timeout(timeout),
        replay_fuel: cfg.replay_fuel,
    }
}
