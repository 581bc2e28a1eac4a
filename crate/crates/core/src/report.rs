//! Machine-readable reports. Everything except the `seconds` fields is a
//! function of the input, the flags and the solver.

use serde::Serialize;
use serde_json::Value as Json;

use crate::checker::{Approach, ProcedureResult, Verdict};
use crate::formula::Formula;
use crate::interp::{OracleConfig, OracleOutcome, OracleReport};
use crate::invgen::{InvGenOutcome, InvGenState, SimplifyMode};
use crate::smtlib::{SolverConfig, LOGIC};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverInfo {
    pub identity: String,
    pub program: String,
    pub args: Vec<String>,
    pub logic: &'static str,
    pub timeout_seconds: f64,
}

impl SolverInfo {
    pub fn new(cfg: &SolverConfig, identity: String) -> SolverInfo {
        SolverInfo {
            identity,
            program: cfg.program.clone(),
            args: cfg.args.clone(),
            logic: LOGIC,
            timeout_seconds: cfg.timeout.as_secs_f64(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryTime {
    pub query: String,
    pub answer: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProcedureEntry {
    pub procedure: String,
    #[serde(flatten)]
    pub verdict: Verdict,
    pub invariant: String,
    pub times: Vec<QueryTime>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub input: String,
    pub approach: Approach,
    pub solver: SolverInfo,
    pub procedures: Vec<ProcedureEntry>,
    pub exit_code: i32,
}

/// 0 when everything is certified, 1 when anything is not certified,
/// otherwise 2 when anything is unknown.
pub fn exit_code(verdicts: &[&Verdict]) -> i32 {
    if verdicts.iter().any(|v| matches!(v, Verdict::NotCertified { .. })) {
        1
    } else if verdicts.iter().any(|v| matches!(v, Verdict::Unknown { .. })) {
        2
    } else {
        0
    }
}

impl CheckReport {
    pub fn new(
        input: &str,
        approach: Approach,
        solver: SolverInfo,
        results: Vec<(ProcedureResult, Formula)>,
    ) -> CheckReport {
        let procedures: Vec<ProcedureEntry> = results
            .into_iter()
            .map(|(r, inv)| ProcedureEntry {
                procedure: r.procedure,
                verdict: r.verdict,
                invariant: inv.to_string(),
                times: r
                    .stats
                    .queries
                    .into_iter()
                    .map(|q| QueryTime {
                        query: q.query,
                        answer: q.answer,
                        seconds: q.seconds,
                    })
                    .collect(),
            })
            .collect();
        let exit_code = exit_code(&procedures.iter().map(|p| &p.verdict).collect::<Vec<_>>());
        CheckReport {
            schema_version: SCHEMA_VERSION,
            command: "check",
            input: input.to_string(),
            approach,
            solver,
            procedures,
            exit_code,
        }
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        for p in &self.procedures {
            out.push_str(&format!("{}: {}\n", p.procedure, p.verdict.summary()));
            if let Verdict::NotCertified { witness: Some(w), .. } = &p.verdict {
                out.push_str(&format!(
                    "  witness: {}({}) returned {} and then {}\n",
                    w.procedure,
                    join(&w.args),
                    w.first,
                    w.second
                ));
            }
            if let Verdict::NotCertified { note: Some(n), .. } = &p.verdict {
                out.push_str(&format!("  note: {n}\n"));
            }
        }
        out
    }
}

/// Passes applied between iterations of invariant generation.
pub fn simplify_passes(mode: SimplifyMode) -> Vec<&'static str> {
    let mut passes = vec![
        "existentials over locals hoisted to prenex form",
        "matrix split into disjunctive normal form",
        "one-point elimination of x == e with x bound",
        "constant folding and duplicate literal removal",
    ];
    if mode == SimplifyMode::Equational {
        passes.push("conjuncts other than equations and universals over globals dropped");
    }
    passes.push("duplicate disjuncts removed up to renaming of bound variables");
    passes.push("disjuncts implied by another disjunct dropped (solver-checked)");
    passes
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvGenReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub input: String,
    pub procedure: String,
    pub mode: SimplifyMode,
    pub simplify_passes: Vec<&'static str>,
    pub max_iters: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iteration: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariant: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub history: Vec<String>,
}

impl InvGenReport {
    pub fn new(input: &str, procedure: &str, mode: SimplifyMode, max_iters: usize, st: &InvGenState) -> InvGenReport {
        let (iteration, invariant, reason) = match &st.outcome {
            InvGenOutcome::Fixpoint { invariant, iteration } => {
                (Some(*iteration), Some(invariant.to_string()), None)
            }
            InvGenOutcome::NoFixpoint { reason } => (None, None, Some(reason.clone())),
        };
        InvGenReport {
            schema_version: SCHEMA_VERSION,
            command: "gen-invariant",
            input: input.to_string(),
            procedure: procedure.to_string(),
            mode,
            simplify_passes: simplify_passes(mode),
            max_iters,
            converged: iteration.is_some(),
            iteration,
            invariant,
            reason,
            history: st.history.iter().map(|f| f.to_string()).collect(),
        }
    }

    /// The candidate as an annotation, or the reason there is none.
    pub fn text(&self) -> String {
        match (&self.invariant, self.iteration) {
            (Some(inv), Some(k)) => format!("// {}: fixpoint at iteration {k}\ninvariant {inv}\n", self.procedure),
            _ => format!(
                "// {}: {}\n",
                self.procedure,
                self.reason.as_deref().unwrap_or("no fixpoint")
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSummary {
    pub schema_version: u32,
    pub command: &'static str,
    pub input: String,
    pub seed: u64,
    pub trials: usize,
    pub max_arg: i128,
    pub fuel: u64,
    #[serde(flatten)]
    pub outcome: OracleOutcome,
    pub sequences: usize,
    pub fuel_exhausted: usize,
    pub faults: usize,
    pub distinct_inputs: usize,
}

impl OracleSummary {
    pub fn new(input: &str, cfg: &OracleConfig, r: &OracleReport) -> OracleSummary {
        OracleSummary {
            schema_version: SCHEMA_VERSION,
            command: "oracle",
            input: input.to_string(),
            seed: cfg.seed,
            trials: cfg.trials,
            max_arg: cfg.max_arg,
            fuel: cfg.fuel,
            outcome: r.outcome.clone(),
            sequences: r.sequences,
            fuel_exhausted: r.fuel_exhausted,
            faults: r.faults,
            distinct_inputs: r.table.len(),
        }
    }

    pub fn text(&self) -> String {
        match &self.outcome {
            OracleOutcome::NoWitnessFound => format!(
                "no witness in {} sequences (falsification only; not a proof)\n",
                self.sequences
            ),
            OracleOutcome::Witness(w) => format!(
                "witness: {}({}) returned {} and then {}\n",
                w.procedure,
                join(&w.args),
                w.first,
                w.second
            ),
        }
    }
}

fn join(args: &[i128]) -> String {
    args.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(", ")
}

pub fn to_json<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// Replaces every timing field by zero so that two reports can be compared.
pub fn strip_timings(v: &mut Json) {
    match v {
        Json::Object(map) => {
            for (k, x) in map.iter_mut() {
                if k == "seconds" {
                    *x = Json::from(0);
                } else {
                    strip_timings(x);
                }
            }
        }
        Json::Array(items) => items.iter_mut().for_each(strip_timings),
        _ => {}
    }
}

/// A transformed body in concrete syntax.
pub fn tb_text(tb: &crate::transform::TransformedBody) -> String {
    format!(
        "proc {}({})\n  invariant {};\n{{\n{}}}\n",
        tb.procedure,
        tb.params.join(", "),
        tb.invariant,
        crate::frontend::pretty_stmt(&tb.body, 1)
    )
}

/// `post` and `vc` in formula syntax, one path disjunct and one
/// obligation per line.
pub fn postvc_text(res: &crate::vcgen::PostVcResult) -> String {
    let mut out = format!("procedure {}\npost:\n", res.tb.procedure);
    for p in &res.paths {
        out.push_str(&format!("  {}\n", p.formula));
    }
    out.push_str("vc:\n");
    if let Formula::And(items) = &res.vc {
        for c in items {
            out.push_str(&format!("  {c}\n"));
        }
    } else {
        out.push_str(&format!("  {}\n", res.vc));
    }
    out
}
