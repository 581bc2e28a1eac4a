use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::logic::{eval_formula, eval_term, Domain, Domains, Window};
use super::machine::run_client_with;
use super::oracle::{random_sequence, IoTable, OracleConfig};
use super::value::{Globals, Value};
use crate::formula::{base_name, Binder, Formula};
use crate::frontend::ast::{BinOp, Expr, Ident, LValue, Library, Stmt};
use crate::vcgen::PostVcResult;

/// Distinct states kept per kind by [`observe`].
pub const MAX_OBSERVED_STATES: usize = 4096;

/// What a batch of client runs revealed about a library.
#[derive(Debug, Clone, Default)]
pub struct Observation {
    pub table: IoTable,
    /// Distinct global states seen at a procedure entry.
    pub entry_states: Vec<Globals>,
    /// Distinct `(procedure, state)` pairs at the entry or exit of a trace.
    pub boundary: Vec<(Ident, Globals)>,
}

/// Runs client sequences with global snapshots. At most
/// [`MAX_OBSERVED_STATES`] states of each kind are kept, the first seen.
pub fn observe(lib: &Library, cfg: &OracleConfig) -> Observation {
    let procedures: Vec<Ident> = lib.procedures.iter().map(|p| p.name.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut table = IoTable::default();
    let mut entry_states = BTreeSet::new();
    let mut boundary = BTreeSet::new();
    for k in 0..cfg.trials {
        let seq = random_sequence(&mut rng, lib, &procedures, cfg);
        let run = run_client_with(lib, &seq, cfg.fuel, true);
        table.absorb(&run.log, k);
        for t in run.log.traces {
            if let Some(e) = &t.entry {
                if entry_states.len() < MAX_OBSERVED_STATES {
                    entry_states.insert(e.clone());
                }
            }
            for s in [t.entry, t.exit].into_iter().flatten() {
                if boundary.len() < MAX_OBSERVED_STATES {
                    boundary.insert((t.procedure.clone(), s));
                }
            }
        }
    }
    Observation {
        table,
        entry_states: entry_states.into_iter().collect(),
        boundary: boundary.into_iter().collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PostCheckConfig {
    /// Feasible environments to test.
    pub samples: usize,
    /// Attempts allowed before giving up on reaching `samples`.
    pub max_attempts: usize,
    pub seed: u64,
    pub max_arg: i128,
    /// Range of the bounded check for quantified invariant variables.
    pub window: i128,
}

impl Default for PostCheckConfig {
    fn default() -> Self {
        PostCheckConfig {
            samples: 200,
            max_attempts: 20_000,
            seed: 0,
            max_arg: 12,
            window: 14,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PostCheckReport {
    pub procedure: Ident,
    pub feasible: usize,
    pub passed: usize,
    pub failed: usize,
    pub inconclusive: usize,
    pub infeasible: usize,
    pub failures: Vec<String>,
}

enum Abort {
    Infeasible,
    Inconclusive,
}

struct Exec<'a> {
    env: BTreeMap<Ident, Value>,
    history: BTreeMap<Ident, Vec<Value>>,
    choices: Vec<bool>,
    lib: &'a Library,
    table: &'a IoTable,
    states: &'a [Globals],
    group: Option<&'a Globals>,
    window: i128,
    rng: &'a mut ChaCha8Rng,
}

impl Exec<'_> {
    fn funs(&self) -> impl Fn(&str, &[i128]) -> Option<i128> + '_ {
        move |name, args| self.table.get(name, args)
    }

    fn set(&mut self, x: &str, v: Value) {
        if let Some(old) = self.env.insert(x.to_string(), v) {
            self.history.entry(x.to_string()).or_default().push(old);
        }
    }

    fn int(&self, e: &Expr) -> Result<i128, Abort> {
        let funs = self.funs();
        eval_term(e, &self.env, &funs)
            .and_then(|v| v.as_int())
            .ok_or(Abort::Inconclusive)
    }

    fn run(&mut self, s: &Stmt) -> Result<(), Abort> {
        match s {
            Stmt::Skip => Ok(()),
            Stmt::Seq(items) => items.iter().try_for_each(|i| self.run(i)),
            Stmt::If {
                cond,
                then_branch,
                else_branch,
                ..
            } => {
                let c = self.int(cond)? != 0;
                self.choices.push(c);
                self.run(if c { then_branch } else { else_branch })
            }
            Stmt::Assign { lhs, rhs, .. } => {
                let v = self.int(rhs)?;
                match lhs {
                    LValue::Var(x) => self.set(x, Value::Int(v)),
                    LValue::Cell(a, idx) => {
                        let idx = idx
                            .iter()
                            .map(|i| self.int(i))
                            .collect::<Result<Vec<_>, _>>()?;
                        let Some(Value::Array(mut arr)) = self.env.get(a).cloned() else {
                            return Err(Abort::Inconclusive);
                        };
                        arr.set(idx, v);
                        self.set(a, Value::Array(arr));
                    }
                }
                Ok(())
            }
            Stmt::Havoc(x) => {
                let v = if self.lib.is_global(x) {
                    if self.group.is_none() {
                        self.group = self.states.choose(self.rng);
                    }
                    self.group
                        .and_then(|g| g.get(x).cloned())
                        .ok_or(Abort::Inconclusive)?
                } else {
                    Value::Int(self.rng.gen_range(-self.window..=self.window))
                };
                self.set(x, v);
                Ok(())
            }
            Stmt::Assume(f) => {
                // Call results are read from the table rather than guessed.
                for c in f.conjuncts() {
                    if let Formula::Atom(Expr::Binary(BinOp::Eq, l, r)) = c {
                        if let (Expr::Var(t), Expr::App(q, args)) = (&**l, &**r) {
                            if !self.env.contains_key(t) {
                                let args = args
                                    .iter()
                                    .map(|a| self.int(a))
                                    .collect::<Result<Vec<_>, _>>()?;
                                let v = self.table.get(q, &args).ok_or(Abort::Inconclusive)?;
                                self.set(t, Value::Int(v));
                            }
                        }
                    }
                }
                let funs = self.funs();
                match eval_formula(f, &self.env, &funs, &Window(self.window)) {
                    Some(true) => Ok(()),
                    Some(false) => Err(Abort::Infeasible),
                    None => Err(Abort::Inconclusive),
                }
            }
            Stmt::Assert { .. } => {
                self.group = None;
                Ok(())
            }
            Stmt::Call { .. } | Stmt::Return { .. } => Err(Abort::Inconclusive),
        }
    }
}

/// Ghost binders range over the values their variable held along the run;
/// other binders over a window.
struct History<'a> {
    history: &'a BTreeMap<Ident, Vec<Value>>,
    window: Window,
}

impl Domains for History<'_> {
    fn domain(&self, binder: &Binder, env: &BTreeMap<Ident, Value>) -> Domain {
        if binder.name.contains('#') {
            let mut values: Vec<Value> = self
                .history
                .get(base_name(&binder.name))
                .cloned()
                .unwrap_or_default();
            values.sort();
            values.dedup();
            return Domain {
                values,
                complete: true,
            };
        }
        self.window.domain(binder, env)
    }
}

/// Executes the transformed body from random environments that satisfy the
/// invariant and checks that the final state satisfies the post disjunct of
/// the path taken. Procedure symbols are read from `table`; havocked globals
/// are drawn from `states`.
pub fn check_post_soundness(
    lib: &Library,
    res: &PostVcResult,
    table: &IoTable,
    states: &[Globals],
    cfg: &PostCheckConfig,
) -> PostCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = PostCheckReport {
        procedure: res.tb.procedure.clone(),
        ..PostCheckReport::default()
    };
    let inv = &res.tb.invariant;
    for _ in 0..cfg.max_attempts {
        if report.feasible >= cfg.samples || states.is_empty() {
            break;
        }
        let entry = states.choose(&mut rng).expect("non-empty").clone();
        let mut env: BTreeMap<Ident, Value> = entry;
        for p in &res.tb.params {
            env.insert(p.clone(), Value::Int(rng.gen_range(-cfg.max_arg..=cfg.max_arg)));
        }
        let funs = |name: &str, args: &[i128]| table.get(name, args);
        match eval_formula(inv, &env, &funs, &Window(cfg.window)) {
            Some(true) => {}
            Some(false) => {
                report.infeasible += 1;
                continue;
            }
            None => {
                report.inconclusive += 1;
                continue;
            }
        }
        let mut exec = Exec {
            env,
            history: BTreeMap::new(),
            choices: Vec::new(),
            lib,
            table,
            states,
            group: None,
            window: cfg.window,
            rng: &mut rng,
        };
        match exec.run(&res.tb.body) {
            Ok(()) => {}
            Err(Abort::Infeasible) => {
                report.infeasible += 1;
                continue;
            }
            Err(Abort::Inconclusive) => {
                report.inconclusive += 1;
                continue;
            }
        }
        report.feasible += 1;
        let Some(path) = res.paths.iter().find(|p| p.choices == exec.choices) else {
            report.failed += 1;
            report.failures.push(format!("no path for choices {:?}", exec.choices));
            continue;
        };
        let domains = History {
            history: &exec.history,
            window: Window(cfg.window),
        };
        match eval_formula(&path.formula, &exec.env, &funs, &domains) {
            Some(true) => report.passed += 1,
            Some(false) => {
                report.failed += 1;
                if report.failures.len() < 5 {
                    report.failures.push(format!(
                        "path {:?} violated in final state {}",
                        exec.choices,
                        describe(&exec.env)
                    ));
                }
            }
            None => report.inconclusive += 1,
        }
    }
    report
}

fn describe(env: &BTreeMap<Ident, Value>) -> String {
    serde_json::to_string(env).unwrap_or_default()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RuntimeInvariantReport {
    pub checked: usize,
    pub inconclusive: usize,
    pub violations: Vec<String>,
}

/// Evaluates each procedure's invariant on the observed entry and exit
/// states of its traces, interpreting procedure symbols by the I/O table.
pub fn check_runtime_invariants(lib: &Library, obs: &Observation, window: i128) -> RuntimeInvariantReport {
    let mut report = RuntimeInvariantReport::default();
    let funs = |name: &str, args: &[i128]| obs.table.get(name, args);
    for (name, state) in &obs.boundary {
        let Some(inv) = lib.procedure(name).and_then(|p| p.invariant.as_ref()) else {
            continue;
        };
        report.checked += 1;
        match eval_formula(inv, state, &funs, &Window(window)) {
            Some(true) => {}
            Some(false) => report
                .violations
                .push(format!("{name} at state {}", describe(state))),
            None => report.inconclusive += 1,
        }
    }
    report
}
