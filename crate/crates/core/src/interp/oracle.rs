use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::machine::{run_client, CallLog, RunStatus, DEFAULT_FUEL};
use crate::frontend::ast::{Ident, Library};

pub type CallSeq = Vec<(Ident, Vec<i128>)>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleConfig {
    pub trials: usize,
    pub max_arg: i128,
    pub seed: u64,
    /// Step budget per top-level call.
    pub fuel: u64,
    /// Calls per sequence are drawn from `1..=max_calls`.
    pub max_calls: usize,
    /// Restricts the client to these procedures; empty means all.
    pub procedures: Vec<Ident>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            trials: 10_000,
            max_arg: 12,
            seed: 0,
            fuel: DEFAULT_FUEL,
            max_calls: 6,
            procedures: Vec::new(),
        }
    }
}

/// Two traces of `procedure` on the same arguments with different results.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub procedure: Ident,
    pub args: Vec<i128>,
    pub first: i128,
    pub second: i128,
    /// Client sequence that produced `first`.
    pub first_sequence: CallSeq,
    /// Client sequence that produced `second`; equal to `first_sequence` when
    /// both traces happened in one run.
    pub second_sequence: CallSeq,
}

/// Observed input/output pairs of every procedure, nested traces included.
#[derive(Debug, Clone, Default)]
pub struct IoTable {
    entries: HashMap<(Ident, Vec<i128>), (i128, usize)>,
}

impl IoTable {
    pub fn get(&self, procedure: &str, args: &[i128]) -> Option<i128> {
        self.entries
            .get(&(procedure.to_string(), args.to_vec()))
            .map(|(r, _)| *r)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Records `procedure(args) = result` seen in sequence `seq`. On a
    /// conflict returns the earlier result and its sequence.
    pub fn record(
        &mut self,
        procedure: &str,
        args: &[i128],
        result: i128,
        seq: usize,
    ) -> Option<(i128, usize)> {
        let key = (procedure.to_string(), args.to_vec());
        match self.entries.get(&key) {
            Some(&(r, s)) if r != result => Some((r, s)),
            Some(_) => None,
            None => {
                self.entries.insert(key, (result, seq));
                None
            }
        }
    }

    /// Adds every completed trace of `log`; returns the first conflict.
    pub fn absorb(&mut self, log: &CallLog, seq: usize) -> Option<(usize, i128, usize)> {
        for (k, t) in log.traces.iter().enumerate() {
            if let Some(r) = t.result {
                if let Some((prev, prev_seq)) = self.record(&t.procedure, &t.args, r, seq) {
                    return Some((k, prev, prev_seq));
                }
            }
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum OracleOutcome {
    NoWitnessFound,
    Witness(Witness),
}

#[derive(Debug, Clone)]
pub struct OracleReport {
    pub outcome: OracleOutcome,
    pub sequences: usize,
    pub fuel_exhausted: usize,
    pub faults: usize,
    pub table: IoTable,
}

/// Draws one client sequence. Each call reuses an earlier argument tuple of
/// the same procedure with probability 1/2.
pub fn random_sequence(
    rng: &mut ChaCha8Rng,
    lib: &Library,
    procedures: &[Ident],
    cfg: &OracleConfig,
) -> CallSeq {
    let len = rng.gen_range(1..=cfg.max_calls.max(1));
    let mut seq: CallSeq = Vec::with_capacity(len);
    for _ in 0..len {
        let name = procedures.choose(rng).expect("at least one procedure").clone();
        let earlier: Vec<&Vec<i128>> = seq
            .iter()
            .filter(|(p, _)| *p == name)
            .map(|(_, a)| a)
            .collect();
        let args = if !earlier.is_empty() && rng.gen_bool(0.5) {
            (*earlier.choose(rng).unwrap()).clone()
        } else {
            let arity = lib.arity(&name).unwrap_or(0);
            (0..arity)
                .map(|_| rng.gen_range(-cfg.max_arg..=cfg.max_arg))
                .collect()
        };
        seq.push((name, args));
    }
    seq
}

/// Falsification-only purity test: runs seeded random client sequences and
/// reports the first input observed with two different outputs.
pub fn oracle_purity(lib: &Library, cfg: &OracleConfig) -> OracleReport {
    let procedures: Vec<Ident> = if cfg.procedures.is_empty() {
        lib.procedures.iter().map(|p| p.name.clone()).collect()
    } else {
        cfg.procedures.clone()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut table = IoTable::default();
    let mut sequences: Vec<CallSeq> = Vec::new();
    let (mut fuel_exhausted, mut faults) = (0, 0);
    for k in 0..cfg.trials {
        let seq = random_sequence(&mut rng, lib, &procedures, cfg);
        let run = run_client(lib, &seq, cfg.fuel);
        match run.status {
            RunStatus::Completed => {}
            RunStatus::FuelExhausted { .. } => fuel_exhausted += 1,
            RunStatus::Fault { .. } => faults += 1,
        }
        sequences.push(seq);
        if let Some((t, prev, prev_seq)) = table.absorb(&run.log, k) {
            let trace = &run.log.traces[t];
            return OracleReport {
                outcome: OracleOutcome::Witness(Witness {
                    procedure: trace.procedure.clone(),
                    args: trace.args.clone(),
                    first: prev,
                    second: trace.result.expect("completed trace"),
                    first_sequence: sequences[prev_seq].clone(),
                    second_sequence: sequences[k].clone(),
                }),
                sequences: k + 1,
                fuel_exhausted,
                faults,
                table,
            };
        }
    }
    OracleReport {
        outcome: OracleOutcome::NoWitnessFound,
        sequences: cfg.trials,
        fuel_exhausted,
        faults,
        table,
    }
}

/// Replays one explicit sequence and reports an impurity among its traces.
pub fn replay(lib: &Library, seq: &CallSeq, fuel: u64) -> (Option<Witness>, RunStatus) {
    let run = run_client(lib, seq, fuel);
    let mut table = IoTable::default();
    let found = table.absorb(&run.log, 0).map(|(t, prev, _)| {
        let trace = &run.log.traces[t];
        Witness {
            procedure: trace.procedure.clone(),
            args: trace.args.clone(),
            first: prev,
            second: trace.result.expect("completed trace"),
            first_sequence: seq.clone(),
            second_sequence: seq.clone(),
        }
    });
    (found, run.status)
}
