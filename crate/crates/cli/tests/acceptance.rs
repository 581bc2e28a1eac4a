//! One line per acceptance criterion. Exits non-zero if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use opcheck::checker::{check_procedure, Approach, CheckConfig, NotCertifiedKind, Verdict};
use opcheck::corpus::{load_corpus, CorpusEntry};
use opcheck::frontend::ast::Stmt;
use opcheck::frontend::parse_formula;
use opcheck::interp::{check_post_soundness, observe, oracle_purity, OracleConfig, OracleOutcome, PostCheckConfig};
use opcheck::invgen::{equiv, generate_invariant, Equivalence, GenConfig, InvGenOutcome};
use opcheck::report::{postvc_text, strip_timings};
use opcheck::smtlib::SolverConfig;
use opcheck::vcgen::postvc;

const QUERY_LIMIT: Duration = Duration::from_secs(10);
const ORACLE_SEQUENCES: usize = 10_000;
const ORACLE_MAX_ARG: i128 = 12;
const ORACLE_FUEL: u64 = 1_000_000;
const POST_SAMPLES: usize = 200;
const POST_PASS_RATE: f64 = 1.0;
/// Process start-up and kill latency allowed beyond the solver timeout.
const TIMEOUT_GRACE: Duration = Duration::from_secs(2);
const CERTIFIED: [&str; 6] = ["factCache", "FactSingle", "FactArray", "FactRecent", "fib", "mcm"];

type Outcome = Result<String, String>;

fn corpus() -> Vec<CorpusEntry> {
    load_corpus().expect("corpus loads")
}

fn entry(name: &str) -> CorpusEntry {
    corpus().into_iter().find(|e| e.name == name).expect("corpus entry")
}

fn check_cfg() -> CheckConfig {
    CheckConfig {
        solver: SolverConfig::default().with_timeout(QUERY_LIMIT),
        ..CheckConfig::default()
    }
}

fn certified_with_annotations() -> Outcome {
    let cfg = check_cfg();
    let mut slowest = 0.0f64;
    for name in CERTIFIED {
        let e = entry(name);
        for p in &e.library.procedures {
            let r = check_procedure(&e.library, &p.name, None, Approach::ImpurityWitness, &cfg)
                .map_err(|err| format!("{}: {err}", p.name))?;
            if !r.verdict.is_pure() {
                return Err(format!("{}: {}", p.name, r.verdict.summary()));
            }
            let t = r.stats.max_seconds();
            if t > QUERY_LIMIT.as_secs_f64() {
                return Err(format!("{}: query took {t:.2}s", p.name));
            }
            slowest = slowest.max(t);
        }
    }
    Ok(format!("slowest query {slowest:.2}s"))
}

fn impure_programs_rejected() -> Outcome {
    let cfg = check_cfg();
    let mut kinds = Vec::new();
    for (name, procedure) in [("counter", "c"), ("poison", "poison")] {
        let e = entry(name);
        let r = check_procedure(&e.library, procedure, None, Approach::ImpurityWitness, &cfg)
            .map_err(|err| format!("{procedure}: {err}"))?;
        let Verdict::NotCertified { kind, witness, .. } = r.verdict else {
            return Err(format!("{procedure}: {}", r.verdict.summary()));
        };
        kinds.push(format!("{procedure}={kind:?}"));
        if name == "counter" {
            if kind != NotCertifiedKind::ImpurityWitness {
                return Err(format!("counter classified as {kind:?}"));
            }
            match witness {
                Some(w) if w.first != w.second => {
                    kinds.push(format!("{}({:?}) gave {} then {}", w.procedure, w.args, w.first, w.second));
                }
                w => return Err(format!("counter witness not replayed: {w:?}")),
            }
        }
    }
    Ok(kinds.join(", "))
}

fn fact_cache_invariant_generated() -> Outcome {
    let e = entry("factCache");
    let p = &e.library.procedures[0];
    let cfg = GenConfig::default();
    let st = generate_invariant(&e.library, p, &cfg).map_err(|err| err.to_string())?;
    let InvGenOutcome::Fixpoint { invariant, iteration } = &st.outcome else {
        return Err(format!("{:?}", st.outcome));
    };
    if *iteration != 1 {
        return Err(format!("fixpoint at iteration {iteration}"));
    }
    let expected = parse_formula("g == -1 && lastN == 0 || g == lastN * factCache(lastN - 1)").unwrap();
    match equiv(&e.library, invariant, &expected, &cfg.solver).map_err(|err| err.to_string())? {
        Equivalence::Yes => {}
        other => return Err(format!("{invariant} differs from expected: {other:?}")),
    }
    let r = check_procedure(&e.library, &p.name, Some(invariant), Approach::ImpurityWitness, &check_cfg())
        .map_err(|err| err.to_string())?;
    if !r.verdict.is_pure() {
        return Err(format!("generated invariant gives {}", r.verdict.summary()));
    }
    Ok(format!("{invariant}"))
}

fn oracle_finds_nothing_on_certified() -> Outcome {
    let cfg = OracleConfig {
        trials: ORACLE_SEQUENCES,
        max_arg: ORACLE_MAX_ARG,
        fuel: ORACLE_FUEL,
        ..OracleConfig::default()
    };
    let entries: Vec<CorpusEntry> = corpus().into_iter().filter(|e| CERTIFIED.contains(&e.name.as_str())).collect();
    let reports: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = entries
            .iter()
            .map(|e| s.spawn(|| (e.name.clone(), oracle_purity(&e.library, &cfg))))
            .collect();
        handles.into_iter().map(|h| h.join().expect("oracle thread")).collect()
    });
    for (name, r) in &reports {
        if let OracleOutcome::Witness(w) = &r.outcome {
            return Err(format!("{name}: {}({:?}) gave {} and {}", w.procedure, w.args, w.first, w.second));
        }
        if r.sequences != ORACLE_SEQUENCES {
            return Err(format!("{name}: ran {} sequences", r.sequences));
        }
    }
    Ok(format!("{} programs x {ORACLE_SEQUENCES} sequences", reports.len()))
}

fn paths(s: &Stmt) -> usize {
    match s {
        Stmt::Seq(items) => items.iter().map(paths).product(),
        Stmt::If {
            then_branch,
            else_branch,
            ..
        } => paths(then_branch) + paths(else_branch),
        _ => 1,
    }
}

fn golden_and_path_count() -> Outcome {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden/factCache.vc");
    let golden = std::fs::read_to_string(golden).map_err(|err| err.to_string())?;
    let e = entry("factCache");
    let p = &e.library.procedures[0];
    let res = postvc(&e.library, p, &p.invariant_or_true()).map_err(|err| err.to_string())?;
    if postvc_text(&res) != golden {
        return Err("factCache post/vc differs from golden".to_string());
    }
    let mut checked = 0;
    for e in corpus() {
        for p in &e.library.procedures {
            let res = postvc(&e.library, p, &p.invariant_or_true()).map_err(|err| err.to_string())?;
            let want = paths(&res.tb.body);
            if res.paths.len() != want {
                return Err(format!("{}: {} post disjuncts for {want} paths", p.name, res.paths.len()));
            }
            checked += 1;
        }
    }
    Ok(format!("golden matches; path count holds on {checked} procedures"))
}

fn post_is_sound() -> Outcome {
    let mut lines = Vec::new();
    for e in corpus() {
        let obs = observe(&e.library, &OracleConfig {
            trials: 2_000,
            ..OracleConfig::default()
        });
        for p in &e.library.procedures {
            let res = postvc(&e.library, p, &p.invariant_or_true()).map_err(|err| err.to_string())?;
            let cfg = PostCheckConfig {
                samples: POST_SAMPLES,
                ..PostCheckConfig::default()
            };
            let r = check_post_soundness(&e.library, &res, &obs.table, &obs.entry_states, &cfg);
            let conclusive = r.passed + r.failed;
            if r.feasible < POST_SAMPLES {
                return Err(format!("{}: only {} feasible environments", p.name, r.feasible));
            }
            if conclusive == 0 || (r.passed as f64) < POST_PASS_RATE * conclusive as f64 {
                return Err(format!("{}: {}/{conclusive} passed; {:?}", p.name, r.passed, r.failures));
            }
            lines.push(format!("{} {}/{conclusive}", p.name, r.passed));
        }
    }
    Ok(lines.join(", "))
}

fn existential_approach_is_safe() -> Outcome {
    let cfg = check_cfg();
    let e = entry("factCache");
    let start = Instant::now();
    let r = check_procedure(&e.library, "factCache", None, Approach::Existential, &cfg).map_err(|err| err.to_string())?;
    if start.elapsed() > QUERY_LIMIT + TIMEOUT_GRACE {
        return Err(format!("factCache took {:.1}s", start.elapsed().as_secs_f64()));
    }
    match &r.verdict {
        Verdict::Unknown { .. } => {}
        v => return Err(format!("factCache: {}", v.summary())),
    }
    let id = entry("identity");
    let r2 = check_procedure(&id.library, "id", None, Approach::Existential, &cfg).map_err(|err| err.to_string())?;
    if !r2.verdict.is_pure() {
        return Err(format!("id: {}", r2.verdict.summary()));
    }
    Ok(format!("factCache {}; id {}", r.verdict.summary(), r2.verdict.summary()))
}

fn corpus_file(name: &str) -> PathBuf {
    entry(name).path
}

fn run_cli(args: &[&str]) -> Result<serde_json::Value, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_opcheck"))
        .args(args)
        .output()
        .map_err(|err| err.to_string())?;
    let mut v: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|err| format!("{args:?}: {err}"))?;
    strip_timings(&mut v);
    Ok(v)
}

fn reports_are_reproducible() -> Outcome {
    let fact = corpus_file("factCache");
    let counter = corpus_file("counter");
    let mcm = corpus_file("mcm");
    let (fact, counter, mcm) = (fact.to_str().unwrap(), counter.to_str().unwrap(), mcm.to_str().unwrap());
    let runs: [&[&str]; 4] = [
        &["check", "--json", fact],
        &["check", "--json", counter],
        &["gen-invariant", "--json", fact],
        &["oracle", "--json", "--trials", "500", mcm],
    ];
    for args in runs {
        let a = run_cli(args)?;
        let b = run_cli(args)?;
        if a != b {
            return Err(format!("{args:?} differs between runs"));
        }
    }
    Ok(format!("{} commands run twice", runs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("annotated OP programs certified, every query within 10 s", certified_with_annotations),
        ("counter and poison not certified, counter with a witness", impure_programs_rejected),
        ("factCache invariant generated at iteration 1 and certifies", fact_cache_invariant_generated),
        ("oracle finds no witness on certified programs", oracle_finds_nothing_on_certified),
        ("factCache post/vc golden; path count law", golden_and_path_count),
        ("post is satisfied by concrete runs", post_is_sound),
        ("existential check never gives a wrong verdict", existential_approach_is_safe),
        ("JSON reports identical across runs", reports_are_reproducible),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "{tag} criterion {}: {name} ({detail}) [{:.1}s]",
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
