use opcheck::corpus::load_corpus;
use opcheck::frontend::ast::Library;
use opcheck::interp::{oracle_purity, run_client, Machine, OracleConfig, OracleOutcome, RunStatus, Step};

fn lib(name: &str) -> Library {
    load_corpus().unwrap().into_iter().find(|e| e.name == name).unwrap().library
}

fn factorial(n: i128) -> i128 {
    (2..=n).product::<i128>().max(1)
}

#[test]
fn stepping_is_deterministic() {
    let l = lib("fib");
    let (mut a, mut b) = (Machine::new(&l), Machine::new(&l));
    a.call("fib", &[9]).unwrap();
    b.call("fib", &[9]).unwrap();
    loop {
        let (sa, sb) = (a.step().unwrap(), b.step().unwrap());
        assert_eq!(sa, sb);
        assert_eq!(a.state.globals, b.state.globals);
        assert_eq!(a.state.stack.len(), b.state.stack.len());
        for (fa, fb) in a.state.stack.iter().zip(&b.state.stack) {
            assert_eq!(fa.locals, fb.locals);
            assert_eq!(fa.cont, fb.cont);
        }
        if let Step::Returned(v) = sa {
            assert_eq!(v, 34);
            break;
        }
    }
}

#[test]
fn traces_are_bracketed() {
    let l = lib("factCache");
    let run = run_client(&l, &[("factCache".into(), vec![6]), ("factCache".into(), vec![6])], 10_000);
    assert_eq!(run.status, RunStatus::Completed);
    // A cold call recurses down to 1; the second call hits the cache.
    let depths: Vec<usize> = run.log.traces.iter().map(|t| t.depth).collect();
    assert_eq!(depths, [0, 1, 2, 3, 4, 5, 0]);
    for t in &run.log.traces {
        let n = t.args[0];
        assert_eq!(t.result, Some(factorial(n)));
    }
    let mut open = 0usize;
    for t in &run.log.traces {
        assert!(t.depth <= open, "trace at depth {} without a caller", t.depth);
        open = t.depth + 1;
    }
}

#[test]
fn nested_traces_enter_the_table() {
    let l = lib("fib");
    let run = run_client(&l, &[("fib".into(), vec![10])], 100_000);
    let mut args: Vec<i128> = run.log.traces.iter().map(|t| t.args[0]).collect();
    args.sort();
    args.dedup();
    assert_eq!(args, (1..=10).collect::<Vec<_>>());
}

#[test]
fn oracle_depends_only_on_the_seed() {
    let l = lib("counter");
    let cfg = OracleConfig {
        seed: 7,
        ..OracleConfig::default()
    };
    let a = oracle_purity(&l, &cfg);
    let b = oracle_purity(&l, &cfg);
    assert_eq!(a.outcome, b.outcome);
    assert_eq!(a.sequences, b.sequences);
    assert!(matches!(a.outcome, OracleOutcome::Witness(_)));
}

#[test]
fn fact_single_cache_is_exercised_with_wider_arguments() {
    let l = lib("FactSingle");
    let run = run_client(&l, &[("FactSingle".into(), vec![19]), ("FactSingle".into(), vec![19])], 10_000);
    assert_eq!(run.results, [factorial(19), factorial(19)]);
    let cfg = OracleConfig {
        trials: 2000,
        max_arg: 20,
        ..OracleConfig::default()
    };
    assert_eq!(oracle_purity(&l, &cfg).outcome, OracleOutcome::NoWitnessFound);
}

#[test]
fn impure_programs_have_oracle_witnesses() {
    for e in load_corpus().unwrap() {
        if e.class == opcheck::corpus::ProgramClass::NonOp {
            let r = oracle_purity(&e.library, &OracleConfig::default());
            let OracleOutcome::Witness(w) = r.outcome else {
                panic!("{} has no witness", e.name)
            };
            assert_ne!(w.first, w.second);
        }
    }
}
