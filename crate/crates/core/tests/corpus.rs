use opcheck::checker::{
    build_iw, check_impurity_witness, check_procedure, Approach, CheckConfig, NotCertifiedKind, Verdict,
};
use opcheck::corpus::{load_corpus, Expected, ProgramClass};
use opcheck::formula::Formula;
use opcheck::frontend::ast::Stmt;
use opcheck::frontend::{load, parse_formula, parse_library, pretty_print};
use opcheck::interp::{check_runtime_invariants, observe, replay, OracleConfig, RunStatus};
use opcheck::smtlib::{check_sat, emit_smt2, SolverConfig};

#[test]
fn corpus_loads_with_both_classes() {
    let c = load_corpus().unwrap();
    assert_eq!(c.len(), 10);
    let op = c.iter().filter(|e| e.class == ProgramClass::Op).count();
    assert_eq!(op, 7);
    for e in &c {
        for p in &e.library.procedures {
            assert!(e.expected.contains_key(&p.name), "{} lacks an expectation", p.name);
        }
    }
}

#[test]
fn expected_verdicts_match() {
    let cfg = CheckConfig::default();
    for e in load_corpus().unwrap() {
        for r in check_impurity_witness(&e.library, &cfg).unwrap() {
            let want = e.expected[&r.procedure];
            let got = if r.verdict.is_pure() {
                Expected::PureCertified
            } else {
                assert!(!matches!(r.verdict, Verdict::Unknown { .. }), "{}", r.procedure);
                Expected::NotCertified
            };
            assert_eq!(got, want, "{}: {}", r.procedure, r.verdict.summary());
        }
    }
}

#[test]
fn pretty_print_round_trips() {
    for e in load_corpus().unwrap() {
        let first = parse_library(&e.source).unwrap();
        let again = parse_library(&pretty_print(&first)).unwrap();
        assert_eq!(first, again, "{}", e.name);
        assert_eq!(parse_library(&e.source).unwrap(), first);
    }
}

#[test]
fn validated_bodies_have_no_verification_statements() {
    for e in load_corpus().unwrap() {
        for p in &e.library.procedures {
            let mut bad = 0;
            p.body.walk(&mut |s| {
                if matches!(s, Stmt::Havoc(_) | Stmt::Assume(_) | Stmt::Assert { .. }) {
                    bad += 1;
                }
            });
            assert_eq!(bad, 0, "{}", p.name);
        }
    }
    assert!(load("proc f(n) { havoc n; return n; }").is_err());
}

#[test]
fn fact_single_carries_its_published_invariant() {
    let e = load_corpus().unwrap().into_iter().find(|e| e.name == "FactSingle").unwrap();
    let p = &e.library.procedures[0];
    let want = parse_formula("nineteen == -1 || nineteen == 19 * FactSingle(18)").unwrap();
    assert_eq!(p.invariant.as_ref(), Some(&want));
}

#[test]
fn choose_split_certifies_without_an_invariant() {
    let e = load_corpus().unwrap().into_iter().find(|e| e.name == "mcm").unwrap();
    let cs = e.library.procedure("chooseSplit").unwrap();
    assert_eq!(cs.invariant_or_true(), Formula::True);
    assert!(e.library.procedure("mcm").unwrap().invariant.as_ref().is_some_and(|i| *i != Formula::True));
    let r = check_procedure(&e.library, "chooseSplit", Some(&Formula::True), Approach::ImpurityWitness, &CheckConfig::default())
        .unwrap();
    assert!(r.verdict.is_pure());
}

#[test]
fn impurity_claims_come_with_replayed_witnesses() {
    let cfg = CheckConfig::default();
    for e in load_corpus().unwrap() {
        for r in check_impurity_witness(&e.library, &cfg).unwrap() {
            if let Verdict::NotCertified { kind, witness, .. } = &r.verdict {
                if *kind == NotCertifiedKind::ImpurityWitness {
                    let w = witness.as_ref().expect("impurity needs a witness");
                    assert_eq!(w.procedure, r.procedure);
                    assert_ne!(w.first, w.second);
                    let (again, status) = replay(&e.library, &w.second_sequence, cfg.replay_fuel);
                    assert_eq!(status, RunStatus::Completed);
                    assert_eq!(again.as_ref(), Some(w));
                } else {
                    assert!(witness.is_none());
                }
            }
        }
    }
}

fn verdicts(cfg: &CheckConfig) -> Vec<(String, Verdict)> {
    load_corpus()
        .unwrap()
        .iter()
        .flat_map(|e| check_impurity_witness(&e.library, cfg).unwrap())
        .map(|r| (r.procedure, r.verdict))
        .collect()
}

#[test]
fn verdicts_are_deterministic() {
    let cfg = CheckConfig::default();
    assert_eq!(verdicts(&cfg), verdicts(&cfg));
}

#[test]
fn iw_queries_are_order_independent() {
    let solver = SolverConfig::default();
    for e in load_corpus().unwrap() {
        for p in &e.library.procedures {
            let iw = build_iw(&e.library, p, &p.invariant_or_true()).unwrap();
            let q1 = emit_smt2(&[iw.not_vc.clone()], &iw.table, false).unwrap();
            let q2 = emit_smt2(&[iw.twin.clone()], &iw.table, false).unwrap();
            let forward = (check_sat(&q1, &solver).unwrap().answer, check_sat(&q2, &solver).unwrap().answer);
            let backward = {
                let b = check_sat(&q2, &solver).unwrap().answer;
                (check_sat(&q1, &solver).unwrap().answer, b)
            };
            assert_eq!(forward, backward, "{}", p.name);
        }
    }
}

#[test]
fn invariants_hold_at_runtime_on_pure_programs() {
    let cfg = OracleConfig {
        trials: 300,
        ..OracleConfig::default()
    };
    for e in load_corpus().unwrap() {
        if e.class != ProgramClass::Op {
            continue;
        }
        let r = check_runtime_invariants(&e.library, &observe(&e.library, &cfg), 14);
        assert!(r.violations.is_empty(), "{}: {:?}", e.name, r.violations);
        assert!(r.checked > 0, "{}", e.name);
    }
}

#[test]
fn poisoned_cache_violates_its_invariant_at_runtime() {
    let e = load_corpus().unwrap().into_iter().find(|e| e.name == "poison").unwrap();
    let cfg = OracleConfig {
        trials: 300,
        ..OracleConfig::default()
    };
    let r = check_runtime_invariants(&e.library, &observe(&e.library, &cfg), 14);
    assert!(!r.violations.is_empty());
}
