use opcheck::checker::{check_procedure_iw, CheckConfig};
use opcheck::corpus::load_corpus;
use opcheck::formula::Formula;
use opcheck::frontend::ast::Library;
use opcheck::invgen::{
    equiv, generate_invariant, step, valid, Equivalence, GenConfig, InvGenOutcome, SimplifyMode, Validity,
};

fn lib(name: &str) -> Library {
    load_corpus().unwrap().into_iter().find(|e| e.name == name).unwrap().library
}

fn run(name: &str, cfg: &GenConfig) -> (Library, opcheck::invgen::InvGenState) {
    let l = lib(name);
    let st = generate_invariant(&l, &l.procedures[0], cfg).unwrap();
    (l, st)
}

#[test]
fn each_iterate_weakens_the_previous() {
    let cfg = GenConfig {
        max_iters: 3,
        ..GenConfig::default()
    };
    for name in ["factCache", "FactRecent", "counter"] {
        let (l, st) = run(name, &cfg);
        for w in st.history.windows(2) {
            let imp = Formula::Implies(Box::new(w[0].clone()), Box::new(w[1].clone()));
            assert_eq!(valid(&l, &imp, &cfg.solver).unwrap(), Validity::Valid, "{name}: {} => {}", w[0], w[1]);
        }
    }
}

#[test]
fn fixpoints_are_stable_under_another_step() {
    for mode in [SimplifyMode::Equational, SimplifyMode::Exact] {
        let cfg = GenConfig {
            mode,
            ..GenConfig::default()
        };
        let (l, st) = run("factCache", &cfg);
        let inv = st.invariant().expect("factCache converges").clone();
        let again = step(&l, &l.procedures[0], &inv, &cfg).unwrap();
        assert_eq!(equiv(&l, &inv, &again, &cfg.solver).unwrap(), Equivalence::Yes, "{mode:?}");
    }
}

#[test]
fn generated_invariants_certify() {
    let cfg = GenConfig::default();
    for name in ["factCache", "FactRecent"] {
        let (l, st) = run(name, &cfg);
        let inv = st.invariant().unwrap_or_else(|| panic!("{name}: {:?}", st.outcome));
        let r = check_procedure_iw(&l, &l.procedures[0], inv, &CheckConfig::default()).unwrap();
        assert!(r.verdict.is_pure(), "{name}: {inv} gives {}", r.verdict.summary());
    }
}

#[test]
fn counter_keeps_growing() {
    let cfg = GenConfig {
        max_iters: 3,
        ..GenConfig::default()
    };
    let (_, st) = run("counter", &cfg);
    assert!(matches!(st.outcome, InvGenOutcome::NoFixpoint { .. }));
    assert_eq!(st.history.len(), 4);
}
