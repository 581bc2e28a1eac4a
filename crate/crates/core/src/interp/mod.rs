//! Reference interpreter, most general sequential client and the dynamic
//! purity oracle.

pub mod logic;
pub mod machine;
pub mod oracle;
pub mod post_check;
pub mod value;

pub use logic::{eval_formula, eval_term, Domain, Domains, Window};
pub use machine::{
    run_client, run_client_with, CallLog, ClientRun, Machine, RunError, RunStatus, RuntimeState,
    Step, TraceRecord, DEFAULT_FUEL,
};
pub use oracle::{oracle_purity, replay, CallSeq, IoTable, OracleConfig, OracleOutcome, OracleReport, Witness};
pub use post_check::{
    check_post_soundness, check_runtime_invariants, observe, Observation, PostCheckConfig, PostCheckReport,
    RuntimeInvariantReport,
};
pub use value::{initial_globals, ArrayVal, EvalError, Globals, Value};
