//! SMT-LIB2 emission and an external solver driver.

pub mod emit;
pub mod model;
pub mod sexp;
pub mod solver;

pub use emit::{emit_smt2, smt_symbol, EmitError, SmtQuery, SymbolTable, LOGIC};
pub use model::{ArrayValue, FunctionTable, Model, ModelValue};
pub use solver::{
    check_sat, solver_identity, write_query, Answered, SolverAnswer, SolverConfig, SolverError,
    DEFAULT_TIMEOUT,
};
