//! Observational-purity checking for recursive procedures that cache results
//! in private mutable globals.

pub mod checker;
pub mod corpus;
pub mod formula;
pub mod frontend;
pub mod interp;
pub mod invgen;
pub mod report;
pub mod smtlib;
pub mod transform;
pub mod vcgen;
