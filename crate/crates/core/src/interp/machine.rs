use std::collections::HashMap;

use serde::Serialize;

use super::value::{eval_int, initial_globals, EvalError, Globals, Scope, Value};
use crate::frontend::ast::{Ident, LValue, Library, Procedure, Stmt};

/// One activation: remaining statements (top of `cont` runs next) and locals.
#[derive(Debug, Clone)]
pub struct Frame<'a> {
    pub procedure: &'a Procedure,
    pub cont: Vec<&'a Stmt>,
    pub locals: HashMap<Ident, Value>,
    /// Caller variable receiving the result.
    ret_to: Option<&'a Ident>,
    trace: usize,
}

#[derive(Debug, Clone)]
pub struct RuntimeState<'a> {
    pub stack: Vec<Frame<'a>>,
    pub globals: Globals,
}

/// A completed (or interrupted) execution of one procedure call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceRecord {
    pub procedure: Ident,
    pub args: Vec<i128>,
    pub result: Option<i128>,
    /// 0 for top-level calls.
    pub depth: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entry: Option<Globals>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exit: Option<Globals>,
}

/// Traces in call order; nested traces follow their caller's entry.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CallLog {
    pub traces: Vec<TraceRecord>,
}

impl CallLog {
    /// Results of the top-level calls, in order.
    pub fn top_level_results(&self) -> Vec<Option<i128>> {
        self.traces
            .iter()
            .filter(|t| t.depth == 0)
            .map(|t| t.result)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RunError {
    #[error("no procedure `{0}`")]
    UnknownProcedure(Ident),
    #[error("`{0}` expects {1} argument(s)")]
    Arity(Ident, usize),
    #[error("runtime fault: {0}")]
    Fault(#[from] EvalError),
    #[error("statement not allowed at run time")]
    Unexecutable,
    #[error("step budget exhausted")]
    FuelExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    /// Still running.
    Running,
    /// The top-level call returned this value; the stack is empty again.
    Returned(i128),
}

/// Small-step machine for the most general sequential client.
pub struct Machine<'a> {
    lib: &'a Library,
    pub state: RuntimeState<'a>,
    pub log: CallLog,
    pub snapshots: bool,
}

impl<'a> Machine<'a> {
    pub fn new(lib: &'a Library) -> Machine<'a> {
        Machine {
            lib,
            state: RuntimeState {
                stack: Vec::new(),
                globals: initial_globals(lib),
            },
            log: CallLog::default(),
            snapshots: false,
        }
    }

    fn push_frame(
        &mut self,
        name: &str,
        args: Vec<i128>,
        ret_to: Option<&'a Ident>,
    ) -> Result<(), RunError> {
        let p = self
            .lib
            .procedure(name)
            .ok_or_else(|| RunError::UnknownProcedure(name.to_string()))?;
        if p.params.len() != args.len() {
            return Err(RunError::Arity(name.to_string(), p.params.len()));
        }
        let locals = p
            .params
            .iter()
            .cloned()
            .zip(args.iter().map(|a| Value::Int(*a)))
            .collect();
        self.log.traces.push(TraceRecord {
            procedure: p.name.clone(),
            args,
            result: None,
            depth: self.state.stack.len(),
            entry: self.snapshots.then(|| self.state.globals.clone()),
            exit: None,
        });
        self.state.stack.push(Frame {
            procedure: p,
            cont: vec![&p.body],
            locals,
            ret_to,
            trace: self.log.traces.len() - 1,
        });
        Ok(())
    }

    /// The top-level-call rule: only valid on an empty stack.
    pub fn call(&mut self, name: &str, args: &[i128]) -> Result<(), RunError> {
        assert!(self.state.stack.is_empty(), "top-level call on a busy machine");
        self.push_frame(name, args.to_vec(), None)
    }

    fn eval(&self, e: &crate::frontend::ast::Expr) -> Result<i128, RunError> {
        let frame = self.state.stack.last().expect("non-empty stack");
        Ok(eval_int(e, &Locals { frame, globals: &self.state.globals })?)
    }

    fn write(&mut self, x: &str, v: i128) {
        if let Some(g) = self.state.globals.get_mut(x) {
            *g = Value::Int(v);
        } else {
            let frame = self.state.stack.last_mut().expect("non-empty stack");
            frame.locals.insert(x.to_string(), Value::Int(v));
        }
    }

    /// Executes one statement of the top frame.
    pub fn step(&mut self) -> Result<Step, RunError> {
        let frame = self.state.stack.last_mut().expect("step on an empty stack");
        let Some(s) = frame.cont.pop() else {
            return Err(RunError::Unexecutable);
        };
        match s {
            Stmt::Skip => {}
            Stmt::Seq(items) => frame.cont.extend(items.iter().rev()),
            Stmt::If {
                cond,
                then_branch,
                else_branch,
                ..
            } => {
                let c = self.eval(cond)?;
                let frame = self.state.stack.last_mut().expect("non-empty stack");
                frame.cont.push(if c != 0 { then_branch } else { else_branch });
            }
            Stmt::Assign { lhs, rhs, .. } => {
                let v = self.eval(rhs)?;
                match lhs {
                    LValue::Var(x) => self.write(x, v),
                    LValue::Cell(a, idx) => {
                        let idx = idx
                            .iter()
                            .map(|i| self.eval(i))
                            .collect::<Result<Vec<_>, _>>()?;
                        match self.state.globals.get_mut(a) {
                            Some(Value::Array(arr)) => arr.set(idx, v),
                            _ => return Err(EvalError::Shape(a.clone()).into()),
                        }
                    }
                }
            }
            Stmt::Call {
                lhs, callee, args, ..
            } => {
                let args = args
                    .iter()
                    .map(|a| self.eval(a))
                    .collect::<Result<Vec<_>, _>>()?;
                self.push_frame(callee, args, Some(lhs))?;
            }
            Stmt::Return { var, .. } => {
                let v = frame
                    .locals
                    .get(var)
                    .or_else(|| self.state.globals.get(var))
                    .and_then(Value::as_int)
                    .ok_or_else(|| EvalError::Unbound(var.clone()))?;
                let done = self.state.stack.pop().expect("non-empty stack");
                let rec = &mut self.log.traces[done.trace];
                rec.result = Some(v);
                if self.snapshots {
                    rec.exit = Some(self.state.globals.clone());
                }
                match done.ret_to {
                    Some(x) => self.write(x, v),
                    None => return Ok(Step::Returned(v)),
                }
            }
            Stmt::Havoc(_) | Stmt::Assume(_) | Stmt::Assert { .. } => {
                return Err(RunError::Unexecutable)
            }
        }
        Ok(Step::Running)
    }

    /// Runs a top-level call to completion within `fuel` steps.
    pub fn run_call(&mut self, name: &str, args: &[i128], fuel: u64) -> Result<i128, RunError> {
        self.call(name, args)?;
        for _ in 0..fuel {
            if let Step::Returned(v) = self.step()? {
                return Ok(v);
            }
        }
        Err(RunError::FuelExhausted)
    }
}

struct Locals<'s, 'a> {
    frame: &'s Frame<'a>,
    globals: &'s Globals,
}

impl Scope for Locals<'_, '_> {
    fn lookup(&self, name: &str) -> Option<&Value> {
        self.frame.locals.get(name).or_else(|| self.globals.get(name))
    }
}

pub const DEFAULT_FUEL: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    /// The call at this index ran out of steps.
    FuelExhausted { call: usize },
    Fault { call: usize, error: RunError },
}

#[derive(Debug, Clone)]
pub struct ClientRun {
    pub log: CallLog,
    pub results: Vec<i128>,
    pub status: RunStatus,
    pub globals: Globals,
}

/// Initializes globals once, then performs `calls` in order with a budget of
/// `fuel` steps per top-level call.
pub fn run_client(lib: &Library, calls: &[(Ident, Vec<i128>)], fuel: u64) -> ClientRun {
    run_client_with(lib, calls, fuel, false)
}

pub fn run_client_with(
    lib: &Library,
    calls: &[(Ident, Vec<i128>)],
    fuel: u64,
    snapshots: bool,
) -> ClientRun {
    let mut m = Machine::new(lib);
    m.snapshots = snapshots;
    let mut results = Vec::new();
    let mut status = RunStatus::Completed;
    for (k, (name, args)) in calls.iter().enumerate() {
        match m.run_call(name, args, fuel) {
            Ok(v) => results.push(v),
            Err(RunError::FuelExhausted) => {
                status = RunStatus::FuelExhausted { call: k };
                break;
            }
            Err(error) => {
                status = RunStatus::Fault { call: k, error };
                break;
            }
        }
    }
    ClientRun {
        log: m.log,
        results,
        status,
        globals: m.state.globals,
    }
}
