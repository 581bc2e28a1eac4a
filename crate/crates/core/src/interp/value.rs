use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::frontend::ast::{BinOp, Expr, GlobalDecl, GlobalKind, Ident, Library};

/// Array with every cell at `default` except `cells`. Cells equal to the
/// default are never stored, so derived equality is extensional. Cells are
/// shared between copies until one of them is written.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ArrayVal {
    pub default: i128,
    pub cells: Arc<BTreeMap<Vec<i128>, i128>>,
}

impl ArrayVal {
    pub fn filled(default: i128) -> ArrayVal {
        ArrayVal {
            default,
            cells: Arc::default(),
        }
    }

    pub fn get(&self, idx: &[i128]) -> i128 {
        self.cells.get(idx).copied().unwrap_or(self.default)
    }

    pub fn set(&mut self, idx: Vec<i128>, v: i128) {
        if v == self.default {
            if self.cells.contains_key(&idx) {
                Arc::make_mut(&mut self.cells).remove(&idx);
            }
        } else if self.cells.get(&idx) != Some(&v) {
            Arc::make_mut(&mut self.cells).insert(idx, v);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(untagged)]
pub enum Value {
    Int(i128),
    Array(ArrayVal),
}

impl Value {
    pub fn as_int(&self) -> Option<i128> {
        match self {
            Value::Int(n) => Some(*n),
            Value::Array(_) => None,
        }
    }

    pub fn as_array(&self) -> Option<&ArrayVal> {
        match self {
            Value::Array(a) => Some(a),
            Value::Int(_) => None,
        }
    }
}

pub type Globals = BTreeMap<Ident, Value>;

pub fn initial_value(g: &GlobalDecl) -> Value {
    match g.kind {
        GlobalKind::Scalar => Value::Int(g.init),
        _ => Value::Array(ArrayVal::filled(g.init)),
    }
}

/// Global state before the first top-level call.
pub fn initial_globals(lib: &Library) -> Globals {
    lib.globals
        .iter()
        .map(|g| (g.name.clone(), initial_value(g)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("integer overflow")]
    Overflow,
    #[error("`{0}` has no value")]
    Unbound(String),
    #[error("`{0}` used with the wrong shape")]
    Shape(String),
    /// A procedure symbol applied where no interpretation is known.
    #[error("no interpretation for {0}")]
    Uninterpreted(String),
}

/// Variable and function lookup for expression evaluation.
pub trait Scope {
    fn lookup(&self, name: &str) -> Option<&Value>;

    fn apply(&self, name: &str, args: &[i128]) -> Result<i128, EvalError> {
        Err(EvalError::Uninterpreted(format!("{name}{args:?}")))
    }
}

impl Scope for BTreeMap<Ident, Value> {
    fn lookup(&self, name: &str) -> Option<&Value> {
        self.get(name)
    }
}

pub fn eval_int(e: &Expr, scope: &dyn Scope) -> Result<i128, EvalError> {
    match e {
        Expr::Int(c) => Ok(*c),
        Expr::Var(x) => match scope.lookup(x) {
            Some(Value::Int(n)) => Ok(*n),
            Some(Value::Array(_)) => Err(EvalError::Shape(x.clone())),
            None => Err(EvalError::Unbound(x.clone())),
        },
        Expr::Select(a, idx) => {
            let idx = idx
                .iter()
                .map(|i| eval_int(i, scope))
                .collect::<Result<Vec<_>, _>>()?;
            match &**a {
                Expr::Var(x) => match scope.lookup(x) {
                    Some(Value::Array(arr)) => Ok(arr.get(&idx)),
                    Some(Value::Int(_)) => Err(EvalError::Shape(x.clone())),
                    None => Err(EvalError::Unbound(x.clone())),
                },
                other => Ok(eval_array(other, scope)?.get(&idx)),
            }
        }
        Expr::Store(..) => Err(EvalError::Shape(e.to_string())),
        Expr::App(f, args) => {
            let args = args
                .iter()
                .map(|a| eval_int(a, scope))
                .collect::<Result<Vec<_>, _>>()?;
            scope.apply(f, &args)
        }
        Expr::Unary(op, inner) => op.apply(eval_int(inner, scope)?).ok_or(EvalError::Overflow),
        Expr::Binary(op, l, r) => {
            let a = eval_int(l, scope)?;
            // Short-circuit keeps `&&`/`||` total even when the right operand faults.
            match op {
                BinOp::And if a == 0 => return Ok(0),
                BinOp::Or if a != 0 => return Ok(1),
                _ => {}
            }
            let b = eval_int(r, scope)?;
            op.apply(a, b).ok_or(EvalError::Overflow)
        }
    }
}

pub fn eval_array(e: &Expr, scope: &dyn Scope) -> Result<ArrayVal, EvalError> {
    match e {
        Expr::Var(x) => match scope.lookup(x) {
            Some(Value::Array(a)) => Ok(a.clone()),
            Some(Value::Int(_)) => Err(EvalError::Shape(x.clone())),
            None => Err(EvalError::Unbound(x.clone())),
        },
        Expr::Store(a, idx, v) => {
            let mut arr = eval_array(a, scope)?;
            let idx = idx
                .iter()
                .map(|i| eval_int(i, scope))
                .collect::<Result<Vec<_>, _>>()?;
            let v = eval_int(v, scope)?;
            arr.set(idx, v);
            Ok(arr)
        }
        other => Err(EvalError::Shape(other.to_string())),
    }
}

/// Evaluates a term of either shape.
pub fn eval_value(e: &Expr, scope: &dyn Scope) -> Result<Value, EvalError> {
    match e {
        Expr::Var(x) => scope
            .lookup(x)
            .cloned()
            .ok_or_else(|| EvalError::Unbound(x.clone())),
        Expr::Store(..) => Ok(Value::Array(eval_array(e, scope)?)),
        _ => Ok(Value::Int(eval_int(e, scope)?)),
    }
}
