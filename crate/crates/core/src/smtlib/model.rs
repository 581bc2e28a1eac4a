use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::sexp::Sexp;
use crate::frontend::ast::Ident;

/// A concrete value read back from a solver model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum ModelValue {
    Int(i128),
    Bool(bool),
    Array(ArrayValue),
}

/// Finite table plus default. Nested for two-dimensional arrays.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArrayValue {
    pub default: Box<ModelValue>,
    pub entries: BTreeMap<i128, ModelValue>,
}

impl ArrayValue {
    pub fn constant(v: ModelValue) -> ArrayValue {
        ArrayValue {
            default: Box::new(v),
            entries: BTreeMap::new(),
        }
    }

    pub fn select(&self, i: i128) -> &ModelValue {
        self.entries.get(&i).unwrap_or(&self.default)
    }

    pub fn store(&mut self, i: i128, v: ModelValue) {
        self.entries.insert(i, v);
    }
}

impl ModelValue {
    pub fn as_int(&self) -> Option<i128> {
        match self {
            ModelValue::Int(n) => Some(*n),
            ModelValue::Bool(b) => Some(*b as i128),
            ModelValue::Array(_) => None,
        }
    }

    pub fn as_array(&self) -> Option<&ArrayValue> {
        match self {
            ModelValue::Array(a) => Some(a),
            _ => None,
        }
    }
}

/// Interpretation of an uninterpreted function as a finite table plus
/// default. `exact` is false when the solver's body used tests other than
/// equality with constants and the table is only a sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FunctionTable {
    pub arity: usize,
    #[serde(serialize_with = "entry_list")]
    pub entries: BTreeMap<Vec<i128>, i128>,
    pub default: Option<i128>,
    pub exact: bool,
}

fn entry_list<S: serde::Serializer>(entries: &BTreeMap<Vec<i128>, i128>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(entries.iter().map(|(args, value)| (args, value)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Definition {
    params: Vec<String>,
    body: Sexp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Val {
    Int(i128),
    Bool(bool),
    Arr(ArrayValue),
    /// `(_ as-array f)`
    FunArr(String),
}

const EVAL_FUEL: usize = 100_000;

/// Solver model with on-demand evaluation of `define-fun` bodies.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Model {
    defs: BTreeMap<String, Definition>,
    /// Solver symbol to formula name.
    names: BTreeMap<String, Ident>,
    /// Formula name to solver symbol.
    symbols: BTreeMap<Ident, String>,
}

impl Model {
    /// Reads the `(model ...)` or `(...)` list printed by `(get-model)`.
    /// Unknown entries are skipped.
    pub fn from_sexp(model: &Sexp, names: &BTreeMap<String, Ident>) -> Model {
        let mut m = Model {
            names: names.clone(),
            symbols: names.iter().map(|(s, f)| (f.clone(), s.clone())).collect(),
            ..Model::default()
        };
        let items = match model.list() {
            Some([Sexp::Atom(h), rest @ ..]) if h == "model" => rest,
            Some(items) => items,
            None => return m,
        };
        for it in items {
            let Some([Sexp::Atom(kw), Sexp::Atom(name), Sexp::List(params), _sort, body]) =
                it.list()
            else {
                continue;
            };
            if kw != "define-fun" {
                continue;
            }
            let params = params
                .iter()
                .filter_map(|p| p.list().and_then(|l| l.first()).and_then(Sexp::atom))
                .map(str::to_string)
                .collect();
            m.defs.insert(
                name.clone(),
                Definition {
                    params,
                    body: body.clone(),
                },
            );
        }
        m
    }

    /// Formula names bound by the model, in order.
    pub fn names(&self) -> Vec<Ident> {
        self.defs
            .keys()
            .filter_map(|s| self.names.get(s).cloned())
            .collect()
    }

    fn symbol<'a>(&'a self, name: &'a str) -> &'a str {
        self.symbols.get(name).map(String::as_str).unwrap_or(name)
    }

    /// Value of a constant. None when absent or not evaluable.
    pub fn value(&self, name: &str) -> Option<ModelValue> {
        let def = self.defs.get(self.symbol(name))?;
        if !def.params.is_empty() {
            return None;
        }
        let mut fuel = EVAL_FUEL;
        let v = self.eval(&def.body, &BTreeMap::new(), &mut fuel)?;
        self.finish(v)
    }

    pub fn int(&self, name: &str) -> Option<i128> {
        self.value(name)?.as_int()
    }

    /// `f(args)` under the model's interpretation.
    pub fn apply(&self, name: &str, args: &[i128]) -> Option<i128> {
        let mut fuel = EVAL_FUEL;
        let vals: Vec<Val> = args.iter().map(|a| Val::Int(*a)).collect();
        match self.call(self.symbol(name), &vals, &mut fuel)? {
            Val::Int(n) => Some(n),
            Val::Bool(b) => Some(b as i128),
            _ => None,
        }
    }

    /// Table form of a function interpretation: the points it tests against
    /// explicitly, plus its value elsewhere.
    pub fn function(&self, name: &str) -> Option<FunctionTable> {
        let sym = self.symbol(name);
        let def = self.defs.get(sym)?;
        let arity = def.params.len();
        let mut consts = BTreeSet::new();
        let mut exact = true;
        self.collect_points(&def.body, &def.params, &mut consts, &mut exact, &mut BTreeSet::new());
        let consts: Vec<i128> = consts.into_iter().collect();
        let mut entries = BTreeMap::new();
        let mut points: Vec<Vec<i128>> = vec![vec![]];
        for _ in 0..arity {
            points = points
                .into_iter()
                .flat_map(|p| {
                    consts.iter().map(move |c| {
                        let mut q = p.clone();
                        q.push(*c);
                        q
                    })
                })
                .collect();
            if points.len() > 4096 {
                exact = false;
                points.truncate(4096);
            }
        }
        // A point outside every tested constant stands for "elsewhere".
        let outside = consts.iter().max().map_or(0, |m| m.saturating_add(1));
        let default = self.apply(name, &vec![outside; arity]);
        for p in points {
            if let Some(v) = self.apply(name, &p) {
                if Some(v) != default {
                    entries.insert(p, v);
                }
            }
        }
        Some(FunctionTable {
            arity,
            entries,
            default,
            exact,
        })
    }

    fn collect_points(
        &self,
        s: &Sexp,
        params: &[String],
        out: &mut BTreeSet<i128>,
        exact: &mut bool,
        seen: &mut BTreeSet<String>,
    ) {
        match s {
            Sexp::Atom(a) => {
                if let Some(n) = parse_numeral(a) {
                    out.insert(n);
                } else if let Some(def) = self.defs.get(a) {
                    if seen.insert(a.clone()) {
                        let body = def.body.clone();
                        self.collect_points(&body, &def.params, out, exact, seen);
                    }
                }
            }
            Sexp::List(items) => {
                if let Some([Sexp::Atom(h), Sexp::Atom(n)]) = Some(items.as_slice()) {
                    if h == "-" {
                        if let Some(n) = parse_numeral(n) {
                            out.insert(-n);
                            return;
                        }
                    }
                }
                if let Some(Sexp::Atom(h)) = items.first() {
                    if matches!(h.as_str(), "<" | "<=" | ">" | ">=") {
                        *exact = false;
                    }
                    if let Some(def) = self.defs.get(h) {
                        if seen.insert(h.clone()) {
                            let body = def.body.clone();
                            self.collect_points(&body, &def.params, out, exact, seen);
                        }
                    }
                }
                for it in items {
                    self.collect_points(it, params, out, exact, seen);
                }
            }
        }
    }

    fn call(&self, sym: &str, args: &[Val], fuel: &mut usize) -> Option<Val> {
        let def = self.defs.get(sym)?;
        if def.params.len() != args.len() {
            return None;
        }
        let env: BTreeMap<String, Val> = def
            .params
            .iter()
            .cloned()
            .zip(args.iter().cloned())
            .collect();
        self.eval(&def.body, &env, fuel)
    }

    fn finish(&self, v: Val) -> Option<ModelValue> {
        match v {
            Val::Int(n) => Some(ModelValue::Int(n)),
            Val::Bool(b) => Some(ModelValue::Bool(b)),
            Val::Arr(a) => Some(ModelValue::Array(a)),
            Val::FunArr(f) => {
                let t = self.function(&self.names.get(&f).cloned().unwrap_or(f))?;
                if t.arity != 1 {
                    return None;
                }
                let mut a = ArrayValue::constant(ModelValue::Int(t.default?));
                for (k, v) in t.entries {
                    a.store(k[0], ModelValue::Int(v));
                }
                Some(ModelValue::Array(a))
            }
        }
    }

    fn eval(&self, s: &Sexp, env: &BTreeMap<String, Val>, fuel: &mut usize) -> Option<Val> {
        *fuel = fuel.checked_sub(1)?;
        match s {
            Sexp::Atom(a) => {
                if let Some(v) = env.get(a) {
                    return Some(v.clone());
                }
                match a.as_str() {
                    "true" => return Some(Val::Bool(true)),
                    "false" => return Some(Val::Bool(false)),
                    _ => {}
                }
                if let Some(n) = parse_numeral(a) {
                    return Some(Val::Int(n));
                }
                self.call(a, &[], fuel)
            }
            Sexp::List(items) => {
                let (head, args) = items.split_first()?;
                match head {
                    Sexp::List(h) => {
                        // ((as const (Array Int Int)) v) and (_ as-array f)
                        if matches!(h.as_slice(), [Sexp::Atom(a), Sexp::Atom(c), _] if a == "as" && c == "const")
                            && args.len() == 1
                        {
                            let v = self.eval(&args[0], env, fuel)?;
                            return Some(Val::Arr(ArrayValue::constant(to_model(v)?)));
                        }
                        None
                    }
                    Sexp::Atom(h) => self.eval_app(h, args, env, fuel),
                }
            }
        }
    }

    fn eval_app(
        &self,
        h: &str,
        args: &[Sexp],
        env: &BTreeMap<String, Val>,
        fuel: &mut usize,
    ) -> Option<Val> {
        let int = |m: &Model, e: &Sexp, fuel: &mut usize| -> Option<i128> {
            match m.eval(e, env, fuel)? {
                Val::Int(n) => Some(n),
                _ => None,
            }
        };
        let boolean = |m: &Model, e: &Sexp, fuel: &mut usize| -> Option<bool> {
            match m.eval(e, env, fuel)? {
                Val::Bool(b) => Some(b),
                _ => None,
            }
        };
        match (h, args) {
            ("_", [Sexp::Atom(k), Sexp::Atom(f)]) if k == "as-array" => {
                Some(Val::FunArr(f.clone()))
            }
            ("ite", [c, t, e]) => {
                if boolean(self, c, fuel)? {
                    self.eval(t, env, fuel)
                } else {
                    self.eval(e, env, fuel)
                }
            }
            ("let", [Sexp::List(binds), body]) => {
                let mut inner = env.clone();
                for b in binds {
                    let [Sexp::Atom(x), e] = b.list()? else {
                        return None;
                    };
                    inner.insert(x.clone(), self.eval(e, env, fuel)?);
                }
                self.eval(body, &inner, fuel)
            }
            ("not", [a]) => Some(Val::Bool(!boolean(self, a, fuel)?)),
            ("and", _) | ("or", _) => {
                let is_and = h == "and";
                for a in args {
                    if boolean(self, a, fuel)? != is_and {
                        return Some(Val::Bool(!is_and));
                    }
                }
                Some(Val::Bool(is_and))
            }
            ("=>", [a, b]) => Some(Val::Bool(!boolean(self, a, fuel)? || boolean(self, b, fuel)?)),
            ("=", [a, b]) => {
                let x = self.eval(a, env, fuel)?;
                let y = self.eval(b, env, fuel)?;
                Some(Val::Bool(x == y))
            }
            ("distinct", [a, b]) => {
                let x = self.eval(a, env, fuel)?;
                let y = self.eval(b, env, fuel)?;
                Some(Val::Bool(x != y))
            }
            ("<" | "<=" | ">" | ">=", [a, b]) => {
                let (x, y) = (int(self, a, fuel)?, int(self, b, fuel)?);
                Some(Val::Bool(match h {
                    "<" => x < y,
                    "<=" => x <= y,
                    ">" => x > y,
                    _ => x >= y,
                }))
            }
            ("-", [a]) => Some(Val::Int(int(self, a, fuel)?.checked_neg()?)),
            ("+" | "-" | "*", [first, rest @ ..]) if !rest.is_empty() => {
                let mut acc = int(self, first, fuel)?;
                for r in rest {
                    let v = int(self, r, fuel)?;
                    acc = match h {
                        "+" => acc.checked_add(v)?,
                        "-" => acc.checked_sub(v)?,
                        _ => acc.checked_mul(v)?,
                    };
                }
                Some(Val::Int(acc))
            }
            ("div" | "mod", [a, b]) => {
                let (x, y) = (int(self, a, fuel)?, int(self, b, fuel)?);
                if y == 0 {
                    return None;
                }
                Some(Val::Int(if h == "div" {
                    x.checked_div_euclid(y)?
                } else {
                    x.checked_rem_euclid(y)?
                }))
            }
            ("abs", [a]) => Some(Val::Int(int(self, a, fuel)?.checked_abs()?)),
            ("select", [a, i]) => {
                let arr = self.eval(a, env, fuel)?;
                let i = int(self, i, fuel)?;
                match arr {
                    Val::Arr(arr) => Some(from_model(arr.select(i).clone())),
                    Val::FunArr(f) => self.call(&f, &[Val::Int(i)], fuel),
                    _ => None,
                }
            }
            ("store", [a, i, v]) => {
                let arr = self.eval(a, env, fuel)?;
                let i = int(self, i, fuel)?;
                let v = to_model(self.eval(v, env, fuel)?)?;
                let mut arr = match arr {
                    Val::Arr(arr) => arr,
                    f @ Val::FunArr(_) => match self.finish(f)? {
                        ModelValue::Array(a) => a,
                        _ => return None,
                    },
                    _ => return None,
                };
                arr.store(i, v);
                Some(Val::Arr(arr))
            }
            (f, _) if self.defs.contains_key(f) => {
                let vals = args
                    .iter()
                    .map(|a| self.eval(a, env, fuel))
                    .collect::<Option<Vec<_>>>()?;
                self.call(f, &vals, fuel)
            }
            _ => None,
        }
    }
}

fn to_model(v: Val) -> Option<ModelValue> {
    match v {
        Val::Int(n) => Some(ModelValue::Int(n)),
        Val::Bool(b) => Some(ModelValue::Bool(b)),
        Val::Arr(a) => Some(ModelValue::Array(a)),
        Val::FunArr(_) => None,
    }
}

fn from_model(v: ModelValue) -> Val {
    match v {
        ModelValue::Int(n) => Val::Int(n),
        ModelValue::Bool(b) => Val::Bool(b),
        ModelValue::Array(a) => Val::Arr(a),
    }
}

fn parse_numeral(a: &str) -> Option<i128> {
    if a.bytes().all(|b| b.is_ascii_digit()) && !a.is_empty() {
        a.parse().ok()
    } else {
        None
    }
}
