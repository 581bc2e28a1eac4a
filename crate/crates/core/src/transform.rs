//! Rewrites a procedure body so that it contains no calls: each call becomes
//! an invariant check, a havoc of every global, and an assumption relating the
//! result to the uninterpreted procedure symbol; `return` becomes a final
//! invariant check.

use std::collections::BTreeSet;

use crate::formula::{fresh_variant, Binder, Formula, Sort};
use crate::frontend::ast::*;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallSite {
    pub site: Site,
    pub callee: Ident,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformedBody {
    pub procedure: Ident,
    pub params: Vec<Ident>,
    pub return_var: Ident,
    pub invariant: Formula,
    pub body: Stmt,
    /// Temporaries introduced by the rewrite, in creation order.
    pub temps: Vec<Ident>,
    pub call_sites: Vec<CallSite>,
}

impl TransformedBody {
    /// Every non-global variable of the transformed body, formals included.
    pub fn local_names(&self, lib: &Library) -> BTreeSet<Ident> {
        let mut out: BTreeSet<Ident> = self.params.iter().cloned().collect();
        out.extend(self.body.assigned_names());
        out.insert(self.return_var.clone());
        out.extend(self.temps.iter().cloned());
        // Call targets are bound only by the assumption after the havoc.
        self.body.walk(&mut |s| {
            if let Stmt::Assume(f) = s {
                out.extend(f.free_vars());
            }
        });
        out.retain(|x| !lib.is_global(x));
        out
    }
}

struct TempNamer {
    avoid: BTreeSet<Ident>,
    next: usize,
    made: Vec<Ident>,
}

impl TempNamer {
    fn fresh(&mut self) -> Ident {
        loop {
            self.next += 1;
            let name = format!("t{}", self.next);
            if self.avoid.insert(name.clone()) {
                self.made.push(name.clone());
                return name;
            }
        }
    }
}

/// Rule 1 on its own: `x := e` with `x` in `e` becomes `t := e; x := t`.
pub fn normalize_self_assign(s: &Stmt) -> Stmt {
    let mut avoid = BTreeSet::new();
    s.all_names(&mut avoid);
    let mut namer = TempNamer {
        avoid,
        next: 0,
        made: Vec::new(),
    };
    normalize(s, &mut namer)
}

fn normalize(s: &Stmt, namer: &mut TempNamer) -> Stmt {
    match s {
        Stmt::Assign { lhs, rhs, pos } if rhs.mentions(lhs.name()) => {
            let t = namer.fresh();
            Stmt::seq(vec![
                Stmt::Assign {
                    lhs: LValue::Var(t.clone()),
                    rhs: rhs.clone(),
                    pos: *pos,
                },
                Stmt::Assign {
                    lhs: lhs.clone(),
                    rhs: Expr::Var(t),
                    pos: *pos,
                },
            ])
        }
        Stmt::Seq(items) => Stmt::seq(items.iter().map(|i| normalize(i, namer)).collect()),
        Stmt::If {
            cond,
            then_branch,
            else_branch,
            pos,
        } => Stmt::If {
            cond: cond.clone(),
            then_branch: Box::new(normalize(then_branch, namer)),
            else_branch: Box::new(normalize(else_branch, namer)),
            pos: *pos,
        },
        other => other.clone(),
    }
}

/// The transformed body `TB(p, inv)`.
pub fn transform_body(lib: &Library, p: &Procedure, inv: &Formula) -> TransformedBody {
    let mut avoid = lib.all_names();
    inv.all_names(&mut avoid);
    let mut namer = TempNamer {
        avoid,
        next: 0,
        made: Vec::new(),
    };
    let normalized = normalize(&p.body, &mut namer);
    let mut t = Transformer {
        lib,
        params: &p.params,
        inv,
        namer,
        sites: Vec::new(),
        return_var: None,
    };
    let mut written = BTreeSet::new();
    let body = t.stmt(&normalized, &mut written);
    TransformedBody {
        procedure: p.name.clone(),
        params: p.params.clone(),
        return_var: t
            .return_var
            .expect("a validated procedure ends with a return"),
        invariant: inv.clone(),
        body,
        temps: t.namer.made,
        call_sites: t.sites,
    }
}

struct Transformer<'a> {
    lib: &'a Library,
    params: &'a [Ident],
    inv: &'a Formula,
    namer: TempNamer,
    sites: Vec<CallSite>,
    return_var: Option<Ident>,
}

impl Transformer<'_> {
    fn is_local(&self, x: &str) -> bool {
        !self.lib.is_global(x)
    }

    /// `written` holds the names that may have been assigned on some path
    /// reaching this statement.
    fn stmt(&mut self, s: &Stmt, written: &mut BTreeSet<Ident>) -> Stmt {
        match s {
            Stmt::Seq(items) => {
                Stmt::seq(items.iter().map(|i| self.stmt(i, written)).collect())
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
                pos,
            } => {
                let mut w_then = written.clone();
                let mut w_else = written.clone();
                let then_branch = Box::new(self.stmt(then_branch, &mut w_then));
                let else_branch = Box::new(self.stmt(else_branch, &mut w_else));
                written.extend(w_then);
                written.extend(w_else);
                Stmt::If {
                    cond: cond.clone(),
                    then_branch,
                    else_branch,
                    pos: *pos,
                }
            }
            Stmt::Assign { lhs, .. } => {
                written.insert(lhs.name().to_string());
                s.clone()
            }
            Stmt::Call {
                lhs,
                callee,
                args,
                pos,
            } => self.call(lhs, callee, args, *pos, written),
            Stmt::Return { var, .. } => {
                self.return_var = Some(var.clone());
                Stmt::Assert {
                    cond: self.inv.clone(),
                    site: Site::Exit,
                }
            }
            other => other.clone(),
        }
    }

    fn call(
        &mut self,
        lhs: &str,
        callee: &str,
        args: &[Expr],
        pos: Pos,
        written: &mut BTreeSet<Ident>,
    ) -> Stmt {
        let mut out = Vec::new();
        let mut actuals = Vec::with_capacity(args.len());
        for a in args {
            match a {
                Expr::Var(y) if self.is_local(y) => actuals.push(Expr::Var(y.clone())),
                _ => {
                    let t = self.namer.fresh();
                    out.push(Stmt::Assign {
                        lhs: LValue::Var(t.clone()),
                        rhs: a.clone(),
                        pos,
                    });
                    written.insert(t.clone());
                    actuals.push(Expr::Var(t));
                }
            }
        }
        let site = Site::Call(self.sites.len());
        self.sites.push(CallSite {
            site,
            callee: callee.to_string(),
            pos,
        });
        out.push(Stmt::Assert {
            cond: self.inv.clone(),
            site,
        });
        for g in &self.lib.globals {
            out.push(Stmt::Havoc(g.name.clone()));
        }
        // The result lands in a fresh temporary unless the target is a local
        // that nothing has written yet and that is not an argument.
        let direct = self.is_local(lhs)
            && !written.contains(lhs)
            && !self.params.iter().any(|f| f == lhs)
            && !actuals.iter().any(|a| a.mentions(lhs));
        let target = if direct {
            lhs.to_string()
        } else {
            self.namer.fresh()
        };
        out.push(Stmt::Assume(Formula::conj(vec![
            self.inv.clone(),
            Formula::eq(
                Expr::Var(target.clone()),
                Expr::App(callee.to_string(), actuals),
            ),
        ])));
        if !direct {
            out.push(Stmt::Assign {
                lhs: LValue::Var(lhs.to_string()),
                rhs: Expr::Var(target.clone()),
                pos,
            });
        }
        written.insert(target);
        written.insert(lhs.to_string());
        Stmt::seq(out)
    }
}

/// `g1 = c1 && ... && gN = cN`, with `forall` conjuncts for arrays.
pub fn init_formula(lib: &Library) -> Formula {
    let names: BTreeSet<Ident> = lib.globals.iter().map(|g| g.name.clone()).collect();
    let pick = |base: &str| {
        if names.contains(base) {
            fresh_variant(base, &names)
        } else {
            base.to_string()
        }
    };
    let conjuncts = lib
        .globals
        .iter()
        .map(|g| {
            let c = Expr::Int(g.init);
            match g.kind {
                GlobalKind::Scalar => Formula::eq(Expr::var(g.name.clone()), c),
                GlobalKind::Array1 => {
                    let k = pick("k");
                    Formula::Forall(
                        vec![Binder::new(k.clone(), Sort::Int)],
                        Box::new(Formula::eq(Expr::select(g.name.clone(), vec![Expr::Var(k)]), c)),
                    )
                }
                GlobalKind::Array2 => {
                    let (i, j) = (pick("i"), pick("j"));
                    Formula::Forall(
                        vec![Binder::int(i.clone()), Binder::int(j.clone())],
                        Box::new(Formula::eq(
                            Expr::select(g.name.clone(), vec![Expr::Var(i), Expr::Var(j)]),
                            c,
                        )),
                    )
                }
            }
        })
        .collect();
    Formula::conj(conjuncts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_formula, parse_library, pretty_stmt};

    fn stmt_text(s: &Stmt) -> String {
        pretty_stmt(s, 0)
    }

    #[test]
    fn rule_one() {
        let lib = parse_library("var g: int := 0; proc f(n) { x := 1; x := x + 1; g := n * x; return x; }").unwrap();
        let out = normalize_self_assign(&lib.procedures[0].body);
        assert_eq!(
            stmt_text(&out),
            "x := 1;\nt1 := x + 1;\nx := t1;\ng := n * x;\nreturn x;\n"
        );
        let lib = parse_library("var a: [int] int := 0; proc f(i) { a[i] := a[i] + 1; return i; }").unwrap();
        let out = normalize_self_assign(&lib.procedures[0].body);
        assert_eq!(stmt_text(&out), "t1 := a[i] + 1;\na[i] := t1;\nreturn i;\n");
    }

    #[test]
    fn call_free_body_only_gets_exit_assert() {
        let lib = parse_library("proc id(n) { r := n; return r; }").unwrap();
        let tb = transform_body(&lib, &lib.procedures[0], &Formula::True);
        assert_eq!(stmt_text(&tb.body), "r := n;\nassert true; // exit\n");
        assert!(tb.call_sites.is_empty());
        assert_eq!(tb.return_var, "r");
    }

    #[test]
    fn global_argument_is_copied_to_a_temporary() {
        let lib = parse_library(
            "var g: int := 0; var h: int := 0; proc q(y) { x := q(g + 1); return x; }",
        )
        .unwrap();
        let inv = parse_formula("g >= 0").unwrap();
        let tb = transform_body(&lib, &lib.procedures[0], &inv);
        assert_eq!(
            stmt_text(&tb.body),
            "t1 := g + 1;\nassert g >= 0; // call site 1\nhavoc g;\nhavoc h;\n\
             assume g >= 0 && x == q(t1);\nassert g >= 0; // exit\n"
        );
    }

    #[test]
    fn fact_cache_shape() {
        let lib = parse_library(
            "var g: int := -1; var lastN: int := 0;
             proc factCache(n) invariant g == -1 || g == lastN * factCache(lastN - 1); {
               if (n <= 1) { result := 1; }
               else if (g != -1 && n == lastN) { result := g; }
               else { t2 := factCache(n - 1); g := n * t2; lastN := n; result := g; }
               return result; }",
        )
        .unwrap();
        let p = &lib.procedures[0];
        let tb = transform_body(&lib, p, p.invariant.as_ref().unwrap());
        let text = stmt_text(&tb.body);
        assert!(text.contains(
            "t1 := n - 1;\n  assert g == -1 || g == lastN * factCache(lastN - 1); // call site 1\n  \
             havoc g;\n  havoc lastN;\n  \
             assume (g == -1 || g == lastN * factCache(lastN - 1)) && t2 == factCache(t1);"
        ), "{text}");
        assert!(text.ends_with("assert g == -1 || g == lastN * factCache(lastN - 1); // exit\n"));
        assert_eq!(tb.body.count(|s| matches!(s, Stmt::Call { .. })), 0);
        assert_eq!(tb.temps, vec!["t1".to_string()]);
    }

    #[test]
    fn global_call_target_goes_through_a_temporary() {
        let lib = parse_library("var g: int := 0; proc f(n) { g := f(n); return n; }").unwrap();
        let tb = transform_body(&lib, &lib.procedures[0], &Formula::True);
        assert_eq!(
            stmt_text(&tb.body),
            "assert true; // call site 1\nhavoc g;\nassume t1 == f(n);\ng := t1;\nassert true; // exit\n"
        );
    }

    #[test]
    fn init_formulas() {
        let lib = parse_library("var g: int := -1; var lastN: int := 0; proc f(n) { return n; }").unwrap();
        assert_eq!(init_formula(&lib), parse_formula("g == -1 && lastN == 0").unwrap());
        let lib = parse_library("proc f(n) { return n; }").unwrap();
        assert_eq!(init_formula(&lib), Formula::True);
        let lib = parse_library("var m: [int, int] int := -1; var k: [int] int := 0; proc f(n) { return n; }").unwrap();
        assert_eq!(
            init_formula(&lib),
            parse_formula("(forall i, j. m[i, j] == -1) && (forall k'. k[k'] == 0)").unwrap()
        );
    }
}
