use std::fmt::Write as _;

use super::ast::*;

pub fn pretty_print(lib: &Library) -> String {
    let mut out = String::new();
    for g in &lib.globals {
        let ty = match g.kind {
            GlobalKind::Scalar => "int",
            GlobalKind::Array1 => "[int] int",
            GlobalKind::Array2 => "[int, int] int",
        };
        let _ = writeln!(out, "var {}: {ty} := {};", g.name, g.init);
    }
    for p in &lib.procedures {
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str(&pretty_procedure(p));
    }
    out
}

pub fn pretty_procedure(p: &Procedure) -> String {
    let mut out = format!("proc {}({})", p.name, p.params.join(", "));
    if let Some(inv) = &p.invariant {
        let _ = write!(out, "\n  invariant {inv};\n");
    } else {
        out.push(' ');
    }
    out.push_str("{\n");
    write_block_items(&mut out, &p.body, 1);
    out.push_str("}\n");
    out
}

/// Renders a (possibly transformed) statement, one statement per line.
pub fn pretty_stmt(s: &Stmt, indent: usize) -> String {
    let mut out = String::new();
    write_block_items(&mut out, s, indent);
    out
}

fn write_block_items(out: &mut String, s: &Stmt, indent: usize) {
    match s {
        Stmt::Skip => {}
        Stmt::Seq(items) => items.iter().for_each(|i| write_stmt(out, i, indent)),
        other => write_stmt(out, other, indent),
    }
}

fn pad(out: &mut String, indent: usize) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}

fn write_stmt(out: &mut String, s: &Stmt, indent: usize) {
    match s {
        Stmt::Skip => {}
        Stmt::Seq(items) => items.iter().for_each(|i| write_stmt(out, i, indent)),
        Stmt::If { .. } => {
            pad(out, indent);
            write_if(out, s, indent);
            out.push('\n');
        }
        _ => {
            pad(out, indent);
            let _ = match s {
                Stmt::Assign { lhs, rhs, .. } => match lhs {
                    LValue::Var(x) => writeln!(out, "{x} := {rhs};"),
                    LValue::Cell(a, idx) => {
                        let idx: Vec<String> = idx.iter().map(|e| e.to_string()).collect();
                        writeln!(out, "{a}[{}] := {rhs};", idx.join(", "))
                    }
                },
                Stmt::Call {
                    lhs, callee, args, ..
                } => {
                    let args: Vec<String> = args.iter().map(|e| e.to_string()).collect();
                    writeln!(out, "{lhs} := {callee}({});", args.join(", "))
                }
                Stmt::Return { var, .. } => writeln!(out, "return {var};"),
                Stmt::Havoc(x) => writeln!(out, "havoc {x};"),
                Stmt::Assume(f) => writeln!(out, "assume {f};"),
                Stmt::Assert { cond, site } => writeln!(out, "assert {cond}; // {site}"),
                Stmt::Skip | Stmt::Seq(_) | Stmt::If { .. } => unreachable!(),
            };
        }
    }
}

fn write_if(out: &mut String, s: &Stmt, indent: usize) {
    let Stmt::If {
        cond,
        then_branch,
        else_branch,
        ..
    } = s
    else {
        unreachable!()
    };
    let _ = writeln!(out, "if ({cond}) {{");
    write_block_items(out, then_branch, indent + 1);
    pad(out, indent);
    out.push('}');
    match &**else_branch {
        Stmt::Skip => {}
        nested @ Stmt::If { .. } => {
            out.push_str(" else ");
            write_if(out, nested, indent);
        }
        other => {
            out.push_str(" else {\n");
            write_block_items(out, other, indent + 1);
            pad(out, indent);
            out.push('}');
        }
    }
}
