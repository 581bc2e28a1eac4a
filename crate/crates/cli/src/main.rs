use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use opcheck::checker::{check_procedure, Approach, CheckConfig};
use opcheck::formula::Formula;
use opcheck::frontend::ast::{Library, Procedure};
use opcheck::frontend::{load, parse_formula};
use opcheck::interp::{oracle_purity, OracleConfig};
use opcheck::invgen::{generate_invariant, GenConfig, SimplifyMode, DEFAULT_MAX_ITERS};
use opcheck::report::{postvc_text, tb_text, to_json, CheckReport, InvGenReport, OracleSummary, SolverInfo};
use opcheck::smtlib::{solver_identity, SolverConfig};
use opcheck::transform::transform_body;
use opcheck::vcgen::postvc;

const EXIT_USAGE: u8 = 3;

#[derive(Parser)]
#[command(name = "opcheck", version, about = "Observational-purity checker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every procedure (or one) against its invariant.
    Check(CheckArgs),
    /// Generate a candidate invariant by iterated weakening.
    GenInvariant(GenArgs),
    /// Look for an impurity witness by running random client sequences.
    Oracle(OracleArgs),
    /// Print transformed bodies, post/vc and the SMT queries without solving.
    Emit(EmitArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ApproachArg {
    Iw,
    Ea,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Equational,
    Exact,
}

#[derive(Args)]
struct SolverArgs {
    /// Solver executable (default: $OPCHECK_SOLVER, else `z3`).
    #[arg(long)]
    solver: Option<String>,
    /// Solver argument; when given at least once, replaces the default `-in`.
    #[arg(long = "solver-arg", allow_hyphen_values = true)]
    solver_arg: Vec<String>,
    /// Per-query wall-clock limit in seconds.
    #[arg(long, default_value_t = 10.0)]
    timeout: f64,
    /// Write every query to DIR/NNNN.smt2.
    #[arg(long = "emit-smt", value_name = "DIR")]
    emit_smt: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value = "iw")]
    approach: ApproachArg,
    /// Only this procedure.
    #[arg(long = "proc")]
    procedure: Option<String>,
    /// Check against this formula instead of the annotation (needs --proc).
    #[arg(long, requires = "procedure")]
    invariant: Option<String>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Write DIR/<proc>.vc with post and vc.
    #[arg(long = "emit-vc", value_name = "DIR")]
    emit_vc: Option<PathBuf>,
    /// Write DIR/<proc>.tb with the transformed body.
    #[arg(long = "emit-tb", value_name = "DIR")]
    emit_tb: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct GenArgs {
    input: PathBuf,
    /// Procedure to generate for (default: the first).
    #[arg(long = "proc")]
    procedure: Option<String>,
    #[arg(long = "max-iters", default_value_t = DEFAULT_MAX_ITERS)]
    max_iters: usize,
    #[arg(long, value_enum, default_value = "equational")]
    mode: ModeArg,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct OracleArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "max-arg", default_value_t = 12)]
    max_arg: i128,
    /// Step budget per top-level call.
    #[arg(long, default_value_t = 1_000_000)]
    fuel: u64,
    /// Only call this procedure from the client.
    #[arg(long = "proc")]
    procedure: Option<String>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EmitArgs {
    input: PathBuf,
    #[arg(long = "proc")]
    procedure: Option<String>,
    #[arg(long, value_enum, default_value = "iw")]
    approach: ApproachArg,
    /// Also write the SMT queries to DIR/NNNN.smt2.
    #[arg(long = "emit-smt", value_name = "DIR")]
    emit_smt: Option<PathBuf>,
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = e.print();
                return ExitCode::from(EXIT_USAGE);
            }
            e.exit()
        }
    };
    let result = match cli.command {
        Command::Check(a) => run_check(a),
        Command::GenInvariant(a) => run_gen(a),
        Command::Oracle(a) => run_oracle(a),
        Command::Emit(a) => run_emit(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(msg)) => {
            eprintln!("opcheck: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn read_library(path: &Path) -> Result<Library, Failure> {
    let src = std::fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    load(&src).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn selected<'a>(lib: &'a Library, name: Option<&str>) -> Result<Vec<&'a Procedure>, Failure> {
    match name {
        None => Ok(lib.procedures.iter().collect()),
        Some(n) => lib
            .procedure(n)
            .map(|p| vec![p])
            .ok_or_else(|| Failure(format!("no procedure `{n}`"))),
    }
}

fn solver_config(a: &SolverArgs) -> Result<SolverConfig, Failure> {
    if !(a.timeout > 0.0 && a.timeout.is_finite()) {
        return Err(Failure("--timeout must be positive".to_string()));
    }
    let mut cfg = SolverConfig::default().with_timeout(Duration::from_secs_f64(a.timeout));
    if let Some(s) = &a.solver {
        cfg.program = s.clone();
    }
    if !a.solver_arg.is_empty() {
        cfg.args = a.solver_arg.clone();
    }
    if let Some(d) = &a.emit_smt {
        std::fs::create_dir_all(d)?;
        cfg = cfg.with_emit_dir(d);
    }
    Ok(cfg)
}

fn approach(a: ApproachArg) -> Approach {
    match a {
        ApproachArg::Iw => Approach::ImpurityWitness,
        ApproachArg::Ea => Approach::Existential,
    }
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

fn run_check(a: CheckArgs) -> Result<u8, Failure> {
    let lib = read_library(&a.input)?;
    let solver = solver_config(&a.solver)?;
    let identity = solver_identity(&solver)?;
    let override_inv = a.invariant.as_deref().map(parse_formula).transpose()?;
    let cfg = CheckConfig {
        solver: solver.clone(),
        ..CheckConfig::default()
    };
    let mut results = Vec::new();
    for p in selected(&lib, a.procedure.as_deref())? {
        let inv: Formula = override_inv.clone().unwrap_or_else(|| p.invariant_or_true());
        if let Some(dir) = &a.emit_tb {
            write_file(dir, &format!("{}.tb", p.name), &tb_text(&transform_body(&lib, p, &inv)))?;
        }
        if let Some(dir) = &a.emit_vc {
            write_file(dir, &format!("{}.vc", p.name), &postvc_text(&postvc(&lib, p, &inv)?))?;
        }
        let r = check_procedure(&lib, &p.name, Some(&inv), approach(a.approach), &cfg)?;
        results.push((r, inv));
    }
    let report = CheckReport::new(
        &a.input.display().to_string(),
        approach(a.approach),
        SolverInfo::new(&solver, identity),
        results,
    );
    if a.json {
        print!("{}", to_json(&report));
    } else {
        print!("{}", report.text());
    }
    Ok(report.exit_code as u8)
}

fn run_gen(a: GenArgs) -> Result<u8, Failure> {
    let lib = read_library(&a.input)?;
    let p = match &a.procedure {
        Some(n) => selected(&lib, Some(n))?[0],
        None => lib
            .procedures
            .first()
            .ok_or_else(|| Failure("library has no procedures".to_string()))?,
    };
    let mode = match a.mode {
        ModeArg::Equational => SimplifyMode::Equational,
        ModeArg::Exact => SimplifyMode::Exact,
    };
    let cfg = GenConfig {
        max_iters: a.max_iters,
        mode,
        solver: solver_config(&a.solver)?,
    };
    let st = generate_invariant(&lib, p, &cfg)?;
    let report = InvGenReport::new(&a.input.display().to_string(), &p.name, mode, a.max_iters, &st);
    if a.json {
        print!("{}", to_json(&report));
    } else {
        print!("{}", report.text());
    }
    Ok(if report.converged { 0 } else { 2 })
}

fn run_oracle(a: OracleArgs) -> Result<u8, Failure> {
    if a.trials == 0 {
        return Err(Failure("--trials must be positive".to_string()));
    }
    if a.max_arg < 0 {
        return Err(Failure("--max-arg must not be negative".to_string()));
    }
    let lib = read_library(&a.input)?;
    let procedures = selected(&lib, a.procedure.as_deref())?
        .into_iter()
        .map(|p| p.name.clone())
        .collect();
    let cfg = OracleConfig {
        trials: a.trials,
        max_arg: a.max_arg,
        seed: a.seed,
        fuel: a.fuel,
        procedures,
        ..OracleConfig::default()
    };
    let r = oracle_purity(&lib, &cfg);
    let report = OracleSummary::new(&a.input.display().to_string(), &cfg, &r);
    if a.json {
        print!("{}", to_json(&report));
    } else {
        print!("{}", report.text());
    }
    Ok(match r.outcome {
        opcheck::interp::OracleOutcome::NoWitnessFound => 0,
        opcheck::interp::OracleOutcome::Witness(_) => 1,
    })
}

fn run_emit(a: EmitArgs) -> Result<u8, Failure> {
    let lib = read_library(&a.input)?;
    let solver = match &a.emit_smt {
        Some(d) => {
            std::fs::create_dir_all(d)?;
            Some(SolverConfig::default().with_emit_dir(d))
        }
        None => None,
    };
    for p in selected(&lib, a.procedure.as_deref())? {
        let inv = p.invariant_or_true();
        print!("{}", tb_text(&transform_body(&lib, p, &inv)));
        print!("{}", postvc_text(&postvc(&lib, p, &inv)?));
        let queries = match approach(a.approach) {
            Approach::ImpurityWitness => {
                let iw = opcheck::checker::build_iw(&lib, p, &inv)?;
                vec![
                    ("not-vc", opcheck::smtlib::emit_smt2(&[iw.not_vc], &iw.table, true)?),
                    ("twin", opcheck::smtlib::emit_smt2(&[iw.twin], &iw.table, true)?),
                ]
            }
            Approach::Existential => {
                let (f, table) = opcheck::checker::build_ea(&lib, p, &inv)?;
                vec![("ea", opcheck::smtlib::emit_smt2(&[f], &table, true)?)]
            }
        };
        for (label, q) in queries {
            println!("; query {label} for {}", p.name);
            print!("{}", q.text());
            if let Some(cfg) = &solver {
                opcheck::smtlib::write_query(cfg, &q)?;
            }
        }
    }
    Ok(0)
}
