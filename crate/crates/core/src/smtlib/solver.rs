use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};
use std::time::{Duration, Instant};

use super::emit::SmtQuery;
use super::model::Model;
use super::sexp::{parse_all, Sexp};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub program: String,
    pub args: Vec<String>,
    pub timeout: Duration,
    /// Every query is also written here as `NNNN.smt2`.
    pub emit_dir: Option<PathBuf>,
    counter: Arc<AtomicUsize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            program: std::env::var("OPCHECK_SOLVER").unwrap_or_else(|_| "z3".to_string()),
            args: vec!["-in".to_string()],
            timeout: DEFAULT_TIMEOUT,
            emit_dir: None,
            counter: Arc::new(AtomicUsize::new(0)),
        }
    }
}

impl SolverConfig {
    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_emit_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.emit_dir = Some(dir.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolverAnswer {
    Sat(Model),
    Unsat,
    Unknown(String),
    Timeout,
}

impl SolverAnswer {
    pub fn label(&self) -> &'static str {
        match self {
            SolverAnswer::Sat(_) => "sat",
            SolverAnswer::Unsat => "unsat",
            SolverAnswer::Unknown(_) => "unknown",
            SolverAnswer::Timeout => "timeout",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("cannot run solver `{program}`: {source}")]
    Spawn {
        program: String,
        source: std::io::Error,
    },
    #[error("unexpected solver output: {0}")]
    Protocol(String),
    #[error("cannot write query file: {0}")]
    Emit(std::io::Error),
}

/// Outcome of one query with its wall time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Answered {
    pub answer: SolverAnswer,
    pub elapsed: Duration,
}

/// Runs `text` in a fresh solver process and returns everything it printed.
/// None on timeout; the process is killed.
fn run(cfg: &SolverConfig, text: &str) -> Result<Option<String>, SolverError> {
    let mut child = Command::new(&cfg.program)
        .args(&cfg.args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|source| SolverError::Spawn {
            program: cfg.program.clone(),
            source,
        })?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let mut stdout = child.stdout.take().expect("piped stdout");
    let (tx, rx) = mpsc::channel();
    let reader = std::thread::spawn(move || {
        let mut out = String::new();
        let res = stdout.read_to_string(&mut out);
        let _ = tx.send(res.map(|_| out));
    });
    // A solver that dies early closes the pipe; its output tells the story.
    let _ = stdin.write_all(text.as_bytes());
    drop(stdin);
    match rx.recv_timeout(cfg.timeout) {
        Ok(res) => {
            let _ = child.wait();
            let _ = reader.join();
            res.map(Some)
                .map_err(|e| SolverError::Protocol(format!("read failed: {e}")))
        }
        Err(_) => {
            let _ = child.kill();
            let _ = child.wait();
            let _ = reader.join();
            Ok(None)
        }
    }
}

fn write_emitted(cfg: &SolverConfig, text: &str) -> Result<(), SolverError> {
    if let Some(dir) = &cfg.emit_dir {
        std::fs::create_dir_all(dir).map_err(SolverError::Emit)?;
        let k = cfg.counter.fetch_add(1, Ordering::SeqCst) + 1;
        std::fs::write(dir.join(format!("{k:04}.smt2")), text).map_err(SolverError::Emit)?;
    }
    Ok(())
}

/// Writes `q` to the emit directory, if any, without solving it.
pub fn write_query(cfg: &SolverConfig, q: &SmtQuery) -> Result<(), SolverError> {
    write_emitted(cfg, &q.text())
}

pub fn check_sat(q: &SmtQuery, cfg: &SolverConfig) -> Result<Answered, SolverError> {
    let text = q.text();
    write_emitted(cfg, &text)?;
    let start = Instant::now();
    let out = run(cfg, &text)?;
    let elapsed = start.elapsed();
    let Some(out) = out else {
        return Ok(Answered {
            answer: SolverAnswer::Timeout,
            elapsed,
        });
    };
    let answer = parse_response(&out, q)?;
    Ok(Answered { answer, elapsed })
}

fn parse_response(out: &str, q: &SmtQuery) -> Result<SolverAnswer, SolverError> {
    let first = out.lines().next().unwrap_or("").trim();
    match first {
        "unsat" => Ok(SolverAnswer::Unsat),
        "sat" => {
            if !q.produce_models {
                return Ok(SolverAnswer::Sat(Model::default()));
            }
            let rest = &out[out.find('\n').map_or(out.len(), |i| i + 1)..];
            let items = parse_all(rest).map_err(|e| SolverError::Protocol(e.to_string()))?;
            let model = items
                .iter()
                .find(|s| !s.is_app("error") && s.list().is_some())
                .cloned()
                .unwrap_or(Sexp::List(vec![]));
            Ok(SolverAnswer::Sat(Model::from_sexp(&model, &q.names)))
        }
        "unknown" => {
            let reason = reason_unknown(out).unwrap_or_else(|| "unknown".to_string());
            if reason == "timeout" || reason == "canceled" {
                Ok(SolverAnswer::Timeout)
            } else {
                Ok(SolverAnswer::Unknown(reason))
            }
        }
        "timeout" => Ok(SolverAnswer::Timeout),
        "" => Err(SolverError::Protocol("no output".to_string())),
        other => Err(SolverError::Protocol(other.to_string())),
    }
}

fn reason_unknown(out: &str) -> Option<String> {
    let items = parse_all(out.lines().skip(1).collect::<Vec<_>>().join("\n").as_str()).ok()?;
    items.iter().find_map(|s| match s.list() {
        Some([Sexp::Atom(k), Sexp::Atom(v)]) if k == ":reason-unknown" => {
            Some(v.trim_matches('"').to_string())
        }
        _ => None,
    })
}

/// `name version` as reported by the solver itself.
pub fn solver_identity(cfg: &SolverConfig) -> Result<String, SolverError> {
    let out = run(cfg, "(get-info :name)\n(get-info :version)\n(exit)\n")?
        .ok_or_else(|| SolverError::Protocol("identity probe timed out".to_string()))?;
    let items = parse_all(&out).map_err(|e| SolverError::Protocol(e.to_string()))?;
    let mut parts = Vec::new();
    for it in &items {
        if let Some([Sexp::Atom(_), Sexp::Atom(v)]) = it.list() {
            parts.push(v.trim_matches('"').to_string());
        }
    }
    if parts.is_empty() {
        return Err(SolverError::Protocol(out.trim().to_string()));
    }
    Ok(parts.join(" "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{Formula, Sort};
    use crate::frontend::parse_formula;
    use crate::smtlib::emit::{emit_smt2, SymbolTable};

    fn table() -> SymbolTable {
        let mut t = SymbolTable::new();
        t.declare_var("x", Sort::Int);
        t.declare_fun("p", 1);
        t
    }

    #[test]
    fn false_is_unsat() {
        let q = emit_smt2(&[Formula::False], &table(), true).unwrap();
        let a = check_sat(&q, &SolverConfig::default()).unwrap();
        assert_eq!(a.answer, SolverAnswer::Unsat);
    }

    #[test]
    fn forced_model() {
        let phi = parse_formula("x == 1 && p(3) == -4").unwrap();
        let q = emit_smt2(&[phi], &table(), true).unwrap();
        let SolverAnswer::Sat(m) = check_sat(&q, &SolverConfig::default()).unwrap().answer else {
            panic!("expected sat");
        };
        assert_eq!(m.int("x"), Some(1));
        assert_eq!(m.apply("p", &[3]), Some(-4));
    }

    #[test]
    fn missing_solver_is_a_spawn_error() {
        let cfg = SolverConfig {
            program: "/nonexistent/solver".into(),
            ..SolverConfig::default()
        };
        let q = emit_smt2(&[Formula::True], &table(), false).unwrap();
        assert!(matches!(check_sat(&q, &cfg), Err(SolverError::Spawn { .. })));
    }

    #[test]
    fn identity_probe() {
        let id = solver_identity(&SolverConfig::default()).unwrap();
        assert!(!id.is_empty());
    }

    #[test]
    fn emitted_files_match_the_piped_text() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SolverConfig::default().with_emit_dir(dir.path());
        let q = emit_smt2(&[Formula::True], &table(), false).unwrap();
        check_sat(&q, &cfg).unwrap();
        check_sat(&q, &cfg).unwrap();
        let second = std::fs::read_to_string(dir.path().join("0002.smt2")).unwrap();
        assert_eq!(second, q.text());
    }
}
