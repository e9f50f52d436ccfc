//! Command-line front end.
//!
//! Exit codes: 0 proved or pass, 1 usage or input error, 2 refuted candidate,
//! 3 inconclusive (or a failing casebook case), 4 verification failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Deserialize;

use crate::casebook::{list_cases, run_cases};
use crate::exec::Exec;
use crate::exprlang::{eval_expr, parse_expr, EvalEnv, ExprError, Precision};
use crate::prover::{
    approximate, prove_nonneg, sig17, verify_json, ProofJob, ProverOptions, Verdict, DEFAULT_SAFETY_FACTOR,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_REFUTED: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;
pub const EXIT_VERIFY_FAILED: i32 = 4;

pub fn exit_code(v: Verdict) -> i32 {
    match v {
        Verdict::Proved => EXIT_OK,
        Verdict::RefutedCandidate => EXIT_REFUTED,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

#[derive(Debug, Parser)]
#[command(name = "ineqcert", version, about = "Certified proofs of f(x) >= 0 on [a, b] by minimax approximation")]
struct Cli {
    /// Arithmetic used to evaluate f: double or extended.
    #[arg(long, global = true, value_parser = parse_precision)]
    precision: Option<Precision>,
    /// Remez degree, overriding the job file.
    #[arg(long, global = true)]
    degree: Option<usize>,
    /// Inflation of the Remez error before the positivity check.
    #[arg(long, global = true)]
    safety_factor: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Prove the job and emit its certificate.
    Prove {
        job: PathBuf,
        /// Write the certificate here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check a certificate.
    Verify {
        cert: PathBuf,
        /// Fresh sample points for the residual check.
        #[arg(long, default_value_t = 2048)]
        resample: usize,
    },
    /// Remez fit of the normalized function only.
    Approx { job: PathBuf },
    /// Evaluate an expression at one point.
    Eval {
        expr: String,
        #[arg(allow_hyphen_values = true)]
        x: String,
    },
    /// Run one case, or all of them.
    Casebook {
        name: Option<String>,
        /// Print the JSON reports instead of the summaries.
        #[arg(long)]
        json: bool,
        /// Also write the JSON reports here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Names of the available cases.
    List,
}

fn parse_precision(s: &str) -> Result<Precision, String> {
    match s {
        "double" => Ok(Precision::Double),
        "extended" => Ok(Precision::Extended),
        _ => Err(format!("expected `double` or `extended`, got `{s}`")),
    }
}

/// An interval endpoint: a number or a constant expression such as `pi/2`.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Endpoint {
    Number(f64),
    Expr(String),
}

/// The flat job-file format.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct JobFile {
    expr: String,
    a: Endpoint,
    b: Endpoint,
    #[serde(default)]
    n: u32,
    #[serde(default)]
    m: u32,
    degree: Option<usize>,
    alpha_hint: Option<String>,
    beta_hint: Option<String>,
    precision: Option<Precision>,
    safety_factor: Option<f64>,
}

/// An error already rendered for the diagnostic stream.
#[derive(Debug)]
struct Diagnostic(String);

impl Diagnostic {
    fn new(s: impl Into<String>) -> Self {
        Diagnostic(s.into())
    }
}

fn expr_offset(e: &ExprError) -> Option<usize> {
    match e {
        ExprError::Syntax { offset, .. } | ExprError::UnknownIdentifier { offset, .. } => Some(*offset),
        ExprError::Domain { .. } => None,
    }
}

/// `what: message` followed by the source with a caret under the offending byte.
fn expr_diagnostic(what: &str, source: &str, e: &ExprError) -> Diagnostic {
    let mut s = format!("{what}: {e}");
    if let Some(off) = expr_offset(e) {
        let col = source[..off.min(source.len())].chars().count();
        let _ = write!(s, "\n  {source}\n  {}^", " ".repeat(col));
    }
    Diagnostic(s)
}

fn endpoint(path: &Path, key: &str, e: Endpoint) -> Result<f64, Diagnostic> {
    match e {
        Endpoint::Number(v) => Ok(v),
        Endpoint::Expr(text) => {
            let what = format!("{}: key `{key}`", path.display());
            let ast = parse_expr(&text).map_err(|e| expr_diagnostic(&what, &text, &e))?;
            if ast.root.mentions_var() {
                return Err(Diagnostic(format!("{what}: endpoint must not depend on x")));
            }
            ast.eval(0.0).map_err(|e| expr_diagnostic(&what, &text, &e))
        }
    }
}

struct Overrides {
    precision: Option<Precision>,
    degree: Option<usize>,
    safety_factor: Option<f64>,
}

fn load_job(path: &Path, o: &Overrides) -> Result<ProofJob, Diagnostic> {
    let text = std::fs::read_to_string(path).map_err(|e| Diagnostic(format!("{}: {e}", path.display())))?;
    let file: JobFile = toml::from_str(&text).map_err(|e| Diagnostic(format!("{}: {e}", path.display())))?;
    if let Err(e) = parse_expr(&file.expr) {
        return Err(expr_diagnostic(&format!("{}: key `expr`", path.display()), &file.expr, &e));
    }
    for (key, hint) in [("alpha_hint", &file.alpha_hint), ("beta_hint", &file.beta_hint)] {
        if let Some(h) = hint {
            if let Err(e) = parse_expr(h) {
                return Err(expr_diagnostic(&format!("{}: key `{key}`", path.display()), h, &e));
            }
        }
    }
    let a = endpoint(path, "a", file.a)?;
    let b = endpoint(path, "b", file.b)?;
    let mut job = ProofJob::new(&file.expr, a, b, file.n, file.m);
    job.degree = o.degree.or(file.degree).unwrap_or(job.degree);
    job.alpha_hint = file.alpha_hint;
    job.beta_hint = file.beta_hint;
    job.precision = o.precision.or(file.precision).unwrap_or_default();
    job.safety_factor = o.safety_factor.or(file.safety_factor).unwrap_or(DEFAULT_SAFETY_FACTOR);
    job.validate().map_err(|e| Diagnostic(format!("{}: {e}", path.display())))?;
    Ok(job)
}

fn write_out(path: &Path, text: &str) -> Result<(), Diagnostic> {
    std::fs::write(path, text).map_err(|e| Diagnostic(format!("{}: {e}", path.display())))
}

fn cmd_prove(job: &Path, out: Option<&Path>, o: &Overrides, stdout: &mut String) -> Result<i32, Diagnostic> {
    let job = load_job(job, o)?;
    let cert = prove_nonneg(&job).map_err(|e| Diagnostic(e.to_string()))?;
    let json = cert.to_json();
    match out {
        Some(p) => {
            write_out(p, &json)?;
            let _ = writeln!(stdout, "verdict: {}", cert.verdict);
            if let (Some(raw), Some(c)) = (cert.eps_raw, cert.eps_cert) {
                let _ = writeln!(stdout, "eps_raw: {}\neps_cert: {}", sig17::render(raw), sig17::render(c));
            }
            if let Some(w) = &cert.witness {
                let _ = writeln!(stdout, "witness: g({}) = {} ({})", sig17::render(w.x), sig17::render(w.g), w.reason);
            }
        }
        None => {
            let _ = writeln!(stdout, "{json}");
        }
    }
    Ok(exit_code(cert.verdict))
}

fn cmd_verify(cert: &Path, resample: usize, stdout: &mut String) -> Result<i32, Diagnostic> {
    let text = std::fs::read_to_string(cert).map_err(|e| Diagnostic(format!("{}: {e}", cert.display())))?;
    match verify_json(&text, resample) {
        Ok(report) => {
            let _ = writeln!(stdout, "{report}");
            Ok(if report.passed() { EXIT_OK } else { EXIT_VERIFY_FAILED })
        }
        Err(e) => {
            let _ = writeln!(stdout, "FAIL structure    {e}\nverification failed");
            Ok(EXIT_VERIFY_FAILED)
        }
    }
}

fn cmd_approx(job: &Path, o: &Overrides, stdout: &mut String) -> Result<i32, Diagnostic> {
    let job = load_job(job, o)?;
    let (norm, fit) = approximate(&job, &ProverOptions::default()).map_err(|e| Diagnostic(e.to_string()))?;
    let _ = writeln!(stdout, "alpha: {} ({})", sig17::render(norm.alpha.value.to_f64()), norm.alpha.method);
    let _ = writeln!(stdout, "beta: {} ({})", sig17::render(norm.beta.value.to_f64()), norm.beta.method);
    let _ = writeln!(stdout, "degree: {}", fit.poly.degree());
    for (i, c) in fit.poly.coeffs().iter().enumerate() {
        let _ = writeln!(stdout, "c{i}: {}", sig17::render(*c));
    }
    let _ = writeln!(stdout, "eps: {}\niterations: {}", sig17::render(fit.err), fit.iterations);
    Ok(EXIT_OK)
}

fn cmd_eval(expr: &str, x: &str, o: &Overrides, stdout: &mut String) -> Result<i32, Diagnostic> {
    let ast = parse_expr(expr).map_err(|e| expr_diagnostic("expression", expr, &e))?;
    let xast = parse_expr(x).map_err(|e| expr_diagnostic("x", x, &e))?;
    if xast.root.mentions_var() {
        return Err(Diagnostic::new("x: the point must be a constant"));
    }
    let x: f64 = xast.eval(0.0).map_err(|e| expr_diagnostic("x", x, &e))?;
    let env = EvalEnv {
        x,
        precision: o.precision.unwrap_or_default(),
    };
    let v = eval_expr(&ast, &env).map_err(|e| expr_diagnostic("expression", expr, &e))?;
    let _ = writeln!(stdout, "{}", sig17::render(v));
    Ok(EXIT_OK)
}

fn cmd_casebook(name: Option<&str>, json: bool, out: Option<&Path>, stdout: &mut String) -> Result<i32, Diagnostic> {
    let names: Vec<&str> = match name {
        Some(n) => vec![n],
        None => list_cases(),
    };
    let mut reports = Vec::new();
    for r in run_cases(&names, Exec::default()) {
        reports.push(r.map_err(|e| Diagnostic(e.to_string()))?);
    }
    let doc = if reports.len() == 1 {
        reports[0].to_json()
    } else {
        serde_json::to_string_pretty(&reports).expect("reports serialize")
    };
    if let Some(p) = out {
        write_out(p, &doc)?;
    }
    if json {
        let _ = writeln!(stdout, "{doc}");
    } else {
        for r in &reports {
            stdout.push_str(&r.summary());
        }
    }
    Ok(if reports.iter().all(|r| r.pass) { EXIT_OK } else { EXIT_INCONCLUSIVE })
}

/// Runs one command, collecting its standard output and diagnostics.
pub fn run_cli_captured<I, S>(args: I) -> (i32, String, String)
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => (EXIT_OK, text, String::new()),
                _ => (EXIT_USAGE, String::new(), text),
            };
        }
    };
    let o = Overrides {
        precision: cli.precision,
        degree: cli.degree,
        safety_factor: cli.safety_factor,
    };
    let mut stdout = String::new();
    let result = match &cli.command {
        Command::Prove { job, out } => cmd_prove(job, out.as_deref(), &o, &mut stdout),
        Command::Verify { cert, resample } => cmd_verify(cert, *resample, &mut stdout),
        Command::Approx { job } => cmd_approx(job, &o, &mut stdout),
        Command::Eval { expr, x } => cmd_eval(expr, x, &o, &mut stdout),
        Command::Casebook { name, json, out } => cmd_casebook(name.as_deref(), *json, out.as_deref(), &mut stdout),
        Command::List => {
            for n in list_cases() {
                let _ = writeln!(stdout, "{n}");
            }
            Ok(EXIT_OK)
        }
    };
    match result {
        Ok(code) => (code, stdout, String::new()),
        Err(Diagnostic(msg)) => (EXIT_USAGE, stdout, format!("error: {msg}\n")),
    }
}

/// Runs one command against the process streams and returns its exit code.
pub fn run_cli<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let (code, out, err) = run_cli_captured(args);
    print!("{out}");
    eprint!("{err}");
    code
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn run(args: &[&str]) -> (i32, String, String) {
        run_cli_captured(std::iter::once("ineqcert").chain(args.iter().copied()))
    }

    fn job_file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn eval_prints_seventeen_digits() {
        let (code, out, _) = run(&["eval", "3*x/(2+sqrt(1-x^2))", "1"]);
        assert_eq!(code, 0);
        assert_eq!(out.trim(), "1.5000000000000000e0");
        assert_eq!(out.trim().parse::<f64>().unwrap(), 1.5);
        let (code, out, _) = run(&["eval", "sin(x)", "pi/2", "--precision", "double"]);
        assert_eq!((code, out.trim()), (0, "1.0000000000000000e0"));
        let (code, out, _) = run(&["eval", "x", "-0.5"]);
        assert_eq!((code, out.trim()), (0, "-5.0000000000000000e-1"));
    }

    #[test]
    fn eval_errors_are_positioned() {
        let (code, _, err) = run(&["eval", "1 + foo(x)", "0"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("offset 4") && err.contains("\n      ^"), "{err}");
        assert_eq!(run(&["eval", "sqrt(x)", "-1"]).0, EXIT_USAGE);
    }

    #[test]
    fn verdicts_map_to_distinct_codes() {
        let codes = [Verdict::Proved, Verdict::RefutedCandidate, Verdict::Inconclusive].map(exit_code);
        assert_eq!(codes, [0, 2, 3]);
    }

    #[test]
    fn prove_writes_certificate_and_verify_accepts_it() {
        let job = job_file("expr = \"sin(x) - 2*x/pi\"\na = 0\nb = \"pi/2\"\nn = 1\nm = 1\ndegree = 2\n");
        let dir = tempfile::tempdir().unwrap();
        let cert = dir.path().join("c.json");
        let (code, out, err) = run(&["prove", job.path().to_str().unwrap(), "--out", cert.to_str().unwrap()]);
        assert_eq!(code, 0, "{out}{err}");
        assert!(out.contains("verdict: proved"));
        let (code, out, _) = run(&["verify", cert.to_str().unwrap()]);
        assert_eq!(code, 0, "{out}");

        let text = std::fs::read_to_string(&cert).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["eps_cert"] = serde_json::json!(1e-9);
        std::fs::write(&cert, v.to_string()).unwrap();
        assert_eq!(run(&["verify", cert.to_str().unwrap()]).0, EXIT_VERIFY_FAILED);
    }

    #[test]
    fn refuted_job_exits_two() {
        let job = job_file("expr = \"-x\"\na = 0\nb = 1\nn = 1\n");
        let (code, out, _) = run(&["prove", job.path().to_str().unwrap()]);
        assert_eq!(code, EXIT_REFUTED);
        assert!(out.contains("\"verdict\": \"refuted-candidate\""));
    }

    #[test]
    fn overrides_take_precedence() {
        let job = job_file("expr = \"1.05 + cos(20*x)\"\na = 0\nb = 1\ndegree = 0\n");
        let p = job.path().to_str().unwrap();
        assert_eq!(run(&["prove", p]).0, EXIT_INCONCLUSIVE);
        let (code, out, _) = run(&["approx", p, "--degree", "3", "--precision", "double"]);
        assert_eq!(code, 0);
        assert!(out.contains("degree: 3") && out.contains("c3: "), "{out}");
        assert_eq!(run(&["prove", p, "--safety-factor", "0.5"]).0, EXIT_USAGE);
    }

    #[test]
    fn malformed_job_files_are_diagnosed() {
        for (text, needle) in [
            ("expr = \"x\"\na = 0\nb = 1\nbogus = 3\n", "bogus"),
            ("expr = \"x\"\na = 0\n", "b"),
            ("expr = \"x +* 1\"\na = 0\nb = 1\n", "offset 3"),
            ("expr = \"x\"\na = 0\nb = 1\nn = -1\n", "line 4"),
            ("expr = \"x\"\na = 0\nb = \"pi/\"\n", "key `b`"),
            ("expr = \"x\"\na = 1\nb = 0\n", "invalid job"),
            ("expr = [1, 2\n", "line 1"),
        ] {
            let job = job_file(text);
            let (code, _, err) = run(&["prove", job.path().to_str().unwrap()]);
            assert_eq!(code, EXIT_USAGE, "{text}");
            assert!(err.contains(needle), "{text}: {err}");
        }
        assert_eq!(run(&["prove", "/nonexistent/job.toml"]).0, EXIT_USAGE);
        assert_eq!(run(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(run(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn list_and_unknown_case() {
        let (code, out, _) = run(&["list"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().collect::<Vec<_>>(), list_cases());
        assert_eq!(run(&["casebook", "nope"]).0, EXIT_USAGE);
    }

    #[test]
    fn malformed_certificate_fails_verification() {
        let f = job_file("{\"schema\": \"cert-v1\"}");
        let (code, out, _) = run(&["verify", f.path().to_str().unwrap()]);
        assert_eq!(code, EXIT_VERIFY_FAILED);
        assert!(out.contains("malformed"), "{out}");
    }
}
