//! The proof pipeline: normalize, approximate, inflate the error, certify.
//!
//! To show `f(x) >= 0` on `[a, b]` it suffices that `g = f / ((x-a)^n (b-x)^m)`
//! satisfies `g >= P - ε` and `P - ε > 0` for a polynomial `P`. The first
//! condition is estimated by sampling (`ε` is inflated by a safety factor);
//! the second is decided exactly.

mod cert;
mod verify;

pub use cert::{
    CertError, NormalizedRecord, PolyRecord, PositivityRecord, ProofCertificate, RemezRecord,
    ResidualRecord, ToolInfo, Verdict, Witness, SCHEMA,
};
pub use verify::{verify_certificate, verify_json, CheckResult, VerificationReport};
pub(crate) use cert::sig17;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Exec;
use crate::exprlang::{parse_expr, ExprError, ExprFunction, Precision};
use crate::minimax::{infnorm_with, remez_minimax, FunctionHandle, MinimaxError, MinimaxResult, RemezOptions};
use crate::normalize::{build_normalized_with, EndpointProfile, LimitStrategy, NormalizeError, NormalizedFunction};
use crate::polycore::{assert_positive_on, Interval, PolyError};
use crate::xprec::DoubleDouble;

/// One inequality `f(x) >= 0` on `[a, b]` and how to attack it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProofJob {
    pub expr: String,
    #[serde(with = "cert::sig17")]
    pub a: f64,
    #[serde(with = "cert::sig17")]
    pub b: f64,
    pub n: u32,
    pub m: u32,
    pub degree: usize,
    pub alpha_hint: Option<String>,
    pub beta_hint: Option<String>,
    #[serde(with = "cert::sig17")]
    pub safety_factor: f64,
    pub precision: Precision,
}

pub const DEFAULT_SAFETY_FACTOR: f64 = 1.05;
pub const MAX_DEGREE: usize = 24;
const MAX_ROOT_ORDER: u32 = 16;

impl ProofJob {
    pub fn new(expr: &str, a: f64, b: f64, n: u32, m: u32) -> Self {
        Self {
            expr: expr.to_string(),
            a,
            b,
            n,
            m,
            degree: 1,
            alpha_hint: None,
            beta_hint: None,
            safety_factor: DEFAULT_SAFETY_FACTOR,
            precision: Precision::Extended,
        }
    }

    pub fn with_degree(mut self, degree: usize) -> Self {
        self.degree = degree;
        self
    }

    pub fn with_hints(mut self, alpha: Option<&str>, beta: Option<&str>) -> Self {
        self.alpha_hint = alpha.map(str::to_string);
        self.beta_hint = beta.map(str::to_string);
        self
    }

    pub fn interval(&self) -> Result<Interval, ProveError> {
        Interval::new(self.a, self.b).map_err(|e| ProveError::InvalidJob(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ProveError> {
        self.interval()?;
        if self.degree > MAX_DEGREE {
            return Err(ProveError::InvalidJob(format!("degree {} exceeds {MAX_DEGREE}", self.degree)));
        }
        if self.n > MAX_ROOT_ORDER || self.m > MAX_ROOT_ORDER {
            return Err(ProveError::InvalidJob(format!("root orders must not exceed {MAX_ROOT_ORDER}")));
        }
        if !(self.safety_factor.is_finite() && self.safety_factor >= 1.0) {
            return Err(ProveError::InvalidJob(format!(
                "safety_factor must be >= 1, got {}",
                self.safety_factor
            )));
        }
        Ok(())
    }

    pub fn profile(&self) -> Result<EndpointProfile, ProveError> {
        Ok(EndpointProfile {
            iv: self.interval()?,
            n: self.n,
            m: self.m,
        })
    }

    pub fn function(&self) -> Result<FunctionHandle, ProveError> {
        let ast = parse_expr(&self.expr).map_err(ProveError::Parse)?;
        Ok(ExprFunction::handle(ast, self.precision))
    }

    /// Evaluates the closed-form endpoint hints.
    pub fn hints(&self) -> Result<(Option<DoubleDouble>, Option<DoubleDouble>), ProveError> {
        let eval = |which: &'static str, text: &Option<String>| -> Result<Option<DoubleDouble>, ProveError> {
            let Some(text) = text else { return Ok(None) };
            let wrap = |source| ProveError::Hint { which, source };
            let ast = parse_expr(text).map_err(wrap)?;
            if ast.root.mentions_var() {
                return Err(ProveError::InvalidJob(format!("{which} must not depend on x")));
            }
            let v = match self.precision {
                Precision::Extended => ast.eval(DoubleDouble::ZERO),
                Precision::Double => ast.eval(0.0).map(DoubleDouble::from),
            };
            v.map(Some).map_err(wrap)
        };
        Ok((eval("alpha_hint", &self.alpha_hint)?, eval("beta_hint", &self.beta_hint)?))
    }
}

#[derive(Debug, Error)]
pub enum ProveError {
    #[error("invalid job: {0}")]
    InvalidJob(String),
    #[error("cannot parse f: {0}")]
    Parse(ExprError),
    #[error("cannot evaluate {which}: {source}")]
    Hint { which: &'static str, source: ExprError },
    #[error("normalization failed: {0}")]
    Normalize(#[from] NormalizeError),
    #[error("minimax approximation failed: {0}")]
    Minimax(#[from] MinimaxError),
    #[error("positivity check failed: {0}")]
    Positivity(#[from] PolyError),
}

/// Knobs that are not part of the job itself.
#[derive(Clone, Debug, PartialEq)]
pub struct ProverOptions {
    pub remez: RemezOptions,
    /// Points of the independent grid used to re-estimate the residual norm.
    pub residual_points: usize,
    /// Interior points scanned for negative values of `g`.
    pub scan_points: usize,
    pub limit_strategy: LimitStrategy,
}

impl Default for ProverOptions {
    fn default() -> Self {
        Self {
            remez: RemezOptions::default(),
            residual_points: 6007,
            scan_points: 4096,
            limit_strategy: LimitStrategy::Richardson,
        }
    }
}

impl ProverOptions {
    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.remez.exec = exec;
        self
    }
}

/// Normalizes the job's function and returns `g` with its endpoint limits.
pub fn normalize_job(job: &ProofJob, strategy: LimitStrategy) -> Result<NormalizedFunction, ProveError> {
    job.validate()?;
    let f = job.function()?;
    let (ah, bh) = job.hints()?;
    Ok(build_normalized_with(&f, &job.profile()?, ah, bh, strategy)?)
}

/// Remez fit of `g` only, without certification.
pub fn approximate(job: &ProofJob, opts: &ProverOptions) -> Result<(NormalizedFunction, MinimaxResult), ProveError> {
    let g = normalize_job(job, opts.limit_strategy)?;
    let r = remez_minimax(&g.g, &job.interval()?, job.degree, &opts.remez)?;
    Ok((g, r))
}

/// Smallest interior sample of `g` on a uniform grid.
fn interior_minimum(g: &FunctionHandle, iv: &Interval, points: usize, exec: Exec) -> Result<(f64, f64), ProveError> {
    let grid = iv.uniform_grid(points.max(2));
    let interior = &grid[1..grid.len() - 1];
    let values = exec.map(interior, |&x| g.eval(x));
    let mut best = (f64::NAN, f64::INFINITY);
    for (&x, v) in interior.iter().zip(values) {
        let v = v.map_err(|e| MinimaxError::EvaluationFailure { x, message: e.0 })?;
        if !v.is_finite() {
            return Err(MinimaxError::EvaluationFailure {
                x,
                message: format!("non-finite value {v}"),
            }
            .into());
        }
        if v < best.1 {
            best = (x, v);
        }
    }
    Ok(best)
}

pub fn prove_nonneg(job: &ProofJob) -> Result<ProofCertificate, ProveError> {
    prove_nonneg_with(job, &ProverOptions::default())
}

pub fn prove_nonneg_with(job: &ProofJob, opts: &ProverOptions) -> Result<ProofCertificate, ProveError> {
    let norm = normalize_job(job, opts.limit_strategy)?;
    let iv = job.interval()?;
    let alpha = norm.alpha.value.to_f64();
    let beta = norm.beta.value.to_f64();
    let mut cert = ProofCertificate::skeleton(job, &norm);

    let witness = if alpha < 0.0 {
        Some(Witness::new(job.a, alpha, "alpha < 0"))
    } else if beta < 0.0 {
        Some(Witness::new(job.b, beta, "beta < 0"))
    } else {
        let (x, v) = interior_minimum(&norm.g, &iv, opts.scan_points, opts.remez.exec)?;
        (v < 0.0).then(|| Witness::new(x, v, "interior sample g(x) < 0"))
    };
    if let Some(w) = witness {
        cert.witness = Some(w);
        cert.verdict = Verdict::RefutedCandidate;
        return Ok(cert.sealed());
    }

    let (fit, converged) = match remez_minimax(&norm.g, &iv, job.degree, &opts.remez) {
        Ok(r) => (r, true),
        Err(MinimaxError::NotConverged { best, .. }) => (*best, false),
        Err(e) => return Err(e.into()),
    };
    let eps_raw = fit.err;
    let eps_cert = job.safety_factor * eps_raw;
    let residual = infnorm_with(&norm.g, &fit.poly, &iv, opts.residual_points, opts.remez.exec)?;
    let evidence = assert_positive_on(&fit.poly, &iv, eps_cert)?;

    let proved = alpha > 0.0 && beta > 0.0 && evidence.certified && residual.lower_bound <= eps_cert;
    cert.poly = Some(PolyRecord::from(&fit.poly));
    cert.remez = Some(RemezRecord {
        converged,
        iterations: fit.iterations,
        reference: fit.reference.clone(),
        residuals: fit.residuals.clone(),
    });
    cert.eps_raw = Some(eps_raw);
    cert.eps_cert = Some(eps_cert);
    cert.positivity = Some(PositivityRecord::from(&evidence));
    cert.residual_check = Some(ResidualRecord {
        value: residual.lower_bound,
        argmax: residual.argmax,
        points: opts.residual_points.max(4097),
    });
    cert.verdict = if proved { Verdict::Proved } else { Verdict::Inconclusive };
    Ok(cert.sealed())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> ProverOptions {
        ProverOptions::default()
    }

    #[test]
    fn refutes_negative_endpoint_limit() {
        let job = ProofJob::new("-x", 0.0, 1.0, 1, 0);
        let cert = prove_nonneg_with(&job, &quick()).unwrap();
        assert_eq!(cert.verdict, Verdict::RefutedCandidate);
        assert!((cert.normalized.alpha + 1.0).abs() < 1e-12);
        assert!(cert.poly.is_none());
    }

    #[test]
    fn refutes_interior_dip() {
        // Positive at both ends, negative in the middle.
        let job = ProofJob::new("(x-0.5)^2 - 0.01", 0.0, 1.0, 0, 0);
        let cert = prove_nonneg_with(&job, &quick()).unwrap();
        assert_eq!(cert.verdict, Verdict::RefutedCandidate);
        let w = cert.witness.unwrap();
        assert!(w.g < 0.0 && (w.x - 0.5).abs() < 0.1);
    }

    #[test]
    fn proves_simple_inequality() {
        // sin(x) >= 2x/pi on [0, pi/2]; roots at both ends of order 1.
        let job = ProofJob::new("sin(x) - 2*x/pi", 0.0, std::f64::consts::FRAC_PI_2, 1, 1).with_degree(2);
        let cert = prove_nonneg_with(&job, &quick()).unwrap();
        assert_eq!(cert.verdict, Verdict::Proved, "{cert:#?}");
        assert_eq!(cert.eps_cert, Some(job.safety_factor * cert.eps_raw.unwrap()));
        assert!(cert.residual_check.as_ref().unwrap().value <= cert.eps_cert.unwrap());
    }

    #[test]
    fn tight_inequality_is_inconclusive_at_low_degree() {
        // Minimum 0.05, but the best constant is off by about 1.
        let job = ProofJob::new("1.05 + cos(20*x)", 0.0, 1.0, 0, 0).with_degree(0);
        let cert = prove_nonneg_with(&job, &quick()).unwrap();
        assert_eq!(cert.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn invalid_jobs_are_rejected() {
        let mut job = ProofJob::new("x", 1.0, 0.0, 0, 0);
        assert!(matches!(prove_nonneg(&job), Err(ProveError::InvalidJob(_))));
        job = ProofJob::new("x+", 0.0, 1.0, 0, 0);
        assert!(matches!(prove_nonneg(&job), Err(ProveError::Parse(_))));
        job = ProofJob::new("x+1", 0.0, 1.0, 0, 0);
        job.safety_factor = 0.5;
        assert!(matches!(prove_nonneg(&job), Err(ProveError::InvalidJob(_))));
        job = ProofJob::new("x+1", 0.0, 1.0, 0, 0).with_hints(Some("x"), None);
        assert!(matches!(prove_nonneg(&job), Err(ProveError::InvalidJob(_))));
    }

    #[test]
    fn certificates_are_deterministic() {
        let job = ProofJob::new("exp(x) - 1 - x", 0.0, 1.0, 2, 0);
        let a = prove_nonneg_with(&job, &quick()).unwrap();
        let b = prove_nonneg_with(&job, &quick().with_exec(Exec::Sequential)).unwrap();
        assert_eq!(a.verdict, Verdict::Proved);
        assert_eq!(a.digest, b.digest);
        let (mut ja, mut jb) = (a.to_json(), b.to_json());
        ja = ja.replace(&a.timestamp, "");
        jb = jb.replace(&b.timestamp, "");
        assert_eq!(ja, jb);
    }
}
