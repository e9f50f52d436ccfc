//! Independent re-checking of a certificate from its contents alone.

use std::fmt;

use serde::Serialize;

use super::cert::{CertError, ProofCertificate, Verdict};
use super::normalize_job;
use crate::exec::Exec;
use crate::minimax::FunctionHandle;
use crate::normalize::{LimitMethod, LimitStrategy, NormalizedFunction};
use crate::polycore::{assert_positive_on, Interval};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &'static str, passed: bool, detail: impl Into<String>) {
        self.checks.push(CheckResult {
            name,
            passed,
            detail: detail.into(),
        });
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{tag} {:<12} {}", c.name, c.detail)?;
        }
        write!(f, "{}", if self.passed() { "verified" } else { "verification failed" })
    }
}

// Limits recomputed by the verifier must agree with the stored ones this well.
const LIMIT_AGREEMENT: f64 = 1e-9;

/// Points `a + (b - a) frac(1/2 + k φ⁻¹)`, an additive recurrence with low
/// discrepancy that shares no points with the uniform grids of the prover.
fn kronecker_points(iv: &Interval, count: usize) -> Vec<f64> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    (0..count)
        .map(|k| iv.lo() + iv.width() * (0.5 + k as f64 * INV_PHI).fract())
        .collect()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= LIMIT_AGREEMENT * a.abs().max(b.abs())
}

pub fn verify_json(text: &str, resample: usize) -> Result<VerificationReport, CertError> {
    verify_certificate(&ProofCertificate::from_json(text)?, resample)
}

/// Re-checks a certificate using only its contents and function evaluation.
pub fn verify_certificate(cert: &ProofCertificate, resample: usize) -> Result<VerificationReport, CertError> {
    cert.validate()?;
    let mut report = VerificationReport { checks: Vec::new() };

    let digest = cert.compute_digest();
    report.push(
        "digest",
        digest == cert.digest,
        if digest == cert.digest {
            "content digest matches".to_string()
        } else {
            format!("stored {} but content hashes to {digest}", cert.digest)
        },
    );

    // Order-zero sides are always tagged taylor-endpoint, whatever the strategy.
    let taylor = |method: LimitMethod, order: u32| method == LimitMethod::TaylorEndpoint && order > 0;
    let strategy = if taylor(cert.normalized.alpha_method, cert.job.n) || taylor(cert.normalized.beta_method, cert.job.m) {
        LimitStrategy::Taylor
    } else {
        LimitStrategy::Richardson
    };
    let norm = match normalize_job(&cert.job, strategy) {
        Ok(n) => n,
        Err(e) => {
            report.push("limits", false, format!("cannot rebuild g: {e}"));
            return Ok(report);
        }
    };
    check_limits(cert, &norm, &mut report);

    let iv = Interval::new(cert.job.a, cert.job.b).expect("validated");
    match cert.verdict {
        Verdict::Proved => {
            check_proved(cert, &norm.g, &iv, resample, &mut report);
        }
        Verdict::RefutedCandidate => {
            let w = cert.witness.as_ref().expect("validated");
            let g = if w.x <= iv.lo() {
                Ok(norm.alpha.value.to_f64())
            } else if w.x >= iv.hi() {
                Ok(norm.beta.value.to_f64())
            } else {
                norm.g.eval(w.x).map_err(|e| e.0)
            };
            match g {
                Ok(v) => report.push("witness", v < 0.0, format!("g({:.17e}) = {v:.17e}", w.x)),
                Err(e) => report.push("witness", false, e),
            }
        }
        Verdict::Inconclusive => {
            if let (Some(p), Some(eps)) = (&cert.poly, cert.eps_cert) {
                match assert_positive_on(&p.polynomial(), &iv, eps) {
                    Ok(ev) => {
                        let stored = cert.positivity.as_ref().map(|p| p.certified);
                        report.push(
                            "positivity",
                            stored == Some(ev.certified),
                            format!("recomputed certified = {}, stored {stored:?}", ev.certified),
                        );
                    }
                    Err(e) => report.push("positivity", false, e.to_string()),
                }
            }
        }
    }
    Ok(report)
}

fn check_limits(cert: &ProofCertificate, norm: &NormalizedFunction, report: &mut VerificationReport) {
    let (a, b) = (norm.alpha.value.to_f64(), norm.beta.value.to_f64());
    let stored = &cert.normalized;
    let ok = close(a, stored.alpha)
        && close(b, stored.beta)
        && norm.alpha.method == stored.alpha_method
        && norm.beta.method == stored.beta_method;
    report.push(
        "limits",
        ok,
        format!(
            "alpha {a:.17e} ({}) vs stored {:.17e}; beta {b:.17e} ({}) vs stored {:.17e}",
            norm.alpha.method, stored.alpha, norm.beta.method, stored.beta
        ),
    );
}

fn check_proved(
    cert: &ProofCertificate,
    g: &FunctionHandle,
    iv: &Interval,
    resample: usize,
    report: &mut VerificationReport,
) {
    let poly = cert.poly.as_ref().expect("validated").polynomial();
    let eps_raw = cert.eps_raw.expect("validated");
    let eps_cert = cert.eps_cert.expect("validated");

    let inflation = eps_cert == cert.job.safety_factor * eps_raw;
    report.push(
        "inflation",
        inflation,
        format!("eps_cert {eps_cert:.17e} vs safety_factor * eps_raw {:.17e}", cert.job.safety_factor * eps_raw),
    );

    let signs = cert.normalized.alpha > 0.0 && cert.normalized.beta > 0.0;
    report.push("signs", signs, "alpha > 0 and beta > 0 required");

    match assert_positive_on(&poly, iv, eps_cert) {
        Ok(ev) => report.push(
            "positivity",
            ev.certified,
            format!(
                "{:?}: {} roots of P - eps_cert, sample value {:.17e}",
                ev.method, ev.root_count, ev.sample_value
            ),
        ),
        Err(e) => report.push("positivity", false, e.to_string()),
    }

    if let Some(r) = &cert.residual_check {
        report.push(
            "stored-norm",
            r.value <= eps_cert,
            format!("stored residual {:.17e} vs eps_cert {eps_cert:.17e}", r.value),
        );
    }

    let points = kronecker_points(iv, resample);
    let values = Exec::default().map(&points, |&x| g.eval(x));
    let mut worst = (f64::NAN, 0.0f64);
    let mut failure = None;
    for (&x, v) in points.iter().zip(values) {
        match v {
            Ok(v) if v.is_finite() => {
                let e = (v - poly.eval(x)).abs();
                if e > worst.1 {
                    worst = (x, e);
                }
            }
            Ok(v) => {
                failure = Some(format!("g({x}) = {v}"));
                break;
            }
            Err(e) => {
                failure = Some(format!("g({x}): {}", e.0));
                break;
            }
        }
    }
    match failure {
        Some(msg) => report.push("residual", false, msg),
        None => report.push(
            "residual",
            worst.1 <= eps_cert,
            format!(
                "max |g - P| over {resample} fresh points is {:.17e} at x = {:.17e} (eps_cert {eps_cert:.17e})",
                worst.1, worst.0
            ),
        ),
    }
}
