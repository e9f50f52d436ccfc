//! Named, runnable proof jobs for the gamma bounds, the Kurepa bound and the
//! arcsin chains, each with the constants it is expected to reproduce.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;
use thiserror::Error;

use crate::exec::Exec;
use crate::normalize::LimitStrategy;
use crate::polycore::{Interval, Polynomial};
use crate::prover::{
    normalize_job, prove_nonneg, sig17, verify_certificate, ProofCertificate, ProofJob, ProveError,
    VerificationReport, Verdict,
};
use crate::specfun::gamma_fn;

/// Fresh points used when a case re-verifies its own certificates.
pub const CASE_RESAMPLE: usize = 4096;

/// `P₅(x)` approximating `Γ(x + 1)` on `[0, 1]`, constant term first.
pub const GAMMA_P5: [f64; 6] = [1.0, -0.5748646, 0.9512363, -0.6998588, 0.4245549, -0.1010678];

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("unknown case `{0}`; run `list` for the available names")]
    UnknownCase(String),
    #[error("case {case}, job {job}: {source}")]
    Prove {
        case: String,
        job: String,
        #[source]
        source: ProveError,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum Tolerance {
    Absolute(f64),
    Relative(f64),
    /// The actual value must not exceed the expected one.
    AtMost,
}

impl Tolerance {
    pub fn accepts(self, expected: f64, actual: f64) -> bool {
        match self {
            Tolerance::Absolute(t) => (actual - expected).abs() <= t,
            Tolerance::Relative(t) => (actual - expected).abs() <= t * expected.abs(),
            Tolerance::AtMost => actual <= expected,
        }
    }
}

/// Where an expected value comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    /// Printed digits of the published result.
    Published,
    /// A closed-form expression evaluated here.
    ClosedForm,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "of")]
pub enum Quantity {
    EpsRaw { job: usize },
    Alpha { job: usize },
    Beta { job: usize },
    Coeff { job: usize, index: usize },
    /// α recomputed without hints.
    RichardsonAlpha { job: usize },
    RichardsonBeta { job: usize },
    /// `max |Γ(x+1) - P₅(x)|` on a 4096-point grid of `[0, 1]`.
    GammaP5Deviation,
}

impl std::fmt::Display for Quantity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Quantity::EpsRaw { job } => write!(f, "eps_raw[{job}]"),
            Quantity::Alpha { job } => write!(f, "alpha[{job}]"),
            Quantity::Beta { job } => write!(f, "beta[{job}]"),
            Quantity::Coeff { job, index } => write!(f, "coeff[{job}][{index}]"),
            Quantity::RichardsonAlpha { job } => write!(f, "richardson_alpha[{job}]"),
            Quantity::RichardsonBeta { job } => write!(f, "richardson_beta[{job}]"),
            Quantity::GammaP5Deviation => f.write_str("gamma_p5_deviation"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expectation {
    pub quantity: Quantity,
    pub value: f64,
    pub tolerance: Tolerance,
    pub origin: Origin,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaseJob {
    pub label: String,
    pub job: ProofJob,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaseSpec {
    pub name: &'static str,
    pub description: &'static str,
    pub jobs: Vec<CaseJob>,
    pub expected: Vec<Expectation>,
}

#[derive(Clone, Debug, Serialize)]
pub struct JobOutcome {
    pub label: String,
    pub certificate: ProofCertificate,
    pub verification: VerificationReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpectationRow {
    pub quantity: Quantity,
    #[serde(with = "sig17")]
    pub expected: f64,
    #[serde(with = "sig17")]
    pub actual: f64,
    pub tolerance: Tolerance,
    pub origin: Origin,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseReport {
    pub case: String,
    pub description: String,
    pub jobs: Vec<JobOutcome>,
    pub expected: Vec<ExpectationRow>,
    pub pass: bool,
}

impl CaseReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human-readable summary: one line per job and per expectation.
    pub fn summary(&self) -> String {
        let mut out = format!("case {}: {}\n", self.case, if self.pass { "PASS" } else { "FAIL" });
        for j in &self.jobs {
            let c = &j.certificate;
            let eps = c.eps_raw.map(sig17::render).unwrap_or_else(|| "-".into());
            out += &format!(
                "  job {:<26} verdict {:<17} eps_raw {eps:<24} verify {}\n",
                j.label,
                c.verdict.to_string(),
                if j.verification.passed() { "pass" } else { "FAIL" }
            );
        }
        for r in &self.expected {
            out += &format!(
                "  {:<30} expected {:<24} actual {:<24} {}\n",
                r.quantity.to_string(),
                sig17::render(r.expected),
                sig17::render(r.actual),
                if r.pass { "ok" } else { "MISMATCH" }
            );
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Bounds of the arcsin chains

/// Variable spellings of one domain: `x` itself, or `x = sin t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    X,
    /// `x = sin t` with `t ∈ [0, π/2]`, so `sqrt(1 - x²) = cos t` and `asin x = t`.
    T,
}

impl Domain {
    fn spell(self) -> (&'static str, &'static str, &'static str) {
        match self {
            Domain::X => ("x", "sqrt(1-x^2)", "asin(x)"),
            Domain::T => ("sin(x)", "cos(x)", "x"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bound {
    /// `3x / (2 + √(1-x²))`
    Shafer,
    /// `6(√(1+x) - √(1-x)) / (4 + √(1+x) + √(1-x))`
    ShaferSqrt,
    Asin,
    /// `(π/(π-2)) x / (2/(π-2) + √(1-x²))`
    Phi,
    /// The bound with constant `√2(4-π)/(π-2√2)` in the denominator.
    New,
    /// `π(√2 + 1/2)(√(1+x) - √(1-x)) / (4 + √(1+x) + √(1-x))`
    Zhu,
    /// `πx / (2 + √(1-x²))`
    Fink,
}

impl Bound {
    pub fn label(self) -> &'static str {
        match self {
            Bound::Shafer => "shafer",
            Bound::ShaferSqrt => "shafer_sqrt",
            Bound::Asin => "asin",
            Bound::Phi => "phi",
            Bound::New => "new",
            Bound::Zhu => "zhu",
            Bound::Fink => "fink",
        }
    }

    pub fn expr(self, domain: Domain) -> String {
        let (s, c, t) = domain.spell();
        let p = format!("sqrt(1+{s})");
        let m = format!("sqrt(1-{s})");
        match self {
            Bound::Shafer => format!("3*{s}/(2+{c})"),
            Bound::ShaferSqrt => format!("6*({p}-{m})/(4+{p}+{m})"),
            Bound::Asin => t.to_string(),
            Bound::Phi => format!("(pi/(pi-2))*{s}/(2/(pi-2)+{c})"),
            Bound::New => {
                format!("(pi*(2-sqrt2)/(pi-2*sqrt2))*({p}-{m})/(sqrt2*(4-pi)/(pi-2*sqrt2)+{p}+{m})")
            }
            Bound::Zhu => format!("pi*(sqrt2+1/2)*({p}-{m})/(4+{p}+{m})"),
            Bound::Fink => format!("pi*{s}/(2+{c})"),
        }
    }

    /// Plain `f64` evaluation at `x ∈ [0, 1]`.
    pub fn eval(self, x: f64) -> f64 {
        let pi = std::f64::consts::PI;
        let r2 = std::f64::consts::SQRT_2;
        let (p, m, c) = ((1.0 + x).sqrt(), (1.0 - x).sqrt(), (1.0 - x * x).sqrt());
        match self {
            Bound::Shafer => 3.0 * x / (2.0 + c),
            Bound::ShaferSqrt => 6.0 * (p - m) / (4.0 + p + m),
            Bound::Asin => x.asin(),
            Bound::Phi => (pi / (pi - 2.0)) * x / (2.0 / (pi - 2.0) + c),
            Bound::New => {
                let a = pi * (2.0 - r2) / (pi - 2.0 * r2);
                let b = r2 * (4.0 - pi) / (pi - 2.0 * r2);
                a * (p - m) / (b + p + m)
            }
            Bound::Zhu => pi * (r2 + 0.5) * (p - m) / (4.0 + p + m),
            Bound::Fink => pi * x / (2.0 + c),
        }
    }
}

/// The displayed chains, each increasing pointwise on `[0, 1]`.
pub const CHAINS: [(&str, &[Bound]); 4] = [
    ("chain_fink", &[Bound::Shafer, Bound::Asin, Bound::Fink]),
    ("chain_malesevic97", &[Bound::Shafer, Bound::Asin, Bound::Phi, Bound::Fink]),
    (
        "chain_zhu",
        &[Bound::Shafer, Bound::ShaferSqrt, Bound::Asin, Bound::Zhu, Bound::Fink],
    ),
    (
        "chain_new_vs_zhu",
        &[Bound::Shafer, Bound::ShaferSqrt, Bound::Asin, Bound::New, Bound::Zhu, Bound::Fink],
    ),
];

/// Root orders at `t = 0` and `t = π/2` of `upper(sin t) - lower(sin t)`, and
/// the Remez degree used for the gap.
fn gap_profile(lower: Bound, upper: Bound) -> (u32, u32, usize) {
    use Bound::*;
    match (lower, upper) {
        (Shafer, Asin) | (Shafer, ShaferSqrt) | (ShaferSqrt, Asin) => (5, 0, 1),
        (Asin, Fink) | (Asin, Zhu) | (Zhu, Fink) => (1, 1, 2),
        (Phi, Fink) | (New, Zhu) => (1, 1, 1),
        (Asin, Phi) => (3, 1, 2),
        (Asin, New) => (3, 1, 1),
        _ => unreachable!("no gap profile for {lower:?} < {upper:?}"),
    }
}

pub fn gap_job(lower: Bound, upper: Bound) -> ProofJob {
    let (n, m, degree) = gap_profile(lower, upper);
    let expr = format!("({}) - ({})", upper.expr(Domain::T), lower.expr(Domain::T));
    ProofJob::new(&expr, 0.0, FRAC_PI_2, n, m).with_degree(degree)
}

// ---------------------------------------------------------------------------
// Cases

const THEOREM2_ALPHA: &str = "((4+sqrt2)*pi-12*sqrt2)/((24-12*sqrt2)*pi^2)";
const THEOREM2_BETA: &str = "((16*sqrt2-16)+(8-4*sqrt2)*pi-sqrt2*pi^2)/((2*sqrt2-2)*pi^3)";

pub fn list_cases() -> Vec<&'static str> {
    let mut names = vec!["lemma_gamma_upper", "lemma_gamma_lower", "theorem1_kurepa", "theorem2_arcsin"];
    names.extend(CHAINS.iter().map(|(n, _)| *n));
    names
}

fn published(quantity: Quantity, value: f64, tolerance: Tolerance) -> Expectation {
    Expectation {
        quantity,
        value,
        tolerance,
        origin: Origin::Published,
    }
}

fn closed_form(quantity: Quantity, text: &str) -> Expectation {
    let ast = crate::exprlang::parse_expr(text).expect("closed form parses");
    Expectation {
        quantity,
        value: ast.eval(0.0).expect("closed form evaluates"),
        tolerance: Tolerance::Relative(1e-6),
        origin: Origin::ClosedForm,
    }
}

fn single(label: &str, job: ProofJob) -> Vec<CaseJob> {
    vec![CaseJob {
        label: label.to_string(),
        job,
    }]
}

pub fn case_spec(name: &str) -> Result<CaseSpec, CaseError> {
    use Quantity::*;
    use Tolerance::*;
    let spec = match name {
        "lemma_gamma_upper" => CaseSpec {
            name: "lemma_gamma_upper",
            description: "Gamma(x+1) < x^2 - (7/4)x + 9/5 on [0, 1]",
            jobs: single(
                "upper",
                ProofJob::new("x^2 - 7/4*x + 9/5 - gamma(x+1)", 0.0, 1.0, 0, 0).with_degree(3),
            ),
            expected: vec![published(GammaP5Deviation, 5e-5, AtMost)],
        },
        "lemma_gamma_lower" => CaseSpec {
            name: "lemma_gamma_lower",
            description: "(x+2) Gamma(x+1) > 9/5 on [0, 1]",
            jobs: single(
                "lower",
                ProofJob::new("(x+2)*gamma(x+1) - 9/5", 0.0, 1.0, 0, 0).with_degree(3),
            ),
            expected: vec![published(GammaP5Deviation, 5e-5, AtMost)],
        },
        "theorem1_kurepa" => CaseSpec {
            name: "theorem1_kurepa",
            description: "K(x) <= K'(0) x on [0, 1], with K'(0) the best constant",
            jobs: single("kurepa", ProofJob::new("KP0*x - kurepaK(x)", 0.0, 1.0, 2, 0)),
            expected: vec![
                published(EpsRaw { job: 0 }, 0.04232, Relative(0.10)),
                published(Alpha { job: 0 }, 0.963321189, Absolute(1e-8)),
                published(Coeff { job: 0, index: 0 }, 0.921004887, Relative(0.25)),
                published(Coeff { job: 0, index: 1 }, -0.531115454, Relative(0.25)),
            ],
        },
        "theorem2_arcsin" => CaseSpec {
            name: "theorem2_arcsin",
            description: "asin x <= new bound on [0, 1], proved as f(sin t) >= 0 on [0, pi/2] with g = f(sin t) / (t^3 (pi/2 - t))",
            jobs: single(
                "new_minus_asin",
                gap_job(Bound::Asin, Bound::New).with_hints(Some(THEOREM2_ALPHA), Some(THEOREM2_BETA)),
            ),
            expected: vec![
                published(EpsRaw { job: 0 }, 1.408e-5, Relative(0.10)),
                published(Coeff { job: 0, index: 0 }, 0.000543606, Relative(0.25)),
                published(Coeff { job: 0, index: 1 }, 0.000410754, Relative(0.25)),
                closed_form(RichardsonAlpha { job: 0 }, THEOREM2_ALPHA),
                closed_form(RichardsonBeta { job: 0 }, THEOREM2_BETA),
            ],
        },
        other => {
            let (name, bounds) = CHAINS
                .iter()
                .find(|(n, _)| *n == other)
                .ok_or_else(|| CaseError::UnknownCase(other.to_string()))?;
            let jobs = bounds
                .windows(2)
                .map(|w| CaseJob {
                    label: format!("{}_minus_{}", w[1].label(), w[0].label()),
                    job: gap_job(w[0], w[1]),
                })
                .collect();
            CaseSpec {
                name,
                description: chain_description(name),
                jobs,
                expected: Vec::new(),
            }
        }
    };
    Ok(spec)
}

fn chain_description(name: &str) -> &'static str {
    match name {
        "chain_fink" => "shafer <= asin <= fink on [0, 1]; every adjacent gap proved in the t-domain",
        "chain_malesevic97" => "shafer <= asin <= phi <= fink on [0, 1]; every adjacent gap proved in the t-domain",
        "chain_zhu" => {
            "shafer <= shafer_sqrt <= asin <= zhu <= fink on [0, 1]; every adjacent gap proved in the t-domain, including those usually cited from earlier work"
        }
        _ => {
            "shafer <= shafer_sqrt <= asin <= new <= zhu <= fink on [0, 1]; every adjacent gap proved in the t-domain, with zhu >= new checked numerically rather than algebraically"
        }
    }
}

fn gamma_p5_deviation() -> f64 {
    let p5 = Polynomial::new(GAMMA_P5.to_vec());
    let iv = Interval::new(0.0, 1.0).expect("unit interval");
    iv.uniform_grid(4095)
        .into_iter()
        .map(|x| (gamma_fn(x + 1.0).expect("x + 1 > 0") - p5.eval(x)).abs())
        .fold(0.0, f64::max)
}

fn actual_value(q: Quantity, spec: &CaseSpec, jobs: &[JobOutcome]) -> Result<f64, CaseError> {
    let cert = |j: usize| &jobs[j].certificate;
    let richardson = |j: usize| {
        let mut job = spec.jobs[j].job.clone();
        job.alpha_hint = None;
        job.beta_hint = None;
        normalize_job(&job, LimitStrategy::Richardson).map_err(|source| CaseError::Prove {
            case: spec.name.to_string(),
            job: spec.jobs[j].label.clone(),
            source,
        })
    };
    Ok(match q {
        Quantity::EpsRaw { job } => cert(job).eps_raw.unwrap_or(f64::NAN),
        Quantity::Alpha { job } => cert(job).normalized.alpha,
        Quantity::Beta { job } => cert(job).normalized.beta,
        Quantity::Coeff { job, index } => cert(job)
            .poly
            .as_ref()
            .and_then(|p| p.coeffs.get(index).copied())
            .unwrap_or(f64::NAN),
        Quantity::RichardsonAlpha { job } => richardson(job)?.alpha.value.to_f64(),
        Quantity::RichardsonBeta { job } => richardson(job)?.beta.value.to_f64(),
        Quantity::GammaP5Deviation => gamma_p5_deviation(),
    })
}

/// Proves, verifies and compares one case.
pub fn run_case(name: &str) -> Result<CaseReport, CaseError> {
    let spec = case_spec(name)?;
    let mut jobs = Vec::with_capacity(spec.jobs.len());
    for cj in &spec.jobs {
        let certificate = prove_nonneg(&cj.job).map_err(|source| CaseError::Prove {
            case: spec.name.to_string(),
            job: cj.label.clone(),
            source,
        })?;
        let verification = verify_certificate(&certificate, CASE_RESAMPLE).expect("fresh certificates are well-formed");
        jobs.push(JobOutcome {
            label: cj.label.clone(),
            certificate,
            verification,
        });
    }
    let mut expected = Vec::with_capacity(spec.expected.len());
    for e in &spec.expected {
        let actual = actual_value(e.quantity, &spec, &jobs)?;
        expected.push(ExpectationRow {
            quantity: e.quantity,
            expected: e.value,
            actual,
            tolerance: e.tolerance,
            origin: e.origin,
            pass: e.tolerance.accepts(e.value, actual),
        });
    }
    let pass = jobs
        .iter()
        .all(|j| j.certificate.verdict == Verdict::Proved && j.verification.passed())
        && expected.iter().all(|r| r.pass);
    Ok(CaseReport {
        case: spec.name.to_string(),
        description: spec.description.to_string(),
        jobs,
        expected,
        pass,
    })
}

/// Runs several cases concurrently; reports come back in the order given.
pub fn run_cases(names: &[&str], exec: Exec) -> Vec<Result<CaseReport, CaseError>> {
    exec.map(names, |n| run_case(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::parse_expr;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn case_list_is_stable() {
        let a = list_cases();
        assert_eq!(a, list_cases());
        for n in ["theorem1_kurepa", "theorem2_arcsin", "lemma_gamma_upper", "chain_fink", "chain_zhu"] {
            assert!(a.contains(&n));
        }
        assert!(matches!(run_case("nope"), Err(CaseError::UnknownCase(_))));
        for n in a {
            case_spec(n).unwrap();
        }
    }

    #[test]
    fn chains_hold_pointwise() {
        let grid = Interval::new(0.0, 1.0).unwrap().uniform_grid(999);
        for (name, bounds) in CHAINS {
            for w in bounds.windows(2) {
                for &x in &grid {
                    let (lo, hi) = (w[0].eval(x), w[1].eval(x));
                    assert!(lo <= hi + 1e-15, "{name}: {:?}({x}) = {lo} > {:?} = {hi}", w[0], w[1]);
                }
            }
        }
    }

    #[test]
    fn expressions_match_hand_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for b in [
            Bound::Shafer,
            Bound::ShaferSqrt,
            Bound::Asin,
            Bound::Phi,
            Bound::New,
            Bound::Zhu,
            Bound::Fink,
        ] {
            let ex = parse_expr(&b.expr(Domain::X)).unwrap();
            let et = parse_expr(&b.expr(Domain::T)).unwrap();
            for _ in 0..100 {
                let x: f64 = rng.gen_range(0.0..1.0);
                let want = b.eval(x);
                let via_x: f64 = ex.eval(x).unwrap();
                let via_t: f64 = et.eval(x.asin()).unwrap();
                assert!((via_x - want).abs() <= 1e-14, "{b:?} at {x}");
                assert!((via_t - want).abs() <= 1e-13, "{b:?} at t = asin {x}");
            }
        }
    }

    #[test]
    fn theorem2_closed_forms_are_positive() {
        let a: f64 = parse_expr(THEOREM2_ALPHA).unwrap().eval(0.0).unwrap();
        let b: f64 = parse_expr(THEOREM2_BETA).unwrap().eval(0.0).unwrap();
        assert!((a - 5.576_830_578_575_347e-4).abs() < 1e-15);
        assert!((b - 1.202_894_367_906_856e-3).abs() < 1e-15);
    }

    #[test]
    fn gamma_p5_is_close() {
        let d = gamma_p5_deviation();
        assert!(d <= 5e-5 && d > 1e-6, "{d}");
    }

    #[test]
    fn tolerance_kinds() {
        assert!(Tolerance::Relative(0.1).accepts(1.0, 1.09));
        assert!(!Tolerance::Relative(0.1).accepts(-1.0, -1.2));
        assert!(Tolerance::Absolute(1e-3).accepts(0.0, -1e-3));
        assert!(Tolerance::AtMost.accepts(1.0, 0.5) && !Tolerance::AtMost.accepts(1.0, 1.5));
    }

    #[test]
    fn lemma_cases_pass() {
        for n in ["lemma_gamma_upper", "lemma_gamma_lower"] {
            let r = run_case(n).unwrap();
            assert!(r.pass, "{}", r.summary());
        }
    }
}
