//! Division of `f` by its declared endpoint roots.
//!
//! For `f` with a root of order `n` at `a` and `m` at `b`,
//! `g(x) = f(x) / ((x - a)^n (b - x)^m)` extends continuously to `[a, b]`
//! with `g(a) = α` and `g(b) = β`. Interior values of `g` are computed in
//! double-double arithmetic because the quotient cancels heavily near the ends.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minimax::{EvalError, FunctionHandle, RealFunction};
use crate::polycore::Interval;
use crate::xprec::DoubleDouble;

type Dd = DoubleDouble;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormalizeError {
    #[error("limit not established at the {side}: {detail}")]
    LimitNotEstablished { side: Side, detail: String },
    #[error("root order misdeclared at the {side}: limit {value:e} is zero or not finite")]
    RootOrderMisdeclared { side: Side, value: f64 },
    #[error("evaluation failure at x = {x}: {message}")]
    Evaluation { x: f64, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    LeftEnd,
    RightEnd,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::LeftEnd => "left end",
            Side::RightEnd => "right end",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitMethod {
    ClosedForm,
    RichardsonLimit,
    TaylorEndpoint,
}

impl fmt::Display for LimitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LimitMethod::ClosedForm => "closed-form",
            LimitMethod::RichardsonLimit => "richardson-limit",
            LimitMethod::TaylorEndpoint => "taylor-endpoint",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EndpointProfile {
    pub iv: Interval,
    /// Root order at `a`.
    pub n: u32,
    /// Root order at `b`.
    pub m: u32,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EndpointLimit {
    pub value: Dd,
    pub method: LimitMethod,
}

/// How a limit without a closed-form hint is computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LimitStrategy {
    #[default]
    Richardson,
    /// Finite-difference derivatives at the endpoint.
    Taylor,
}

const LEVELS: usize = 12;
const LIMIT_TOL: f64 = 1e-9;
/// Fraction of `b - a` within which `g` returns the endpoint value.
pub const ENDPOINT_GUARD: f64 = 1e-8;

fn eval_f(f: &FunctionHandle, x: Dd) -> Result<Dd, NormalizeError> {
    match f.eval_ext(x) {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(v) => Err(NormalizeError::Evaluation {
            x: x.to_f64(),
            message: format!("non-finite value {v}"),
        }),
        Err(EvalError(message)) => Err(NormalizeError::Evaluation { x: x.to_f64(), message }),
    }
}

/// Richardson extrapolation of samples taken at `h0 / 2^k`, assuming an
/// error expansion in integer powers of `h`. Returns the best diagonal entry.
fn richardson(samples: &[Dd], side: Side) -> Result<Dd, NormalizeError> {
    let mut table: Vec<Vec<Dd>> = Vec::with_capacity(samples.len());
    for (k, &s) in samples.iter().enumerate() {
        let mut row = vec![s];
        for j in 1..=k {
            let prev = row[j - 1];
            let up = table[k - 1][j - 1];
            row.push(prev + (prev - up) / ((1u64 << j) as f64 - 1.0));
        }
        table.push(row);
    }
    let diag: Vec<Dd> = table.iter().enumerate().map(|(k, r)| r[k]).collect();
    let (k, diff) = diag
        .windows(2)
        .enumerate()
        .map(|(i, w)| (i + 1, (w[1] - w[0]).abs().to_f64()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least two levels");
    let value = diag[k];
    if !value.is_finite() || diff > LIMIT_TOL * value.abs().to_f64() {
        return Err(NormalizeError::LimitNotEstablished {
            side,
            detail: format!(
                "successive extrapolants differ by {diff:e} around {:e}",
                value.to_f64()
            ),
        });
    }
    Ok(value)
}

fn check_nonzero(value: Dd, scale: f64, side: Side) -> Result<(), NormalizeError> {
    let v = value.to_f64();
    if !v.is_finite() || v.abs() <= LIMIT_TOL * scale || v == 0.0 {
        return Err(NormalizeError::RootOrderMisdeclared { side, value: v });
    }
    Ok(())
}

/// `(x - a)^n (b - x)^m` in double-double arithmetic.
fn divisor(p: &EndpointProfile, x: Dd) -> Dd {
    let a = Dd::from(p.iv.lo());
    let b = Dd::from(p.iv.hi());
    (x - a).powi(p.n as i32) * (b - x).powi(p.m as i32)
}

/// `α = lim_{x→a+} f(x) / ((x-a)^n (b-x)^m)` or the analogous `β`.
///
/// A supplied `hint` is returned as is, tagged closed-form.
pub fn endpoint_limit(
    f: &FunctionHandle,
    profile: &EndpointProfile,
    side: Side,
    hint: Option<Dd>,
) -> Result<EndpointLimit, NormalizeError> {
    endpoint_limit_with(f, profile, side, hint, LimitStrategy::Richardson)
}

pub fn endpoint_limit_with(
    f: &FunctionHandle,
    profile: &EndpointProfile,
    side: Side,
    hint: Option<Dd>,
    strategy: LimitStrategy,
) -> Result<EndpointLimit, NormalizeError> {
    if let Some(v) = hint {
        check_nonzero(v, 0.0, side)?;
        return Ok(EndpointLimit {
            value: v,
            method: LimitMethod::ClosedForm,
        });
    }
    let order = match side {
        Side::LeftEnd => profile.n,
        Side::RightEnd => profile.m,
    };
    if order == 0 || strategy == LimitStrategy::Taylor {
        return taylor_limit(f, profile, side);
    }

    let (a, b) = (Dd::from(profile.iv.lo()), Dd::from(profile.iv.hi()));
    let h0 = profile.iv.width() / 8.0;
    let mut samples = Vec::with_capacity(LEVELS);
    let mut scale = 0.0f64;
    for k in 0..LEVELS {
        let h = Dd::from(h0).ldexp(-(k as i32));
        let x = match side {
            Side::LeftEnd => a + h,
            Side::RightEnd => b - h,
        };
        let q = eval_f(f, x)? / divisor(profile, x);
        scale = scale.max(q.abs().to_f64());
        samples.push(q);
    }
    let value = richardson(&samples, side)?;
    check_nonzero(value, scale, side)?;
    Ok(EndpointLimit {
        value,
        method: LimitMethod::RichardsonLimit,
    })
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `α = f^(n)(a) / (n! (b-a)^m)`, `β = (-1)^m f^(m)(b) / (m! (b-a)^n)` with the
/// derivative from one-sided differences, Richardson-extrapolated.
fn taylor_limit(
    f: &FunctionHandle,
    profile: &EndpointProfile,
    side: Side,
) -> Result<EndpointLimit, NormalizeError> {
    let (a, b) = (Dd::from(profile.iv.lo()), Dd::from(profile.iv.hi()));
    let width = Dd::from(profile.iv.width());
    let (order, other) = match side {
        Side::LeftEnd => (profile.n, profile.m),
        Side::RightEnd => (profile.m, profile.n),
    };
    let factorial: f64 = (1..=order).map(|i| i as f64).product();
    let denom = width.powi(other as i32) * factorial;
    let sign = if side == Side::RightEnd && order % 2 == 1 { -1.0 } else { 1.0 };

    if order == 0 {
        let x = if side == Side::LeftEnd { a } else { b };
        let value = eval_f(f, x)? / denom;
        // Scale for the zero test: typical size of f over the interval.
        let scale = (1..8)
            .map(|i| {
                let x = a + width * (i as f64 / 8.0);
                eval_f(f, x).map(|v| (v / denom).abs().to_f64())
            })
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .fold(0.0, f64::max);
        check_nonzero(value, scale, side)?;
        return Ok(EndpointLimit {
            value,
            method: LimitMethod::TaylorEndpoint,
        });
    }

    let h0 = profile.iv.width() / (8.0 * order as f64);
    let mut samples = Vec::with_capacity(LEVELS);
    let mut scale = 0.0f64;
    for k in 0..LEVELS {
        let h = Dd::from(h0).ldexp(-(k as i32));
        let mut diff = Dd::ZERO;
        for j in 0..=order {
            let c = binomial(order, j) * if (order - j) % 2 == 1 { -1.0 } else { 1.0 };
            let x = match side {
                Side::LeftEnd => a + h * j as f64,
                Side::RightEnd => b - h * (order - j) as f64,
            };
            diff += eval_f(f, x)? * c;
        }
        let q = diff / h.powi(order as i32) / denom * sign;
        scale = scale.max(q.abs().to_f64());
        samples.push(q);
    }
    let value = richardson(&samples, side)?;
    check_nonzero(value, scale, side)?;
    Ok(EndpointLimit {
        value,
        method: LimitMethod::TaylorEndpoint,
    })
}

/// The continuous extension `g` of `f / ((x - a)^n (b - x)^m)`.
#[derive(Clone, Debug)]
pub struct NormalizedFunction {
    pub g: FunctionHandle,
    pub profile: EndpointProfile,
    pub alpha: EndpointLimit,
    pub beta: EndpointLimit,
}

struct Quotient {
    f: FunctionHandle,
    profile: EndpointProfile,
    alpha: Dd,
    beta: Dd,
}

impl RealFunction for Quotient {
    fn eval(&self, x: f64) -> Result<f64, EvalError> {
        self.eval_ext(Dd::from(x)).map(Dd::to_f64)
    }

    fn eval_ext(&self, x: Dd) -> Result<Dd, EvalError> {
        let iv = self.profile.iv;
        let guard = ENDPOINT_GUARD * iv.width();
        if (x - iv.lo()).to_f64() <= guard {
            return Ok(self.alpha);
        }
        if (Dd::from(iv.hi()) - x).to_f64() <= guard {
            return Ok(self.beta);
        }
        Ok(self.f.eval_ext(x)? / divisor(&self.profile, x))
    }

    fn label(&self) -> String {
        let p = &self.profile;
        format!("({}) / ((x - {})^{} * ({} - x)^{})", self.f.label(), p.iv.lo(), p.n, p.iv.hi(), p.m)
    }
}

pub fn build_normalized(
    f: &FunctionHandle,
    profile: &EndpointProfile,
    alpha_hint: Option<Dd>,
    beta_hint: Option<Dd>,
) -> Result<NormalizedFunction, NormalizeError> {
    build_normalized_with(f, profile, alpha_hint, beta_hint, LimitStrategy::Richardson)
}

pub fn build_normalized_with(
    f: &FunctionHandle,
    profile: &EndpointProfile,
    alpha_hint: Option<Dd>,
    beta_hint: Option<Dd>,
    strategy: LimitStrategy,
) -> Result<NormalizedFunction, NormalizeError> {
    let alpha = endpoint_limit_with(f, profile, Side::LeftEnd, alpha_hint, strategy)?;
    let beta = endpoint_limit_with(f, profile, Side::RightEnd, beta_hint, strategy)?;
    let g = FunctionHandle::new(Quotient {
        f: f.clone(),
        profile: *profile,
        alpha: alpha.value,
        beta: beta.value,
    });
    Ok(NormalizedFunction {
        g,
        profile: *profile,
        alpha,
        beta,
    })
}

/// `σ(t) = a + t / (1 - t)`, mapping `[0, 1)` onto `[a, ∞)`.
pub fn sigma(a: f64, t: f64) -> f64 {
    a + t / (1.0 - t)
}

struct HalfLine {
    f: FunctionHandle,
    a: f64,
    limit: Option<f64>,
}

impl RealFunction for HalfLine {
    fn eval(&self, t: f64) -> Result<f64, EvalError> {
        if t >= 1.0 {
            return self
                .limit
                .ok_or_else(|| EvalError("no limit at infinity was supplied".into()));
        }
        self.f.eval(sigma(self.a, t))
    }

    fn eval_ext(&self, t: Dd) -> Result<Dd, EvalError> {
        if t.to_f64() >= 1.0 {
            return self.eval(1.0).map(Dd::from);
        }
        self.f.eval_ext(Dd::from(self.a) + t / (Dd::ONE - t))
    }

    fn label(&self) -> String {
        format!("({})∘σ", self.f.label())
    }
}

/// `f ∘ σ` on `[0, 1]`; the value at `t = 1` is the caller-supplied limit of
/// `f` at infinity.
pub fn transform_infinite(f: &FunctionHandle, a: f64, limit_at_infinity: Option<f64>) -> FunctionHandle {
    FunctionHandle::new(HalfLine {
        f: f.clone(),
        a,
        limit: limit_at_infinity,
    })
}
