//! Real polynomials in the monomial basis, with exact root counting and
//! positivity certification over rational arithmetic.
//!
//! Floating-point coefficients are dyadic rationals, so they convert to
//! [`BigRational`] exactly. Certification rounds them down to a coarser dyadic
//! grid first (to keep the Sturm chain small) and charges the rounding to an
//! explicit `rational_slack`; every comparison after that point is exact.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::xprec::DoubleDouble;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("indeterminate: the zero polynomial has no finite root count")]
    Indeterminate,
    #[error("invalid interval [{lo}, {hi}]: need finite lo < hi")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("invalid slack {0}: must be finite and non-negative")]
    InvalidSlack(f64),
    #[error("non-finite coefficient at index {0}")]
    NonFiniteCoefficient(usize),
}

/// Closed interval `[lo, hi]` with finite `lo < hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, PolyError> {
        if lo.is_finite() && hi.is_finite() && lo < hi {
            Ok(Self { lo, hi })
        } else {
            Err(PolyError::InvalidInterval { lo, hi })
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// `count + 1` equally spaced points including both ends.
    pub fn uniform_grid(&self, count: usize) -> Vec<f64> {
        let count = count.max(1);
        let h = self.width() / count as f64;
        (0..=count)
            .map(|i| {
                if i == count {
                    self.hi
                } else {
                    self.lo + h * i as f64
                }
            })
            .collect()
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Univariate polynomial `sum coeffs[i] * x^i`, constant term first.
///
/// The coefficient list never has trailing zeros except for the zero
/// polynomial, which is stored as `[0]` with degree 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![0.0] }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Horner evaluation in double-double arithmetic.
    pub fn eval_ext(&self, x: DoubleDouble) -> DoubleDouble {
        self.coeffs
            .iter()
            .rev()
            .fold(DoubleDouble::ZERO, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::zero();
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        )
    }

    /// `q(x) = p(scale * x + shift)`.
    pub fn compose_affine(&self, scale: f64, shift: f64) -> Self {
        // Horner over polynomials: q = (...(c_n) * L + c_{n-1}) * L + ...
        let mut acc = vec![0.0; self.coeffs.len()];
        for (len, &c) in (1..).zip(self.coeffs.iter().rev()) {
            let mut next = vec![0.0; len + 1];
            for (i, &a) in acc.iter().take(len).enumerate() {
                next[i] += a * shift;
                next[i + 1] += a * scale;
            }
            next[0] += c;
            acc = next;
        }
        Self::new(acc)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new(
            (0..n)
                .map(|i| {
                    self.coeffs.get(i).copied().unwrap_or(0.0)
                        + other.coeffs.get(i).copied().unwrap_or(0.0)
                })
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    fn check_finite(&self) -> Result<(), PolyError> {
        match self.coeffs.iter().position(|c| !c.is_finite()) {
            Some(i) => Err(PolyError::NonFiniteCoefficient(i)),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 && self.coeffs.len() > 1 {
                continue;
            }
            let sign = if c < 0.0 { "-" } else { "+" };
            if first {
                if c < 0.0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{:.17e}", c.abs())?,
                1 => write!(f, "{:.17e}*x", c.abs())?,
                _ => write!(f, "{:.17e}*x^{i}", c.abs())?,
            }
        }
        Ok(())
    }
}

/// How positivity was established.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PositivityMethod {
    SturmExact,
    EndpointLinear,
}

/// Outcome of [`assert_positive_on`], successful or not.
#[derive(Clone, Debug, PartialEq)]
pub struct PositivityEvidence {
    pub method: PositivityMethod,
    /// Whether `p - slack > 0` was established on the whole closed interval.
    pub certified: bool,
    /// Distinct real roots of the certified polynomial in `(lo, hi]`.
    pub root_count: usize,
    pub sample_point: f64,
    /// Value of the certified (rounded, slack-shifted) polynomial at `sample_point`.
    pub sample_value: f64,
    /// Upper bound on the coefficient rounding absorbed before exact arithmetic.
    pub rational_slack: f64,
}

/// Polynomial with exact rational coefficients, constant term first.
#[derive(Clone, Debug, PartialEq)]
struct RatPoly(Vec<BigRational>);

impl RatPoly {
    fn trimmed(mut c: Vec<BigRational>) -> Self {
        while c.len() > 1 && c.last().is_some_and(Zero::is_zero) {
            c.pop();
        }
        if c.is_empty() {
            c.push(BigRational::zero());
        }
        Self(c)
    }

    fn from_f64_exact(p: &Polynomial) -> Self {
        Self::trimmed(p.coeffs.iter().map(|&c| rational(c)).collect())
    }

    fn degree(&self) -> usize {
        self.0.len() - 1
    }

    fn is_zero(&self) -> bool {
        self.0.len() == 1 && self.0[0].is_zero()
    }

    fn lead(&self) -> &BigRational {
        self.0.last().expect("non-empty")
    }

    fn eval(&self, x: &BigRational) -> BigRational {
        self.0
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    fn derivative(&self) -> Self {
        if self.0.len() == 1 {
            return Self(vec![BigRational::zero()]);
        }
        Self::trimmed(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    fn monic(&self) -> Self {
        let l = self.lead().clone();
        Self(self.0.iter().map(|c| c / &l).collect())
    }

    /// Euclidean division: `(quotient, remainder)`.
    fn div_rem(&self, d: &Self) -> (Self, Self) {
        assert!(!d.is_zero(), "division by zero polynomial");
        let mut rem = self.0.clone();
        let dd = d.degree();
        if self.degree() < dd {
            return (Self(vec![BigRational::zero()]), self.clone());
        }
        let mut quot = vec![BigRational::zero(); self.degree() - dd + 1];
        let dl = d.lead();
        for k in (0..quot.len()).rev() {
            let coef = &rem[k + dd] / dl;
            if !coef.is_zero() {
                for (j, dc) in d.0.iter().enumerate() {
                    rem[k + j] -= &coef * dc;
                }
            }
            quot[k] = coef;
        }
        rem.truncate(dd.max(1));
        (Self::trimmed(quot), Self::trimmed(rem))
    }

    fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            a.monic()
        }
    }

    fn square_free(&self) -> Self {
        let g = self.gcd(&self.derivative());
        if g.degree() == 0 {
            self.clone()
        } else {
            self.div_rem(&g).0
        }
    }

    fn sturm_chain(&self) -> Vec<Self> {
        let mut chain = vec![self.clone(), self.derivative()];
        loop {
            let n = chain.len();
            if chain[n - 1].is_zero() {
                chain.pop();
                break;
            }
            let (_, r) = chain[n - 2].div_rem(&chain[n - 1]);
            if r.is_zero() {
                break;
            }
            chain.push(Self(r.0.into_iter().map(|c| -c).collect()));
        }
        chain
    }
}

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

fn sign_variations(chain: &[RatPoly], x: &BigRational) -> usize {
    let signs: Vec<bool> = chain
        .iter()
        .map(|p| p.eval(x))
        .filter(|v| !v.is_zero())
        .map(|v| v.is_positive())
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

fn count_roots_exact(p: &RatPoly, lo: &BigRational, hi: &BigRational) -> usize {
    if p.degree() == 0 {
        return 0;
    }
    let chain = p.square_free().sturm_chain();
    sign_variations(&chain, lo) - sign_variations(&chain, hi)
}

/// Rounds up to the nearest `f64` that is at least `r` (for `r >= 0`).
fn f64_at_least(r: &BigRational) -> f64 {
    let mut f = r.to_f64().unwrap_or(f64::INFINITY);
    while f.is_finite() && rational(f) < *r {
        f = f64::from_bits(f.to_bits() + 1);
    }
    f
}

/// Number of distinct real roots of `p` in `(iv.lo, iv.hi]`.
///
/// Uses Sturm's theorem on the square-free part of `p` over exact rationals.
pub fn count_real_roots(p: &Polynomial, iv: &Interval) -> Result<usize, PolyError> {
    p.check_finite()?;
    if p.is_zero() {
        return Err(PolyError::Indeterminate);
    }
    Ok(count_roots_exact(
        &RatPoly::from_f64_exact(p),
        &rational(iv.lo),
        &rational(iv.hi),
    ))
}

// Coefficients are rounded down to multiples of 2^(e - ROUNDING_BITS) where
// 2^e bounds the largest coefficient magnitude.
const ROUNDING_BITS: i32 = 60;

/// Decides whether `p(x) - slack > 0` for every `x` in the closed interval.
///
/// Failure to certify is reported through `certified = false`, not an error.
pub fn assert_positive_on(
    p: &Polynomial,
    iv: &Interval,
    slack: f64,
) -> Result<PositivityEvidence, PolyError> {
    Interval::new(iv.lo, iv.hi)?;
    if !(slack.is_finite() && slack >= 0.0) {
        return Err(PolyError::InvalidSlack(slack));
    }
    p.check_finite()?;

    let max_abs = p.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let (rounded, rounding) = if max_abs == 0.0 {
        (RatPoly::from_f64_exact(p), BigRational::zero())
    } else {
        let e = max_abs.log2().floor() as i32 - ROUNDING_BITS;
        let unit = if e >= 0 {
            BigRational::from_integer(BigInt::one() << e as usize)
        } else {
            BigRational::new(BigInt::one(), BigInt::one() << (-e) as usize)
        };
        let reach = rational(iv.lo.abs().max(iv.hi.abs()));
        let mut power = BigRational::one();
        let mut rounding = BigRational::zero();
        let mut coeffs = Vec::with_capacity(p.coeffs.len());
        for &c in &p.coeffs {
            let exact = rational(c);
            let r = (&exact / &unit).floor() * &unit;
            rounding += (&exact - &r) * &power;
            power *= &reach;
            coeffs.push(r);
        }
        (RatPoly::trimmed(coeffs), rounding)
    };

    // q(x) = rounded(x) - slack - rounding  <=  p(x) - slack on the interval.
    let mut q = rounded.0;
    q[0] -= rational(slack) + &rounding;
    let q = RatPoly::trimmed(q);

    let lo = rational(iv.lo);
    let hi = rational(iv.hi);
    let mid = (&lo + &hi) / BigRational::from_integer(BigInt::from(2));
    let q_lo = q.eval(&lo);
    let q_hi = q.eval(&hi);
    let q_mid = q.eval(&mid);
    let rational_slack = f64_at_least(&rounding);
    let sample_point = mid.to_f64().unwrap_or(iv.midpoint());
    let sample_value = q_mid.to_f64().unwrap_or(f64::NAN);

    if q.degree() <= 1 {
        // A linear function is positive on a segment iff it is at both ends.
        let certified = q_lo.is_positive() && q_hi.is_positive();
        let root_count = count_roots_exact(&q, &lo, &hi);
        return Ok(PositivityEvidence {
            method: PositivityMethod::EndpointLinear,
            certified,
            root_count,
            sample_point,
            sample_value,
            rational_slack,
        });
    }

    let root_count = count_roots_exact(&q, &lo, &hi);
    let certified =
        root_count == 0 && q_lo.is_positive() && q_mid.is_positive() && q_hi.is_positive();
    Ok(PositivityEvidence {
        method: PositivityMethod::SturmExact,
        certified,
        root_count,
        sample_point,
        sample_value,
        rational_slack,
    })
}
