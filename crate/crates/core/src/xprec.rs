//! Double-double arithmetic.
//!
//! A [`DoubleDouble`] is the unevaluated sum `hi + lo` of two `f64` values with
//! `|lo| <= ulp(hi) / 2`, giving about 106 bits (roughly 32 decimal digits) of
//! significand. The elementary functions here are accurate to a few units in
//! the last place of that format for the argument ranges the prover uses
//! (`|x|` up to a few hundred for `exp`, up to about `1e6` for `sin`/`cos`).

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

#[cfg(target_feature = "fma")]
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

#[cfg(not(target_feature = "fma"))]
#[inline]
fn split(a: f64) -> (f64, f64) {
    const SPLITTER: f64 = 134_217_729.0; // 2^27 + 1
    let t = SPLITTER * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

// Dekker's product; software `mul_add` is far slower than this on targets
// without hardware FMA.
#[cfg(not(target_feature = "fma"))]
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    let err = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    (p, err)
}

impl DoubleDouble {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };
    pub const ONE: Self = Self { hi: 1.0, lo: 0.0 };
    pub const PI: Self = Self {
        hi: std::f64::consts::PI,
        lo: 1.2246467991473532e-16,
    };
    pub const FRAC_PI_2: Self = Self {
        hi: std::f64::consts::FRAC_PI_2,
        lo: 6.123233995736766e-17,
    };
    pub const LN_2: Self = Self {
        hi: std::f64::consts::LN_2,
        lo: 2.3190468138462996e-17,
    };
    pub const E: Self = Self {
        hi: std::f64::consts::E,
        lo: 1.4456468917292502e-16,
    };
    pub const SQRT_2: Self = Self {
        hi: std::f64::consts::SQRT_2,
        lo: -9.667293313452913e-17,
    };
    pub const NAN: Self = Self {
        hi: f64::NAN,
        lo: f64::NAN,
    };

    /// Builds a value from two parts, renormalizing them.
    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = two_sum(hi, lo);
        Self { hi, lo }
    }

    pub const fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn hi(self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn lo(self) -> f64 {
        self.lo
    }

    /// Nearest `f64`.
    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    pub fn is_nan(self) -> bool {
        self.hi.is_nan()
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn signum(self) -> f64 {
        if self.hi > 0.0 {
            1.0
        } else if self.hi < 0.0 {
            -1.0
        } else {
            0.0
        }
    }

    /// Multiplies by `2^k` exactly (barring overflow and underflow).
    pub fn ldexp(self, k: i32) -> Self {
        let s = 2f64.powi(k);
        Self {
            hi: self.hi * s,
            lo: self.lo * s,
        }
    }

    pub fn sqr(self) -> Self {
        let (p1, p2) = two_prod(self.hi, self.hi);
        let p2 = p2 + 2.0 * self.hi * self.lo + self.lo * self.lo;
        let (hi, lo) = quick_two_sum(p1, p2);
        Self { hi, lo }
    }

    pub fn recip(self) -> Self {
        Self::ONE / self
    }

    pub fn sqrt(self) -> Self {
        if self.hi == 0.0 {
            return Self::ZERO;
        }
        if self.hi < 0.0 {
            return Self::NAN;
        }
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let diff = (self - Self::from_f64(ax).sqr()).hi * (x * 0.5);
        let (hi, lo) = two_sum(ax, diff);
        Self { hi, lo }
    }

    pub fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::ONE;
        }
        let mut base = self;
        let mut k = n.unsigned_abs();
        let mut acc = Self::ONE;
        while k > 0 {
            if k & 1 == 1 {
                acc *= base;
            }
            k >>= 1;
            if k > 0 {
                base = base.sqr();
            }
        }
        if n < 0 {
            acc.recip()
        } else {
            acc
        }
    }

    /// `self^y` for `self > 0`.
    pub fn powf(self, y: Self) -> Self {
        (y * self.ln()).exp()
    }

    // Taylor sum of expm1 for |r| <= ~4e-4.
    fn expm1_kernel(r: Self) -> Self {
        let mut sum = r;
        let mut term = r;
        for i in 2..=12 {
            term = term * r / i as f64;
            sum += term;
            if term.hi.abs() <= 1e-36 * sum.hi.abs() {
                break;
            }
        }
        sum
    }

    pub fn exp(self) -> Self {
        if self.hi > 709.7 {
            return Self::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Self::ZERO;
        }
        if self.hi == 0.0 {
            return Self::ONE;
        }
        let k = (self.hi / Self::LN_2.hi).round();
        let r = (self - Self::LN_2 * k).ldexp(-10);
        let mut s = Self::expm1_kernel(r);
        for _ in 0..10 {
            s = s.ldexp(1) + s.sqr();
        }
        (s + 1.0).ldexp(k as i32)
    }

    /// `exp(self) - 1` without cancellation for small arguments.
    pub fn exp_m1(self) -> Self {
        if self.hi.abs() < 0.34 {
            if self.hi == 0.0 {
                return Self::ZERO;
            }
            let mut s = Self::expm1_kernel(self.ldexp(-10));
            for _ in 0..10 {
                s = s.ldexp(1) + s.sqr();
            }
            s
        } else {
            self.exp() - 1.0
        }
    }

    /// Natural logarithm; NaN for non-positive input.
    pub fn ln(self) -> Self {
        if self.hi <= 0.0 {
            return Self::NAN;
        }
        if (self.hi - 1.0).abs() < 0.25 {
            return (self - 1.0).ln_1p();
        }
        // One Newton step on exp(y) = x doubles the f64 seed's accuracy.
        let y = Self::from_f64(self.hi.ln());
        y + self * (-y).exp() - 1.0
    }

    /// `ln(1 + self)` accurate for small arguments; NaN below -1.
    pub fn ln_1p(self) -> Self {
        if self.hi <= -1.0 {
            return Self::NAN;
        }
        if self.hi == 0.0 {
            return Self::ZERO;
        }
        let y = Self::from_f64(self.hi.ln_1p());
        let em = y.exp_m1();
        y - (em - self) / (em + 1.0)
    }

    fn sin_taylor(r: Self) -> Self {
        let r2 = r.sqr();
        let mut term = r;
        let mut sum = r;
        let mut k = 1.0;
        loop {
            term = -(term * r2) / ((k + 1.0) * (k + 2.0));
            sum += term;
            k += 2.0;
            if term.hi.abs() <= 1e-36 || k > 40.0 {
                break;
            }
        }
        sum
    }

    fn cos_taylor(r: Self) -> Self {
        let r2 = r.sqr();
        let mut term = Self::ONE;
        let mut sum = Self::ONE;
        let mut k = 0.0;
        loop {
            term = -(term * r2) / ((k + 1.0) * (k + 2.0));
            sum += term;
            k += 2.0;
            if term.hi.abs() <= 1e-36 || k > 40.0 {
                break;
            }
        }
        sum
    }

    // Reduces by multiples of pi/2: returns (quadrant mod 4, remainder).
    fn reduce_half_pi(self) -> (i64, Self) {
        let k = (self.hi / Self::FRAC_PI_2.hi).round();
        // Third component of pi/2 beyond the double-double constant.
        const FRAC_PI_2_LO2: f64 = -1.4973849048591698e-33;
        let r = self - Self::FRAC_PI_2 * k - FRAC_PI_2_LO2 * k;
        ((k as i64).rem_euclid(4), r)
    }

    pub fn sin(self) -> Self {
        if self.hi == 0.0 {
            return Self::ZERO;
        }
        let (q, r) = self.reduce_half_pi();
        match q {
            0 => Self::sin_taylor(r),
            1 => Self::cos_taylor(r),
            2 => -Self::sin_taylor(r),
            _ => -Self::cos_taylor(r),
        }
    }

    pub fn cos(self) -> Self {
        let (q, r) = self.reduce_half_pi();
        match q {
            0 => Self::cos_taylor(r),
            1 => -Self::sin_taylor(r),
            2 => -Self::cos_taylor(r),
            _ => Self::sin_taylor(r),
        }
    }

    /// Principal arcsine; NaN outside `[-1, 1]`.
    pub fn asin(self) -> Self {
        let a = self.abs();
        if a > Self::ONE {
            return Self::NAN;
        }
        if a.hi <= 0.5 {
            if a.hi == 0.0 {
                return Self::ZERO;
            }
            let y = Self::from_f64(self.hi.asin());
            return y - (y.sin() - self) / y.cos();
        }
        // asin(a) = pi/2 - 2 asin(sqrt((1 - a) / 2)) keeps the Newton step
        // away from the flat top of sin.
        let z = ((Self::ONE - a) * 0.5).sqrt();
        let v = Self::FRAC_PI_2 - z.asin().ldexp(1);
        if self.hi < 0.0 {
            -v
        } else {
            v
        }
    }
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        Self::from_f64(x)
    }
}

impl From<i32> for DoubleDouble {
    fn from(x: i32) -> Self {
        Self::from_f64(x as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid decimal literal {0:?}")]
pub struct ParseDoubleDoubleError(String);

impl FromStr for DoubleDouble {
    type Err = ParseDoubleDoubleError;

    /// Parses a decimal literal (`[-+]digits[.digits][e[-+]digits]`) with
    /// correct rounding of both components.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        use num_bigint::BigInt;
        use num_rational::BigRational;
        use num_traits::ToPrimitive;

        let err = || ParseDoubleDoubleError(s.to_string());
        let t = s.trim();
        let (neg, t) = match t.as_bytes().first() {
            Some(b'-') => (true, &t[1..]),
            Some(b'+') => (false, &t[1..]),
            _ => (false, t),
        };
        let (mantissa, exp) = match t.find(['e', 'E']) {
            Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| err())?),
            None => (t, 0),
        };
        let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
        if int_part.is_empty() && frac_part.is_empty()
            || !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit())
        {
            return Err(err());
        }
        let digits: BigInt = format!("0{int_part}{frac_part}").parse().map_err(|_| err())?;
        let scale = exp - frac_part.len() as i32;
        let ten = BigInt::from(10);
        let mut r = BigRational::from_integer(digits);
        if scale >= 0 {
            r *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
        } else {
            r /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
        }
        let hi = r.to_f64().ok_or_else(err)?;
        if !hi.is_finite() {
            return Err(err());
        }
        let lo = BigRational::from_float(hi)
            .map(|h| (r - h).to_f64().unwrap_or(0.0))
            .unwrap_or(0.0);
        let v = Self::new(hi, lo);
        Ok(if neg { -v } else { v })
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&other.lo),
            ord => Some(ord),
        }
    }
}

impl fmt::Display for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.17e} {:+.3e}", self.hi, self.lo)
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, b: Self) -> Self {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Self { hi, lo }
    }
}

impl Add<f64> for DoubleDouble {
    type Output = Self;
    fn add(self, b: f64) -> Self {
        let (s1, s2) = two_sum(self.hi, b);
        let (hi, lo) = quick_two_sum(s1, s2 + self.lo);
        Self { hi, lo }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Sub<f64> for DoubleDouble {
    type Output = Self;
    fn sub(self, b: f64) -> Self {
        self + (-b)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        let (p1, p2) = two_prod(self.hi, b.hi);
        let p2 = p2 + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p1, p2);
        Self { hi, lo }
    }
}

impl Mul<f64> for DoubleDouble {
    type Output = Self;
    fn mul(self, b: f64) -> Self {
        let (p1, p2) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p1, p2 + self.lo * b);
        Self { hi, lo }
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        let r = self - b * q1;
        let q2 = r.hi / b.hi;
        let r = r - b * q2;
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo } + q3
    }
}

impl Div<f64> for DoubleDouble {
    type Output = Self;
    fn div(self, b: f64) -> Self {
        let q1 = self.hi / b;
        let (p1, p2) = two_prod(q1, b);
        let (s, e) = two_sum(self.hi, -p1);
        let e = e + self.lo - p2;
        let q2 = (s + e) / b;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo }
    }
}

impl AddAssign for DoubleDouble {
    fn add_assign(&mut self, b: Self) {
        *self = *self + b;
    }
}

impl SubAssign for DoubleDouble {
    fn sub_assign(&mut self, b: Self) {
        *self = *self - b;
    }
}

impl MulAssign for DoubleDouble {
    fn mul_assign(&mut self, b: Self) {
        *self = *self * b;
    }
}

impl std::iter::Sum for DoubleDouble {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, |a, b| a + b)
    }
}
