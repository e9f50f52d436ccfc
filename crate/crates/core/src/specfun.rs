//! Special functions: Γ, Kurepa's K and its derivatives at zero.
//!
//! K is available through three independent evaluations:
//!
//! * [`kurepa_k`]: adaptive Gauss–Kronrod quadrature in `f64` with an error bound,
//! * [`kurepa_k_check`]: the closed form through Ei(1) and the incomplete gamma
//!   function, evaluated in complex arithmetic on the principal branch,
//! * [`kurepa_k_ext`]: fixed composite Gauss–Legendre rules in double-double
//!   arithmetic, used where the prover needs about 30 significant digits.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{E, PI};
use std::sync::OnceLock;

use num_complex::Complex64;
use thiserror::Error;

use crate::xprec::DoubleDouble;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error(
        "quadrature did not reach tolerance after {subdivisions} subdivisions \
         (estimate {estimate}, error bound {error_bound})"
    )]
    NotConverged {
        estimate: f64,
        error_bound: f64,
        subdivisions: usize,
    },
    #[error("branch inconsistency: imaginary residue {residue:e} exceeds {threshold:e}")]
    BranchInconsistency { residue: f64, threshold: f64 },
    #[error("invalid quadrature settings: {0}")]
    InvalidSettings(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Interior breakpoints; `1.0` must be present for Kurepa integrands.
    pub split_points: Vec<f64>,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            max_subdivisions: 4000,
            split_points: vec![1.0],
        }
    }
}

impl QuadratureSettings {
    fn validate(&self) -> Result<(), SpecError> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(SpecError::InvalidSettings("tolerances must be positive".into()));
        }
        if self.max_subdivisions == 0 {
            return Err(SpecError::InvalidSettings("max_subdivisions must be positive".into()));
        }
        if !self.split_points.contains(&1.0) {
            return Err(SpecError::InvalidSettings("split at t = 1 is mandatory".into()));
        }
        Ok(())
    }

    /// Truncation point for `∫_0^∞`: the discarded tail is below `abs_tol / 10`
    /// for every integrand used here.
    fn truncation(&self) -> f64 {
        (10.0 / self.abs_tol).ln() + 4.0
    }
}

/// A quadrature result with its estimated absolute error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error_bound: f64,
    pub subdivisions: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KurepaConstants {
    pub k_prime_0: f64,
    pub k_double_prime_0: f64,
    /// `-k_double_prime_0 / 2`.
    pub alpha: f64,
}

impl KurepaConstants {
    pub fn compute(q: &QuadratureSettings) -> Result<Self, SpecError> {
        let k_prime_0 = kurepa_deriv0(1, q)?.value;
        let k_double_prime_0 = kurepa_deriv0(2, q)?.value;
        Ok(Self {
            k_prime_0,
            k_double_prime_0,
            alpha: -k_double_prime_0 / 2.0,
        })
    }
}

// ---------------------------------------------------------------------------
// Gamma

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * lanczos(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// Γ(x) for `x > 0`.
pub fn gamma_fn(x: f64) -> Result<f64, SpecError> {
    if x.is_nan() || x <= 0.0 {
        return Err(SpecError::Domain(format!("gamma requires x > 0, got {x}")));
    }
    Ok(lanczos(x))
}

// ---------------------------------------------------------------------------
// Adaptive Gauss–Kronrod (7, 15)

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for nodes XGK[1], XGK[3], XGK[5] and the centre.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Clone, Copy, Debug)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * h,
        error: ((kronrod - gauss) * h).abs(),
    }
}

fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    q: &QuadratureSettings,
) -> Result<Estimate, SpecError> {
    let mut cuts = vec![a];
    cuts.extend(q.split_points.iter().copied().filter(|&s| a < s && s < b));
    cuts.push(b);
    let mut heap: BinaryHeap<Segment> = cuts.windows(2).map(|w| gk15(&f, w[0], w[1])).collect();
    let mut subdivisions = 0;
    loop {
        let value: f64 = heap.iter().map(|s| s.value).sum();
        let error: f64 = heap.iter().map(|s| s.error).sum();
        if error <= q.abs_tol.max(q.rel_tol * value.abs()) {
            return Ok(Estimate {
                value,
                error_bound: error,
                subdivisions,
            });
        }
        if subdivisions >= q.max_subdivisions {
            return Err(SpecError::NotConverged {
                estimate: value,
                error_bound: error,
                subdivisions,
            });
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(Segment { error: 0.0, ..worst });
            continue;
        }
        heap.push(gk15(&f, worst.a, mid));
        heap.push(gk15(&f, mid, worst.b));
        subdivisions += 1;
    }
}

// ---------------------------------------------------------------------------
// Kurepa integrands

const SERIES_RADIUS: f64 = 1e-3;

/// `(t^x - 1) / (t - 1)` with the removable singularity at `t = 1` handled
/// by the binomial series in `d = t - 1`.
fn kurepa_kernel(x: f64, t: f64) -> f64 {
    let d = t - 1.0;
    if d.abs() < SERIES_RADIUS {
        // sum_{k>=1} C(x, k) d^(k-1)
        let mut term = x;
        let mut sum = x;
        for k in 1..20 {
            term *= (x - k as f64) / (k + 1) as f64 * d;
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        sum
    } else {
        (x * d.ln_1p()).exp_m1() / d
    }
}

/// `ln(t)^order / (t - 1)` for `order` in {1, 2}, series near `t = 1`.
fn log_kernel(order: u32, t: f64) -> f64 {
    let d = t - 1.0;
    // ln(1 + d) / d
    let ratio = if d.abs() < SERIES_RADIUS {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..20 {
            term *= -d;
            let add = term / (k + 1) as f64;
            sum += add;
            if add.abs() < 1e-18 {
                break;
            }
        }
        sum
    } else {
        d.ln_1p() / d
    };
    match order {
        1 => ratio,
        _ => ratio * ratio * d,
    }
}

fn check_unit(x: f64) -> Result<(), SpecError> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(SpecError::Domain(format!("kurepaK requires 0 <= x <= 1, got {x}")))
    }
}

/// `K(x) = ∫_0^∞ e^{-t} (t^x - 1)/(t - 1) dt` for `0 <= x <= 1`.
pub fn kurepa_k(x: f64, q: &QuadratureSettings) -> Result<Estimate, SpecError> {
    check_unit(x)?;
    q.validate()?;
    if x == 0.0 {
        return Ok(Estimate {
            value: 0.0,
            error_bound: 0.0,
            subdivisions: 0,
        });
    }
    integrate(|t| (-t).exp() * kurepa_kernel(x, t), 0.0, q.truncation(), q)
}

/// `K'(0)` (order 1) or `K''(0)` (order 2) by direct quadrature of
/// `e^{-t} ln(t)^order / (t - 1)`.
pub fn kurepa_deriv0(order: u32, q: &QuadratureSettings) -> Result<Estimate, SpecError> {
    if !(1..=2).contains(&order) {
        return Err(SpecError::Domain(format!("derivative order must be 1 or 2, got {order}")));
    }
    q.validate()?;
    integrate(|t| (-t).exp() * log_kernel(order, t), 0.0, q.truncation(), q)
}

// ---------------------------------------------------------------------------
// Closed form

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const BRANCH_THRESHOLD: f64 = 1e-8;

/// `Ei(x)` for `x > 0` by its power series; adequate for moderate `x`.
pub fn exp_integral_ei(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..200 {
        term *= x / k as f64;
        let add = term / k as f64;
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    EULER_GAMMA + x.ln() + sum
}

/// Value and diagnostic from the closed-form evaluation of K.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosedForm {
    pub value: f64,
    pub imag_residue: f64,
}

/// `K(x) = (Ei(1) + iπ)/e + (-1)^x Γ(1+x) Γ(-x, -1) / e` for `0 < x < 1`,
/// with `(-1)^x = exp(iπx)` and `(-1)^a = exp(iπa)` inside the incomplete gamma.
pub fn kurepa_k_check(x: f64) -> Result<ClosedForm, SpecError> {
    if !(x > 0.0 && x < 1.0) {
        return Err(SpecError::Domain(format!("closed form requires 0 < x < 1, got {x}")));
    }
    let i_pi = Complex64::new(0.0, PI);
    let a = -x;
    // Γ(a) for a in (-1, 0) via Γ(a) = Γ(a + 1) / a.
    let gamma_a = lanczos(a + 1.0) / a;
    // Lower incomplete γ(a, w) = w^a Σ (-w)^k / (k! (a + k)); here -w = 1.
    let mut series = 0.0;
    let mut fact = 1.0;
    for k in 0..40 {
        if k > 0 {
            fact *= k as f64;
        }
        series += 1.0 / (fact * (a + k as f64));
    }
    let w_pow_a = (i_pi * a).exp();
    let upper = Complex64::new(gamma_a, 0.0) - w_pow_a * series;
    let minus_one_pow_x = (i_pi * x).exp();
    let k = (Complex64::new(exp_integral_ei(1.0), 0.0) + i_pi) / E
        + minus_one_pow_x * lanczos(1.0 + x) * upper / E;
    if k.im.abs() > BRANCH_THRESHOLD {
        return Err(SpecError::BranchInconsistency {
            residue: k.im.abs(),
            threshold: BRANCH_THRESHOLD,
        });
    }
    Ok(ClosedForm {
        value: k.re,
        imag_residue: k.im.abs(),
    })
}

// ---------------------------------------------------------------------------
// Double-double route

type Dd = DoubleDouble;

const GL_POINTS: usize = 24;

/// Gauss–Legendre nodes and weights on [-1, 1] in double-double precision.
fn gauss_legendre() -> &'static [(Dd, Dd)] {
    static RULE: OnceLock<Vec<(Dd, Dd)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_POINTS;
        let legendre = |x: Dd| {
            let (mut p0, mut p1) = (Dd::ONE, x);
            for k in 2..=n {
                let p2 = (x * p1 * (2 * k - 1) as f64 - p0 * (k - 1) as f64) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            // (P_n, P_n')
            let dp = (x * p1 - p0) * n as f64 / (x.sqr() - 1.0);
            (p1, dp)
        };
        (0..n)
            .map(|i| {
                let guess = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
                let mut x = Dd::from(guess);
                for _ in 0..8 {
                    let (p, dp) = legendre(x);
                    x -= p / dp;
                }
                let (_, dp) = legendre(x);
                let w = Dd::from(2.0) / ((Dd::ONE - x.sqr()) * dp.sqr());
                (x, w)
            })
            .collect()
    })
}

fn panel_nodes(a: f64, b: f64) -> impl Iterator<Item = (Dd, Dd)> {
    let c = Dd::from(0.5 * (a + b));
    let h = Dd::from(0.5 * (b - a));
    gauss_legendre().iter().map(move |&(x, w)| (c + h * x, h * w))
}

/// Precomputed x-independent parts of the composite rule.
struct ExtRule {
    /// `t in [0, 1]` with `t = e^{-u}`: `(u, weight)`; term is `weight * (-expm1(-x u))`.
    lower: Vec<(Dd, Dd)>,
    /// `t = 1 + s`: `(ln(1 + s), weight)`; term is `weight * expm1(x ln(1 + s))`.
    upper: Vec<(Dd, Dd)>,
}

const LOWER_LIMIT_U: f64 = 76.0;
const LOWER_PANEL: f64 = 4.0;
const UPPER_BREAKS: [f64; 10] = [0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 48.0, 64.0, 80.0];

fn ext_rule() -> &'static ExtRule {
    static RULE: OnceLock<ExtRule> = OnceLock::new();
    RULE.get_or_init(|| {
        let panels = (LOWER_LIMIT_U / LOWER_PANEL) as usize;
        let lower = (0..panels)
            .flat_map(|p| panel_nodes(p as f64 * LOWER_PANEL, (p + 1) as f64 * LOWER_PANEL))
            .map(|(u, w)| {
                let t = (-u).exp();
                let weight = w * t * (-t).exp() / -(-u).exp_m1();
                (u, weight)
            })
            .collect();
        let inv_e = Dd::E.recip();
        let upper = UPPER_BREAKS
            .windows(2)
            .flat_map(|b| panel_nodes(b[0], b[1]))
            .map(|(s, w)| (s.ln_1p(), w * inv_e * (-s).exp() / s))
            .collect();
        ExtRule { lower, upper }
    })
}

/// K(x) in double-double precision for `0 <= x <= 1` (absolute error near 1e-30).
pub fn kurepa_k_ext(x: Dd) -> Result<Dd, SpecError> {
    check_unit(x.to_f64())?;
    if x.to_f64() == 0.0 {
        return Ok(Dd::ZERO);
    }
    let rule = ext_rule();
    let lower: Dd = rule.lower.iter().map(|&(u, w)| w * -(-(x * u)).exp_m1()).sum();
    let upper: Dd = rule.upper.iter().map(|&(l, w)| w * (x * l).exp_m1()).sum();
    Ok(lower + upper)
}

/// K'(0) in double-double precision, from the same rule as [`kurepa_k_ext`].
pub fn kurepa_prime0_ext() -> Dd {
    static KP0: OnceLock<Dd> = OnceLock::new();
    *KP0.get_or_init(|| {
        let rule = ext_rule();
        let lower: Dd = rule.lower.iter().map(|&(u, w)| w * u).sum();
        let upper: Dd = rule.upper.iter().map(|&(l, w)| w * l).sum();
        lower + upper
    })
}
