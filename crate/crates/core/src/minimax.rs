//! Best uniform polynomial approximation (Remez exchange) and sampled
//! infinity norms.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::exec::Exec;
use crate::polycore::{Interval, Polynomial};
use crate::xprec::DoubleDouble;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{0}")]
pub struct EvalError(pub String);

/// A real function of one real variable.
pub trait RealFunction: Send + Sync {
    fn eval(&self, x: f64) -> Result<f64, EvalError>;

    /// Evaluation in double-double arithmetic. The default promotes [`Self::eval`].
    fn eval_ext(&self, x: DoubleDouble) -> Result<DoubleDouble, EvalError> {
        self.eval(x.to_f64()).map(DoubleDouble::from)
    }

    fn label(&self) -> String;
}

struct Closure<F> {
    label: String,
    f: F,
}

impl<F> RealFunction for Closure<F>
where
    F: Fn(f64) -> f64 + Send + Sync,
{
    fn eval(&self, x: f64) -> Result<f64, EvalError> {
        Ok((self.f)(x))
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// Shared, cheaply clonable handle to a [`RealFunction`].
#[derive(Clone)]
pub struct FunctionHandle(Arc<dyn RealFunction>);

impl FunctionHandle {
    pub fn new<R: RealFunction + 'static>(f: R) -> Self {
        Self(Arc::new(f))
    }

    pub fn from_fn<F>(label: &str, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(Closure {
            label: label.to_string(),
            f,
        })
    }

    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        self.0.eval(x)
    }

    pub fn eval_ext(&self, x: DoubleDouble) -> Result<DoubleDouble, EvalError> {
        self.0.eval_ext(x)
    }

    pub fn label(&self) -> String {
        self.0.label()
    }

    /// Evaluates and rejects non-finite values.
    fn eval_finite(&self, x: f64) -> Result<f64, MinimaxError> {
        match self.eval(x) {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(v) => Err(MinimaxError::EvaluationFailure {
                x,
                message: format!("non-finite value {v}"),
            }),
            Err(e) => Err(MinimaxError::EvaluationFailure { x, message: e.0 }),
        }
    }
}

impl fmt::Debug for FunctionHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FunctionHandle({})", self.label())
    }
}

#[derive(Debug, Error, Clone)]
pub enum MinimaxError {
    #[error("evaluation failure at x = {x}: {message}")]
    EvaluationFailure { x: f64, message: String },
    #[error("Remez exchange did not converge in {iterations} iterations (best error {})", best.err)]
    NotConverged {
        iterations: usize,
        best: Box<MinimaxResult>,
    },
    #[error("Remez system is singular")]
    Singular,
    #[error("could not find {needed} alternating extrema of the error")]
    Degenerate { needed: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RemezOptions {
    pub leveling_tol: f64,
    pub max_iter: usize,
    pub grid_points: usize,
    pub exec: Exec,
}

impl Default for RemezOptions {
    fn default() -> Self {
        Self {
            leveling_tol: 1e-3,
            max_iter: 50,
            grid_points: 4097,
            exec: Exec::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinimaxResult {
    pub poly: Polynomial,
    /// Largest |residual| on the final reference.
    pub err: f64,
    pub reference: Vec<f64>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

/// Best approximation of `f` on `iv` by a polynomial of degree at most `degree`.
pub fn remez_minimax(
    f: &FunctionHandle,
    iv: &Interval,
    degree: usize,
    opts: &RemezOptions,
) -> Result<MinimaxResult, MinimaxError> {
    let n = degree + 2;
    let grid = iv.uniform_grid(opts.grid_points.max(n * 8) - 1);
    let values = eval_grid(f, &grid, opts.exec)?;
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let exact_floor = 64.0 * f64::EPSILON * scale;

    let mid = iv.midpoint();
    let half = 0.5 * iv.width();
    let mut reference: Vec<f64> = (0..n)
        .map(|i| {
            if i == 0 {
                iv.lo()
            } else if i == n - 1 {
                iv.hi()
            } else {
                mid - half * (std::f64::consts::PI * i as f64 / (n - 1) as f64).cos()
            }
        })
        .collect();

    let mut best: Option<MinimaxResult> = None;
    for iter in 1..=opts.max_iter {
        let ref_values = reference
            .iter()
            .map(|&x| f.eval_finite(x))
            .collect::<Result<Vec<_>, _>>()?;
        let poly = solve_reference(iv, degree, &reference, &ref_values)?;

        let err_at = |x: f64| f.eval_finite(x).map(|v| v - poly.eval(x));
        let grid_err: Vec<f64> = values.iter().zip(&grid).map(|(v, &x)| v - poly.eval(x)).collect();
        let max_grid = grid_err.iter().fold(0.0f64, |m, e| m.max(e.abs()));

        if max_grid <= exact_floor {
            let residuals = reference.iter().map(|&x| err_at(x)).collect::<Result<Vec<_>, _>>()?;
            return Ok(MinimaxResult {
                poly,
                err: max_grid,
                reference,
                residuals,
                iterations: iter,
            });
        }

        let (new_ref, residuals) = exchange(&grid, &grid_err, &reference, &err_at, n)?;
        let max_r = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        let min_r = residuals.iter().fold(f64::INFINITY, |m, r| m.min(r.abs()));
        let candidate = MinimaxResult {
            poly,
            err: max_r,
            reference: new_ref.clone(),
            residuals,
            iterations: iter,
        };
        if max_r / min_r - 1.0 <= opts.leveling_tol {
            return Ok(candidate);
        }
        if best.as_ref().is_none_or(|b| candidate.err < b.err) {
            best = Some(candidate);
        }
        reference = new_ref;
    }
    Err(MinimaxError::NotConverged {
        iterations: opts.max_iter,
        best: Box::new(best.expect("at least one iteration")),
    })
}

fn eval_grid(f: &FunctionHandle, grid: &[f64], exec: Exec) -> Result<Vec<f64>, MinimaxError> {
    exec.map(grid, |&x| f.eval_finite(x)).into_iter().collect()
}

/// Solves for the polynomial that levels the error on `reference`.
fn solve_reference(
    iv: &Interval,
    degree: usize,
    reference: &[f64],
    values: &[f64],
) -> Result<Polynomial, MinimaxError> {
    let n = degree + 2;
    let to_s = |x: f64| (2.0 * x - iv.lo() - iv.hi()) / iv.width();
    let a = DMatrix::from_fn(n, n, |i, j| {
        if j == n - 1 {
            if i % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        } else {
            chebyshev_t(j, to_s(reference[i]))
        }
    });
    let b = DVector::from_column_slice(values);
    let sol = a.lu().solve(&b).ok_or(MinimaxError::Singular)?;
    let cheb: Vec<f64> = sol.iter().take(degree + 1).copied().collect();
    let in_s = chebyshev_to_monomial(&cheb);
    let scale = 2.0 / iv.width();
    let shift = -(iv.lo() + iv.hi()) / iv.width();
    Ok(in_s.compose_affine(scale, shift))
}

fn chebyshev_t(k: usize, s: f64) -> f64 {
    let (mut t0, mut t1) = (1.0, s);
    if k == 0 {
        return t0;
    }
    for _ in 1..k {
        let t2 = 2.0 * s * t1 - t0;
        t0 = t1;
        t1 = t2;
    }
    t1
}

/// Converts `sum c_k T_k(s)` to monomial coefficients in `s`.
pub fn chebyshev_to_monomial(cheb: &[f64]) -> Polynomial {
    let mut out = vec![0.0; cheb.len().max(1)];
    let mut t_prev = vec![1.0];
    let mut t_cur = vec![0.0, 1.0];
    for (k, &c) in cheb.iter().enumerate() {
        let basis = match k {
            0 => &t_prev,
            1 => &t_cur,
            _ => {
                let mut next = vec![0.0; k + 1];
                for (i, &v) in t_cur.iter().enumerate() {
                    next[i + 1] += 2.0 * v;
                }
                for (i, &v) in t_prev.iter().enumerate() {
                    next[i] -= v;
                }
                t_prev = std::mem::replace(&mut t_cur, next);
                &t_cur
            }
        };
        for (i, &v) in basis.iter().enumerate() {
            out[i] += c * v;
        }
    }
    Polynomial::new(out)
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Maximises `g` on `[a, b]` by golden-section search; returns `(x, g(x))`.
fn golden_max<G>(g: &G, mut a: f64, mut b: f64) -> Result<(f64, f64), MinimaxError>
where
    G: Fn(f64) -> Result<f64, MinimaxError>,
{
    let tol = 1e-13 * (a.abs() + b.abs()).max(1e-300) + 1e-300;
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut gc, mut gd) = (g(c)?, g(d)?);
    for _ in 0..80 {
        if b - a <= tol {
            break;
        }
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - GOLDEN * (b - a);
            gc = g(c)?;
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + GOLDEN * (b - a);
            gd = g(d)?;
        }
    }
    Ok(if gc >= gd { (c, gc) } else { (d, gd) })
}

/// Local extrema of the sampled error, each refined by golden-section search.
/// Returns `(x, e(x))` sorted by `x`.
fn refined_extrema<G>(grid: &[f64], err: &[f64], err_at: &G) -> Result<Vec<(f64, f64)>, MinimaxError>
where
    G: Fn(f64) -> Result<f64, MinimaxError>,
{
    let last = grid.len() - 1;
    let mut out = Vec::new();
    for i in 0..=last {
        let e = err[i];
        let sign = if e >= 0.0 { 1.0 } else { -1.0 };
        let left = if i > 0 { sign * err[i - 1] } else { f64::NEG_INFINITY };
        let right = if i < last { sign * err[i + 1] } else { f64::NEG_INFINITY };
        let here = sign * e;
        if here < left || here < right || (here == left && i > 0) {
            continue;
        }
        let (mut x, mut v) = (grid[i], e);
        if i > 0 && i < last {
            let (xr, sr) = golden_max(&|t| err_at(t).map(|v| sign * v), grid[i - 1], grid[i + 1])?;
            if sr > here {
                x = xr;
                v = sign * sr;
            }
        }
        out.push((x, v));
    }
    Ok(out)
}

/// Builds the next reference: alternating extrema of the error, trimmed to `n`.
fn exchange<G>(
    grid: &[f64],
    grid_err: &[f64],
    reference: &[f64],
    err_at: &G,
    n: usize,
) -> Result<(Vec<f64>, Vec<f64>), MinimaxError>
where
    G: Fn(f64) -> Result<f64, MinimaxError>,
{
    let mut cands = refined_extrema(grid, grid_err, err_at)?;
    for &x in reference {
        cands.push((x, err_at(x)?));
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0));
    cands.dedup_by(|b, a| b.0 == a.0);

    // Collapse runs of equal sign to their largest member.
    let mut alt: Vec<(f64, f64)> = Vec::with_capacity(cands.len());
    for c in cands {
        match alt.last_mut() {
            Some(last) if (last.1 >= 0.0) == (c.1 >= 0.0) => {
                if c.1.abs() > last.1.abs() {
                    *last = c;
                }
            }
            _ => alt.push(c),
        }
    }

    while alt.len() > n {
        if alt.len() == n + 1 {
            if alt[0].1.abs() < alt[alt.len() - 1].1.abs() {
                alt.remove(0);
            } else {
                alt.pop();
            }
        } else {
            // Dropping an adjacent pair keeps the signs alternating.
            let i = (0..alt.len() - 1)
                .min_by(|&i, &j| {
                    let wi = alt[i].1.abs().min(alt[i + 1].1.abs());
                    let wj = alt[j].1.abs().min(alt[j + 1].1.abs());
                    wi.total_cmp(&wj)
                })
                .expect("len > 1");
            // An end point can be dropped alone when its neighbour pair is larger.
            let end_first = alt[0].1.abs();
            let end_last = alt[alt.len() - 1].1.abs();
            let pair = alt[i].1.abs().min(alt[i + 1].1.abs());
            if end_first.min(end_last) < pair {
                if end_first < end_last {
                    alt.remove(0);
                } else {
                    alt.pop();
                }
            } else {
                alt.drain(i..=i + 1);
            }
        }
    }
    if alt.len() < n {
        return Err(MinimaxError::Degenerate { needed: n });
    }
    Ok(alt.into_iter().unzip())
}

/// Sampled estimate of `max |f - p|` over `iv`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormEstimate {
    /// A lower bound of the true norm: it is attained at `argmax`.
    pub lower_bound: f64,
    pub argmax: f64,
}

const INFNORM_MIN_POINTS: usize = 4097;
const INFNORM_REFINED: usize = 8;

/// Dense sampling (at least 4097 points) plus golden-section refinement of the
/// largest local maxima of `|f - p|`.
pub fn infnorm(f: &FunctionHandle, p: &Polynomial, iv: &Interval) -> Result<NormEstimate, MinimaxError> {
    infnorm_with(f, p, iv, INFNORM_MIN_POINTS, Exec::default())
}

pub fn infnorm_with(
    f: &FunctionHandle,
    p: &Polynomial,
    iv: &Interval,
    points: usize,
    exec: Exec,
) -> Result<NormEstimate, MinimaxError> {
    let grid = iv.uniform_grid(points.max(INFNORM_MIN_POINTS) - 1);
    let values = eval_grid(f, &grid, exec)?;
    let abs_err: Vec<f64> = values.iter().zip(&grid).map(|(v, &x)| (v - p.eval(x)).abs()).collect();
    let last = grid.len() - 1;
    let mut peaks: Vec<usize> = (0..=last)
        .filter(|&i| {
            (i == 0 || abs_err[i] >= abs_err[i - 1]) && (i == last || abs_err[i] >= abs_err[i + 1])
        })
        .collect();
    peaks.sort_by(|&i, &j| abs_err[j].total_cmp(&abs_err[i]));
    peaks.truncate(INFNORM_REFINED);

    let mut best = NormEstimate {
        lower_bound: abs_err[peaks[0]],
        argmax: grid[peaks[0]],
    };
    let g = |x: f64| f.eval_finite(x).map(|v| (v - p.eval(x)).abs());
    for &i in &peaks {
        let (lo, hi) = (grid[i.saturating_sub(1)], grid[(i + 1).min(last)]);
        let (x, v) = golden_max(&g, lo, hi)?;
        if v > best.lower_bound {
            best = NormEstimate {
                lower_bound: v,
                argmax: x,
            };
        }
    }
    Ok(best)
}

/// Quality gate on a Remez result.
#[derive(Clone, Debug, PartialEq)]
pub struct EquioscillationReport {
    /// Length of the longest run of sign-alternating residuals.
    pub alternation_count: usize,
    /// `max |residual| / min |residual|`.
    pub spread_ratio: f64,
    pub pass: bool,
}

pub fn equioscillation_report(r: &MinimaxResult, leveling_tol: f64) -> EquioscillationReport {
    let mut longest = usize::from(!r.residuals.is_empty());
    let mut run = longest;
    for w in r.residuals.windows(2) {
        if w[0] * w[1] < 0.0 {
            run += 1;
        } else {
            run = 1;
        }
        longest = longest.max(run);
    }
    let max = r.residuals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = r.residuals.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let spread_ratio = if min > 0.0 { max / min } else { f64::INFINITY };
    let strictly_increasing = r.reference.windows(2).all(|w| w[0] < w[1]);
    EquioscillationReport {
        alternation_count: longest,
        spread_ratio,
        pass: !r.residuals.is_empty()
            && longest == r.residuals.len()
            && r.residuals.len() == r.reference.len()
            && r.residuals.len() >= r.poly.degree() + 2
            && strictly_increasing
            && spread_ratio <= 1.0 + leveling_tol,
    }
}
