//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ineqcert::casebook::{gap_job, run_case, Bound, GAMMA_P5};
use ineqcert::exprlang::{parse_expr, ExprFunction, Precision};
use ineqcert::minimax::{equioscillation_report, remez_minimax, FunctionHandle, MinimaxError, RemezOptions};
use ineqcert::polycore::{assert_positive_on, Interval, Polynomial};
use ineqcert::prover::{prove_nonneg, verify_certificate, verify_json, ProofCertificate, ProofJob, Verdict};
use ineqcert::specfun::{gamma_fn, kurepa_deriv0, kurepa_k, kurepa_k_check, QuadratureSettings};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t <= limit, || format!("took {t:.1?}, limit {limit:?}"))
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ineqcert"))
}

fn casebook_exit(name: &str) -> Result<(), String> {
    let out = binary().args(["casebook", name]).output().map_err(|e| e.to_string())?;
    ensure(out.status.code() == Some(0), || {
        format!("`casebook {name}` exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stdout))
    })
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let q = QuadratureSettings::default();
    let k1 = kurepa_deriv0(1, &q).map_err(|e| e.to_string())?.value;
    let alpha = -kurepa_deriv0(2, &q).map_err(|e| e.to_string())?.value / 2.0;
    ensure((k1 - 1.432205735).abs() <= 1e-8, || format!("K'(0) = {k1:.17e}"))?;
    ensure((alpha - 0.963321189).abs() <= 1e-8, || format!("-K''(0)/2 = {alpha:.17e}"))?;
    within_time(start, Duration::from_secs(10))?;
    Ok(format!("K'(0) = {k1:.12}, -K''(0)/2 = {alpha:.12}"))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let r = run_case("theorem1_kurepa").map_err(|e| e.to_string())?;
    let cert = &r.jobs[0].certificate;
    let eps = cert.eps_raw.ok_or("no eps_raw")?;
    ensure(cert.verdict == Verdict::Proved, || format!("verdict {}", cert.verdict))?;
    ensure(cert.job.degree == 1, || "degree is not 1".into())?;
    ensure((eps / 0.04232 - 1.0).abs() <= 0.10, || format!("eps_raw = {eps:.17e}"))?;
    let v = verify_certificate(cert, 4096).map_err(|e| e.to_string())?;
    ensure(v.passed(), || v.to_string())?;
    ensure(r.pass, || r.summary())?;
    within_time(start, Duration::from_secs(60))?;
    casebook_exit("theorem1_kurepa")?;
    Ok(format!("proved, eps_raw = {eps:.6e}, verified with 4096 fresh points"))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let r = run_case("theorem2_arcsin").map_err(|e| e.to_string())?;
    let cert = &r.jobs[0].certificate;
    let eps = cert.eps_raw.ok_or("no eps_raw")?;
    ensure(cert.verdict == Verdict::Proved, || format!("verdict {}", cert.verdict))?;
    ensure((cert.job.a, cert.job.b, cert.job.n, cert.job.m) == (0.0, std::f64::consts::FRAC_PI_2, 3, 1), || {
        "not the t-domain profile".into()
    })?;
    ensure((eps / 1.408e-5 - 1.0).abs() <= 0.10, || format!("eps_raw = {eps:.17e}"))?;

    // Limits without hints, against the closed forms evaluated in f64.
    let pi = std::f64::consts::PI;
    let r2 = std::f64::consts::SQRT_2;
    let alpha = ((4.0 + r2) * pi - 12.0 * r2) / ((24.0 - 12.0 * r2) * pi * pi);
    let beta = ((16.0 * r2 - 16.0) + (8.0 - 4.0 * r2) * pi - r2 * pi * pi) / ((2.0 * r2 - 2.0) * pi.powi(3));
    let bare = gap_job(Bound::Asin, Bound::New);
    let norm = ineqcert::prover::normalize_job(&bare, ineqcert::normalize::LimitStrategy::Richardson)
        .map_err(|e| e.to_string())?;
    let (ra, rb) = (norm.alpha.value.to_f64(), norm.beta.value.to_f64());
    ensure((ra / alpha - 1.0).abs() <= 1e-6, || format!("Richardson alpha {ra:.17e} vs {alpha:.17e}"))?;
    ensure((rb / beta - 1.0).abs() <= 1e-6, || format!("Richardson beta {rb:.17e} vs {beta:.17e}"))?;
    ensure(r.pass, || r.summary())?;
    within_time(start, Duration::from_secs(60))?;
    casebook_exit("theorem2_arcsin")?;
    Ok(format!(
        "proved, eps_raw = {eps:.6e}, alpha rel err {:.1e}, beta rel err {:.1e}",
        (ra / alpha - 1.0).abs(),
        (rb / beta - 1.0).abs()
    ))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    for name in ["lemma_gamma_upper", "lemma_gamma_lower"] {
        let r = run_case(name).map_err(|e| e.to_string())?;
        let c = &r.jobs[0].certificate;
        ensure(c.job.n == 0 && c.job.m == 0, || format!("{name}: root orders"))?;
        ensure(c.verdict == Verdict::Proved, || format!("{name}: verdict {}", c.verdict))?;
    }
    let p5 = Polynomial::new(GAMMA_P5.to_vec());
    let grid = Interval::new(0.0, 1.0).unwrap().uniform_grid(4095);
    let dev = grid
        .iter()
        .map(|&x| (gamma_fn(x + 1.0).unwrap() - p5.eval(x)).abs())
        .fold(0.0, f64::max);
    ensure(grid.len() == 4096 && dev <= 5e-5, || format!("max |Gamma(x+1) - P5| = {dev:.3e}"))?;
    within_time(start, Duration::from_secs(10))?;
    Ok(format!("both bounds proved, max |Gamma(x+1) - P5| = {dev:.3e}"))
}

fn random_function(rng: &mut ChaCha8Rng, i: usize) -> (String, Interval) {
    let lo: f64 = rng.gen_range(-1.0..0.5);
    let hi = lo + rng.gen_range(0.3..2.0);
    let c = |rng: &mut ChaCha8Rng| format!("{:.6}", rng.gen_range(-2.0..2.0));
    let text = match i % 5 {
        0 => {
            // Above the largest fitted degree, so no fit is exact.
            let deg = rng.gen_range(5..9);
            (0..=deg).map(|k| format!("({})*x^{k}", c(rng))).collect::<Vec<_>>().join(" + ")
        }
        1 => format!("sin({}*x) + ({})*exp(x)", rng.gen_range(0.5..4.0), c(rng)),
        2 => format!("gamma(x + {:.4}) + ({})*x", rng.gen_range(1.2..3.0) - lo, c(rng)),
        3 => {
            // K is only defined on [0, 1]; map the interval inside it.
            let c0: f64 = rng.gen_range(0.05..0.4);
            let c1 = (1.0 - c0) * rng.gen_range(0.5..0.95) / (hi - lo);
            format!("kurepaK({c0:.4} + {c1:.4}*(x - ({lo})))")
        }
        _ => format!("asin(({} - x)/{:.4}) * sqrt(x + {:.4})", lo + (hi - lo) / 2.0, 0.51 * (hi - lo) + 0.5, 1.5 - lo),
    };
    (text, Interval::new(lo, hi).unwrap())
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    let opts = RemezOptions {
        leveling_tol: 1e-3,
        ..RemezOptions::default()
    };
    let (mut converged, mut skipped) = (0, 0);
    for i in 0..25 {
        let (text, iv) = random_function(&mut rng, i);
        let f = ExprFunction::handle(parse_expr(&text).map_err(|e| format!("{text}: {e}"))?, Precision::Double);
        for degree in 0..=4 {
            match remez_minimax(&f, &iv, degree, &opts) {
                Ok(r) => {
                    let rep = equioscillation_report(&r, opts.leveling_tol);
                    ensure(rep.pass && rep.alternation_count >= degree + 2 && rep.spread_ratio <= 1.001, || {
                        format!("{text} on [{}, {}], degree {degree}: {rep:?}", iv.lo(), iv.hi())
                    })?;
                    converged += 1;
                }
                Err(MinimaxError::NotConverged { .. }) => skipped += 1,
                Err(e) => return Err(format!("{text}, degree {degree}: {e}")),
            }
        }
    }
    ensure(converged >= 100, || format!("only {converged} of 125 fits converged"))?;

    // |x| on [-1, 1], degree 1, against a brute-force search over (c0, c1).
    let abs = FunctionHandle::from_fn("|x|", |x: f64| x.abs());
    let iv = Interval::new(-1.0, 1.0).unwrap();
    let r = remez_minimax(&abs, &iv, 1, &opts).map_err(|e| e.to_string())?;
    let xs = iv.uniform_grid(400);
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..=200 {
        for j in 0..=200 {
            let (c0, c1) = (i as f64 / 200.0, -0.5 + j as f64 / 200.0);
            let e = xs.iter().map(|&x| (x.abs() - c0 - c1 * x).abs()).fold(0.0, f64::max);
            if e < best.0 {
                best = (e, c0, c1);
            }
        }
    }
    let c = r.poly.coeffs().to_vec();
    let c1 = c.get(1).copied().unwrap_or(0.0);
    ensure((c[0] - best.1).abs() <= 1e-3 && (c1 - best.2).abs() <= 1e-3 && (r.err - best.0).abs() <= 1e-3, || {
        format!("|x| fit {c:?} err {} vs grid search {best:?}", r.err)
    })?;
    Ok(format!(
        "{converged} converged fits equioscillate ({skipped} not converged); |x| optimum {:.4} + {:.4}x, err {:.4}",
        c[0], c1, r.err
    ))
}

/// Minimum of `p` on `iv`: the best of a dense grid, refined by golden
/// section around every grid-local minimum.
fn oracle_min(p: &Polynomial, iv: &Interval, points: usize) -> f64 {
    let xs = iv.uniform_grid(points - 1);
    let ys: Vec<f64> = xs.iter().map(|&x| p.eval(x)).collect();
    let mut best = ys.iter().copied().fold(f64::INFINITY, f64::min);
    for i in 1..xs.len() - 1 {
        if ys[i] <= ys[i - 1] && ys[i] <= ys[i + 1] {
            let (mut a, mut b) = (xs[i - 1], xs[i + 1]);
            let g = 0.618_033_988_749_894_8;
            for _ in 0..80 {
                let (u, v) = (b - g * (b - a), a + g * (b - a));
                if p.eval(u) < p.eval(v) {
                    b = v;
                } else {
                    a = u;
                }
            }
            best = best.min(p.eval(0.5 * (a + b)));
        }
    }
    best
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    let (mut certified, mut near_zero) = (0, 0);
    for case in 0..100 {
        let lo: f64 = rng.gen_range(-3.0..2.0);
        let iv = Interval::new(lo, lo + rng.gen_range(0.05..3.0)).unwrap();
        let deg = rng.gen_range(0..=6);
        let mut p = Polynomial::new((0..=deg).map(|_| rng.gen_range(-2.0..2.0)).collect());
        // Shift so the minimum sits at a chosen height, often close to zero.
        let target = match case % 4 {
            0 => rng.gen_range(-1.0..1.0),
            1 => rng.gen_range(-1e-6..1e-6),
            2 => rng.gen_range(1e-12..1e-9),
            _ => -rng.gen_range(1e-12..1e-9),
        };
        let m0 = oracle_min(&p, &iv, 100_000);
        p = p.add(&Polynomial::constant(target - m0));
        let slack = if case % 3 == 0 { rng.gen_range(0.0..0.01) } else { 0.0 };
        let ev = assert_positive_on(&p, &iv, slack).map_err(|e| e.to_string())?;
        let min = oracle_min(&p, &iv, 100_000) - slack;
        // Rounding error of the oracle's own Horner evaluation.
        let reach = iv.lo().abs().max(iv.hi().abs());
        let horner: f64 = p.coeffs().iter().enumerate().map(|(k, c)| c.abs() * reach.powi(k as i32)).sum();
        let noise = 4.0 * (deg as f64 + 2.0) * f64::EPSILON * (horner + slack);
        if ev.certified {
            certified += 1;
            ensure(min > -noise, || format!("case {case}: certified but oracle minimum {min:e}"))?;
        } else if min > 0.0 {
            near_zero += 1;
            ensure(min <= ev.rational_slack + noise, || {
                format!("case {case}: not certified, oracle minimum {min:e}, rational_slack {:e}", ev.rational_slack)
            })?;
        }
    }
    Ok(format!("100 polynomials agree with the grid oracle ({certified} certified, {near_zero} borderline refusals)"))
}

fn criterion_7() -> Outcome {
    let q = QuadratureSettings::default();
    let oracle: serde_json::Value =
        serde_json::from_str(include_str!("fixtures/kurepa_oracle.json")).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for i in 1..=9 {
        let x = i as f64 / 10.0;
        let k = kurepa_k(x, &q).map_err(|e| e.to_string())?.value;
        let c = kurepa_k_check(x).map_err(|e| e.to_string())?.value;
        let want: f64 = oracle["K"][format!("0.{i}")].as_str().ok_or("missing oracle value")?.parse().unwrap();
        ensure((k - c).abs() <= 1e-8, || format!("x = {x}: quadrature {k} vs closed form {c}"))?;
        ensure((k - want).abs() <= 1e-8 && (c - want).abs() <= 1e-8, || format!("x = {x}: oracle {want}"))?;
        worst = worst.max((k - c).abs());
    }
    Ok(format!("max |quadrature - closed form| = {worst:.2e} over x = 0.1..0.9"))
}

fn criterion_8() -> Outcome {
    // (expression, a, b, n, m, rejected at an endpoint)
    let h = std::f64::consts::FRAC_PI_2;
    let reversed = |lo: Bound, hi: Bound| {
        let j = gap_job(lo, hi);
        let neg = format!("-({})", j.expr);
        (neg, j.a, j.b, j.n, j.m, true)
    };
    let jobs: Vec<(String, f64, f64, u32, u32, bool)> = vec![
        ("-x".into(), 0.0, 1.0, 1, 0, true),
        ("-x - x^2".into(), 0.0, 2.0, 1, 0, true),
        ("x - 1".into(), 0.0, 1.0, 0, 1, true),
        ("kurepaK(x) - KP0*x".into(), 0.0, 1.0, 2, 0, true),
        ("1.4*x - kurepaK(x)".into(), 0.0, 1.0, 1, 0, true),
        ("gamma(x+1) - (x^2 - 7/4*x + 9/5)".into(), 0.0, 1.0, 0, 0, true),
        ("sin(x) - 1.01*2*x/pi".into(), 0.0, h, 1, 0, true),
        ("(x-0.5)^2 - 0.01".into(), 0.0, 1.0, 0, 0, false),
        reversed(Bound::Asin, Bound::New),
        reversed(Bound::Shafer, Bound::Asin),
    ];
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for (i, (expr, a, b, n, m, endpoint)) in jobs.iter().enumerate() {
        let job = ProofJob::new(expr, *a, *b, *n, *m).with_degree(2);
        let cert = prove_nonneg(&job).map_err(|e| format!("{expr}: {e}"))?;
        ensure(cert.verdict != Verdict::Proved, || format!("{expr} was proved"))?;

        let path = dir.path().join(format!("false{i}.toml"));
        let file = format!("expr = {expr:?}\na = {a:?}\nb = {b:?}\nn = {n}\nm = {m}\ndegree = 2\n");
        std::fs::write(&path, file).map_err(|e| e.to_string())?;
        let status = binary().arg("prove").arg(&path).output().map_err(|e| e.to_string())?.status;
        ensure(status.code() != Some(0), || format!("{expr}: exit 0"))?;
        if *endpoint {
            let w = cert.witness.as_ref().ok_or_else(|| format!("{expr}: no witness"))?;
            ensure(w.x == *a || w.x == *b, || format!("{expr}: witness at {}", w.x))?;
            ensure(status.code() == Some(2), || format!("{expr}: exit {:?}", status.code()))?;
        }
    }
    Ok("10 false inequalities rejected; endpoint-sign rejections exit 2".into())
}

fn reseal(mut c: ProofCertificate) -> ProofCertificate {
    c.digest = c.compute_digest();
    c
}

fn tamper_detected(c: &ProofCertificate, what: &str) -> Result<(), String> {
    match verify_json(&c.to_json(), 512) {
        Ok(r) if r.passed() => Err(format!("tampered {what} went undetected")),
        _ => Ok(()),
    }
}

fn criterion_9() -> Outcome {
    let mut certs = 0;
    for name in ineqcert::casebook::list_cases() {
        let r = run_case(name).map_err(|e| e.to_string())?;
        for j in &r.jobs {
            let c = &j.certificate;
            let back = ProofCertificate::from_json(&c.to_json()).map_err(|e| e.to_string())?;
            ensure(&back == c, || format!("{name}/{}: round trip changed the certificate", j.label))?;
            let v = verify_json(&c.to_json(), 2048).map_err(|e| e.to_string())?;
            ensure(v.passed(), || format!("{name}/{}: {v}", j.label))?;

            let eps_raw = c.eps_raw.unwrap();
            let mut tampered = Vec::new();
            let mut t = c.clone();
            t.eps_cert = Some(c.eps_cert.unwrap() * 0.5);
            tampered.push(("eps_cert", t));
            let mut t = c.clone();
            t.eps_raw = Some(eps_raw * 0.5);
            tampered.push(("eps_raw", t));
            for k in 0..c.poly.as_ref().unwrap().coeffs.len() {
                let mut t = c.clone();
                t.poly.as_mut().unwrap().coeffs[k] += 2.0 * eps_raw;
                tampered.push(("coefficient", t));
            }
            let mut t = c.clone();
            t.job.a = c.job.a + 0.1 * (c.job.b - c.job.a);
            tampered.push(("interval start", t));
            let mut t = c.clone();
            t.job.b = c.job.b - 0.1 * (c.job.b - c.job.a);
            tampered.push(("interval end", t));

            for (what, t) in tampered {
                tamper_detected(&t, what).map_err(|e| format!("{name}/{}: {e}", j.label))?;
                tamper_detected(&reseal(t), what).map_err(|e| format!("{name}/{}: re-sealed {e}", j.label))?;
            }
            certs += 1;
        }
    }
    Ok(format!("{certs} casebook certificates round-trip, verify, and expose tampering"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("Kurepa constants", criterion_1),
        ("Theorem 1 reproduction", criterion_2),
        ("Theorem 2 reproduction", criterion_3),
        ("Lemma reproduction", criterion_4),
        ("Equioscillation property suite", criterion_5),
        ("Positivity oracle equivalence", criterion_6),
        ("Route consistency", criterion_7),
        ("Soundness gate", criterion_8),
        ("Certificate round-trip", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let t = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name} [{t:.1?}] {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name} [{t:.1?}] {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
