//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use klchernoff::gkn::{
    eval_g2n_gamma_form, exact_coefficients, recurrence_residual, ExperimentShape, GknEvaluator,
};
use klchernoff::inversion::unseen_report;
use klchernoff::oracle::{gkn_from_definition, mc_tail, mgf_exact, tail_exact, ProbVector};
use klchernoff::tail_bounds::{ln_mardia_factor, ln_types_factor, Method, TailBounds};
use klchernoff::verify::{t_grid, test_points};
use klchernoff::FrequencyTable;

const SEED: u64 = 0;

const TABLE_LIMIT: Duration = Duration::from_secs(1);
const BUTTERFLY_LIMIT: Duration = Duration::from_secs(30);
const BUTTERFLY_T: f64 = 481.20;
const BUTTERFLY_T_TOL: f64 = 0.5;
const BUTTERFLY_UPPER: f64 = 0.211;
const BUTTERFLY_UPPER_TOL: f64 = 0.001;
const BUTTERFLY_ALPHA: f64 = 0.05;

const JENSEN_LIMIT: Duration = Duration::from_secs(120);
const JENSEN_TOL: f64 = 1e-12;
const P_SAMPLES: usize = 25;
const LAMBDA_POINTS: usize = 11;
const SMALL_MAX_K: usize = 4;
const SMALL_MAX_N: usize = 8;

const P_SPREAD_TOL: f64 = 1e-10;

const RECURRENCE_TOL: f64 = 1e-10;
const RECURRENCE_MAX_K: usize = 10;
const RECURRENCE_MAX_N: usize = 30;

const T_POINTS: usize = 20;
/// Relative slack when two bounds can coincide in exact arithmetic.
const DOMINANCE_TOL: f64 = 1e-12;

const COMB_MAX_K: usize = 50;
const COMB_MAX_N: usize = 200;
const SQRT_N: usize = 1_000_000;
const SQRT_TOL: f64 = 0.06;

const CORRECTION_LIMIT: Duration = Duration::from_secs(300);
const CORRECTION_CASES: [(usize, f64); 3] = [(2, 3.0), (3, 5.0), (6, 8.0)];
const CORRECTION_N_MIN: f64 = 200.0;
const CORRECTION_N_MAX: f64 = 2e4;
const CORRECTION_N_POINTS: usize = 16;
const CORRECTION_TOL: f64 = 0.05;

const NUMERATOR_N: usize = 100_000;
const NUMERATOR_K: [usize; 3] = [2, 3, 6];
const NUMERATOR_LAMBDA: [f64; 3] = [0.3, 0.5, 0.8];
const NUMERATOR_TOL: f64 = 0.02;

const GAMMA_FORM_TOL: f64 = 1e-10;

const SWEEP_K: usize = 6;
const SWEEP_N: usize = 100;
const SWEEP_T_MAX: f64 = 30.0;
const SWEEP_POINTS: usize = 200;

const MC_SAMPLES: u64 = 100_000;
const MC_SIGMAS: f64 = 4.0;

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn shape(k: usize, n: usize) -> ExperimentShape {
    ExperimentShape::new(k, n).expect("valid shape")
}

fn unit_grid(points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| i as f64 / (points - 1) as f64)
        .collect()
}

fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Published coefficient table, indexed `[k - 2][n - 1]`.
fn published_coefficients() -> Vec<Vec<Vec<BigRational>>> {
    let row = |entries: &[(i64, i64)]| {
        entries
            .iter()
            .map(|&(a, b)| ratio(a, b))
            .collect::<Vec<_>>()
    };
    vec![
        vec![
            row(&[(1, 1), (1, 1)]),
            row(&[(1, 1), (1, 1), (1, 2)]),
            row(&[(1, 1), (1, 1), (2, 3), (2, 9)]),
            row(&[(1, 1), (1, 1), (3, 4), (3, 8), (3, 32)]),
        ],
        vec![
            row(&[(1, 1), (2, 1)]),
            row(&[(1, 1), (2, 1), (3, 2)]),
            row(&[(1, 1), (2, 1), (2, 1), (8, 9)]),
            row(&[(1, 1), (2, 1), (9, 4), (3, 2), (15, 32)]),
        ],
        vec![
            row(&[(1, 1), (3, 1)]),
            row(&[(1, 1), (3, 1), (3, 1)]),
            row(&[(1, 1), (3, 1), (4, 1), (20, 9)]),
            row(&[(1, 1), (3, 1), (9, 2), (15, 4), (45, 32)]),
        ],
    ]
}

fn c1_coefficient_table() -> Outcome {
    let expected = published_coefficients();
    let start = Instant::now();
    let mut mismatches = Vec::new();
    for k in 2..=4 {
        for n in 1..=4 {
            let ev = GknEvaluator::new(shape(k, n));
            let got = ev.exact_coeffs().map(<[_]>::to_vec);
            if got.as_deref() != Some(&expected[k - 2][n - 1][..]) {
                mismatches.push(format!("(k={k}, n={n})"));
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        mismatches.is_empty() && elapsed < TABLE_LIMIT,
        format!(
            "12 polynomials, {} mismatched {:?}, {:.3}s",
            mismatches.len(),
            mismatches,
            elapsed.as_secs_f64()
        ),
    )
}

fn c2_butterfly() -> Outcome {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/butterfly.csv");
    let start = Instant::now();
    let table = match std::fs::File::open(&path)
        .map_err(|e| e.to_string())
        .and_then(|f| FrequencyTable::from_csv_reader(f).map_err(|e| e.to_string()))
    {
        Ok(t) => t,
        Err(e) => return Outcome::new(false, format!("fixture: {e}")),
    };
    let r = match unseen_report(&table, BUTTERFLY_ALPHA) {
        Ok(r) => r,
        Err(e) => return Outcome::new(false, e.to_string()),
    };
    let elapsed = start.elapsed();
    let pass = r.k == 436
        && r.n == 2029
        && (r.ci.t_used - BUTTERFLY_T).abs() <= BUTTERFLY_T_TOL
        && (r.ci.upper - BUTTERFLY_UPPER).abs() <= BUTTERFLY_UPPER_TOL
        && elapsed < BUTTERFLY_LIMIT;
    Outcome::new(
        pass,
        format!(
            "k={} n={} t={:.4} upper={:.5}, {:.2}s",
            r.k,
            r.n,
            r.ci.t_used,
            r.ci.upper,
            elapsed.as_secs_f64()
        ),
    )
}

/// Dirichlet points (plus one boundary point) for every small shape.
fn small_shapes_with_points() -> Vec<(ExperimentShape, Vec<ProbVector>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut out = Vec::new();
    for k in 2..=SMALL_MAX_K {
        for n in 1..=SMALL_MAX_N {
            out.push((shape(k, n), test_points(k, P_SAMPLES, &mut rng)));
        }
    }
    out
}

fn c3_jensen(cases: &[(ExperimentShape, Vec<ProbVector>)]) -> Outcome {
    let start = Instant::now();
    let lambdas = unit_grid(LAMBDA_POINTS);
    let (mut checked, mut worst, mut failures) = (0u64, f64::NEG_INFINITY, 0u64);
    for (s, ps) in cases {
        let ev = GknEvaluator::new(*s);
        for &l in &lambdas {
            let g = ev.eval(l).expect("lambda in range");
            for p in ps {
                let mgf = mgf_exact(*s, p, l).expect("small shape");
                checked += 1;
                worst = worst.max(mgf / g - 1.0);
                if mgf > g * (1.0 + JENSEN_TOL) {
                    failures += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        failures == 0 && elapsed < JENSEN_LIMIT,
        format!(
            "{checked} checks, {failures} violations, max mgf/G - 1 = {worst:.2e}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn c4_p_independence(cases: &[(ExperimentShape, Vec<ProbVector>)]) -> Outcome {
    let lambdas = unit_grid(LAMBDA_POINTS);
    let (mut worst_spread, mut worst_vs_poly) = (0.0f64, 0.0f64);
    let mut boundary_points = 0;
    for (s, ps) in cases {
        boundary_points += ps.iter().filter(|p| p.as_slice().contains(&0.0)).count();
        let ev = GknEvaluator::new(*s);
        for &l in &lambdas {
            let vals: Vec<f64> = ps
                .iter()
                .map(|p| gkn_from_definition(*s, p, l).expect("small shape"))
                .collect();
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            worst_spread = worst_spread.max((hi - lo) / lo);
            let g = ev.eval(l).expect("lambda in range");
            worst_vs_poly = worst_vs_poly.max(rel(hi, g).max(rel(lo, g)));
        }
    }
    Outcome::new(
        worst_spread < P_SPREAD_TOL && worst_vs_poly < P_SPREAD_TOL && boundary_points > 0,
        format!(
            "max relative spread {worst_spread:.2e}, max deviation from polynomial {worst_vs_poly:.2e}, {boundary_points} boundary points"
        ),
    )
}

fn c5_recurrence() -> Outcome {
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for k in 2..=RECURRENCE_MAX_K {
        for n in 1..=RECURRENCE_MAX_N {
            let ev = GknEvaluator::new(shape(k, n));
            for l in unit_grid(LAMBDA_POINTS) {
                let g = ev.eval(l).expect("lambda in range");
                let r = recurrence_residual(k, n, l).expect("valid shape").abs() / g;
                worst = worst.max(r);
                if (r.is_nan() || r >= RECURRENCE_TOL) && failures.len() < 3 {
                    failures.push(format!("(k={k}, n={n}, lambda={l})"));
                }
            }
        }
    }
    Outcome::new(
        failures.is_empty(),
        format!("max relative residual {worst:.2e} {failures:?}"),
    )
}

fn c6_dominance(cases: &[(ExperimentShape, Vec<ProbVector>)]) -> Outcome {
    let slack = |x: f64| x * (1.0 + DOMINANCE_TOL);
    let (mut checked, mut first_failure) = (0u64, None);
    let mut fail = |what: String| {
        if first_failure.is_none() {
            first_failure = Some(what);
        }
    };
    for (s, ps) in cases {
        let b = TailBounds::new(*s).expect("valid shape");
        let k_minus_one = s.k() as f64 - 1.0;
        for t in t_grid(&b, T_POINTS) {
            let exact = b.exact(t).expect("t > 0").value;
            let lambda_one = b.lambda_one(t).expect("t > 0").value;
            let types = b.types(t).expect("t > 0").value;
            let mut above = vec![("lambda_one", lambda_one)];
            if t > k_minus_one {
                above.push(("corrected", b.corrected(t).expect("t > k-1").value));
                above.push(("uncorrected", b.uncorrected(t).expect("t > k-1").value));
            }
            for (name, v) in above {
                checked += 1;
                if exact > slack(v) {
                    fail(format!(
                        "k={} n={} t={t}: exact {exact} > {name} {v}",
                        s.k(),
                        s.n()
                    ));
                }
            }
            checked += 1;
            if lambda_one > slack(types) {
                fail(format!(
                    "k={} n={} t={t}: lambda_one {lambda_one} > types {types}",
                    s.k(),
                    s.n()
                ));
            }
            for p in ps {
                let tail = tail_exact(*s, p, t).expect("small shape");
                checked += 1;
                if tail > slack(exact) {
                    fail(format!(
                        "k={} n={} t={t}: tail {tail} > exact {exact}",
                        s.k(),
                        s.n()
                    ));
                }
            }
        }
    }
    let pass = first_failure.is_none();
    Outcome::new(
        pass,
        format!(
            "{checked} comparisons{}",
            first_failure
                .map(|f| format!(", first failure: {f}"))
                .unwrap_or_default()
        ),
    )
}

/// `G_{k,n}(1) < C_T(k,n)`, decided in exact arithmetic when the floating
/// values are too close to call.
fn g_one_below_types(k: usize, n: usize) -> bool {
    let ln_g = GknEvaluator::new(shape(k, n))
        .ln_eval(1.0)
        .expect("lambda = 1");
    let ln_ct = ln_types_factor(k, n);
    if (ln_g - ln_ct).abs() > 1e-9 * ln_ct.abs().max(1.0) {
        return ln_g < ln_ct;
    }
    let g: BigRational = exact_coefficients(k, n)
        .into_iter()
        .fold(BigRational::zero(), |acc, c| acc + c);
    let mut ct = BigInt::one();
    for i in 1..k {
        ct = ct * BigInt::from(n + i) / BigInt::from(i);
    }
    g < BigRational::from_integer(ct)
}

fn c7_combinatorial() -> Outcome {
    let mut g_fail = Vec::new();
    let mut m_fail = Vec::new();
    for k in 2..=COMB_MAX_K {
        for n in 1..=COMB_MAX_N {
            if !g_one_below_types(k, n) {
                g_fail.push((k, n));
            }
            if ln_mardia_factor(k, n) >= ln_types_factor(k, n) {
                m_fail.push((k, n));
            }
        }
    }
    let ln_g2 = GknEvaluator::new(shape(2, SQRT_N))
        .ln_eval(1.0)
        .expect("lambda = 1");
    let sqrt_ratio = ln_g2 / ln_types_factor(2, SQRT_N);
    let sqrt_ok = (sqrt_ratio - 0.5).abs() <= SQRT_TOL;
    let summarize = |v: &[(usize, usize)]| {
        let max_n = v.iter().map(|&(_, n)| n).max().unwrap_or(0);
        let max_k = v.iter().map(|&(k, _)| k).max().unwrap_or(0);
        format!("{} shapes (all with n <= {max_n}, k <= {max_k})", v.len())
    };
    Outcome::new(
        g_fail.is_empty() && m_fail.is_empty() && sqrt_ok,
        format!(
            "G(1) >= C_T at {}; C_M >= C_T at {}; ln G_2,n(1)/ln C_T = {sqrt_ratio:.4} at n=1e6",
            summarize(&g_fail),
            summarize(&m_fail)
        ),
    )
}

/// Least-squares fit of `y = a + b/n`; returns `a`.
fn fit_limit(ns: &[f64], ys: &[f64]) -> f64 {
    let xs: Vec<f64> = ns.iter().map(|n| 1.0 / n).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    my - sxy / sxx * mx
}

fn c8_correction_asymptotics() -> Outcome {
    let start = Instant::now();
    let ns: Vec<f64> = (0..CORRECTION_N_POINTS)
        .map(|i| {
            let f = i as f64 / (CORRECTION_N_POINTS - 1) as f64;
            (CORRECTION_N_MIN.ln() + f * (CORRECTION_N_MAX / CORRECTION_N_MIN).ln())
                .exp()
                .round()
        })
        .collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, t) in CORRECTION_CASES {
        let kf = k as f64;
        let lambda_inf = 1.0 - (kf - 1.0) / t;
        let target = kf * (t - kf + 1.0) / (kf - 1.0);
        let ys: Vec<f64> = ns
            .iter()
            .map(|&n| {
                let b = TailBounds::new(shape(k, n as usize)).expect("valid shape");
                let lambda = b
                    .exact(t)
                    .expect("t > 0")
                    .lambda_used
                    .expect("exact has lambda");
                n * (lambda - lambda_inf)
            })
            .collect();
        let limit = fit_limit(&ns, &ys);
        let err = rel(limit, target);
        pass &= err <= CORRECTION_TOL;
        parts.push(format!(
            "(k={k}, t={t}): fit {limit:.4} vs {target:.4}, rel {err:.2e}"
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < CORRECTION_LIMIT;
    Outcome::new(
        pass,
        format!("{}; {:.1}s", parts.join("; "), elapsed.as_secs_f64()),
    )
}

fn c9_limit_correction() -> Outcome {
    let mut worst = 0.0f64;
    let nf = NUMERATOR_N as f64;
    for k in NUMERATOR_K {
        let ev = GknEvaluator::new(shape(k, NUMERATOR_N));
        let kf = k as f64;
        for l in NUMERATOR_LAMBDA {
            let g = ev.eval(l).expect("lambda in range");
            let gp = ev.eval_deriv(l).expect("lambda in range");
            let value = nf * ((kf - 1.0) / (1.0 - l) * g - gp);
            let target = kf * (kf - 1.0) * l / (1.0 - l).powf(kf + 2.0);
            worst = worst.max(rel(value, target));
        }
    }
    Outcome::new(
        worst <= NUMERATOR_TOL,
        format!("9 (k, lambda) pairs at n=1e5, max relative error {worst:.2e}"),
    )
}

fn c10_gamma_form() -> Outcome {
    let mut worst = 0.0f64;
    let ns = (1..=50).chain(std::iter::once(1000));
    for n in ns {
        let ev = GknEvaluator::new(shape(2, n));
        for i in 1..=9 {
            let l = i as f64 / 10.0;
            let closed = eval_g2n_gamma_form(n, l).expect("lambda in range");
            worst = worst.max(rel(closed, ev.eval(l).expect("lambda in range")));
        }
    }
    Outcome::new(
        worst < GAMMA_FORM_TOL,
        format!("51 n-values x 9 lambdas, max relative difference {worst:.2e}"),
    )
}

fn c11_crossover() -> Outcome {
    let b = TailBounds::new(shape(SWEEP_K, SWEEP_N)).expect("valid shape");
    let t_min = b.meaningful_threshold();
    let step = (SWEEP_T_MAX - t_min) / (SWEEP_POINTS - 1) as f64;
    let mut signs = Vec::with_capacity(SWEEP_POINTS);
    let mut agrawal_ok = true;
    for i in 0..SWEEP_POINTS {
        let t = if i + 1 == SWEEP_POINTS {
            SWEEP_T_MAX
        } else {
            t_min + step * i as f64
        };
        let exact = b.evaluate(Method::Exact, t).expect("t > 0");
        let mardia = b.evaluate(Method::Mardia, t).expect("t > 0");
        let agrawal = b.evaluate(Method::AgrawalLimit, t).expect("t > 0");
        agrawal_ok &= exact.value <= agrawal.value * (1.0 + DOMINANCE_TOL);
        signs.push((t, exact.log_value < mardia.log_value));
    }
    let changes: Vec<f64> = signs
        .windows(2)
        .filter(|w| w[0].1 != w[1].1)
        .map(|w| 0.5 * (w[0].0 + w[1].0))
        .collect();
    let crossover = signs.first().map(|s| s.1) == Some(true)
        && signs.last().map(|s| s.1) == Some(false)
        && changes.len() == 1;
    Outcome::new(
        crossover && agrawal_ok,
        format!(
            "sign changes of exact - mardia at t ~ {changes:?}; exact <= agrawal_limit everywhere: {agrawal_ok}"
        ),
    )
}

fn mc_queries() -> Vec<(ExperimentShape, ProbVector, f64)> {
    let p = |v: &[f64]| ProbVector::new(v.to_vec()).expect("valid p");
    vec![
        (shape(2, 5), p(&[0.3, 0.7]), 0.5),
        (shape(2, 10), p(&[0.5, 0.5]), 1.0),
        (shape(2, 20), p(&[0.1, 0.9]), 1.5),
        (shape(3, 4), p(&[0.2, 0.3, 0.5]), 1.0),
        (shape(3, 6), p(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]), 2.0),
        (shape(3, 10), p(&[0.6, 0.3, 0.1]), 2.5),
        (shape(4, 5), p(&[0.25, 0.25, 0.25, 0.25]), 2.0),
        (shape(4, 8), p(&[0.4, 0.3, 0.2, 0.1]), 3.0),
        (shape(5, 6), p(&[0.1, 0.2, 0.3, 0.2, 0.2]), 3.0),
        (shape(3, 12), p(&[0.5, 0.5, 0.0]), 1.0),
    ]
}

fn c12_monte_carlo() -> Outcome {
    let pool = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool")
    };
    let (single, multi) = (pool(1), pool(4));
    let mut worst = 0.0f64;
    let mut deterministic = true;
    let mut within = true;
    for (s, p, t) in mc_queries() {
        let exact = tail_exact(s, &p, t).expect("small shape");
        let a = multi
            .install(|| mc_tail(s, &p, t, MC_SAMPLES, SEED))
            .expect("mc runs");
        let b = multi
            .install(|| mc_tail(s, &p, t, MC_SAMPLES, SEED))
            .expect("mc runs");
        let c = single
            .install(|| mc_tail(s, &p, t, MC_SAMPLES, SEED))
            .expect("mc runs");
        deterministic &= a == b && a == c;
        let z = (a.estimate - exact).abs() / a.std_error;
        within &= a.std_error > 0.0 && z <= MC_SIGMAS;
        worst = worst.max(z);
    }
    Outcome::new(
        deterministic && within,
        format!("10 queries at 1e5 samples, max |z| = {worst:.2}, identical across runs and 1 vs 4 threads: {deterministic}"),
    )
}

fn main() {
    let small = small_shapes_with_points();
    let criteria: Vec<Criterion> = vec![
        ("coefficient table", Box::new(c1_coefficient_table)),
        ("butterfly unseen-proportion bound", Box::new(c2_butterfly)),
        ("MGF bound validity", Box::new(|| c3_jensen(&small))),
        ("p-independence", Box::new(|| c4_p_independence(&small))),
        ("recurrence", Box::new(c5_recurrence)),
        ("exact-tail dominance", Box::new(|| c6_dominance(&small))),
        ("combinatorial comparison", Box::new(c7_combinatorial)),
        (
            "correction asymptotics",
            Box::new(c8_correction_asymptotics),
        ),
        ("correction-numerator limit", Box::new(c9_limit_correction)),
        ("incomplete-gamma identity", Box::new(c10_gamma_form)),
        ("exact vs Mardia crossover", Box::new(c11_crossover)),
        ("Monte Carlo consistency", Box::new(c12_monte_carlo)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
