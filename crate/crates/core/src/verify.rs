//! Property suite checking the polynomial and the bounds against the
//! enumeration oracle.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::gkn::{recurrence_residual, ExperimentShape, GknEvaluator};
use crate::oracle::{gkn_from_definition, mgf_exact, tail_exact, ProbVector};
use crate::tail_bounds::TailBounds;

/// Relative tolerance for `G_{k,n}(λ, p)` against the coefficient form.
pub const P_INDEPENDENCE_TOL: f64 = 1e-10;
/// Slack on `φ <= G` (equality holds at `λ = 1`).
pub const JENSEN_TOL: f64 = 1e-12;
pub const RECURRENCE_TOL: f64 = 1e-10;
/// Slack for comparing two bounds that can coincide.
pub const DOMINANCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    pub max_k: usize,
    pub max_n: usize,
    pub seed: u64,
    /// random `p` per shape; one boundary `p` is always added
    pub p_samples: usize,
    pub lambda_points: usize,
    pub t_points: usize,
    /// Scale coefficient 1 of every evaluator by 1.01 (negative control).
    pub inject_fault: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            max_k: 4,
            max_n: 8,
            seed: 0,
            p_samples: 25,
            lambda_points: 11,
            t_points: 20,
            inject_fault: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyTally {
    pub name: &'static str,
    pub passed: u64,
    pub total: u64,
    /// first failing case, if any
    pub first_failure: Option<String>,
}

impl PropertyTally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            passed: 0,
            total: 0,
            first_failure: None,
        }
    }

    fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.total += 1;
        if ok {
            self.passed += 1;
        } else if self.first_failure.is_none() {
            self.first_failure = Some(describe());
        }
    }

    pub fn ok(&self) -> bool {
        self.passed == self.total
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub properties: Vec<PropertyTally>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.properties.iter().all(PropertyTally::ok)
    }

    pub fn get(&self, name: &str) -> Option<&PropertyTally> {
        self.properties.iter().find(|p| p.name == name)
    }
}

fn grid(points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![0.5];
    }
    (0..points)
        .map(|i| i as f64 / (points - 1) as f64)
        .collect()
}

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Random interior points plus one boundary point with an empty last category.
pub fn test_points(k: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<ProbVector> {
    let mut ps: Vec<ProbVector> = (0..count)
        .map(|_| ProbVector::random_dirichlet(k, rng))
        .collect();
    if k >= 2 {
        let mut boundary = vec![0.0; k];
        let inner = ProbVector::random_dirichlet(k - 1, rng);
        boundary[..k - 1].copy_from_slice(inner.as_slice());
        ps.push(ProbVector::new(boundary).expect("normalized draw"));
    }
    ps
}

fn evaluator(shape: ExperimentShape, cfg: &VerifyConfig) -> GknEvaluator {
    let mut ev = GknEvaluator::new(shape);
    if cfg.inject_fault {
        ev.perturb_coefficient(1, 1.01);
    }
    ev
}

/// `t`-grid of `points` values starting just above the meaningfulness
/// threshold.
pub fn t_grid(bounds: &TailBounds, points: usize) -> Vec<f64> {
    let k = bounds.shape().k() as f64;
    let lo = bounds.meaningful_threshold() + 1e-3;
    let hi = lo + (3.0 * k).max(12.0);
    if points <= 1 {
        return vec![lo];
    }
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

pub fn run(cfg: &VerifyConfig) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let lambdas = grid(cfg.lambda_points);

    let mut p_indep = PropertyTally::new("p_independence");
    let mut jensen = PropertyTally::new("jensen");
    let mut recurrence = PropertyTally::new("recurrence");
    let mut dominance = PropertyTally::new("dominance");
    let mut validity = PropertyTally::new("tail_validity");

    for k in 2..=cfg.max_k {
        for n in 1..=cfg.max_n {
            let shape = ExperimentShape::new(k, n)?;
            let ev = evaluator(shape, cfg);
            let ps = test_points(k, cfg.p_samples, &mut rng);

            for &l in &lambdas {
                let g = ev.eval(l)?;
                for p in &ps {
                    let def = gkn_from_definition(shape, p, l)?;
                    p_indep.check(rel_diff(def, g) < P_INDEPENDENCE_TOL, || {
                        format!("k={k} n={n} lambda={l} p={:?}: {def} vs {g}", p.as_slice())
                    });
                    let mgf = mgf_exact(shape, p, l)?;
                    jensen.check(mgf <= g * (1.0 + JENSEN_TOL), || {
                        format!("k={k} n={n} lambda={l}: mgf {mgf} > G {g}")
                    });
                }
                let resid = if cfg.inject_fault {
                    recurrence_with(&ev, shape, l)?
                } else {
                    recurrence_residual(k, n, l)?
                };
                recurrence.check(resid.abs() <= RECURRENCE_TOL * g, || {
                    format!("k={k} n={n} lambda={l}: residual {resid}")
                });
            }

            let bounds = TailBounds::from_evaluator(ev)?;
            for t in t_grid(&bounds, cfg.t_points) {
                let exact = bounds.exact(t)?.value;
                let lambda_one = bounds.lambda_one(t)?.value;
                let types = bounds.types(t)?.value;
                let slack = |x: f64| x * (1.0 + DOMINANCE_TOL);
                dominance.check(exact <= slack(lambda_one) && lambda_one <= slack(types), || {
                    format!("k={k} n={n} t={t}: exact {exact}, lambda_one {lambda_one}, types {types}")
                });
                if t > k as f64 - 1.0 {
                    let c = bounds.corrected(t)?.value;
                    let u = bounds.uncorrected(t)?.value;
                    let a = bounds.agrawal_limit(t)?.value;
                    dominance.check(exact <= slack(c) && exact <= slack(u) && u <= slack(a), || {
                        format!("k={k} n={n} t={t}: exact {exact}, corrected {c}, uncorrected {u}, agrawal {a}")
                    });
                }
                for p in &ps {
                    let tail = tail_exact(shape, p, t)?;
                    validity.check(tail <= slack(exact), || {
                        format!("k={k} n={n} t={t}: tail {tail} > bound {exact}")
                    });
                }
            }
        }
    }
    Ok(VerifyReport {
        properties: vec![p_indep, jensen, recurrence, dominance, validity],
    })
}

/// Recurrence residual with the perturbed evaluator standing in for `G_{k,n}`.
fn recurrence_with(ev: &GknEvaluator, shape: ExperimentShape, l: f64) -> Result<f64> {
    let (k, n) = (shape.k(), shape.n());
    let fewer_k = GknEvaluator::new(ExperimentShape::new(k - 1, n)?);
    let fewer_n = GknEvaluator::new(ExperimentShape::new(k, n - 1)?);
    let shrunk = l * (n - 1) as f64 / n as f64;
    Ok(ev.eval(l)? - (fewer_k.eval(l)? + l * fewer_n.eval(shrunk)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let report = run(&VerifyConfig::default()).unwrap();
        for p in &report.properties {
            assert!(p.ok(), "{}: {:?}", p.name, p.first_failure);
            assert!(p.total > 0);
        }
    }

    #[test]
    fn minimal_suite_passes() {
        let cfg = VerifyConfig {
            max_n: 1,
            ..VerifyConfig::default()
        };
        assert!(run(&cfg).unwrap().all_passed());
    }

    #[test]
    fn injected_fault_is_caught() {
        let cfg = VerifyConfig {
            inject_fault: true,
            p_samples: 3,
            ..VerifyConfig::default()
        };
        let report = run(&cfg).unwrap();
        assert!(!report.all_passed());
        assert!(!report.get("p_independence").unwrap().ok());
        assert!(!report.get("recurrence").unwrap().ok());
    }
}
