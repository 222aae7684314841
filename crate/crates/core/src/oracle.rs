//! Brute-force ground truth.
//!
//! Exact enumeration over every multinomial outcome for small shapes, and a
//! seeded Monte Carlo estimator for shapes beyond the enumeration guard.
//! Nothing here goes through the `G_{k,n}` coefficient formula, so these
//! routines can check it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp1};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gkn::ExperimentShape;
use crate::special::{ln_factorial, LogSumExp};

/// Largest number of outcomes the enumerators will visit.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

/// Tolerance on `|Σ p_i - 1|`.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// A point of the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidProbVector("empty vector".into()));
        }
        if let Some(bad) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidProbVector(format!(
                "entry {bad} is not a probability"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidProbVector(format!("entries sum to {sum}")));
        }
        Ok(Self(probs))
    }

    pub fn uniform(k: usize) -> Result<Self> {
        Self::new(vec![1.0 / k as f64; k])
    }

    /// Empirical distribution `counts / Σ counts`.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::InvalidProbVector("counts sum to zero".into()));
        }
        Self::new(counts.iter().map(|&c| c as f64 / n as f64).collect())
    }

    /// Symmetric Dirichlet(1) draw via normalized exponentials.
    pub fn random_dirichlet<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Self {
        let draws: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        Self(draws.into_iter().map(|x: f64| x / total).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `D(p̂‖p) = Σ_{p̂_i > 0} p̂_i ln(p̂_i / p_i)`; `+inf` when `p̂` puts mass
/// where `p` has none.
pub fn kl_divergence(phat: &ProbVector, p: &ProbVector) -> Result<f64> {
    if phat.len() != p.len() {
        return Err(Error::LengthMismatch {
            left: phat.len(),
            right: p.len(),
        });
    }
    let mut d = 0.0;
    for (&a, &b) in phat.as_slice().iter().zip(p.as_slice()) {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return Ok(f64::INFINITY);
        }
        d += a * (a / b).ln();
    }
    Ok(d.max(0.0))
}

/// `n·D(X/n ‖ p)` for a count vector; `+inf` on a support violation.
pub fn scaled_kl_counts(counts: &[u64], n: u64, p: &[f64]) -> f64 {
    let nf = n as f64;
    let mut s = 0.0;
    for (&x, &pi) in counts.iter().zip(p) {
        if x == 0 {
            continue;
        }
        if pi == 0.0 {
            return f64::INFINITY;
        }
        let xf = x as f64;
        s += xf * (xf / (nf * pi)).ln();
    }
    s
}

/// One multinomial outcome `(X_1, …, X_k)` with `Σ X_i = n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub counts: Vec<u64>,
    /// `ln(n! / Π X_i!)`
    pub log_multinomial_coeff: f64,
}

/// Number of compositions of `n` into `k` parts, saturating above `cap`.
fn composition_count(shape: ExperimentShape, cap: u128) -> u128 {
    // C(n+k-1, k-1) built as a running product of exact binomials.
    let n = shape.n() as u128;
    let mut c: u128 = 1;
    for j in 1..shape.k() as u128 {
        c = c * (n + j) / j;
        if c > cap {
            return cap + 1;
        }
    }
    c
}

/// Lexicographic stream over all compositions of `n` into `k` parts.
#[derive(Debug, Clone)]
pub struct Outcomes {
    n: u64,
    next: Option<Vec<u64>>,
    ln_fact: Vec<f64>,
}

impl Iterator for Outcomes {
    type Item = Outcome;

    fn next(&mut self) -> Option<Outcome> {
        let current = self.next.take()?;
        let k = current.len();
        // successor: bump the rightmost non-final position with mass to its
        // right, then move all remaining mass to the last slot
        let mut suffix = 0u64;
        let mut succ = None;
        for i in (0..k.saturating_sub(1)).rev() {
            suffix += current[i + 1];
            if suffix > 0 {
                let mut c = current.clone();
                c[i] += 1;
                for slot in c.iter_mut().skip(i + 1) {
                    *slot = 0;
                }
                c[k - 1] = suffix - 1;
                succ = Some(c);
                break;
            }
        }
        self.next = succ;
        let log_multinomial_coeff = self.ln_fact[self.n as usize]
            - current
                .iter()
                .map(|&x| self.ln_fact[x as usize])
                .sum::<f64>();
        Some(Outcome {
            counts: current,
            log_multinomial_coeff,
        })
    }
}

/// All outcomes of `Mult(n, ·)` on `k` categories, lexicographically.
pub fn enumerate_outcomes(shape: ExperimentShape) -> Result<Outcomes> {
    let count = composition_count(shape, ENUMERATION_LIMIT);
    if count > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge {
            count,
            limit: ENUMERATION_LIMIT,
        });
    }
    let n = shape.n() as u64;
    let mut first = vec![0u64; shape.k()];
    first[shape.k() - 1] = n;
    let ln_fact = (0..=n).map(ln_factorial).collect();
    Ok(Outcomes {
        n,
        next: Some(first),
        ln_fact,
    })
}

fn check_p(shape: ExperimentShape, p: &ProbVector) -> Result<()> {
    if p.len() != shape.k() {
        return Err(Error::LengthMismatch {
            left: shape.k(),
            right: p.len(),
        });
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::LambdaOutOfRange(lambda, "[0, 1]"))
    }
}

/// `E exp(λ n D(p̂‖p))` under `Mult(n, p)`, by enumeration:
/// `Σ coeff · (Π p̂_i^{X_i})^λ · (Π p_i^{X_i})^{1-λ}`.
pub fn mgf_exact(shape: ExperimentShape, p: &ProbVector, lambda: f64) -> Result<f64> {
    check_p(shape, p)?;
    check_lambda(lambda)?;
    let nf = shape.n() as f64;
    let probs = p.as_slice();
    let mut acc = LogSumExp::new();
    for o in enumerate_outcomes(shape)? {
        let mut ln_emp = 0.0;
        let mut ln_true = 0.0;
        for (&x, &pi) in o.counts.iter().zip(probs) {
            if x == 0 {
                continue;
            }
            let xf = x as f64;
            ln_emp += xf * (xf / nf).ln();
            ln_true += xf * pi.ln();
        }
        let ln_term = if lambda == 1.0 {
            o.log_multinomial_coeff + ln_emp
        } else {
            o.log_multinomial_coeff + lambda * ln_emp + (1.0 - lambda) * ln_true
        };
        acc.push(ln_term);
    }
    Ok(acc.ln().exp())
}

/// `G_{k,n}(λ, p) = Σ coeff · Π [λX_i/n + (1-λ)p_i]^{X_i}` by enumeration.
/// A zero base with zero exponent contributes a factor of 1.
pub fn gkn_from_definition(shape: ExperimentShape, p: &ProbVector, lambda: f64) -> Result<f64> {
    check_p(shape, p)?;
    check_lambda(lambda)?;
    let nf = shape.n() as f64;
    let probs = p.as_slice();
    let mut acc = LogSumExp::new();
    for o in enumerate_outcomes(shape)? {
        let mut ln_term = o.log_multinomial_coeff;
        for (&x, &pi) in o.counts.iter().zip(probs) {
            if x == 0 {
                continue;
            }
            let xf = x as f64;
            ln_term += xf * (lambda * xf / nf + (1.0 - lambda) * pi).ln();
        }
        acc.push(ln_term);
    }
    Ok(acc.ln().exp())
}

/// `P(n·D(p̂‖p) > t)` under `Mult(n, p)`, summed exactly.
pub fn tail_exact(shape: ExperimentShape, p: &ProbVector, t: f64) -> Result<f64> {
    check_p(shape, p)?;
    let n = shape.n() as u64;
    let probs = p.as_slice();
    let mut acc = LogSumExp::new();
    for o in enumerate_outcomes(shape)? {
        let stat = scaled_kl_counts(&o.counts, n, probs);
        if !stat.is_finite() || stat <= t {
            continue;
        }
        let ln_prob: f64 = o
            .counts
            .iter()
            .zip(probs)
            .filter(|(&x, _)| x > 0)
            .map(|(&x, &pi)| x as f64 * pi.ln())
            .sum();
        acc.push(o.log_multinomial_coeff + ln_prob);
    }
    Ok(acc.ln().exp().clamp(0.0, 1.0))
}

/// Monte Carlo estimate of a tail probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub hits: u64,
    pub samples: u64,
    pub seed: u64,
}

/// Samples per independently seeded chunk.
pub const MC_CHUNK: u64 = 8192;

/// Draws one multinomial count vector by sequential binomial conditioning.
///
/// Category `i` takes `Bin(remaining, p_i / Σ_{j>=i} p_j)`. The tail sums
/// are accumulated from the right so the last category with mass gets a
/// conditional probability of exactly 1.
pub fn sample_multinomial<R: Rng + ?Sized>(n: u64, p: &[f64], rng: &mut R, out: &mut [u64]) {
    let mut tails = vec![0.0; p.len()];
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate().rev() {
        acc += pi;
        tails[i] = acc;
    }
    sample_with_tails(n, p, &tails, rng, out);
}

fn sample_with_tails<R: Rng + ?Sized>(
    n: u64,
    p: &[f64],
    tails: &[f64],
    rng: &mut R,
    out: &mut [u64],
) {
    let mut remaining = n;
    for (i, (&pi, &tail)) in p.iter().zip(tails).enumerate() {
        let x = if remaining == 0 || pi <= 0.0 {
            0
        } else if pi >= tail {
            remaining
        } else {
            Binomial::new(remaining, pi / tail)
                .expect("conditional probability lies in [0, 1]")
                .sample(rng)
        };
        out[i] = x;
        remaining -= x;
    }
    debug_assert_eq!(remaining, 0);
}

/// Monte Carlo estimate of `P(n·D(p̂‖p) > t)`.
///
/// Samples are split into chunks of [`MC_CHUNK`]; chunk `c` draws from a
/// ChaCha8 stream seeded by `seed` on stream `c`. Chunk hit counts are summed
/// as integers, so the result does not depend on how many threads run it.
pub fn mc_tail(
    shape: ExperimentShape,
    p: &ProbVector,
    t: f64,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    check_p(shape, p)?;
    if samples == 0 {
        return Err(Error::NoSamples);
    }
    let n = shape.n() as u64;
    let probs = p.as_slice();
    let mut tails = vec![0.0; probs.len()];
    let mut acc = 0.0;
    for (i, &pi) in probs.iter().enumerate().rev() {
        acc += pi;
        tails[i] = acc;
    }
    let chunks = samples.div_ceil(MC_CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let todo = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut counts = vec![0u64; probs.len()];
            let mut hits = 0u64;
            for _ in 0..todo {
                sample_with_tails(n, probs, &tails, &mut rng, &mut counts);
                if scaled_kl_counts(&counts, n, probs) > t {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let estimate = hits as f64 / samples as f64;
    Ok(McEstimate {
        estimate,
        std_error: (estimate * (1.0 - estimate) / samples as f64).sqrt(),
        hits,
        samples,
        seed,
    })
}
