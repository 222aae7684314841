//! The polynomial family `G_{k,n}(λ)`.
//!
//! For `k >= 2` the polynomial has the explicit form
//!
//! ```text
//! G_{k,n}(λ) = Σ_{m=0}^{n} n! / (n^m (n-m)!) · C(m+k-2, k-2) · λ^m
//! ```
//!
//! and it bounds the moment generating function of `n·D(p̂‖p)` on `[0, 1]`
//! for every true probability vector `p`. `G_{1,n} ≡ 1` and `G_{k,0} ≡ 1`.
//!
//! Coefficients are held in log form so that shapes like `k = 436,
//! n = 2029` evaluate without overflow. Small shapes also carry the exact
//! rational coefficients.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};
use crate::special::{gamma_q, ln_binomial, ln_factorial, ln_upper_gamma, LogSumExp};

/// Coefficients up to this index sum the falling-factorial logs directly.
const DIRECT_TERMS: usize = 64;

/// Largest `k` and `n` for which exact rational coefficients are built.
pub const EXACT_LIMIT: usize = 30;

/// Alphabet size `k` and sample size `n` of a multinomial experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ExperimentShape {
    k: usize,
    n: usize,
}

impl ExperimentShape {
    pub fn new(k: usize, n: usize) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidShape {
                k,
                n,
                reason: "alphabet size must be at least 1",
            });
        }
        Ok(Self { k, n })
    }

    /// Shape with the extra requirements of the tail bounds: `k >= 2`, `n >= 1`.
    pub fn for_bounds(k: usize, n: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidShape {
                k,
                n,
                reason: "tail bounds need an alphabet of at least 2 categories",
            });
        }
        if n < 1 {
            return Err(Error::InvalidShape {
                k,
                n,
                reason: "tail bounds need at least one sample",
            });
        }
        Ok(Self { k, n })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

fn check_unit_interval(lambda: f64) -> Result<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::LambdaOutOfRange(lambda, "[0, 1]"))
    }
}

/// Precomputed coefficients of `G_{k,n}`. Immutable once built.
#[derive(Debug, Clone)]
pub struct GknEvaluator {
    shape: ExperimentShape,
    log_coeffs: Vec<f64>,
    exact_coeffs: Option<Vec<BigRational>>,
}

impl GknEvaluator {
    pub fn new(shape: ExperimentShape) -> Self {
        let (k, n) = (shape.k, shape.n);
        if k == 1 || n == 0 {
            return Self {
                shape,
                log_coeffs: vec![0.0],
                exact_coeffs: Some(vec![BigRational::one()]),
            };
        }
        let nf = n as f64;
        let ln_n = nf.ln();
        let ln_fact_n = ln_factorial(n as u64);
        let log_coeffs = (0..=n)
            .scan(0.0f64, |falling, m| {
                if m == 0 {
                    return Some(0.0);
                }
                // ln[n!/(n^m (n-m)!)], summed directly while the terms are few
                *falling += (-((m - 1) as f64) / nf).ln_1p();
                let ln_ratio = if m <= DIRECT_TERMS {
                    *falling
                } else {
                    ln_fact_n - m as f64 * ln_n - ln_factorial((n - m) as u64)
                };
                Some(ln_ratio + ln_binomial((m + k - 2) as u64, m as u64))
            })
            .collect();
        let exact_coeffs = (k <= EXACT_LIMIT && n <= EXACT_LIMIT).then(|| exact_coefficients(k, n));
        Self {
            shape,
            log_coeffs,
            exact_coeffs,
        }
    }

    pub fn shape(&self) -> ExperimentShape {
        self.shape
    }

    pub fn degree(&self) -> usize {
        self.log_coeffs.len() - 1
    }

    pub fn log_coeffs(&self) -> &[f64] {
        &self.log_coeffs
    }

    pub fn exact_coeffs(&self) -> Option<&[BigRational]> {
        self.exact_coeffs.as_deref()
    }

    /// `G_{k,n}(λ)` for `λ ∈ [0, 1]`.
    pub fn eval(&self, lambda: f64) -> Result<f64> {
        self.ln_eval(lambda).map(f64::exp)
    }

    /// `ln G_{k,n}(λ)` for `λ ∈ [0, 1]`.
    pub fn ln_eval(&self, lambda: f64) -> Result<f64> {
        check_unit_interval(lambda)?;
        Ok(self.ln_eval_unchecked(lambda))
    }

    pub(crate) fn ln_eval_unchecked(&self, lambda: f64) -> f64 {
        if lambda == 0.0 || self.log_coeffs.len() == 1 {
            return 0.0;
        }
        let ln_lambda = lambda.ln();
        self.log_coeffs
            .iter()
            .enumerate()
            .map(|(m, &c)| c + m as f64 * ln_lambda)
            .collect::<LogSumExp>()
            .ln()
    }

    /// `G'_{k,n}(λ)` for `λ ∈ [0, 1]`; `c_1 = k - 1` at `λ = 0`.
    pub fn eval_deriv(&self, lambda: f64) -> Result<f64> {
        self.ln_eval_deriv(lambda).map(f64::exp)
    }

    /// `ln G'_{k,n}(λ)`; `-inf` for constant polynomials.
    pub fn ln_eval_deriv(&self, lambda: f64) -> Result<f64> {
        check_unit_interval(lambda)?;
        Ok(self.ln_eval_deriv_unchecked(lambda))
    }

    pub(crate) fn ln_eval_deriv_unchecked(&self, lambda: f64) -> f64 {
        if self.log_coeffs.len() == 1 {
            return f64::NEG_INFINITY;
        }
        if lambda == 0.0 {
            return self.log_coeffs[1];
        }
        let ln_lambda = lambda.ln();
        self.log_coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(m, &c)| (m as f64).ln() + c + (m as f64 - 1.0) * ln_lambda)
            .collect::<LogSumExp>()
            .ln()
    }

    /// Scales coefficient `m` by `factor`. Only for negative-control runs of
    /// the verification suite.
    #[doc(hidden)]
    pub fn perturb_coefficient(&mut self, m: usize, factor: f64) {
        if let Some(c) = self.log_coeffs.get_mut(m) {
            *c += factor.ln();
        }
        self.exact_coeffs = None;
    }
}

/// Exact rational coefficients `c_0..=c_n` of `G_{k,n}`, `k >= 1`.
pub fn exact_coefficients(k: usize, n: usize) -> Vec<BigRational> {
    let nb = BigInt::from(n);
    let mut out = Vec::with_capacity(n + 1);
    // falling = n!/(n-m)!, power = n^m, binom = C(m+k-2, k-2)
    let mut falling = BigInt::one();
    let mut power = BigInt::one();
    let mut binom = BigInt::one();
    for m in 0..=n {
        if m > 0 {
            falling *= BigInt::from(n - m + 1);
            power *= &nb;
            binom = binom * BigInt::from(m + k - 2) / BigInt::from(m);
        }
        out.push(BigRational::new(&falling * &binom, power.clone()));
    }
    out
}

/// Builds the evaluator for `shape`.
pub fn build_evaluator(shape: ExperimentShape) -> GknEvaluator {
    GknEvaluator::new(shape)
}

/// `G_{k,∞}(λ) = (1 - λ)^{-(k-1)}`, the large-`n` limit, for `λ ∈ [0, 1)`.
pub fn eval_gkn_limit(k: usize, lambda: f64) -> Result<f64> {
    ln_gkn_limit(k, lambda).map(f64::exp)
}

pub fn ln_gkn_limit(k: usize, lambda: f64) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidShape {
            k,
            n: 0,
            reason: "the large-n limit is defined for k >= 2",
        });
    }
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::LambdaOutOfRange(lambda, "[0, 1)"));
    }
    Ok(-((k - 1) as f64) * (-lambda).ln_1p())
}

/// `G_{2,n}(λ)` through the upper incomplete gamma function:
/// `n^{-n} λ^n e^{n/λ} Γ(n+1, n/λ)`, for `λ ∈ (0, 1]`.
///
/// Independent of the coefficient route, so it serves as a cross-check.
pub fn eval_g2n_gamma_form(n: usize, lambda: f64) -> Result<f64> {
    ln_g2n_gamma_form(n, lambda).map(f64::exp)
}

pub fn ln_g2n_gamma_form(n: usize, lambda: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidShape {
            k: 2,
            n,
            reason: "the incomplete-gamma form needs n >= 1",
        });
    }
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::LambdaOutOfRange(lambda, "(0, 1]"));
    }
    let nf = n as f64;
    let z = nf / lambda;
    Ok(-nf * nf.ln() + nf * lambda.ln() + z + ln_upper_gamma(nf + 1.0, z))
}

/// `G_{k,n}(λ) - [G_{k-1,n}(λ) + λ·G_{k,n-1}(λ(n-1)/n)]`.
pub fn recurrence_residual(k: usize, n: usize, lambda: f64) -> Result<f64> {
    if k < 2 || n < 1 {
        return Err(Error::InvalidShape {
            k,
            n,
            reason: "the recurrence needs k >= 2 and n >= 1",
        });
    }
    check_unit_interval(lambda)?;
    let full = GknEvaluator::new(ExperimentShape::new(k, n)?);
    let fewer_k = GknEvaluator::new(ExperimentShape::new(k - 1, n)?);
    let fewer_n = GknEvaluator::new(ExperimentShape::new(k, n - 1)?);
    let shrunk = lambda * (n - 1) as f64 / n as f64;
    Ok(full.eval(lambda)? - (fewer_k.eval(lambda)? + lambda * fewer_n.eval(shrunk)?))
}

/// Regularized upper incomplete gamma `Q((k-1)/2, t)`: the tail of the
/// large-sample gamma law of `n·D(p̂‖p)`.
pub(crate) fn gamma_reference_tail(k: usize, t: f64) -> f64 {
    gamma_q((k as f64 - 1.0) / 2.0, t)
}

/// Converts an exact coefficient to `f64` (used by tests and reports).
pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
