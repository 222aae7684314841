//! Upper bounds on `P(n·D(p̂‖p) > t)`.
//!
//! Every bound has the Chernoff shape `exp(-λt)·M(λ)` for some MGF bound `M`
//! and choice of `λ`, or the combinatorial shape `C(k,n)·exp(-t)`. All
//! arithmetic stays in the log domain; the probability-scale value is clamped
//! at 1 only at the end.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gkn::{gamma_reference_tail, ExperimentShape, GknEvaluator};
use crate::special::{golden_section_min, ln_binomial, ln_two_pi, LogSumExp};

/// Uniform grid size for the exact minimization.
pub const GRID_POINTS: usize = 512;
/// Bracket width at which golden-section refinement stops.
pub const GOLDEN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// `min_λ exp(-λt) G_{k,n}(λ)`
    Exact,
    /// plug-in at the first-order corrected minimizer
    Corrected,
    /// plug-in at the large-`n` minimizer `1 - (k-1)/t`
    Uncorrected,
    /// `G_{k,n}(1) e^{-t}`
    LambdaOne,
    /// method of types, `C(n+k-1, k-1) e^{-t}`
    Types,
    /// `C_M(k,n) e^{-t}`
    Mardia,
    /// Chernoff bound from `(1-λ)^{-(k-1)}`
    AgrawalLimit,
    /// gamma tail `Q((k-1)/2, t)`; reference only, not a bound
    AsympGamma,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Exact,
        Method::Corrected,
        Method::Uncorrected,
        Method::LambdaOne,
        Method::Types,
        Method::Mardia,
        Method::AgrawalLimit,
        Method::AsympGamma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Corrected => "corrected",
            Method::Uncorrected => "uncorrected",
            Method::LambdaOne => "lambda_one",
            Method::Types => "types",
            Method::Mardia => "mardia",
            Method::AgrawalLimit => "agrawal_limit",
            Method::AsympGamma => "asymp_gamma",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.name() == s)
    }

    /// True when the method reports a Chernoff parameter `λ`.
    pub fn uses_lambda(self) -> bool {
        matches!(
            self,
            Method::Exact | Method::Corrected | Method::Uncorrected | Method::LambdaOne
        )
    }

    /// True only for the asymptotic gamma curve, which may undercut the
    /// true tail probability.
    pub fn is_reference_only(self) -> bool {
        self == Method::AsympGamma
    }

    /// True for the plug-in bounds that need `t > k - 1`.
    pub fn needs_t_above_k_minus_one(self) -> bool {
        matches!(self, Method::Corrected | Method::Uncorrected)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A deviation threshold `t` for a given experiment shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailQuery {
    pub shape: ExperimentShape,
    pub t: f64,
}

impl TailQuery {
    pub fn new(shape: ExperimentShape, t: f64) -> Result<Self> {
        check_t(t)?;
        Ok(Self { shape, t })
    }
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidThreshold(t))
    }
}

/// A bound value together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundResult {
    /// `min(exp(log_value), 1)`
    pub value: f64,
    /// natural log of the unclamped bound
    pub log_value: f64,
    pub method: Method,
    pub lambda_used: Option<f64>,
    /// `value < 1`
    pub meaningful: bool,
}

impl BoundResult {
    pub fn from_log(method: Method, log_value: f64, lambda_used: Option<f64>) -> Self {
        let value = if log_value >= 0.0 {
            1.0
        } else {
            log_value.exp()
        };
        Self {
            value,
            log_value,
            method,
            lambda_used,
            meaningful: value < 1.0,
        }
    }
}

/// `min(log G_{k,n}(1), k - 1)`; above it the exact bound is below 1.
pub fn meaningful_threshold(ev: &GknEvaluator) -> f64 {
    let k = ev.shape().k();
    ev.ln_eval_unchecked(1.0).min(k as f64 - 1.0)
}

/// All bound methods for one shape, sharing a single evaluator.
#[derive(Debug, Clone)]
pub struct TailBounds {
    ev: GknEvaluator,
}

impl TailBounds {
    pub fn new(shape: ExperimentShape) -> Result<Self> {
        let shape = ExperimentShape::for_bounds(shape.k(), shape.n())?;
        Ok(Self {
            ev: GknEvaluator::new(shape),
        })
    }

    /// Wraps an existing evaluator (which must have `k >= 2`, `n >= 1`).
    pub fn from_evaluator(ev: GknEvaluator) -> Result<Self> {
        let s = ev.shape();
        ExperimentShape::for_bounds(s.k(), s.n())?;
        Ok(Self { ev })
    }

    pub fn shape(&self) -> ExperimentShape {
        self.ev.shape()
    }

    pub fn evaluator(&self) -> &GknEvaluator {
        &self.ev
    }

    fn k(&self) -> f64 {
        self.ev.shape().k() as f64
    }

    fn n(&self) -> f64 {
        self.ev.shape().n() as f64
    }

    pub fn meaningful_threshold(&self) -> f64 {
        meaningful_threshold(&self.ev)
    }

    /// `-λt + ln G_{k,n}(λ)`
    fn ln_objective(&self, lambda: f64, t: f64) -> f64 {
        -lambda * t + self.ev.ln_eval_unchecked(lambda)
    }

    /// `d/dλ ln(exp(-λt) G(λ)) = G'/G - t`
    fn ln_objective_slope(&self, lambda: f64, t: f64) -> f64 {
        (self.ev.ln_eval_deriv_unchecked(lambda) - self.ev.ln_eval_unchecked(lambda)).exp() - t
    }

    pub fn evaluate(&self, method: Method, t: f64) -> Result<BoundResult> {
        match method {
            Method::Exact => self.exact(t),
            Method::Corrected => self.corrected(t),
            Method::Uncorrected => self.uncorrected(t),
            Method::LambdaOne => self.lambda_one(t),
            Method::Types => self.types(t),
            Method::Mardia => self.mardia(t),
            Method::AgrawalLimit => self.agrawal_limit(t),
            Method::AsympGamma => self.asymp_gamma(t),
        }
    }

    /// Exact Chernoff bound `min_{λ∈[0,1]} exp(-λt) G_{k,n}(λ)`.
    ///
    /// The objective can have several local minima on `[0, 1]`, so a uniform
    /// grid is scanned first and each grid-local minimum is refined by
    /// golden section. Interior minimizers are then polished by bisection on
    /// the sign of the log-objective slope, which pins the argmin far more
    /// tightly than comparing function values can.
    pub fn exact(&self, t: f64) -> Result<BoundResult> {
        check_t(t)?;
        let (lambda, log_value) = self.minimize(t);
        Ok(BoundResult::from_log(
            Method::Exact,
            log_value,
            Some(lambda),
        ))
    }

    /// Minimizer and minimum of the log objective.
    fn minimize(&self, t: f64) -> (f64, f64) {
        let last = GRID_POINTS - 1;
        let grid: Vec<f64> = (0..GRID_POINTS).map(|i| i as f64 / last as f64).collect();
        let vals: Vec<f64> = grid.iter().map(|&l| self.ln_objective(l, t)).collect();

        let mut best = (0.0, vals[0]);
        for i in 0..GRID_POINTS {
            let left_ok = i == 0 || vals[i] <= vals[i - 1];
            let right_ok = i == last || vals[i] <= vals[i + 1];
            if !(left_ok && right_ok) {
                continue;
            }
            if vals[i] < best.1 {
                best = (grid[i], vals[i]);
            }
            let lo = grid[i.saturating_sub(1)];
            let hi = grid[(i + 1).min(last)];
            let (x, fx) = golden_section_min(|l| self.ln_objective(l, t), lo, hi, GOLDEN_TOL);
            if fx < best.1 {
                best = (x, fx);
            }
            if let Some((x, fx)) = self.polish(lo, hi, t) {
                if fx <= best.1 {
                    best = (x, fx);
                }
            }
        }
        best
    }

    /// Bisection on the slope sign inside `[lo, hi]` when it brackets a root.
    fn polish(&self, mut lo: f64, mut hi: f64, t: f64) -> Option<(f64, f64)> {
        if !(self.ln_objective_slope(lo, t) < 0.0 && self.ln_objective_slope(hi, t) > 0.0) {
            return None;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.ln_objective_slope(mid, t) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x = 0.5 * (lo + hi);
        Some((x, self.ln_objective(x, t)))
    }

    /// Plug-in bound at `λ = 1 - (k-1)/t`; requires `t > k - 1`.
    pub fn uncorrected(&self, t: f64) -> Result<BoundResult> {
        check_t(t)?;
        let k1 = self.k() - 1.0;
        if t <= k1 {
            return Err(Error::BelowCorrectionDomain { t, k_minus_one: k1 });
        }
        let lambda = 1.0 - k1 / t;
        Ok(BoundResult::from_log(
            Method::Uncorrected,
            self.ln_objective(lambda, t),
            Some(lambda),
        ))
    }

    /// Plug-in bound at `min{1 - (k-1)/t + k/(k-1)·(t-k+1)/n, 1}`; requires
    /// `t > k - 1`.
    pub fn corrected(&self, t: f64) -> Result<BoundResult> {
        check_t(t)?;
        let k = self.k();
        let k1 = k - 1.0;
        if t <= k1 {
            return Err(Error::BelowCorrectionDomain { t, k_minus_one: k1 });
        }
        let lambda = (1.0 - k1 / t + k / k1 * (t - k1) / self.n()).min(1.0);
        Ok(BoundResult::from_log(
            Method::Corrected,
            self.ln_objective(lambda, t),
            Some(lambda),
        ))
    }

    /// `G_{k,n}(1) e^{-t}`
    pub fn lambda_one(&self, t: f64) -> Result<BoundResult> {
        check_t(t)?;
        Ok(BoundResult::from_log(
            Method::LambdaOne,
            self.ln_objective(1.0, t),
            Some(1.0),
        ))
    }

    /// Method-of-types bound `C(n+k-1, k-1) e^{-t}`.
    pub fn types(&self, t: f64) -> Result<BoundResult> {
        check_t(t)?;
        let s = self.shape();
        let ln_ct = ln_types_factor(s.k(), s.n());
        Ok(BoundResult::from_log(Method::Types, ln_ct - t, None))
    }

    /// `C_M(k,n) e^{-t}`
    pub fn mardia(&self, t: f64) -> Result<BoundResult> {
        check_t(t)?;
        let s = self.shape();
        Ok(BoundResult::from_log(
            Method::Mardia,
            ln_mardia_factor(s.k(), s.n()) - t,
            None,
        ))
    }

    /// Chernoff bound built on `(1-λ)^{-(k-1)}`:
    /// `exp(k-1-t) (t/(k-1))^{k-1}` for `t > k-1`, otherwise 1.
    pub fn agrawal_limit(&self, t: f64) -> Result<BoundResult> {
        agrawal_limit_bound(self.shape().k(), t)
    }

    /// Reference gamma tail `Q((k-1)/2, t)`. Not a bound.
    pub fn asymp_gamma(&self, t: f64) -> Result<BoundResult> {
        check_t(t)?;
        let q = asymp_gamma_tail(self.shape().k(), t)?;
        Ok(BoundResult::from_log(Method::AsympGamma, q.ln(), None))
    }
}

/// `ln C(n+k-1, k-1)`
pub fn ln_types_factor(k: usize, n: usize) -> f64 {
    ln_binomial((n + k - 1) as u64, (k - 1) as u64)
}

/// ln of `C_M(k,n) = 12/π Σ_{i=0}^{k-2} K_{i-1} (e√n / 2π)^i`.
///
/// `K_{-1} = 1`; for even `i`, `K_i = π (2π)^{i/2} / (2·4·…·i)`; for odd `i`,
/// `K_i = (2π)^{(i+1)/2} / (1·3·…·i)`. The log of each `K_i` is carried
/// iteratively through the double-factorial denominators.
pub fn ln_mardia_factor(k: usize, n: usize) -> f64 {
    let ln_pi = std::f64::consts::PI.ln();
    let ln_2pi = ln_two_pi();
    let ln_ratio = 1.0 + 0.5 * (n as f64).ln() - ln_2pi;
    let mut ln_even_denominator = 0.0; // ln(2·4·…·i)
    let mut ln_odd_denominator = 0.0; // ln(1·3·…·i)
    let mut acc = LogSumExp::new();
    for i in 0..=(k - 2) {
        // K_{i-1}
        let ln_k = if i == 0 {
            0.0
        } else {
            let j = i - 1;
            if j % 2 == 0 {
                if j > 0 {
                    ln_even_denominator += (j as f64).ln();
                }
                ln_pi + (j as f64 / 2.0) * ln_2pi - ln_even_denominator
            } else {
                ln_odd_denominator += (j as f64).ln();
                ((j + 1) as f64 / 2.0) * ln_2pi - ln_odd_denominator
            }
        };
        acc.push(ln_k + i as f64 * ln_ratio);
    }
    (12.0f64).ln() - ln_pi + acc.ln()
}

pub fn mardia_factor(k: usize, n: usize) -> f64 {
    ln_mardia_factor(k, n).exp()
}

/// See [`TailBounds::agrawal_limit`]; independent of `n`.
pub fn agrawal_limit_bound(k: usize, t: f64) -> Result<BoundResult> {
    check_t(t)?;
    if k < 2 {
        return Err(Error::InvalidShape {
            k,
            n: 0,
            reason: "tail bounds need k >= 2",
        });
    }
    let k1 = k as f64 - 1.0;
    let log_value = if t > k1 {
        k1 - t + k1 * (t / k1).ln()
    } else {
        0.0
    };
    Ok(BoundResult::from_log(Method::AgrawalLimit, log_value, None))
}

/// `Q((k-1)/2, t)`, the limiting gamma tail of `n·D(p̂‖p)`.
pub fn asymp_gamma_tail(k: usize, t: f64) -> Result<f64> {
    check_t(t)?;
    if k < 2 {
        return Err(Error::InvalidShape {
            k,
            n: 0,
            reason: "tail bounds need k >= 2",
        });
    }
    Ok(gamma_reference_tail(k, t))
}

/// Convenience wrappers taking a [`TailQuery`].
pub fn chernoff_exact(q: &TailQuery) -> Result<BoundResult> {
    TailBounds::new(q.shape)?.exact(q.t)
}

pub fn chernoff_uncorrected(q: &TailQuery) -> Result<BoundResult> {
    TailBounds::new(q.shape)?.uncorrected(q.t)
}

pub fn chernoff_corrected(q: &TailQuery) -> Result<BoundResult> {
    TailBounds::new(q.shape)?.corrected(q.t)
}

pub fn lambda_one_bound(q: &TailQuery) -> Result<BoundResult> {
    TailBounds::new(q.shape)?.lambda_one(q.t)
}

pub fn types_bound(q: &TailQuery) -> Result<BoundResult> {
    TailBounds::new(q.shape)?.types(q.t)
}
