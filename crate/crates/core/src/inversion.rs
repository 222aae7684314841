//! Critical values and single-coordinate confidence bounds.
//!
//! A critical value `t_{k,n}(α)` is the deviation at which a chosen bound
//! equals `α`. The KL ball `{p : n·D(p̂‖p) <= t_{k,n}(α)}` then covers the
//! true `p` with probability at least `1 - α`, and maximizing one
//! coordinate over that ball gives an upper confidence bound.

use serde::Serialize;

use crate::data::FrequencyTable;
use crate::error::{Error, Result};
use crate::gkn::ExperimentShape;
use crate::oracle::ProbVector;
use crate::tail_bounds::{Method, TailBounds};

/// Relative tolerance on `bound(t*) = α`.
pub const ALPHA_REL_TOL: f64 = 1e-9;
/// Absolute tolerance on the root of the binary relative entropy.
pub const KL_ROOT_TOL: f64 = 1e-12;
const MAX_DOUBLINGS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalValueQuery {
    pub shape: ExperimentShape,
    pub alpha: f64,
    pub method: Method,
}

impl CriticalValueQuery {
    pub fn new(shape: ExperimentShape, alpha: f64) -> Self {
        Self {
            shape,
            alpha,
            method: Method::Exact,
        }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }
}

/// Upper confidence bound on one coordinate of `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoordinateCI {
    /// 1-based category index
    pub coord: usize,
    pub upper: f64,
    pub t_used: f64,
    /// `NaN` when the caller supplied `t` directly
    pub alpha: f64,
}

/// Critical value for a single query. See [`critical_value_with`].
pub fn critical_value(q: &CriticalValueQuery) -> Result<f64> {
    let bounds = TailBounds::new(q.shape)?;
    critical_value_with(&bounds, q.alpha, q.method)
}

/// Finds `t*` with `|bound(t*) - α| <= 1e-9·α`.
///
/// The bracket starts at the meaningfulness threshold (or `k - 1` for the
/// plug-in methods, where they tend to 1); the upper end starts at
/// `max(4(k-1), 10)` and doubles until the bound drops below `α`. Every
/// method is continuous and nonincreasing in `t`, so bisection on the log
/// bound converges.
pub fn critical_value_with(bounds: &TailBounds, alpha: f64, method: Method) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    if method.is_reference_only() {
        return Err(Error::NotABound(method.name()));
    }
    let k1 = bounds.shape().k() as f64 - 1.0;
    let ln_alpha = alpha.ln();
    let ln_bound = |t: f64| -> Result<f64> { Ok(bounds.evaluate(method, t)?.log_value.min(0.0)) };

    let mut lo = if method.needs_t_above_k_minus_one() {
        k1
    } else {
        bounds.meaningful_threshold()
    };
    if !method.needs_t_above_k_minus_one() {
        // walk down in case the method is already below α at the threshold
        let mut steps = 0;
        while ln_bound(lo)? < ln_alpha {
            lo *= 0.5;
            steps += 1;
            if steps > MAX_DOUBLINGS {
                return Err(Error::SearchFailed("no lower bracket"));
            }
        }
    }

    let mut hi = (4.0 * k1).max(10.0).max(lo);
    let mut doublings = 0;
    while ln_bound(hi)? >= ln_alpha {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(Error::SearchFailed("bound never falls below alpha"));
        }
    }

    // |b - α| <= tol·α  <=  |ln b - ln α| <= ln(1 + tol)
    let log_tol = ALPHA_REL_TOL.ln_1p() * 0.5;
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..400 {
        mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = ln_bound(mid)?;
        if (v - ln_alpha).abs() <= log_tol {
            return Ok(mid);
        }
        if v >= ln_alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

/// Binary relative entropy `d(a, v) = a ln(a/v) + (1-a) ln((1-a)/(1-v))`.
pub fn binary_kl(a: f64, v: f64) -> f64 {
    let term = |x: f64, y: f64| {
        if x == 0.0 {
            0.0
        } else if y == 0.0 {
            f64::INFINITY
        } else {
            x * (x / y).ln()
        }
    };
    term(a, v) + term(1.0 - a, 1.0 - v)
}

/// Largest `v ∈ [a, 1)` with `n·d(a, v) <= t`, by bisection.
pub fn binary_kl_upper_root(a: f64, n: f64, t: f64) -> f64 {
    if a >= 1.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (a, 1.0);
    while hi - lo > KL_ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if n * binary_kl(a, mid) <= t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Maximal `p_coord` over `{p ∈ Δ : n·D(p̂‖p) <= t}`.
///
/// For a fixed value `v` of the target coordinate, the remaining mass
/// `1 - v` is best spread in proportion to `p̂` off the coordinate: by the
/// log-sum inequality that choice minimizes the off-coordinate part of the
/// divergence, which then equals `(1-p̂_c) ln((1-p̂_c)/(1-v))`. The ball
/// constraint collapses to the binary divergence `n·d(p̂_c, v) <= t`, which
/// is increasing in `v` on `[p̂_c, 1)`.
pub fn coord_upper_bound(
    phat: &ProbVector,
    shape: ExperimentShape,
    coord: usize,
    t: f64,
) -> Result<CoordinateCI> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidThreshold(t));
    }
    if phat.len() != shape.k() {
        return Err(Error::LengthMismatch {
            left: shape.k(),
            right: phat.len(),
        });
    }
    if coord < 1 || coord > shape.k() {
        return Err(Error::CoordOutOfRange {
            coord,
            k: shape.k(),
        });
    }
    if shape.n() < 1 {
        return Err(Error::InvalidShape {
            k: shape.k(),
            n: shape.n(),
            reason: "confidence bounds need at least one sample",
        });
    }
    let a = phat.as_slice()[coord - 1];
    let upper = binary_kl_upper_root(a, shape.n() as f64, t);
    Ok(CoordinateCI {
        coord,
        upper,
        t_used: t,
        alpha: f64::NAN,
    })
}

/// Result of the unseen-category workflow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnseenReport {
    pub k: usize,
    pub n: usize,
    pub ci: CoordinateCI,
}

/// Upper confidence bound on the total mass of categories never observed.
///
/// One extra category with count 0 is appended to the observed ones, the
/// exact-bound critical value is computed for the augmented shape, and the
/// new coordinate is maximized over the KL ball.
pub fn unseen_upper_bound(table: &FrequencyTable, alpha: f64) -> Result<CoordinateCI> {
    unseen_report(table, alpha).map(|r| r.ci)
}

pub fn unseen_report(table: &FrequencyTable, alpha: f64) -> Result<UnseenReport> {
    let (shape, phat) = table.with_unseen()?;
    let t = critical_value(&CriticalValueQuery::new(shape, alpha))?;
    let mut ci = coord_upper_bound(&phat, shape, shape.k(), t)?;
    ci.alpha = alpha;
    Ok(UnseenReport {
        k: shape.k(),
        n: shape.n(),
        ci,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn shape(k: usize, n: usize) -> ExperimentShape {
        ExperimentShape::new(k, n).unwrap()
    }

    #[test]
    fn types_inverts_in_closed_form() {
        for &alpha in &[0.5, 0.05, 1e-6] {
            let q = CriticalValueQuery::new(shape(2, 2), alpha).with_method(Method::Types);
            let t = critical_value(&q).unwrap();
            assert!((t - (3.0 / alpha).ln()).abs() < 1e-8, "alpha={alpha} t={t}");
        }
    }

    #[test]
    fn round_trip_hits_alpha() {
        let b = TailBounds::new(shape(5, 17)).unwrap();
        for m in [
            Method::Exact,
            Method::Corrected,
            Method::Uncorrected,
            Method::LambdaOne,
            Method::Mardia,
            Method::AgrawalLimit,
        ] {
            let t = critical_value_with(&b, 0.01, m).unwrap();
            let v = b.evaluate(m, t).unwrap().value;
            assert!(((v - 0.01) / 0.01).abs() <= 1e-9, "{m}: {v}");
        }
    }

    #[test]
    fn rejects_bad_alpha_and_reference_curve() {
        let q = CriticalValueQuery::new(shape(3, 5), 1.0);
        assert!(matches!(critical_value(&q), Err(Error::InvalidAlpha(_))));
        let q = CriticalValueQuery::new(shape(3, 5), 0.0);
        assert!(critical_value(&q).is_err());
        let q = CriticalValueQuery::new(shape(3, 5), 0.1).with_method(Method::AsympGamma);
        assert!(matches!(critical_value(&q), Err(Error::NotABound(_))));
    }

    #[test]
    fn unseen_coordinate_closed_form() {
        let phat = ProbVector::from_counts(&[3, 4, 0]).unwrap();
        let ci = coord_upper_bound(&phat, shape(3, 7), 3, 2.0).unwrap();
        assert!((ci.upper - (1.0 - (-2.0f64 / 7.0).exp())).abs() < 1e-9);
        let v = 1.0 - (-481.20f64 / 2029.0).exp();
        assert!((v - 0.2111).abs() < 1e-4);
    }

    #[test]
    fn full_mass_coordinate_is_one() {
        let phat = ProbVector::from_counts(&[0, 9]).unwrap();
        let ci = coord_upper_bound(&phat, shape(2, 9), 2, 0.5).unwrap();
        assert_eq!(ci.upper, 1.0);
    }

    #[test]
    fn coordinate_errors() {
        let phat = ProbVector::from_counts(&[1, 1]).unwrap();
        assert!(coord_upper_bound(&phat, shape(2, 2), 0, 1.0).is_err());
        assert!(coord_upper_bound(&phat, shape(2, 2), 3, 1.0).is_err());
        assert!(coord_upper_bound(&phat, shape(2, 2), 1, 0.0).is_err());
        assert!(coord_upper_bound(&phat, shape(3, 2), 1, 1.0).is_err());
    }

    #[test]
    fn single_observation_unseen() {
        let table = FrequencyTable::from_counts(&[1]).unwrap();
        let ci = unseen_upper_bound(&table, 0.05).unwrap();
        let t = critical_value(&CriticalValueQuery::new(shape(2, 1), 0.05)).unwrap();
        assert_eq!(ci.t_used, t);
        assert!((ci.upper - (1.0 - (-t).exp())).abs() < 1e-9);
        assert_eq!(ci.coord, 2);
    }

    #[test]
    fn unseen_interval_shrinks_as_alpha_grows() {
        let table = FrequencyTable::from_counts(&[4, 2, 1]).unwrap();
        let mut prev = f64::INFINITY;
        for &alpha in &[0.01, 0.05, 0.2, 0.5, 0.9, 0.999] {
            let ci = unseen_upper_bound(&table, alpha).unwrap();
            assert!(ci.upper <= prev + 1e-12);
            prev = ci.upper;
        }
        // α → 1 pushes t down to the meaningfulness threshold
        let b = TailBounds::new(shape(4, 7)).unwrap();
        let floor = 1.0 - (-b.meaningful_threshold() / 7.0).exp();
        assert!(
            prev >= floor - 1e-9 && prev < floor + 0.02,
            "{prev} vs {floor}"
        );
    }

    proptest! {
        #[test]
        fn bisection_matches_closed_form(n in 1usize..5000, t in 1e-3f64..1e3) {
            let v = binary_kl_upper_root(0.0, n as f64, t);
            prop_assert!((v - (1.0 - (-t / n as f64).exp())).abs() < 1e-9);
        }

        #[test]
        fn root_is_feasible_and_tight(a in 0.0f64..0.999, n in 1usize..3000, t in 1e-3f64..500.0) {
            let n = n as f64;
            let v = binary_kl_upper_root(a, n, t);
            prop_assert!(v >= a && v <= 1.0);
            prop_assert!(n * binary_kl(a, v) <= t + 1e-9);
            if v + 1e-6 < 1.0 {
                prop_assert!(n * binary_kl(a, v + 1e-6) > t);
            }
        }

        #[test]
        fn root_monotone_in_t(a in 0.0f64..0.99, n in 1usize..500, t in 0.01f64..50.0, dt in 0.0f64..10.0) {
            let n = n as f64;
            prop_assert!(binary_kl_upper_root(a, n, t + dt) >= binary_kl_upper_root(a, n, t));
        }
    }
}
