//! Special functions and small numerical kernels.
//!
//! Everything here works in the natural-log domain where magnitudes can get
//! large: `ln_gamma` is used for coefficient construction at `n` in the
//! hundreds of thousands, and the incomplete gamma routines feed both the
//! asymptotic reference curve and the closed-form cross-check of `G_{2,n}`.

use std::f64::consts::PI;

/// ln(sqrt(2*pi))
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Stirling series coefficients B_{2j} / (2j (2j - 1)), j = 1..=8.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// Below this argument the Stirling series is shifted upward first.
const STIRLING_MIN: f64 = 15.0;

/// Natural log of the gamma function for `x > 0`.
///
/// Uses the Stirling series directly for `x >= 15` and the recurrence
/// `ln Γ(x) = ln Γ(x + m) - Σ ln(x + j)` below that. Relative accuracy is at
/// the level of double rounding across the whole positive axis.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "ln_gamma requires a positive argument");
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    if x < STIRLING_MIN {
        let mut shift = 0.0;
        let mut y = x;
        while y < STIRLING_MIN {
            shift += y.ln();
            y += 1.0;
        }
        return stirling(y) - shift;
    }
    stirling(x)
}

fn stirling(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut series = 0.0;
    let mut pow = inv;
    for c in STIRLING {
        series += c * pow;
        pow *= inv2;
    }
    (x - 0.5) * x.ln() - x + LN_SQRT_2PI + series
}

/// ln(n!)
pub fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// ln C(n, r); `-inf` when `r > n`.
pub fn ln_binomial(n: u64, r: u64) -> f64 {
    if r > n {
        return f64::NEG_INFINITY;
    }
    if r == 0 || r == n {
        return 0.0;
    }
    if let Some(c) = small_binomial(n, r.min(n - r)) {
        return c.ln();
    }
    ln_factorial(n) - ln_factorial(r) - ln_factorial(n - r)
}

/// C(n, r) as an exact integer in f64, or `None` once it exceeds 2^53.
fn small_binomial(n: u64, r: u64) -> Option<f64> {
    const EXACT_INT: f64 = 9_007_199_254_740_992.0;
    // every partial product is itself a binomial coefficient
    let mut c = 1.0f64;
    for i in 1..=r {
        let num = c * (n - r + i) as f64;
        if num > EXACT_INT {
            return None;
        }
        c = num / i as f64;
    }
    Some(c)
}

/// Streaming log-sum-exp with the running maximum factored out.
///
/// Terms are folded in the order they are pushed, so results are
/// deterministic for a fixed input order.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    pub fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.sum += (x - self.max).exp();
        }
    }

    /// ln of the accumulated sum; `-inf` when nothing (finite) was pushed.
    pub fn ln(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

impl FromIterator<f64> for LogSumExp {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = LogSumExp::new();
        for x in iter {
            acc.push(x);
        }
        acc
    }
}

/// Relative convergence target for the incomplete gamma expansions.
const GAMMA_EPS: f64 = 1e-14;
const GAMMA_MAX_ITER: usize = 1_000_000;
const TINY: f64 = 1e-300;

/// ln Γ(a, z), the log of the (unregularized) upper incomplete gamma
/// function, for `a > 0`, `z >= 0`.
///
/// Power series for the lower function when `z < a + 1`, Lentz continued
/// fraction for the upper function otherwise.
pub fn ln_upper_gamma(a: f64, z: f64) -> f64 {
    debug_assert!(a > 0.0 && z >= 0.0);
    if z == 0.0 {
        return ln_gamma(a);
    }
    if z < a + 1.0 {
        let ln_p = ln_lower_regularized_series(a, z);
        let lg = ln_gamma(a);
        // Q = 1 - P
        lg + (-ln_p.exp()).ln_1p()
    } else {
        a * z.ln() - z + upper_continued_fraction(a, z).ln()
    }
}

/// Regularized upper incomplete gamma Q(a, z) = Γ(a, z) / Γ(a).
pub fn gamma_q(a: f64, z: f64) -> f64 {
    if z <= 0.0 {
        return 1.0;
    }
    (ln_upper_gamma(a, z) - ln_gamma(a)).exp().min(1.0)
}

/// ln P(a, z) by the series P = z^a e^{-z} / Γ(a+1) Σ z^j / ((a+1)...(a+j)).
fn ln_lower_regularized_series(a: f64, z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut denom = a;
    for _ in 0..GAMMA_MAX_ITER {
        denom += 1.0;
        term *= z / denom;
        sum += term;
        if term.abs() < sum.abs() * GAMMA_EPS {
            break;
        }
    }
    a * z.ln() - z - ln_gamma(a + 1.0) + sum.ln()
}

/// Continued fraction h with Γ(a, z) = z^a e^{-z} h (modified Lentz).
fn upper_continued_fraction(a: f64, z: f64) -> f64 {
    let mut b = z + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < GAMMA_EPS {
            break;
        }
    }
    h
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a minimum of `f` on `[lo, hi]`, stopping when
/// the bracket is narrower than `tol`. Returns the best point seen.
pub fn golden_section_min<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// ln(2π)
pub(crate) fn ln_two_pi() -> f64 {
    (2.0 * PI).ln()
}
