//! Log-domain arithmetic and the small set of special functions used by the
//! occupancy, bound and exact-probability code.
//!
//! Everything here is a pure function. Probabilities that can underflow
//! (binomial weights, ball volumes divided by `2^N`, products of many
//! transition probabilities) travel as [`LogReal`] and are exponentiated only
//! at the end.

use std::cmp::Ordering;
use std::ops::{Div, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Natural logarithm of a nonnegative quantity.
///
/// `LogReal::ZERO` (negative infinity) is the representation of an exact zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogReal(f64);

impl LogReal {
    pub const ZERO: LogReal = LogReal(f64::NEG_INFINITY);
    pub const ONE: LogReal = LogReal(0.0);

    /// Wraps a value that is already a logarithm.
    pub fn from_ln(ln: f64) -> Self {
        debug_assert!(!ln.is_nan(), "log value is NaN");
        LogReal(ln)
    }

    /// Takes the logarithm of a nonnegative value.
    pub fn from_value(x: f64) -> Self {
        debug_assert!(x >= 0.0, "negative value {x} has no LogReal");
        LogReal(x.ln())
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn exp(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// `self^p` for `p >= 0`, with `0^0 = 1`.
    pub fn powf(self, p: f64) -> Self {
        if p == 0.0 {
            LogReal::ONE
        } else {
            LogReal(self.0 * p)
        }
    }
}

impl Mul for LogReal {
    type Output = LogReal;

    fn mul(self, rhs: LogReal) -> LogReal {
        LogReal(self.0 + rhs.0)
    }
}

impl Div for LogReal {
    type Output = LogReal;

    fn div(self, rhs: LogReal) -> LogReal {
        debug_assert!(!rhs.is_zero(), "division by LogReal::ZERO");
        LogReal(self.0 - rhs.0)
    }
}

impl PartialOrd for LogReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

/// Streaming log-sum-exp accumulator.
///
/// Keeps the running maximum and the sum of `exp(t - max)`, rescaling when a
/// larger term arrives.
#[derive(Clone, Copy, Debug)]
pub struct LogSum {
    max: f64,
    scaled: f64,
}

impl Default for LogSum {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSum {
    pub fn new() -> Self {
        LogSum {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    pub fn add(&mut self, term: LogReal) {
        let t = term.ln();
        if t == f64::NEG_INFINITY {
            return;
        }
        if t <= self.max {
            self.scaled += (t - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - t).exp() + 1.0;
            self.max = t;
        }
    }

    pub fn total(&self) -> LogReal {
        if self.max == f64::NEG_INFINITY {
            LogReal::ZERO
        } else {
            LogReal(self.max + self.scaled.ln())
        }
    }
}

/// `ln Σ exp(t_i)` with a max shift and compensated summation.
/// An empty slice (or all-zero terms) gives `LogReal::ZERO`.
pub fn log_sum_exp(terms: &[LogReal]) -> LogReal {
    let max = terms
        .iter()
        .map(|t| t.ln())
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return LogReal::ZERO;
    }
    if max == f64::INFINITY {
        return LogReal(f64::INFINITY);
    }
    // Neumaier summation of the shifted exponentials.
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for t in terms {
        let x = (t.ln() - max).exp();
        let s = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - s) + x;
        } else {
            comp += (x - s) + sum;
        }
        sum = s;
    }
    LogReal(max + (sum + comp).ln())
}

const SMALL_BINOMIAL: u64 = 30;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Stirling-series remainder `ln n! - [(n + 1/2) ln n - n + ln sqrt(2π)]`,
/// valid for `n >= SMALL_BINOMIAL`.
fn stirling_remainder(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    let inv = 1.0 / n;
    let inv2 = inv * inv;
    (S0 - (S1 - (S2 - (S3 - S4 * inv2) * inv2) * inv2) * inv2) * inv
}

/// `ln C(n, k)`. Returns `LogReal::ZERO` when `k > n` so truncated sums can
/// call it without bounds checks.
pub fn log_binomial(n: u64, k: u64) -> LogReal {
    if k > n {
        return LogReal::ZERO;
    }
    let k = k.min(n - k);
    if k == 0 {
        return LogReal::ONE;
    }
    if k < SMALL_BINOMIAL {
        let base = (n - k) as f64;
        let s: f64 = (1..=k)
            .map(|i| ((base + i as f64) / i as f64).ln())
            .sum();
        return LogReal(s);
    }
    let nf = n as f64;
    let kf = k as f64;
    let rest = nf - kf;
    // n ln n - k ln k - (n-k) ln(n-k), split into two positive pieces.
    let entropy = kf * (nf / kf).ln() - rest * (-kf / nf).ln_1p();
    let correction = stirling_remainder(nf) - stirling_remainder(kf) - stirling_remainder(rest);
    let half_logs = 0.5 * (nf.ln() - kf.ln() - rest.ln());
    LogReal(entropy + half_logs + correction - LN_SQRT_2PI)
}

/// `ln [C(n,k) p^k (1-p)^(n-k)]`, exact at the endpoints `p = 0` and `p = 1`.
pub fn log_binomial_pmf(n: u64, k: u64, p: f64) -> LogReal {
    if k > n {
        return LogReal::ZERO;
    }
    let failures = n - k;
    let success_part = if k == 0 {
        0.0
    } else if p == 0.0 {
        return LogReal::ZERO;
    } else {
        k as f64 * p.ln()
    };
    let failure_part = if failures == 0 {
        0.0
    } else if p == 1.0 {
        return LogReal::ZERO;
    } else {
        failures as f64 * (-p).ln_1p()
    };
    LogReal(log_binomial(n, k).ln() + success_part + failure_part)
}

/// Terminating series `Σ_k C(m1,k) C(m2,k-offset) λ^k` in log domain.
///
/// With `offset = 0` this is the Gauss hypergeometric `F(-m1, -m2; 1; λ)`.
/// With `offset = 1` it is the Pascal-rule difference
/// `F(-(m2+1), -m1; 1; λ) - F(-m2, -m1; 1; λ)`, which the occupancy closed
/// forms use without subtracting two nearly equal sums.
pub(crate) fn log_binomial_series(m1: u64, m2: u64, offset: u64, lambda: f64) -> LogReal {
    debug_assert!(lambda >= 0.0);
    let k_max = m1.min(m2 + offset);
    if k_max < offset {
        return LogReal::ZERO;
    }
    if lambda == 0.0 {
        return if offset == 0 { LogReal::ONE } else { LogReal::ZERO };
    }
    let ln_lambda = lambda.ln();
    let mut acc = LogSum::new();
    let mut ln_term = log_binomial(m1, offset).ln() + offset as f64 * ln_lambda;
    let mut k = offset;
    loop {
        acc.add(LogReal(ln_term));
        if k == k_max {
            break;
        }
        // ratio t_{k+1} / t_k
        let j = k - offset;
        let ratio = ((m1 - k) as f64 / (k + 1) as f64) * ((m2 - j) as f64 / (j + 1) as f64) * lambda;
        ln_term += ratio.ln();
        k += 1;
        // Ratios decrease in k; once below one, the remaining tail is a
        // geometric-bounded remainder.
        if ratio < 1.0 {
            let tail_bound = ln_term - (-ratio).ln_1p();
            if tail_bound < acc.total().ln() + (1e-17_f64).ln() {
                acc.add(LogReal(ln_term));
                break;
            }
        }
    }
    acc.total()
}

/// `F(-m1, -m2; 1; λ) = Σ_k C(m1,k) C(m2,k) λ^k` as a [`LogReal`].
pub fn log_hypergeom_term(m1: u64, m2: u64, lambda: f64) -> Result<LogReal> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(invalid("lambda", format!("must be >= 0, got {lambda}")));
    }
    Ok(log_binomial_series(m1, m2, 0, lambda))
}

/// Terminating Gauss hypergeometric `F(-m1, -m2; 1; λ)` for `λ >= 0`.
pub fn hypergeom_term(m1: u64, m2: u64, lambda: f64) -> Result<f64> {
    log_hypergeom_term(m1, m2, lambda).map(LogReal::exp)
}

/// Modified Bessel function of the first kind, orders 0 and 1, by its power
/// series.
pub fn bessel_i(order: u32, z: f64) -> Result<f64> {
    if order > 1 {
        return Err(invalid("order", format!("only 0 and 1 supported, got {order}")));
    }
    if z.is_nan() || z < 0.0 {
        return Err(invalid("z", format!("must be >= 0, got {z}")));
    }
    let half = 0.5 * z;
    let series = bessel_series(order, half * half);
    Ok(if order == 0 { series } else { half * series })
}

/// `I_1(z) / (z/2)`, finite at `z = 0` where it equals one.
pub(crate) fn bessel_i1_over_half_z(z: f64) -> f64 {
    let half = 0.5 * z;
    bessel_series(1, half * half)
}

/// `Σ_k q^k / (k! (k+order)!)` with `q = (z/2)^2`.
fn bessel_series(order: u32, q: f64) -> f64 {
    let nu = order as f64;
    let mut term = 1.0_f64;
    let mut sum = term;
    let mut k = 0.0_f64;
    loop {
        k += 1.0;
        term *= q / (k * (k + nu));
        sum += term;
        if term <= 1e-17 * sum && k * (k + nu) > q {
            break;
        }
        if k > 10_000.0 {
            break;
        }
    }
    sum
}

/// `1 - (1 - q)^t` for `q = exp(log_q)`, without cancellation for tiny `t q`.
///
/// `t` is real because the codebook size `e^{NR}` is generally not an integer.
pub fn prob_at_least_one(log_q: LogReal, t: f64) -> Result<f64> {
    let lq = log_q.ln();
    if lq > 0.0 {
        return Err(Error::ProbabilityAboveOne { value: lq.exp() });
    }
    if t.is_nan() || t < 0.0 {
        return Err(invalid("t", format!("must be >= 0, got {t}")));
    }
    if t == 0.0 || log_q.is_zero() {
        return Ok(0.0);
    }
    if lq == 0.0 {
        return Ok(1.0);
    }
    Ok(-(t * ln_one_minus_exp(lq)).exp_m1())
}

/// `ln(1 - e^x)` for `x < 0`, picking the branch that keeps full precision.
pub(crate) fn ln_one_minus_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}
