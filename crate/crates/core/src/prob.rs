//! Binomial, beta and hypergeometric kernels.
//!
//! Everything that can overflow is accumulated in log space and
//! exponentiated once at the end.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Group sizes of a two-arm trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Design {
    pub n_c: usize,
    pub n_d: usize,
}

impl Design {
    pub fn new(n_c: usize, n_d: usize) -> Result<Self> {
        if n_c == 0 || n_d == 0 {
            return domain(format!("group sizes must be positive, got ({n_c}, {n_d})"));
        }
        Ok(Design { n_c, n_d })
    }

    pub fn n(&self) -> usize {
        self.n_c + self.n_d
    }

    pub fn contains(&self, o: Outcome) -> bool {
        o.s_c <= self.n_c && o.s_d <= self.n_d
    }
}

/// Observed success counts in the control and developmental arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Outcome {
    pub s_c: usize,
    pub s_d: usize,
}

impl Outcome {
    pub fn new(s_c: usize, s_d: usize) -> Self {
        Outcome { s_c, s_d }
    }

    pub fn total(&self) -> usize {
        self.s_c + self.s_d
    }
}

/// Success probabilities `(theta_C, theta_D)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub c: f64,
    pub d: f64,
}

impl Theta {
    pub fn new(c: f64, d: f64) -> Result<Self> {
        check_prob(c)?;
        check_prob(d)?;
        Ok(Theta { c, d })
    }
}

fn check_prob(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return domain(format!("probability {p} outside [0,1]"));
    }
    Ok(())
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln C(n, k)`; `-inf` when `k > n`.
///
/// Uses Stirling remainders so the rounding error scales with `n`, not
/// with `ln n!`.
pub fn ln_choose(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if k == 0 || k == n {
        return 0.0;
    }
    if n <= 30 {
        return ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0);
    }
    let (nf, kf, mf) = (n as f64, k as f64, (n - k) as f64);
    stirlerr(nf)
        - stirlerr(kf)
        - stirlerr(mf)
        - 0.5 * (2.0 * PI * kf * mf / nf).ln()
        - kf * (kf / nf).ln()
        - mf * (mf / nf).ln()
}

/// `ln n! - ln(sqrt(2 pi n) (n/e)^n)`.
fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        return ln_gamma(n + 1.0) - (n + 0.5) * n.ln() + n - 0.5 * (2.0 * PI).ln();
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x/np) + np - x`, accurate when `x` is close to `np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        return s;
    }
    x * (x / np).ln() + np - x
}

/// `a * ln(x)` with `0 * ln 0 = 0`.
#[inline]
pub fn xlogy(a: f64, x: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * x.ln()
    }
}

/// Log binomial pmf without argument checks (saddle-point form).
pub(crate) fn ln_binom_pmf_unchecked(n: usize, s: usize, theta: f64) -> f64 {
    let q = 1.0 - theta;
    if theta == 0.0 {
        return if s == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 0.0 {
        return if s == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let nf = n as f64;
    if s == 0 {
        return if theta < 0.1 { -bd0(nf, nf * q) - nf * theta } else { nf * q.ln() };
    }
    if s == n {
        return if q < 0.1 { -bd0(nf, nf * theta) - nf * q } else { nf * theta.ln() };
    }
    let (x, y) = (s as f64, (n - s) as f64);
    let lc = stirlerr(nf) - stirlerr(x) - stirlerr(y) - bd0(x, nf * theta) - bd0(y, nf * q);
    lc - 0.5 * ((2.0 * PI).ln() + x.ln() + (-x / nf).ln_1p())
}

pub fn binom_pmf(n: usize, s: usize, theta: f64) -> Result<f64> {
    if s > n {
        return domain(format!("s = {s} exceeds n = {n}"));
    }
    check_prob(theta)?;
    Ok(ln_binom_pmf_unchecked(n, s, theta).exp())
}

/// The whole pmf vector `P(X = s)`, `s = 0..=n`.
pub fn binom_pmf_vec(n: usize, theta: f64) -> Result<Vec<f64>> {
    check_prob(theta)?;
    Ok(binom_pmf_vec_unchecked(n, theta))
}

pub(crate) fn binom_pmf_vec_unchecked(n: usize, theta: f64) -> Vec<f64> {
    (0..=n).map(|s| ln_binom_pmf_unchecked(n, s, theta).exp()).collect()
}

pub fn joint_pmf(design: Design, outcome: Outcome, theta: Theta) -> Result<f64> {
    if !design.contains(outcome) {
        return domain(format!("outcome {outcome:?} outside design {design:?}"));
    }
    Ok(binom_pmf(design.n_c, outcome.s_c, theta.c)? * binom_pmf(design.n_d, outcome.s_d, theta.d)?)
}

pub fn log_beta(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return domain(format!("log_beta needs positive arguments, got ({a}, {b})"));
    }
    Ok(ln_beta_unchecked(a, b))
}

#[inline]
pub(crate) fn ln_beta_unchecked(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn reg_inc_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    check_prob(x)?;
    if !(a > 0.0 && b > 0.0) {
        return domain(format!("reg_inc_beta needs positive shape parameters, got ({a}, {b})"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let ln_front = a * x.ln() + b * (1.0 - x).ln() - ln_beta_unchecked(a, b);
    // The continued fraction converges fast on this side of the mean.
    let v = if x < (a + 1.0) / (a + b + 2.0) {
        (ln_front.exp() * beta_cf(x, a, b) / a).clamp(0.0, 1.0)
    } else {
        (1.0 - ln_front.exp() * beta_cf(1.0 - x, b, a) / b).clamp(0.0, 1.0)
    };
    Ok(v)
}

// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=20_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Quantile of Beta(a, b) by bisection on [`reg_inc_beta`].
pub fn beta_quantile(p: f64, a: f64, b: f64) -> Result<f64> {
    check_prob(p)?;
    reg_inc_beta(0.5, a, b)?;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if reg_inc_beta(mid, a, b)? < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Equal-tailed exact binomial interval at confidence `level`.
pub fn clopper_pearson(successes: usize, trials: usize, level: f64) -> Result<(f64, f64)> {
    if successes > trials || trials == 0 {
        return domain(format!("need 0 <= successes <= trials, trials > 0; got {successes}/{trials}"));
    }
    if !(level > 0.0 && level < 1.0) {
        return domain(format!("confidence level {level} outside (0,1)"));
    }
    let tail = 0.5 * (1.0 - level);
    let x = successes as f64;
    let n = trials as f64;
    let lo = if successes == 0 { 0.0 } else { beta_quantile(tail, x, n - x + 1.0)? };
    let hi = if successes == trials { 1.0 } else { beta_quantile(1.0 - tail, x + 1.0, n - x)? };
    Ok((lo, hi))
}

/// Hypergeometric pmf of `S_D = k` given total `s`, groups `n_c`, `n_d`.
pub fn ln_hyper_pmf(n_c: usize, n_d: usize, s: usize, k: usize) -> f64 {
    if k > s || k > n_d || s - k > n_c {
        return f64::NEG_INFINITY;
    }
    ln_choose(n_c, s - k) + ln_choose(n_d, k) - ln_choose(n_c + n_d, s)
}

/// Standard normal cdf.
pub fn normal_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `ln(sum(exp(v)))`, robust to `-inf` entries.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
