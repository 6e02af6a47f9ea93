//! Independent oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use binomial_knapsack::ilp::IlpModel;
use binomial_knapsack::space::DecisionVector;

/// Every staircase region: per control count, reject `s_D >= t(s_C)`
/// with `t` nondecreasing in `s_C`.
pub fn staircases(n_c: usize, n_d: usize) -> Vec<DecisionVector> {
    fn rec(c: usize, lo: usize, n_c: usize, n_d: usize, t: &mut Vec<usize>, out: &mut Vec<DecisionVector>) {
        if c > n_c {
            let w = n_d + 1;
            let idx = (0..=n_c).flat_map(|sc| (t[sc]..=n_d).map(move |sd| sc * w + sd)).collect::<Vec<_>>();
            out.push(DecisionVector::from_indices((n_c + 1) * w, idx));
            return;
        }
        for v in lo..=n_d + 1 {
            t.push(v);
            rec(c + 1, v, n_c, n_d, t, out);
            t.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, 0, n_c, n_d, &mut Vec::new(), &mut out);
    out
}

/// Best objective over `regions` among those the model accepts.
pub fn brute(model: &IlpModel, regions: &[DecisionVector]) -> f64 {
    regions.iter().filter_map(|d| model.evaluate(d)).map(|v| v.0).fold(f64::NEG_INFINITY, f64::max)
}

pub fn binom_u(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// `C(n,k)` as a float through a running product.
pub fn choose(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Binomial pmf from the textbook formula; fine for small `n`.
pub fn pmf(n: usize, s: usize, t: f64) -> f64 {
    choose(n, s) * t.powi(s as i32) * (1.0 - t).powi((n - s) as i32)
}

/// Rejection rate of a region at `(tc, td)` by direct summation.
pub fn rate(n_c: usize, n_d: usize, region: &DecisionVector, tc: f64, td: f64) -> f64 {
    let w = n_d + 1;
    region.ones().map(|i| pmf(n_c, i / w, tc) * pmf(n_d, i % w, td)).sum()
}

#[allow(clippy::excessive_precision)]
/// 15-point Gauss-Kronrod with embedded 7-point Gauss error estimate.
fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    const XK: [f64; 8] = [
        0.991455371120812639206854697526329,
        0.949107912342758524526189684047851,
        0.864864423359769072789712788640926,
        0.741531185599394439863864773280788,
        0.586087235467691130294144845693013,
        0.405845151377397166906606412076961,
        0.207784955007898467600689403773245,
        0.000000000000000000000000000000000,
    ];
    const WK: [f64; 8] = [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
    ];
    const WG: [f64; 4] = [
        0.129484966168869693270611432679082,
        0.279705391489276667901467771423780,
        0.381830050505118944950369775488975,
        0.417959183673469387755102040816327,
    ];
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XK[j];
        let s = f(c - x) + f(c + x);
        k += WK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod by recursive bisection.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, e) = gk15(f, a, b);
        if e <= tol || depth == 0 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth - 1) + rec(f, m, b, 0.5 * tol, depth - 1)
    }
    if b <= a {
        0.0
    } else {
        rec(f, a, b, tol, 40)
    }
}

/// Uniform average over `theta_D >= theta_C + delta` of the probability of
/// `(s_c, s_d)`, by nested adaptive quadrature.
pub fn triangle_average(n_c: usize, n_d: usize, s_c: usize, s_d: usize, delta: f64, tol: f64) -> f64 {
    let width = 1.0 - delta;
    let area = 0.5 * width * width;
    let inner = |tc: f64| {
        let g = |td: f64| pmf(n_d, s_d, td);
        pmf(n_c, s_c, tc) * integrate(&g, tc + delta, 1.0, tol * 1e-2)
    };
    integrate(&inner, 0.0, width, tol * area) / area
}

/// Max and min of `f` on a uniform grid over `[lo, hi]` including both ends.
pub fn dense_extrema(f: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> (f64, f64) {
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    let mut mx = f64::NEG_INFINITY;
    let mut mn = f64::INFINITY;
    for i in 0..=n {
        let t = if i == n { hi } else { lo + step * i as f64 };
        let v = f(t);
        mx = mx.max(v);
        mn = mn.min(v);
    }
    (mx, mn)
}

/// The maximization kernel on the margin boundary, by direct powers.
pub fn hbar_kernel(n_c: usize, n_d: usize, s_c: usize, s_d: usize, delta: f64, t: f64) -> f64 {
    if s_d == 0 {
        return 0.0;
    }
    let g = t + delta;
    t.powi(s_c as i32)
        * g.powi(s_d as i32 - 1)
        * (1.0 - t).powi((n_c - s_c) as i32)
        * (1.0 - g).max(0.0).powi((n_d - s_d) as i32)
}

/// The minimization kernel on the margin boundary.
pub fn hunder_kernel(n_c: usize, n_d: usize, s_c: usize, s_d: usize, delta: f64, t: f64) -> f64 {
    if s_c == n_c {
        return 0.0;
    }
    let g = t + delta;
    t.powi(s_c as i32)
        * g.powi(s_d as i32)
        * (1.0 - t).powi((n_c - s_c) as i32 - 1)
        * (1.0 - g).max(0.0).powi((n_d - s_d) as i32)
}

/// Hypergeometric upper tail `P(X_D >= s_d | total)` by enumeration with
/// exact integer binomials.
pub fn fisher_tail(n_c: usize, n_d: usize, s_c: usize, s_d: usize) -> f64 {
    hyper_tail(n_c, n_d, s_c + s_d, s_d)
}

/// `P(X_D >= k)` for the hypergeometric law with `total` successes.
pub fn hyper_tail(n_c: usize, n_d: usize, total: usize, k: usize) -> f64 {
    let s_d = k;
    let b = |n: usize, k: usize| {
        if k > n {
            0u128
        } else {
            (0..k as u128).fold(1u128, |acc, i| acc * (n as u128 - i) / (i + 1))
        }
    };
    let denom = b(n_c + n_d, total) as f64;
    let hi = total.min(n_d);
    (s_d..=hi).filter(|&x| total - x <= n_c).map(|x| (b(n_d, x) * b(n_c, total - x)) as f64).sum::<f64>() / denom
}
