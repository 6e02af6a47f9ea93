//! Null boundary `theta_D = g0(theta_C)`, its grid, the probability rows
//! and the Lipschitz slack rows that bound the type-I error between grid
//! points.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::prob::{ln_choose, Design, Outcome, Theta};
use crate::space::{IncidenceRows, Marginals, SampleSpace};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user supplied increasing boundary with derivative, defined on `domain`.
#[derive(Clone)]
pub struct CustomBoundary {
    pub name: String,
    pub g: RealFn,
    pub dg: RealFn,
    pub domain: (f64, f64),
}

#[derive(Clone)]
pub enum BoundaryFn {
    Identity,
    /// `g0(theta) = theta + delta`.
    Margin(f64),
    Custom(CustomBoundary),
}

impl fmt::Debug for BoundaryFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryFn::Identity => write!(f, "Identity"),
            BoundaryFn::Margin(d) => write!(f, "Margin({d})"),
            BoundaryFn::Custom(c) => write!(f, "Custom({})", c.name),
        }
    }
}

impl BoundaryFn {
    pub fn margin(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return domain(format!("margin {delta} outside (0,1)"));
        }
        Ok(BoundaryFn::Margin(delta))
    }

    pub fn g(&self, t: f64) -> f64 {
        match self {
            BoundaryFn::Identity => t,
            BoundaryFn::Margin(d) => t + d,
            BoundaryFn::Custom(c) => (c.g)(t),
        }
    }

    pub fn dg(&self, t: f64) -> f64 {
        match self {
            BoundaryFn::Identity | BoundaryFn::Margin(_) => 1.0,
            BoundaryFn::Custom(c) => (c.dg)(t),
        }
    }

    /// Range of `theta_C` on which the boundary stays inside the unit square.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            BoundaryFn::Identity => (0.0, 1.0),
            BoundaryFn::Margin(d) => (0.0, 1.0 - d),
            BoundaryFn::Custom(c) => c.domain,
        }
    }

    /// The boundary point above `theta_C`, clamped against rounding.
    pub fn point(&self, t: f64) -> Theta {
        Theta { c: t, d: self.g(t).clamp(0.0, 1.0) }
    }

    pub fn delta(&self) -> f64 {
        match self {
            BoundaryFn::Margin(d) => *d,
            _ => 0.0,
        }
    }

    pub fn is_custom(&self) -> bool {
        matches!(self, BoundaryFn::Custom(_))
    }

    fn check_interval(&self, lo: f64, hi: f64) -> Result<()> {
        let (a, b) = self.domain();
        if !(lo <= hi && lo >= a - 1e-15 && hi <= b + 1e-15) {
            return domain(format!("interval [{lo}, {hi}] outside boundary domain [{a}, {b}]"));
        }
        Ok(())
    }
}

/// Strictly increasing `theta_C` grid covering the boundary domain.
#[derive(Debug, Clone, PartialEq)]
pub struct NullGrid {
    thetas: Vec<f64>,
}

impl NullGrid {
    pub fn equidistant(boundary: &BoundaryFn, k: usize) -> Result<Self> {
        if k < 2 {
            return domain("grid needs at least two points");
        }
        let (a, b) = boundary.domain();
        let m = (k - 1) as f64;
        let thetas = (0..k).map(|j| if j == k - 1 { b } else { a + (b - a) * j as f64 / m }).collect();
        Ok(NullGrid { thetas })
    }

    /// Step 0.001 on the identity boundary, 1000 points on a margin boundary.
    pub fn default_for(boundary: &BoundaryFn) -> Self {
        let k = match boundary {
            BoundaryFn::Margin(_) => 1000,
            _ => 1001,
        };
        NullGrid::equidistant(boundary, k).expect("k >= 2")
    }

    pub fn from_thetas(boundary: &BoundaryFn, thetas: Vec<f64>) -> Result<Self> {
        let (a, b) = boundary.domain();
        if thetas.len() < 2 || thetas[0] != a || *thetas.last().unwrap() != b {
            return domain(format!("grid must run from {a} to {b} with at least two points"));
        }
        if thetas.windows(2).any(|w| w[0] >= w[1]) {
            return domain("grid must be strictly increasing");
        }
        Ok(NullGrid { thetas })
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }
}

/// `p_rows[j][i] = P_{(theta_j, g0(theta_j))}(S = s_i)`.
pub fn build_p_rows(space: &SampleSpace, boundary: &BoundaryFn, grid: &NullGrid) -> Result<Vec<Vec<f64>>> {
    let (a, b) = boundary.domain();
    if grid.thetas[0] < a || *grid.thetas.last().unwrap() > b {
        return domain("grid outside boundary domain");
    }
    let m = Marginals::new(space.design());
    Ok(grid.thetas.par_iter().map(|&t| m.joint(boundary.point(t))).collect())
}

/// Exponents of `theta`, `g0`, `1 - theta`, `1 - g0` in a boundary kernel.
#[derive(Debug, Clone, Copy)]
struct Kernel {
    e: [f64; 4],
    with_dg: bool,
}

impl Kernel {
    fn ln_eval(&self, b: &BoundaryFn, t: f64) -> f64 {
        let g = b.g(t);
        let mut v = term(self.e[0], t) + term(self.e[1], g) + term(self.e[2], 1.0 - t) + term(self.e[3], 1.0 - g);
        if self.with_dg {
            let dg = b.dg(t);
            v += if dg > 0.0 { dg.ln() } else { f64::NEG_INFINITY };
        }
        v
    }
}

#[inline]
fn term(e: f64, x: f64) -> f64 {
    if e == 0.0 {
        0.0
    } else if x <= 0.0 {
        f64::NEG_INFINITY
    } else {
        e * x.ln()
    }
}

fn hbar_kernel(design: Design, o: Outcome) -> Kernel {
    Kernel {
        e: [o.s_c as f64, o.s_d as f64 - 1.0, (design.n_c - o.s_c) as f64, (design.n_d - o.s_d) as f64],
        with_dg: true,
    }
}

fn hunder_kernel(design: Design, o: Outcome) -> Kernel {
    Kernel {
        e: [o.s_c as f64, o.s_d as f64, (design.n_c - o.s_c) as f64 - 1.0, (design.n_d - o.s_d) as f64],
        with_dg: false,
    }
}

/// Derivative cubic of a margin kernel: zero set of
/// `d/dtheta ln kernel` times `theta (theta+delta) (1-theta) (1-theta-delta)`.
/// Coefficients highest degree first.
fn margin_cubic(e: [f64; 4], delta: f64) -> [f64; 4] {
    // linear factors as (constant, slope)
    let f_t = (0.0, 1.0);
    let f_g = (delta, 1.0);
    let f_1t = (1.0, -1.0);
    let f_1g = (1.0 - delta, -1.0);
    let prod3 = |a: (f64, f64), b: (f64, f64), c: (f64, f64)| -> [f64; 4] {
        // ascending powers
        let ab = [a.0 * b.0, a.0 * b.1 + a.1 * b.0, a.1 * b.1];
        [ab[0] * c.0, ab[0] * c.1 + ab[1] * c.0, ab[1] * c.1 + ab[2] * c.0, ab[2] * c.1]
    };
    let parts = [
        (e[0], prod3(f_g, f_1t, f_1g)),
        (e[1], prod3(f_t, f_1t, f_1g)),
        (-e[2], prod3(f_t, f_g, f_1g)),
        (-e[3], prod3(f_t, f_g, f_1t)),
    ];
    let mut asc = [0.0; 4];
    for (w, p) in parts {
        for k in 0..4 {
            asc[k] += w * p[k];
        }
    }
    [asc[3], asc[2], asc[1], asc[0]]
}

/// Cubic coefficients `(a, b, c, d)` of the derivative numerator for the
/// maximization kernel on a margin boundary.
pub fn hbar_margin_cubic(design: Design, o: Outcome, delta: f64) -> [f64; 4] {
    margin_cubic(hbar_kernel(design, o).e, delta)
}

/// Same for the minimization kernel.
pub fn hunder_margin_cubic(design: Design, o: Outcome, delta: f64) -> [f64; 4] {
    margin_cubic(hunder_kernel(design, o).e, delta)
}

/// Real parts of the three Cardano roots of `a x^3 + b x^2 + c x + d`.
pub fn cardano_roots(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs()).max(d.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if a.abs() <= 1e-14 * scale {
        return quadratic_roots(b, c, d);
    }
    let d0 = b * b - 3.0 * a * c;
    let d1 = 2.0 * b * b * b - 9.0 * a * b * c + 27.0 * a * a * d;
    let sq = Complex64::new(d1 * d1 - 4.0 * d0 * d0 * d0, 0.0).sqrt();
    let size = d0.abs().sqrt().max(d1.abs().cbrt());
    let mut cc = ((Complex64::new(d1, 0.0) + sq) / 2.0).cbrt();
    if cc.norm() <= 1e-12 * size {
        cc = ((Complex64::new(d1, 0.0) - sq) / 2.0).cbrt();
    }
    if cc.norm() <= 1e-12 * size || size == 0.0 {
        let r = -b / (3.0 * a);
        return vec![r, r, r];
    }
    let xi = Complex64::new(-0.5, 3f64.sqrt() / 2.0);
    let mut out = Vec::with_capacity(3);
    let mut xk = Complex64::new(1.0, 0.0);
    for _ in 0..3 {
        let ck = xk * cc;
        let r = -(Complex64::new(b, 0.0) + ck + d0 / ck) / (3.0 * a);
        let mut x = r.re;
        if r.im.abs() <= 1e-7 * (1.0 + r.re.abs()) {
            x = newton_polish([a, b, c, d], x);
        }
        out.push(x);
        xk *= xi;
    }
    out
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b == 0.0 { Vec::new() } else { vec![-c / b] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![-b / (2.0 * a)];
    }
    let s = disc.sqrt();
    let q = -0.5 * (b + b.signum() * s);
    if q == 0.0 {
        return vec![0.0, 0.0];
    }
    vec![q / a, c / q]
}

fn newton_polish(p: [f64; 4], mut x: f64) -> f64 {
    let f = |x: f64| ((p[0] * x + p[1]) * x + p[2]) * x + p[3];
    for _ in 0..3 {
        let fx = f(x);
        let df = (3.0 * p[0] * x + 2.0 * p[1]) * x + p[2];
        if df == 0.0 {
            break;
        }
        let nx = x - fx / df;
        if !nx.is_finite() || f(nx).abs() >= fx.abs() {
            break;
        }
        x = nx;
    }
    x
}

fn extremum_ln(b: &BoundaryFn, k: Kernel, lo: f64, hi: f64, maximize: bool) -> (f64, bool) {
    let mut cand = vec![lo, hi];
    let heuristic = match b {
        BoundaryFn::Identity => {
            // theta^x (1-theta)^y has its only critical point at x/(x+y)
            let x = k.e[0] + k.e[1];
            let y = k.e[2] + k.e[3];
            if x + y > 0.0 {
                cand.push((x / (x + y)).clamp(lo, hi));
            }
            false
        }
        BoundaryFn::Margin(delta) => {
            let p = margin_cubic(k.e, *delta);
            cand.extend(cardano_roots(p[0], p[1], p[2], p[3]).into_iter().map(|r| r.clamp(lo, hi)));
            false
        }
        BoundaryFn::Custom(_) => {
            cand.push(sampled_extremum(b, k, lo, hi, maximize));
            true
        }
    };
    let vals = cand.iter().map(|&t| k.ln_eval(b, t));
    let v = if maximize { vals.fold(f64::NEG_INFINITY, f64::max) } else { vals.fold(f64::INFINITY, f64::min) };
    (v, heuristic)
}

// Dense sampling plus golden-section refinement around the best samples.
fn sampled_extremum(b: &BoundaryFn, k: Kernel, lo: f64, hi: f64, maximize: bool) -> f64 {
    const SAMPLES: usize = 2001;
    if hi <= lo {
        return lo;
    }
    let sign = if maximize { 1.0 } else { -1.0 };
    let h = (hi - lo) / (SAMPLES - 1) as f64;
    let f = |t: f64| sign * k.ln_eval(b, t);
    let mut vals: Vec<(f64, usize)> = (0..SAMPLES).map(|i| (f(lo + h * i as f64), i)).collect();
    vals.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    let mut best = (vals[0].0, lo + h * vals[0].1 as f64);
    for &(_, i) in vals.iter().take(3) {
        let a = lo + h * i.saturating_sub(1) as f64;
        let c = (lo + h * (i + 1) as f64).min(hi);
        let t = golden_max(&f, a, c, 1e-12);
        let v = f(t);
        if v > best.0 {
            best = (v, t);
        }
    }
    best.1
}

/// Golden-section search for a maximum of `f` on `[a, b]`.
pub(crate) fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
    }
    let m = 0.5 * (a + b);
    if f(m) >= f1.max(f2) {
        m
    } else if f1 >= f2 {
        x1
    } else {
        x2
    }
}

/// Maximum over `[lo, hi]` of `g0' theta^{s_C} g0^{s_D-1} (1-theta)^{n_C-s_C} (1-g0)^{n_D-s_D}`.
/// Zero when `s_D = 0`, where the coefficient using it vanishes.
pub fn hbar(design: Design, o: Outcome, boundary: &BoundaryFn, lo: f64, hi: f64) -> Result<f64> {
    boundary.check_interval(lo, hi)?;
    check_outcome(design, o)?;
    Ok(ln_hbar(design, o, boundary, lo, hi).0.exp())
}

/// Minimum over `[lo, hi]` of `theta^{s_C} g0^{s_D} (1-theta)^{n_C-s_C-1} (1-g0)^{n_D-s_D}`.
/// Zero when `s_C = n_C`.
pub fn hunder(design: Design, o: Outcome, boundary: &BoundaryFn, lo: f64, hi: f64) -> Result<f64> {
    boundary.check_interval(lo, hi)?;
    check_outcome(design, o)?;
    Ok(ln_hunder(design, o, boundary, lo, hi).0.exp())
}

fn check_outcome(design: Design, o: Outcome) -> Result<()> {
    if !design.contains(o) {
        return domain(format!("outcome {o:?} outside design {design:?}"));
    }
    Ok(())
}

fn ln_hbar(design: Design, o: Outcome, b: &BoundaryFn, lo: f64, hi: f64) -> (f64, bool) {
    if o.s_d == 0 {
        return (f64::NEG_INFINITY, false);
    }
    extremum_ln(b, hbar_kernel(design, o), lo, hi, true)
}

fn ln_hunder(design: Design, o: Outcome, b: &BoundaryFn, lo: f64, hi: f64) -> (f64, bool) {
    if o.s_c == design.n_c {
        return (f64::NEG_INFINITY, false);
    }
    extremum_ln(b, hunder_kernel(design, o), lo, hi, false)
}

/// `slack_rows[j] = m_{j,D}^T A_D - m_{j,C}^T A_C` for `j = 0..K-1`.
/// The flag is set when a custom boundary made the extremization heuristic.
pub fn build_slack_rows(
    space: &SampleSpace,
    boundary: &BoundaryFn,
    grid: &NullGrid,
    inc: &IncidenceRows,
) -> Result<(Vec<Vec<f64>>, bool)> {
    let design = space.design();
    if inc.len() != space.len() {
        return Err(crate::Error::SizeMismatch { expected: space.len(), got: inc.len() });
    }
    let th = grid.thetas();
    boundary.check_interval(th[0], th[th.len() - 1])?;
    let n = space.len();
    // binomial factors of the two coefficients, per outcome
    let fac: Vec<(f64, f64)> = space
        .outcomes()
        .map(|o| {
            let fd = if o.s_d == 0 {
                f64::NEG_INFINITY
            } else {
                (design.n_d as f64).ln() + ln_choose(design.n_c, o.s_c) + ln_choose(design.n_d - 1, o.s_d - 1)
            };
            let fc = if o.s_c == design.n_c {
                f64::NEG_INFINITY
            } else {
                (design.n_c as f64).ln() + ln_choose(design.n_c - 1, o.s_c) + ln_choose(design.n_d, o.s_d)
            };
            (fd, fc)
        })
        .collect();
    let rows: Vec<(Vec<f64>, bool)> = (0..th.len() - 1)
        .into_par_iter()
        .map(|j| {
            let (lo, hi) = (th[j], th[j + 1]);
            let lw = (hi - lo).ln();
            let mut row = vec![0.0; n];
            let mut heur = false;
            for i in 0..n {
                let o = space.outcome(i);
                let (hb, h1) = ln_hbar(design, o, boundary, lo, hi);
                let (hu, h2) = ln_hunder(design, o, boundary, lo, hi);
                heur |= h1 | h2;
                let md = (fac[i].0 + lw + hb).exp();
                let mc = (fac[i].1 + lw + hu).exp();
                if md > 0.0 {
                    row[i] += md;
                    if let Some(k) = inc.a_d[i] {
                        row[k] -= md;
                    }
                }
                if mc > 0.0 {
                    row[i] -= mc;
                    if let Some(k) = inc.a_c[i] {
                        row[k] += mc;
                    }
                }
            }
            (row, heur)
        })
        .collect();
    let heuristic = rows.iter().any(|r| r.1);
    Ok((rows.into_iter().map(|r| r.0).collect(), heuristic))
}

/// Probability rows and slack rows of one boundary discretization.
#[derive(Debug, Clone)]
pub struct NullConstraintSet {
    pub p_rows: Vec<Vec<f64>>,
    pub slack_rows: Vec<Vec<f64>>,
    /// Set when the slack bound rests on sampled rather than exact extremization.
    pub heuristic_bound: bool,
}

impl NullConstraintSet {
    pub fn build(space: &SampleSpace, boundary: &BoundaryFn, grid: &NullGrid) -> Result<Self> {
        let inc = IncidenceRows::new(space);
        let p_rows = build_p_rows(space, boundary, grid)?;
        let (slack_rows, heuristic_bound) = build_slack_rows(space, boundary, grid, &inc)?;
        Ok(NullConstraintSet { p_rows, slack_rows, heuristic_bound })
    }
}
