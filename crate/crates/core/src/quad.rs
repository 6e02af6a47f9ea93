//! Adaptive Simpson quadrature.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// The interval is first split into `panels` equal pieces so that narrow
/// peaks are not missed by the coarse initial estimate.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, panels: usize) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    let mut worst = 0.0f64;
    let ptol = tol / panels as f64;
    for k in 0..panels {
        let lo = a + h * k as f64;
        let hi = if k + 1 == panels { b } else { lo + h };
        let (flo, fmid, fhi) = (f(lo), f(0.5 * (lo + hi)), f(hi));
        let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
        let (v, err) = step(f, lo, hi, flo, fmid, fhi, whole, ptol, MAX_DEPTH);
        total += v;
        worst += err;
    }
    if worst > tol {
        return Err(Error::Quadrature { achieved: worst, requested: tol });
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> (f64, f64) {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if diff.abs() <= 15.0 * tol || depth == 0 {
        let err = if depth == 0 { diff.abs() / 15.0 } else { 0.0 };
        return (left + right + diff / 15.0, err);
    }
    let (l, el) = step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1);
    let (r, er) = step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
    (l + r, el + er)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_smooth() {
        let v = adaptive_simpson(&|x| x.powi(12) * (1.0 - x).powi(7), 0.0, 1.0, 1e-14, 8).unwrap();
        // B(13, 8) = 12! 7! / 20!
        let exact = 479001600.0 * 5040.0 / 2432902008176640000.0;
        assert!((v - exact).abs() < 1e-14);
        let v = adaptive_simpson(&|x| x.sin(), 0.0, std::f64::consts::PI, 1e-12, 1).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }
}
