//! Linear power objectives over the sample space.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::prob::{clopper_pearson, ln_beta_unchecked, ln_choose, log_sum_exp, Design, Outcome, Theta};
use crate::quad::adaptive_simpson;
use crate::space::{Marginals, SampleSpace};

/// Independent beta prior per arm, integer parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BetaPrior {
    pub alpha_c: u32,
    pub beta_c: u32,
    pub alpha_d: u32,
    pub beta_d: u32,
}

impl BetaPrior {
    pub const UNIFORM: BetaPrior = BetaPrior { alpha_c: 1, beta_c: 1, alpha_d: 1, beta_d: 1 };

    pub fn new(alpha_c: u32, beta_c: u32, alpha_d: u32, beta_d: u32) -> Result<Self> {
        let p = BetaPrior { alpha_c, beta_c, alpha_d, beta_d };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha_c == 0 || self.beta_c == 0 || self.alpha_d == 0 || self.beta_d == 0 {
            return domain(format!("prior parameters must be >= 1, got {self:?}"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveSpec {
    /// Uniform average over `theta_D >= theta_C`.
    Average,
    WeightedAverage {
        prior: BetaPrior,
    },
    /// Minimum power over a finite alternative set.
    Maximin {
        alt_points: Vec<Theta>,
    },
    /// Uniform average over `theta_D >= theta_C + delta`.
    MarginAverage {
        delta: f64,
    },
}

impl ObjectiveSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ObjectiveSpec::Average => Ok(()),
            ObjectiveSpec::WeightedAverage { prior } => prior.validate(),
            ObjectiveSpec::Maximin { alt_points } => {
                if alt_points.is_empty() {
                    return domain("maximin objective needs at least one alternative point");
                }
                for t in alt_points {
                    Theta::new(t.c, t.d)?;
                    if t.d <= t.c {
                        return domain(format!("alternative point {t:?} not inside theta_D > theta_C"));
                    }
                }
                Ok(())
            }
            ObjectiveSpec::MarginAverage { delta } => {
                if !(*delta >= 0.0 && *delta < 1.0) {
                    return domain(format!("margin {delta} outside [0,1)"));
                }
                Ok(())
            }
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ObjectiveSpec::Average => "average",
            ObjectiveSpec::WeightedAverage { .. } => "weighted_average",
            ObjectiveSpec::Maximin { .. } => "maximin",
            ObjectiveSpec::MarginAverage { .. } => "margin_average",
        }
    }
}

/// Average power coefficients: `sum_i c_i d_i` is the power of `d` averaged
/// uniformly over `theta_D >= theta_C`.
pub fn avg_power_coeffs(space: &SampleSpace) -> Vec<f64> {
    beta_triangle_coeffs(space, BetaPrior::UNIFORM)
}

/// Average power under independent beta priors restricted to the triangle,
/// normalized to a probability measure.
pub fn weighted_avg_power_coeffs(space: &SampleSpace, prior: BetaPrior) -> Result<Vec<f64>> {
    prior.validate()?;
    Ok(beta_triangle_coeffs(space, prior))
}

// ln of the integral of theta_C^{a_C-1}(1-theta_C)^{b_C-1} theta_D^{a_D-1}(1-theta_D)^{b_D-1}
// over theta_D >= theta_C, for integer a_D.
fn ln_triangle_integral(a_c: f64, b_c: f64, a_d: u64, b_d: f64) -> f64 {
    let terms: Vec<f64> = (0..a_d)
        .map(|j| {
            let j = j as f64;
            ln_beta_unchecked(a_c + j, b_c + b_d) - (b_d + j).ln() - ln_beta_unchecked(j + 1.0, b_d)
        })
        .collect();
    ln_beta_unchecked(a_d as f64, b_d) + log_sum_exp(&terms)
}

fn beta_triangle_coeffs(space: &SampleSpace, p: BetaPrior) -> Vec<f64> {
    let Design { n_c, n_d } = space.design();
    let ln_norm = ln_triangle_integral(p.alpha_c as f64, p.beta_c as f64, p.alpha_d as u64, p.beta_d as f64);
    (0..space.len())
        .into_par_iter()
        .map(|i| {
            let o = space.outcome(i);
            let a_c = (o.s_c + p.alpha_c as usize) as f64;
            let b_c = (n_c - o.s_c + p.beta_c as usize) as f64;
            let a_d = (o.s_d + p.alpha_d as usize) as u64;
            let b_d = (n_d - o.s_d + p.beta_d as usize) as f64;
            let ln = ln_choose(n_c, o.s_c) + ln_choose(n_d, o.s_d) + ln_triangle_integral(a_c, b_c, a_d, b_d);
            (ln - ln_norm).exp()
        })
        .collect()
}

/// Average power over the shifted triangle `theta_D >= theta_C + delta`,
/// by adaptive quadrature in `theta_C`.
pub fn margin_avg_power_coeffs(space: &SampleSpace, delta: f64, abs_tol: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&delta) {
        return domain(format!("margin {delta} outside [0,1)"));
    }
    let Design { n_c, n_d } = space.design();
    let width = 1.0 - delta;
    let scale = 2.0 / (width * width);
    let coeffs: Vec<Result<f64>> = (0..space.len())
        .into_par_iter()
        .map(|i| {
            let o = space.outcome(i);
            let a_d = o.s_d + 1;
            let b_d = (n_d - o.s_d + 1) as f64;
            // ln[C(n_D, s_D) B(a_D, b_D)] = -ln(n_D + 1)
            let ln_d = ln_choose(n_d, o.s_d) + ln_beta_unchecked(a_d as f64, b_d);
            let ln_terms: Vec<f64> =
                (0..a_d).map(|j| -(b_d + j as f64).ln() - ln_beta_unchecked(j as f64 + 1.0, b_d)).collect();
            let lc = ln_choose(n_c, o.s_c);
            let f = |t: f64| {
                let x = (t + delta).min(1.0);
                if x >= 1.0 {
                    return 0.0;
                }
                let tail: Vec<f64> = ln_terms
                    .iter()
                    .enumerate()
                    .map(|(j, c)| c + crate::prob::xlogy(j as f64, x) + b_d * (1.0 - x).ln())
                    .collect();
                let ln_c = lc + crate::prob::xlogy(o.s_c as f64, t) + crate::prob::xlogy((n_c - o.s_c) as f64, 1.0 - t);
                (ln_c + ln_d + log_sum_exp(&tail)).exp()
            };
            Ok(scale * adaptive_simpson(&f, 0.0, width, abs_tol / scale, 16)?)
        })
        .collect();
    coeffs.into_iter().collect()
}

/// `rows[j][i] = P_{theta_j}(S = s_i)` for each alternative point.
pub fn alt_power_rows(space: &SampleSpace, alt_points: &[Theta]) -> Result<Vec<Vec<f64>>> {
    let m = Marginals::new(space.design());
    alt_points
        .iter()
        .map(|t| {
            Theta::new(t.c, t.d)?;
            Ok(m.joint(*t))
        })
        .collect()
}

/// Margin used for the default maximin alternative, tabulated at total
/// sample sizes 20, 50, 100 and 300 and taken from the nearest entry.
pub fn default_maximin_delta(n: usize) -> f64 {
    const TABLE: [(usize, f64); 4] = [(20, 0.65), (50, 0.40), (100, 0.25), (300, 0.05)];
    let mut best = TABLE[0];
    for e in TABLE {
        if e.0.abs_diff(n) < best.0.abs_diff(n) {
            best = e;
        }
    }
    best.1
}

/// `count` equidistant points on `theta_D = theta_C + delta`, `theta_C in [lo, hi]`.
pub fn shifted_points(delta: f64, lo: f64, hi: f64, count: usize) -> Result<Vec<Theta>> {
    if !(delta > 0.0 && delta < 1.0) || count == 0 || lo > hi || lo < 0.0 || hi > 1.0 - delta + 1e-15 {
        return domain(format!("bad alternative line: delta {delta}, [{lo}, {hi}], {count} points"));
    }
    if count == 1 {
        return Ok(vec![Theta { c: lo, d: (lo + delta).min(1.0) }]);
    }
    let m = (count - 1) as f64;
    Ok((0..count)
        .map(|k| {
            let c = if k + 1 == count { hi } else { lo + (hi - lo) * k as f64 / m };
            Theta { c, d: (c + delta).min(1.0) }
        })
        .collect())
}

/// Default maximin alternative: 100 points on `theta_D = theta_C + delta_n`.
pub fn default_maximin_points(design: Design) -> Vec<Theta> {
    let delta = default_maximin_delta(design.n());
    shifted_points(delta, 0.0, 1.0 - delta, 100).expect("tabulated margins are valid")
}

/// Alternative built around an observed outcome: the line through the
/// observed rates, restricted to the Clopper-Pearson interval of the
/// control rate.
pub fn observed_interval_points(design: Design, observed: Outcome, level: f64, count: usize) -> Result<Vec<Theta>> {
    let tc = observed.s_c as f64 / design.n_c as f64;
    let td = observed.s_d as f64 / design.n_d as f64;
    let delta = td - tc;
    if delta <= 0.0 {
        return domain("observed treatment rate must exceed the control rate");
    }
    let (lo, hi) = clopper_pearson(observed.s_c, design.n_c, level)?;
    let hi = hi.min(1.0 - delta);
    if lo > hi {
        return domain("confidence interval does not meet the alternative line");
    }
    shifted_points(delta, lo, hi, count)
}

/// The single point at the observed rates.
pub fn observed_point(design: Design, observed: Outcome) -> Result<Vec<Theta>> {
    let t = Theta::new(observed.s_c as f64 / design.n_c as f64, observed.s_d as f64 / design.n_d as f64)?;
    Ok(vec![t])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(a: usize, b: usize) -> SampleSpace {
        SampleSpace::enumerate(Design::new(a, b).unwrap())
    }

    #[test]
    fn smallest_design() {
        let c = avg_power_coeffs(&space(1, 1));
        assert!((c[1] - 5.0 / 12.0).abs() < 1e-14);
        assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn uniform_prior_is_bitwise_unweighted() {
        let s = space(7, 4);
        assert_eq!(avg_power_coeffs(&s), weighted_avg_power_coeffs(&s, BetaPrior::UNIFORM).unwrap());
    }

    #[test]
    fn weighted_sums_to_one() {
        let s = space(12, 9);
        let c = weighted_avg_power_coeffs(&s, BetaPrior::new(2, 3, 4, 1).unwrap()).unwrap();
        assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(BetaPrior::new(0, 1, 1, 1).is_err());
    }

    #[test]
    fn margin_continuity_and_mass() {
        let s = space(5, 6);
        let a = avg_power_coeffs(&s);
        let m = margin_avg_power_coeffs(&s, 0.0, 1e-9).unwrap();
        for (x, y) in a.iter().zip(&m) {
            assert!((x - y).abs() < 1e-7);
        }
        let m = margin_avg_power_coeffs(&s, 0.3, 1e-9).unwrap();
        assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn alternative_sets() {
        assert_eq!(default_maximin_delta(20), 0.65);
        assert_eq!(default_maximin_delta(280), 0.05);
        let p = default_maximin_points(Design::new(10, 10).unwrap());
        assert_eq!(p.len(), 100);
        assert_eq!(p[0], Theta { c: 0.0, d: 0.65 });
        assert!((p[99].d - 1.0).abs() < 1e-15);
        let rows = alt_power_rows(&space(3, 4), &[Theta { c: 0.0, d: 1.0 }]).unwrap();
        assert_eq!(rows[0][4], 1.0);
        let d = Design::new(148, 132).unwrap();
        let pts = observed_interval_points(d, Outcome::new(140, 131), 0.95, 100).unwrap();
        assert_eq!(pts.len(), 100);
        assert!(pts.iter().all(|t| t.d <= 1.0 && t.d > t.c));
    }
}
