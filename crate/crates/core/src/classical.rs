//! Comparator tests: Fisher, mid-p, Z statistics, SRLR, and their
//! unconditional, Berger-Boos and estimated-p versions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{golden_max, BoundaryFn};
use crate::error::{domain, Result};
use crate::prob::{clopper_pearson, ln_hyper_pmf, normal_cdf, xlogy, Design, Outcome, Theta};
use crate::space::{DecisionVector, Marginals, SampleSpace};

/// Relative tolerance when collecting outcomes whose statistic ties the observed one.
pub const TIE_RTOL: f64 = 1e-10;
const GRID_STEP: f64 = 1e-3;
const GOLDEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatKind {
    /// Fisher's exact p-value used as a statistic (Boschloo).
    FisherP,
    FisherMidp,
    ZPooled,
    /// `(theta_C + delta - theta_D) / sd` with unpooled variance.
    ZUnpooled {
        delta: f64,
    },
    /// Signed root likelihood ratio.
    Srlr,
}

impl StatKind {
    pub fn smaller_is_extreme(&self) -> bool {
        !matches!(self, StatKind::Srlr)
    }

    /// Null boundary the statistic is calibrated on.
    pub fn null_boundary(&self) -> Result<BoundaryFn> {
        match *self {
            StatKind::ZUnpooled { delta } if delta > 0.0 => BoundaryFn::margin(delta),
            StatKind::ZUnpooled { delta } if delta < 0.0 => domain(format!("margin {delta} must be >= 0")),
            _ => Ok(BoundaryFn::Identity),
        }
    }

    pub fn label(&self) -> String {
        match self {
            StatKind::FisherP => "B".into(),
            StatKind::FisherMidp => "FMP".into(),
            StatKind::ZPooled => "ZP".into(),
            StatKind::ZUnpooled { delta } if *delta == 0.0 => "ZU".into(),
            StatKind::ZUnpooled { delta } => format!("ZU(delta={delta})"),
            StatKind::Srlr => "SRLR".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestStatistic {
    pub kind: StatKind,
    pub value: f64,
    pub smaller_is_extreme: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UncondMethod {
    GridRefine,
    BergerBoos { gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncondResult {
    pub p_value: f64,
    /// Boundary parameter (the control rate) at which the supremum is attained.
    pub maximizing_theta: f64,
    pub method: UncondMethod,
}

fn check(design: Design, o: Outcome) -> Result<()> {
    if !design.contains(o) {
        return domain(format!("outcome {o:?} outside design {design:?}"));
    }
    Ok(())
}

/// `P(S_D >= s_D | S = s)` under the hypergeometric law, summed in
/// ascending `s_D`.
pub fn fisher_p(design: Design, observed: Outcome) -> Result<f64> {
    check(design, observed)?;
    let s = observed.total();
    let hi = s.min(design.n_d);
    let mut p = 0.0;
    for k in observed.s_d..=hi {
        p += ln_hyper_pmf(design.n_c, design.n_d, s, k).exp();
    }
    Ok(p.min(1.0))
}

pub fn fisher_midp(design: Design, observed: Outcome) -> Result<f64> {
    let p = fisher_p(design, observed)?;
    let mass = ln_hyper_pmf(design.n_c, design.n_d, observed.total(), observed.s_d).exp();
    Ok((p - 0.5 * mass).max(0.0))
}

fn ln_lik(s: f64, n: f64, t: f64) -> f64 {
    xlogy(s, t) + xlogy(n - s, 1.0 - t)
}

pub fn statistic(kind: StatKind, design: Design, observed: Outcome) -> Result<TestStatistic> {
    check(design, observed)?;
    let (nc, nd) = (design.n_c as f64, design.n_d as f64);
    let (sc, sd) = (observed.s_c as f64, observed.s_d as f64);
    let (tc, td) = (sc / nc, sd / nd);
    let value = match kind {
        StatKind::FisherP => fisher_p(design, observed)?,
        StatKind::FisherMidp => fisher_midp(design, observed)?,
        StatKind::ZPooled => {
            let pooled = (sc + sd) / (nc + nd);
            let var = pooled * (1.0 - pooled) * (1.0 / nc + 1.0 / nd);
            let num = tc - td;
            if var > 0.0 {
                num / var.sqrt()
            } else {
                times_infinity(num)
            }
        }
        StatKind::ZUnpooled { delta } => {
            let var = tc * (1.0 - tc) / nc + td * (1.0 - td) / nd;
            let num = tc + delta - td;
            if var > 0.0 {
                num / var.sqrt()
            } else {
                times_infinity(num)
            }
        }
        StatKind::Srlr => {
            let pooled = (sc + sd) / (nc + nd);
            let full = ln_lik(sc, nc, tc) + ln_lik(sd, nd, td);
            let null = ln_lik(sc, nc, pooled) + ln_lik(sd, nd, pooled);
            let r = (2.0 * (full - null)).max(0.0).sqrt();
            if td > tc {
                r
            } else if td < tc {
                -r
            } else {
                0.0
            }
        }
    };
    Ok(TestStatistic { kind, value, smaller_is_extreme: kind.smaller_is_extreme() })
}

// x * inf with 0 * inf = 0
fn times_infinity(x: f64) -> f64 {
    if x > 0.0 {
        f64::INFINITY
    } else if x < 0.0 {
        f64::NEG_INFINITY
    } else {
        0.0
    }
}

/// Statistic over the whole sample space, oriented so smaller is more extreme.
pub fn oriented_statistics(kind: StatKind, space: &SampleSpace) -> Result<Vec<f64>> {
    let design = space.design();
    space
        .outcomes()
        .map(|o| {
            let t = statistic(kind, design, o)?;
            Ok(if t.smaller_is_extreme { t.value } else { -t.value })
        })
        .collect()
}

fn ties(a: f64, b: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= TIE_RTOL * a.abs().max(b.abs()).max(1.0)
}

/// Outcomes at least as extreme as the one at `obs` (closed tail).
pub fn tail_region(oriented: &[f64], obs: usize) -> DecisionVector {
    let t = oriented[obs];
    DecisionVector::from_indices(
        oriented.len(),
        (0..oriented.len()).filter(|&i| oriented[i] <= t || ties(oriented[i], t)),
    )
}

/// Exact tail probability of `mask` at boundary parameter `t`.
fn tail_prob(m: &Marginals, boundary: &BoundaryFn, mask: &DecisionVector, t: f64) -> f64 {
    m.rate(mask, boundary.point(t))
}

/// Supremum of the tail over `[lo, hi]` by grid search plus golden-section
/// refinement around each grid-local maximum.
fn sup_tail(m: &Marginals, boundary: &BoundaryFn, mask: &DecisionVector, lo: f64, hi: f64) -> (f64, f64) {
    let f = |t: f64| tail_prob(m, boundary, mask, t);
    if hi - lo <= 0.0 {
        return (f(lo), lo);
    }
    let steps = ((hi - lo) / GRID_STEP).ceil() as usize;
    let grid: Vec<f64> = (0..=steps).map(|k| if k == steps { hi } else { lo + GRID_STEP * k as f64 }).collect();
    let vals: Vec<f64> = grid.iter().map(|&t| f(t)).collect();
    let (mut best, mut arg) = (f64::NEG_INFINITY, lo);
    for (k, (&t, &v)) in grid.iter().zip(&vals).enumerate() {
        if v > best {
            best = v;
            arg = t;
        }
        let left = if k > 0 { vals[k - 1] } else { f64::NEG_INFINITY };
        let right = if k + 1 < vals.len() { vals[k + 1] } else { f64::NEG_INFINITY };
        let local = v >= left && v >= right && (v > left || v > right);
        if !local {
            continue;
        }
        let a = if k > 0 { grid[k - 1] } else { t };
        let b = if k + 1 < grid.len() { grid[k + 1] } else { t };
        if b > a {
            let x = golden_max(&f, a, b, GOLDEN_TOL);
            let fx = f(x);
            if fx > best {
                best = fx;
                arg = x;
            }
        }
    }
    (best.clamp(0.0, 1.0), arg)
}

/// Unconditional exact p-value: supremum over `theta_range` (intersected
/// with the boundary domain) of the exact tail probability.
pub fn uncond_exact_p(
    kind: StatKind,
    design: Design,
    observed: Outcome,
    theta_range: (f64, f64),
) -> Result<UncondResult> {
    let space = SampleSpace::enumerate(design);
    let stats = oriented_statistics(kind, &space)?;
    uncond_from_stats(kind, &space, &stats, observed, theta_range, UncondMethod::GridRefine)
}

fn uncond_from_stats(
    kind: StatKind,
    space: &SampleSpace,
    stats: &[f64],
    observed: Outcome,
    theta_range: (f64, f64),
    method: UncondMethod,
) -> Result<UncondResult> {
    let boundary = kind.null_boundary()?;
    let (dlo, dhi) = boundary.domain();
    let lo = theta_range.0.max(dlo);
    let hi = theta_range.1.min(dhi);
    if theta_range.0.is_nan()
        || theta_range.1.is_nan()
        || theta_range.0 > theta_range.1
        || lo > hi
        || theta_range.0 < 0.0
        || theta_range.1 > 1.0
    {
        return domain(format!("empty parameter range {theta_range:?}"));
    }
    let mask = tail_region(stats, space.checked_index(observed)?);
    let m = Marginals::new(space.design());
    let (sup, arg) = sup_tail(&m, &boundary, &mask, lo, hi);
    let p_value = match method {
        UncondMethod::GridRefine => sup,
        UncondMethod::BergerBoos { gamma } => (sup + gamma).min(1.0),
    };
    Ok(UncondResult { p_value, maximizing_theta: arg, method })
}

fn bb_interval(design: Design, observed: Outcome, gamma: f64) -> Result<(f64, f64)> {
    if !(gamma > 0.0 && gamma < 0.5) {
        return domain(format!("gamma {gamma} outside (0, 0.5)"));
    }
    clopper_pearson(observed.total(), design.n(), 1.0 - gamma)
}

/// Berger-Boos p-value: supremum over the `1 - gamma` Clopper-Pearson
/// interval of the pooled rate, plus `gamma`.
pub fn berger_boos_p(kind: StatKind, design: Design, observed: Outcome, gamma: f64) -> Result<UncondResult> {
    check(design, observed)?;
    let iv = bb_interval(design, observed, gamma)?;
    let space = SampleSpace::enumerate(design);
    let stats = oriented_statistics(kind, &space)?;
    bb_from_stats(kind, &space, &stats, observed, iv, gamma)
}

fn bb_from_stats(
    kind: StatKind,
    space: &SampleSpace,
    stats: &[f64],
    observed: Outcome,
    iv: (f64, f64),
    gamma: f64,
) -> Result<UncondResult> {
    let boundary = kind.null_boundary()?;
    let (dlo, dhi) = boundary.domain();
    let (lo, hi) = (iv.0.max(dlo), iv.1.min(dhi));
    if lo > hi {
        // interval misses the boundary domain: only the addend remains
        return Ok(UncondResult {
            p_value: gamma,
            maximizing_theta: lo.min(dhi),
            method: UncondMethod::BergerBoos { gamma },
        });
    }
    uncond_from_stats(kind, space, stats, observed, (lo, hi), UncondMethod::BergerBoos { gamma })
}

/// Exact tail at the pooled estimate `(s_C + s_D) / n` on the diagonal.
pub fn estimated_p(kind: StatKind, design: Design, observed: Outcome) -> Result<f64> {
    if !matches!(kind, StatKind::ZPooled | StatKind::Srlr) {
        return domain(format!("estimated p-value defined for z_pooled and srlr, got {kind:?}"));
    }
    check(design, observed)?;
    let space = SampleSpace::enumerate(design);
    let stats = oriented_statistics(kind, &space)?;
    estimated_from_stats(&space, &stats, observed)
}

fn estimated_from_stats(space: &SampleSpace, stats: &[f64], observed: Outcome) -> Result<f64> {
    let design = space.design();
    let t0 = observed.total() as f64 / design.n() as f64;
    let mask = tail_region(stats, space.checked_index(observed)?);
    Ok(Marginals::new(design).rate(&mask, Theta { c: t0, d: t0 }).min(1.0))
}

/// Large-sample p-value from the standard normal.
pub fn asymptotic_p(kind: StatKind, design: Design, observed: Outcome) -> Result<f64> {
    let t = statistic(kind, design, observed)?;
    Ok(match kind {
        StatKind::FisherP | StatKind::FisherMidp => t.value,
        StatKind::Srlr => normal_cdf(-t.value),
        _ => normal_cdf(t.value),
    })
}

/// A p-value producing test, as named in configs and reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "test", rename_all = "snake_case")]
pub enum ClassicalTest {
    /// Fisher's exact test.
    Fisher,
    /// Fisher's mid-p value, compared directly with the level.
    FisherMidp,
    /// Supremum over the whole null boundary.
    Unconditional {
        stat: StatKind,
    },
    BergerBoos {
        stat: StatKind,
        gamma: f64,
    },
    /// Tail at the pooled estimate of the common rate.
    Estimated {
        stat: StatKind,
    },
    /// Normal approximation.
    Asymptotic {
        stat: StatKind,
    },
}

impl ClassicalTest {
    pub fn label(&self) -> String {
        match self {
            ClassicalTest::Fisher => "FE".into(),
            ClassicalTest::FisherMidp => "FMP".into(),
            ClassicalTest::Unconditional { stat: StatKind::FisherP } => "B".into(),
            ClassicalTest::Unconditional { stat } => format!("UX {}", stat.label()),
            ClassicalTest::BergerBoos { stat, .. } => format!("{}*", stat.label()),
            ClassicalTest::Estimated { stat } => format!("E-{}", stat.label()),
            ClassicalTest::Asymptotic { stat } => stat.label(),
        }
    }

    /// Whether the test is unconditionally exact by construction.
    pub fn is_exact(&self) -> bool {
        matches!(self, ClassicalTest::Fisher | ClassicalTest::Unconditional { .. } | ClassicalTest::BergerBoos { .. })
    }

    pub fn p_value(&self, design: Design, observed: Outcome) -> Result<f64> {
        check(design, observed)?;
        let space = SampleSpace::enumerate(design);
        let stats = self.stats(&space)?;
        self.p_with(&space, stats.as_deref(), observed)
    }

    fn stats(&self, space: &SampleSpace) -> Result<Option<Vec<f64>>> {
        match self {
            ClassicalTest::Unconditional { stat }
            | ClassicalTest::BergerBoos { stat, .. }
            | ClassicalTest::Estimated { stat } => Ok(Some(oriented_statistics(*stat, space)?)),
            _ => Ok(None),
        }
    }

    fn p_with(&self, space: &SampleSpace, stats: Option<&[f64]>, o: Outcome) -> Result<f64> {
        let design = space.design();
        match *self {
            ClassicalTest::Fisher => fisher_p(design, o),
            ClassicalTest::FisherMidp => fisher_midp(design, o),
            ClassicalTest::Unconditional { stat } => {
                Ok(uncond_from_stats(stat, space, stats.expect("stats"), o, (0.0, 1.0), UncondMethod::GridRefine)?
                    .p_value)
            }
            ClassicalTest::BergerBoos { stat, gamma } => {
                let iv = bb_interval(design, o, gamma)?;
                Ok(bb_from_stats(stat, space, stats.expect("stats"), o, iv, gamma)?.p_value)
            }
            ClassicalTest::Estimated { stat } => {
                if !matches!(stat, StatKind::ZPooled | StatKind::Srlr) {
                    return domain(format!("estimated p-value defined for z_pooled and srlr, got {stat:?}"));
                }
                estimated_from_stats(space, stats.expect("stats"), o)
            }
            ClassicalTest::Asymptotic { stat } => asymptotic_p(stat, design, o),
        }
    }

    /// p-value of every outcome, in sample-space order.
    pub fn p_values(&self, space: &SampleSpace) -> Result<Vec<f64>> {
        let stats = self.stats(space)?;
        let outcomes: Vec<Outcome> = space.outcomes().collect();
        outcomes.par_iter().map(|&o| self.p_with(space, stats.as_deref(), o)).collect()
    }
}

/// Rejection region `{ p <= alpha }` and whether it is convex.
#[derive(Debug, Clone)]
pub struct RegionReport {
    pub region: DecisionVector,
    pub convex: bool,
}

pub fn region_from_pvalues(space: &SampleSpace, pvalues: &[f64], alpha: f64) -> Result<RegionReport> {
    if pvalues.len() != space.len() {
        return Err(crate::Error::SizeMismatch { expected: space.len(), got: pvalues.len() });
    }
    let region = DecisionVector::from_indices(space.len(), (0..space.len()).filter(|&i| pvalues[i] <= alpha));
    let convex = space.is_convex(&region)?;
    Ok(RegionReport { region, convex })
}

pub fn region_from_test(test: &ClassicalTest, design: Design, alpha: f64) -> Result<RegionReport> {
    let space = SampleSpace::enumerate(design);
    let p = test.p_values(&space)?;
    region_from_pvalues(&space, &p, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(a: usize, b: usize) -> Design {
        Design::new(a, b).unwrap()
    }

    #[test]
    fn fisher_small() {
        assert_eq!(fisher_p(d(3, 4), Outcome::new(2, 0)).unwrap(), 1.0);
        assert!((fisher_p(d(2, 2), Outcome::new(0, 2)).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!((fisher_midp(d(2, 2), Outcome::new(0, 2)).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        assert_eq!(fisher_midp(d(2, 2), Outcome::new(0, 0)).unwrap(), 0.5);
    }

    #[test]
    fn z_pooled_hand_value() {
        let z = statistic(StatKind::ZPooled, d(10, 10), Outcome::new(3, 7)).unwrap();
        assert!((z.value - (-0.4 / (0.25f64 * 0.2).sqrt())).abs() < 1e-12);
    }

    #[test]
    fn degenerate_variance_convention() {
        let z = statistic(StatKind::ZUnpooled { delta: 0.0 }, d(5, 5), Outcome::new(0, 0)).unwrap();
        assert_eq!(z.value, 0.0);
        let z = statistic(StatKind::ZUnpooled { delta: 0.0 }, d(5, 5), Outcome::new(0, 5)).unwrap();
        assert_eq!(z.value, f64::NEG_INFINITY);
        let z = statistic(StatKind::ZUnpooled { delta: 0.2 }, d(5, 5), Outcome::new(0, 0)).unwrap();
        assert_eq!(z.value, f64::INFINITY);
    }

    #[test]
    fn srlr_sign() {
        let s = statistic(StatKind::Srlr, d(10, 10), Outcome::new(3, 7)).unwrap();
        assert!(s.value > 0.0);
        let s = statistic(StatKind::Srlr, d(10, 10), Outcome::new(7, 3)).unwrap();
        assert!(s.value < 0.0);
    }

    #[test]
    fn estimated_at_origin() {
        assert_eq!(estimated_p(StatKind::ZPooled, d(4, 4), Outcome::new(0, 0)).unwrap(), 1.0);
    }
}
