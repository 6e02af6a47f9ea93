//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! `BKNAP_FULL_LADDER=1` checks criterion 10 on the full 190-level ladder
//! instead of the reduced one. `BKNAP_EXTENDED=1` runs criterion 11
//! (multi-hour knapsack ladders at n = 280); it is reported as SKIP
//! otherwise.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use binomial_knapsack::boundary::{
    cardano_roots, hbar, hbar_margin_cubic, hunder, hunder_margin_cubic, BoundaryFn, NullConstraintSet, NullGrid,
};
use binomial_knapsack::classical::{berger_boos_p, fisher_p, region_from_test, ClassicalTest, StatKind};
use binomial_knapsack::eval::{case_study, KnapsackEntry, LevelPreset, RunConfig, TestEntry};
use binomial_knapsack::ilp::{build_apk_model, build_mpk_model, solve, SolveOptions, SolveStatus};
use binomial_knapsack::knapsack::{construct, default_levels, pvalue_ladder, reduced_levels, KnapsackTestSpec};
use binomial_knapsack::power::{
    alt_power_rows, avg_power_coeffs, default_maximin_points, margin_avg_power_coeffs, weighted_avg_power_coeffs,
    BetaPrior,
};
use binomial_knapsack::prob::{Design, Outcome, Theta};
use binomial_knapsack::space::{DecisionVector, IncidenceRows, SampleSpace};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::{brute, dense_extrema, hbar_kernel, hunder_kernel, rate, staircases, triangle_average};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn design(a: usize, b: usize) -> Design {
    Design::new(a, b).unwrap()
}

fn c1() -> Check {
    let t = Instant::now();
    let p = fisher_p(design(148, 132), Outcome::new(140, 131)).map_err(|e| e.to_string())?;
    let el = t.elapsed();
    ensure((p - 0.0271).abs() <= 5e-5, format!("FE p = {p:.6}"))?;
    ensure(el < Duration::from_secs(1), format!("took {el:?}"))?;
    Ok(format!("FE p = {p:.6} in {el:?}"))
}

fn c2() -> Check {
    let t = Instant::now();
    let (d, o) = (design(148, 132), Outcome::new(140, 131));
    let fmp = berger_boos_p(StatKind::FisherMidp, d, o, 0.0005).map_err(|e| e.to_string())?.p_value;
    let zp = berger_boos_p(StatKind::ZPooled, d, o, 0.0005).map_err(|e| e.to_string())?.p_value;
    let el = t.elapsed();
    ensure((fmp - 0.0144).abs() <= 5e-4 && (zp - 0.0136).abs() <= 5e-4, format!("FMP* {fmp:.6}, ZP* {zp:.6}"))?;
    ensure(el < Duration::from_secs(60), format!("took {el:?}"))?;
    Ok(format!("FMP* {fmp:.6}, ZP* {zp:.6} in {el:?}"))
}

fn c3() -> Check {
    let mut out = Vec::new();
    for ((a, b), th, fe, others) in [((10, 10), (0.01, 0.51), 60.30, 80.08), ((16, 4), (0.29, 0.99), 46.74, 81.85)] {
        let d = design(a, b);
        let space = SampleSpace::enumerate(d);
        let theta = Theta::new(th.0, th.1).unwrap();
        let pw = |t: ClassicalTest| -> Result<f64, String> {
            let r = region_from_test(&t, d, 0.025).map_err(|e| e.to_string())?.region;
            Ok(100.0 * space.rejection_rate(&r, theta).map_err(|e| e.to_string())?)
        };
        let f = pw(ClassicalTest::Fisher)?;
        let m = pw(ClassicalTest::BergerBoos { stat: StatKind::FisherMidp, gamma: 0.0005 })?;
        let z = pw(ClassicalTest::BergerBoos { stat: StatKind::ZPooled, gamma: 0.0005 })?;
        let line = format!("({a},{b}) FE {f:.4} FMP* {m:.4} ZP* {z:.4}");
        ensure((f - fe).abs() <= 0.01 && (m - others).abs() <= 0.01 && (z - others).abs() <= 0.01, line.clone())?;
        out.push(line);
    }
    Ok(out.join("; "))
}

struct Constructed {
    apk: Vec<(Design, DecisionVector, f64, Duration)>,
}

fn c4(store: &mut Constructed) -> Check {
    let t = Instant::now();
    let mut out = Vec::new();
    let mut bad = Vec::new();
    for ((a, b), want) in [((10, 10), 0.38), ((4, 16), 0.26), ((25, 25), 0.58), ((10, 40), 0.49)] {
        let d = design(a, b);
        let s = Instant::now();
        let r = construct(&KnapsackTestSpec::apk(d, 0.025).unwrap(), &SolveOptions::default())
            .map_err(|e| e.to_string())?;
        let el = s.elapsed();
        let line = format!("({a},{b}) {:.5} [{:?}, {:.0?}]", r.objective_value, r.status, el);
        if (r.objective_value - want).abs() > 0.005 || r.status != SolveStatus::OptimalWithinTol {
            bad.push(line.clone());
        }
        out.push(line);
        store.apk.push((d, r.decision, r.objective_value, el));
    }
    let total = t.elapsed();
    ensure(bad.is_empty(), format!("off target: {}", bad.join("; ")))?;
    ensure(total <= Duration::from_secs(1800), format!("took {total:?}"))?;
    Ok(format!("{} total {total:.0?}", out.join("; ")))
}

fn max_size(d: Design, region: &DecisionVector, step: f64) -> f64 {
    let n = (1.0 / step).round() as usize;
    (0..=n).map(|k| (k as f64 * step).min(1.0)).map(|t| rate(d.n_c, d.n_d, region, t, t)).fold(0.0, f64::max)
}

fn theorem_suite() -> usize {
    let space = SampleSpace::enumerate(design(3, 3));
    let b = BoundaryFn::Identity;
    let grid = NullGrid::equidistant(&b, 1001).unwrap();
    let ncs = NullConstraintSet::build(&space, &b, &grid).unwrap();
    let all = staircases(3, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let th = grid.thetas();
    let dot = |a: &[f64], d: &DecisionVector| d.ones().map(|i| a[i]).sum::<f64>();
    let mut violations = 0;
    for _ in 0..50 {
        let d = all.choose(&mut rng).unwrap();
        for j in 0..th.len() - 1 {
            let bound = dot(&ncs.p_rows[j], d) + dot(&ncs.slack_rows[j], d).max(0.0);
            for _ in 0..1000 {
                let t = rng.gen_range(th[j]..th[j + 1]);
                if t <= th[j] {
                    continue;
                }
                if rate(3, 3, d, t, t) > bound + 1e-14 {
                    violations += 1;
                }
            }
        }
    }
    violations
}

fn c5(store: &Constructed) -> Check {
    let mut out = Vec::new();
    let mut bad = Vec::new();
    for (a, b) in [(10, 10), (25, 25)] {
        let d = design(a, b);
        let apk = match store.apk.iter().find(|x| x.0 == d) {
            Some(x) => x.1.clone(),
            None => {
                construct(&KnapsackTestSpec::apk(d, 0.025).unwrap(), &SolveOptions::default())
                    .map_err(|e| e.to_string())?
                    .decision
            }
        };
        let mpk = construct(&KnapsackTestSpec::mpk(d, 0.025).unwrap(), &SolveOptions::default())
            .map_err(|e| e.to_string())?;
        for (name, r) in [("APK", &apk), ("MPK", &mpk.decision)] {
            let s = max_size(d, r, 1e-4);
            let line = format!("{name}({a},{b}) max size {s:.8}");
            if s > 0.025 + 1e-9 {
                bad.push(line.clone());
            }
            out.push(line);
        }
    }
    let v = theorem_suite();
    out.push(format!("bound suite violations {v}"));
    ensure(bad.is_empty() && v == 0, out.join("; "))?;
    Ok(out.join("; "))
}

fn c6() -> Check {
    let mut designs = Vec::new();
    for a in 1..=17 {
        for b in 1..=17 {
            if (a + 1) * (b + 1) <= 36 {
                designs.push((a, b));
            }
        }
    }
    let opts = SolveOptions::with_tol(1e-12);
    let mut checked = 0;
    let mut worst = 0.0f64;
    for &(a, b) in &designs {
        let d = design(a, b);
        let space = SampleSpace::enumerate(d);
        let bd = BoundaryFn::Identity;
        let ncs = NullConstraintSet::build(&space, &bd, &NullGrid::default_for(&bd)).unwrap();
        let inc = IncidenceRows::new(&space);
        let regions = staircases(a, b);
        let avg = avg_power_coeffs(&space);
        let alt = alt_power_rows(&space, &default_maximin_points(d)).unwrap();
        for alpha in [0.01, 0.025, 0.05, 0.10] {
            let models = [
                build_apk_model(&ncs.p_rows, &ncs.slack_rows, &avg, alpha, &inc).unwrap(),
                build_mpk_model(&ncs.p_rows, &ncs.slack_rows, &alt, alpha, &inc).unwrap(),
            ];
            for (k, m) in models.iter().enumerate() {
                let best = brute(m, &regions);
                let r = solve(m, &opts).map_err(|e| e.to_string())?;
                let got = m.evaluate(&r.decision).ok_or(format!("({a},{b}) alpha {alpha}: infeasible decision"))?.0;
                let diff = (got - best).abs();
                worst = worst.max(diff);
                ensure(
                    r.status == SolveStatus::OptimalWithinTol && diff <= 1e-12,
                    format!("({a},{b}) alpha {alpha} {}: ilp {got} vs enumeration {best}", ["avg", "maximin"][k]),
                )?;
                checked += 1;
            }
        }
    }
    Ok(format!("{} designs, {checked} programs, max |ilp - enumeration| {worst:.1e}", designs.len()))
}

fn c7() -> Check {
    let mut worst = 0.0f64;
    for (a, b) in [(1, 1), (5, 5), (10, 10)] {
        let space = SampleSpace::enumerate(design(a, b));
        let c = avg_power_coeffs(&space);
        for (i, o) in space.outcomes().enumerate() {
            let q = triangle_average(a, b, o.s_c, o.s_d, 0.0, 1e-13);
            worst = worst.max((c[i] - q).abs());
        }
        let sum: f64 = c.iter().sum();
        ensure((sum - 1.0).abs() <= 1e-10, format!("({a},{b}) coefficients sum to {sum}"))?;
        let w = weighted_avg_power_coeffs(&space, BetaPrior::UNIFORM).map_err(|e| e.to_string())?;
        ensure(c.iter().zip(&w).all(|(x, y)| x.to_bits() == y.to_bits()), format!("({a},{b}) uniform prior differs"))?;
        let m = margin_avg_power_coeffs(&space, 0.0, 1e-10).map_err(|e| e.to_string())?;
        let md = c.iter().zip(&m).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        ensure(md <= 1e-7, format!("({a},{b}) margin at zero differs by {md}"))?;
    }
    ensure(worst <= 1e-8, format!("max quadrature deviation {worst:.2e}"))?;
    Ok(format!("max quadrature deviation {worst:.2e}"))
}

fn c8() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    let mut worst_res = 0.0f64;
    for k in 0..10_000 {
        let delta = if k % 2 == 0 { 0.05 } else { 0.2 };
        let top = 1.0 - delta;
        let b = BoundaryFn::Margin(delta);
        let (n_c, n_d) = (rng.gen_range(1..=30), rng.gen_range(1..=30));
        let (s_c, s_d) = (rng.gen_range(0..=n_c), rng.gen_range(0..=n_d));
        let lo = rng.gen_range(0.0..top);
        // mostly grid-cell sized intervals, every tenth one long
        let width = if k % 10 == 0 { rng.gen_range(0.0..top) } else { rng.gen_range(0.0..0.02) };
        let hi = (lo + width).min(top);
        let (d, o) = (design(n_c, n_d), Outcome::new(s_c, s_d));
        let (mx, _) = dense_extrema(|t| hbar_kernel(n_c, n_d, s_c, s_d, delta, t), lo, hi, 1e-6);
        let (_, mn) = dense_extrema(|t| hunder_kernel(n_c, n_d, s_c, s_d, delta, t), lo, hi, 1e-6);
        let hb = hbar(d, o, &b, lo, hi).map_err(|e| e.to_string())?;
        let hu = hunder(d, o, &b, lo, hi).map_err(|e| e.to_string())?;
        let dev = (hb - mx).abs().max((hu - mn).abs());
        worst = worst.max(dev);
        ensure(dev <= 1e-10, format!("{d:?} {o:?} delta {delta} [{lo},{hi}]: hbar {hb} vs {mx}, hunder {hu} vs {mn}"))?;
        for p in [hbar_margin_cubic(d, o, delta), hunder_margin_cubic(d, o, delta)] {
            let scale = p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if scale == 0.0 {
                continue;
            }
            for r in cardano_roots(p[0], p[1], p[2], p[3]) {
                if (0.0..=1.0).contains(&r) {
                    worst_res = worst_res.max((((p[0] * r + p[1]) * r + p[2]) * r + p[3]).abs() / scale);
                }
            }
        }
    }
    ensure(worst_res <= 1e-8, format!("Cardano relative residual {worst_res:.2e}"))?;
    Ok(format!("max deviation {worst:.2e}, max Cardano residual {worst_res:.2e}"))
}

fn c9() -> Check {
    let d = design(10, 10);
    let space = SampleSpace::enumerate(d);
    let r = region_from_test(&ClassicalTest::Unconditional { stat: StatKind::ZUnpooled { delta: 0.2 } }, d, 0.025)
        .map_err(|e| e.to_string())?
        .region;
    let mut out = Vec::new();
    for ((c, dd), want) in [((0.01, 0.51), 36.91), ((0.05, 0.61), 45.59)] {
        let p = 100.0 * space.rejection_rate(&r, Theta::new(c, dd).unwrap()).map_err(|e| e.to_string())?;
        ensure((p - want).abs() <= 0.01, format!("({c},{dd}): {p:.4}"))?;
        out.push(format!("({c},{dd}) {p:.4}%"));
    }
    Ok(out.join("; "))
}

fn c10() -> Check {
    let full = std::env::var_os("BKNAP_FULL_LADDER").is_some();
    let levels = if full { default_levels() } else { reduced_levels() };
    let d = design(10, 10);
    let t = Instant::now();
    let ladder = pvalue_ladder(&KnapsackTestSpec::apk(d, 0.025).unwrap(), &levels, &SolveOptions::default())
        .map_err(|e| e.to_string())?;
    ensure(ladder.is_nested(), "ladder not nested")?;
    let space = SampleSpace::enumerate(d);
    let p = ladder.pvalues(&space);
    let mut worst = f64::NEG_INFINITY;
    for &a in &levels {
        let rej = DecisionVector::from_indices(space.len(), (0..space.len()).filter(|&i| p[i] <= a));
        for k in 0..=1000 {
            let th = k as f64 / 1000.0;
            let excess = rate(10, 10, &rej, th, th) - a;
            worst = worst.max(excess);
            ensure(excess <= 1e-9, format!("level {a} theta {th}: excess {excess:.3e}"))?;
        }
    }
    Ok(format!(
        "{} levels ({}), max P(p <= a) - a = {worst:.3e}, {:.0?}",
        levels.len(),
        if full { "full" } else { "reduced; BKNAP_FULL_LADDER=1 for all 190" },
        t.elapsed()
    ))
}

fn c11() -> Option<Check> {
    std::env::var_os("BKNAP_EXTENDED")?;
    let run = || -> Check {
        let tests = [
            KnapsackEntry::Apk,
            KnapsackEntry::Mpk { alt_points: None },
            KnapsackEntry::Wapk { prior: BetaPrior::new(140, 8, 131, 1).unwrap() },
            KnapsackEntry::Mpk2,
            KnapsackEntry::Shk,
        ]
        .into_iter()
        .map(TestEntry::Knapsack)
        .collect();
        let cfg = RunConfig {
            compute_knapsack: true,
            level_preset: LevelPreset::Default,
            cache_dir: std::env::var("BKNAP_CACHE").unwrap_or_else(|_| "cache".into()).into(),
            output_dir: std::env::temp_dir().join("bknap_extended"),
            tests,
            ..RunConfig::default()
        };
        let (_, lines) = case_study(&cfg).map_err(|e| e.to_string())?;
        let want = [0.0130, 0.0270, 0.0160, 0.0260, 0.0080];
        let mut out = Vec::new();
        for (l, w) in lines.iter().zip(want) {
            let p = l.p_value.ok_or(format!("{} pending", l.test))?;
            ensure((p - w).abs() <= 5e-4, format!("{} p = {p:.4}, expected {w}", l.test))?;
            out.push(format!("{} {p:.4}", l.test));
        }
        Ok(out.join("; "))
    };
    Some(run())
}

fn report(n: u32, name: &str, r: std::thread::Result<Check>, failures: &mut u32) {
    match r {
        Ok(Ok(detail)) => println!("criterion {n:>2} PASS  {name}: {detail}"),
        Ok(Err(detail)) => {
            *failures += 1;
            println!("criterion {n:>2} FAIL  {name}: {detail}");
        }
        Err(_) => {
            *failures += 1;
            println!("criterion {n:>2} FAIL  {name}: panicked");
        }
    }
}

fn main() {
    let mut failures = 0;
    let mut store = Constructed { apk: Vec::new() };
    report(1, "reference trial Fisher exact p-value", catch_unwind(c1), &mut failures);
    report(2, "reference trial Berger-Boos p-values", catch_unwind(c2), &mut failures);
    report(3, "comparator powers", catch_unwind(c3), &mut failures);
    report(4, "APK optimal average power", catch_unwind(AssertUnwindSafe(|| c4(&mut store))), &mut failures);
    report(
        5,
        "exactness of constructed regions and grid bound",
        catch_unwind(AssertUnwindSafe(|| c5(&store))),
        &mut failures,
    );
    report(6, "ILP equals enumeration on small designs", catch_unwind(c6), &mut failures);
    report(7, "average-power coefficients", catch_unwind(c7), &mut failures);
    report(8, "margin extremization", catch_unwind(c8), &mut failures);
    report(9, "margin comparator powers", catch_unwind(c9), &mut failures);
    report(10, "p-value validity of the APK ladder", catch_unwind(c10), &mut failures);
    match catch_unwind(c11) {
        Ok(None) => {
            println!("criterion 11 SKIP  reference trial knapsack p-values: extended run, set BKNAP_EXTENDED=1")
        }
        Ok(Some(r)) => report(11, "reference trial knapsack p-values", Ok(r), &mut failures),
        Err(e) => report(11, "reference trial knapsack p-values", Err(e), &mut failures),
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
