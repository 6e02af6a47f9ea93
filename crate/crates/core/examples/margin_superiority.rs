//! Margin boundary: unconditional Z-unpooled test and the margin APK at delta = 0.2.
use binomial_knapsack::boundary::BoundaryFn;
use binomial_knapsack::classical::{region_from_test, ClassicalTest, StatKind};
use binomial_knapsack::ilp::SolveOptions;
use binomial_knapsack::knapsack::{construct, KnapsackTestSpec};
use binomial_knapsack::prob::{Design, Theta};
use binomial_knapsack::space::SampleSpace;

fn main() -> binomial_knapsack::Result<()> {
    let design = Design::new(10, 10)?;
    let delta = 0.2;
    let space = SampleSpace::enumerate(design);
    let ux = region_from_test(&ClassicalTest::Unconditional { stat: StatKind::ZUnpooled { delta } }, design, 0.025)?;
    let apk = construct(&KnapsackTestSpec::margin_apk(design, delta, 0.025)?, &SolveOptions::default())?;
    println!("margin APK average power {:.5}", apk.objective_value);
    for t in [Theta::new(0.01, 0.51)?, Theta::new(0.05, 0.61)?] {
        println!(
            "theta ({:.2},{:.2}): UX ZU {:.2}%  APK {:.2}%",
            t.c,
            t.d,
            100.0 * space.rejection_rate(&ux.region, t)?,
            100.0 * space.rejection_rate(&apk.decision, t)?
        );
    }
    let b = BoundaryFn::margin(delta)?;
    let (lo, hi) = b.domain();
    let worst = (0..=1000)
        .map(|k| space.rejection_rate(&apk.decision, b.point(lo + (hi - lo) * k as f64 / 1000.0)).unwrap())
        .fold(0.0, f64::max);
    println!("APK max type I error on the margin boundary {worst:.6}");
    Ok(())
}
