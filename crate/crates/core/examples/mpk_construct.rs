//! Maximin-power knapsack test on the default alternative line.
use binomial_knapsack::ilp::SolveOptions;
use binomial_knapsack::knapsack::{construct, KnapsackTestSpec};
use binomial_knapsack::power::default_maximin_points;
use binomial_knapsack::prob::Design;
use binomial_knapsack::space::SampleSpace;

fn main() -> binomial_knapsack::Result<()> {
    let design = Design::new(10, 10)?;
    let spec = KnapsackTestSpec::mpk(design, 0.025)?;
    let r = construct(&spec, &SolveOptions::default())?;
    println!("min power {:.5} (bound {:.5}), {:?}", r.objective_value, r.best_bound, r.status);
    let space = SampleSpace::enumerate(design);
    for t in default_maximin_points(design).iter().step_by(20) {
        println!("  power at ({:.3},{:.3}) = {:.5}", t.c, t.d, space.rejection_rate(&r.decision, *t)?);
    }
    Ok(())
}
