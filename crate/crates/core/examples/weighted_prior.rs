//! Weighted average power under a beta prior versus the uniform APK.
use binomial_knapsack::ilp::SolveOptions;
use binomial_knapsack::knapsack::{construct, KnapsackTestSpec};
use binomial_knapsack::power::{avg_power_coeffs, weighted_avg_power_coeffs, BetaPrior};
use binomial_knapsack::prob::Design;
use binomial_knapsack::space::SampleSpace;

fn main() -> binomial_knapsack::Result<()> {
    let design = Design::new(10, 10)?;
    let space = SampleSpace::enumerate(design);
    let prior = BetaPrior::new(2, 8, 8, 2)?;
    let opts = SolveOptions::default();
    let w = construct(&KnapsackTestSpec::wapk(design, prior, 0.10)?, &opts)?;
    let a = construct(&KnapsackTestSpec::apk(design, 0.10)?, &opts)?;
    let wc = weighted_avg_power_coeffs(&space, prior)?;
    let ac = avg_power_coeffs(&space);
    println!("            weighted  uniform");
    println!("WAPK region {:.5}   {:.5}", w.decision.dot(&wc), w.decision.dot(&ac));
    println!("APK region  {:.5}   {:.5}", a.decision.dot(&wc), a.decision.dot(&ac));
    Ok(())
}
