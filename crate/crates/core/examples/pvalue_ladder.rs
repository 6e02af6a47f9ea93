//! Nested APK regions over a reduced level set, and the p-values they induce.
use binomial_knapsack::ilp::SolveOptions;
use binomial_knapsack::knapsack::{pvalue_ladder, reduced_levels, KnapsackTestSpec};
use binomial_knapsack::prob::{Design, Outcome};
use binomial_knapsack::space::SampleSpace;

fn main() -> binomial_knapsack::Result<()> {
    let design = Design::new(6, 6)?;
    let spec = KnapsackTestSpec::apk(design, 0.025)?;
    let ladder = pvalue_ladder(&spec, &reduced_levels(), &SolveOptions::default())?;
    println!("{} levels, nested: {}", ladder.levels.len(), ladder.is_nested());
    let space = SampleSpace::enumerate(design);
    for obs in [Outcome::new(0, 6), Outcome::new(1, 5), Outcome::new(2, 5), Outcome::new(3, 3)] {
        println!("p({},{}) = {:.4}", obs.s_c, obs.s_d, ladder.pvalue(&space, obs)?);
    }
    Ok(())
}
