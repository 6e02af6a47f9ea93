//! Average-power knapsack test at (10,10), alpha = 0.025.
use binomial_knapsack::ilp::SolveOptions;
use binomial_knapsack::knapsack::{construct, KnapsackTestSpec};
use binomial_knapsack::prob::Design;
use binomial_knapsack::space::SampleSpace;

fn main() -> binomial_knapsack::Result<()> {
    let design = Design::new(10, 10)?;
    let spec = KnapsackTestSpec::apk(design, 0.025)?;
    let r = construct(&spec, &SolveOptions::default())?;
    println!(
        "status {:?}, average power {:.5}, bound {:.5}, nodes {}",
        r.status, r.objective_value, r.best_bound, r.nodes
    );
    let space = SampleSpace::enumerate(design);
    // print the staircase: one row per s_D, X where rejected
    for s_d in (0..=design.n_d).rev() {
        let row: String =
            (0..=design.n_c)
                .map(|s_c| {
                    if r.decision.get(space.index(binomial_knapsack::prob::Outcome::new(s_c, s_d))) {
                        'X'
                    } else {
                        '.'
                    }
                })
                .collect();
        println!("{s_d:>3} {row}");
    }
    Ok(())
}
