//! Pairwise power comparison of FE, Fisher mid-p BB and APK at (10,10).
use binomial_knapsack::classical::{region_from_test, ClassicalTest, StatKind};
use binomial_knapsack::eval::{compare_regions, comparison_grid, Relation};
use binomial_knapsack::ilp::SolveOptions;
use binomial_knapsack::knapsack::{construct, KnapsackTestSpec};
use binomial_knapsack::power::avg_power_coeffs;
use binomial_knapsack::prob::Design;
use binomial_knapsack::space::SampleSpace;

fn main() -> binomial_knapsack::Result<()> {
    let design = Design::new(10, 10)?;
    let space = SampleSpace::enumerate(design);
    let labels = ["FE", "FMP*", "APK"];
    let regions = vec![
        region_from_test(&ClassicalTest::Fisher, design, 0.025)?.region,
        region_from_test(&ClassicalTest::BergerBoos { stat: StatKind::FisherMidp, gamma: 0.0005 }, design, 0.025)?
            .region,
        construct(&KnapsackTestSpec::apk(design, 0.025)?, &SolveOptions::default())?.decision,
    ];
    let cells = compare_regions(design, &regions, &comparison_grid(0.01, 0.0), &avg_power_coeffs(&space));
    for (a, row) in cells.iter().enumerate() {
        for (b, c) in row.iter().enumerate() {
            if a == b {
                continue;
            }
            let rel = match c.relation {
                Relation::UniformlyLe => "<=".to_string(),
                Relation::UniformlyGe => ">=".to_string(),
                Relation::Equal => "=".to_string(),
                Relation::Fraction { value } => format!("{value:.2}"),
            };
            println!("{:>5} vs {:<5} {rel:>5} ({:+.3})", labels[a], labels[b], c.avg_power_diff);
        }
    }
    Ok(())
}
