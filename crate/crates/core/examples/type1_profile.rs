//! Type-I error along the null boundary for FE and APK, with an SVG plot.
use binomial_knapsack::boundary::BoundaryFn;
use binomial_knapsack::classical::{region_from_test, ClassicalTest};
use binomial_knapsack::eval::{line_plot_svg, profile_csv};
use binomial_knapsack::ilp::SolveOptions;
use binomial_knapsack::knapsack::{construct, KnapsackTestSpec};
use binomial_knapsack::prob::Design;

fn main() -> binomial_knapsack::Result<()> {
    let design = Design::new(10, 10)?;
    let fe = region_from_test(&ClassicalTest::Fisher, design, 0.025)?.region;
    let apk = construct(&KnapsackTestSpec::apk(design, 0.025)?, &SolveOptions::default())?.decision;
    let labels = vec!["FE".to_string(), "APK".to_string()];
    let (csv, (xs, ys)) = profile_csv(design, &BoundaryFn::Identity, 0.001, &labels, &[fe, apk]);
    for (j, l) in labels.iter().enumerate() {
        let max = ys[j].iter().copied().fold(0.0, f64::max);
        println!("{l}: max type I error {max:.6}");
    }
    let dir = std::env::temp_dir();
    std::fs::write(dir.join("type1_10_10.csv"), csv)?;
    std::fs::write(dir.join("type1_10_10.svg"), line_plot_svg("Type I error (10,10)", &xs, &labels, &ys, Some(0.025)))?;
    println!("wrote {}", dir.join("type1_10_10.{csv,svg}").display());
    Ok(())
}
