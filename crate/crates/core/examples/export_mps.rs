//! Write an APK program as MPS and read it back.
use binomial_knapsack::ilp::mps::{export_mps, read_mps};
use binomial_knapsack::knapsack::{KnapsackTestSpec, PreparedTest};
use binomial_knapsack::prob::Design;

fn main() -> binomial_knapsack::Result<()> {
    let spec = KnapsackTestSpec::apk(Design::new(5, 5)?, 0.05)?;
    let model = PreparedTest::new(&spec)?.model(0.05)?;
    let path = std::env::temp_dir().join("apk_5_5.mps");
    export_mps(&model, &path)?;
    let back = read_mps(&path)?;
    println!(
        "{}: {} binaries, {} rows, {} precedence pairs, round trip exact: {}",
        path.display(),
        model.binary_count,
        model.rows.len(),
        model.precedence.len(),
        back == model
    );
    Ok(())
}
