//! Fisher exact and mid-p values for the reference trial.
use binomial_knapsack::classical::{fisher_midp, fisher_p};
use binomial_knapsack::prob::{Design, Outcome};

fn main() -> binomial_knapsack::Result<()> {
    let design = Design::new(148, 132)?;
    let observed = Outcome::new(140, 131);
    println!("Fisher exact   {:.6}", fisher_p(design, observed)?);
    println!("Fisher mid-p   {:.6}", fisher_midp(design, observed)?);
    Ok(())
}
