//! Berger-Boos p-values with a confidence-restricted nuisance supremum.
use binomial_knapsack::classical::{berger_boos_p, uncond_exact_p, StatKind};
use binomial_knapsack::prob::{Design, Outcome};

fn main() -> binomial_knapsack::Result<()> {
    let design = Design::new(148, 132)?;
    let observed = Outcome::new(140, 131);
    for kind in [StatKind::FisherMidp, StatKind::ZPooled] {
        let bb = berger_boos_p(kind, design, observed, 0.0005)?;
        println!("{:<10} BB p = {:.6} (sup at theta = {:.4})", kind.label(), bb.p_value, bb.maximizing_theta);
    }
    // full supremum on a small design for contrast
    let small = Design::new(10, 10)?;
    let full = uncond_exact_p(StatKind::ZPooled, small, Outcome::new(2, 7), (0.0, 1.0))?;
    println!("(10,10) obs (2,7) unconditional Z pooled p = {:.6}", full.p_value);
    Ok(())
}
