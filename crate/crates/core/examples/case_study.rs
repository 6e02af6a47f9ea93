//! Reference-trial report. Knapsack entries stay pending unless a cache
//! directory with solved ladders is passed as the first argument.
use binomial_knapsack::eval::{case_study, RunConfig};

fn main() -> binomial_knapsack::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.output_dir = std::env::temp_dir().join("bknap_case_study");
    cfg.cache_dir = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| cfg.output_dir.join("cache"));
    let (_, lines) = case_study(&cfg)?;
    for l in lines {
        match l.p_value {
            Some(p) => println!("{:<6} {p:.4} {}", l.test, l.note),
            None => println!("{:<6} {}", l.test, l.note),
        }
    }
    Ok(())
}
