//! Power table through the evaluation config, as the CLI would run it.
use binomial_knapsack::eval::{power_table, RunConfig};

fn main() -> binomial_knapsack::Result<()> {
    let out = std::env::temp_dir().join("bknap_power_table");
    let cfg = RunConfig::from_json(&format!(
        r#"{{
            "tests": [
                {{"test": "fisher"}},
                {{"test": "berger_boos", "stat": "fisher_midp", "gamma": 0.0005}},
                {{"test": "berger_boos", "stat": "z_pooled", "gamma": 0.0005}},
                {{"test": "apk"}}
            ],
            "power_points": [
                {{"design": {{"n_c": 10, "n_d": 10}}, "theta": {{"c": 0.01, "d": 0.51}}}},
                {{"design": {{"n_c": 16, "n_d": 4}}, "theta": {{"c": 0.29, "d": 0.99}}}}
            ],
            "output_dir": {dir:?},
            "cache_dir": {cache:?}
        }}"#,
        dir = out.display().to_string(),
        cache = out.join("cache").display().to_string()
    ))?;
    let report = power_table(&cfg)?;
    print!("{}", std::fs::read_to_string(&report.outputs[0])?);
    Ok(())
}
