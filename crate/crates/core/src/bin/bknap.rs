use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use binomial_knapsack::eval::{self, LevelPreset, RunConfig, TestEntry};
use binomial_knapsack::ilp::mps::export_mps;
use binomial_knapsack::ilp::SolveStatus;
use binomial_knapsack::knapsack::{BoundarySpec, PreparedTest, RegionCache};
use binomial_knapsack::prob::{Design, Outcome};
use binomial_knapsack::space::SampleSpace;
use binomial_knapsack::Error;

#[derive(Parser)]
#[command(name = "bknap", version, about = "Exact binomial comparison tests via knapsack programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve for a rejection region at the configured level.
    Construct(Common),
    /// p-value of the observed outcome for each test in the roster.
    Pvalue(Common),
    /// Type-I error profile along the null boundary.
    Profile(Common),
    /// Power table at the configured power points.
    PowerTable(Common),
    /// Pairwise power comparison matrix.
    Compare(Common),
    /// Report for the reference trial.
    CaseStudy(Common),
    /// Write the knapsack program of the first knapsack test as MPS.
    ExportMps {
        #[command(flatten)]
        common: Common,
        /// Output file.
        #[arg(long, short)]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration; flags below override its fields.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Design as N_C,N_D; repeatable.
    #[arg(long = "design", value_parser = parse_pair)]
    designs: Vec<(usize, usize)>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Non-inferiority margin; selects the margin boundary when positive.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    grid_k: Option<usize>,
    /// Test as a name (fisher, apk, mpk, ...) or a JSON object; repeatable.
    #[arg(long = "test")]
    tests: Vec<String>,
    /// Observed outcome as S_C,S_D.
    #[arg(long, value_parser = parse_pair)]
    observed: Option<(usize, usize)>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long)]
    abs_tol: Option<f64>,
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    node_limit: Option<u64>,
    /// Use the 20-level ladder instead of the default one.
    #[arg(long)]
    reduced_levels: bool,
    /// Solve missing knapsack ladders instead of reporting them as pending.
    #[arg(long)]
    compute: bool,
    #[arg(long)]
    svg: bool,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected A,B, got {s}"))?;
    let p = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("{x}: {e}"));
    Ok((p(a)?, p(b)?))
}

fn parse_test(s: &str) -> Result<TestEntry, Error> {
    let doc = if s.trim_start().starts_with('{') { s.to_string() } else { format!(r#"{{"test":"{}"}}"#, s.trim()) };
    serde_json::from_str(&doc).map_err(|e| Error::Config(format!("test {s}: {e}")))
}

impl Common {
    fn config(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if !self.designs.is_empty() {
            cfg.designs = self.designs.iter().map(|&(c, d)| Design::new(c, d)).collect::<Result<_, _>>()?;
        }
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        if let Some(d) = self.delta {
            cfg.boundary = if d > 0.0 { BoundarySpec::Margin { delta: d } } else { BoundarySpec::Identity };
        }
        if self.grid_k.is_some() {
            cfg.grid_k = self.grid_k;
        }
        if !self.tests.is_empty() {
            cfg.tests = self.tests.iter().map(|t| parse_test(t)).collect::<Result<_, _>>()?;
        }
        if let Some((c, d)) = self.observed {
            cfg.observed = Some(Outcome::new(c, d));
        }
        if let Some(p) = &self.output_dir {
            cfg.output_dir = p.clone();
        }
        if let Some(p) = &self.cache_dir {
            cfg.cache_dir = p.clone();
        }
        if let Some(t) = self.abs_tol {
            cfg.solver.abs_tol = t;
        }
        if self.time_limit.is_some() {
            cfg.solver.time_limit_secs = self.time_limit;
        }
        if self.node_limit.is_some() {
            cfg.solver.node_limit = self.node_limit;
        }
        if self.reduced_levels {
            cfg.level_preset = LevelPreset::Reduced;
        }
        cfg.compute_knapsack |= self.compute;
        cfg.svg |= self.svg;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn first_design(cfg: &RunConfig) -> Result<Design, Error> {
    cfg.designs.first().copied().ok_or_else(|| Error::Config("no design given".into()))
}

fn knapsack_entries(cfg: &RunConfig) -> Vec<eval::KnapsackEntry> {
    cfg.tests
        .iter()
        .filter_map(|t| match t {
            TestEntry::Knapsack(k) => Some(k.clone()),
            TestEntry::Classical(_) => None,
        })
        .collect()
}

fn print_outputs(r: &eval::RunReport) {
    for p in &r.outputs {
        println!("wrote {}", p.display());
    }
}

/// Returns true when a solver limit was reached.
fn run(cmd: Cmd) -> Result<bool, Error> {
    match cmd {
        Cmd::Construct(c) => {
            let cfg = c.config()?;
            let entries = knapsack_entries(&cfg);
            if entries.is_empty() {
                return Err(Error::Config("construct needs a knapsack test".into()));
            }
            let mut limited = false;
            for design in &cfg.designs {
                let space = SampleSpace::enumerate(*design);
                for e in &entries {
                    let spec = cfg.knapsack_spec(e, *design)?;
                    let r = PreparedTest::new(&spec)?.solve_at(cfg.alpha, &cfg.solver.options())?;
                    limited |= matches!(r.status, SolveStatus::NodeLimit | SolveStatus::TimeLimit);
                    println!(
                        "{} n_C={} n_D={} alpha={} status={:?} objective={:.6} bound={:.6} nodes={} size={}",
                        e.label(),
                        design.n_c,
                        design.n_d,
                        cfg.alpha,
                        r.status,
                        r.objective_value,
                        r.best_bound,
                        r.nodes,
                        r.decision.count_ones()
                    );
                    let mut s = String::from("s_C,s_D\n");
                    for i in r.decision.ones() {
                        let o = space.outcome(i);
                        s.push_str(&format!("{},{}\n", o.s_c, o.s_d));
                    }
                    std::fs::create_dir_all(&cfg.output_dir)?;
                    let p = cfg.output_dir.join(format!(
                        "region_{}_{}_{}.csv",
                        e.label().to_lowercase(),
                        design.n_c,
                        design.n_d
                    ));
                    std::fs::write(&p, s)?;
                    println!("wrote {}", p.display());
                }
            }
            Ok(limited)
        }
        Cmd::Pvalue(c) => {
            let cfg = c.config()?;
            let design = first_design(&cfg)?;
            let obs = cfg.observed.ok_or_else(|| Error::Config("pvalue needs --observed".into()))?;
            let space = SampleSpace::enumerate(design);
            space.checked_index(obs)?;
            let cache = RegionCache::new(&cfg.cache_dir)?;
            let mut limited = false;
            for t in &cfg.tests {
                let p = match t {
                    TestEntry::Classical(ct) => ct.p_value(design, obs)?,
                    TestEntry::Knapsack(k) => {
                        let spec = cfg.knapsack_spec(k, design)?;
                        let ladder = cache.ladder(&spec, &cfg.level_set(), &cfg.solver.options())?;
                        limited |= ladder.summaries.iter().any(|s| s.status != SolveStatus::OptimalWithinTol);
                        ladder.pvalue(&space, obs)?
                    }
                };
                println!("{}\t{p:.6}", t.label());
            }
            Ok(limited)
        }
        Cmd::Profile(c) => {
            let r = eval::profile_type1(&c.config()?)?;
            print_outputs(&r);
            Ok(r.resource_limited)
        }
        Cmd::PowerTable(c) => {
            let r = eval::power_table(&c.config()?)?;
            print_outputs(&r);
            Ok(r.resource_limited)
        }
        Cmd::Compare(c) => {
            let (r, _) = eval::compare_tests(&c.config()?)?;
            print_outputs(&r);
            Ok(r.resource_limited)
        }
        Cmd::CaseStudy(c) => {
            let (r, lines) = eval::case_study(&c.config()?)?;
            for l in &lines {
                match l.p_value {
                    Some(p) => println!("{}\t{p:.4}\t{}", l.test, l.note),
                    None => println!("{}\t{}", l.test, l.note),
                }
            }
            if lines.iter().any(|l| l.p_value.is_none()) {
                println!("pending entries: rerun with --compute to solve the ladders into the cache");
            }
            print_outputs(&r);
            Ok(r.resource_limited)
        }
        Cmd::ExportMps { common, out } => {
            let cfg = common.config()?;
            let design = first_design(&cfg)?;
            let e = knapsack_entries(&cfg)
                .into_iter()
                .next()
                .ok_or_else(|| Error::Config("export-mps needs a knapsack test".into()))?;
            let spec = cfg.knapsack_spec(&e, design)?;
            let model = PreparedTest::new(&spec)?.model(cfg.alpha)?;
            export_mps(&model, &out)?;
            println!("wrote {}", out.display());
            Ok(false)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("solver stopped at a resource limit; results carry a gap");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_)
                | Error::Json(_)
                | Error::Domain(_)
                | Error::Parse { .. }
                | Error::SizeMismatch { .. } => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
