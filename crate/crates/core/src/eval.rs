//! Evaluation protocol: type-I profiles, power tables, pairwise comparisons
//! and the case-study report. Driven by a JSON [`RunConfig`].

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryFn, NullGrid};
use crate::classical::{region_from_test, ClassicalTest, StatKind};
use crate::error::{Error, Result};
use crate::ilp::{SolveOptions, SolveStatus};
use crate::knapsack::{default_levels, reduced_levels, BoundarySpec, KnapsackTestSpec, RegionCache};
use crate::power::{avg_power_coeffs, default_maximin_points, margin_avg_power_coeffs, BetaPrior, ObjectiveSpec};
use crate::prob::{Design, Outcome, Theta};
use crate::space::{DecisionVector, Marginals, SampleSpace};

/// A knapsack test in a roster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "test", rename_all = "snake_case")]
pub enum KnapsackEntry {
    /// Average power (margin average on a margin boundary).
    Apk,
    Wapk {
        prior: BetaPrior,
    },
    /// Maximin over the default alternative line unless points are given.
    Mpk {
        #[serde(default)]
        alt_points: Option<Vec<Theta>>,
    },
    Mpk2,
    Shk,
}

impl KnapsackEntry {
    pub fn label(&self) -> &'static str {
        match self {
            KnapsackEntry::Apk => "APK",
            KnapsackEntry::Wapk { .. } => "WAPK",
            KnapsackEntry::Mpk { .. } => "MPK",
            KnapsackEntry::Mpk2 => "MPK2",
            KnapsackEntry::Shk => "SHK",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TestEntry {
    Classical(ClassicalTest),
    Knapsack(KnapsackEntry),
}

impl TestEntry {
    pub fn label(&self) -> String {
        match self {
            TestEntry::Classical(c) => c.label(),
            TestEntry::Knapsack(k) => k.label().into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerPoint {
    pub design: Design,
    pub theta: Theta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub abs_tol: f64,
    pub time_limit_secs: Option<f64>,
    pub node_limit: Option<u64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { abs_tol: 2.5e-4, time_limit_secs: None, node_limit: None }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolveOptions {
        SolveOptions {
            abs_tol: self.abs_tol,
            node_limit: self.node_limit,
            time_limit: self.time_limit_secs.map(Duration::from_secs_f64),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelPreset {
    Default,
    Reduced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub designs: Vec<Design>,
    pub alpha: f64,
    pub boundary: BoundarySpec,
    /// Number of null grid points; the boundary default when absent.
    pub grid_k: Option<usize>,
    pub tests: Vec<TestEntry>,
    pub profile_step: f64,
    pub power_points: Vec<PowerPoint>,
    pub compare_step: f64,
    pub observed: Option<Outcome>,
    /// Explicit level set for p-value ladders; overrides `level_preset`.
    pub levels: Option<Vec<f64>>,
    pub level_preset: LevelPreset,
    pub output_dir: PathBuf,
    pub cache_dir: PathBuf,
    pub solver: SolverConfig,
    pub svg: bool,
    /// Solve knapsack ladders on a cache miss in the case study.
    pub compute_knapsack: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            designs: Vec::new(),
            alpha: 0.025,
            boundary: BoundarySpec::Identity,
            grid_k: None,
            tests: Vec::new(),
            profile_step: 0.001,
            power_points: Vec::new(),
            compare_step: 0.01,
            observed: None,
            levels: None,
            level_preset: LevelPreset::Default,
            output_dir: PathBuf::from("out"),
            cache_dir: PathBuf::from("cache"),
            solver: SolverConfig::default(),
            svg: false,
            compute_knapsack: false,
        }
    }
}

fn cfg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return cfg_err(format!("alpha {} outside (0,1)", self.alpha));
        }
        for d in &self.designs {
            if d.n_c == 0 || d.n_d == 0 {
                return cfg_err(format!("design {d:?} needs positive group sizes"));
            }
        }
        self.boundary.to_fn().map_err(|e| Error::Config(e.to_string()))?;
        if let Some(k) = self.grid_k {
            if k < 2 {
                return cfg_err("grid_k must be at least 2");
            }
        }
        if !(self.profile_step > 0.0 && self.profile_step <= 1.0) {
            return cfg_err("profile_step must lie in (0,1]");
        }
        if !(self.compare_step > 0.0 && self.compare_step <= 0.5) {
            return cfg_err("compare_step must lie in (0,0.5]");
        }
        for p in &self.power_points {
            Theta::new(p.theta.c, p.theta.d).map_err(|e| Error::Config(e.to_string()))?;
            if p.design.n_c == 0 || p.design.n_d == 0 {
                return cfg_err("power point design needs positive group sizes");
            }
        }
        if let Some(l) = &self.levels {
            if l.is_empty() || l.iter().any(|v| !(*v > 0.0 && *v <= 1.0)) {
                return cfg_err("levels must be non-empty and lie in (0,1]");
            }
            if !l.iter().any(|v| (v - self.alpha).abs() <= 1e-12) {
                return cfg_err("levels must contain alpha");
            }
        }
        if self.solver.abs_tol.is_nan() || self.solver.abs_tol <= 0.0 {
            return cfg_err("solver.abs_tol must be positive");
        }
        for t in &self.tests {
            match t {
                TestEntry::Classical(ClassicalTest::BergerBoos { gamma, .. }) if !(*gamma > 0.0 && *gamma < 0.5) => {
                    return cfg_err(format!("gamma {gamma} outside (0,0.5)"));
                }
                TestEntry::Knapsack(KnapsackEntry::Wapk { prior }) => {
                    prior.validate().map_err(|e| Error::Config(e.to_string()))?;
                }
                TestEntry::Knapsack(KnapsackEntry::Mpk2 | KnapsackEntry::Shk) if self.observed.is_none() => {
                    return cfg_err("MPK2 and SHK need an observed outcome");
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn level_set(&self) -> Vec<f64> {
        match (&self.levels, self.level_preset) {
            (Some(l), _) => l.clone(),
            (None, LevelPreset::Default) => default_levels(),
            (None, LevelPreset::Reduced) => reduced_levels(),
        }
    }

    pub fn boundary_fn(&self) -> Result<BoundaryFn> {
        self.boundary.to_fn()
    }

    fn grid(&self, b: &BoundaryFn) -> Result<NullGrid> {
        match self.grid_k {
            Some(k) => NullGrid::equidistant(b, k),
            None => Ok(NullGrid::default_for(b)),
        }
    }

    /// Solver spec for a knapsack roster entry.
    pub fn knapsack_spec(&self, entry: &KnapsackEntry, design: Design) -> Result<KnapsackTestSpec> {
        let boundary = self.boundary_fn()?;
        let grid = self.grid(&boundary)?;
        let observed = || self.observed.ok_or_else(|| Error::Config("observed outcome required".into()));
        let objective = match entry {
            KnapsackEntry::Apk => match boundary {
                BoundaryFn::Margin(delta) => ObjectiveSpec::MarginAverage { delta },
                _ => ObjectiveSpec::Average,
            },
            KnapsackEntry::Wapk { prior } => ObjectiveSpec::WeightedAverage { prior: *prior },
            KnapsackEntry::Mpk { alt_points } => ObjectiveSpec::Maximin {
                alt_points: alt_points.clone().unwrap_or_else(|| default_maximin_points(design)),
            },
            KnapsackEntry::Mpk2 => {
                let s = KnapsackTestSpec::mpk2(design, observed()?, self.alpha)?;
                s.objective
            }
            KnapsackEntry::Shk => {
                let s = KnapsackTestSpec::shk(design, observed()?, self.alpha)?;
                s.objective
            }
        };
        let spec = KnapsackTestSpec { design, boundary, grid, objective, alpha: self.alpha };
        spec.validate()?;
        Ok(spec)
    }
}

/// Rejection region of a roster entry at the configured level, plus whether
/// a solver limit was hit.
pub fn test_region(
    cfg: &RunConfig,
    entry: &TestEntry,
    design: Design,
    cache: &RegionCache,
) -> Result<(DecisionVector, bool)> {
    match entry {
        TestEntry::Classical(t) => {
            let r = region_from_test(t, design, cfg.alpha)?;
            Ok((r.region, false))
        }
        TestEntry::Knapsack(k) => {
            let spec = cfg.knapsack_spec(k, design)?;
            let ladder = cache.ladder(&spec, &[cfg.alpha], &cfg.solver.options())?;
            let limited = ladder.summaries.iter().any(|s| s.status != SolveStatus::OptimalWithinTol);
            Ok((ladder.regions[0].clone(), limited))
        }
    }
}

/// Paths written by a command and whether any solve stopped at a limit.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub outputs: Vec<PathBuf>,
    pub resource_limited: bool,
}

fn fmt_num(v: f64) -> String {
    format!("{v:.10}")
}

fn write_out(cfg: &RunConfig, name: &str, body: &str, report: &mut RunReport) -> Result<()> {
    fs::create_dir_all(&cfg.output_dir)?;
    let p = cfg.output_dir.join(name);
    fs::write(&p, body)?;
    report.outputs.push(p);
    Ok(())
}

/// Type-I error profile along the null boundary, one CSV per design.
pub fn profile_type1(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let cache = RegionCache::new(&cfg.cache_dir)?;
    let boundary = cfg.boundary_fn()?;
    let mut report = RunReport::default();
    for &design in &cfg.designs {
        let mut regions = Vec::new();
        for t in &cfg.tests {
            let (r, lim) = test_region(cfg, t, design, &cache)?;
            report.resource_limited |= lim;
            regions.push(r);
        }
        let labels: Vec<String> = cfg.tests.iter().map(|t| t.label()).collect();
        let (csv, curves) = profile_csv(design, &boundary, cfg.profile_step, &labels, &regions);
        let stem = format!("type1_{}_{}", design.n_c, design.n_d);
        write_out(cfg, &format!("{stem}.csv"), &csv, &mut report)?;
        if cfg.svg {
            let svg = line_plot_svg(
                &format!("Type I error, n_C={}, n_D={}", design.n_c, design.n_d),
                &curves.0,
                &labels,
                &curves.1,
                Some(cfg.alpha),
            );
            write_out(cfg, &format!("{stem}.svg"), &svg, &mut report)?;
        }
    }
    Ok(report)
}

type Curves = (Vec<f64>, Vec<Vec<f64>>);

/// CSV text and the underlying curves of a type-I profile.
pub fn profile_csv(
    design: Design,
    boundary: &BoundaryFn,
    step: f64,
    labels: &[String],
    regions: &[DecisionVector],
) -> (String, Curves) {
    let (a, b) = boundary.domain();
    let steps = ((b - a) / step).round() as usize;
    let xs: Vec<f64> = (0..=steps).map(|k| (a + step * k as f64).min(b)).collect();
    let m = Marginals::new(design);
    let rows: Vec<Vec<f64>> =
        xs.par_iter().map(|&t| regions.iter().map(|r| m.rate(r, boundary.point(t))).collect()).collect();
    let mut s = String::from("theta_C");
    for l in labels {
        s.push(',');
        s.push_str(l);
    }
    s.push('\n');
    for (x, r) in xs.iter().zip(&rows) {
        let _ = write!(s, "{x:.6}");
        for v in r {
            s.push(',');
            s.push_str(&fmt_num(*v));
        }
        s.push('\n');
    }
    let curves = (0..regions.len()).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    (s, (xs, curves))
}

/// Minimal SVG line chart; an optional dashed horizontal reference line.
pub fn line_plot_svg(title: &str, xs: &[f64], labels: &[String], ys: &[Vec<f64>], hline: Option<f64>) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 50.0;
    const COLORS: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];
    let (x0, x1) = (xs.first().copied().unwrap_or(0.0), xs.last().copied().unwrap_or(1.0));
    let mut ymax = ys.iter().flatten().copied().fold(hline.unwrap_or(0.0), f64::max);
    if ymax <= 0.0 {
        ymax = 1.0;
    }
    ymax *= 1.1;
    let px = |x: f64| M + (x - x0) / (x1 - x0).max(1e-300) * (W - 2.0 * M);
    let py = |y: f64| H - M - y / ymax * (H - 2.0 * M);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ =
        writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#, W / 2.0, xml_escape(title));
    let _ = writeln!(s, r#"<path d="M{M} {} H{} M{M} {} V{M}" stroke="black" fill="none"/>"#, H - M, W - M, H - M);
    for k in 0..=4 {
        let y = ymax * k as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{y:.4}</text>"#, M - 4.0, py(y) + 4.0);
        let x = x0 + (x1 - x0) * k as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{x:.2}</text>"#, px(x), H - M + 16.0);
    }
    if let Some(h) = hline {
        let _ = writeln!(
            s,
            r#"<line x1="{M}" x2="{}" y1="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="6,4"/>"#,
            W - M,
            py(h),
            py(h)
        );
    }
    for (j, (y, l)) in ys.iter().zip(labels).enumerate() {
        let c = COLORS[j % COLORS.len()];
        let mut d = String::new();
        for (i, (&x, &v)) in xs.iter().zip(y).enumerate() {
            let _ = write!(d, "{}{:.2} {:.2}", if i == 0 { "M" } else { " L" }, px(x), py(v));
        }
        let _ = writeln!(s, r#"<path d="{d}" stroke="{c}" fill="none" stroke-width="1.2"/>"#);
        let _ =
            writeln!(s, r#"<text x="{}" y="{}" fill="{c}">{}</text>"#, W - M + 4.0, M + 14.0 * j as f64, xml_escape(l));
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Power in percent per (design, theta) row and test, with the row
/// maximum and minimum flagged.
pub fn power_table(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let cache = RegionCache::new(&cfg.cache_dir)?;
    let mut report = RunReport::default();
    let labels: Vec<String> = cfg.tests.iter().map(|t| t.label()).collect();
    let mut s = String::from("n_C,n_D,theta_C,theta_D");
    for l in &labels {
        s.push(',');
        s.push_str(l);
    }
    s.push_str(",row_max,row_min\n");
    let mut regions: Vec<(Design, Vec<DecisionVector>)> = Vec::new();
    for p in &cfg.power_points {
        if !regions.iter().any(|r| r.0 == p.design) {
            let mut v = Vec::new();
            for t in &cfg.tests {
                let (r, lim) = test_region(cfg, t, p.design, &cache)?;
                report.resource_limited |= lim;
                v.push(r);
            }
            regions.push((p.design, v));
        }
    }
    for p in &cfg.power_points {
        let regs = &regions.iter().find(|r| r.0 == p.design).expect("regions built").1;
        let space = SampleSpace::enumerate(p.design);
        let pw: Vec<f64> = regs
            .iter()
            .map(|r| space.rejection_rate(r, p.theta).map(|v| (100.0 * v * 100.0).round() / 100.0))
            .collect::<Result<_>>()?;
        let _ = write!(s, "{},{},{},{}", p.design.n_c, p.design.n_d, p.theta.c, p.theta.d);
        for v in &pw {
            let _ = write!(s, ",{v:.2}");
        }
        let mx = pw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mn = pw.iter().copied().fold(f64::INFINITY, f64::min);
        let pick = |target: f64| -> String {
            labels.iter().zip(&pw).filter(|(_, v)| **v == target).map(|(l, _)| l.as_str()).collect::<Vec<_>>().join("|")
        };
        let _ = writeln!(s, ",{},{}", pick(mx), pick(mn));
    }
    write_out(cfg, "power_table.csv", &s, &mut report)?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "relation", rename_all = "snake_case")]
pub enum Relation {
    UniformlyLe,
    UniformlyGe,
    Equal,
    /// Share of grid points where the row test has strictly higher power.
    Fraction {
        value: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonCell {
    pub relation: Relation,
    /// Average power of the row test minus that of the column test.
    pub avg_power_diff: f64,
}

/// Alternative grid `theta_C = i h`, `theta_D = j h`, `theta_D > theta_C + delta`.
pub fn comparison_grid(step: f64, delta: f64) -> Vec<Theta> {
    let m = (1.0 / step).round() as usize;
    let mut pts = Vec::new();
    for i in 0..=m {
        for j in 0..=m {
            let (c, d) = (i as f64 / m as f64, j as f64 / m as f64);
            if d > c + delta + 1e-12 {
                pts.push(Theta { c, d });
            }
        }
    }
    pts
}

/// Pairwise comparison of regions on the alternative grid, with average
/// power differences from the exact coefficients.
pub fn compare_regions(
    design: Design,
    regions: &[DecisionVector],
    grid: &[Theta],
    coeffs: &[f64],
) -> Vec<Vec<ComparisonCell>> {
    let m = Marginals::new(design);
    let power: Vec<Vec<f64>> = regions.par_iter().map(|r| grid.iter().map(|t| m.rate(r, *t)).collect()).collect();
    let avg: Vec<f64> = regions.iter().map(|r| r.dot(coeffs)).collect();
    let k = regions.len();
    let mut out = vec![vec![ComparisonCell { relation: Relation::Equal, avg_power_diff: 0.0 }; k]; k];
    for a in 0..k {
        for b in 0..k {
            if regions[a] == regions[b] {
                continue;
            }
            let (mut gt, mut lt) = (0usize, 0usize);
            for (x, y) in power[a].iter().zip(&power[b]) {
                let tol = 1e-12 * x.abs().max(y.abs()).max(1e-300);
                if x - y > tol {
                    gt += 1;
                } else if y - x > tol {
                    lt += 1;
                }
            }
            let relation = match (gt, lt) {
                (0, 0) => Relation::Equal,
                (0, _) => Relation::UniformlyLe,
                (_, 0) => Relation::UniformlyGe,
                _ => Relation::Fraction { value: gt as f64 / grid.len() as f64 },
            };
            let diff = if relation == Relation::Equal { 0.0 } else { avg[a] - avg[b] };
            out[a][b] = ComparisonCell { relation, avg_power_diff: diff };
        }
    }
    out
}

fn relation_text(r: Relation) -> String {
    match r {
        Relation::UniformlyLe => "<=".into(),
        Relation::UniformlyGe => ">=".into(),
        Relation::Equal => "=".into(),
        Relation::Fraction { value } => format!("{:.2}", value),
    }
}

/// Comparison matrix per design, written as CSV (`row,column,relation,avg_power_diff`).
pub fn compare_tests(cfg: &RunConfig) -> Result<(RunReport, Vec<Vec<Vec<ComparisonCell>>>)> {
    cfg.validate()?;
    let cache = RegionCache::new(&cfg.cache_dir)?;
    let boundary = cfg.boundary_fn()?;
    let delta = boundary.delta();
    let grid = comparison_grid(cfg.compare_step, delta);
    let labels: Vec<String> = cfg.tests.iter().map(|t| t.label()).collect();
    let mut report = RunReport::default();
    let mut all = Vec::new();
    for &design in &cfg.designs {
        let space = SampleSpace::enumerate(design);
        let coeffs =
            if delta > 0.0 { margin_avg_power_coeffs(&space, delta, 1e-10)? } else { avg_power_coeffs(&space) };
        let mut regions = Vec::new();
        for t in &cfg.tests {
            let (r, lim) = test_region(cfg, t, design, &cache)?;
            report.resource_limited |= lim;
            regions.push(r);
        }
        let cells = compare_regions(design, &regions, &grid, &coeffs);
        let mut s = String::from("row,column,relation,avg_power_diff\n");
        for (a, row) in cells.iter().enumerate() {
            for (b, c) in row.iter().enumerate() {
                if a != b {
                    let _ = writeln!(
                        s,
                        "{},{},{},{:.4}",
                        labels[a],
                        labels[b],
                        relation_text(c.relation),
                        c.avg_power_diff
                    );
                }
            }
        }
        write_out(cfg, &format!("compare_{}_{}.csv", design.n_c, design.n_d), &s, &mut report)?;
        all.push(cells);
    }
    Ok((report, all))
}

/// One line of the case-study report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseStudyLine {
    pub test: String,
    pub p_value: Option<f64>,
    pub note: String,
}

/// The reference trial: 148 controls, 132 treated, 140 and 131 successes.
pub const MERCK_DESIGN: (usize, usize) = (148, 132);
pub const MERCK_OBSERVED: (usize, usize) = (140, 131);

/// p-values of the roster at the observed outcome. Knapsack ladders come
/// from the cache; on a miss they are solved only with `compute_knapsack`.
pub fn case_study(cfg: &RunConfig) -> Result<(RunReport, Vec<CaseStudyLine>)> {
    cfg.validate()?;
    let design = cfg.designs.first().copied().unwrap_or(Design { n_c: MERCK_DESIGN.0, n_d: MERCK_DESIGN.1 });
    let observed = cfg.observed.unwrap_or(Outcome { s_c: MERCK_OBSERVED.0, s_d: MERCK_OBSERVED.1 });
    let mut cfg = cfg.clone();
    cfg.observed = Some(observed);
    let cache = RegionCache::new(&cfg.cache_dir)?;
    let levels = cfg.level_set();
    let space = SampleSpace::enumerate(design);
    let mut report = RunReport::default();
    let mut lines = Vec::new();
    let tests = if cfg.tests.is_empty() { default_case_roster() } else { cfg.tests.clone() };
    for t in &tests {
        let line = match t {
            TestEntry::Classical(c) => {
                CaseStudyLine { test: c.label(), p_value: Some(c.p_value(design, observed)?), note: String::new() }
            }
            TestEntry::Knapsack(k) => {
                let spec = cfg.knapsack_spec(k, design)?;
                let opts = cfg.solver.options();
                let ladder = match cache.load(&spec, &levels, opts.abs_tol)? {
                    Some(l) => Some(l),
                    None if cfg.compute_knapsack => Some(cache.ladder(&spec, &levels, &opts)?),
                    None => None,
                };
                match ladder {
                    Some(l) => {
                        let worst = l.summaries.iter().map(|s| s.best_bound - s.objective_value).fold(0.0, f64::max);
                        let limited = l.summaries.iter().any(|s| s.status != SolveStatus::OptimalWithinTol);
                        report.resource_limited |= limited;
                        CaseStudyLine {
                            test: k.label().into(),
                            p_value: Some(l.pvalue(&space, observed)?),
                            note: format!("max gap {worst:.2e}{}", if limited { ", solver limit reached" } else { "" }),
                        }
                    }
                    None => {
                        CaseStudyLine { test: k.label().into(), p_value: None, note: "pending (extended run)".into() }
                    }
                }
            }
        };
        lines.push(line);
    }
    let mut s = String::from("test,p_value,note\n");
    for l in &lines {
        let p = l.p_value.map_or("pending".to_string(), |p| format!("{p:.4}"));
        let _ = writeln!(s, "{},{},{}", l.test, p, l.note);
    }
    write_out(&cfg, "case_study.csv", &s, &mut report)?;
    Ok((report, lines))
}

/// FE, FMP*, Z*_P and the five knapsack tests with the case-study prior.
pub fn default_case_roster() -> Vec<TestEntry> {
    vec![
        TestEntry::Classical(ClassicalTest::Fisher),
        TestEntry::Classical(ClassicalTest::BergerBoos { stat: StatKind::FisherMidp, gamma: 0.0005 }),
        TestEntry::Classical(ClassicalTest::BergerBoos { stat: StatKind::ZPooled, gamma: 0.0005 }),
        TestEntry::Knapsack(KnapsackEntry::Apk),
        TestEntry::Knapsack(KnapsackEntry::Mpk { alt_points: None }),
        TestEntry::Knapsack(KnapsackEntry::Wapk {
            prior: BetaPrior { alpha_c: 140, beta_c: 8, alpha_d: 131, beta_d: 1 },
        }),
        TestEntry::Knapsack(KnapsackEntry::Mpk2),
        TestEntry::Knapsack(KnapsackEntry::Shk),
    ]
}
