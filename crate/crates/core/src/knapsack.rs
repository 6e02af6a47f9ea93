//! Knapsack tests (APK, WAPK, MPK, MPK2, SHK), nested p-value ladders and
//! an on-disk cache of solved regions.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::boundary::{BoundaryFn, NullConstraintSet, NullGrid};
use crate::classical::{region_from_test, ClassicalTest};
use crate::error::{domain, Error, Result};
use crate::ilp::{build_apk_model, build_mpk_model, solve, IlpModel, SolveOptions, SolveResult, SolveStatus};
use crate::power::{
    alt_power_rows, avg_power_coeffs, default_maximin_points, margin_avg_power_coeffs, observed_interval_points,
    observed_point, weighted_avg_power_coeffs, BetaPrior, ObjectiveSpec,
};
use crate::prob::{Design, Outcome};
use crate::space::{DecisionVector, IncidenceRows, SampleSpace};

/// Absolute tolerance for the margin average-power integrals.
pub const MARGIN_QUAD_TOL: f64 = 1e-10;

/// Serializable description of the null boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundarySpec {
    Identity,
    Margin { delta: f64 },
}

impl BoundarySpec {
    pub fn to_fn(self) -> Result<BoundaryFn> {
        match self {
            BoundarySpec::Identity => Ok(BoundaryFn::Identity),
            BoundarySpec::Margin { delta } => BoundaryFn::margin(delta),
        }
    }
}

#[derive(Debug, Clone)]
pub struct KnapsackTestSpec {
    pub design: Design,
    pub boundary: BoundaryFn,
    pub grid: NullGrid,
    pub objective: ObjectiveSpec,
    pub alpha: f64,
}

impl KnapsackTestSpec {
    /// Identity boundary with its default grid.
    pub fn new(design: Design, objective: ObjectiveSpec, alpha: f64) -> Result<Self> {
        let boundary = BoundaryFn::Identity;
        let grid = NullGrid::default_for(&boundary);
        let spec = KnapsackTestSpec { design, boundary, grid, objective, alpha };
        spec.validate()?;
        Ok(spec)
    }

    pub fn apk(design: Design, alpha: f64) -> Result<Self> {
        Self::new(design, ObjectiveSpec::Average, alpha)
    }

    pub fn wapk(design: Design, prior: BetaPrior, alpha: f64) -> Result<Self> {
        Self::new(design, ObjectiveSpec::WeightedAverage { prior }, alpha)
    }

    /// Maximin over the default shifted alternative line.
    pub fn mpk(design: Design, alpha: f64) -> Result<Self> {
        Self::new(design, ObjectiveSpec::Maximin { alt_points: default_maximin_points(design) }, alpha)
    }

    /// Maximin over the observed effect line within the 95% interval of the control rate.
    pub fn mpk2(design: Design, observed: Outcome, alpha: f64) -> Result<Self> {
        let alt_points = observed_interval_points(design, observed, 0.95, 100)?;
        Self::new(design, ObjectiveSpec::Maximin { alt_points }, alpha)
    }

    /// Power at the observed rates only.
    pub fn shk(design: Design, observed: Outcome, alpha: f64) -> Result<Self> {
        Self::new(design, ObjectiveSpec::Maximin { alt_points: observed_point(design, observed)? }, alpha)
    }

    /// Average power over `theta_D >= theta_C + delta` on the margin boundary.
    pub fn margin_apk(design: Design, delta: f64, alpha: f64) -> Result<Self> {
        let boundary = BoundaryFn::margin(delta)?;
        let grid = NullGrid::default_for(&boundary);
        let spec =
            KnapsackTestSpec { design, boundary, grid, objective: ObjectiveSpec::MarginAverage { delta }, alpha };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return domain(format!("alpha {} outside (0,1)", self.alpha));
        }
        self.objective.validate()
    }
}

/// Everything about a spec that does not depend on the level.
pub struct PreparedTest {
    pub space: SampleSpace,
    pub constraints: NullConstraintSet,
    inc: IncidenceRows,
    objective: PreparedObjective,
    boundary: BoundaryFn,
}

enum PreparedObjective {
    Linear(Vec<f64>),
    Maximin(Vec<Vec<f64>>),
}

impl PreparedTest {
    pub fn new(spec: &KnapsackTestSpec) -> Result<Self> {
        spec.objective.validate()?;
        let space = SampleSpace::enumerate(spec.design);
        let constraints = NullConstraintSet::build(&space, &spec.boundary, &spec.grid)?;
        let inc = IncidenceRows::new(&space);
        let objective = match &spec.objective {
            ObjectiveSpec::Average => PreparedObjective::Linear(avg_power_coeffs(&space)),
            ObjectiveSpec::WeightedAverage { prior } => {
                PreparedObjective::Linear(weighted_avg_power_coeffs(&space, *prior)?)
            }
            ObjectiveSpec::MarginAverage { delta } => {
                PreparedObjective::Linear(margin_avg_power_coeffs(&space, *delta, MARGIN_QUAD_TOL)?)
            }
            ObjectiveSpec::Maximin { alt_points } => PreparedObjective::Maximin(alt_power_rows(&space, alt_points)?),
        };
        Ok(PreparedTest { space, constraints, inc, objective, boundary: spec.boundary.clone() })
    }

    pub fn model(&self, alpha: f64) -> Result<IlpModel> {
        let c = &self.constraints;
        match &self.objective {
            PreparedObjective::Linear(obj) => build_apk_model(&c.p_rows, &c.slack_rows, obj, alpha, &self.inc),
            PreparedObjective::Maximin(alt) => build_mpk_model(&c.p_rows, &c.slack_rows, alt, alpha, &self.inc),
        }
    }

    /// Solves at `alpha`, seeding the Fisher region when it fits the bounds.
    pub fn solve_at(&self, alpha: f64, opts: &SolveOptions) -> Result<SolveResult> {
        let model = self.model(alpha)?;
        let mut opts = opts.clone();
        if matches!(self.boundary, BoundaryFn::Identity) {
            let fisher = region_from_test(&ClassicalTest::Fisher, self.space.design(), alpha)?.region;
            let fits = opts.lower.as_ref().is_none_or(|lo| lo.is_subset(&fisher))
                && opts.upper.as_ref().is_none_or(|up| fisher.is_subset(up));
            if fits {
                opts.warm_starts.push(fisher);
            }
        }
        solve(&model, &opts)
    }
}

/// Builds the program for `spec` and solves it.
pub fn construct(spec: &KnapsackTestSpec, opts: &SolveOptions) -> Result<SolveResult> {
    spec.validate()?;
    PreparedTest::new(spec)?.solve_at(spec.alpha, opts)
}

/// Per-level solver summary of a ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: f64,
    pub objective_value: f64,
    pub best_bound: f64,
    pub status: SolveStatus,
}

/// Nested rejection regions, one per level.
#[derive(Debug, Clone)]
pub struct PValueLadder {
    pub levels: Vec<f64>,
    pub regions: Vec<DecisionVector>,
    pub summaries: Vec<LevelSummary>,
}

/// `{0.001, ..., 0.100} U {0.11, ..., 1.00}`.
pub fn default_levels() -> Vec<f64> {
    let mut v: Vec<f64> = (1..=100).map(|k| k as f64 / 1000.0).collect();
    v.extend((11..=100).map(|k| k as f64 / 100.0));
    v
}

/// Twenty-level set used for routine validity checks.
pub fn reduced_levels() -> Vec<f64> {
    vec![
        0.001, 0.005, 0.01, 0.015, 0.02, 0.025, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.10, 0.15, 0.2, 0.3, 0.5,
        0.75, 1.0,
    ]
}

/// Solves the anchor level `spec.alpha` first, then higher levels bounded
/// below by the previous region, then lower levels bounded above.
pub fn pvalue_ladder(spec: &KnapsackTestSpec, levels: &[f64], opts: &SolveOptions) -> Result<PValueLadder> {
    spec.validate()?;
    let mut levels = levels.to_vec();
    if levels.iter().any(|l| !(*l > 0.0 && *l <= 1.0)) {
        return domain("levels must lie in (0, 1]");
    }
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let anchor = levels
        .iter()
        .position(|&l| (l - spec.alpha).abs() <= 1e-12)
        .ok_or_else(|| Error::Domain(format!("anchor level {} not in the level set", spec.alpha)))?;
    let prepared = PreparedTest::new(spec)?;
    let mut regions: Vec<Option<DecisionVector>> = vec![None; levels.len()];
    let mut summaries: Vec<Option<LevelSummary>> = vec![None; levels.len()];
    let mut run = |k: usize, lower: Option<DecisionVector>, upper: Option<DecisionVector>| -> Result<DecisionVector> {
        let mut o = opts.clone();
        if let Some(lo) = &lower {
            o.warm_starts.push(lo.clone());
        }
        o.lower = lower;
        o.upper = upper;
        let res = prepared.solve_at(levels[k], &o)?;
        if res.status == SolveStatus::Infeasible {
            return Err(Error::Infeasible(format!("level {} has no region within its bounds", levels[k])));
        }
        summaries[k] = Some(LevelSummary {
            level: levels[k],
            objective_value: res.objective_value,
            best_bound: res.best_bound,
            status: res.status,
        });
        Ok(res.decision)
    };
    let anchor_region = run(anchor, None, None)?;
    regions[anchor] = Some(anchor_region.clone());
    let mut prev = anchor_region.clone();
    for k in anchor + 1..levels.len() {
        prev = run(k, Some(prev), None)?;
        regions[k] = Some(prev.clone());
    }
    let mut prev = anchor_region;
    for k in (0..anchor).rev() {
        prev = run(k, None, Some(prev))?;
        regions[k] = Some(prev.clone());
    }
    Ok(PValueLadder {
        levels,
        regions: regions.into_iter().map(|r| r.expect("every level solved")).collect(),
        summaries: summaries.into_iter().map(|s| s.expect("every level solved")).collect(),
    })
}

impl PValueLadder {
    /// Smallest level whose region rejects `observed`, or 1.
    pub fn pvalue(&self, space: &SampleSpace, observed: Outcome) -> Result<f64> {
        let i = space.checked_index(observed)?;
        Ok(self.levels.iter().zip(&self.regions).find(|(_, r)| r.get(i)).map_or(1.0, |(l, _)| *l))
    }

    /// p-value of every outcome, in sample-space order.
    pub fn pvalues(&self, space: &SampleSpace) -> Vec<f64> {
        (0..space.len())
            .map(|i| self.levels.iter().zip(&self.regions).find(|(_, r)| r.get(i)).map_or(1.0, |(l, _)| *l))
            .collect()
    }

    pub fn is_nested(&self) -> bool {
        self.regions.windows(2).all(|w| w[0].is_subset(&w[1]))
    }
}

pub fn pvalue(ladder: &PValueLadder, space: &SampleSpace, observed: Outcome) -> Result<f64> {
    ladder.pvalue(space, observed)
}

/// Identifying fields of a solved region, stored next to its CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionManifest {
    pub key: String,
    pub design: Design,
    pub boundary: String,
    pub grid_hash: String,
    pub objective: ObjectiveSpec,
    pub alpha: f64,
    pub abs_tol: f64,
    pub levels: Vec<f64>,
    pub summaries: Vec<LevelSummary>,
}

fn boundary_tag(b: &BoundaryFn) -> String {
    match b {
        BoundaryFn::Identity => "identity".into(),
        BoundaryFn::Margin(d) => format!("margin:{d:e}"),
        BoundaryFn::Custom(c) => format!("custom:{}", c.name),
    }
}

pub fn grid_hash(grid: &NullGrid) -> String {
    let mut h = Sha256::new();
    for t in grid.thetas() {
        h.update(t.to_bits().to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// Content hash of everything that determines a solve.
pub fn cache_key(spec: &KnapsackTestSpec, levels: &[f64], abs_tol: f64) -> Result<String> {
    let doc = serde_json::json!({
        "design": spec.design,
        "boundary": boundary_tag(&spec.boundary),
        "grid": grid_hash(&spec.grid),
        "objective": spec.objective,
        "alpha": spec.alpha,
        "levels": levels,
        "abs_tol": abs_tol,
    });
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(&doc)?);
    Ok(hex::encode(h.finalize()))
}

/// Directory of solved ladders keyed by [`cache_key`].
#[derive(Debug, Clone)]
pub struct RegionCache {
    dir: PathBuf,
}

impl RegionCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(RegionCache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn manifest_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    fn region_path(&self, key: &str, k: usize) -> PathBuf {
        self.dir.join(format!("{key}.{k}.csv"))
    }

    pub fn store(&self, spec: &KnapsackTestSpec, ladder: &PValueLadder, abs_tol: f64) -> Result<String> {
        let key = cache_key(spec, &ladder.levels, abs_tol)?;
        let space = SampleSpace::enumerate(spec.design);
        for (k, r) in ladder.regions.iter().enumerate() {
            let mut w = BufWriter::new(fs::File::create(self.region_path(&key, k))?);
            r.write_csv(&space, &mut w)?;
            w.flush()?;
        }
        let manifest = RegionManifest {
            key: key.clone(),
            design: spec.design,
            boundary: boundary_tag(&spec.boundary),
            grid_hash: grid_hash(&spec.grid),
            objective: spec.objective.clone(),
            alpha: spec.alpha,
            abs_tol,
            levels: ladder.levels.clone(),
            summaries: ladder.summaries.clone(),
        };
        fs::write(self.manifest_path(&key), serde_json::to_string_pretty(&manifest)?)?;
        Ok(key)
    }

    pub fn load(&self, spec: &KnapsackTestSpec, levels: &[f64], abs_tol: f64) -> Result<Option<PValueLadder>> {
        let key = cache_key(spec, levels, abs_tol)?;
        let path = self.manifest_path(&key);
        if !path.exists() {
            return Ok(None);
        }
        let manifest: RegionManifest = serde_json::from_reader(BufReader::new(fs::File::open(&path)?))?;
        let space = SampleSpace::enumerate(spec.design);
        let regions = (0..manifest.levels.len())
            .map(|k| DecisionVector::read_csv(&space, BufReader::new(fs::File::open(self.region_path(&key, k))?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Some(PValueLadder { levels: manifest.levels, regions, summaries: manifest.summaries }))
    }

    /// Loads the ladder or solves and stores it.
    pub fn ladder(&self, spec: &KnapsackTestSpec, levels: &[f64], opts: &SolveOptions) -> Result<PValueLadder> {
        if let Some(l) = self.load(spec, levels, opts.abs_tol)? {
            return Ok(l);
        }
        let l = pvalue_ladder(spec, levels, opts)?;
        self.store(spec, &l, opts.abs_tol)?;
        Ok(l)
    }
}
