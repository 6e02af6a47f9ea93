//! 0-1 programs over rejection regions: model, branch and bound, MPS I/O.

mod bnb;
mod closure;
mod master;
pub mod mps;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{DecisionVector, IncidenceRows};

pub use bnb::solve;
pub use closure::{ClosureOracle, ClosureSolution};

/// Absolute slack allowed on `<=` rows when checking feasibility.
pub const FEAS_TOL: f64 = 1e-12;

/// Sparse `<=` row over the binaries, plus a coefficient on the continuous variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
    pub cont: f64,
    pub rhs: f64,
}

impl Row {
    pub fn from_dense(dense: &[f64], cont: f64, rhs: f64) -> Self {
        let (idx, val) = dense.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, v)| (i, *v)).unzip();
        Row { idx, val, cont, rhs }
    }

    pub fn dot(&self, d: &DecisionVector) -> f64 {
        self.idx.iter().zip(&self.val).filter(|(i, _)| d.get(**i)).map(|(_, v)| v).sum()
    }

    pub fn dot_dense(&self, x: &[f64]) -> f64 {
        self.idx.iter().zip(&self.val).map(|(i, v)| v * x[*i]).sum()
    }
}

/// Single bounded continuous variable (the minimum power of a maximin program).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousVar {
    pub objective: f64,
    pub lower: f64,
    pub upper: f64,
}

/// `max c.d + c_z z` s.t. rows, `d_k >= d_i` for each precedence pair, `d` binary.
#[derive(Debug, Clone, PartialEq)]
pub struct IlpModel {
    pub binary_count: usize,
    pub objective: Vec<f64>,
    pub continuous: Option<ContinuousVar>,
    pub rows: Vec<Row>,
    pub precedence: Vec<(usize, usize)>,
}

impl IlpModel {
    pub fn validate(&self) -> Result<()> {
        let n = self.binary_count;
        if self.objective.len() != n {
            return Err(Error::SizeMismatch { expected: n, got: self.objective.len() });
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("non-finite objective coefficient".into()));
        }
        if let Some(c) = self.continuous {
            if !(c.lower.is_finite() && c.upper.is_finite() && c.lower <= c.upper && c.objective.is_finite()) {
                return Err(Error::InvalidModel(format!("bad continuous variable {c:?}")));
            }
        }
        for (r, row) in self.rows.iter().enumerate() {
            if row.idx.len() != row.val.len() || row.idx.iter().any(|&i| i >= n) {
                return Err(Error::InvalidModel(format!("row {r} references invalid columns")));
            }
            if row.val.iter().any(|v| !v.is_finite()) || !row.rhs.is_finite() || !row.cont.is_finite() {
                return Err(Error::InvalidModel(format!("row {r} is not finite")));
            }
            if self.continuous.is_none() && row.cont != 0.0 {
                return Err(Error::InvalidModel(format!("row {r} uses a missing continuous variable")));
            }
        }
        if self.precedence.iter().any(|&(i, k)| i >= n || k >= n || i == k) {
            return Err(Error::InvalidModel("precedence pair out of range".into()));
        }
        if topo_order(n, &self.precedence).is_none() {
            return Err(Error::InvalidModel("precedence relation has a cycle".into()));
        }
        Ok(())
    }

    /// Objective value of `d` with the best feasible continuous value, or
    /// `None` when `d` violates a row or a precedence pair.
    pub fn evaluate(&self, d: &DecisionVector) -> Option<(f64, Option<f64>)> {
        if self.precedence.iter().any(|&(i, k)| d.get(i) && !d.get(k)) {
            return None;
        }
        let rv: Vec<f64> = self.rows.iter().map(|r| r.dot(d)).collect();
        let z = best_continuous(self.continuous, &self.rows, &rv)?;
        let mut v = d.dot(&self.objective);
        if let (Some(c), Some(z)) = (self.continuous, z) {
            v += c.objective * z;
        }
        Some((v, z))
    }
}

/// Best continuous value given row activities, `Some(None)` for pure binary models.
pub(crate) fn best_continuous(cont: Option<ContinuousVar>, rows: &[Row], rv: &[f64]) -> Option<Option<f64>> {
    let (mut lo, mut hi) = match cont {
        Some(c) => (c.lower, c.upper),
        None => (0.0, 0.0),
    };
    for (row, &v) in rows.iter().zip(rv) {
        let room = row.rhs - v;
        if row.cont == 0.0 {
            if room < -FEAS_TOL {
                return None;
            }
        } else if row.cont > 0.0 {
            hi = hi.min(room / row.cont);
        } else {
            lo = lo.max(room / row.cont);
        }
    }
    match cont {
        None => Some(None),
        Some(c) => {
            if lo > hi + FEAS_TOL {
                return None;
            }
            let z = if c.objective >= 0.0 { hi.max(lo) } else { lo.min(hi) };
            Some(Some(z.clamp(c.lower, c.upper)))
        }
    }
}

pub(crate) fn topo_order(n: usize, pairs: &[(usize, usize)]) -> Option<Vec<usize>> {
    let mut indeg = vec![0usize; n];
    let mut out = vec![Vec::new(); n];
    for &(i, k) in pairs {
        out[i].push(k);
        indeg[k] += 1;
    }
    let mut stack: Vec<usize> = (0..n).rev().filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(u) = stack.pop() {
        order.push(u);
        for &v in &out[u] {
            indeg[v] -= 1;
            if indeg[v] == 0 {
                stack.push(v);
            }
        }
    }
    (order.len() == n).then_some(order)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    OptimalWithinTol,
    Infeasible,
    NodeLimit,
    TimeLimit,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub decision: DecisionVector,
    pub objective_value: f64,
    /// Value of the continuous variable at the incumbent, if the model has one.
    pub continuous_value: Option<f64>,
    pub best_bound: f64,
    pub abs_gap: f64,
    pub status: SolveStatus,
    pub nodes: u64,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub abs_tol: f64,
    pub node_limit: Option<u64>,
    pub time_limit: Option<Duration>,
    /// Elementwise lower bound on the decision.
    pub lower: Option<DecisionVector>,
    /// Elementwise upper bound on the decision.
    pub upper: Option<DecisionVector>,
    /// Candidate solutions tried before branching.
    pub warm_starts: Vec<DecisionVector>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            abs_tol: 2.5e-4,
            node_limit: None,
            time_limit: None,
            lower: None,
            upper: None,
            warm_starts: Vec::new(),
        }
    }
}

impl SolveOptions {
    pub fn with_tol(abs_tol: f64) -> Self {
        SolveOptions { abs_tol, ..Default::default() }
    }
}

fn check_dims(inc: &IncidenceRows, rows: &[Vec<f64>]) -> Result<()> {
    for r in rows {
        if r.len() != inc.len() {
            return Err(Error::SizeMismatch { expected: inc.len(), got: r.len() });
        }
    }
    Ok(())
}

fn type1_rows(p_rows: &[Vec<f64>], slack_rows: &[Vec<f64>], alpha: f64) -> Result<Vec<Row>> {
    if slack_rows.len() + 1 != p_rows.len() {
        return Err(Error::InvalidModel(format!(
            "{} probability rows need {} slack rows, got {}",
            p_rows.len(),
            p_rows.len().saturating_sub(1),
            slack_rows.len()
        )));
    }
    let mut rows: Vec<Row> = p_rows.iter().map(|p| Row::from_dense(p, 0.0, alpha)).collect();
    for (p, s) in p_rows.iter().zip(slack_rows) {
        let sum: Vec<f64> = p.iter().zip(s).map(|(a, b)| a + b).collect();
        rows.push(Row::from_dense(&sum, 0.0, alpha));
    }
    Ok(rows)
}

/// Average-power program: rows `p_j.d <= alpha`, `(p_j + slack_j).d <= alpha`,
/// and the convexity precedence pairs.
pub fn build_apk_model(
    p_rows: &[Vec<f64>],
    slack_rows: &[Vec<f64>],
    objective: &[f64],
    alpha: f64,
    inc: &IncidenceRows,
) -> Result<IlpModel> {
    check_dims(inc, p_rows)?;
    check_dims(inc, slack_rows)?;
    if objective.len() != inc.len() {
        return Err(Error::SizeMismatch { expected: inc.len(), got: objective.len() });
    }
    let model = IlpModel {
        binary_count: inc.len(),
        objective: objective.to_vec(),
        continuous: None,
        rows: type1_rows(p_rows, slack_rows, alpha)?,
        precedence: inc.precedence_pairs(),
    };
    model.validate()?;
    Ok(model)
}

/// Maximin program. The continuous variable `z` is the minimum power
/// `1 - beta`; each alternative adds `z - p_{j,1}.d <= 0`.
pub fn build_mpk_model(
    p_rows: &[Vec<f64>],
    slack_rows: &[Vec<f64>],
    alt_rows: &[Vec<f64>],
    alpha: f64,
    inc: &IncidenceRows,
) -> Result<IlpModel> {
    if alt_rows.is_empty() {
        return Err(Error::InvalidModel("maximin program needs at least one alternative row".into()));
    }
    check_dims(inc, p_rows)?;
    check_dims(inc, slack_rows)?;
    check_dims(inc, alt_rows)?;
    let mut rows = type1_rows(p_rows, slack_rows, alpha)?;
    for a in alt_rows {
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        rows.push(Row::from_dense(&neg, 1.0, 0.0));
    }
    let model = IlpModel {
        binary_count: inc.len(),
        objective: vec![0.0; inc.len()],
        continuous: Some(ContinuousVar { objective: 1.0, lower: 0.0, upper: 1.0 }),
        rows,
        precedence: inc.precedence_pairs(),
    };
    model.validate()?;
    Ok(model)
}
