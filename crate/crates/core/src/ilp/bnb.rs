//! Branch and bound with Lagrangian bounds from column generation.
//!
//! The convex hull of closures of the precedence DAG is integral, so the
//! LP relaxation is the Dantzig-Wolfe master over closures. Pricing is a
//! maximum-weight closure. Any dual vector gives a valid Lagrangian bound,
//! which is what nodes are pruned against. Type-I rows enter the master
//! lazily when the fractional solution violates them.

use std::time::Instant;

use super::closure::ClosureOracle;
use super::master::{ColKind, Master};
use super::{best_continuous, ContinuousVar, IlpModel, SolveOptions, SolveResult, SolveStatus, FEAS_TOL};
use crate::error::{Error, Result};
use crate::space::DecisionVector;

const FRAC_TOL: f64 = 1e-7;
const RC_TOL: f64 = 1e-11;
const VIOL_TOL: f64 = 1e-10;
const ROWS_PER_ROUND: usize = 48;
const CG_ITER_CAP: usize = 600;
const PIVOT_CAP: usize = 20_000;
const POOL_GC: usize = 5_000;
const TIE_TOL: f64 = 1e-12;

struct PoolCol {
    d: DecisionVector,
    obj: f64,
    /// Activity on every row of the model.
    acts: Vec<f64>,
}

struct Incumbent {
    d: DecisionVector,
    value: f64,
    z: Option<f64>,
}

struct Node {
    fix: Vec<i8>,
    ub: f64,
    seq: u64,
    cols: Vec<usize>,
    /// Rows the master starts with.
    rows: Vec<usize>,
}

enum NodeOutcome {
    Pruned(f64),
    Branch { var: usize, up_first: bool, ub: f64, cols: Vec<usize>, rows: Vec<usize> },
}

struct Solver<'a> {
    model: &'a IlpModel,
    n: usize,
    cols: Vec<Vec<(usize, f64)>>,
    requires: Vec<Vec<usize>>,
    required_by: Vec<Vec<usize>>,
    oracle: ClosureOracle,
    cont: Option<ContinuousVar>,
    cont_rows: Vec<usize>,
    abs_tol: f64,
    big_m: f64,
    root_fix: Vec<i8>,
    pool: Vec<PoolCol>,
    inc: Option<Incumbent>,
    inc_col: Option<usize>,
}

/// Solves `model` to a proven absolute gap of `opts.abs_tol`.
pub fn solve(model: &IlpModel, opts: &SolveOptions) -> Result<SolveResult> {
    model.validate()?;
    let n = model.binary_count;
    for b in [&opts.lower, &opts.upper].into_iter().flatten() {
        if b.len() != n {
            return Err(Error::SizeMismatch { expected: n, got: b.len() });
        }
    }
    for w in &opts.warm_starts {
        if w.len() != n {
            return Err(Error::SizeMismatch { expected: n, got: w.len() });
        }
    }
    let zlo = model.continuous.map_or(0.0, |c| c.lower);
    if model.rows.iter().any(|r| r.rhs - r.cont * zlo < 0.0) {
        return Err(Error::InvalidModel("rows must be satisfiable at d = 0 and the lower continuous bound".into()));
    }
    let start = Instant::now();
    let mut s = Solver::new(model, opts.abs_tol);

    // bound vectors
    let mut fix = vec![-1i8; n];
    let mut ok = true;
    if let Some(lo) = &opts.lower {
        for i in lo.ones() {
            ok &= s.set_fix(&mut fix, i, 1);
        }
    }
    if let Some(up) = &opts.upper {
        for i in 0..n {
            if !up.get(i) {
                ok &= s.set_fix(&mut fix, i, 0);
            }
        }
    }
    if !ok {
        return Ok(infeasible(n, 0));
    }
    s.presolve(&mut fix);
    s.root_fix = fix.clone();

    // initial incumbents: the forced set, then warm starts
    let forced = DecisionVector::from_indices(n, (0..n).filter(|&i| fix[i] == 1));
    s.try_incumbent(&forced);
    for w in &opts.warm_starts {
        if s.respects(&s.root_fix.clone(), w) {
            s.try_incumbent(w);
        }
    }

    let mut seq = 0u64;
    let mut open: Vec<Node> = Vec::new();
    let mut current = Some(Node { fix, ub: f64::INFINITY, seq, cols: Vec::new(), rows: Vec::new() });
    let mut pruned_max = f64::NEG_INFINITY;
    let mut nodes = 0u64;
    let mut status = SolveStatus::OptimalWithinTol;

    loop {
        let node = match current.take() {
            Some(nd) => nd,
            None => {
                if open.is_empty() {
                    break;
                }
                let mut bi = 0;
                for (k, nd) in open.iter().enumerate() {
                    let b = &open[bi];
                    if nd.ub > b.ub || (nd.ub == b.ub && nd.seq < b.seq) {
                        bi = k;
                    }
                }
                open.swap_remove(bi)
            }
        };
        if node.ub <= s.inc_value() + s.abs_tol {
            pruned_max = pruned_max.max(node.ub);
            continue;
        }
        if opts.node_limit.is_some_and(|l| nodes >= l) {
            status = SolveStatus::NodeLimit;
            open.push(node);
            break;
        }
        if opts.time_limit.is_some_and(|l| start.elapsed() >= l) {
            status = SolveStatus::TimeLimit;
            open.push(node);
            break;
        }
        nodes += 1;
        match s.process(&node) {
            NodeOutcome::Pruned(ub) => {
                pruned_max = pruned_max.max(ub.min(node.ub));
            }
            NodeOutcome::Branch { var, up_first, ub, cols, rows } => {
                let ub = ub.min(node.ub);
                let mut kids = Vec::with_capacity(2);
                for v in [1i8, 0] {
                    let mut f = node.fix.clone();
                    if s.set_fix(&mut f, var, v) {
                        seq += 1;
                        kids.push((v, Node { fix: f, ub, seq, cols: cols.clone(), rows: rows.clone() }));
                    }
                }
                if !up_first {
                    kids.reverse();
                }
                let mut it = kids.into_iter();
                current = it.next().map(|k| k.1);
                open.extend(it.map(|k| k.1));
            }
        }
        if s.pool.len() > POOL_GC {
            s.collect_pool(&mut open, &mut current);
        }
    }

    let open_max = open.iter().map(|nd| nd.ub).fold(f64::NEG_INFINITY, f64::max);
    let Some(inc) = s.inc.take() else {
        return Ok(infeasible(n, nodes));
    };
    let best_bound = inc.value.max(pruned_max).max(if status == SolveStatus::OptimalWithinTol {
        f64::NEG_INFINITY
    } else {
        open_max
    });
    Ok(SolveResult {
        abs_gap: best_bound - inc.value,
        decision: inc.d,
        objective_value: inc.value,
        continuous_value: inc.z,
        best_bound,
        status,
        nodes,
    })
}

fn infeasible(n: usize, nodes: u64) -> SolveResult {
    SolveResult {
        decision: DecisionVector::zeros(n),
        objective_value: f64::NEG_INFINITY,
        continuous_value: None,
        best_bound: f64::NEG_INFINITY,
        abs_gap: 0.0,
        status: SolveStatus::Infeasible,
        nodes,
    }
}

impl<'a> Solver<'a> {
    fn new(model: &'a IlpModel, abs_tol: f64) -> Self {
        let n = model.binary_count;
        let mut cols = vec![Vec::new(); n];
        for (r, row) in model.rows.iter().enumerate() {
            for (&i, &v) in row.idx.iter().zip(&row.val) {
                cols[i].push((r, v));
            }
        }
        let mut requires = vec![Vec::new(); n];
        let mut required_by = vec![Vec::new(); n];
        for &(i, k) in &model.precedence {
            requires[i].push(k);
            required_by[k].push(i);
        }
        let cont_rows = (0..model.rows.len()).filter(|&r| model.rows[r].cont != 0.0).collect();
        let zscale = model.continuous.map_or(0.0, |c| c.objective.abs() * c.lower.abs().max(c.upper.abs()));
        let big_m = 10.0 * (model.objective.iter().map(|v| v.abs()).sum::<f64>() + zscale + 1.0);
        Solver {
            model,
            n,
            cols,
            oracle: ClosureOracle::new(n, requires.clone()),
            requires,
            required_by,
            cont: model.continuous,
            cont_rows,
            abs_tol,
            big_m,
            root_fix: vec![-1; n],
            pool: Vec::new(),
            inc: None,
            inc_col: None,
        }
    }

    fn inc_value(&self) -> f64 {
        self.inc.as_ref().map_or(f64::NEG_INFINITY, |i| i.value)
    }

    /// Fixes `i` to `v` and propagates along the precedence relation.
    fn set_fix(&self, fix: &mut [i8], i: usize, v: i8) -> bool {
        let mut stack = vec![i];
        while let Some(u) = stack.pop() {
            if fix[u] == v {
                continue;
            }
            if fix[u] != -1 {
                return false;
            }
            fix[u] = v;
            let next = if v == 1 { &self.requires[u] } else { &self.required_by[u] };
            stack.extend(next.iter().copied());
        }
        true
    }

    /// Probing on the precedence closure: a variable is fixed to zero when
    /// selecting it together with everything it requires already breaks a
    /// row, whatever else is selected.
    fn presolve(&self, fix: &mut [i8]) {
        let (zlo, zhi) = self.cont.map_or((0.0, 0.0), |c| (c.lower, c.upper));
        let rows = &self.model.rows;
        let base: Vec<f64> = rows
            .iter()
            .map(|r| r.val.iter().map(|v| v.min(0.0)).sum::<f64>() + (r.cont * zlo).min(r.cont * zhi))
            .collect();
        let Some(order) = super::topo_order(self.n, &self.model.precedence) else { return };
        // sinks of the requires relation first, so a kill propagates to
        // everything that requires the killed variable before it is probed
        let budget = 4e8;
        let avg_closure = (self.n as f64).sqrt().max(1.0) * 4.0;
        let work = self.n as f64 * avg_closure * rows.len().max(1) as f64;
        let stride = ((work / budget).ceil() as usize).max(1);
        let probe_rows: Vec<usize> = (0..rows.len()).step_by(stride).collect();
        let mut acc = vec![0.0; rows.len()];
        let mut seen = vec![false; self.n];
        let mut stack = Vec::new();
        let mut members = Vec::new();
        for &i in order.iter().rev() {
            if fix[i] != -1 {
                continue;
            }
            members.clear();
            stack.push(i);
            seen[i] = true;
            while let Some(u) = stack.pop() {
                members.push(u);
                for &k in &self.requires[u] {
                    if !seen[k] {
                        seen[k] = true;
                        stack.push(k);
                    }
                }
            }
            for &u in &members {
                seen[u] = false;
                for &(r, v) in &self.cols[u] {
                    if v > 0.0 {
                        acc[r] += v;
                    }
                }
            }
            let kill = probe_rows.iter().any(|&r| acc[r] + base[r] > rows[r].rhs + FEAS_TOL)
                || (stride > 1 && self.cols[i].iter().any(|&(r, v)| v > 0.0 && v + base[r] > rows[r].rhs + FEAS_TOL));
            for &u in &members {
                for &(r, _) in &self.cols[u] {
                    acc[r] = 0.0;
                }
            }
            if kill {
                self.set_fix(fix, i, 0);
            }
        }
    }

    fn respects(&self, fix: &[i8], d: &DecisionVector) -> bool {
        (0..self.n).all(|i| match fix[i] {
            1 => d.get(i),
            0 => !d.get(i),
            _ => true,
        })
    }

    fn activities(&self, d: &DecisionVector) -> Vec<f64> {
        let mut rv = vec![0.0; self.model.rows.len()];
        for i in d.ones() {
            for &(r, v) in &self.cols[i] {
                rv[r] += v;
            }
        }
        rv
    }

    fn try_incumbent(&mut self, d: &DecisionVector) -> bool {
        if self.model.precedence.iter().any(|&(i, k)| d.get(i) && !d.get(k)) {
            return false;
        }
        let rv = self.activities(d);
        let Some(z) = best_continuous(self.cont, &self.model.rows, &rv) else {
            return false;
        };
        let mut value = d.dot(&self.model.objective);
        if let (Some(c), Some(z)) = (self.cont, z) {
            value += c.objective * z;
        }
        let better = match &self.inc {
            None => true,
            Some(inc) => {
                value > inc.value + TIE_TOL
                    || (value >= inc.value - TIE_TOL && d.lex_cmp(&inc.d) == std::cmp::Ordering::Less)
            }
        };
        if better {
            self.inc = Some(Incumbent { d: d.clone(), value, z });
            self.inc_col = None;
            self.augment(d.clone(), rv, z);
        }
        better
    }

    /// Greedy improvement: repeatedly add the single variable that keeps the
    /// set closed and feasible and gains the most.
    fn augment(&mut self, mut d: DecisionVector, mut rv: Vec<f64>, mut z: Option<f64>) {
        let rows = &self.model.rows;
        let mut improved = false;
        loop {
            let mut best: Option<(usize, f64, Option<f64>)> = None;
            for i in 0..self.n {
                if d.get(i) || self.root_fix[i] == 0 || !self.requires[i].iter().all(|&k| d.get(k)) {
                    continue;
                }
                let fits =
                    self.cols[i].iter().all(|&(r, v)| rows[r].cont != 0.0 || rv[r] + v <= rows[r].rhs + FEAS_TOL);
                if !fits {
                    continue;
                }
                let mut gain = self.model.objective[i];
                let mut nz = z;
                if let Some(c) = self.cont {
                    for &(r, v) in &self.cols[i] {
                        rv[r] += v;
                    }
                    let zz = self.best_z(&rv);
                    for &(r, v) in &self.cols[i] {
                        rv[r] -= v;
                    }
                    let Some(zz) = zz else { continue };
                    gain += c.objective * (zz - z.unwrap_or(0.0));
                    nz = Some(zz);
                }
                if gain > 1e-15 && best.as_ref().is_none_or(|b| gain > b.1) {
                    best = Some((i, gain, nz));
                }
            }
            let Some((i, _, nz)) = best else { break };
            d.set(i, true);
            for &(r, v) in &self.cols[i] {
                rv[r] += v;
            }
            z = nz;
            improved = true;
        }
        if improved {
            let mut value = d.dot(&self.model.objective);
            if let (Some(c), Some(z)) = (self.cont, z) {
                value += c.objective * z;
            }
            if value > self.inc_value() + TIE_TOL {
                self.inc = Some(Incumbent { d, value, z });
                self.inc_col = None;
            }
        }
    }

    fn best_z(&self, rv: &[f64]) -> Option<f64> {
        let c = self.cont?;
        let (mut lo, mut hi) = (c.lower, c.upper);
        for &r in &self.cont_rows {
            let row = &self.model.rows[r];
            let room = row.rhs - rv[r];
            if row.cont > 0.0 {
                hi = hi.min(room / row.cont);
            } else {
                lo = lo.max(room / row.cont);
            }
        }
        if lo > hi + FEAS_TOL {
            return None;
        }
        Some(if c.objective >= 0.0 { hi.max(lo) } else { lo.min(hi) }.clamp(c.lower, c.upper))
    }

    fn add_pool(&mut self, d: DecisionVector) -> usize {
        let obj = d.dot(&self.model.objective);
        let acts = self.activities(&d);
        self.pool.push(PoolCol { d, obj, acts });
        self.pool.len() - 1
    }

    fn column_vector(&self, k: usize, rows: &[usize]) -> Vec<f64> {
        let acts = &self.pool[k].acts;
        let mut a: Vec<f64> = rows.iter().map(|&r| acts[r]).collect();
        if self.cont.is_some() {
            a.push(0.0);
        }
        a.push(1.0);
        a
    }

    fn build_master(&self, rows: &[usize], cols: &[usize]) -> Master {
        let zlo = self.cont.map_or(0.0, |c| c.lower);
        let mut b: Vec<f64> =
            rows.iter().map(|&r| (self.model.rows[r].rhs - self.model.rows[r].cont * zlo).max(0.0)).collect();
        if let Some(c) = self.cont {
            b.push(c.upper - c.lower);
        }
        let mut m = Master::new(&b, self.big_m);
        if let Some(c) = self.cont {
            let mut a: Vec<f64> = rows.iter().map(|&r| self.model.rows[r].cont).collect();
            a.push(1.0);
            a.push(0.0);
            m.add_column(&a, c.objective, ColKind::Z);
        }
        for &k in cols {
            m.add_column(&self.column_vector(k, rows), self.pool[k].obj, ColKind::Pool(k));
        }
        m
    }

    fn process(&mut self, node: &Node) -> NodeOutcome {
        let fix = &node.fix;
        let fix1 = DecisionVector::from_indices(self.n, (0..self.n).filter(|&i| fix[i] == 1));
        let fix0 = DecisionVector::from_indices(self.n, (0..self.n).filter(|&i| fix[i] == 0));
        let consistent = |d: &DecisionVector| fix1.is_subset(d) && d.is_disjoint(&fix0);

        let mut cols: Vec<usize> = node.cols.iter().copied().filter(|&k| consistent(&self.pool[k].d)).collect();
        if let Some(inc) = &self.inc {
            if consistent(&inc.d) {
                let k = match self.inc_col {
                    Some(k) => k,
                    None => {
                        let d = inc.d.clone();
                        let k = self.add_pool(d);
                        self.inc_col = Some(k);
                        k
                    }
                };
                if !cols.contains(&k) {
                    cols.push(k);
                }
            }
        }
        let mut rows = node.rows.clone();
        let mut in_rows = vec![false; self.model.rows.len()];
        for &r in &rows {
            in_rows[r] = true;
        }
        let mut master = self.build_master(&rows, &cols);
        let mut node_ub = node.ub;
        let mut converged = false;
        let (zlo, zhi) = self.cont.map_or((0.0, 0.0), |c| (c.lower, c.upper));
        let cz = self.cont.map_or(0.0, |c| c.objective);

        for _ in 0..CG_ITER_CAP {
            if !master.optimize(PIVOT_CAP) {
                master = self.build_master(&rows, &master_pool_cols(&master));
                if !master.optimize(PIVOT_CAP) {
                    break;
                }
            }
            let y = master.duals();
            let pi = y[y.len() - 1];
            let mut w = self.model.objective.clone();
            let mut zcoef = cz;
            let mut ub = 0.0;
            for (a, &r) in rows.iter().enumerate() {
                let lam = y[a].max(0.0);
                if lam == 0.0 {
                    continue;
                }
                let row = &self.model.rows[r];
                ub += lam * row.rhs;
                zcoef -= lam * row.cont;
                for (&i, &v) in row.idx.iter().zip(&row.val) {
                    w[i] -= lam * v;
                }
            }
            let sol = self.oracle.solve(&w, fix);
            if self.cont.is_some() {
                ub += (zcoef * zlo).max(zcoef * zhi);
            }
            ub += sol.upper_bound;
            node_ub = node_ub.min(ub);
            let d = DecisionVector::from_bools(&sol.members);
            self.try_incumbent(&d);
            if node_ub <= self.inc_value() + self.abs_tol {
                return NodeOutcome::Pruned(node_ub);
            }
            let rc = sol.value - pi;
            if rc > RC_TOL * (1.0 + pi.abs()) && node_ub - master.value > 1e-10 {
                let k = self.add_pool(d);
                master.add_column(&self.column_vector(k, &rows), self.pool[k].obj, ColKind::Pool(k));
                continue;
            }
            // converged on the current rows; separate violated ones
            let acts = self.fractional_acts(&master);
            let mut viol: Vec<(f64, usize)> = Vec::new();
            for (r, row) in self.model.rows.iter().enumerate() {
                if in_rows[r] {
                    continue;
                }
                let v = acts.0[r] + row.cont * acts.1 - row.rhs;
                if v > VIOL_TOL {
                    viol.push((v, r));
                }
            }
            if viol.is_empty() {
                converged = true;
                break;
            }
            viol.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            for &(_, r) in viol.iter().take(ROWS_PER_ROUND) {
                in_rows[r] = true;
                rows.push(r);
            }
            master = self.build_master(&rows, &master_pool_cols(&master));
        }

        let (dbar, _) = self.fractional(&master);
        let x = master.primal();
        let y = master.duals();
        let keep_cols: Vec<usize> = master
            .kinds
            .iter()
            .enumerate()
            .filter_map(|(j, k)| match k {
                ColKind::Pool(p) if x[j] > 0.0 => Some(*p),
                _ => None,
            })
            .collect();
        // rows worth carrying to the children: positive dual or tight
        let (acts, zbar) = self.fractional_acts(&master);
        let keep_rows: Vec<usize> = rows
            .iter()
            .enumerate()
            .filter(|&(a, &r)| {
                let row = &self.model.rows[r];
                y[a] > 1e-12 || acts[r] + row.cont * zbar >= row.rhs - 1e-9
            })
            .map(|(_, &r)| r)
            .collect();
        for tau in [0.999_999, 0.5] {
            let d = DecisionVector::from_indices(self.n, (0..self.n).filter(|&i| dbar[i] >= tau));
            if consistent(&d) {
                self.try_incumbent(&d);
            }
        }
        if node_ub <= self.inc_value() + self.abs_tol {
            return NodeOutcome::Pruned(node_ub);
        }
        let mut var = None;
        let mut best = f64::INFINITY;
        for i in 0..self.n {
            if fix[i] != -1 {
                continue;
            }
            let f = dbar[i];
            if f > FRAC_TOL && f < 1.0 - FRAC_TOL {
                let dist = (f - 0.5).abs();
                if dist < best {
                    best = dist;
                    var = Some(i);
                }
            }
        }
        let branch = |i: usize| NodeOutcome::Branch {
            var: i,
            up_first: dbar[i] >= 0.5,
            ub: node_ub,
            cols: keep_cols.clone(),
            rows: keep_rows.clone(),
        };
        match var {
            Some(i) => branch(i),
            None => {
                if converged && x[0] <= 1e-9 {
                    // integral relaxation: its closure is optimal for the node
                    let d = DecisionVector::from_indices(self.n, (0..self.n).filter(|&i| dbar[i] >= 0.5));
                    self.try_incumbent(&d);
                    return NodeOutcome::Pruned(node_ub.min(self.inc_value().max(master.value)));
                }
                match (0..self.n).find(|&i| fix[i] == -1) {
                    Some(i) => branch(i),
                    None => {
                        let d = fix1.clone();
                        self.try_incumbent(&d);
                        NodeOutcome::Pruned(f64::NEG_INFINITY)
                    }
                }
            }
        }
    }

    /// Fractional decision of the master solution.
    fn fractional(&self, master: &Master) -> (Vec<f64>, f64) {
        let x = master.primal();
        let mut dbar = vec![0.0; self.n];
        let mut z = self.cont.map_or(0.0, |c| c.lower);
        for (j, k) in master.kinds.iter().enumerate() {
            match k {
                ColKind::Pool(p) if x[j] > 0.0 => {
                    for i in self.pool[*p].d.ones() {
                        dbar[i] += x[j];
                    }
                }
                ColKind::Z => z += x[j],
                _ => {}
            }
        }
        (dbar, z)
    }

    /// Row activities and continuous value of the master solution.
    fn fractional_acts(&self, master: &Master) -> (Vec<f64>, f64) {
        let x = master.primal();
        let mut acts = vec![0.0; self.model.rows.len()];
        let mut z = self.cont.map_or(0.0, |c| c.lower);
        for (j, k) in master.kinds.iter().enumerate() {
            match k {
                ColKind::Pool(p) if x[j] > 0.0 => {
                    for (a, v) in acts.iter_mut().zip(&self.pool[*p].acts) {
                        *a += x[j] * v;
                    }
                }
                ColKind::Z => z += x[j],
                _ => {}
            }
        }
        (acts, z)
    }

    fn collect_pool(&mut self, open: &mut [Node], current: &mut Option<Node>) {
        let mut keep = vec![false; self.pool.len()];
        for nd in open.iter().chain(current.iter()) {
            for &k in &nd.cols {
                keep[k] = true;
            }
        }
        if let Some(k) = self.inc_col {
            keep[k] = true;
        }
        let mut remap = vec![usize::MAX; self.pool.len()];
        let old = std::mem::take(&mut self.pool);
        for (k, col) in old.into_iter().enumerate() {
            if keep[k] {
                remap[k] = self.pool.len();
                self.pool.push(col);
            }
        }
        for nd in open.iter_mut().chain(current.iter_mut()) {
            for k in nd.cols.iter_mut() {
                *k = remap[*k];
            }
        }
        self.inc_col = self.inc_col.map(|k| remap[k]);
    }
}

fn master_pool_cols(m: &Master) -> Vec<usize> {
    m.kinds
        .iter()
        .filter_map(|k| match k {
            ColKind::Pool(p) => Some(*p),
            _ => None,
        })
        .collect()
}
