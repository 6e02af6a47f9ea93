//! Dense primal simplex for the column-generation master problem
//!
//! ```text
//! max  sum_k c_k mu_k + c_z z' - M art
//! s.t. sum_k a_rk mu_k + e_r z' + s_r = b_r   (b_r >= 0)
//!      z' + s_z = z_range                     (optional)
//!      art + sum_k mu_k = 1
//! ```
//!
//! The artificial column keeps the start basis feasible. Columns may be
//! appended at any time; the initial basis columns hold `B^{-1}`.

const ENTER_TOL: f64 = 1e-13;
const PIVOT_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ColKind {
    Art,
    Slack,
    Z,
    Pool(usize),
}

pub(crate) struct Master {
    nrows: usize,
    big_m: f64,
    t: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    dj: Vec<f64>,
    basis: Vec<usize>,
    pub kinds: Vec<ColKind>,
    pub value: f64,
}

impl Master {
    /// `b` holds the right-hand sides of all rows except the convexity row.
    pub fn new(b: &[f64], big_m: f64) -> Self {
        let nrows = b.len() + 1;
        let conv = nrows - 1;
        let mut t = vec![Vec::with_capacity(nrows + 64); nrows];
        let mut kinds = Vec::with_capacity(nrows + 64);
        let mut dj = Vec::with_capacity(nrows + 64);
        // artificial
        for (i, row) in t.iter_mut().enumerate() {
            row.push(if i == conv { 1.0 } else { 0.0 });
        }
        kinds.push(ColKind::Art);
        dj.push(0.0);
        for r in 0..conv {
            for (i, row) in t.iter_mut().enumerate() {
                row.push(if i == r { 1.0 } else { 0.0 });
            }
            kinds.push(ColKind::Slack);
            dj.push(0.0);
        }
        let mut rhs = b.to_vec();
        rhs.push(1.0);
        let mut basis: Vec<usize> = (1..nrows).collect();
        basis.push(0);
        Master { nrows, big_m, t, rhs, dj, basis, kinds, value: -big_m }
    }

    /// Row duals `y` with the convexity dual last.
    pub fn duals(&self) -> Vec<f64> {
        let conv = self.nrows - 1;
        let mut y: Vec<f64> = (0..conv).map(|r| -self.dj[1 + r]).collect();
        y.push(-self.big_m - self.dj[0]);
        y
    }

    /// Appends a column with full coefficient vector `a` (convexity entry last).
    pub fn add_column(&mut self, a: &[f64], cost: f64, kind: ColKind) {
        debug_assert_eq!(a.len(), self.nrows);
        let conv = self.nrows - 1;
        let y = self.duals();
        let mut d = cost;
        for (yi, ai) in y.iter().zip(a) {
            d -= yi * ai;
        }
        for i in 0..self.nrows {
            let row = &self.t[i];
            let mut v = row[0] * a[conv];
            for r in 0..conv {
                if a[r] != 0.0 {
                    v += row[1 + r] * a[r];
                }
            }
            self.t[i].push(v);
        }
        self.dj.push(d);
        self.kinds.push(kind);
    }

    /// Runs primal simplex to optimality. Returns false on iteration limit.
    pub fn optimize(&mut self, max_iter: usize) -> bool {
        let mut degenerate = 0usize;
        for _ in 0..max_iter {
            let bland = degenerate > 50;
            let mut enter = None;
            let mut best = ENTER_TOL;
            for (j, &d) in self.dj.iter().enumerate() {
                if d > best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(e) = enter else { return true };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.nrows {
                let a = self.t[i][e];
                if a > PIVOT_TOL {
                    let ratio = self.rhs[i].max(0.0) / a;
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-15 || (ratio <= lr + 1e-15 && self.basis[i] < self.basis[li]) {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                // unbounded direction cannot occur with bounded columns;
                // drop the candidate and continue
                self.dj[e] = 0.0;
                continue;
            };
            if ratio <= 1e-15 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, e);
        }
        false
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let p = self.t[r][e];
        let inv = 1.0 / p;
        for v in self.t[r].iter_mut() {
            *v *= inv;
        }
        self.rhs[r] *= inv;
        self.t[r][e] = 1.0;
        let prow = std::mem::take(&mut self.t[r]);
        let prhs = self.rhs[r];
        for i in 0..self.nrows {
            if i == r {
                continue;
            }
            let f = self.t[i][e];
            if f != 0.0 {
                let row = &mut self.t[i];
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
                row[e] = 0.0;
                self.rhs[i] -= f * prhs;
                if self.rhs[i] < 0.0 && self.rhs[i] > -1e-13 {
                    self.rhs[i] = 0.0;
                }
            }
        }
        let f = self.dj[e];
        for (d, pv) in self.dj.iter_mut().zip(&prow) {
            *d -= f * pv;
        }
        self.dj[e] = 0.0;
        self.value += f * prhs;
        self.t[r] = prow;
        self.basis[r] = e;
    }

    /// Primal value of every column.
    pub fn primal(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.dj.len()];
        for (i, &j) in self.basis.iter().enumerate() {
            x[j] = self.rhs[i].max(0.0);
        }
        x
    }

    #[cfg(test)]
    pub fn ncols(&self) -> usize {
        self.dj.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lp() {
        // max 3x + 2y  s.t. x + y <= 0.8 (row 0), x <= 0.5 (row 1), conv: x + y + art = 1
        let mut m = Master::new(&[0.8, 0.5], 100.0);
        m.add_column(&[1.0, 1.0, 1.0], 3.0, ColKind::Pool(0));
        m.add_column(&[1.0, 0.0, 1.0], 2.0, ColKind::Pool(1));
        m.add_column(&[0.0, 0.0, 1.0], 0.0, ColKind::Pool(2));
        assert!(m.optimize(100));
        // x = 0.5 (col 0 has row1 coefficient 1), second column 0.3, third 0.2
        let p = m.primal();
        let n = m.ncols();
        assert!((p[n - 3] - 0.5).abs() < 1e-12);
        assert!((p[n - 2] - 0.3).abs() < 1e-12);
        assert!((m.value - 2.1).abs() < 1e-12);
        let y = m.duals();
        // dual objective equals primal
        let dual = 0.8 * y[0] + 0.5 * y[1] + y[2];
        assert!((dual - 2.1).abs() < 1e-12);
    }
}
