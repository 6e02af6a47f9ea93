//! Maximum-weight closure by minimum cut.
//!
//! A closure is a set closed under the `requires` relation: if `i` is in
//! the set then every `k` with an edge `i -> k` is in it too.

use std::collections::VecDeque;

/// Result of one closure query.
#[derive(Debug, Clone)]
pub struct ClosureSolution {
    /// Membership per variable, including variables fixed to one.
    pub members: Vec<bool>,
    /// Weight of `members`.
    pub value: f64,
    /// Upper bound on the best closure weight, from the flow value.
    pub upper_bound: f64,
}

struct Edge {
    to: usize,
    cap: f64,
}

struct FlowGraph {
    adj: Vec<Vec<usize>>,
    edges: Vec<Edge>,
}

impl FlowGraph {
    fn new(n: usize) -> Self {
        FlowGraph { adj: vec![Vec::new(); n], edges: Vec::new() }
    }

    fn add(&mut self, u: usize, v: usize, cap: f64) {
        self.adj[u].push(self.edges.len());
        self.edges.push(Edge { to: v, cap });
        self.adj[v].push(self.edges.len());
        self.edges.push(Edge { to: u, cap: 0.0 });
    }

    fn levels(&self, s: usize, eps: f64) -> Vec<i32> {
        let mut level = vec![-1; self.adj.len()];
        level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &e in &self.adj[u] {
                let v = self.edges[e].to;
                if level[v] < 0 && self.edges[e].cap > eps {
                    level[v] = level[u] + 1;
                    q.push_back(v);
                }
            }
        }
        level
    }

    fn push(&mut self, u: usize, t: usize, f: f64, level: &[i32], it: &mut [usize], eps: f64) -> f64 {
        if u == t {
            return f;
        }
        while it[u] < self.adj[u].len() {
            let e = self.adj[u][it[u]];
            let v = self.edges[e].to;
            if self.edges[e].cap > eps && level[v] == level[u] + 1 {
                let got = self.push(v, t, f.min(self.edges[e].cap), level, it, eps);
                if got > 0.0 {
                    self.edges[e].cap -= got;
                    self.edges[e ^ 1].cap += got;
                    return got;
                }
            }
            it[u] += 1;
        }
        0.0
    }

    fn max_flow(&mut self, s: usize, t: usize, eps: f64) -> f64 {
        let mut flow = 0.0;
        loop {
            let level = self.levels(s, eps);
            if level[t] < 0 {
                return flow;
            }
            let mut it = vec![0usize; self.adj.len()];
            loop {
                let f = self.push(s, t, f64::INFINITY, &level, &mut it, eps);
                if f <= 0.0 {
                    break;
                }
                flow += f;
            }
        }
    }
}

/// Precedence structure shared by all closure queries of one model.
#[derive(Debug, Clone)]
pub struct ClosureOracle {
    n: usize,
    /// `requires[i]`: variables that must be selected when `i` is.
    requires: Vec<Vec<usize>>,
}

impl ClosureOracle {
    pub fn new(n: usize, requires: Vec<Vec<usize>>) -> Self {
        ClosureOracle { n, requires }
    }

    /// Best closure for weights `w` subject to `fix` (`-1` free, `0`, `1`).
    /// `fix` must already be closed under propagation.
    pub fn solve(&self, w: &[f64], fix: &[i8]) -> ClosureSolution {
        let n = self.n;
        let mut members = vec![false; n];
        let mut fixed_value = 0.0;
        let mut local = vec![usize::MAX; n];
        let mut free = Vec::new();
        for i in 0..n {
            match fix[i] {
                1 => {
                    members[i] = true;
                    fixed_value += w[i];
                }
                -1 => {
                    local[i] = free.len();
                    free.push(i);
                }
                _ => {}
            }
        }
        let m = free.len();
        let (s, t) = (m, m + 1);
        let mut g = FlowGraph::new(m + 2);
        let mut pos = 0.0;
        let mut scale = 0.0f64;
        for (li, &i) in free.iter().enumerate() {
            let wi = w[i];
            scale = scale.max(wi.abs());
            if wi > 0.0 {
                g.add(s, li, wi);
                pos += wi;
            } else if wi < 0.0 {
                g.add(li, t, -wi);
            }
            for &k in &self.requires[i] {
                if local[k] != usize::MAX {
                    g.add(li, local[k], f64::INFINITY);
                }
            }
        }
        let eps = scale * 1e-15;
        let flow = g.max_flow(s, t, eps);
        // source side of the residual graph
        let level = g.levels(s, eps);
        let mut value = fixed_value;
        for (li, &i) in free.iter().enumerate() {
            if level[li] >= 0 {
                members[i] = true;
                value += w[i];
            }
        }
        let upper_bound = (fixed_value + pos - flow).max(value) + 1e-14 * (pos + scale);
        ClosureSolution { members, value, upper_bound }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(n: usize, req: &[Vec<usize>], w: &[f64], fix: &[i8]) -> f64 {
        let mut best = f64::NEG_INFINITY;
        'outer: for mask in 0u32..(1 << n) {
            for i in 0..n {
                let inside = mask >> i & 1 == 1;
                if (fix[i] == 1 && !inside) || (fix[i] == 0 && inside) {
                    continue 'outer;
                }
                if inside && req[i].iter().any(|&k| mask >> k & 1 == 0) {
                    continue 'outer;
                }
            }
            let v: f64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| w[i]).sum();
            best = best.max(v);
        }
        best
    }

    #[test]
    fn matches_enumeration_on_small_dags() {
        let mut state = 12345u64;
        let mut rnd = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..300 {
            let n = 8;
            let mut req = vec![Vec::new(); n];
            for i in 0..n {
                for k in i + 1..n {
                    if rnd() < 0.25 {
                        req[i].push(k);
                    }
                }
            }
            let w: Vec<f64> = (0..n).map(|_| rnd() - 0.5).collect();
            let fix = vec![-1i8; n];
            let o = ClosureOracle::new(n, req.clone());
            let sol = o.solve(&w, &fix);
            let b = brute(n, &req, &w, &fix);
            assert!((sol.value - b).abs() < 1e-12, "{} vs {b}", sol.value);
            assert!(sol.upper_bound >= b - 1e-15);
            for i in 0..n {
                if sol.members[i] {
                    assert!(req[i].iter().all(|&k| sol.members[k]));
                }
            }
        }
    }
}
