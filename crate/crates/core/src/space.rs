//! Sample space indexing, rejection regions and the boundary incidence rows.

use std::cmp::Ordering;
use std::fmt;
use std::io::{BufRead, Write};

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::prob::{binom_pmf_vec_unchecked, Design, Outcome, Theta};

/// All outcomes of a design in row-major lexicographic order:
/// `index = s_C * (n_D + 1) + s_D` (zero based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSpace {
    design: Design,
}

impl SampleSpace {
    pub fn enumerate(design: Design) -> Self {
        SampleSpace { design }
    }

    pub fn design(&self) -> Design {
        self.design
    }

    pub fn len(&self) -> usize {
        (self.design.n_c + 1) * (self.design.n_d + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, o: Outcome) -> usize {
        o.s_c * (self.design.n_d + 1) + o.s_d
    }

    pub fn checked_index(&self, o: Outcome) -> Result<usize> {
        if !self.design.contains(o) {
            return Err(Error::Domain(format!("outcome {o:?} outside design {:?}", self.design)));
        }
        Ok(self.index(o))
    }

    #[inline]
    pub fn outcome(&self, i: usize) -> Outcome {
        let w = self.design.n_d + 1;
        Outcome::new(i / w, i % w)
    }

    pub fn outcomes(&self) -> impl Iterator<Item = Outcome> + '_ {
        (0..self.len()).map(move |i| self.outcome(i))
    }

    /// Index of `s + (1, 0)`.
    pub fn succ_c(&self, i: usize) -> Option<usize> {
        let o = self.outcome(i);
        (o.s_c < self.design.n_c).then(|| i + self.design.n_d + 1)
    }

    /// Index of `s + (0, 1)`.
    pub fn succ_d(&self, i: usize) -> Option<usize> {
        let o = self.outcome(i);
        (o.s_d < self.design.n_d).then(|| i + 1)
    }

    /// Index of `s - (1, 0)`.
    pub fn pred_c(&self, i: usize) -> Option<usize> {
        let o = self.outcome(i);
        (o.s_c > 0).then(|| i - self.design.n_d - 1)
    }

    /// Index of `s - (0, 1)`.
    pub fn pred_d(&self, i: usize) -> Option<usize> {
        let o = self.outcome(i);
        (o.s_d > 0).then(|| i - 1)
    }

    /// Pairs `(i, k)` meaning `d_k >= d_i`: rejecting `s` forces rejecting
    /// `s - (1,0)` and `s + (0,1)`.
    pub fn precedence_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(2 * self.len());
        for i in 0..self.len() {
            if let Some(k) = self.pred_c(i) {
                out.push((i, k));
            }
            if let Some(k) = self.succ_d(i) {
                out.push((i, k));
            }
        }
        out
    }

    pub fn is_convex(&self, d: &DecisionVector) -> Result<bool> {
        self.check_len(d)?;
        for i in d.ones() {
            if self.pred_c(i).is_some_and(|k| !d.get(k)) || self.succ_d(i).is_some_and(|k| !d.get(k)) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn check_len(&self, d: &DecisionVector) -> Result<()> {
        if d.len() != self.len() {
            return Err(Error::SizeMismatch { expected: self.len(), got: d.len() });
        }
        Ok(())
    }

    /// `P_theta(d(S) = 1)`.
    pub fn rejection_rate(&self, d: &DecisionVector, theta: Theta) -> Result<f64> {
        self.check_len(d)?;
        let m = Marginals::new(self.design);
        Ok(m.rate(d, theta))
    }
}

/// Marginal pmfs of a design, for repeated rate evaluation.
#[derive(Debug, Clone)]
pub struct Marginals {
    design: Design,
}

impl Marginals {
    pub fn new(design: Design) -> Self {
        Marginals { design }
    }

    pub fn pmf_c(&self, theta: f64) -> Vec<f64> {
        binom_pmf_vec_unchecked(self.design.n_c, theta)
    }

    pub fn pmf_d(&self, theta: f64) -> Vec<f64> {
        binom_pmf_vec_unchecked(self.design.n_d, theta)
    }

    /// Full joint pmf in sample-space order.
    pub fn joint(&self, theta: Theta) -> Vec<f64> {
        let pc = self.pmf_c(theta.c);
        let pd = self.pmf_d(theta.d);
        let mut out = Vec::with_capacity(pc.len() * pd.len());
        for a in &pc {
            out.extend(pd.iter().map(|b| a * b));
        }
        out
    }

    /// Masked outer product of the two marginals.
    pub fn rate(&self, d: &DecisionVector, theta: Theta) -> f64 {
        let pc = self.pmf_c(theta.c);
        let pd = self.pmf_d(theta.d);
        let w = self.design.n_d + 1;
        let mut total = 0.0;
        for (c, a) in pc.iter().enumerate() {
            let row: f64 = (0..w).filter(|&s| d.get(c * w + s)).map(|s| pd[s]).sum();
            total += a * row;
        }
        total
    }
}

/// One binary reject/accept decision per sample-space index.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DecisionVector {
    bits: FixedBitSet,
}

impl DecisionVector {
    pub fn zeros(len: usize) -> Self {
        DecisionVector { bits: FixedBitSet::with_capacity(len) }
    }

    pub fn all(len: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(len);
        bits.insert_range(..);
        DecisionVector { bits }
    }

    pub fn from_bools(v: &[bool]) -> Self {
        let mut d = Self::zeros(v.len());
        for (i, &b) in v.iter().enumerate() {
            d.set(i, b);
        }
        d
    }

    pub fn from_indices(len: usize, idx: impl IntoIterator<Item = usize>) -> Self {
        let mut d = Self::zeros(len);
        for i in idx {
            d.set(i, true);
        }
        d
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.len() == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.bits.contains(i)
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        self.bits.set(i, v);
    }

    pub fn count_ones(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }

    /// Elementwise `self <= other`.
    pub fn is_subset(&self, other: &DecisionVector) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub fn is_disjoint(&self, other: &DecisionVector) -> bool {
        self.bits.is_disjoint(&other.bits)
    }

    pub fn union_with(&mut self, other: &DecisionVector) {
        self.bits.union_with(&other.bits);
    }

    /// Lexicographic order on the bit sequence, index 0 first, 0 < 1.
    pub fn lex_cmp(&self, other: &DecisionVector) -> Ordering {
        let mut diff = self.bits.clone();
        diff.symmetric_difference_with(&other.bits);
        match diff.minimum() {
            None => self.len().cmp(&other.len()),
            Some(i) => self.get(i).cmp(&other.get(i)),
        }
    }

    /// `sum_i w_i d_i`.
    pub fn dot(&self, w: &[f64]) -> f64 {
        self.ones().map(|i| w[i]).sum()
    }

    pub fn write_csv<W: Write>(&self, space: &SampleSpace, mut w: W) -> Result<()> {
        space.check_len(self)?;
        writeln!(w, "s_C,s_D,reject")?;
        for i in 0..self.len() {
            let o = space.outcome(i);
            writeln!(w, "{},{},{}", o.s_c, o.s_d, u8::from(self.get(i)))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(space: &SampleSpace, r: R) -> Result<Self> {
        let mut d = DecisionVector::zeros(space.len());
        let mut seen = 0usize;
        for (ln, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if ln == 0 {
                if line != "s_C,s_D,reject" {
                    return Err(Error::Parse { line: 1, msg: format!("unexpected header {line:?}") });
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::Parse { line: ln + 1, msg: msg.to_string() };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 {
                return Err(bad("expected three fields"));
            }
            let s_c: usize = f[0].parse().map_err(|_| bad("bad s_C"))?;
            let s_d: usize = f[1].parse().map_err(|_| bad("bad s_D"))?;
            let i = space.checked_index(Outcome::new(s_c, s_d)).map_err(|_| bad("outcome out of range"))?;
            match f[2] {
                "0" => {}
                "1" => d.set(i, true),
                _ => return Err(bad("reject must be 0 or 1")),
            }
            seen += 1;
        }
        if seen != space.len() {
            return Err(Error::SizeMismatch { expected: space.len(), got: seen });
        }
        Ok(d)
    }
}

impl fmt::Debug for DecisionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.len()).map(|i| if self.get(i) { '1' } else { '0' }).collect();
        write!(f, "DecisionVector({s})")
    }
}

/// Rows of `A_C` and `A_D`: `+1` on the diagonal, `-1` on the neighbour
/// `s + (1,0)` resp. `s - (0,1)` when it exists.
#[derive(Debug, Clone)]
pub struct IncidenceRows {
    pub a_c: Vec<Option<usize>>,
    pub a_d: Vec<Option<usize>>,
}

impl IncidenceRows {
    pub fn new(space: &SampleSpace) -> Self {
        let n = space.len();
        IncidenceRows { a_c: (0..n).map(|i| space.succ_c(i)).collect(), a_d: (0..n).map(|i| space.pred_d(i)).collect() }
    }

    pub fn len(&self) -> usize {
        self.a_c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a_c.is_empty()
    }

    /// `A_C d` entrywise.
    pub fn apply_c(&self, d: &DecisionVector) -> Vec<i8> {
        apply(&self.a_c, d)
    }

    /// `A_D d` entrywise.
    pub fn apply_d(&self, d: &DecisionVector) -> Vec<i8> {
        apply(&self.a_d, d)
    }

    /// Precedence pairs `(k, i)` read off the off-diagonal entries.
    pub fn precedence_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.len() {
            // d_i >= d_{s+(1,0)}
            if let Some(k) = self.a_c[i] {
                out.push((k, i));
            }
            // d_i >= d_{s-(0,1)}
            if let Some(k) = self.a_d[i] {
                out.push((k, i));
            }
        }
        out
    }
}

fn apply(nb: &[Option<usize>], d: &DecisionVector) -> Vec<i8> {
    nb.iter().enumerate().map(|(i, k)| i8::from(d.get(i)) - k.map_or(0, |k| i8::from(d.get(k)))).collect()
}
