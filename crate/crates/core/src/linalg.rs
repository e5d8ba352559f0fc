//! Exact sparse linear solves over the rationals.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::rational::Q;

pub type SparseVec = BTreeMap<usize, Q>;

fn axpy(y: &mut SparseVec, a: &Q, x: &SparseVec) {
    for (k, v) in x {
        let t = a * v;
        match y.get_mut(k) {
            Some(e) => {
                *e += t;
                if e.is_zero() {
                    y.remove(k);
                }
            }
            None => {
                if !t.is_zero() {
                    y.insert(*k, t);
                }
            }
        }
    }
}

/// Incremental echelon form over a growing set of columns.
#[derive(Default)]
pub struct ColumnEchelon {
    pivots: Vec<(usize, SparseVec, SparseVec)>,
}

impl ColumnEchelon {
    pub fn new() -> Self {
        Self::default()
    }

    fn reduce(&self, v: &mut SparseVec, comb: &mut SparseVec) {
        for (row, pv, pc) in &self.pivots {
            if let Some(x) = v.get(row) {
                let f = -(x / &pv[row]);
                axpy(v, &f, pv);
                axpy(comb, &f, pc);
            }
        }
    }

    /// Adds a column; returns false if it was dependent on earlier ones.
    pub fn push(&mut self, index: usize, col: SparseVec) -> bool {
        let mut v = col;
        let mut comb = SparseVec::new();
        comb.insert(index, Q::from_integer(1.into()));
        self.reduce(&mut v, &mut comb);
        match v.keys().next().copied() {
            Some(row) => {
                self.pivots.push((row, v, comb));
                true
            }
            None => false,
        }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Some `x` with `sum_c x_c col_c = b`, using independent columns only.
    pub fn solve(&self, b: &SparseVec) -> Option<SparseVec> {
        let mut v = b.clone();
        let mut comb = SparseVec::new();
        self.reduce(&mut v, &mut comb);
        if !v.is_empty() {
            return None;
        }
        let mut x = SparseVec::new();
        axpy(&mut x, &-Q::from_integer(1.into()), &comb);
        Some(x)
    }
}

pub fn solve_columns(cols: &[(usize, SparseVec)], b: &SparseVec) -> Option<SparseVec> {
    let mut e = ColumnEchelon::new();
    for (i, c) in cols {
        e.push(*i, c.clone());
    }
    e.solve(b)
}
