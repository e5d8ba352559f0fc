use std::collections::BTreeSet;
use std::time::Instant;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use super::{setup, FillMethod, FillStatus, FillingResult, Program};
use crate::chain::Chain;
use crate::complex::CellComplex;
use crate::error::{Error, Result};
use crate::rational::{lcm_of_denominators, q, to_f64, Q};

#[derive(Clone, Debug)]
pub struct OracleOptions {
    /// Largest coefficient magnitude searched; `None` uses twice the largest
    /// coefficient of the cycle (at least 2).
    pub coeff_bound: Option<i64>,
    pub max_nodes: u64,
    /// Up to this many candidate cells the search is exhaustive.
    pub exhaustive_limit: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { coeff_bound: None, max_nodes: 50_000_000, exhaustive_limit: 24 }
    }
}

struct Dfs<'a> {
    p: &'a Program,
    cost: Vec<i128>,
    rhs: Vec<i64>,
    bound: i64,
    // rows whose last touching column is j
    closing: Vec<Vec<usize>>,
    row_sum: Vec<i64>,
    assign: Vec<i64>,
    best: Option<(i128, Vec<i64>)>,
    nodes: u64,
    max_nodes: u64,
}

impl Dfs<'_> {
    fn run(&mut self, j: usize, partial: i128) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            return Err(Error::SearchCap(format!("more than {} nodes", self.max_nodes)));
        }
        if let Some((b, _)) = &self.best {
            if partial >= *b {
                return Ok(());
            }
        }
        if j == self.p.cols.len() {
            self.best = Some((partial, self.assign.clone()));
            return Ok(());
        }
        // a closing row forces the value
        let forced = self.closing[j].first().map(|&r| {
            let s = self.p.entries[j].iter().find(|e| e.0 == r).unwrap().1 as i64;
            (self.rhs[r] - self.row_sum[r]) * s
        });
        let values: Vec<i64> = match forced {
            Some(v) if v.abs() <= self.bound => vec![v],
            Some(_) => return Ok(()),
            None => {
                let mut v = vec![0];
                for m in 1..=self.bound {
                    v.push(m);
                    v.push(-m);
                }
                v
            }
        };
        for v in values {
            for &(r, s) in &self.p.entries[j] {
                self.row_sum[r] += v * s as i64;
            }
            let ok = self.closing[j].iter().all(|&r| self.row_sum[r] == self.rhs[r]);
            if ok {
                self.assign[j] = v;
                self.run(j + 1, partial + self.cost[j] * v.abs() as i128)?;
            }
            for &(r, s) in &self.p.entries[j] {
                self.row_sum[r] -= v * s as i64;
            }
        }
        self.assign[j] = 0;
        Ok(())
    }
}

/// Exact integer minimum filling by exhaustive search (small instances) or
/// branch and bound on the linear relaxation.
pub fn min_fill_oracle(
    cx: &CellComplex,
    alpha: &Chain,
    region: Option<&BTreeSet<usize>>,
    opts: &OracleOptions,
) -> Result<FillingResult> {
    let start = Instant::now();
    let p = setup(cx, alpha, region)?;
    let dim = alpha.dim() + 1;
    if !alpha.is_integral() {
        return Ok(FillingResult::infeasible(dim, FillMethod::Oracle, "cycle has non-integral coefficients"));
    }
    let rhs: Vec<i64> = p.rhs.iter().map(|x| x.to_integer().to_i64().unwrap()).collect();
    let amax = rhs.iter().map(|x| x.abs()).max().unwrap_or(0);
    let bound = opts.coeff_bound.unwrap_or((2 * amax).max(2));
    let weights: Vec<Q> = p.cols.iter().map(|&c| cx.cell(c).weight.clone()).collect();
    let l = lcm_of_denominators(weights.iter());
    let lq = Q::from_integer(l.clone());
    let cost: Vec<i128> = weights.iter().map(|w| (w * &lq).to_integer().to_i128().unwrap()).collect();
    let solution: Option<Vec<i64>> = if p.cols.len() <= opts.exhaustive_limit {
        let mut closing = vec![Vec::new(); p.cols.len()];
        let mut last: Vec<Option<usize>> = vec![None; p.rows.len()];
        for (j, e) in p.entries.iter().enumerate() {
            for &(r, _) in e {
                last[r] = Some(j);
            }
        }
        for (r, l) in last.iter().enumerate() {
            match l {
                Some(j) => closing[*j].push(r),
                None if rhs[r] != 0 => {
                    return Ok(FillingResult::infeasible(dim, FillMethod::Oracle, "cycle cell with no coface"))
                }
                None => {}
            }
        }
        let mut dfs = Dfs {
            p: &p,
            cost,
            rhs,
            bound,
            closing,
            row_sum: vec![0; p.rows.len()],
            assign: vec![0; p.cols.len()],
            best: None,
            nodes: 0,
            max_nodes: opts.max_nodes,
        };
        dfs.run(0, 0)?;
        dfs.best.map(|(_, a)| a)
    } else {
        branch_and_bound(&p, &weights, bound, opts.max_nodes)?
    };
    let Some(sol) = solution else {
        let mut r = FillingResult::infeasible(dim, FillMethod::Oracle, "no integral filling within the coefficient bound");
        r.runtime_ms = start.elapsed().as_millis();
        return Ok(r);
    };
    let filling = Chain::from_int_terms(dim, p.cols.iter().zip(&sol).map(|(&c, &v)| (c, v)));
    debug_assert_eq!(&cx.boundary(&filling)?, alpha);
    let mass = cx.mass(&filling)?;
    Ok(FillingResult {
        filling,
        method: FillMethod::Oracle,
        mass,
        status: FillStatus::Optimal,
        duality_gap: None,
        runtime_ms: start.elapsed().as_millis(),
        note: Some(format!("coefficient bound {bound}")),
    })
}

fn relax(p: &Program, weights: &[Q], lo: &[i64], hi: &[i64]) -> Option<(f64, Vec<f64>)> {
    // split variables keep the objective linear: x = a - b with a, b >= 0
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = weights
        .iter()
        .zip(lo.iter().zip(hi))
        .map(|(w, (&l, &h))| {
            let w = to_f64(w);
            let a = lp.add_var(w, (l.max(0) as f64, h.max(0) as f64));
            let b = lp.add_var(w, ((-h).max(0) as f64, (-l).max(0) as f64));
            (a, b)
        })
        .collect();
    let mut rows: Vec<Vec<(minilp::Variable, f64)>> = vec![Vec::new(); p.rows.len()];
    for (j, e) in p.entries.iter().enumerate() {
        for &(r, s) in e {
            rows[r].push((vars[j].0, s as f64));
            rows[r].push((vars[j].1, -(s as f64)));
        }
    }
    for (r, t) in rows.into_iter().enumerate() {
        lp.add_constraint(t, ComparisonOp::Eq, to_f64(&p.rhs[r]));
    }
    let sol = lp.solve().ok()?;
    Some((sol.objective(), vars.iter().map(|&(a, b)| sol[a] - sol[b]).collect()))
}

fn branch_and_bound(p: &Program, weights: &[Q], bound: i64, max_nodes: u64) -> Result<Option<Vec<i64>>> {
    let n = p.cols.len();
    let mut best: Option<(Q, Vec<i64>)> = None;
    let mut stack = vec![(vec![-bound; n], vec![bound; n])];
    let mut nodes = 0u64;
    while let Some((lo, hi)) = stack.pop() {
        nodes += 1;
        if nodes > max_nodes {
            return Err(Error::SearchCap(format!("more than {max_nodes} branch-and-bound nodes")));
        }
        let Some((obj, x)) = relax(p, weights, &lo, &hi) else { continue };
        if let Some((b, _)) = &best {
            if obj >= to_f64(b) - 1e-9 {
                continue;
            }
        }
        let frac = x.iter().enumerate().map(|(j, v)| (j, (v - v.round()).abs())).filter(|(_, f)| *f > 1e-7).max_by(|a, b| a.1.total_cmp(&b.1));
        match frac {
            None => {
                let xi: Vec<i64> = x.iter().map(|v| v.round() as i64).collect();
                let mut sums = vec![0i64; p.rows.len()];
                for (j, e) in p.entries.iter().enumerate() {
                    for &(r, s) in e {
                        sums[r] += s as i64 * xi[j];
                    }
                }
                let ok = sums.iter().zip(&p.rhs).all(|(s, b)| q(*s) == *b);
                if ok {
                    let m = xi.iter().zip(weights).fold(Q::zero(), |a, (v, w)| a + w * Q::from_integer(BigInt::from(v.abs())));
                    if best.as_ref().is_none_or(|(b, _)| &m < b) {
                        best = Some((m, xi));
                    }
                }
            }
            Some((j, _)) => {
                let v = x[j];
                let (lo1, mut hi1) = (lo.clone(), hi.clone());
                hi1[j] = v.floor() as i64;
                let mut lo2 = lo;
                lo2[j] = v.ceil() as i64;
                let hi2 = hi;
                if lo1[j] <= hi1[j] {
                    stack.push((lo1, hi1));
                }
                if lo2[j] <= hi2[j] {
                    stack.push((lo2, hi2));
                }
            }
        }
    }
    Ok(best.map(|(_, x)| x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::build_grid;
    use crate::filling::{min_fill_lp, LpOptions};

    #[test]
    fn agrees_with_lp_on_small_squares() {
        let g = build_grid(3, 2, 1000).unwrap();
        for l in 1..=3 {
            let a = g.square_loop(l).unwrap();
            let o = min_fill_oracle(&g.complex, &a, None, &OracleOptions::default()).unwrap();
            let lp = min_fill_lp(&g.complex, &a, None, &LpOptions::default()).unwrap();
            assert_eq!(o.mass, lp.mass);
            assert_eq!(o.mass, q((l * l) as i64));
        }
    }

    #[test]
    fn branch_and_bound_path_for_larger_grids() {
        let g = build_grid(5, 2, 1000).unwrap();
        let a = g.square_loop(3).unwrap();
        let o = min_fill_oracle(&g.complex, &a, None, &OracleOptions::default()).unwrap();
        assert_eq!(o.mass, q(9));
    }
}
