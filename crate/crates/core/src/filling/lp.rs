use std::collections::BTreeSet;
use std::time::Instant;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use num_traits::{Signed, Zero};

use super::{setup, FillMethod, FillStatus, FillingResult, Program};
use crate::chain::Chain;
use crate::complex::CellComplex;
use crate::error::{Error, Result};
use crate::linalg::{solve_columns, SparseVec};
use crate::rational::{q, rationalize, to_f64, Q};

#[derive(Clone, Debug)]
pub struct LpOptions {
    /// Larger programs are reported as capped instead of solved.
    pub max_columns: usize,
    /// Solve the dual program and report an exact duality gap.
    pub certify: bool,
    /// Re-solve at the optimum preferring low cell ids.
    pub tie_break: bool,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions { max_columns: 50_000, certify: true, tie_break: true }
    }
}

const DEN: i64 = 1_000_000;

fn solve_primal(p: &Program, cost: &[f64], mass_cap: Option<(&[f64], f64)>) -> std::result::Result<Vec<f64>, minilp::Error> {
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<(minilp::Variable, minilp::Variable)> = cost
        .iter()
        .map(|&w| (lp.add_var(w, (0.0, f64::INFINITY)), lp.add_var(w, (0.0, f64::INFINITY))))
        .collect();
    let mut row_terms: Vec<Vec<(minilp::Variable, f64)>> = vec![Vec::new(); p.rows.len()];
    for (j, e) in p.entries.iter().enumerate() {
        for &(r, s) in e {
            row_terms[r].push((vars[j].0, s as f64));
            row_terms[r].push((vars[j].1, -(s as f64)));
        }
    }
    for (r, terms) in row_terms.into_iter().enumerate() {
        lp.add_constraint(terms, ComparisonOp::Eq, to_f64(&p.rhs[r]));
    }
    if let Some((w, cap)) = mass_cap {
        let terms: Vec<(minilp::Variable, f64)> =
            vars.iter().zip(w).flat_map(|(&(a, b), &w)| [(a, w), (b, w)]).collect();
        lp.add_constraint(terms, ComparisonOp::Le, cap);
    }
    let sol = lp.solve()?;
    Ok(vars.iter().map(|&(a, b)| sol[a] - sol[b]).collect())
}

/// Turns a floating solution into an exact one with the same boundary.
fn exact_primal(cx: &CellComplex, p: &Program, x: &[f64], alpha: &Chain) -> Option<Chain> {
    let k1 = alpha.dim() + 1;
    let mut c = Chain::zero(k1);
    let mut ok = true;
    for (j, &v) in x.iter().enumerate() {
        match rationalize(v, DEN, 1e-7) {
            Some(r) => c.add_term(p.cols[j], r),
            None => ok = false,
        }
    }
    if ok && &cx.boundary(&c).ok()? == alpha {
        return Some(c);
    }
    for thr in [1e-9, 1e-12, 0.0] {
        let cols: Vec<(usize, SparseVec)> = x
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > thr)
            .map(|(j, _)| (p.cols[j], p.entries[j].iter().map(|&(r, s)| (p.rows[r], q(s as i64))).collect()))
            .collect();
        let b: SparseVec = alpha.iter().map(|(i, v)| (i, v.clone())).collect();
        if let Some(sol) = solve_columns(&cols, &b) {
            return Some(Chain::from_terms(k1, sol));
        }
    }
    None
}

/// Exact lower bound from an approximately optimal dual solution.
fn dual_bound(p: &Program, weights: &[Q]) -> Option<Q> {
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    // Free variables are split in two; the solver mishandles unbounded ones.
    let ys: Vec<(minilp::Variable, minilp::Variable)> = p
        .rhs
        .iter()
        .map(|a| (lp.add_var(to_f64(a), (0.0, f64::INFINITY)), lp.add_var(-to_f64(a), (0.0, f64::INFINITY))))
        .collect();
    for (j, e) in p.entries.iter().enumerate() {
        let terms: Vec<(minilp::Variable, f64)> =
            e.iter().flat_map(|&(r, s)| [(ys[r].0, s as f64), (ys[r].1, -(s as f64))]).collect();
        let w = to_f64(&weights[j]);
        lp.add_constraint(terms.clone(), ComparisonOp::Le, w);
        lp.add_constraint(terms, ComparisonOp::Ge, -w);
    }
    let sol = lp.solve().ok()?;
    let y: Vec<Q> = ys.iter().map(|&(a, b)| rationalize(sol[a] - sol[b], DEN, 1e-6).unwrap_or_else(Q::zero)).collect();
    let mut lambda = q(1);
    for (j, e) in p.entries.iter().enumerate() {
        let s = e.iter().fold(Q::zero(), |a, &(r, sg)| a + &y[r] * q(sg as i64));
        let ratio = s.abs() / &weights[j];
        if ratio > lambda {
            lambda = ratio;
        }
    }
    let bound = p.rhs.iter().zip(&y).fold(Q::zero(), |a, (b, y)| a + b * y) / lambda;
    Some(bound)
}

/// Minimum-mass `(k+1)`-chain bounding `alpha`, restricted to `region` if given.
pub fn min_fill_lp(
    cx: &CellComplex,
    alpha: &Chain,
    region: Option<&BTreeSet<usize>>,
    opts: &LpOptions,
) -> Result<FillingResult> {
    let start = Instant::now();
    let p = setup(cx, alpha, region)?;
    let dim = alpha.dim() + 1;
    if alpha.is_zero() {
        return Ok(FillingResult {
            filling: Chain::zero(dim),
            method: FillMethod::Lp,
            mass: Q::zero(),
            status: FillStatus::Optimal,
            duality_gap: Some(Q::zero()),
            runtime_ms: 0,
            note: None,
        });
    }
    if p.cols.len() > opts.max_columns {
        let mut r = FillingResult::infeasible(dim, FillMethod::Lp, format!("{} columns exceed the cap", p.cols.len()));
        r.status = FillStatus::Capped;
        return Ok(r);
    }
    if let Some(r) = p.rows.iter().zip(&p.rhs).position(|(&row, a)| {
        !a.is_zero() && !p.entries.iter().any(|e| e.iter().any(|&(i, _)| p.rows[i] == row))
    }) {
        return Ok(FillingResult::infeasible(
            dim,
            FillMethod::Lp,
            format!("cell {} of the cycle has no coface in the region", p.rows[r]),
        ));
    }
    let weights: Vec<Q> = p.cols.iter().map(|&c| cx.cell(c).weight.clone()).collect();
    let wf: Vec<f64> = weights.iter().map(to_f64).collect();
    let x = match solve_primal(&p, &wf, None) {
        Ok(x) => x,
        Err(minilp::Error::Infeasible) => {
            let mut r = FillingResult::infeasible(dim, FillMethod::Lp, "the cycle is not a boundary in the region");
            r.runtime_ms = start.elapsed().as_millis();
            return Ok(r);
        }
        Err(e) => return Err(Error::Numerical(format!("linear program failed: {e}"))),
    };
    let mut filling = exact_primal(cx, &p, &x, alpha)
        .ok_or_else(|| Error::Numerical("could not recover an exact filling".into()))?;
    let mut mass = cx.mass(&filling)?;
    if opts.tie_break {
        let n = p.cols.len() as f64;
        let cost: Vec<f64> = (0..p.cols.len()).map(|j| 1.0 + j as f64 / n).collect();
        let cap = to_f64(&mass) * (1.0 + 1e-9) + 1e-9;
        if let Ok(x2) = solve_primal(&p, &cost, Some((&wf, cap))) {
            if let Some(f2) = exact_primal(cx, &p, &x2, alpha) {
                let m2 = cx.mass(&f2)?;
                if m2 <= mass {
                    filling = f2;
                    mass = m2;
                }
            }
        }
    }
    let duality_gap = if opts.certify { dual_bound(&p, &weights).map(|b| &mass - b) } else { None };
    let status = match &duality_gap {
        Some(g) if g.is_zero() => FillStatus::Optimal,
        Some(_) => FillStatus::Feasible,
        None if opts.certify => FillStatus::Feasible,
        None => FillStatus::Optimal,
    };
    Ok(FillingResult {
        filling,
        method: FillMethod::Lp,
        mass,
        status,
        duality_gap,
        runtime_ms: start.elapsed().as_millis(),
        note: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::build_grid;

    #[test]
    fn unit_square_loop() {
        let g = build_grid(1, 2, 100).unwrap();
        let loop1 = g.square_loop(1).unwrap();
        let r = min_fill_lp(&g.complex, &loop1, None, &LpOptions::default()).unwrap();
        assert_eq!(r.mass, q(1));
        assert!(r.certified());
        assert_eq!(g.complex.boundary(&r.filling).unwrap(), loop1);
    }

    #[test]
    fn square_loops_fill_by_area() {
        let g = build_grid(4, 2, 1000).unwrap();
        for l in 1..=4 {
            let a = g.square_loop(l).unwrap();
            let r = min_fill_lp(&g.complex, &a, None, &LpOptions::default()).unwrap();
            assert_eq!(r.mass, q((l * l) as i64));
            assert!(r.certified());
        }
    }

    #[test]
    fn zero_and_non_cycles() {
        let g = build_grid(2, 2, 1000).unwrap();
        let r = min_fill_lp(&g.complex, &Chain::zero(1), None, &LpOptions::default()).unwrap();
        assert!(r.filling.is_zero());
        let e = g.complex.cells_of_dim(1)[0];
        assert!(matches!(min_fill_lp(&g.complex, &Chain::cell(1, e), None, &LpOptions::default()), Err(Error::Domain(_))));
    }

    #[test]
    fn empty_region_is_infeasible() {
        let g = build_grid(2, 2, 1000).unwrap();
        let a = g.square_loop(1).unwrap();
        let r = min_fill_lp(&g.complex, &a, Some(&BTreeSet::new()), &LpOptions::default()).unwrap();
        assert_eq!(r.status, FillStatus::Infeasible);
    }

    #[test]
    fn zero_cycles_fill_by_paths() {
        let g = build_grid(3, 2, 1000).unwrap();
        let a = g.vertex_id(&[0, 0]).unwrap();
        let b = g.vertex_id(&[3, 2]).unwrap();
        let c = Chain::from_int_terms(0, [(b, 1), (a, -1)]);
        let r = min_fill_lp(&g.complex, &c, None, &LpOptions::default()).unwrap();
        assert_eq!(r.mass, q(5));
        assert!(r.certified());
    }
}
