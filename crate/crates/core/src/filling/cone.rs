//! Fillings built by straightening a cycle one factor at a time onto a flat
//! slice and filling it there.
//!
//! For each factor `i`, `p_i` slides the factor-`i` coordinate of every cell
//! onto a fixed descending ray below the common ancestor of the cycle.  The
//! slide keeps levels, so it maps slice cells to slice cells and commutes
//! with the boundary.  The homotopy between the identity and `p_i` is built
//! cell by cell, each piece filling a small cycle inside the sector below
//! the cycle.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::time::Instant;

use super::{min_fill_lp, FillMethod, FillStatus, FillingResult, LpOptions};
use crate::builders::horosphere::HorosphereComplex;
use crate::builders::product::FactorCell;
use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::rational::q;

pub struct ConeFiller<'a> {
    z: &'a HorosphereComplex,
    adj: Vec<Vec<(usize, usize)>>,
    lp: LpOptions,
}

impl<'a> ConeFiller<'a> {
    pub fn new(z: &'a HorosphereComplex) -> Self {
        ConeFiller {
            z,
            adj: z.complex.adjacency(),
            lp: LpOptions { certify: false, tie_break: false, ..LpOptions::default() },
        }
    }

    fn anchor(&self, p: &FactorCell, i: usize) -> usize {
        match *p {
            FactorCell::Vertex(v) => v,
            FactorCell::Edge(c) => self.z.host.factors[i].parent(c).unwrap(),
        }
    }

    /// Per-factor lowest common ancestor of every cell in the closure of `ids`.
    fn apex(&self, ids: impl IntoIterator<Item = usize>) -> Vec<usize> {
        let host = &self.z.host;
        let mut x: Vec<Option<usize>> = vec![None; host.n()];
        for c in ids {
            for (i, p) in self.z.position(c).iter().enumerate() {
                let a = self.anchor(p, i);
                x[i] = Some(match x[i] {
                    None => a,
                    Some(b) => host.factors[i].lca(a, b),
                });
            }
        }
        x.into_iter().map(|v| v.unwrap_or(0)).collect()
    }

    /// Slide factor `i` of a slice cell onto the ray ending at `leaf`.
    fn slide(&self, cell: usize, i: usize, leaf: usize) -> Result<usize> {
        let host = &self.z.host;
        let t = &host.factors[i];
        let mut parts = self.z.position(cell);
        parts[i] = match parts[i] {
            FactorCell::Vertex(v) => FactorCell::Vertex(t.ancestor_at(leaf, t.level(v))),
            FactorCell::Edge(c) => FactorCell::Edge(t.ancestor_at(leaf, t.level(c))),
        };
        self.z
            .cell_of_carrier(host.encode(&parts))
            .ok_or_else(|| Error::Numerical(format!("slide of slice cell {cell} left the slice")))
    }

    fn slide_chain(&self, c: &Chain, i: usize, leaf: usize) -> Result<Chain> {
        let mut out = Chain::zero(c.dim());
        for (id, x) in c.iter() {
            out.add_term(self.slide(id, i, leaf)?, x.clone());
        }
        Ok(out)
    }

    /// Shortest edge path from `a` to `b` through vertices of `allowed`,
    /// as a 1-chain with boundary `b - a`.
    fn path(&self, a: usize, b: usize, allowed: &BTreeSet<usize>) -> Result<Chain> {
        let mut prev: HashMap<usize, (usize, usize)> = HashMap::new();
        let mut queue = VecDeque::from([a]);
        prev.insert(a, (a, usize::MAX));
        while let Some(u) = queue.pop_front() {
            if u == b {
                break;
            }
            for &(v, e) in &self.adj[u] {
                if allowed.contains(&v) && !prev.contains_key(&v) {
                    prev.insert(v, (u, e));
                    queue.push_back(v);
                }
            }
        }
        if !prev.contains_key(&b) {
            return Err(Error::Infeasible(format!("slice vertices {a} and {b} are not connected in the sector")));
        }
        let mut out = Chain::zero(1);
        let mut v = b;
        while v != a {
            let (u, e) = prev[&v];
            let (tail, _) = self.z.complex.edge_ends(e);
            out.add_term(e, q(if tail == u { 1 } else { -1 }));
            v = u;
        }
        Ok(out)
    }

    /// Some chain with boundary `sigma`, using cells below the apex of
    /// `sigma` before falling back to the whole `sector`.
    fn fill_piece(&self, sigma: &Chain, sector: &[usize]) -> Result<Chain> {
        let cx = &self.z.complex;
        if sigma.is_zero() {
            return Ok(Chain::zero(sigma.dim() + 1));
        }
        if sigma.dim() == 0 {
            let verts: BTreeSet<usize> = sector.iter().copied().filter(|&c| cx.cell(c).dim == 0).collect();
            let root = sigma.support().next().unwrap();
            let mut out = Chain::zero(1);
            for (v, x) in sigma.iter() {
                if v != root {
                    out.add_scaled(&self.path(root, v, &verts)?, x);
                }
            }
            return Ok(out);
        }
        let local = self.apex(cx.closure(sigma.support()));
        let near: BTreeSet<usize> = self.z.cells_below(&local).into_iter().collect();
        let r = min_fill_lp(cx, sigma, Some(&near), &self.lp)?;
        if r.is_feasible() {
            return Ok(r.filling);
        }
        let wide: BTreeSet<usize> = sector.iter().copied().collect();
        let r = min_fill_lp(cx, sigma, Some(&wide), &self.lp)?;
        if r.is_feasible() {
            return Ok(r.filling);
        }
        Err(Error::Infeasible(format!(
            "a {}-cycle met while straightening has no filling in the sector ({})",
            sigma.dim(),
            r.note.unwrap_or_default()
        )))
    }

    /// Homotopy piece for one cell: a chain `H(c)` with
    /// `dH(c) = c - p(c) - H(dc)`.
    fn homotopy_cell(
        &self,
        c: usize,
        i: usize,
        leaf: usize,
        sector: &[usize],
        memo: &mut HashMap<usize, Chain>,
    ) -> Result<Chain> {
        if let Some(h) = memo.get(&c) {
            return Ok(h.clone());
        }
        let cx = &self.z.complex;
        let dim = cx.cell(c).dim;
        let mut sigma = Chain::cell(dim, c);
        sigma.add_term(self.slide(c, i, leaf)?, q(-1));
        if dim > 0 {
            for &(g, s) in &cx.cell(c).boundary {
                let hg = self.homotopy_cell(g, i, leaf, sector, memo)?;
                sigma.add_scaled(&hg, &q(-(s as i64)));
            }
        }
        let h = self.fill_piece(&sigma, sector)?;
        memo.insert(c, h.clone());
        Ok(h)
    }

    /// Fills a `k`-cycle of the slice.  Needs at least `k + 2` factors.
    pub fn fill(&self, alpha: &Chain) -> Result<FillingResult> {
        let start = Instant::now();
        let cx = &self.z.complex;
        let n = self.z.host.n();
        let k = alpha.dim();
        if n < k + 2 {
            return Err(Error::Domain(format!("cone filling of {k}-cycles needs at least {} factors, got {n}", k + 2)));
        }
        cx.check_chain(alpha)?;
        if !cx.is_cycle(alpha)? {
            return Err(Error::Domain("input chain is not a cycle".into()));
        }
        let mut total = Chain::zero(k + 1);
        if !alpha.is_zero() {
            let x = self.apex(cx.closure(alpha.support()));
            let sector = self.z.cells_below(&x);
            let leaves: Vec<usize> = x.iter().zip(&self.z.host.factors).map(|(&v, t)| t.first_leaf_below(v)).collect();
            let mut cur = alpha.clone();
            for (i, &leaf) in leaves.iter().enumerate() {
                let mut memo = HashMap::new();
                for (c, a) in cur.iter() {
                    let h = self.homotopy_cell(c, i, leaf, &sector, &mut memo)?;
                    total.add_scaled(&h, a);
                }
                cur = self.slide_chain(&cur, i, leaf)?;
            }
            // `cur` now sits in the flat through the chosen rays.
            let flat: Vec<usize> = sector
                .iter()
                .copied()
                .filter(|&c| {
                    self.z.position(c).iter().enumerate().all(|(i, p)| {
                        let t = &self.z.host.factors[i];
                        let v = match *p {
                            FactorCell::Vertex(v) | FactorCell::Edge(v) => v,
                        };
                        t.is_ancestor_or_self(v, leaves[i])
                    })
                })
                .collect();
            let rest = self.fill_piece(&cur, &flat)?;
            total = &total + &rest;
            let b = cx.boundary(&total)?;
            if b != *alpha {
                return Err(Error::Numerical("straightened filling does not bound the cycle".into()));
            }
        }
        let mass = cx.mass(&total)?;
        Ok(FillingResult {
            filling: total,
            method: FillMethod::Cone,
            mass,
            status: FillStatus::Feasible,
            duality_gap: None,
            runtime_ms: start.elapsed().as_millis(),
            note: None,
        })
    }
}

pub fn cone_fill(z: &HorosphereComplex, alpha: &Chain) -> Result<FillingResult> {
    ConeFiller::new(z).fill(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::cycles::{hard_sphere, random_cycle};
    use crate::builders::horosphere::build_horosphere;
    use crate::builders::product::TreeProductSpace;
    use crate::builders::tree::TruncatedTree;
    use std::sync::Arc;

    fn z(n: usize, depth: usize, c0: i64) -> HorosphereComplex {
        let t = TruncatedTree::new(2, depth).unwrap();
        let sp = Arc::new(TreeProductSpace::new(vec![t; n], vec![q(1); n], q(c0), 10_000_000).unwrap());
        build_horosphere(sp, q(0), &Default::default()).unwrap()
    }

    #[test]
    fn zero_cycles_in_two_factors() {
        let z = z(2, 4, 4);
        let v = z.complex.cells_of_dim(0);
        let a = Chain::from_int_terms(0, [(v[0], 1), (v[v.len() - 1], -1)]);
        let r = cone_fill(&z, &a).unwrap();
        assert_eq!(z.complex.boundary(&r.filling).unwrap(), a);
        let h = hard_sphere(&z, 0).unwrap();
        assert!(matches!(cone_fill(&z, &h.cycle), Err(Error::Domain(_))));
    }

    #[test]
    fn slide_commutes_with_boundary() {
        let z = z(3, 3, 4);
        let f = ConeFiller::new(&z);
        for i in 0..3 {
            for &c in z.complex.cells_of_dim(1).iter().chain(z.complex.cells_of_dim(2)) {
                let lhs = z.complex.boundary(&f.slide_chain(&Chain::cell(z.complex.cell(c).dim, c), i, 7).unwrap());
                let rhs = f.slide_chain(&z.complex.cell_boundary(c), i, 7).unwrap();
                assert_eq!(lhs.unwrap(), rhs, "cell {c} factor {i}");
            }
        }
    }

    #[test]
    fn loops_in_three_factors() {
        let z = z(3, 5, 4);
        for seed in 0..4 {
            let a = random_cycle(&z.complex, 1, &q(10), seed).unwrap();
            let r = cone_fill(&z, &a).unwrap();
            assert_eq!(z.complex.boundary(&r.filling).unwrap(), a);
            let best = min_fill_lp(&z.complex, &a, None, &LpOptions::default()).unwrap();
            assert!(r.mass >= best.mass);
            assert!(r.mass <= best.mass * q(50));
        }
    }

    #[test]
    fn sphere_in_four_factors() {
        let z = z(4, 2, 3);
        let a = random_cycle(&z.complex, 2, &q(6), 3).unwrap();
        assert!(!a.is_zero());
        let r = cone_fill(&z, &a).unwrap();
        assert_eq!(z.complex.boundary(&r.filling).unwrap(), a);
    }
}
