//! Weighted finite cell complexes with exact chains.

use std::collections::{BTreeSet, HashMap};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::rational::{format_q, parse_q, Q};

/// Coordinates of a cell's vertices in a chart attached to the cell.
pub type Geometry = Vec<(usize, Vec<Q>)>;

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub dim: usize,
    pub boundary: Vec<(usize, i8)>,
    pub weight: Q,
    pub scale: Q,
    pub geometry: Option<Geometry>,
    pub label: Option<String>,
}

impl Cell {
    pub fn new(dim: usize, boundary: Vec<(usize, i8)>) -> Self {
        Cell { dim, boundary, weight: Q::one(), scale: Q::one(), geometry: None, label: None }
    }

    pub fn with_weight(mut self, w: Q) -> Self {
        self.weight = w;
        self
    }

    pub fn with_scale(mut self, s: Q) -> Self {
        self.scale = s;
        self
    }

    pub fn with_geometry(mut self, g: Geometry) -> Self {
        self.geometry = Some(g);
        self
    }

    pub fn with_label(mut self, l: impl Into<String>) -> Self {
        self.label = Some(l.into());
        self
    }
}

#[derive(Clone, Debug)]
pub struct CellComplex {
    cells: Vec<Cell>,
    by_dim: Vec<Vec<usize>>,
}

impl CellComplex {
    /// Validates references, dimensions, and positivity of weights and scales.
    pub fn new(cells: Vec<Cell>) -> Result<Self> {
        let mut by_dim: Vec<Vec<usize>> = Vec::new();
        for (id, c) in cells.iter().enumerate() {
            if !c.weight.is_positive() || !c.scale.is_positive() {
                return Err(Error::Malformed(format!("cell {id} has non-positive weight or scale")));
            }
            if c.dim == 0 && !c.boundary.is_empty() {
                return Err(Error::Malformed(format!("vertex {id} has a boundary")));
            }
            let mut seen = BTreeSet::new();
            for &(f, s) in &c.boundary {
                if s != 1 && s != -1 {
                    return Err(Error::Malformed(format!("cell {id}: incidence {s}")));
                }
                let Some(fc) = cells.get(f) else {
                    return Err(Error::Malformed(format!("cell {id}: facet {f} out of range")));
                };
                if fc.dim + 1 != c.dim {
                    return Err(Error::Malformed(format!("cell {id}: facet {f} has wrong dimension")));
                }
                if !seen.insert(f) {
                    return Err(Error::Malformed(format!("cell {id}: repeated facet {f}")));
                }
            }
            if by_dim.len() <= c.dim {
                by_dim.resize(c.dim + 1, Vec::new());
            }
            by_dim[c.dim].push(id);
        }
        Ok(CellComplex { cells, by_dim })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell(&self, id: usize) -> &Cell {
        &self.cells[id]
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Top dimension, or 0 for an empty complex.
    pub fn dim(&self) -> usize {
        self.by_dim.len().saturating_sub(1)
    }

    pub fn cells_of_dim(&self, d: usize) -> &[usize] {
        self.by_dim.get(d).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn count_by_dim(&self) -> Vec<usize> {
        self.by_dim.iter().map(|v| v.len()).collect()
    }

    pub fn cell_boundary(&self, id: usize) -> Chain {
        let c = &self.cells[id];
        Chain::from_int_terms(c.dim.saturating_sub(1), c.boundary.iter().map(|&(f, s)| (f, s as i64)))
    }

    pub fn check_chain(&self, c: &Chain) -> Result<()> {
        for id in c.support() {
            match self.cells.get(id) {
                None => return Err(Error::CarrierMismatch(format!("cell {id} not in complex"))),
                Some(cell) if cell.dim != c.dim() => {
                    return Err(Error::CarrierMismatch(format!(
                        "cell {id} has dimension {} but chain has dimension {}",
                        cell.dim,
                        c.dim()
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Cellular boundary. Rejects 0-chains; see [`Self::boundary_augmented`].
    pub fn boundary(&self, c: &Chain) -> Result<Chain> {
        if c.dim() == 0 {
            return Err(Error::Domain("boundary of a 0-chain requires augmentation".into()));
        }
        self.check_chain(c)?;
        let mut out = Chain::zero(c.dim() - 1);
        for (id, x) in c.iter() {
            for &(f, s) in &self.cells[id].boundary {
                if s > 0 {
                    out.add_term(f, x.clone());
                } else {
                    out.add_term(f, -x.clone());
                }
            }
        }
        Ok(out)
    }

    /// Boundary where a 0-chain maps to the empty chain when `augment` is set.
    pub fn boundary_augmented(&self, c: &Chain, augment: bool) -> Result<Option<Chain>> {
        if c.dim() == 0 {
            self.check_chain(c)?;
            return if augment { Ok(None) } else { self.boundary(c).map(Some) };
        }
        self.boundary(c).map(Some)
    }

    /// True iff `c` is a cycle; 0-chains are cycles in the reduced sense
    /// when their coefficients sum to zero.
    pub fn is_cycle(&self, c: &Chain) -> Result<bool> {
        if c.dim() == 0 {
            self.check_chain(c)?;
            return Ok(c.coefficient_sum().is_zero());
        }
        Ok(self.boundary(c)?.is_zero())
    }

    pub fn mass(&self, c: &Chain) -> Result<Q> {
        self.check_chain(c)?;
        Ok(c.iter().fold(Q::zero(), |acc, (id, x)| acc + x.abs() * &self.cells[id].weight))
    }

    /// Exhaustive check that the boundary of every boundary vanishes.
    pub fn check_boundary_squared(&self) -> Result<()> {
        let mut acc: HashMap<usize, i64> = HashMap::new();
        for (id, c) in self.cells.iter().enumerate() {
            if c.dim < 2 {
                continue;
            }
            acc.clear();
            for &(f, s) in &c.boundary {
                for &(g, t) in &self.cells[f].boundary {
                    *acc.entry(g).or_insert(0) += (s as i64) * (t as i64);
                }
            }
            if let Some((g, v)) = acc.iter().find(|(_, v)| **v != 0) {
                return Err(Error::Malformed(format!("boundary of boundary of cell {id} has {v} on cell {g}")));
            }
        }
        Ok(())
    }

    /// Vertices in the closure of a cell, sorted.
    pub fn vertices_of(&self, id: usize) -> Vec<usize> {
        let mut out = BTreeSet::new();
        let mut stack = vec![id];
        let mut seen = BTreeSet::new();
        while let Some(c) = stack.pop() {
            if !seen.insert(c) {
                continue;
            }
            if self.cells[c].dim == 0 {
                out.insert(c);
            } else {
                stack.extend(self.cells[c].boundary.iter().map(|&(f, _)| f));
            }
        }
        out.into_iter().collect()
    }

    /// All cells in the closure of the given cells.
    pub fn closure(&self, ids: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<usize> = ids.into_iter().collect();
        while let Some(c) = stack.pop() {
            if seen.insert(c) {
                stack.extend(self.cells[c].boundary.iter().map(|&(f, _)| f));
            }
        }
        seen
    }

    /// For every cell, the cells having it as a facet, with the incidence.
    pub fn cofaces(&self) -> Vec<Vec<(usize, i8)>> {
        let mut co = vec![Vec::new(); self.cells.len()];
        for (id, c) in self.cells.iter().enumerate() {
            for &(f, s) in &c.boundary {
                co[f].push((id, s));
            }
        }
        co
    }

    /// Endpoints of an edge as (tail, head) where the boundary is head - tail.
    pub fn edge_ends(&self, id: usize) -> (usize, usize) {
        let b = &self.cells[id].boundary;
        assert!(self.cells[id].dim == 1 && b.len() == 2, "cell {id} is not an edge");
        if b[0].1 > 0 {
            (b[1].0, b[0].0)
        } else {
            (b[0].0, b[1].0)
        }
    }

    /// Vertex adjacency of the 1-skeleton, with the connecting edge.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.cells.len()];
        for &e in self.cells_of_dim(1) {
            let (a, b) = self.edge_ends(e);
            adj[a].push((b, e));
            adj[b].push((a, e));
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
        }
        adj
    }

    /// Smallest and largest `weight / scale^dim` over cells of positive dimension.
    pub fn qc_ratio_range(&self) -> Option<(Q, Q)> {
        let mut range: Option<(Q, Q)> = None;
        for c in self.cells.iter().filter(|c| c.dim > 0) {
            let mut s = Q::one();
            for _ in 0..c.dim {
                s *= &c.scale;
            }
            let r = &c.weight / s;
            range = Some(match range {
                None => (r.clone(), r),
                Some((lo, hi)) => (if r < lo { r.clone() } else { lo }, if r > hi { r } else { hi }),
            });
        }
        range
    }

    pub fn is_simplicial(&self) -> bool {
        self.cells.iter().enumerate().all(|(id, c)| {
            c.dim == 0 || (c.boundary.len() == c.dim + 1 && self.vertices_of(id).len() == c.dim + 1)
        })
    }

    pub fn to_json(&self) -> ComplexJson {
        ComplexJson {
            cells: self
                .cells
                .iter()
                .enumerate()
                .map(|(id, c)| CellJson {
                    id,
                    dim: c.dim,
                    boundary: c.boundary.clone(),
                    weight: format_q(&c.weight),
                    scale: format_q(&c.scale),
                    label: c.label.clone(),
                    geometry: c.geometry.as_ref().map(|g| {
                        g.iter().map(|(v, xs)| (*v, xs.iter().map(format_q).collect())).collect()
                    }),
                })
                .collect(),
        }
    }

    pub fn from_json(j: &ComplexJson) -> Result<Self> {
        let mut cells = Vec::with_capacity(j.cells.len());
        for (pos, c) in j.cells.iter().enumerate() {
            if c.id != pos {
                return Err(Error::Parse(format!("cell ids must be 0..n in order; found {} at {pos}", c.id)));
            }
            let geometry = match &c.geometry {
                None => None,
                Some(g) => Some(
                    g.iter()
                        .map(|(v, xs)| Ok((*v, xs.iter().map(|s| parse_q(s)).collect::<Result<Vec<_>>>()?)))
                        .collect::<Result<Vec<_>>>()?,
                ),
            };
            cells.push(Cell {
                dim: c.dim,
                boundary: c.boundary.clone(),
                weight: parse_q(&c.weight)?,
                scale: parse_q(&c.scale)?,
                geometry,
                label: c.label.clone(),
            });
        }
        CellComplex::new(cells)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CellJson {
    pub id: usize,
    pub dim: usize,
    pub boundary: Vec<(usize, i8)>,
    pub weight: String,
    pub scale: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<Vec<(usize, Vec<String>)>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ComplexJson {
    pub cells: Vec<CellJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ChainJson {
    pub dim: usize,
    pub coefs: std::collections::BTreeMap<String, String>,
}

impl ChainJson {
    pub fn from_chain(c: &Chain) -> Self {
        ChainJson { dim: c.dim(), coefs: c.iter().map(|(i, x)| (i.to_string(), format_q(x))).collect() }
    }

    pub fn to_chain(&self) -> Result<Chain> {
        let mut c = Chain::zero(self.dim);
        for (k, v) in &self.coefs {
            let id: usize = k.parse().map_err(|_| Error::Parse(format!("bad cell id {k:?}")))?;
            c.add_term(id, parse_q(v)?);
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn triangle() -> CellComplex {
        // vertices 0,1,2; edges 3=[0,1], 4=[1,2], 5=[0,2]; face 6
        CellComplex::new(vec![
            Cell::new(0, vec![]),
            Cell::new(0, vec![]),
            Cell::new(0, vec![]),
            Cell::new(1, vec![(1, 1), (0, -1)]),
            Cell::new(1, vec![(2, 1), (1, -1)]),
            Cell::new(1, vec![(2, 1), (0, -1)]),
            Cell::new(2, vec![(3, 1), (4, 1), (5, -1)]),
        ])
        .unwrap()
    }

    #[test]
    fn boundary_of_triangle() {
        let cx = triangle();
        cx.check_boundary_squared().unwrap();
        let b = cx.boundary(&Chain::cell(2, 6)).unwrap();
        assert_eq!(b, Chain::from_int_terms(1, [(3, 1), (4, 1), (5, -1)]));
        assert!(cx.boundary(&b).unwrap().is_zero());
        assert_eq!(cx.mass(&b).unwrap(), q(3));
        assert!(cx.is_simplicial());
        assert_eq!(cx.vertices_of(6), vec![0, 1, 2]);
    }

    #[test]
    fn zero_chains_need_augmentation() {
        let cx = triangle();
        let v = Chain::cell(0, 0);
        assert!(matches!(cx.boundary(&v), Err(Error::Domain(_))));
        assert_eq!(cx.boundary_augmented(&v, true).unwrap(), None);
        assert!(cx.is_cycle(&Chain::from_int_terms(0, [(0, 1), (2, -1)])).unwrap());
    }

    #[test]
    fn mismatched_chain_rejected() {
        let cx = triangle();
        assert!(matches!(cx.boundary(&Chain::cell(1, 6)), Err(Error::CarrierMismatch(_))));
        assert!(matches!(cx.mass(&Chain::cell(1, 99)), Err(Error::CarrierMismatch(_))));
    }

    #[test]
    fn malformed_rejected() {
        assert!(CellComplex::new(vec![Cell::new(1, vec![(0, 1)])]).is_err());
        assert!(CellComplex::new(vec![Cell::new(0, vec![]).with_weight(q(0))]).is_err());
        let bad = CellComplex::new(vec![
            Cell::new(0, vec![]),
            Cell::new(0, vec![]),
            Cell::new(1, vec![(1, 1), (0, 1)]),
            Cell::new(2, vec![(2, 1)]),
        ])
        .unwrap();
        assert!(bad.check_boundary_squared().is_err());
    }

    #[test]
    fn json_roundtrip() {
        let cx = triangle();
        let s = serde_json::to_string(&cx.to_json()).unwrap();
        let back = CellComplex::from_json(&serde_json::from_str(&s).unwrap()).unwrap();
        assert_eq!(back.cells(), cx.cells());
        let c = Chain::from_terms(1, [(3, crate::rational::qr(1, 2)), (5, q(-2))]);
        let j = serde_json::to_string(&ChainJson::from_chain(&c)).unwrap();
        assert_eq!(serde_json::from_str::<ChainJson>(&j).unwrap().to_chain().unwrap(), c);
    }
}
