use num_traits::{Signed, Zero};

use crate::complex::{Cell, CellComplex, Geometry};
use crate::error::{Error, Result};
use crate::rational::{q, Q};

use super::tree::TruncatedTree;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FactorCell {
    Vertex(usize),
    /// The edge above this child vertex.
    Edge(usize),
}

/// Product of truncated trees with the height function
/// `h = c0 - sum_i slope_i * level_i`.
#[derive(Clone, Debug)]
pub struct TreeProductSpace {
    pub factors: Vec<TruncatedTree>,
    pub slope: Vec<Q>,
    pub c0: Q,
    pub complex: CellComplex,
    radix: Vec<usize>,
    stride: Vec<usize>,
}

impl TreeProductSpace {
    pub fn new(factors: Vec<TruncatedTree>, slope: Vec<Q>, c0: Q, max_cells: usize) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Domain("a product needs at least one factor".into()));
        }
        if slope.len() != factors.len() {
            return Err(Error::Domain("one slope per factor is required".into()));
        }
        if slope.iter().any(|c| !c.is_positive()) {
            return Err(Error::Domain("slopes must be positive".into()));
        }
        let radix: Vec<usize> = factors.iter().map(|t| 2 * t.n_vertices() - 1).collect();
        let mut stride = Vec::with_capacity(radix.len());
        let mut total = 1usize;
        for r in &radix {
            stride.push(total);
            total = total.checked_mul(*r).ok_or_else(|| Error::Capacity("product too large".into()))?;
        }
        if total > max_cells {
            return Err(Error::Capacity(format!("product has {total} cells, cap is {max_cells}")));
        }
        let mut sp = TreeProductSpace {
            factors,
            slope,
            c0,
            complex: CellComplex::new(vec![]).unwrap(),
            radix,
            stride,
        };
        let mut cells = Vec::with_capacity(total);
        for id in 0..total {
            let parts = sp.decode(id);
            let dim = parts.iter().filter(|p| matches!(p, FactorCell::Edge(_))).count();
            let mut boundary = Vec::with_capacity(2 * dim);
            let mut before = 0;
            for (i, p) in parts.iter().enumerate() {
                if let FactorCell::Edge(c) = *p {
                    let sgn: i8 = if before % 2 == 0 { 1 } else { -1 };
                    let mut hi = parts.clone();
                    hi[i] = FactorCell::Vertex(c);
                    let mut lo = parts.clone();
                    lo[i] = FactorCell::Vertex(sp.factors[i].parent(c).unwrap());
                    boundary.push((sp.encode(&hi), sgn));
                    boundary.push((sp.encode(&lo), -sgn));
                    before += 1;
                }
            }
            cells.push(Cell::new(dim, boundary));
        }
        sp.complex = CellComplex::new(cells)?;
        Ok(sp)
    }

    pub fn n(&self) -> usize {
        self.factors.len()
    }

    pub fn decode(&self, mut id: usize) -> Vec<FactorCell> {
        let mut out = Vec::with_capacity(self.factors.len());
        for (i, t) in self.factors.iter().enumerate() {
            let x = id % self.radix[i];
            id /= self.radix[i];
            let nv = t.n_vertices();
            out.push(if x < nv { FactorCell::Vertex(x) } else { FactorCell::Edge(x - nv + 1) });
        }
        out
    }

    pub fn encode(&self, parts: &[FactorCell]) -> usize {
        parts
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let x = match *p {
                    FactorCell::Vertex(v) => v,
                    FactorCell::Edge(c) => self.factors[i].n_vertices() + c - 1,
                };
                x * self.stride[i]
            })
            .sum()
    }

    pub fn vertex_id(&self, coords: &[usize]) -> usize {
        let parts: Vec<FactorCell> = coords.iter().map(|&v| FactorCell::Vertex(v)).collect();
        self.encode(&parts)
    }

    /// Factor vertices of a product vertex.
    pub fn vertex_coords(&self, id: usize) -> Vec<usize> {
        self.decode(id)
            .into_iter()
            .map(|p| match p {
                FactorCell::Vertex(v) => v,
                FactorCell::Edge(_) => panic!("cell {id} is not a vertex"),
            })
            .collect()
    }

    pub fn levels(&self, coords: &[usize]) -> Vec<usize> {
        coords.iter().zip(&self.factors).map(|(&v, t)| t.level(v)).collect()
    }

    pub fn h_of_levels(&self, levels: &[usize]) -> Q {
        let mut h = self.c0.clone();
        for (l, c) in levels.iter().zip(&self.slope) {
            h -= c * q(*l as i64);
        }
        h
    }

    pub fn h(&self, vertex: usize) -> Q {
        self.h_of_levels(&self.levels(&self.vertex_coords(vertex)))
    }

    /// Free directions (factor indices carrying an edge) of a cell.
    pub fn free_dirs(&self, id: usize) -> Vec<usize> {
        self.decode(id)
            .iter()
            .enumerate()
            .filter_map(|(i, p)| matches!(p, FactorCell::Edge(_)).then_some(i))
            .collect()
    }

    /// Corner with the given bit set over free directions (bit j set: child end of free direction j).
    pub fn corner(&self, id: usize, mask: u32) -> usize {
        let parts = self.decode(id);
        let mut j = 0;
        let coords: Vec<usize> = parts
            .iter()
            .enumerate()
            .map(|(i, p)| match *p {
                FactorCell::Vertex(v) => v,
                FactorCell::Edge(c) => {
                    let bit = mask & (1 << j) != 0;
                    j += 1;
                    if bit {
                        c
                    } else {
                        self.factors[i].parent(c).unwrap()
                    }
                }
            })
            .collect();
        self.vertex_id(&coords)
    }

    /// Height of the top corner (all free directions at their parent ends).
    pub fn h_top(&self, id: usize) -> Q {
        self.h(self.corner(id, 0))
    }

    pub fn h_range(&self, id: usize) -> (Q, Q) {
        let top = self.h_top(id);
        let drop = self.free_dirs(id).iter().fold(Q::zero(), |a, &i| a + &self.slope[i]);
        (&top - drop, top)
    }

    /// Vertex coordinates in the unit-cube chart of the cell.
    pub fn cell_geometry(&self, id: usize) -> Geometry {
        let k = self.free_dirs(id).len();
        (0u32..1 << k)
            .map(|m| (self.corner(id, m), (0..k).map(|j| q(((m >> j) & 1) as i64)).collect()))
            .collect()
    }

    /// A copy of the complex with cube charts attached, for refinement.
    pub fn complex_with_geometry(&self) -> CellComplex {
        let cells = self
            .complex
            .cells()
            .iter()
            .enumerate()
            .map(|(id, c)| {
                let mut c = c.clone();
                if c.dim > 0 {
                    c.geometry = Some(self.cell_geometry(id));
                }
                c
            })
            .collect();
        CellComplex::new(cells).expect("same complex")
    }

    /// Distance of a vertex from the truncation, in levels.
    pub fn margin(&self, vertex: usize) -> usize {
        self.vertex_coords(vertex)
            .iter()
            .zip(&self.factors)
            .map(|(&v, t)| t.level(v).min(t.depth - t.level(v)))
            .min()
            .unwrap()
    }

    /// Path metric of the 1-skeleton.
    pub fn distance(&self, a: usize, b: usize) -> usize {
        let (ca, cb) = (self.vertex_coords(a), self.vertex_coords(b));
        ca.iter().zip(&cb).zip(&self.factors).map(|((&x, &y), t)| t.distance(x, y)).sum()
    }

    /// Euclidean (l2) combination of the factor tree metrics.
    pub fn distance_l2(&self, a: &[usize], b: &[usize]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.factors)
            .map(|((&x, &y), t)| (t.distance(x, y) as f64).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn vertices(&self) -> &[usize] {
        self.complex.cells_of_dim(0)
    }
}

pub fn build_tree_product(
    factors: Vec<TruncatedTree>,
    slope: Vec<Q>,
    c0: Q,
    max_cells: usize,
) -> Result<TreeProductSpace> {
    TreeProductSpace::new(factors, slope, c0, max_cells)
}
