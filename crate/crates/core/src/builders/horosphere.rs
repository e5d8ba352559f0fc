use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use num_traits::{One, Signed, Zero};

use crate::chain::Chain;
use crate::complex::{Cell, CellComplex, Geometry};
use crate::error::{Error, Result};
use crate::linalg::{solve_columns, SparseVec};
use crate::rational::{det, format_q, q, Q};
use crate::refine::{triangulate, Triangulation};

use super::product::{FactorCell, TreeProductSpace};

/// The level set `h = level` of a tree product, as a polyhedral complex
/// whose cells are slices of the product cubes.
#[derive(Debug)]
pub struct HorosphereComplex {
    pub host: Arc<TreeProductSpace>,
    pub level: Q,
    pub complex: CellComplex,
    /// Product cell sliced by each cell.
    pub carrier: Vec<usize>,
    pub triangulation: Option<Triangulation>,
    /// Number of distinct cell shapes up to the congruence key.
    pub congruence_classes: usize,
    index: HashMap<usize, usize>,
    inclusion: Mutex<HashMap<usize, Chain>>,
}

struct Slicer<'a> {
    sp: &'a TreeProductSpace,
    t: &'a Q,
}

impl Slicer<'_> {
    fn crossing(&self, id: usize) -> Option<usize> {
        let free = self.sp.free_dirs(id);
        let (lo, hi) = self.sp.h_range(id);
        if free.is_empty() {
            (&hi == self.t).then_some(0)
        } else {
            (&lo < self.t && self.t < &hi).then(|| free.len() - 1)
        }
    }

    /// X cell obtained by pinning free direction `j` of `id` at end `e`.
    fn pin(&self, id: usize, j: usize, e: u32) -> usize {
        let mut parts = self.sp.decode(id);
        let i = self.sp.free_dirs(id)[j];
        if let FactorCell::Edge(c) = parts[i] {
            parts[i] = FactorCell::Vertex(if e == 1 { c } else { self.sp.factors[i].parent(c).unwrap() });
        }
        self.sp.encode(&parts)
    }

    /// Slice vertices of a crossing cell: (slice-vertex carrier, chart coordinates).
    fn points(&self, id: usize) -> Vec<(usize, Vec<Q>)> {
        let free = self.sp.free_dirs(id);
        let m = free.len();
        let top = self.sp.h_top(id);
        let hmask = |mask: u32| -> Q {
            (0..m).filter(|j| mask & (1 << j) != 0).fold(top.clone(), |a, j| a - &self.sp.slope[free[j]])
        };
        let coords = |mask: u32| -> Vec<Q> { (0..m).map(|j| q(((mask >> j) & 1) as i64)).collect() };
        let mut out = Vec::new();
        for mask in 0u32..1 << m {
            let h = hmask(mask);
            if &h == self.t {
                out.push((self.sp.corner(id, mask), coords(mask)));
            }
            for j in 0..m {
                if mask & (1 << j) != 0 {
                    continue;
                }
                let h2 = hmask(mask | (1 << j));
                if &h > self.t && self.t > &h2 {
                    let mut x = coords(mask);
                    x[j] = (&h - self.t) / &self.sp.slope[free[j]];
                    // the product edge in direction j through this corner
                    let mut edge = id;
                    for (jj, _) in free.iter().enumerate().rev() {
                        if jj != j {
                            edge = self.pin_in(edge, id, jj, (mask >> jj) & 1);
                        }
                    }
                    out.push((edge, x));
                }
            }
        }
        out
    }

    fn pin_in(&self, current: usize, original: usize, j: usize, e: u32) -> usize {
        let i = self.sp.free_dirs(original)[j];
        let mut parts = self.sp.decode(current);
        if let FactorCell::Edge(c) = parts[i] {
            parts[i] = FactorCell::Vertex(if e == 1 { c } else { self.sp.factors[i].parent(c).unwrap() });
        }
        self.sp.encode(&parts)
    }

    fn face_crosses(&self, id: usize, fixed: &[Option<u32>]) -> bool {
        let free = self.sp.free_dirs(id);
        let mut top = self.sp.h_top(id);
        let mut drop = Q::zero();
        for (j, f) in fixed.iter().enumerate() {
            match f {
                Some(1) => top -= &self.sp.slope[free[j]],
                Some(_) => {}
                None => drop += &self.sp.slope[free[j]],
            }
        }
        let lo = &top - drop;
        &lo < self.t && self.t < &top
    }

    /// Simplices triangulating the slice inside the face given by `fixed`.
    fn simplices(&self, id: usize, pts: &[Vec<Q>], fixed: &[Option<u32>]) -> Vec<Vec<Vec<Q>>> {
        let inside: Vec<&Vec<Q>> = pts
            .iter()
            .filter(|p| fixed.iter().enumerate().all(|(j, f)| f.is_none_or(|e| p[j] == q(e as i64))))
            .collect();
        let free = fixed.iter().filter(|f| f.is_none()).count();
        if free <= 1 {
            return vec![inside.into_iter().cloned().collect()];
        }
        if free == 2 {
            return vec![inside.into_iter().cloned().collect()];
        }
        let c = centroid(&inside);
        let mut out = Vec::new();
        for j in 0..fixed.len() {
            if fixed[j].is_some() {
                continue;
            }
            for e in 0..2 {
                let mut sub = fixed.to_vec();
                sub[j] = Some(e);
                if !self.face_crosses(id, &sub) {
                    continue;
                }
                for mut s in self.simplices(id, pts, &sub) {
                    s.insert(0, c.clone());
                    out.push(s);
                }
            }
        }
        out
    }
}

fn centroid(pts: &[&Vec<Q>]) -> Vec<Q> {
    let k = q(pts.len() as i64);
    (0..pts[0].len()).map(|i| pts.iter().fold(Q::zero(), |a, p| a + &p[i]) / &k).collect()
}

fn independent(vectors: Vec<Vec<Q>>, want: usize) -> Vec<Vec<Q>> {
    let mut basis: Vec<Vec<Q>> = Vec::new();
    for v in vectors {
        if basis.len() == want {
            break;
        }
        let mut cand = basis.clone();
        cand.push(v);
        // rank test through a Gram determinant
        let gram: Vec<Vec<Q>> = cand
            .iter()
            .map(|a| cand.iter().map(|b| a.iter().zip(b).fold(Q::zero(), |s, (x, y)| s + x * y)).collect())
            .collect();
        if !det(&gram).is_zero() {
            basis = cand;
        }
    }
    basis
}

fn sgn(x: &Q) -> i8 {
    if x.is_positive() {
        1
    } else {
        -1
    }
}

pub struct HorosphereOptions {
    pub triangulate: bool,
    pub max_cells: usize,
}

impl Default for HorosphereOptions {
    fn default() -> Self {
        HorosphereOptions { triangulate: true, max_cells: 5_000_000 }
    }
}

pub fn build_horosphere(host: Arc<TreeProductSpace>, level: Q, opts: &HorosphereOptions) -> Result<HorosphereComplex> {
    let sl = Slicer { sp: &host, t: &level };
    let mut crossing: Vec<(usize, usize)> = (0..host.complex.len())
        .filter_map(|id| sl.crossing(id).map(|d| (d, id)))
        .collect();
    if crossing.is_empty() {
        return Err(Error::Domain(format!("level {} misses the truncated product", format_q(&level))));
    }
    if crossing.len() > opts.max_cells {
        return Err(Error::Capacity(format!("horosphere has {} cells, cap is {}", crossing.len(), opts.max_cells)));
    }
    crossing.sort_unstable();
    let index: HashMap<usize, usize> = crossing.iter().enumerate().map(|(z, &(_, x))| (x, z)).collect();
    let mut cells = Vec::with_capacity(crossing.len());
    let mut classes = BTreeSet::new();
    for &(zdim, x) in &crossing {
        let free = host.free_dirs(x);
        let m = free.len();
        let cvec: Vec<Q> = free.iter().map(|&i| host.slope[i].clone()).collect();
        let pts: Vec<(usize, Vec<Q>)> = {
            let mut p: Vec<(usize, Vec<Q>)> = sl.points(x).into_iter().map(|(c, xs)| (index[&c], xs)).collect();
            p.sort_by_key(|a| a.0);
            p
        };
        let geometry: Geometry = pts.clone();
        let coords: Vec<Vec<Q>> = pts.iter().map(|(_, c)| c.clone()).collect();
        let mut boundary = Vec::new();
        if m >= 2 {
            let all: Vec<&Vec<Q>> = coords.iter().collect();
            let cs = centroid(&all);
            let mut facets: Vec<(usize, Vec<Vec<Q>>, Option<usize>)> = Vec::new();
            for j in 0..m {
                for e in 0..2u32 {
                    let f = sl.pin(x, j, e);
                    if let Some(&g) = index.get(&f) {
                        if sl.crossing(f) == Some(m - 2) {
                            let gp: Vec<Vec<Q>> = coords.iter().filter(|p| p[j] == q(e as i64)).cloned().collect();
                            facets.push((g, gp, Some(j)));
                        }
                    }
                }
            }
            if m == 2 {
                for (z, p) in &pts {
                    if cells_dim_is_vertex_carrier(&host, crossing[*z].1) {
                        facets.push((*z, vec![p.clone()], None));
                    }
                }
            }
            facets.sort_by_key(|a| a.0);
            facets.dedup_by(|a, b| a.0 == b.0);
            for (g, gp, j) in facets {
                let gr: Vec<&Vec<Q>> = gp.iter().collect();
                let cg = centroid(&gr);
                let vout: Vec<Q> = cg.iter().zip(&cs).map(|(a, b)| a - b).collect();
                let tangents = independent(
                    gp[1..].iter().map(|p| p.iter().zip(&gp[0]).map(|(a, b)| a - b).collect()).collect(),
                    m - 2,
                );
                let sigma_g = match j {
                    Some(j) if m > 2 => {
                        let mut cols: Vec<Vec<Q>> =
                            vec![cvec.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, c)| c.clone()).collect()];
                        for t in &tangents {
                            cols.push(t.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, c)| c.clone()).collect());
                        }
                        sgn(&det(&cols))
                    }
                    _ => 1,
                };
                let mut cols = vec![cvec.clone(), vout];
                cols.extend(tangents);
                let d = det(&cols);
                if d.is_zero() {
                    return Err(Error::Numerical(format!("degenerate incidence in slice of cell {x}")));
                }
                boundary.push((g, sigma_g * sgn(&d)));
            }
        }
        let weight = if m <= 1 {
            Q::one()
        } else {
            let fixed = vec![None; m];
            let mut vol = Q::zero();
            for s in sl.simplices(x, &coords, &fixed) {
                let edges: Vec<Vec<Q>> =
                    s[1..].iter().map(|p| p[1..].iter().zip(&s[0][1..]).map(|(a, b)| a - b).collect()).collect();
                vol += det(&edges).abs();
            }
            let fact = (1..m).fold(Q::one(), |a, i| a * q(i as i64));
            vol / fact / &cvec[0]
        };
        let mut key = format!("{m}|");
        let mut cs: Vec<String> = cvec.iter().map(format_q).collect();
        cs.sort();
        key.push_str(&cs.join(","));
        let mut d2: Vec<String> = Vec::new();
        for a in 0..coords.len() {
            for b in a + 1..coords.len() {
                let s = coords[a].iter().zip(&coords[b]).fold(Q::zero(), |acc, (u, v)| acc + (u - v) * (u - v));
                d2.push(format_q(&s));
            }
        }
        d2.sort();
        key.push('|');
        key.push_str(&d2.join(","));
        classes.insert(key);
        cells.push(Cell::new(zdim, boundary).with_weight(weight).with_geometry(geometry));
    }
    let complex = CellComplex::new(cells)?;
    let triangulation = if opts.triangulate { Some(triangulate(&complex)?) } else { None };
    Ok(HorosphereComplex {
        carrier: crossing.iter().map(|&(_, x)| x).collect(),
        host,
        level,
        complex,
        triangulation,
        congruence_classes: classes.len(),
        index,
        inclusion: Mutex::new(HashMap::new()),
    })
}

fn cells_dim_is_vertex_carrier(host: &TreeProductSpace, x: usize) -> bool {
    host.free_dirs(x).is_empty()
}

impl HorosphereComplex {
    pub fn cell_of_carrier(&self, x: usize) -> Option<usize> {
        self.index.get(&x).copied()
    }

    /// The product vertex underlying a slice vertex, when the slice passes through one.
    pub fn host_vertex(&self, z: usize) -> Option<usize> {
        let x = self.carrier[z];
        (self.complex.cell(z).dim == 0 && self.host.free_dirs(x).is_empty()).then_some(x)
    }

    pub fn is_vertex_aligned(&self) -> bool {
        self.complex.cells_of_dim(0).iter().all(|&z| self.host_vertex(z).is_some())
    }

    /// Factor positions of the carrier of a cell.
    pub fn position(&self, z: usize) -> Vec<FactorCell> {
        self.host.decode(self.carrier[z])
    }

    /// Maps a cell of the slice to a product chain with matching boundary,
    /// supported on faces of its carrier lying on or above the level.
    pub fn include_cell(&self, z: usize) -> Result<Chain> {
        if let Some(c) = self.inclusion.lock().unwrap().get(&z) {
            return Ok(c.clone());
        }
        let x = self.carrier[z];
        let sp = &*self.host;
        let dim = self.complex.cell(z).dim;
        let out = if dim == 0 {
            Chain::cell(0, sp.corner(x, 0))
        } else {
            let mut target = Chain::zero(dim - 1);
            for &(g, s) in &self.complex.cell(z).boundary {
                target.add_scaled(&self.include_cell(g)?, &q(s as i64));
            }
            let upper: Vec<usize> = sp
                .complex
                .closure([x])
                .into_iter()
                .filter(|&f| sp.complex.cell(f).dim == dim && sp.h_range(f).0 >= self.level)
                .collect();
            let cols: Vec<(usize, SparseVec)> = upper
                .iter()
                .map(|&f| (f, sp.complex.cell(f).boundary.iter().map(|&(g, s)| (g, q(s as i64))).collect()))
                .collect();
            let b: SparseVec = target.iter().map(|(i, v)| (i, v.clone())).collect();
            let sol = solve_columns(&cols, &b)
                .ok_or_else(|| Error::Numerical(format!("no upper filling for slice cell {z}")))?;
            Chain::from_terms(dim, sol)
        };
        self.inclusion.lock().unwrap().insert(z, out.clone());
        Ok(out)
    }

    pub fn include(&self, c: &Chain) -> Result<Chain> {
        self.complex.check_chain(c)?;
        let mut out = Chain::zero(c.dim());
        for (z, x) in c.iter() {
            out.add_scaled(&self.include_cell(z)?, x);
        }
        Ok(out)
    }

    /// Slice cells whose carriers lie in the downward sector of `x`: every
    /// factor coordinate is a descendant of (or equal to) the matching entry.
    pub fn cells_below(&self, x: &[usize]) -> Vec<usize> {
        (0..self.complex.len())
            .filter(|&z| {
                self.position(z).iter().zip(x).zip(&self.host.factors).all(|((p, &xi), t)| {
                    let v = match *p {
                        FactorCell::Vertex(v) => v,
                        FactorCell::Edge(c) => t.parent(c).unwrap(),
                    };
                    t.is_ancestor_or_self(xi, v)
                })
            })
            .collect()
    }

    /// Euclidean size of a cell: its weight times the norm of the slope
    /// vector restricted to the carrier's free directions.
    pub fn euclidean_volume(&self, z: usize) -> f64 {
        let free = self.host.free_dirs(self.carrier[z]);
        let n2: f64 = free.iter().map(|&i| crate::rational::to_f64(&self.host.slope[i]).powi(2)).sum();
        let dim = self.complex.cell(z).dim;
        if dim == 0 {
            return 1.0;
        }
        crate::rational::to_f64(&self.complex.cell(z).weight) * n2.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::tree::TruncatedTree;
    use crate::rational::qr;

    fn host(n: usize, depth: usize, c0: i64) -> Arc<TreeProductSpace> {
        let t = TruncatedTree::new(2, depth).unwrap();
        Arc::new(TreeProductSpace::new(vec![t; n], vec![q(1); n], q(c0), 10_000_000).unwrap())
    }

    #[test]
    fn two_factor_slice_is_a_graph() {
        let z = build_horosphere(host(2, 3, 3), q(0), &Default::default()).unwrap();
        assert_eq!(z.complex.dim(), 1);
        z.complex.check_boundary_squared().unwrap();
        assert!(z.is_vertex_aligned());
        for &e in z.complex.cells_of_dim(1) {
            assert_eq!(z.complex.cell(e).weight, q(1));
            assert_eq!(z.complex.cell(e).boundary.len(), 2);
        }
        // level vertices are the pairs with level sum 3
        let expected = (0..=3).map(|a| (1usize << a) * (1usize << (3 - a))).sum::<usize>();
        assert_eq!(z.complex.cells_of_dim(0).len(), expected);
    }

    #[test]
    fn three_factor_slices_close_up() {
        for level in [q(0), qr(1, 2), qr(1, 3)] {
            let z = build_horosphere(host(3, 2, 3), level, &Default::default()).unwrap();
            assert_eq!(z.complex.dim(), 2);
            z.complex.check_boundary_squared().unwrap();
            let tri = z.triangulation.as_ref().unwrap();
            tri.complex.check_boundary_squared().unwrap();
            tri.refine.check_chain_map(&z.complex, &tri.complex).unwrap();
        }
    }

    #[test]
    fn unit_slope_triangles_have_half_area() {
        let z = build_horosphere(host(3, 2, 3), q(0), &Default::default()).unwrap();
        for &f in z.complex.cells_of_dim(2) {
            assert_eq!(z.complex.cell(f).weight, qr(1, 2));
            assert_eq!(z.complex.cell(f).boundary.len(), 3);
        }
        assert!(z.congruence_classes <= 4);
    }

    #[test]
    fn inclusion_is_a_chain_map() {
        let z = build_horosphere(host(3, 2, 3), qr(1, 2), &Default::default()).unwrap();
        for id in 0..z.complex.len() {
            if z.complex.cell(id).dim == 0 {
                continue;
            }
            let lhs = z.host.complex.boundary(&z.include_cell(id).unwrap()).unwrap();
            let rhs = z.include(&z.complex.cell_boundary(id)).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn empty_level_is_rejected() {
        assert!(build_horosphere(host(2, 2, 0), q(5), &Default::default()).is_err());
    }
}
