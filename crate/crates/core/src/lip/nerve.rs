use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::cover::{Kind, LsCover};
use super::metric::GraphMetric;
use crate::complex::{Cell, CellComplex};
use crate::error::{Error, Result};
use crate::rational::{format_q, q, to_f64, Q};

/// Čech nerve of the supports of a cover: a simplex for every set of
/// elements whose supports share a point.
#[derive(Clone, Debug)]
pub struct Nerve {
    pub complex: CellComplex,
    /// Sorted element indices of each cell; cell `k < n_vertices` is element `k`.
    pub simplices: Vec<Vec<usize>>,
    pub fine: Vec<bool>,
    index: HashMap<Vec<usize>, usize>,
}

fn factorial(k: usize) -> Q {
    (1..=k).fold(Q::one(), |a, i| a * q(i as i64))
}

const MAX_CLIQUE: usize = 16;

pub fn nerve(cover: &LsCover) -> Result<Nerve> {
    let mut faces: BTreeSet<Vec<usize>> = BTreeSet::new();
    for ks in &cover.at_point {
        if ks.len() > MAX_CLIQUE {
            return Err(Error::Capacity(format!("{} supports share a point; nerve cap is {MAX_CLIQUE}", ks.len())));
        }
        let n = ks.len();
        for mask in 1u32..(1 << n) {
            faces.insert((0..n).filter(|i| mask >> i & 1 == 1).map(|i| ks[i]).collect());
        }
    }
    let mut simplices: Vec<Vec<usize>> = (0..cover.len()).map(|k| vec![k]).collect();
    let mut by_dim: Vec<Vec<Vec<usize>>> = Vec::new();
    for f in faces {
        if f.len() > 1 {
            while by_dim.len() < f.len() {
                by_dim.push(Vec::new());
            }
            by_dim[f.len() - 1].push(f);
        }
    }
    for layer in by_dim {
        simplices.extend(layer);
    }
    let index: HashMap<Vec<usize>, usize> = simplices.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    let mut cells = Vec::with_capacity(simplices.len());
    for s in &simplices {
        let d = s.len() - 1;
        let scale = s.iter().map(|&k| cover.r[k].clone()).max().unwrap();
        let boundary = if d == 0 {
            Vec::new()
        } else {
            (0..s.len())
                .map(|i| {
                    let mut f = s.clone();
                    f.remove(i);
                    (index[&f], if i % 2 == 0 { 1 } else { -1 })
                })
                .collect()
        };
        let weight = num_traits::pow(scale.clone(), d) / factorial(d);
        cells.push(Cell::new(d, boundary).with_weight(weight).with_scale(scale));
    }
    let fine = simplices.iter().map(|s| s.iter().any(|&k| cover.kind[k] == Kind::Near)).collect();
    Ok(Nerve { complex: CellComplex::new(cells)?, simplices, fine, index })
}

impl Nerve {
    pub fn simplex_id(&self, s: &[usize]) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn dim(&self) -> usize {
        self.complex.dim()
    }
}

/// Barycentric coordinates of the image of a point: `tau_k(x) / sum tau`.
pub fn map_g(cover: &LsCover, x: usize) -> Result<BTreeMap<usize, Q>> {
    let taus: Vec<(usize, Q)> = cover.at_point[x].iter().map(|&k| (k, cover.tau(k, x))).collect();
    let total = taus.iter().fold(Q::zero(), |a, (_, t)| a + t);
    if total.is_zero() {
        return Err(Error::Domain(format!("point {x} lies in no support")));
    }
    Ok(taus.into_iter().map(|(k, t)| (k, t / &total)).collect())
}

/// Distance in the nerve between two barycentric points, modeled as the
/// largest vertex scale involved times half the l1 difference.
pub fn nerve_distance(cover: &LsCover, a: &BTreeMap<usize, Q>, b: &BTreeMap<usize, Q>) -> Q {
    let keys: BTreeSet<usize> = a.keys().chain(b.keys()).copied().collect();
    let scale = keys.iter().map(|&k| cover.r[k].clone()).max().unwrap_or_default();
    let l1 = keys.iter().fold(Q::zero(), |acc, k| {
        let x = a.get(k).cloned().unwrap_or_default() - b.get(k).cloned().unwrap_or_default();
        acc + x.abs()
    });
    scale * l1 / q(2)
}

#[derive(Clone, Debug, Serialize)]
pub struct GAudit {
    pub nerve_dim: usize,
    pub nerve_cells: Vec<usize>,
    pub coordinates_ok: bool,
    pub star_ok: bool,
    pub lipschitz: String,
    pub gamma_measured: String,
    pub bound: String,
    pub lipschitz_ok: bool,
}

/// Checks `g` on every point and measures its Lipschitz constant over the
/// edges of the space against `gamma^2 (2 dim + 1)(2 dim + 2)`.
pub fn audit_g(m: &GraphMetric, cover: &LsCover, nv: &Nerve) -> Result<GAudit> {
    let gs: Vec<BTreeMap<usize, Q>> = (0..m.len()).map(|x| map_g(cover, x)).collect::<Result<_>>()?;
    let coordinates_ok = gs.iter().all(|g| {
        g.values().fold(Q::zero(), |a, v| a + v) == Q::one()
            && nv.simplex_id(&g.keys().copied().collect::<Vec<_>>()).is_some()
    });
    let star_ok = (0..m.len()).all(|x| cover.at_point[x].iter().all(|k| gs[x].get(k).is_some_and(|v| v.is_positive())));
    let mut lip = Q::zero();
    for x in 0..m.len() {
        for &y in &m.neighbors[x] {
            if y > x {
                let d = nerve_distance(cover, &gs[x], &gs[y]);
                if d > lip {
                    lip = d;
                }
            }
        }
    }
    let mut gamma = Q::one();
    for ks in &cover.at_point {
        for &k in ks {
            for &l in ks {
                let r = &cover.r[k] / &cover.r[l];
                if r > gamma {
                    gamma = r;
                }
            }
        }
    }
    let dim = nv.dim() as i64;
    let bound = &gamma * &gamma * q((2 * dim + 1) * (2 * dim + 2));
    Ok(GAudit {
        nerve_dim: nv.dim(),
        nerve_cells: nv.complex.count_by_dim(),
        coordinates_ok,
        star_ok,
        lipschitz: format_q(&lip),
        gamma_measured: format_q(&gamma),
        bound: format_q(&bound),
        lipschitz_ok: lip <= bound,
    })
}

/// Image in `Z` of each nerve vertex: a closest point of `Z` to the
/// element, lowest index first.
pub fn map_h0(cover: &LsCover) -> Vec<usize> {
    let mut zs = cover.z.clone();
    zs.sort_unstable();
    (0..cover.len()).map(|k| *zs.iter().min_by_key(|&&z| cover.distance_to_element(k, z)).unwrap()).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct H0Audit {
    /// Largest `d(h0(v_k), h0(v_l)) / scale` over nerve edges.
    pub edge_lipschitz: f64,
    /// Largest `d(h0(v_k), D_k) / eps` over near elements.
    pub near_offset: f64,
    /// Largest `d(h0(v), z) / eps` over points `z` of `Z` and vertices `v` of the carrier of `g(z)`.
    pub return_offset: f64,
    pub near_bound: f64,
    pub return_bound: f64,
    pub passed: bool,
}

pub fn audit_h0(m: &GraphMetric, cover: &LsCover, nv: &Nerve, h0: &[usize]) -> H0Audit {
    let eps = to_f64(&cover.eps);
    let mut edge_lipschitz: f64 = 0.0;
    for &e in nv.complex.cells_of_dim(1) {
        let s = &nv.simplices[e];
        let d = m.d(h0[s[0]], h0[s[1]]) as f64;
        edge_lipschitz = edge_lipschitz.max(d / to_f64(&nv.complex.cell(e).scale));
    }
    let mut near_offset: f64 = 0.0;
    for k in 0..cover.len() {
        if cover.kind[k] == Kind::Near {
            near_offset = near_offset.max(cover.distance_to_element(k, h0[k]) as f64 / eps);
        }
    }
    let mut return_offset: f64 = 0.0;
    for &z in &cover.z {
        for &k in &cover.at_point[z] {
            return_offset = return_offset.max(m.d(h0[k], z) as f64 / eps);
        }
    }
    let near_diam = to_f64(&cover.declared.values[0]);
    let rho = to_f64(&cover.declared.values[2]) / eps;
    let near_bound = rho;
    let return_bound = rho + near_diam + 1.0;
    H0Audit {
        edge_lipschitz,
        near_offset,
        return_offset,
        near_bound,
        return_bound,
        passed: near_offset <= near_bound && return_offset <= return_bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::build_grid;
    use crate::lip::cover::{an_cover_grid, ls_cover};

    #[test]
    fn grid_nerve_and_maps() {
        let g = build_grid(10, 2, 100_000).unwrap();
        let m = GraphMetric::new(&g.complex, 1000).unwrap();
        let side: Vec<usize> = (0..=10).map(|y| m.index_of(g.vertex_id(&[0, y]).unwrap()).unwrap()).collect();
        let c = ls_cover(&m, &side, &q(1), |s| an_cover_grid(&g, &m, s)).unwrap();
        let nv = nerve(&c).unwrap();
        nv.complex.check_boundary_squared().unwrap();
        for &e in nv.complex.cells_of_dim(1) {
            let s = &nv.simplices[e];
            assert_eq!(nv.complex.cell(e).scale, std::cmp::max(c.r[s[0]].clone(), c.r[s[1]].clone()));
        }
        let a = audit_g(&m, &c, &nv).unwrap();
        assert!(a.coordinates_ok && a.star_ok && a.lipschitz_ok, "{a:?}");
        let h0 = map_h0(&c);
        let b = audit_h0(&m, &c, &nv, &h0);
        assert!(b.passed, "{b:?}");
        for k in 0..c.len() {
            if c.elements[k].iter().any(|x| side.contains(x)) {
                assert!(c.elements[k].contains(&h0[k]));
            }
        }
    }

    #[test]
    fn single_support_maps_to_a_vertex() {
        let g = build_grid(2, 2, 1000).unwrap();
        let m = GraphMetric::new(&g.complex, 100).unwrap();
        let all: Vec<usize> = (0..m.len()).collect();
        let c = ls_cover(&m, &all, &q(4), |s| an_cover_grid(&g, &m, s)).unwrap();
        assert_eq!(c.len(), 1);
        let nv = nerve(&c).unwrap();
        assert_eq!(nv.complex.len(), 1);
        assert_eq!(map_g(&c, 3).unwrap(), BTreeMap::from([(0, q(1))]));
    }
}
