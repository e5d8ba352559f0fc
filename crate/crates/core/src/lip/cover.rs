//! Assouad–Nagata covers of the model spaces and the relative cover of a
//! space around a subset used to build the nerve.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};
use serde::Serialize;

use super::metric::{GraphMetric, UNREACHABLE};
use crate::builders::{Grid, TreeProductSpace, TruncatedTree};
use crate::error::{Error, Result};
use crate::rational::{format_q, q, qr, to_f64, Q};

/// A cover at one scale with the constants its builder vouches for.
#[derive(Clone, Debug)]
pub struct AnCover {
    pub scale: usize,
    pub elements: Vec<Vec<usize>>,
    /// Every element has diameter at most `diam_factor * scale`.
    pub diam_factor: usize,
    /// Every set of diameter at most `scale` meets at most this many elements.
    pub multiplicity: usize,
}

fn into_metric(m: &GraphMetric, groups: BTreeMap<Vec<usize>, Vec<usize>>) -> Vec<Vec<usize>> {
    groups
        .into_values()
        .map(|cells| {
            let mut v: Vec<usize> = cells.iter().filter_map(|&c| m.index_of(c)).collect();
            v.sort_unstable();
            v
        })
        .filter(|v| !v.is_empty())
        .collect()
}

/// Blocks of side `2s` in the grid.
pub fn an_cover_grid(grid: &Grid, m: &GraphMetric, s: usize) -> Result<AnCover> {
    if s == 0 {
        return Err(Error::Domain("cover scale must be at least 1".into()));
    }
    let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for &v in grid.complex.cells_of_dim(0) {
        let key = grid.vertex_coords(v).iter().map(|x| x / (2 * s)).collect();
        groups.entry(key).or_default().push(v);
    }
    Ok(AnCover { scale: s, elements: into_metric(m, groups), diam_factor: 2 * grid.dims, multiplicity: 1 << grid.dims })
}

/// Band of a tree vertex at scale `s`: levels `0..=s` form one band, and
/// band `j >= 1` holds levels `js+1 ..= (j+1)s`, split by the ancestor at
/// level `(j-1)s+1`.  Returns `(band, representative)`.
pub fn tree_band(t: &TruncatedTree, s: usize, v: usize) -> (usize, usize) {
    let l = t.level(v);
    if l <= s {
        return (0, 0);
    }
    let j = (l - 1) / s;
    (j, t.ancestor_at(v, (j - 1) * s + 1))
}

/// Band cover of a tree, as lists of tree vertices.
pub fn an_cover_tree(t: &TruncatedTree, s: usize) -> Result<Vec<Vec<usize>>> {
    if s == 0 {
        return Err(Error::Domain("cover scale must be at least 1".into()));
    }
    let mut groups: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for v in 0..t.n_vertices() {
        groups.entry(tree_band(t, s, v)).or_default().push(v);
    }
    Ok(groups.into_values().collect())
}

/// Products of band covers.
pub fn an_cover_product(sp: &TreeProductSpace, m: &GraphMetric, s: usize) -> Result<AnCover> {
    if s == 0 {
        return Err(Error::Domain("cover scale must be at least 1".into()));
    }
    let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for &v in sp.vertices() {
        let key = sp
            .vertex_coords(v)
            .iter()
            .zip(&sp.factors)
            .flat_map(|(&x, t)| {
                let (b, r) = tree_band(t, s, x);
                [b, r]
            })
            .collect();
        groups.entry(key).or_default().push(v);
    }
    let n = sp.n();
    Ok(AnCover { scale: s, elements: into_metric(m, groups), diam_factor: 4 * n, multiplicity: 1 << n })
}

/// Largest number of elements met by a single set of diameter at most `s`,
/// found by exhaustive search over one point per element.
pub fn s_multiplicity(elements: &[Vec<usize>], s: u16, d: impl Fn(usize, usize) -> u16) -> usize {
    fn grow(
        chosen: &mut Vec<usize>,
        cands: &[(usize, Vec<usize>)],
        best: &mut usize,
        d: &dyn Fn(usize, usize) -> u16,
        s: u16,
    ) {
        *best = (*best).max(chosen.len());
        for (i, (_, pts)) in cands.iter().enumerate() {
            if chosen.len() + cands.len() - i <= *best {
                return;
            }
            for &p in pts {
                chosen.push(p);
                let rest: Vec<(usize, Vec<usize>)> = cands[i + 1..]
                    .iter()
                    .filter_map(|(e, ps)| {
                        let keep: Vec<usize> = ps.iter().copied().filter(|&x| d(x, p) <= s).collect();
                        (!keep.is_empty()).then_some((*e, keep))
                    })
                    .collect();
                grow(chosen, &rest, best, d, s);
                chosen.pop();
            }
        }
    }
    let cands: Vec<(usize, Vec<usize>)> = elements.iter().cloned().enumerate().filter(|(_, v)| !v.is_empty()).collect();
    let mut best = 0;
    grow(&mut Vec::new(), &cands, &mut best, &d, s);
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Near,
    Far,
}

/// Cover of a space adapted to the distance from a subset `Z`: elements
/// near `Z` have size about `eps`, elements far away grow linearly with the
/// distance to `Z`.
#[derive(Clone, Debug)]
pub struct LsCover {
    pub z: Vec<usize>,
    pub eps: Q,
    pub delta: Q,
    pub elements: Vec<Vec<usize>>,
    pub kind: Vec<Kind>,
    /// `d(D_k, Z)`.
    pub depth: Vec<u16>,
    pub r: Vec<Q>,
    /// Points with `tau_k > 0`.
    pub supports: Vec<Vec<usize>>,
    /// For each point, the elements whose support contains it.
    pub at_point: Vec<Vec<usize>>,
    dist: Vec<Vec<u16>>,
    pub declared: Declared,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Declared {
    /// `diam D_k <= diam_ratio * r(k)`.
    pub diam_ratio: String,
    /// Far elements: `diam D_k <= a * d(D_k, Z)`.
    pub a: String,
    /// Near elements lie within this distance of `Z`.
    pub near_radius: String,
    pub gamma: String,
    pub an_dim: usize,
    #[serde(skip)]
    pub values: [Q; 4],
}

impl LsCover {
    pub fn tau(&self, k: usize, x: usize) -> Q {
        let d = q(self.dist[k][x] as i64);
        if d < self.r[k] {
            &self.r[k] - d
        } else {
            Q::zero()
        }
    }

    pub fn distance_to_element(&self, k: usize, x: usize) -> u16 {
        self.dist[k][x]
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

fn ceil_q(x: &Q) -> usize {
    let c = x.ceil().to_integer();
    usize::try_from(c).unwrap_or(usize::MAX).max(1)
}

/// Builds the relative cover.  `an(s)` must return a cover of every point of
/// `m` at scale `s`; `z` lists the points of the subset.
pub fn ls_cover(m: &GraphMetric, z: &[usize], eps: &Q, an: impl Fn(usize) -> Result<AnCover>) -> Result<LsCover> {
    if z.is_empty() {
        return Err(Error::Domain("the subset is empty".into()));
    }
    if *eps <= Q::zero() {
        return Err(Error::Domain("eps must be positive".into()));
    }
    let delta = qr(1, 4);
    let dz = m.to_set(z);
    if dz.contains(&UNREACHABLE) {
        return Err(Error::Domain("some component of the space misses the subset".into()));
    }
    let comp = m.components_without(z);
    let rho = eps * q(2);
    let near_scale = ceil_q(&rho);
    let mut elements = Vec::new();
    let mut kind = Vec::new();
    let mut warnings = Vec::new();

    let near = an(near_scale)?;
    let (c_diam, c_mult) = (near.diam_factor, near.multiplicity);
    for e in &near.elements {
        let part: Vec<usize> = e.iter().copied().filter(|&x| q(dz[x] as i64) <= rho).collect();
        if !part.is_empty() {
            elements.push(part);
            kind.push(Kind::Near);
        }
    }
    let mut diam_ratio = q((c_diam * near_scale) as i64) / eps;
    let mut a = Q::zero();
    let max_d = *dz.iter().max().unwrap();
    let mut j = 0u32;
    loop {
        let lo = &rho * q(1i64 << j);
        if lo >= q(max_d as i64) {
            break;
        }
        let hi = &lo * q(2);
        let s = ceil_q(&lo);
        let cov = an(s)?;
        if cov.diam_factor != c_diam || cov.multiplicity != c_mult {
            warnings.push(format!("cover constants change at scale {s}"));
        }
        for e in &cov.elements {
            let mut parts: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for &x in e {
                let d = q(dz[x] as i64);
                if d > lo && d <= hi {
                    parts.entry(comp[x]).or_default().push(x);
                }
            }
            for part in parts.into_values() {
                elements.push(part);
                kind.push(Kind::Far);
            }
        }
        let r_min = std::cmp::max(&delta * &lo, eps.clone());
        let dr = q((cov.diam_factor * s) as i64) / r_min;
        if dr > diam_ratio {
            diam_ratio = dr;
        }
        let ar = q((cov.diam_factor * s) as i64) / &lo;
        if ar > a {
            a = ar;
        }
        j += 1;
    }

    let depth: Vec<u16> = elements.iter().map(|e| e.iter().map(|&x| dz[x]).min().unwrap()).collect();
    let r: Vec<Q> = depth.iter().map(|&d| std::cmp::max(&delta * q(d as i64), eps.clone())).collect();
    let dist: Vec<Vec<u16>> = elements.iter().map(|e| m.to_set(e)).collect();
    let supports: Vec<Vec<usize>> =
        dist.iter().zip(&r).map(|(d, r)| (0..m.len()).filter(|&x| q(d[x] as i64) < *r).collect()).collect();
    let mut at_point = vec![Vec::new(); m.len()];
    for (k, s) in supports.iter().enumerate() {
        for &x in s {
            at_point[x].push(k);
        }
    }
    let near_diam = q((c_diam * near_scale) as i64) / eps;
    let one = Q::one();
    let g1 = (&one + &a + &delta) / (&one - &delta);
    let g2 = &delta * (q(3) + &near_diam) / (&one - &delta);
    let gamma = std::cmp::max(std::cmp::max(g1, g2), one);
    let an_dim = 2 * c_mult - 1;
    let declared = Declared {
        diam_ratio: format_q(&diam_ratio),
        a: format_q(&a),
        near_radius: format_q(&rho),
        gamma: format_q(&gamma),
        an_dim,
        values: [diam_ratio, a, rho, gamma],
    };
    Ok(LsCover { z: z.to_vec(), eps: eps.clone(), delta, elements, kind, depth, r, supports, at_point, dist, declared, warnings })
}

/// Measured values of the five cover properties next to the declared bounds.
#[derive(Clone, Debug, Serialize)]
pub struct CoverAudit {
    pub elements: usize,
    pub near: usize,
    pub far: usize,
    pub covers_every_point: bool,
    pub max_diam_ratio: f64,
    pub diam_ok: bool,
    pub max_far_ratio: f64,
    pub max_near_depth: u16,
    pub distance_ok: bool,
    pub components_ok: bool,
    pub multiplicity: usize,
    pub multiplicity_bound: usize,
    pub multiplicity_ok: bool,
    pub gamma_measured: String,
    pub gamma_ok: bool,
    pub declared: Declared,
}

impl CoverAudit {
    pub fn passed(&self) -> bool {
        self.covers_every_point
            && self.diam_ok
            && self.distance_ok
            && self.components_ok
            && self.multiplicity_ok
            && self.gamma_ok
    }
}

pub fn audit_cover(m: &GraphMetric, c: &LsCover) -> CoverAudit {
    let [diam_ratio, a, rho, gamma] = &c.declared.values;
    let covers_every_point = (0..m.len()).all(|x| c.at_point[x].iter().any(|&k| c.dist[k][x] == 0));
    let mut max_diam = Q::zero();
    let mut max_far = Q::zero();
    let mut max_near_depth = 0u16;
    let mut distance_ok = true;
    for k in 0..c.len() {
        let diam = q(m.diameter(&c.elements[k]) as i64);
        let ratio = &diam / &c.r[k];
        if ratio > max_diam {
            max_diam = ratio;
        }
        match c.kind[k] {
            Kind::Near => {
                max_near_depth = max_near_depth.max(c.depth[k]);
                distance_ok &= q(c.depth[k] as i64) <= *rho;
            }
            Kind::Far => {
                let fr = diam / q(c.depth[k] as i64);
                distance_ok &= fr <= *a;
                if fr > max_far {
                    max_far = fr;
                }
            }
        }
    }
    let zset: BTreeSet<usize> = c.z.iter().copied().collect();
    let comp = m.components_without(&c.z);
    let components_ok = (0..c.len()).filter(|&k| c.kind[k] == Kind::Far).all(|k| {
        let s = &c.supports[k];
        s.iter().all(|x| !zset.contains(x)) && s.iter().all(|&x| comp[x] == comp[s[0]])
    });
    let multiplicity = c.at_point.iter().map(|v| v.len()).max().unwrap_or(0);
    let multiplicity_bound = 2 * c.declared.an_dim + 2;
    let mut g = Q::one();
    for ks in &c.at_point {
        for &k in ks {
            for &l in ks {
                let ratio = &c.r[k] / &c.r[l];
                if ratio > g {
                    g = ratio;
                }
            }
        }
    }
    CoverAudit {
        elements: c.len(),
        near: c.kind.iter().filter(|&&k| k == Kind::Near).count(),
        far: c.kind.iter().filter(|&&k| k == Kind::Far).count(),
        covers_every_point,
        max_diam_ratio: to_f64(&max_diam),
        diam_ok: max_diam <= *diam_ratio,
        max_far_ratio: to_f64(&max_far),
        max_near_depth,
        distance_ok,
        components_ok,
        multiplicity,
        multiplicity_bound,
        multiplicity_ok: multiplicity <= multiplicity_bound,
        gamma_ok: g <= *gamma,
        gamma_measured: format_q(&g),
        declared: c.declared.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::build_grid;

    #[test]
    fn grid_blocks() {
        let g = build_grid(8, 2, 10_000).unwrap();
        let m = GraphMetric::new(&g.complex, 1000).unwrap();
        for s in [1, 2] {
            let c = an_cover_grid(&g, &m, s).unwrap();
            let mult = s_multiplicity(&c.elements, s as u16, |a, b| m.d(a, b));
            assert!(mult <= 4, "scale {s}: {mult}");
            for e in &c.elements {
                assert!(m.diameter(e) as usize <= 4 * s);
            }
        }
        assert_eq!(an_cover_grid(&g, &m, 5).unwrap().elements.len(), 1);
        let g = build_grid(7, 2, 10_000).unwrap();
        let m = GraphMetric::new(&g.complex, 1000).unwrap();
        let unit = an_cover_grid(&g, &m, 1).unwrap();
        assert!(unit.elements.iter().all(|e| e.len() == 4 && m.diameter(e) == 2));
    }

    #[test]
    fn tree_bands() {
        let t = TruncatedTree::new(2, 6).unwrap();
        for s in 1..=3 {
            let c = an_cover_tree(&t, s).unwrap();
            let mult = s_multiplicity(&c, s as u16, |a, b| t.distance(a, b) as u16);
            assert!(mult <= 2, "scale {s}: {mult}");
            for e in &c {
                for &a in e {
                    for &b in e {
                        assert!(t.distance(a, b) <= 4 * s);
                    }
                }
            }
        }
        assert_eq!(an_cover_tree(&t, 6).unwrap().len(), 1);
    }

    #[test]
    fn subset_equal_to_space_gives_near_elements() {
        let g = build_grid(3, 2, 10_000).unwrap();
        let m = GraphMetric::new(&g.complex, 1000).unwrap();
        let all: Vec<usize> = (0..m.len()).collect();
        let c = ls_cover(&m, &all, &q(1), |s| an_cover_grid(&g, &m, s)).unwrap();
        assert!(c.kind.iter().all(|&k| k == Kind::Near));
        assert!(c.r.iter().all(|r| *r == q(1)));
        assert!(audit_cover(&m, &c).passed());
    }

    #[test]
    fn grid_with_side() {
        let g = build_grid(12, 2, 100_000).unwrap();
        let m = GraphMetric::new(&g.complex, 1000).unwrap();
        let side: Vec<usize> = (0..=12).map(|y| m.index_of(g.vertex_id(&[0, y]).unwrap()).unwrap()).collect();
        let c = ls_cover(&m, &side, &q(1), |s| an_cover_grid(&g, &m, s)).unwrap();
        let a = audit_cover(&m, &c);
        assert!(a.passed(), "{a:?}");
        let radii: BTreeSet<Q> = c.r.iter().cloned().collect();
        assert!(radii.len() >= 3);
    }
}
