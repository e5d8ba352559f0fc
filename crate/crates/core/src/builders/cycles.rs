use std::collections::BTreeSet;

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chain::Chain;
use crate::complex::CellComplex;
use crate::error::{Error, Result};
use crate::rational::{q, Q};

use super::horosphere::HorosphereComplex;
use super::product::FactorCell;

/// A hard sphere: the slice of a flat through an apex sitting `r + 1`
/// above the level, oriented as the boundary of the part above the level.
#[derive(Clone, Debug)]
pub struct HardSphere {
    pub cycle: Chain,
    /// Apex vertex of the flat, in factor coordinates.
    pub apex: Vec<usize>,
    /// Product cells of the flat.
    pub flat_cells: Vec<usize>,
}

pub fn hard_sphere(z: &HorosphereComplex, r: usize) -> Result<HardSphere> {
    let sp = &*z.host;
    let n = sp.n();
    let height = &z.level + q(r as i64 + 1);
    // leg length needed in each factor
    let need: Vec<usize> = sp
        .slope
        .iter()
        .map(|c| {
            let x = q(r as i64 + 1) / c;
            x.ceil().to_integer().try_into().unwrap()
        })
        .collect();
    let mut best: Option<Vec<usize>> = None;
    let mut cur = vec![0usize; n];
    fn search(
        i: usize,
        cur: &mut Vec<usize>,
        need: &[usize],
        sp: &super::product::TreeProductSpace,
        height: &Q,
        best: &mut Option<Vec<usize>>,
    ) {
        if i == cur.len() {
            if &sp.h_of_levels(cur) == height {
                let score = |v: &Vec<usize>| (v.iter().map(|x| x * x).sum::<usize>(), v.clone());
                if best.as_ref().is_none_or(|b| score(cur) < score(b)) {
                    *best = Some(cur.clone());
                }
            }
            return;
        }
        let d = sp.factors[i].depth;
        if need[i] > d {
            return;
        }
        for l in 0..=d - need[i] {
            cur[i] = l;
            search(i + 1, cur, need, sp, height, best);
        }
    }
    search(0, &mut cur, &need, sp, &height, &mut best);
    let levels = best.ok_or_else(|| {
        Error::Capacity(format!(
            "no apex at height {} with legs {:?}; increase the depth",
            crate::rational::format_q(&height),
            need
        ))
    })?;
    let apex: Vec<usize> = levels.iter().zip(&sp.factors).map(|(&l, t)| t.first_of_level(l)).collect();
    // each factor line: two legs below the apex, the second starting at child 1
    let mut lines: Vec<Vec<(FactorCell, i8)>> = Vec::new();
    for (i, t) in sp.factors.iter().enumerate() {
        let u = apex[i];
        let mut cells = vec![(FactorCell::Vertex(u), 1i8)];
        for (leg, sign) in [(0usize, 1i8), (1, -1)] {
            let mut v = t.children(u).start + leg;
            loop {
                cells.push((FactorCell::Edge(v), sign));
                cells.push((FactorCell::Vertex(v), 1));
                if t.is_leaf(v) {
                    break;
                }
                v = t.children(v).start;
            }
        }
        lines.push(cells);
    }
    let mut flat_cells = Vec::new();
    let mut tops: Vec<(usize, i8)> = Vec::new();
    let mut idx = vec![0usize; n];
    'outer: loop {
        let parts: Vec<FactorCell> = (0..n).map(|i| lines[i][idx[i]].0).collect();
        let sign: i8 = (0..n).map(|i| lines[i][idx[i]].1).product();
        let id = sp.encode(&parts);
        flat_cells.push(id);
        if parts.iter().all(|p| matches!(p, FactorCell::Edge(_))) {
            tops.push((id, sign));
        }
        for i in 0..n {
            idx[i] += 1;
            if idx[i] < lines[i].len() {
                continue 'outer;
            }
            idx[i] = 0;
        }
        break;
    }
    flat_cells.sort_unstable();
    let mut cycle = Chain::zero(z.complex.dim());
    for (x, s) in tops {
        if let Some(c) = z.cell_of_carrier(x) {
            if z.complex.cell(c).dim + 1 == n {
                cycle.add_term(c, q(s as i64));
            }
        }
    }
    if n >= 2 && !z.complex.is_cycle(&cycle)? {
        return Err(Error::Numerical("hard sphere failed to close".into()));
    }
    Ok(HardSphere { cycle, apex, flat_cells })
}

/// Boundary of a random connected blob of `(k+1)`-cells, grown while the
/// boundary mass stays within `budget`.
pub fn random_cycle(cx: &CellComplex, k: usize, budget: &Q, seed: u64) -> Result<Chain> {
    let cells = cx.cells_of_dim(k + 1);
    if cells.is_empty() {
        return Err(Error::Domain(format!("no {}-cells to bound", k + 1)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = *cells.choose(&mut rng).unwrap();
    let mut blob = Chain::cell(k + 1, first);
    let mut bd = cx.boundary(&blob)?;
    if &cx.mass(&bd)? > budget {
        return Ok(Chain::zero(k));
    }
    let cof = cx.cofaces();
    let mut frontier: BTreeSet<usize> = BTreeSet::new();
    let grow = |c: usize, frontier: &mut BTreeSet<usize>| {
        for &(f, _) in &cx.cell(c).boundary {
            for &(g, _) in &cof[f] {
                frontier.insert(g);
            }
        }
    };
    grow(first, &mut frontier);
    let mut misses = 0;
    while misses < 8 {
        let cand: Vec<usize> = frontier.iter().copied().filter(|c| blob.get(*c).is_zero()).collect();
        if cand.is_empty() {
            break;
        }
        let c = cand[rng.gen_range(0..cand.len())];
        let mut sign = Q::one();
        // orient consistently with the blob across a shared facet when possible
        for &(f, s) in &cx.cell(c).boundary {
            let bf = bd.get(f);
            if !bf.is_zero() {
                sign = if (bf > Q::zero()) == (s > 0) { -Q::one() } else { Q::one() };
                break;
            }
        }
        let mut trial = blob.clone();
        trial.add_term(c, sign);
        let tb = cx.boundary(&trial)?;
        if &cx.mass(&tb)? <= budget {
            blob = trial;
            bd = tb;
            grow(c, &mut frontier);
            misses = 0;
        } else {
            frontier.remove(&c);
            misses += 1;
        }
    }
    Ok(bd)
}

/// Boundary of the region `lower <= level_i <= upper` (vertex levels) inside
/// the flat spanned by the first-child geodesics from the roots.
pub fn flat_region_loop(z: &HorosphereComplex, lower: &[i64], upper: &[i64]) -> Result<Chain> {
    let sp = &*z.host;
    let n = sp.n();
    if n < 2 {
        return Err(Error::Domain("flat regions need at least two factors".into()));
    }
    let mut region = Chain::zero(n - 1);
    for &c in z.complex.cells_of_dim(n - 1) {
        let parts = z.position(c);
        let mut on_flat = true;
        for (i, p) in parts.iter().enumerate() {
            let t = &sp.factors[i];
            let v = match *p {
                FactorCell::Edge(ch) => ch,
                FactorCell::Vertex(v) => v,
            };
            if t.first_of_level(t.level(v)) != v {
                on_flat = false;
            }
        }
        if !on_flat {
            continue;
        }
        let inside = z.complex.vertices_of(c).iter().all(|&w| {
            let x = z.host_vertex(w);
            let levels: Vec<i64> = match x {
                Some(x) => sp.levels(&sp.vertex_coords(x)).iter().map(|&l| l as i64).collect(),
                None => return false,
            };
            levels.iter().zip(lower).zip(upper).all(|((l, a), b)| a <= l && l <= b)
        });
        if inside {
            region.add_term(c, Q::one());
        }
    }
    if region.is_zero() {
        return Err(Error::Domain("region contains no cells".into()));
    }
    z.complex.boundary(&region)
}
