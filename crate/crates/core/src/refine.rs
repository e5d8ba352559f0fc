//! Simplicial refinement: stellar triangulation and barycentric subdivision.

use std::collections::HashMap;

use num_traits::{One, Signed, Zero};

use crate::chain::Chain;
use crate::complex::{Cell, CellComplex, Geometry};
use crate::error::{Error, Result};
use crate::rational::{det, q, Q};

/// Linear map on chains given by the image of every source cell.
#[derive(Clone, Debug)]
pub struct CellMap {
    images: Vec<Chain>,
}

impl CellMap {
    pub fn new(images: Vec<Chain>) -> Self {
        CellMap { images }
    }

    pub fn image(&self, id: usize) -> &Chain {
        &self.images[id]
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn apply(&self, c: &Chain) -> Result<Chain> {
        let mut out = Chain::zero(c.dim());
        for (id, x) in c.iter() {
            let img = self
                .images
                .get(id)
                .ok_or_else(|| Error::CarrierMismatch(format!("cell {id} outside the map's domain")))?;
            if img.dim() != c.dim() && !img.is_zero() {
                return Err(Error::CarrierMismatch(format!("cell {id} has dimension {}", img.dim())));
            }
            out.add_scaled(img, x);
        }
        Ok(out)
    }

    /// Checks `d_target(f(c)) == f(d_source(c))` on every source cell of positive dimension.
    pub fn check_chain_map(&self, source: &CellComplex, target: &CellComplex) -> Result<()> {
        for id in 0..source.len() {
            if source.cell(id).dim == 0 {
                continue;
            }
            let img = &self.images[id];
            let lhs = if img.is_zero() { Chain::zero(img.dim().saturating_sub(1)) } else { target.boundary(img)? };
            let rhs = self.apply(&source.cell_boundary(id))?;
            if lhs != rhs && !(lhs.is_zero() && rhs.is_zero()) {
                return Err(Error::Malformed(format!("map does not commute with the boundary on cell {id}")));
            }
        }
        Ok(())
    }
}

fn face_mean(cx: &CellComplex, memo: &mut HashMap<(usize, usize), Q>, s: usize, k: usize) -> Q {
    memo.entry((s, k))
        .or_insert_with(|| {
            let faces: Vec<usize> = cx.closure([s]).into_iter().filter(|&f| cx.cell(f).dim == k).collect();
            let total = faces.iter().fold(Q::zero(), |a, &f| a + &cx.cell(f).weight);
            total / q(faces.len() as i64)
        })
        .clone()
}

fn factorial(k: usize) -> Q {
    (1..=k).fold(Q::one(), |acc, i| acc * q(i as i64))
}

fn mean(points: &[&Vec<Q>]) -> Vec<Q> {
    let n = points[0].len();
    let k = q(points.len() as i64);
    (0..n).map(|i| points.iter().fold(Q::zero(), |acc, p| acc + &p[i]) / &k).collect()
}

fn edge_vectors(points: &[Vec<Q>]) -> Vec<Vec<Q>> {
    points[1..].iter().map(|p| p.iter().zip(&points[0]).map(|(a, b)| a - b).collect()).collect()
}

fn projected_det(vectors: &[Vec<Q>], coords: &[usize]) -> Q {
    let cols: Vec<Vec<Q>> = vectors.iter().map(|v| coords.iter().map(|&i| v[i].clone()).collect()).collect();
    det(&cols)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Largest coordinate-projected volume of a simplex; a rational stand-in
/// for Euclidean volume that is comparable to it up to a dimensional factor.
pub fn projected_simplex_volume(points: &[Vec<Q>]) -> Q {
    let k = points.len() - 1;
    if k == 0 {
        return Q::one();
    }
    let v = edge_vectors(points);
    let n = points[0].len();
    let best = subsets(n, k).iter().map(|s| projected_det(&v, s).abs()).max().unwrap_or_else(Q::zero);
    best / factorial(k)
}

/// Coordinates onto which the affine hull of `points` (dimension `d`) projects injectively.
fn injective_coords(points: &[Vec<Q>], d: usize) -> Option<Vec<usize>> {
    let v = edge_vectors(points);
    // pick d independent difference vectors greedily, then a coordinate subset
    let mut basis: Vec<Vec<Q>> = Vec::new();
    for w in v {
        let mut cand = basis.clone();
        cand.push(w.clone());
        if rank(&cand) == cand.len() {
            basis = cand;
        }
        if basis.len() == d {
            break;
        }
    }
    if basis.len() < d {
        return None;
    }
    subsets(points[0].len(), d).into_iter().find(|s| !projected_det(&basis, s).is_zero())
}

fn rank(vectors: &[Vec<Q>]) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let mut m: Vec<Vec<Q>> = vectors.to_vec();
    let cols = m[0].len();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let f = &m[i][c] / &m[r][c];
                for k in c..cols {
                    let t = &f * &m[r][k];
                    m[i][k] -= t;
                }
            }
        }
        r += 1;
        if r == m.len() {
            break;
        }
    }
    r
}

/// A simplicial refinement of a polyhedral complex.
#[derive(Clone, Debug)]
pub struct Triangulation {
    pub complex: CellComplex,
    /// Chain map from coarse chains to fine chains.
    pub refine: CellMap,
    /// Mass-weighted left inverse of `refine`; not a chain map.
    pub coarsen: CellMap,
    /// Fine vertex standing for each coarse cell: the vertex itself or an added barycenter.
    pub center: Vec<Option<usize>>,
}

struct FineBuilder {
    cells: Vec<Cell>,
    index: HashMap<Vec<usize>, usize>,
    // each fine vertex is the average of these coarse vertices
    rep: HashMap<usize, Vec<usize>>,
}

impl FineBuilder {
    fn coords(&self, chart: &HashMap<usize, Vec<Q>>, fine_vertex: usize) -> Result<Vec<Q>> {
        let mut pts = Vec::new();
        for v in &self.rep[&fine_vertex] {
            pts.push(chart.get(v).ok_or_else(|| {
                Error::Malformed(format!("chart lacks coordinates for vertex {v}"))
            })?);
        }
        Ok(mean(&pts))
    }

    fn get_or_create(
        &mut self,
        key: &[usize],
        chart: Option<&HashMap<usize, Vec<Q>>>,
        scale: &Q,
    ) -> Result<usize> {
        if let Some(&id) = self.index.get(key) {
            return Ok(id);
        }
        if key.len() == 1 {
            return Err(Error::Malformed(format!("unknown fine vertex {}", key[0])));
        }
        let mut boundary = Vec::with_capacity(key.len());
        for i in 0..key.len() {
            let mut face = key.to_vec();
            face.remove(i);
            let f = self.get_or_create(&face, chart, scale)?;
            boundary.push((f, if i % 2 == 0 { 1 } else { -1 }));
        }
        let (weight, geometry) = match chart {
            Some(ch) => {
                let pts = key.iter().map(|&v| self.coords(ch, v)).collect::<Result<Vec<_>>>()?;
                let w = projected_simplex_volume(&pts);
                if w.is_zero() {
                    return Err(Error::Malformed("degenerate simplex in refinement".into()));
                }
                (w, Some(key.iter().copied().zip(pts).collect::<Geometry>()))
            }
            None => (Q::one(), None),
        };
        let id = self.cells.len();
        let mut cell = Cell::new(key.len() - 1, boundary).with_weight(weight).with_scale(scale.clone());
        cell.geometry = geometry;
        self.cells.push(cell);
        self.index.insert(key.to_vec(), id);
        Ok(id)
    }

    fn vertices_of(&self, id: usize) -> Vec<usize> {
        // fine cells are simplices keyed by their sorted vertex list
        let mut stack = vec![id];
        let mut out = Vec::new();
        while let Some(c) = stack.pop() {
            if self.cells[c].dim == 0 {
                if !out.contains(&c) {
                    out.push(c);
                }
            } else {
                stack.extend(self.cells[c].boundary.iter().map(|&(f, _)| f));
            }
        }
        out.sort_unstable();
        out
    }
}

fn is_simplex_cell(cx: &CellComplex, id: usize, memo: &mut HashMap<usize, bool>) -> bool {
    if let Some(&b) = memo.get(&id) {
        return b;
    }
    let c = cx.cell(id);
    let ok = c.dim == 0
        || (c.boundary.len() == c.dim + 1
            && cx.vertices_of(id).len() == c.dim + 1
            && c.boundary.iter().all(|&(f, _)| is_simplex_cell(cx, f, memo)));
    memo.insert(id, ok);
    ok
}

/// Stellar subdivision: every cell that is not already a simplex is coned
/// from the barycenter of its vertices, in order of increasing dimension.
/// Non-simplex cells must carry geometry.
pub fn triangulate(cx: &CellComplex) -> Result<Triangulation> {
    let mut fb = FineBuilder { cells: Vec::new(), index: HashMap::new(), rep: HashMap::new() };
    let mut images: Vec<Chain> = vec![Chain::zero(0); cx.len()];
    let mut center = vec![None; cx.len()];
    let mut memo = HashMap::new();
    let mut coarse_of_piece: Vec<(usize, usize, i8)> = Vec::new(); // (fine, coarse, sign)
    let mut fine_of_coarse_vertex: HashMap<usize, usize> = HashMap::new();

    for d in 0..=cx.dim() {
        for &p in cx.cells_of_dim(d) {
            let cell = cx.cell(p);
            if d == 0 {
                let id = fb.cells.len();
                fb.cells.push(Cell::new(0, vec![]).with_scale(cell.scale.clone()));
                fb.index.insert(vec![id], id);
                fb.rep.insert(id, vec![p]);
                fine_of_coarse_vertex.insert(p, id);
                images[p] = Chain::cell(0, id);
                center[p] = Some(id);
                continue;
            }
            let chart: Option<HashMap<usize, Vec<Q>>> =
                cell.geometry.as_ref().map(|g| g.iter().cloned().collect());
            let rb = {
                let mut acc = Chain::zero(d - 1);
                for &(f, s) in &cell.boundary {
                    acc.add_scaled(&images[f], &q(s as i64));
                }
                acc
            };
            if is_simplex_cell(cx, p, &mut memo) {
                let mut key: Vec<usize> = cx.vertices_of(p).iter().map(|v| fine_of_coarse_vertex[v]).collect();
                key.sort_unstable();
                if fb.index.contains_key(&key) {
                    return Err(Error::Malformed(format!("cell {p} shares its vertex set with another cell")));
                }
                let id = fb.get_or_create(&key, chart.as_ref(), &cell.scale)?;
                fb.cells[id].weight = cell.weight.clone();
                fb.cells[id].label = cell.label.clone();
                let own = Chain::from_int_terms(d - 1, fb.cells[id].boundary.iter().map(|&(f, s)| (f, s as i64)));
                let sign: i8 = if own == rb {
                    1
                } else if own == -&rb {
                    -1
                } else {
                    return Err(Error::Malformed(format!("simplex cell {p} has inconsistent boundary")));
                };
                images[p] = Chain::from_int_terms(d, [(id, sign as i64)]);
                coarse_of_piece.push((id, p, sign));
                continue;
            }
            let Some(chart) = chart else {
                return Err(Error::Malformed(format!("cell {p} needs geometry to be triangulated")));
            };
            let b = fb.cells.len();
            fb.cells.push(Cell::new(0, vec![]).with_scale(cell.scale.clone()));
            fb.index.insert(vec![b], b);
            fb.rep.insert(b, cx.vertices_of(p));
            center[p] = Some(b);
            let cone_sign: i64 = if d % 2 == 0 { 1 } else { -1 };
            let mut img = Chain::zero(d);
            let mut pieces = Vec::new();
            for (sigma, eps) in rb.iter() {
                let mut key = fb.vertices_of(sigma);
                key.push(b);
                let id = fb.get_or_create(&key, Some(&chart), &cell.scale)?;
                let s = eps * q(cone_sign);
                pieces.push((id, s.clone()));
                img.add_term(id, s);
            }
            // proportional weights: exact and mass preserving
            let first = fb.cells[pieces[0].0].geometry.as_ref().unwrap();
            let pts: Vec<Vec<Q>> = first.iter().map(|(_, x)| x.clone()).collect();
            let coords = injective_coords(&pts, d)
                .ok_or_else(|| Error::Malformed(format!("cell {p} has degenerate geometry")))?;
            let vols: Vec<Q> = pieces
                .iter()
                .map(|(id, _)| {
                    let pts: Vec<Vec<Q>> =
                        fb.cells[*id].geometry.as_ref().unwrap().iter().map(|(_, x)| x.clone()).collect();
                    projected_det(&edge_vectors(&pts), &coords).abs()
                })
                .collect();
            let total = vols.iter().fold(Q::zero(), |a, v| a + v);
            for ((id, s), v) in pieces.iter().zip(&vols) {
                fb.cells[*id].weight = &cell.weight * v / &total;
                coarse_of_piece.push((*id, p, if s.is_positive() { 1 } else { -1 }));
            }
            images[p] = img;
        }
    }
    let complex = CellComplex::new(fb.cells)?;
    let mut coarse_images: Vec<Chain> =
        (0..complex.len()).map(|i| Chain::zero(complex.cell(i).dim)).collect();
    for (fine, coarse, s) in coarse_of_piece {
        let f = &complex.cell(fine).weight / &cx.cell(coarse).weight * q(s as i64);
        coarse_images[fine] = Chain::from_terms(cx.cell(coarse).dim, [(coarse, f)]);
    }
    for (p, _) in cx.cells().iter().enumerate().filter(|(_, c)| c.dim == 0) {
        let f = fine_of_coarse_vertex[&p];
        coarse_images[f] = Chain::cell(0, p);
    }
    Ok(Triangulation { complex, refine: CellMap::new(images), coarsen: CellMap::new(coarse_images), center })
}

/// Barycentric subdivision of a simplicial complex. Fine simplices are
/// flags of coarse simplices ordered by inclusion.
#[derive(Clone, Debug)]
pub struct Subdivision {
    pub coarse: CellComplex,
    pub complex: CellComplex,
    pub refine: CellMap,
    /// Flag of coarse cells for every fine cell, smallest first.
    pub flags: Vec<Vec<usize>>,
    /// Fine vertex at the barycenter of each coarse cell.
    pub barycenter: Vec<usize>,
    flag_index: HashMap<Vec<usize>, usize>,
    simplex_index: HashMap<Vec<usize>, usize>,
    coarse_vertices: Vec<Vec<usize>>,
}

pub fn barycentric_subdivide(cx: &CellComplex) -> Result<Subdivision> {
    if !cx.is_simplicial() {
        return Err(Error::Domain("barycentric subdivision needs a simplicial complex".into()));
    }
    let coarse_vertices: Vec<Vec<usize>> = (0..cx.len()).map(|i| cx.vertices_of(i)).collect();
    let mut simplex_index = HashMap::new();
    for (i, vs) in coarse_vertices.iter().enumerate() {
        if simplex_index.insert(vs.clone(), i).is_some() {
            return Err(Error::Malformed(format!("two cells share the vertex set of cell {i}")));
        }
    }
    // flags ending at each cell
    let mut ends: Vec<Vec<Vec<usize>>> = vec![Vec::new(); cx.len()];
    for d in 0..=cx.dim() {
        for &s in cx.cells_of_dim(d) {
            let mut out = vec![vec![s]];
            let mut faces: Vec<usize> = cx.closure([s]).into_iter().filter(|&f| f != s).collect();
            faces.sort_unstable();
            for f in faces {
                for fl in &ends[f] {
                    let mut x = fl.clone();
                    x.push(s);
                    out.push(x);
                }
            }
            ends[s] = out;
        }
    }
    let mut all: Vec<Vec<usize>> = ends.into_iter().flatten().collect();
    all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    let mut flag_index = HashMap::new();
    let mut cells = Vec::with_capacity(all.len());
    let two = q(2);
    let mut face_means: HashMap<(usize, usize), Q> = HashMap::new();
    for fl in &all {
        let k = fl.len() - 1;
        let top = cx.cell(*fl.last().unwrap());
        let mut boundary = Vec::new();
        if k > 0 {
            for i in 0..=k {
                let mut f = fl.clone();
                f.remove(i);
                boundary.push((flag_index[&f], if i % 2 == 0 { 1 } else { -1 }));
            }
        }
        let scale = &top.scale / &two;
        // mean k-face of the carrier at half size, so every round of
        // subdivision shrinks k-masses by the same 2^k
        let weight = face_mean(cx, &mut face_means, *fl.last().unwrap(), k) / (0..k).fold(Q::one(), |a, _| a * &two);
        flag_index.insert(fl.clone(), cells.len());
        cells.push(Cell::new(k, boundary).with_weight(weight).with_scale(scale));
    }
    let complex = CellComplex::new(cells)?;
    let barycenter: Vec<usize> = (0..cx.len()).map(|i| flag_index[&vec![i]]).collect();
    let mut images: Vec<Chain> = vec![Chain::zero(0); cx.len()];
    for d in 0..=cx.dim() {
        for &s in cx.cells_of_dim(d) {
            if d == 0 {
                images[s] = Chain::cell(0, barycenter[s]);
                continue;
            }
            let mut rb = Chain::zero(d - 1);
            for &(f, e) in &cx.cell(s).boundary {
                rb.add_scaled(&images[f], &q(e as i64));
            }
            let sign = q(if d % 2 == 0 { 1 } else { -1 });
            let mut img = Chain::zero(d);
            for (t, x) in rb.iter() {
                let mut fl = all[t].clone();
                fl.push(s);
                img.add_term(flag_index[&fl], x * &sign);
            }
            images[s] = img;
        }
    }
    Ok(Subdivision {
        coarse: cx.clone(),
        complex,
        refine: CellMap::new(images),
        flags: all,
        barycenter,
        flag_index,
        simplex_index,
        coarse_vertices,
    })
}

impl Subdivision {
    pub fn flag_cell(&self, flag: &[usize]) -> Option<usize> {
        self.flag_index.get(flag).copied()
    }

    pub fn coarse_simplex(&self, sorted_vertices: &[usize]) -> Option<usize> {
        self.simplex_index.get(sorted_vertices).copied()
    }

    pub fn coarse_vertices(&self, id: usize) -> &[usize] {
        &self.coarse_vertices[id]
    }

    /// Sign of the ordered vertex tuple relative to the orientation of the coarse simplex it spans.
    pub fn orientation_sign(&self, tuple: &[usize]) -> Option<i8> {
        let mut sorted = tuple.to_vec();
        sorted.sort_unstable();
        let id = self.coarse_simplex(&sorted)?;
        if tuple.len() == 1 {
            return Some(1);
        }
        let rest = &tuple[1..];
        let mut rs = rest.to_vec();
        rs.sort_unstable();
        let f = self.coarse_simplex(&rs)?;
        let eps = self.coarse.cell(id).boundary.iter().find(|(g, _)| *g == f)?.1;
        Some(self.orientation_sign(rest)? * eps)
    }
}
