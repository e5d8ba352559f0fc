use std::collections::{HashMap, VecDeque};

use rayon::prelude::*;

use crate::complex::CellComplex;
use crate::error::{Error, Result};

pub const UNREACHABLE: u16 = u16::MAX;

/// All-pairs graph distances on the 1-skeleton of a complex.
#[derive(Clone, Debug)]
pub struct GraphMetric {
    /// Vertex cell ids; point `i` of the metric is cell `points[i]`.
    pub points: Vec<usize>,
    index: HashMap<usize, usize>,
    pub neighbors: Vec<Vec<usize>>,
    dist: Vec<u16>,
}

impl GraphMetric {
    pub fn new(cx: &CellComplex, max_points: usize) -> Result<Self> {
        let points: Vec<usize> = cx.cells_of_dim(0).to_vec();
        let n = points.len();
        if n > max_points {
            return Err(Error::Capacity(format!("{n} vertices exceed the metric cap of {max_points}")));
        }
        let index: HashMap<usize, usize> = points.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let mut neighbors = vec![Vec::new(); n];
        for &e in cx.cells_of_dim(1) {
            let (a, b) = cx.edge_ends(e);
            let (a, b) = (index[&a], index[&b]);
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for nb in neighbors.iter_mut() {
            nb.sort_unstable();
            nb.dedup();
        }
        let rows: Vec<Vec<u16>> = (0..n).into_par_iter().map(|s| bfs(&neighbors, &[s])).collect();
        let dist = rows.concat();
        Ok(GraphMetric { points, index, neighbors, dist })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index_of(&self, cell: usize) -> Option<usize> {
        self.index.get(&cell).copied()
    }

    pub fn d(&self, a: usize, b: usize) -> u16 {
        self.dist[a * self.points.len() + b]
    }

    /// Distance from every point to the set `s`.
    pub fn to_set(&self, s: &[usize]) -> Vec<u16> {
        bfs(&self.neighbors, s)
    }

    pub fn set_distance(&self, a: &[usize], b: &[usize]) -> u16 {
        a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).map(|(x, y)| self.d(x, y)).min().unwrap_or(UNREACHABLE)
    }

    pub fn diameter(&self, s: &[usize]) -> u16 {
        let mut m = 0;
        for (i, &x) in s.iter().enumerate() {
            for &y in &s[i + 1..] {
                m = m.max(self.d(x, y));
            }
        }
        m
    }

    /// Connected components of the graph with the points of `removed` deleted;
    /// removed points get `usize::MAX`.
    pub fn components_without(&self, removed: &[usize]) -> Vec<usize> {
        let n = self.len();
        let mut comp = vec![usize::MAX; n];
        let mut gone = vec![false; n];
        for &r in removed {
            gone[r] = true;
        }
        let mut next = 0;
        for s in 0..n {
            if gone[s] || comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &v in &self.neighbors[u] {
                    if !gone[v] && comp[v] == usize::MAX {
                        comp[v] = next;
                        queue.push_back(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }
}

fn bfs(neighbors: &[Vec<usize>], sources: &[usize]) -> Vec<u16> {
    let mut d = vec![UNREACHABLE; neighbors.len()];
    let mut queue = VecDeque::new();
    for &s in sources {
        d[s] = 0;
        queue.push_back(s);
    }
    while let Some(u) = queue.pop_front() {
        for &v in &neighbors[u] {
            if d[v] == UNREACHABLE {
                d[v] = d[u] + 1;
                queue.push_back(v);
            }
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::build_grid;

    #[test]
    fn grid_metric_is_l1() {
        let g = build_grid(3, 2, 1000).unwrap();
        let m = GraphMetric::new(&g.complex, 100).unwrap();
        for (i, &a) in m.points.iter().enumerate() {
            for (j, &b) in m.points.iter().enumerate() {
                let (pa, pb) = (g.vertex_coords(a), g.vertex_coords(b));
                let l1: usize = pa.iter().zip(&pb).map(|(x, y)| x.abs_diff(*y)).sum();
                assert_eq!(m.d(i, j) as usize, l1);
            }
        }
        assert!(GraphMetric::new(&g.complex, 3).is_err());
    }

    #[test]
    fn removing_a_cut_splits_components() {
        let g = build_grid(2, 2, 1000).unwrap();
        let m = GraphMetric::new(&g.complex, 100).unwrap();
        let cut: Vec<usize> = (0..3).map(|y| m.index_of(g.vertex_id(&[1, y]).unwrap()).unwrap()).collect();
        let comp = m.components_without(&cut);
        let a = comp[m.index_of(g.vertex_id(&[0, 0]).unwrap()).unwrap()];
        let b = comp[m.index_of(g.vertex_id(&[2, 2]).unwrap()).unwrap()];
        assert_ne!(a, b);
    }
}
