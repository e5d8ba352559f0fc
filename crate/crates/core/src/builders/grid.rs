use std::collections::HashMap;

use crate::complex::{Cell, CellComplex};
use crate::error::{Error, Result};
use crate::rational::q;

/// Cubical grid `[0, L]^dims` with unit cubes.
#[derive(Clone, Debug)]
pub struct Grid {
    pub side: usize,
    pub dims: usize,
    pub complex: CellComplex,
    index: HashMap<(Vec<usize>, u32), usize>,
}

impl Grid {
    /// Cell with the given lower corner spanning the directions in `mask`.
    pub fn cell_id(&self, base: &[usize], mask: u32) -> Option<usize> {
        self.index.get(&(base.to_vec(), mask)).copied()
    }

    pub fn vertex_id(&self, p: &[usize]) -> Option<usize> {
        self.cell_id(p, 0)
    }

    pub fn vertex_coords(&self, id: usize) -> Vec<usize> {
        self.complex.cell(id).geometry.as_ref().expect("grid vertex geometry")[0]
            .1
            .iter()
            .map(|x| x.to_integer().try_into().unwrap())
            .collect()
    }

    /// Boundary loop of the axis square `[0,l]^2` in the first two coordinates.
    pub fn square_loop(&self, l: usize) -> Result<crate::Chain> {
        if self.dims < 2 || l == 0 || l > self.side {
            return Err(Error::Domain(format!("no {l}x{l} square in this grid")));
        }
        let mut c = crate::Chain::zero(2);
        let mut base = vec![0; self.dims];
        for i in 0..l {
            for j in 0..l {
                base[0] = i;
                base[1] = j;
                c.add_term(self.cell_id(&base, 0b11).unwrap(), q(1));
            }
        }
        self.complex.boundary(&c)
    }
}

pub fn build_grid(side: usize, dims: usize, max_cells: usize) -> Result<Grid> {
    if side == 0 || dims == 0 {
        return Err(Error::Domain("grid needs positive side and dimension".into()));
    }
    let total = (2 * side + 1).checked_pow(dims as u32).unwrap_or(usize::MAX);
    if total > max_cells {
        return Err(Error::Capacity(format!("grid has {total} cells, cap is {max_cells}")));
    }
    let mut cells = Vec::with_capacity(total);
    let mut index = HashMap::with_capacity(total);
    let points: Vec<Vec<usize>> = {
        let mut pts = vec![vec![]];
        for _ in 0..dims {
            pts = pts.into_iter().flat_map(|p| (0..=side).map(move |x| [p.clone(), vec![x]].concat())).collect();
        }
        pts
    };
    for d in 0..=dims {
        for mask in 0u32..(1 << dims) {
            if mask.count_ones() as usize != d {
                continue;
            }
            let dirs: Vec<usize> = (0..dims).filter(|i| mask & (1 << i) != 0).collect();
            for p in &points {
                if dirs.iter().any(|&i| p[i] == side) {
                    continue;
                }
                let mut boundary = Vec::with_capacity(2 * d);
                for (j, &i) in dirs.iter().enumerate() {
                    let sub = mask & !(1 << i);
                    let sgn: i8 = if j % 2 == 0 { 1 } else { -1 };
                    let mut hi = p.clone();
                    hi[i] += 1;
                    boundary.push((index[&(hi, sub)], sgn));
                    boundary.push((index[&(p.clone(), sub)], -sgn));
                }
                let mut corners = vec![p.clone()];
                for &i in &dirs {
                    let more: Vec<Vec<usize>> = corners
                        .iter()
                        .map(|c| {
                            let mut c = c.clone();
                            c[i] += 1;
                            c
                        })
                        .collect();
                    corners.extend(more);
                }
                let geometry = corners
                    .iter()
                    .map(|c| (index.get(&(c.clone(), 0)).copied().unwrap_or(cells.len()), c.iter().map(|&x| q(x as i64)).collect()))
                    .collect();
                let label = format!("{}{:?}", "c", p);
                index.insert((p.clone(), mask), cells.len());
                cells.push(Cell::new(d, boundary).with_geometry(geometry).with_label(format!("{label}/{mask:b}")));
            }
        }
    }
    Ok(Grid { side, dims, complex: CellComplex::new(cells)?, index })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_closed_form() {
        let g = build_grid(2, 2, 1_000).unwrap();
        assert_eq!(g.complex.count_by_dim(), vec![9, 12, 4]);
        g.complex.check_boundary_squared().unwrap();
        let g3 = build_grid(2, 3, 1_000).unwrap();
        assert_eq!(g3.complex.count_by_dim(), vec![27, 54, 36, 8]);
        g3.complex.check_boundary_squared().unwrap();
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(build_grid(10, 3, 100), Err(Error::Capacity(_))));
    }

    #[test]
    fn square_loop_mass() {
        let g = build_grid(4, 2, 1_000).unwrap();
        let c = g.square_loop(3).unwrap();
        assert_eq!(g.complex.mass(&c).unwrap(), q(12));
        assert!(g.complex.boundary(&c).unwrap().is_zero());
    }
}
