//! The barycentric subdivision of a simplex with a copy of the simplex
//! inserted in the middle: cells are products `face x flag` where the face
//! lies in the smallest member of the flag.

use std::collections::HashMap;

use crate::chain::Chain;
use crate::complex::{Cell, CellComplex};
use crate::error::{Error, Result};
use crate::rational::{q, Q};
use crate::refine::CellMap;

type Face = Vec<usize>;

#[derive(Debug)]
pub struct ExplodedSimplex {
    pub d: usize,
    pub complex: CellComplex,
    /// `(face, flag)` of every cell, flags listed from smallest member up.
    pub cells: Vec<(Face, Vec<Face>)>,
    /// The simplex and all its faces.
    pub simplex: CellComplex,
    pub faces: Vec<Face>,
    /// Flags of faces, i.e. the barycentric subdivision.
    pub subdivision: CellComplex,
    pub flags: Vec<Vec<Face>>,
    /// Forgets the flag; nonzero only on cells with a single-member flag.
    pub rho1: CellMap,
    /// Forgets the face; nonzero only on cells whose face is a vertex.
    pub rho2: CellMap,
    /// Cells `(face, [whole simplex])`: the middle copy.
    pub middle: Vec<usize>,
}

fn subsets(n: usize) -> Vec<Face> {
    let mut out: Vec<Face> = (1u32..(1 << n)).map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect()).collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    out
}

fn flags_from(base: &Face, all: &[Face]) -> Vec<Vec<Face>> {
    let mut out = vec![vec![base.clone()]];
    for f in all {
        if f.len() > base.len() && base.iter().all(|x| f.contains(x)) {
            for mut tail in flags_from(f, all) {
                tail.insert(0, base.clone());
                out.push(tail);
            }
        }
    }
    out
}

fn fact(k: usize) -> Q {
    (1..=k).fold(q(1), |a, i| a * q(i as i64))
}

fn simplex_boundary(s: &[Face], index: &HashMap<Vec<Face>, usize>) -> Vec<(usize, i8)> {
    if s.len() < 2 {
        return Vec::new();
    }
    (0..s.len())
        .map(|i| {
            let mut f = s.to_vec();
            f.remove(i);
            (index[&f], if i % 2 == 0 { 1 } else { -1 })
        })
        .collect()
}

pub fn exploded_simplex(d: usize) -> Result<ExplodedSimplex> {
    if !(1..=4).contains(&d) {
        return Err(Error::Domain(format!("exploded simplex needs 1 <= d <= 4, got {d}")));
    }
    let faces = subsets(d + 1);
    let face_index: HashMap<Face, usize> = faces.iter().cloned().enumerate().map(|(i, f)| (f, i)).collect();
    let simplex = CellComplex::new(
        faces
            .iter()
            .map(|f| {
                let b = if f.len() < 2 {
                    Vec::new()
                } else {
                    (0..f.len())
                        .map(|i| {
                            let mut g = f.clone();
                            g.remove(i);
                            (face_index[&g], if i % 2 == 0 { 1 } else { -1 })
                        })
                        .collect()
                };
                Cell::new(f.len() - 1, b).with_weight(fact(f.len() - 1).recip())
            })
            .collect(),
    )?;

    let mut flags: Vec<Vec<Face>> = faces.iter().flat_map(|f| flags_from(f, &faces)).collect();
    flags.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    let flag_index: HashMap<Vec<Face>, usize> = flags.iter().cloned().enumerate().map(|(i, f)| (f, i)).collect();
    let subdivision = CellComplex::new(
        flags
            .iter()
            .map(|fl| Cell::new(fl.len() - 1, simplex_boundary(fl, &flag_index)).with_weight(fact(fl.len() - 1).recip()))
            .collect(),
    )?;

    let mut cells: Vec<(Face, Vec<Face>)> = Vec::new();
    for fl in &flags {
        for f in &faces {
            if f.iter().all(|x| fl[0].contains(x)) {
                cells.push((f.clone(), fl.clone()));
            }
        }
    }
    cells.sort_by(|a, b| (a.0.len() + a.1.len()).cmp(&(b.0.len() + b.1.len())).then(a.cmp(b)));
    let index: HashMap<(Face, Vec<Face>), usize> = cells.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
    let mut complex_cells = Vec::with_capacity(cells.len());
    for (f, fl) in &cells {
        let (a, b) = (f.len() - 1, fl.len() - 1);
        let mut bd = Vec::new();
        if a > 0 {
            for i in 0..f.len() {
                let mut g = f.clone();
                g.remove(i);
                bd.push((index[&(g, fl.clone())], if i % 2 == 0 { 1 } else { -1 }));
            }
        }
        if b > 0 {
            let sign = if a % 2 == 0 { 1 } else { -1 };
            for i in 0..fl.len() {
                let mut g = fl.clone();
                g.remove(i);
                bd.push((index[&(f.clone(), g)], sign * if i % 2 == 0 { 1 } else { -1 }));
            }
        }
        complex_cells.push(Cell::new(a + b, bd).with_weight(fact(a).recip() * fact(b).recip()));
    }
    let complex = CellComplex::new(complex_cells)?;

    let rho1 = CellMap::new(
        cells
            .iter()
            .map(|(f, fl)| {
                let dim = f.len() - 1 + fl.len() - 1;
                if fl.len() == 1 {
                    Chain::cell(dim, face_index[f])
                } else {
                    Chain::zero(dim)
                }
            })
            .collect(),
    );
    let rho2 = CellMap::new(
        cells
            .iter()
            .map(|(f, fl)| {
                let dim = f.len() - 1 + fl.len() - 1;
                if f.len() == 1 {
                    Chain::cell(dim, flag_index[fl])
                } else {
                    Chain::zero(dim)
                }
            })
            .collect(),
    );
    let whole: Face = (0..=d).collect();
    let middle = (0..cells.len()).filter(|&i| cells[i].1 == vec![whole.clone()]).collect();
    Ok(ExplodedSimplex { d, complex, cells, simplex, faces, subdivision, flags, rho1, rho2, middle })
}
