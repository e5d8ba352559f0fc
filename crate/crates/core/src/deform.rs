//! Deformation of chains on a barycentric subdivision onto the coarse skeleton.

use std::collections::HashMap;

use num_traits::Zero;

use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::rational::{q, Q};
use crate::refine::Subdivision;

#[derive(Clone, Debug)]
pub struct Deformation {
    /// Image in the coarse complex.
    pub image: Chain,
    /// The coarse image pushed back into the subdivision.
    pub image_fine: Chain,
    /// Chain homotopy term: its boundary is `input - image_fine - H(boundary input)`.
    pub homotopy: Chain,
    pub mass_ratio_p: Q,
    pub mass_ratio_q: Q,
}

/// Computes the last-vertex simplicial approximation `P` and the carrier
/// homotopy `H` with `dH + Hd = id - Sd P` on a barycentric subdivision.
pub struct Deformer<'a> {
    sd: &'a Subdivision,
    memo: HashMap<usize, Chain>,
}

impl<'a> Deformer<'a> {
    pub fn new(sd: &'a Subdivision) -> Self {
        Deformer { sd, memo: HashMap::new() }
    }

    fn last_vertex(&self, coarse: usize) -> usize {
        *self.sd.coarse_vertices(coarse).last().unwrap()
    }

    /// Image of one fine simplex under the vertex map.
    pub fn project_cell(&self, fine: usize) -> Chain {
        let flag = &self.sd.flags[fine];
        let k = flag.len() - 1;
        let tuple: Vec<usize> = flag.iter().map(|&s| self.last_vertex(s)).collect();
        let mut sorted = tuple.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != tuple.len() {
            return Chain::zero(k);
        }
        let id = self.sd.coarse_simplex(&sorted).expect("vertex image spans a face of the carrier");
        let s = self.sd.orientation_sign(&tuple).expect("orientation");
        Chain::from_int_terms(k, [(id, s as i64)])
    }

    pub fn project(&self, c: &Chain) -> Chain {
        let mut out = Chain::zero(c.dim());
        for (id, x) in c.iter() {
            out.add_scaled(&self.project_cell(id), x);
        }
        out
    }

    pub fn homotopy_cell(&mut self, fine: usize) -> Chain {
        if let Some(c) = self.memo.get(&fine) {
            return c.clone();
        }
        let sd = self.sd;
        let flag = sd.flags[fine].clone();
        let k = flag.len() - 1;
        let top = *flag.last().unwrap();
        let s = Chain::cell(k, fine);
        let back = sd.refine.apply(&self.project_cell(fine)).expect("refinement");
        let mut z = &s - &back;
        if k > 0 {
            let mut qb = Chain::zero(k);
            for &(f, e) in &sd.complex.cell(fine).boundary {
                let h = self.homotopy_cell(f);
                qb.add_scaled(&h, &q(e as i64));
            }
            z = &z - &qb;
        }
        // cone the part of z away from the carrier's barycenter
        let sign = q(if (k + 1).is_multiple_of(2) { 1 } else { -1 });
        let mut out = Chain::zero(k + 1);
        for (t, x) in z.iter() {
            let fl = &sd.flags[t];
            if *fl.last().unwrap() == top {
                continue;
            }
            let mut ext = fl.clone();
            ext.push(top);
            let id = sd.flag_cell(&ext).expect("cone flag exists");
            out.add_term(id, x * &sign);
        }
        self.memo.insert(fine, out.clone());
        out
    }

    pub fn homotopy(&mut self, c: &Chain) -> Chain {
        let mut out = Chain::zero(c.dim() + 1);
        for (id, x) in c.iter() {
            let h = self.homotopy_cell(id);
            out.add_scaled(&h, x);
        }
        out
    }
}

pub fn ff_deform(sd: &Subdivision, a: &Chain) -> Result<Deformation> {
    sd.complex
        .check_chain(a)
        .map_err(|e| Error::CarrierMismatch(format!("chain is not hosted on this subdivision: {e}")))?;
    let mut d = Deformer::new(sd);
    let image = d.project(a);
    let image_fine = sd.refine.apply(&image)?;
    let homotopy = d.homotopy(a);
    let m = sd.complex.mass(a)?;
    let (mass_ratio_p, mass_ratio_q) = if m.is_zero() {
        (Q::zero(), Q::zero())
    } else {
        let hq = if homotopy.is_zero() { Q::zero() } else { sd.complex.mass(&homotopy)? };
        (sd.coarse.mass(&image)? / &m, hq / &m)
    };
    Ok(Deformation { image, image_fine, homotopy, mass_ratio_p, mass_ratio_q })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{Cell, CellComplex};
    use crate::refine::barycentric_subdivide;

    fn triangle() -> CellComplex {
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
    fn subdivided_cycle_deforms_to_coarse_cycle() {
        let cx = triangle();
        let sd = barycentric_subdivide(&cx).unwrap();
        let a = sd.refine.apply(&cx.cell_boundary(6)).unwrap();
        let d = ff_deform(&sd, &a).unwrap();
        assert_eq!(d.image, cx.cell_boundary(6));
        let bq = sd.complex.boundary(&d.homotopy).unwrap();
        assert_eq!(bq, &a - &d.image_fine);
        assert!(d.mass_ratio_p <= q(1));
    }

    #[test]
    fn homotopy_identity_on_every_cell() {
        let cx = triangle();
        let sd = barycentric_subdivide(&cx).unwrap();
        let mut d = Deformer::new(&sd);
        for id in 0..sd.complex.len() {
            let s = Chain::cell(sd.complex.cell(id).dim, id);
            let h = d.homotopy(&s);
            let dh = sd.complex.boundary(&h).unwrap();
            let hd = if s.dim() == 0 { Chain::zero(s.dim()) } else { d.homotopy(&sd.complex.boundary(&s).unwrap()) };
            let lhs = &dh + &hd;
            let rhs = &s - &sd.refine.apply(&d.project(&s)).unwrap();
            assert_eq!(lhs, rhs, "cell {id}");
        }
    }

    #[test]
    fn foreign_chain_rejected() {
        let sd = barycentric_subdivide(&triangle()).unwrap();
        assert!(matches!(ff_deform(&sd, &Chain::cell(1, 10_000)), Err(Error::CarrierMismatch(_))));
    }
}
