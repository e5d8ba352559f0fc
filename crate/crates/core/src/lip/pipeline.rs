//! Fillings in the horosphere obtained by pushing an ambient filling through
//! the nerve of the relative cover and back.
//!
//! Each ambient vertex goes to the nerve vertex of its largest partition
//! function and then to the chosen horosphere point of that element.  Higher
//! ambient cells are mapped by filling the image of their boundary with
//! [`ConeFiller`].  A homotopy between the identity of the horosphere and the
//! round trip closes the gap, so the result bounds the input exactly.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;

use super::cover::{an_cover_product, ls_cover, LsCover};
use super::metric::GraphMetric;
use super::nerve::{map_h0, nerve, Nerve};
use crate::builders::HorosphereComplex;
use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::filling::{ConeFiller, FillMethod, FillStatus, FillingResult};
use crate::rational::{format_q, q, Q};

pub struct Pipeline<'a> {
    pub z: &'a HorosphereComplex,
    pub metric: GraphMetric,
    pub cover: LsCover,
    pub nerve: Nerve,
    pub h0: Vec<usize>,
    /// Ambient vertex index to horosphere vertex cell.
    phi: Vec<usize>,
    filler: ConeFiller<'a>,
    ambient: Mutex<HashMap<usize, Chain>>,
    homotopy: Mutex<HashMap<usize, Chain>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trace {
    pub pushed: String,
    pub homotopy: String,
    pub output: String,
}

impl<'a> Pipeline<'a> {
    pub fn new(z: &'a HorosphereComplex, eps: &Q, max_points: usize) -> Result<Self> {
        if !z.is_vertex_aligned() {
            return Err(Error::Domain("the pipeline needs a horosphere through ambient vertices".into()));
        }
        let host = &*z.host;
        let metric = GraphMetric::new(&host.complex, max_points)?;
        let zs: Vec<usize> = z
            .complex
            .cells_of_dim(0)
            .iter()
            .map(|&v| metric.index_of(z.host_vertex(v).unwrap()).unwrap())
            .collect();
        let cover = ls_cover(&metric, &zs, eps, |s| an_cover_product(host, &metric, s))?;
        let nv = nerve(&cover)?;
        let h0 = map_h0(&cover);
        let mut phi = Vec::with_capacity(metric.len());
        for x in 0..metric.len() {
            let k = cover.at_point[x]
                .iter()
                .copied()
                .max_by(|&a, &b| cover.tau(a, x).cmp(&cover.tau(b, x)).then(b.cmp(&a)))
                .ok_or_else(|| Error::Domain(format!("ambient point {x} lies in no support")))?;
            let zv = z
                .cell_of_carrier(metric.points[h0[k]])
                .ok_or_else(|| Error::Numerical("chosen point is not a horosphere vertex".into()))?;
            phi.push(zv);
        }
        Ok(Pipeline {
            z,
            metric,
            cover,
            nerve: nv,
            h0,
            phi,
            filler: ConeFiller::new(z),
            ambient: Mutex::new(HashMap::new()),
            homotopy: Mutex::new(HashMap::new()),
        })
    }

    /// Horosphere vertex assigned to an ambient vertex cell.
    pub fn vertex_image(&self, x: usize) -> usize {
        self.phi[self.metric.index_of(x).unwrap()]
    }

    fn fill(&self, sigma: &Chain) -> Result<Chain> {
        Ok(self.filler.fill(sigma)?.filling)
    }

    /// Image of an ambient cell: a horosphere chain whose boundary is the
    /// image of the cell's boundary.
    fn push_cell(&self, c: usize) -> Result<Chain> {
        if let Some(v) = self.ambient.lock().unwrap().get(&c) {
            return Ok(v.clone());
        }
        let host = &self.z.host.complex;
        let out = if host.cell(c).dim == 0 {
            Chain::cell(0, self.vertex_image(c))
        } else {
            let b = self.push(&host.cell_boundary(c))?;
            self.fill(&b)?
        };
        self.ambient.lock().unwrap().insert(c, out.clone());
        Ok(out)
    }

    pub fn push(&self, c: &Chain) -> Result<Chain> {
        let dim = c.dim();
        let mut out = Chain::zero(dim);
        for (id, x) in c.iter() {
            out.add_scaled(&self.push_cell(id)?, x);
        }
        Ok(out)
    }

    /// `H(c)` with `dH(c) = c - push(include(c)) - H(dc)`.
    fn homotopy_cell(&self, c: usize) -> Result<Chain> {
        if let Some(v) = self.homotopy.lock().unwrap().get(&c) {
            return Ok(v.clone());
        }
        let cx = &self.z.complex;
        let dim = cx.cell(c).dim;
        let mut sigma = Chain::cell(dim, c);
        sigma.add_scaled(&self.push(&self.z.include_cell(c)?)?, &q(-1));
        for &(g, s) in &cx.cell(c).boundary {
            sigma.add_scaled(&self.homotopy_cell(g)?, &q(-(s as i64)));
        }
        let out = self.fill(&sigma)?;
        self.homotopy.lock().unwrap().insert(c, out.clone());
        Ok(out)
    }

    pub fn homotopy(&self, c: &Chain) -> Result<Chain> {
        let mut out = Chain::zero(c.dim() + 1);
        for (id, x) in c.iter() {
            out.add_scaled(&self.homotopy_cell(id)?, x);
        }
        Ok(out)
    }

    /// Fills the horosphere cycle `alpha` given an ambient chain `beta` with
    /// boundary `alpha`.
    pub fn undistorted_fill(&self, alpha: &Chain, beta: &Chain) -> Result<(FillingResult, Trace)> {
        let start = Instant::now();
        let zc = &self.z.complex;
        let xc = &self.z.host.complex;
        let n = self.z.host.n();
        if beta.dim() != alpha.dim() + 1 {
            return Err(Error::Domain("beta must be one dimension above alpha".into()));
        }
        if beta.dim() + 1 > n {
            return Err(Error::Domain(format!("fillings of dimension {} need more than {n} factors", beta.dim())));
        }
        zc.check_chain(alpha)?;
        xc.check_chain(beta)?;
        if !zc.is_cycle(alpha)? {
            return Err(Error::Domain("alpha is not a cycle".into()));
        }
        if xc.boundary(beta)? != self.z.include(alpha)? {
            return Err(Error::Domain("beta does not bound alpha".into()));
        }
        let pushed = self.push(beta)?;
        let homotopy = self.homotopy(alpha)?;
        let out = &pushed + &homotopy;
        if zc.boundary(&out)? != *alpha {
            return Err(Error::Numerical("assembled filling does not bound the cycle".into()));
        }
        let trace = Trace {
            pushed: format_q(&zc.mass(&pushed)?),
            homotopy: format_q(&zc.mass(&homotopy)?),
            output: format_q(&zc.mass(&out)?),
        };
        let mass = zc.mass(&out)?;
        Ok((
            FillingResult {
                filling: out,
                method: FillMethod::Pipeline,
                mass,
                status: FillStatus::Feasible,
                duality_gap: None,
                runtime_ms: start.elapsed().as_millis(),
                note: None,
            },
            trace,
        ))
    }

    /// A shortest edge path between two ambient vertex cells, as a 1-chain
    /// with boundary `b - a`.
    pub fn geodesic(&self, a: usize, b: usize) -> Result<Chain> {
        let xc = &self.z.host.complex;
        let m = &self.metric;
        let (ia, ib) = (
            m.index_of(a).ok_or_else(|| Error::Domain(format!("{a} is not a vertex")))?,
            m.index_of(b).ok_or_else(|| Error::Domain(format!("{b} is not a vertex")))?,
        );
        let edges: HashMap<(usize, usize), usize> = xc
            .cells_of_dim(1)
            .iter()
            .map(|&e| {
                let (t, h) = xc.edge_ends(e);
                ((t.min(h), t.max(h)), e)
            })
            .collect();
        let mut out = Chain::zero(1);
        let mut cur = ia;
        while cur != ib {
            let next = *m.neighbors[cur].iter().find(|&&v| m.d(v, ib) + 1 == m.d(cur, ib)).unwrap();
            let (pa, pb) = (m.points[cur], m.points[next]);
            let e = edges[&(pa.min(pb), pa.max(pb))];
            let (t, _) = xc.edge_ends(e);
            out.add_term(e, q(if t == pa { 1 } else { -1 }));
            cur = next;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{build_horosphere, TreeProductSpace, TruncatedTree};
    use std::sync::Arc;

    fn z(n: usize, depth: usize, c0: i64) -> HorosphereComplex {
        let t = TruncatedTree::new(2, depth).unwrap();
        let sp = Arc::new(TreeProductSpace::new(vec![t; n], vec![q(1); n], q(c0), 10_000_000).unwrap());
        build_horosphere(sp, q(0), &Default::default()).unwrap()
    }

    #[test]
    fn vertex_pairs_in_two_factors() {
        let z = z(2, 4, 4);
        let p = Pipeline::new(&z, &q(1), 5000).unwrap();
        let vs = z.complex.cells_of_dim(0);
        for (i, j) in [(0, vs.len() - 1), (1, vs.len() / 2), (3, 4)] {
            let (a, b) = (vs[i], vs[j]);
            let alpha = Chain::from_int_terms(0, [(b, 1), (a, -1)]);
            let beta = p.geodesic(z.host_vertex(a).unwrap(), z.host_vertex(b).unwrap()).unwrap();
            let (r, _) = p.undistorted_fill(&alpha, &beta).unwrap();
            assert_eq!(z.complex.boundary(&r.filling).unwrap(), alpha);
        }
        let zero = Chain::zero(0);
        let (r, _) = p.undistorted_fill(&zero, &Chain::zero(1)).unwrap();
        assert!(r.filling.is_zero());
    }

    #[test]
    fn rejects_wrong_beta() {
        let z = z(2, 3, 3);
        let p = Pipeline::new(&z, &q(1), 5000).unwrap();
        let vs = z.complex.cells_of_dim(0);
        let alpha = Chain::from_int_terms(0, [(vs[1], 1), (vs[0], -1)]);
        assert!(matches!(p.undistorted_fill(&alpha, &Chain::zero(1)), Err(Error::Domain(_))));
    }
}
