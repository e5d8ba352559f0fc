//! Chambers at infinity, downward links and vertical geodesics in tree products.

use num_traits::Zero;
use serde::Serialize;

use crate::builders::{FactorCell, TreeProductSpace, TruncatedTree};
use crate::error::{Error, Result};
use crate::rational::Q;

/// An end of a truncated tree: the top end, or a leaf standing for a lower end.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum End {
    Top,
    Leaf(usize),
}

/// A chamber at infinity: one end per factor.
pub type Chamber = Vec<End>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Direction {
    Up,
    Down,
}

/// The chamber all of whose entries are the top end.
pub fn top_chamber(n: usize) -> Chamber {
    vec![End::Top; n]
}

pub fn is_opposite(c: &[End], d: &[End]) -> bool {
    c.len() == d.len() && c.iter().zip(d).all(|(a, b)| a != b)
}

/// Retraction onto the flat asymptotic to the top chamber: the levels.
pub fn retraction_rho(space: &TreeProductSpace, vertex: usize) -> Vec<usize> {
    space.levels(&space.vertex_coords(vertex))
}

fn lower_vertex(p: FactorCell) -> usize {
    match p {
        FactorCell::Vertex(v) | FactorCell::Edge(v) => v,
    }
}

/// Direction in each factor in which the end lies as seen from the position.
pub fn direction(space: &TreeProductSpace, pos: &[FactorCell], c: &[End]) -> Result<Vec<Direction>> {
    if pos.len() != space.n() || c.len() != space.n() {
        return Err(Error::Domain("position and chamber must have one entry per factor".into()));
    }
    let mut out = Vec::with_capacity(c.len());
    for (i, (p, e)) in pos.iter().zip(c).enumerate() {
        let t = &space.factors[i];
        let v = lower_vertex(*p);
        out.push(match *e {
            End::Top => Direction::Up,
            End::Leaf(l) => {
                if !t.is_leaf(l) {
                    return Err(Error::Domain(format!("vertex {l} is not a leaf")));
                }
                if l == v && matches!(p, FactorCell::Vertex(_)) {
                    return Err(Error::Capacity(format!("factor {i}: the end sits at the truncation")));
                }
                if t.is_ancestor_or_self(v, l) {
                    Direction::Down
                } else {
                    Direction::Up
                }
            }
        });
    }
    Ok(out)
}

pub fn is_characteristic(space: &TreeProductSpace, pos: &[FactorCell], c: &[End]) -> bool {
    matches!(direction(space, pos, c), Ok(d) if d.iter().all(|x| *x == Direction::Down))
}

/// Whether the apartment spanned by two opposite chambers contains a position.
pub fn apartment_contains(space: &TreeProductSpace, c: &[End], d: &[End], pos: &[FactorCell]) -> bool {
    pos.iter().enumerate().all(|(i, p)| {
        let t = &space.factors[i];
        let on = |v: usize| -> bool {
            match (c[i], d[i]) {
                (End::Leaf(a), End::Leaf(b)) => t.path(a, b).contains(&v),
                (End::Leaf(a), End::Top) | (End::Top, End::Leaf(a)) => t.is_ancestor_or_self(v, a),
                (End::Top, End::Top) => false,
            }
        };
        match *p {
            FactorCell::Vertex(v) => on(v),
            FactorCell::Edge(ch) => on(ch) && on(t.parent(ch).unwrap()),
        }
    })
}

/// Chambers of the downward link of a vertex: leaves strictly below each entry.
#[derive(Clone, Debug)]
pub struct DownwardLink {
    pub ranges: Vec<std::ops::Range<usize>>,
}

impl DownwardLink {
    pub fn len(&self) -> usize {
        self.ranges.iter().map(|r| r.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, c: &[End]) -> bool {
        c.len() == self.ranges.len()
            && c.iter().zip(&self.ranges).all(|(e, r)| matches!(e, End::Leaf(l) if r.contains(l)))
    }

    pub fn nth(&self, mut k: usize) -> Chamber {
        self.ranges
            .iter()
            .map(|r| {
                let x = r.start + k % r.len();
                k /= r.len();
                End::Leaf(x)
            })
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = Chamber> + '_ {
        (0..self.len()).map(|k| self.nth(k))
    }
}

pub fn downward_link(space: &TreeProductSpace, vertex: usize) -> DownwardLink {
    let coords = space.vertex_coords(vertex);
    DownwardLink {
        ranges: coords
            .iter()
            .zip(&space.factors)
            .map(|(&v, t)| if t.is_leaf(v) { 0..0 } else { t.leaves_below(v) })
            .collect(),
    }
}

#[derive(Clone, Debug)]
pub struct RayEnd {
    pub vertex: usize,
    /// Diagonal steps taken.
    pub steps: usize,
    /// Fraction of a further step needed to reach the level; zero when the ray lands on it.
    pub remainder: Q,
}

/// Descends diagonally from `vertex` toward the chamber until the level is reached.
pub fn ray_to_horosphere(space: &TreeProductSpace, vertex: usize, c: &[End], level: &Q) -> Result<RayEnd> {
    if !downward_link(space, vertex).contains(c) {
        return Err(Error::Domain("chamber is not in the downward link".into()));
    }
    let mut coords = space.vertex_coords(vertex);
    let mut h = space.h(vertex);
    if &h < level {
        return Err(Error::Domain("the vertex lies below the level".into()));
    }
    let step: Q = space.slope.iter().sum();
    let mut steps = 0;
    while &h - &step >= *level {
        for (i, e) in c.iter().enumerate() {
            let t = &space.factors[i];
            let End::Leaf(l) = *e else { unreachable!() };
            if t.is_leaf(coords[i]) {
                return Err(Error::Capacity(format!("factor {i} reached the truncation before the level")));
            }
            coords[i] = t.ancestor_at(l, t.level(coords[i]) + 1);
        }
        h -= &step;
        steps += 1;
    }
    let remainder = (&h - level) / &step;
    Ok(RayEnd { vertex: space.vertex_id(&coords), steps, remainder })
}

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub x: Vec<usize>,
    pub x_prime: Vec<usize>,
    pub d: Chamber,
    pub distance: f64,
    pub checked: usize,
    pub failures: usize,
}

/// Opposite chamber for a whole downward link, seen from the parent vertex.
/// Checks up to `limit` chambers of the link (all of them if it is smaller),
/// sampling evenly otherwise.
pub fn opposite_witness(space: &TreeProductSpace, vertex: usize, limit: usize) -> Result<Witness> {
    let x = space.vertex_coords(vertex);
    let mut xp = Vec::with_capacity(x.len());
    let mut d = Vec::with_capacity(x.len());
    for (i, (&v, t)) in x.iter().zip(&space.factors).enumerate() {
        let p = t.parent(v).ok_or_else(|| Error::Capacity(format!("factor {i}: vertex has no parent")))?;
        if t.is_leaf(v) {
            return Err(Error::Capacity(format!("factor {i}: vertex is a leaf")));
        }
        let sib = t.children(p).find(|&s| s != v).unwrap();
        xp.push(p);
        d.push(End::Leaf(t.first_leaf_below(sib)));
    }
    let link = downward_link(space, vertex);
    let parent_link = downward_link(space, space.vertex_id(&xp));
    let total = link.len();
    let stride = if total <= limit { 1 } else { total / limit };
    let mut checked = 0;
    let mut failures = 0;
    let n = x.len();
    for k in (0..total).step_by(stride).take(limit.max(1)) {
        let c = link.nth(k);
        checked += 1;
        let mut ok = is_opposite(&c, &d);
        for mask in 0u32..1 << n {
            let e: Chamber = (0..n).map(|i| if mask & (1 << i) != 0 { d[i] } else { c[i] }).collect();
            ok &= parent_link.contains(&e);
        }
        if !ok {
            failures += 1;
        }
    }
    Ok(Witness { distance: space.distance_l2(&x, &xp), x, x_prime: xp, d, checked, failures })
}

/// Vertex of the vertical geodesic through `leaf` at the level of `v`.
pub fn project_to_geodesic(t: &TruncatedTree, leaf: usize, v: usize) -> usize {
    t.ancestor_at(leaf, t.level(v))
}

/// Projection of factor `i` onto the vertical geodesic through `leaf`.
pub fn slice_project(space: &TreeProductSpace, i: usize, leaf: usize, coords: &[usize]) -> Vec<usize> {
    let mut out = coords.to_vec();
    out[i] = project_to_geodesic(&space.factors[i], leaf, coords[i]);
    out
}

pub fn h_preserved_by_retraction(space: &TreeProductSpace, vertex: usize) -> bool {
    let l = retraction_rho(space, vertex);
    (space.h_of_levels(&l) - space.h(vertex)).is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn sp(n: usize, depth: usize) -> TreeProductSpace {
        let t = TruncatedTree::new(2, depth).unwrap();
        TreeProductSpace::new(vec![t; n], vec![q(1); n], q(0), 10_000_000).unwrap()
    }

    #[test]
    fn root_link_size() {
        let s = sp(2, 2);
        assert_eq!(downward_link(&s, s.vertex_id(&[0, 0])).len(), 16);
        let leafy = s.vertex_id(&[3, 0]);
        assert!(downward_link(&s, leafy).is_empty());
    }

    #[test]
    fn opposite_examples() {
        assert!(!is_opposite(&[End::Top, End::Leaf(3)], &[End::Top, End::Leaf(4)]));
        assert!(is_opposite(&[End::Top, End::Top], &[End::Leaf(3), End::Leaf(4)]));
    }

    #[test]
    fn directions() {
        let s = sp(2, 2);
        let pos = [FactorCell::Vertex(1), FactorCell::Vertex(2)];
        let d = direction(&s, &pos, &[End::Leaf(3), End::Leaf(3)]).unwrap();
        assert_eq!(d, vec![Direction::Down, Direction::Up]);
        assert!(direction(&s, &[FactorCell::Vertex(3), FactorCell::Vertex(0)], &[End::Leaf(3), End::Top]).is_err());
        assert!(is_characteristic(&s, &pos, &[End::Leaf(4), End::Leaf(6)]));
    }

    #[test]
    fn ray_lands_on_level() {
        let t = TruncatedTree::new(2, 4).unwrap();
        let s = TreeProductSpace::new(vec![t; 2], vec![q(1); 2], q(4), 1_000_000).unwrap();
        let x = s.vertex_id(&[0, 0]);
        let c = downward_link(&s, x).nth(5);
        let r = ray_to_horosphere(&s, x, &c, &q(0)).unwrap();
        assert_eq!(r.steps, 2);
        assert_eq!(r.remainder, q(0));
        assert_eq!(s.h(r.vertex), q(0));
        let r = ray_to_horosphere(&s, x, &c, &q(1)).unwrap();
        assert_eq!(r.remainder, crate::rational::qr(1, 2));
        assert!(matches!(ray_to_horosphere(&s, x, &c, &q(-6)), Err(Error::Capacity(_))));
    }

    #[test]
    fn witness_at_level_one() {
        let s = sp(2, 3);
        let w = opposite_witness(&s, s.vertex_id(&[1, 2]), 1000).unwrap();
        assert_eq!(w.failures, 0);
        assert_eq!(w.checked, 16);
        assert!((w.distance - 2f64.sqrt()).abs() < 1e-12);
        assert!(opposite_witness(&s, s.vertex_id(&[0, 2]), 10).is_err());
    }

    #[test]
    fn geodesic_projection_contracts() {
        let t = TruncatedTree::new(2, 3).unwrap();
        for leaf in t.level_range(3) {
            for u in 0..t.n_vertices() {
                for v in 0..t.n_vertices() {
                    let (pu, pv) = (project_to_geodesic(&t, leaf, u), project_to_geodesic(&t, leaf, v));
                    assert!(t.distance(pu, pv) <= t.distance(u, v));
                }
            }
        }
    }
}
