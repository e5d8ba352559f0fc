use crate::complex::{Cell, CellComplex};
use crate::error::{Error, Result};

/// Rooted `q`-ary tree truncated at `depth`, in heap order: the children of
/// vertex `v` are `q*v + 1 ..= q*v + q`. The level of a vertex is its
/// Busemann value for the end at the top; leaves stand in for the other ends.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncatedTree {
    pub q: usize,
    pub depth: usize,
    level_start: Vec<usize>,
}

impl TruncatedTree {
    pub fn new(q: usize, depth: usize) -> Result<Self> {
        if q < 2 {
            return Err(Error::Domain(format!("branching {q} must be at least 2")));
        }
        let mut level_start: Vec<usize> = vec![0];
        let mut width = 1usize;
        for _ in 0..=depth {
            let next = level_start.last().unwrap().checked_add(width).ok_or_else(|| Error::Capacity("tree too large".into()))?;
            level_start.push(next);
            width = width.checked_mul(q).ok_or_else(|| Error::Capacity("tree too large".into()))?;
        }
        Ok(TruncatedTree { q, depth, level_start })
    }

    pub fn n_vertices(&self) -> usize {
        self.level_start[self.depth + 1]
    }

    pub fn n_edges(&self) -> usize {
        self.n_vertices() - 1
    }

    pub fn level(&self, v: usize) -> usize {
        self.level_start.partition_point(|&s| s <= v) - 1
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        (v > 0).then(|| (v - 1) / self.q)
    }

    pub fn children(&self, v: usize) -> std::ops::Range<usize> {
        if self.level(v) == self.depth {
            return 0..0;
        }
        self.q * v + 1..self.q * v + self.q + 1
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.level(v) == self.depth
    }

    pub fn first_of_level(&self, l: usize) -> usize {
        self.level_start[l]
    }

    pub fn level_range(&self, l: usize) -> std::ops::Range<usize> {
        self.level_start[l]..self.level_start[l + 1]
    }

    /// Descendants of `v` at level `l >= level(v)`, a contiguous range.
    pub fn descendants_at(&self, v: usize, l: usize) -> std::ops::Range<usize> {
        let mut lo = v;
        let mut hi = v;
        for _ in self.level(v)..l {
            lo = self.q * lo + 1;
            hi = self.q * hi + self.q;
        }
        lo..hi + 1
    }

    pub fn leaves_below(&self, v: usize) -> std::ops::Range<usize> {
        self.descendants_at(v, self.depth)
    }

    pub fn ancestor_at(&self, mut v: usize, l: usize) -> usize {
        let mut lv = self.level(v);
        assert!(l <= lv, "no ancestor below the vertex");
        while lv > l {
            v = (v - 1) / self.q;
            lv -= 1;
        }
        v
    }

    /// `u` is `v` or one of its ancestors.
    pub fn is_ancestor_or_self(&self, u: usize, v: usize) -> bool {
        let (lu, lv) = (self.level(u), self.level(v));
        lu <= lv && self.ancestor_at(v, lu) == u
    }

    pub fn lca(&self, a: usize, b: usize) -> usize {
        let (mut a, mut b) = (a, b);
        let (la, lb) = (self.level(a), self.level(b));
        if la > lb {
            a = self.ancestor_at(a, lb);
        } else {
            b = self.ancestor_at(b, la);
        }
        while a != b {
            a = (a - 1) / self.q;
            b = (b - 1) / self.q;
        }
        a
    }

    pub fn distance(&self, a: usize, b: usize) -> usize {
        let m = self.level(self.lca(a, b));
        self.level(a) + self.level(b) - 2 * m
    }

    /// Vertices on the geodesic from `a` to `b`, inclusive, in order.
    pub fn path(&self, a: usize, b: usize) -> Vec<usize> {
        let m = self.lca(a, b);
        let mut up = vec![a];
        let mut x = a;
        while x != m {
            x = (x - 1) / self.q;
            up.push(x);
        }
        let mut down = Vec::new();
        let mut y = b;
        while y != m {
            down.push(y);
            y = (y - 1) / self.q;
        }
        down.reverse();
        up.extend(down);
        up
    }

    /// Child index path from the root, e.g. "0.1.1"; the root is "".
    pub fn address(&self, v: usize) -> String {
        let mut digits = Vec::new();
        let mut x = v;
        while x > 0 {
            digits.push(((x - 1) % self.q).to_string());
            x = (x - 1) / self.q;
        }
        digits.reverse();
        digits.join(".")
    }

    /// Canonical downward path from `v`: always the first child.
    pub fn first_leaf_below(&self, v: usize) -> usize {
        self.leaves_below(v).start
    }

    /// The tree as a 1-complex: vertex ids first, then the edge above child
    /// `c` at id `n_vertices + c - 1`, oriented as child minus parent.
    pub fn complex(&self) -> CellComplex {
        let nv = self.n_vertices();
        let mut cells: Vec<Cell> = (0..nv).map(|v| Cell::new(0, vec![]).with_label(self.address(v))).collect();
        for c in 1..nv {
            cells.push(Cell::new(1, vec![(c, 1), (self.parent(c).unwrap(), -1)]));
        }
        CellComplex::new(cells).expect("tree complex")
    }
}

pub fn build_tree(q: usize, depth: usize) -> Result<TruncatedTree> {
    TruncatedTree::new(q, depth)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_depth_three() {
        let t = TruncatedTree::new(2, 3).unwrap();
        assert_eq!(t.n_vertices(), 15);
        assert_eq!(t.n_edges(), 14);
        assert_eq!(t.leaves_below(0).len(), 8);
        assert_eq!(t.level(0), 0);
        assert_eq!(t.level(14), 3);
        assert_eq!(t.children(1), 3..5);
        assert!(t.children(7).is_empty());
        assert_eq!(t.address(4), "0.1");
        assert_eq!(t.distance(3, 6), 4);
        assert_eq!(t.path(3, 4), vec![3, 1, 4]);
        assert_eq!(t.lca(9, 12), 0);
    }

    #[test]
    fn ternary_depth_zero() {
        let t = TruncatedTree::new(3, 0).unwrap();
        assert_eq!(t.n_vertices(), 1);
        assert_eq!(t.n_edges(), 0);
        assert_eq!(t.complex().len(), 1);
    }

    #[test]
    fn rejects_unary() {
        assert!(matches!(TruncatedTree::new(1, 3), Err(Error::Domain(_))));
    }
}
