use std::collections::BTreeMap;
use std::ops::{Add, Neg, Sub};

use num_traits::{One, Zero};

use crate::rational::Q;

/// Finitely supported rational chain in a fixed dimension.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Chain {
    dim: usize,
    coefs: BTreeMap<usize, Q>,
}

impl Chain {
    pub fn zero(dim: usize) -> Self {
        Chain { dim, coefs: BTreeMap::new() }
    }

    pub fn cell(dim: usize, id: usize) -> Self {
        let mut c = Chain::zero(dim);
        c.add_term(id, Q::one());
        c
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (usize, Q)>) -> Self {
        let mut c = Chain::zero(dim);
        for (i, x) in terms {
            c.add_term(i, x);
        }
        c
    }

    pub fn from_int_terms(dim: usize, terms: impl IntoIterator<Item = (usize, i64)>) -> Self {
        Self::from_terms(dim, terms.into_iter().map(|(i, x)| (i, crate::rational::q(x))))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, id: usize) -> Q {
        self.coefs.get(&id).cloned().unwrap_or_else(Q::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Q)> {
        self.coefs.iter().map(|(i, x)| (*i, x))
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.coefs.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.coefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coefs.is_empty()
    }

    pub fn add_term(&mut self, id: usize, x: Q) {
        if x.is_zero() {
            return;
        }
        match self.coefs.entry(id) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(x);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += x;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &Chain, s: &Q) {
        assert_eq!(self.dim, other.dim, "adding chains of different dimension");
        if s.is_zero() {
            return;
        }
        for (i, x) in other.iter() {
            self.add_term(i, x * s);
        }
    }

    pub fn scaled(&self, s: &Q) -> Chain {
        let mut c = Chain::zero(self.dim);
        c.add_scaled(self, s);
        c
    }

    /// Sum of absolute coefficients, ignoring cell weights.
    pub fn l1(&self) -> Q {
        self.coefs.values().fold(Q::zero(), |acc, x| acc + num_traits::abs(x.clone()))
    }

    pub fn coefficient_sum(&self) -> Q {
        self.coefs.values().fold(Q::zero(), |acc, x| acc + x)
    }

    pub fn is_integral(&self) -> bool {
        self.coefs.values().all(|x| x.is_integer())
    }
}

impl Add for &Chain {
    type Output = Chain;
    fn add(self, rhs: &Chain) -> Chain {
        let mut c = self.clone();
        c.add_scaled(rhs, &Q::one());
        c
    }
}

impl Sub for &Chain {
    type Output = Chain;
    fn sub(self, rhs: &Chain) -> Chain {
        let mut c = self.clone();
        c.add_scaled(rhs, &-Q::one());
        c
    }
}

impl Neg for &Chain {
    type Output = Chain;
    fn neg(self) -> Chain {
        self.scaled(&-Q::one())
    }
}
