use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cube {
    pub corner: Vec<u64>,
    pub side: u64,
}

impl Cube {
    /// Distance to the boundary of the box `[0, L]^d`.
    pub fn boundary_distance(&self, l: u64) -> u64 {
        self.corner.iter().map(|&c| c.min(l - c - self.side)).min().unwrap()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Whitney {
    pub side: u64,
    pub dim: usize,
    pub cubes: Vec<Cube>,
    pub note: Option<String>,
}

/// Dyadic cubes of `[0, L]^(k+1)`, each split while it is closer to the
/// boundary than its side and larger than a unit cube.
pub fn whitney(l: u64, k: usize) -> Result<Whitney> {
    if l < 2 {
        return Err(Error::Domain("side must be at least 2".into()));
    }
    if k > 3 {
        return Err(Error::Domain("dimension above 4 is not supported".into()));
    }
    let side = l.next_power_of_two();
    let note = (side != l).then(|| format!("side {l} rounded up to {side}"));
    let dim = k + 1;
    let mut cubes = Vec::new();
    let mut stack = vec![Cube { corner: vec![0; dim], side }];
    while let Some(c) = stack.pop() {
        if c.side > 1 && c.boundary_distance(side) < c.side {
            let h = c.side / 2;
            for mask in 0..(1u32 << dim) {
                let corner = c.corner.iter().enumerate().map(|(i, &x)| x + if mask >> i & 1 == 1 { h } else { 0 }).collect();
                stack.push(Cube { corner, side: h });
            }
        } else {
            cubes.push(c);
        }
    }
    cubes.sort_by(|a, b| a.corner.cmp(&b.corner));
    Ok(Whitney { side, dim, cubes, note })
}

#[derive(Clone, Debug, Serialize)]
pub struct WhitneyAudit {
    pub cubes: usize,
    pub boundary_cubes: usize,
    pub exact_tiling: bool,
    pub min_side: u64,
    pub boundary_unit: bool,
    /// Largest `d(C, boundary) / side` over interior cubes.
    pub max_ratio: f64,
    pub ratio_ok: bool,
}

impl WhitneyAudit {
    pub fn passed(&self) -> bool {
        self.exact_tiling && self.min_side >= 1 && self.boundary_unit && self.ratio_ok
    }
}

/// Paints every unit cell to check the tiling, and checks
/// `side <= d(C, boundary) <= 8 side sqrt(dim)` on interior cubes.
pub fn audit_whitney(w: &Whitney) -> WhitneyAudit {
    let l = w.side as usize;
    let mut paint = vec![0u8; l.pow(w.dim as u32)];
    for c in &w.cubes {
        let s = c.side as usize;
        for off in 0..s.pow(w.dim as u32) {
            let mut idx = 0;
            let mut rem = off;
            for i in (0..w.dim).rev() {
                let x = c.corner[i] as usize + rem % s;
                rem /= s;
                idx = idx * l + x;
            }
            paint[idx] = paint[idx].saturating_add(1);
        }
    }
    let exact_tiling = paint.iter().all(|&p| p == 1);
    let boundary: Vec<&Cube> = w.cubes.iter().filter(|c| c.boundary_distance(w.side) == 0).collect();
    let mut max_ratio: f64 = 0.0;
    let mut ratio_ok = true;
    for c in w.cubes.iter().filter(|c| c.boundary_distance(w.side) > 0) {
        let d = c.boundary_distance(w.side);
        ratio_ok &= d >= c.side && d * d <= 64 * c.side * c.side * w.dim as u64;
        max_ratio = max_ratio.max(d as f64 / c.side as f64);
    }
    WhitneyAudit {
        cubes: w.cubes.len(),
        boundary_cubes: boundary.len(),
        exact_tiling,
        min_side: w.cubes.iter().map(|c| c.side).min().unwrap_or(0),
        boundary_unit: boundary.iter().all(|c| c.side == 1),
        max_ratio,
        ratio_ok,
    }
}
