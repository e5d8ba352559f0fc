//! Minimal-mass fillings of cycles.

pub mod cone;
pub mod lp;
pub mod oracle;
pub mod sweep;

use std::collections::BTreeSet;

use serde::Serialize;

use crate::chain::Chain;
use crate::complex::CellComplex;
use crate::error::{Error, Result};
use crate::rational::{format_q, Q};

pub use cone::{cone_fill, ConeFiller};
pub use lp::{min_fill_lp, LpOptions};
pub use oracle::{min_fill_oracle, OracleOptions};
pub use sweep::{fit_power_law, sweep_and_fit, ExponentFit, SweepPoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FillMethod {
    Lp,
    Oracle,
    Cone,
    Pipeline,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FillStatus {
    Optimal,
    Feasible,
    Infeasible,
    Capped,
}

#[derive(Clone, Debug)]
pub struct FillingResult {
    pub filling: Chain,
    pub method: FillMethod,
    pub mass: Q,
    pub status: FillStatus,
    /// Exact gap between the primal mass and the best dual bound found.
    pub duality_gap: Option<Q>,
    pub runtime_ms: u128,
    pub note: Option<String>,
}

impl FillingResult {
    pub(crate) fn infeasible(dim: usize, method: FillMethod, note: impl Into<String>) -> Self {
        FillingResult {
            filling: Chain::zero(dim),
            method,
            mass: Q::default(),
            status: FillStatus::Infeasible,
            duality_gap: None,
            runtime_ms: 0,
            note: Some(note.into()),
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self.status, FillStatus::Optimal | FillStatus::Feasible)
    }

    pub fn certified(&self) -> bool {
        self.status == FillStatus::Optimal && self.duality_gap.as_ref().is_some_and(|g| *g == Q::default())
    }

    pub fn record(&self, cycle_id: &str) -> FillingRecord {
        FillingRecord {
            cycle_id: cycle_id.to_string(),
            method: self.method,
            mass: format_q(&self.mass),
            mass_f64: crate::rational::to_f64(&self.mass),
            status: self.status,
            duality_gap: self.duality_gap.as_ref().map(format_q),
            runtime_ms: self.runtime_ms,
        }
    }
}

/// Serialized summary of a filling.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct FillingRecord {
    pub cycle_id: String,
    pub method: FillMethod,
    pub mass: String,
    pub mass_f64: f64,
    pub status: FillStatus,
    pub duality_gap: Option<String>,
    pub runtime_ms: u128,
}

/// Candidate filling cells and the rows they touch.
pub(crate) struct Program {
    pub cols: Vec<usize>,
    pub rows: Vec<usize>,
    /// Per column: (row index, incidence).
    pub entries: Vec<Vec<(usize, i8)>>,
    pub rhs: Vec<Q>,
}

pub(crate) fn setup(cx: &CellComplex, alpha: &Chain, region: Option<&BTreeSet<usize>>) -> Result<Program> {
    cx.check_chain(alpha)?;
    if !cx.is_cycle(alpha)? {
        return Err(Error::Domain("input chain is not a cycle".into()));
    }
    let k = alpha.dim();
    let cols: Vec<usize> = cx
        .cells_of_dim(k + 1)
        .iter()
        .copied()
        .filter(|c| region.is_none_or(|r| r.contains(c)))
        .collect();
    let mut rows: BTreeSet<usize> = alpha.support().collect();
    for &c in &cols {
        rows.extend(cx.cell(c).boundary.iter().map(|&(f, _)| f));
    }
    let rows: Vec<usize> = rows.into_iter().collect();
    let row_of: std::collections::HashMap<usize, usize> = rows.iter().enumerate().map(|(i, &r)| (r, i)).collect();
    let entries = cols
        .iter()
        .map(|&c| cx.cell(c).boundary.iter().map(|&(f, s)| (row_of[&f], s)).collect())
        .collect();
    let rhs = rows.iter().map(|&r| alpha.get(r)).collect();
    Ok(Program { cols, rows, entries, rhs })
}
