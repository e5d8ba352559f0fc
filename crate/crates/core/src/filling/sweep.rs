use rayon::prelude::*;
use serde::Serialize;

use super::{FillStatus, FillingResult};
use crate::chain::Chain;
use crate::error::Result;
use crate::rational::{to_f64, Q};

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ExponentFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n_points: usize,
    /// Instances left out of the fit, with the reason.
    pub excluded: Vec<(String, String)>,
}

#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub id: String,
    pub mass_in: Q,
    pub result: FillingResult,
}

/// Least-squares line through `(ln x, ln y)`; points are sorted first so the
/// result does not depend on their order.
pub fn fit_power_law(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    let mut pts: Vec<(f64, f64)> =
        points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let ss_res: f64 = pts.iter().map(|p| (p.1 - icpt - slope * p.0).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Some((slope, icpt, r2))
}

/// Fills every instance (in parallel) and fits `mass_fill ~ mass_in^e` over
/// the feasible ones. Results come back in input order.
pub fn sweep_and_fit<M, F>(instances: &[(String, Chain)], mass_in: M, fill: F) -> Result<(Vec<SweepPoint>, Option<ExponentFit>)>
where
    M: Fn(&Chain) -> Result<Q> + Sync,
    F: Fn(&Chain) -> Result<FillingResult> + Sync,
{
    let points: Vec<Result<SweepPoint>> = instances
        .par_iter()
        .map(|(id, c)| Ok(SweepPoint { id: id.clone(), mass_in: mass_in(c)?, result: fill(c)? }))
        .collect();
    let points: Vec<SweepPoint> = points.into_iter().collect::<Result<_>>()?;
    let mut excluded = Vec::new();
    let mut xy = Vec::new();
    for p in &points {
        match p.result.status {
            FillStatus::Optimal | FillStatus::Feasible => xy.push((to_f64(&p.mass_in), to_f64(&p.result.mass))),
            s => excluded.push((p.id.clone(), format!("{s:?}").to_lowercase())),
        }
    }
    let fit = fit_power_law(&xy).map(|(exponent, intercept, r2)| ExponentFit {
        exponent,
        intercept,
        r2,
        n_points: xy.len(),
        excluded,
    });
    Ok((points, fit))
}
