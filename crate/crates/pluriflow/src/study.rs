//! Convergence studies over a ladder of spatial steps.

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;
use crate::run::{run_scenario, RunOptions};
use crate::scenario::Scenario;

/// Errors below this are solver noise and carry no order information.
pub const SATURATION: f64 = 1e-8;

/// Smallest acceptable observed order between unsaturated levels.
pub const MIN_ORDER: f64 = 0.8;

#[derive(Clone, Debug, Serialize)]
pub struct StudyLevel {
    pub h_x: f64,
    pub dt: f64,
    pub nodes: usize,
    pub error: Option<f64>,
    /// Order against the previous level; absent on the first level or when
    /// either error is saturated.
    pub order: Option<f64>,
    pub saturated: bool,
    pub pass: bool,
    pub failed: Vec<String>,
    pub solve_seconds: f64,
    pub ledger: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct StudyResult {
    pub scenario: String,
    pub levels: Vec<StudyLevel>,
    pub pass: bool,
}

pub fn observed_order(e_coarse: f64, e_fine: f64, h_coarse: f64, h_fine: f64) -> f64 {
    (e_coarse / e_fine).ln() / (h_coarse / h_fine).ln()
}

/// Runs `scenario` at every step of `ladder` (coarse to fine). Each level
/// writes into `out/h_<index>` when an output directory is given.
pub fn run_study(scenario: &Scenario, ladder: &[f64], opts: &RunOptions) -> Result<StudyResult> {
    let mut levels: Vec<StudyLevel> = Vec::with_capacity(ladder.len());
    for (idx, &h) in ladder.iter().enumerate() {
        let refined = scenario.refined(h);
        let mut level_opts = opts.clone();
        level_opts.out = opts.out.as_ref().map(|o| o.join(format!("h_{idx}")));
        let outcome = run_scenario(&refined, &level_opts)?;
        let error = outcome.verdict.error;
        let saturated = error.is_some_and(|e| e < SATURATION);
        let order = match (levels.last(), error) {
            (Some(prev), Some(e)) if !saturated && !prev.saturated => {
                prev.error.map(|pe| observed_order(pe, e, prev.h_x, h))
            }
            _ => None,
        };
        log::info!("study {}: h = {h}, error = {error:?}, order = {order:?}", scenario.name);
        levels.push(StudyLevel {
            h_x: h,
            dt: outcome.solution.u.time().max_step(),
            nodes: outcome.built.grid().len(),
            error,
            order,
            saturated,
            pass: outcome.pass(),
            failed: outcome.verdict.failed.clone(),
            solve_seconds: outcome.solve_seconds,
            ledger: serde_json::to_value(&outcome.solution.ledger).expect("ledger serializes"),
        });
    }
    let orders_ok = levels.iter().all(|l| l.order.is_none_or(|o| o >= MIN_ORDER));
    let pass = orders_ok && levels.iter().all(|l| l.pass);
    Ok(StudyResult {
        scenario: scenario.name.clone(),
        levels,
        pass,
    })
}

/// Parses `1/8,1/16,0.03125`.
pub fn parse_ladder(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|part| {
            let part = part.trim();
            let v = match part.split_once('/') {
                Some((a, b)) => {
                    let a: f64 = a.trim().parse().map_err(|_| format!("bad ladder entry `{part}`"))?;
                    let b: f64 = b.trim().parse().map_err(|_| format!("bad ladder entry `{part}`"))?;
                    a / b
                }
                None => part.parse().map_err(|_| format!("bad ladder entry `{part}`"))?,
            };
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(format!("ladder entry `{part}` must be positive"))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_parsing() {
        assert_eq!(parse_ladder("1/8, 1/16,0.25").unwrap(), vec![0.125, 0.0625, 0.25]);
        assert!(parse_ladder("1/0").is_err());
        assert!(parse_ladder("x").is_err());
    }

    #[test]
    fn order_of_halving() {
        assert!((observed_order(4.0, 1.0, 0.5, 0.25) - 2.0).abs() < 1e-12);
    }
}
