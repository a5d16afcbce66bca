//! Classification of scenarios by the known sufficient conditions for the
//! compact support property.

mod fixtures;
mod rules;
mod scenario;
mod transform;

pub use fixtures::{fixtures, Fixture};
pub use rules::{classify, direct_verdicts, Inequality, Quantity, Relation, Status, Verdict};
pub use scenario::{AlphaProfile, BetaProfile, ScenarioSpec};
pub use transform::{h_transform, h_transform_scenario};

use crate::error::{Error, Result};

/// `2p/(p-1)`.
pub fn critical_dimension(p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("p = {p} must exceed 1")));
    }
    Ok(2.0 * p / (p - 1.0))
}

/// `(d(p-1) - 2p)/(p-1)^2`.
pub fn beta0(d: u32, p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("p = {p} must exceed 1")));
    }
    if d < 2 {
        return Err(Error::Domain(format!("d = {d} must be at least 2")));
    }
    let d = d as f64;
    Ok((d * (p - 1.0) - 2.0 * p) / ((p - 1.0) * (p - 1.0)))
}
