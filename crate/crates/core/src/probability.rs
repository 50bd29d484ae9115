//! Probabilities of measurement records, all in the log domain.
//!
//! `P[a] = |U[a]|²` is an unnormalized density over record space, so only
//! differences of `log_p` between records carry meaning.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::propagator::{
    restricted_propagator, AxisScenario, PropagationOptions, PropagatorResult,
};
use crate::trapmodel::Axis;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogProbability {
    pub log_p: f64,
}

impl LogProbability {
    /// `log |U|²`; the phase of the amplitude plays no part.
    pub fn from_amplitude(result: &PropagatorResult) -> Self {
        LogProbability {
            log_p: 2.0 * result.log_amplitude.re,
        }
    }
}

fn probability_on(
    axis: Axis,
    scenario: &AxisScenario,
    opts: &PropagationOptions,
) -> Result<LogProbability> {
    if scenario.axis != axis {
        return Err(Error::AxisMismatch { expected: axis });
    }
    let r = restricted_propagator(scenario, opts)?;
    Ok(LogProbability::from_amplitude(&r))
}

/// `log P[a]` for an x-axis scenario.
pub fn probability_x(scenario: &AxisScenario, opts: &PropagationOptions) -> Result<LogProbability> {
    probability_on(Axis::X, scenario, opts)
}

/// `log P[b]` for a z-axis scenario, whose coefficients carry the sign flip
/// of the quadrupole.
pub fn probability_z(scenario: &AxisScenario, opts: &PropagationOptions) -> Result<LogProbability> {
    probability_on(Axis::Z, scenario, opts)
}

/// The two axes decouple, so the joint density is the product.
pub fn joint_probability(px: LogProbability, pz: LogProbability) -> LogProbability {
    LogProbability {
        log_p: px.log_p + pz.log_p,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedRecord {
    pub id: String,
    pub log_p: f64,
    /// `log_p − max log_p`, never positive.
    pub log_odds: f64,
    /// Position in the input list.
    pub index: usize,
}

/// Sorts already-evaluated records by descending `log_p`; ties keep input order.
pub fn rank(entries: Vec<(String, f64)>) -> Vec<RankedRecord> {
    let best = entries
        .iter()
        .map(|e| e.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut ranked: Vec<RankedRecord> = entries
        .into_iter()
        .enumerate()
        .map(|(index, (id, log_p))| RankedRecord {
            id,
            log_p,
            log_odds: log_p - best,
            index,
        })
        .collect();
    ranked.sort_by(|a, b| b.log_p.total_cmp(&a.log_p));
    ranked
}

/// Evaluates every `(id, scenario)` pair in parallel and ranks the results.
/// Each scenario uses the probability for its own axis.
pub fn rank_records(
    records: &[(String, AxisScenario)],
    opts: &PropagationOptions,
) -> Result<Vec<RankedRecord>> {
    if records.is_empty() {
        return Err(Error::invalid("records", "need at least one record"));
    }
    let evaluated: Result<Vec<(String, f64)>> = records
        .par_iter()
        .map(|(id, s)| probability_on(s.axis, s, opts).map(|p| (id.clone(), p.log_p)))
        .collect();
    Ok(rank(evaluated?))
}
