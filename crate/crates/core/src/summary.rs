//! Per-run summaries and seed-batch aggregation.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::sim::{simulate, ScenarioConfig, SimFailure, TrajectoryLog};
use crate::{LineError, Result};

/// Default convergence threshold on `‖𝓛 − 𝓛_est‖`.
pub const DEFAULT_THRESHOLD: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub converged: bool,
    /// Earliest time after which the error stays below the threshold.
    pub time_to_converge: Option<f64>,
    /// `None` when the final estimate has no finite depth.
    pub final_plucker_error: Option<f64>,
    pub failure: Option<SimFailure>,
}

/// Earliest logged time from which `‖𝓛 − 𝓛_est‖ < threshold` holds to the end
/// of the log.
pub fn time_to_converge(log: &TrajectoryLog, threshold: f64) -> Option<f64> {
    let mut first = None;
    for r in log.records.iter().rev() {
        if r.plucker_error < threshold {
            first = Some(r.t);
        } else {
            break;
        }
    }
    first
}

pub fn summarize(seed: u64, log: &TrajectoryLog, threshold: f64) -> RunSummary {
    let final_err = log
        .last()
        .map(|r| r.plucker_error)
        .filter(|e| e.is_finite());
    let converged = log.failure.is_none() && final_err.is_some_and(|e| e < threshold);
    RunSummary {
        seed,
        converged,
        time_to_converge: time_to_converge(log, threshold),
        final_plucker_error: final_err,
        failure: log.failure.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchAggregate {
    pub runs: usize,
    pub converged: usize,
    pub failures: usize,
    pub convergence_rate: f64,
    pub median_time_to_converge: Option<f64>,
    pub median_final_error: Option<f64>,
    pub threshold: f64,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Aggregates summaries. Runs without a finite final error count as
/// infinitely wrong in the median.
pub fn aggregate(summaries: &[RunSummary], threshold: f64) -> BatchAggregate {
    let runs = summaries.len();
    let converged = summaries.iter().filter(|s| s.converged).count();
    let times = summaries
        .iter()
        .filter(|s| s.converged)
        .filter_map(|s| s.time_to_converge)
        .collect();
    let errors = summaries
        .iter()
        .map(|s| s.final_plucker_error.unwrap_or(f64::INFINITY))
        .collect();
    BatchAggregate {
        runs,
        converged,
        failures: summaries.iter().filter(|s| s.failure.is_some()).count(),
        convergence_rate: if runs == 0 { 0.0 } else { converged as f64 / runs as f64 },
        median_time_to_converge: median(times),
        median_final_error: median(errors).filter(|e| e.is_finite()),
        threshold,
    }
}

/// Runs `base` once per seed. Results are ordered by seed whatever the
/// execution order.
pub fn run_seeds<T, F>(base: &ScenarioConfig, seeds: Range<u64>, per_run: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, TrajectoryLog) -> T + Sync,
{
    if seeds.is_empty() {
        return Err(LineError::InvalidParameter("empty seed range".into()));
    }
    base.validate()?;
    let one = |seed: u64| -> Result<T> {
        let cfg = ScenarioConfig {
            seed,
            ..base.clone()
        };
        Ok(per_run(seed, simulate(&cfg)?))
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        seeds.into_par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        seeds.map(one).collect()
    }
}

pub fn run_batch(
    base: &ScenarioConfig,
    seeds: Range<u64>,
    threshold: f64,
) -> Result<(Vec<RunSummary>, BatchAggregate)> {
    let summaries = run_seeds(base, seeds, |seed, log| summarize(seed, &log, threshold))?;
    let agg = aggregate(&summaries, threshold);
    Ok((summaries, agg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(vec![]), None);
    }

    #[test]
    fn empty_seed_range_is_an_error() {
        let err = run_batch(&ScenarioConfig::cube(0), 5..5, DEFAULT_THRESHOLD);
        assert!(err.is_err());
    }

    #[test]
    fn converged_implies_below_threshold() {
        let cfg = ScenarioConfig {
            duration: 1.0,
            ..ScenarioConfig::cube(0)
        };
        let (runs, agg) = run_batch(&cfg, 0..8, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(agg.runs, 8);
        assert_eq!(runs.iter().map(|r| r.seed).collect::<Vec<_>>(), (0..8).collect::<Vec<_>>());
        for r in runs {
            if r.converged {
                assert!(r.final_plucker_error.unwrap() < DEFAULT_THRESHOLD);
                assert!(r.time_to_converge.is_some());
            }
        }
    }
}
