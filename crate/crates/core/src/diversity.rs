//! Diversity functional, time-averaged functionals of ranked weights, and
//! a Gaussian bound on the probability of weak diversity.

use serde::{Deserialize, Serialize};

use crate::engine::PathStats;
use crate::error::{Error, Result};

/// `D_p(x) = (sum_i x_i^p)^(1/p)`, in `[1, n^((1-p)/p)]`.
pub fn diversity_value(x: &[f64], p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidInput(format!("diversity exponent p = {p} must lie in (0, 1]")));
    }
    if x.is_empty() || x.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidInput("weights must be nonnegative".into()));
    }
    if (x.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput("weights must sum to 1".into()));
    }
    Ok(x.iter().map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p))
}

/// Final time average of a registered functional and its running average
/// at each checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalAverage {
    pub label: String,
    pub value: f64,
    /// `(t, running average over measured time up to t)`.
    pub series: Vec<(f64, f64)>,
}

impl FunctionalAverage {
    /// First checkpoint time from which the running average stays within
    /// relative distance `tol` of `target`.
    pub fn entry_time(&self, target: f64, tol: f64) -> Option<f64> {
        let inside = |v: f64| ((v - target) / target).abs() <= tol;
        let last_out = self.series.iter().rposition(|s| !inside(s.1));
        match last_out {
            None => self.series.first().map(|s| s.0),
            Some(i) => self.series.get(i + 1).map(|s| s.0),
        }
    }
}

/// Time average of the functional registered at position `id`.
pub fn time_average_functional(stats: &PathStats, id: usize) -> Result<FunctionalAverage> {
    let track = stats
        .functionals
        .get(id)
        .ok_or_else(|| Error::InvalidInput(format!("no functional registered at position {id}")))?;
    let samples = stats.meta.samples();
    if samples <= 0.0 {
        return Err(Error::InvalidInput("no measured time in path statistics".into()));
    }
    let series = track
        .checkpoints
        .iter()
        .filter(|c| c.1 > 0)
        .map(|&(t, steps, sum)| (t, sum / steps as f64))
        .collect();
    Ok(FunctionalAverage { label: track.functional.label(), value: track.sum / samples, series })
}

/// Inputs of the weak-diversity bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiversityBoundInput {
    pub n: usize,
    /// Diversity margin: the largest weight must stay below `1 - delta`.
    pub delta: f64,
    /// Horizon in years.
    pub horizon: f64,
    /// Annual standard deviation of a stock's log-weight relative to the market.
    pub rel_sd: f64,
    /// Initial weight of the candidate dominant stock.
    pub start_weight: f64,
}

/// Result of [`weak_diversity_bound`]; tails are kept as base-10 logarithms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiversityBound {
    pub applicable: bool,
    /// Weight the dominant stock must reach, `1 - 2 delta`.
    pub threshold_weight: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "log_A")]
    pub log_a: f64,
    pub z: f64,
    pub log10_tail: f64,
    /// `log10(2 n) + log10_tail`: bound on the probability that any stock
    /// dominates.
    pub log10_final_tail: f64,
    pub probability_bound_descriptor: String,
    pub note: String,
}

/// `log10` of the standard normal upper tail approximation
/// `exp(-z^2/2) / (z sqrt(2 pi))`.
pub fn log10_gaussian_tail(z: f64) -> f64 {
    -z * z / (2.0 * std::f64::consts::LN_10) - (z * (2.0 * std::f64::consts::PI).sqrt()).log10()
}

/// Bounds the probability that some stock's weight climbs from
/// `start_weight` to `1 - 2 delta`, which weak diversity rules out.
///
/// The stock's weight must grow by the odds factor `A` solving
/// `w A / (w A + 1 - w) = 1 - 2 delta`; this is `ln A / rel_sd` standard
/// deviations. Reflection doubles the one-sided tail and a union bound
/// covers all `n` stocks.
pub fn weak_diversity_bound(input: &DiversityBoundInput) -> Result<DiversityBound> {
    let DiversityBoundInput { n, delta, horizon, rel_sd, start_weight } = *input;
    if n == 0 || !(delta > 0.0 && delta < 1.0) || !(horizon > 0.0) || !(rel_sd > 0.0) {
        return Err(Error::InvalidInput(
            "need n >= 1, 0 < delta < 1, horizon > 0 and rel_sd > 0".into(),
        ));
    }
    if !(start_weight > 0.0 && start_weight < 1.0) {
        return Err(Error::InvalidInput("start weight must lie in (0, 1)".into()));
    }
    let w = 1.0 - 2.0 * delta;
    let note = "threshold weight taken as 1 - 2 delta; rel_sd used as given, not rescaled to the horizon"
        .to_string();
    if w <= start_weight {
        return Ok(DiversityBound {
            applicable: false,
            threshold_weight: w,
            a: f64::NAN,
            log_a: f64::NAN,
            z: f64::NAN,
            log10_tail: f64::NAN,
            log10_final_tail: f64::NAN,
            probability_bound_descriptor: "inapplicable: start weight already at or above the threshold"
                .into(),
            note,
        });
    }
    let a = w * (1.0 - start_weight) / (start_weight * (1.0 - w));
    let log_a = a.ln();
    let z = log_a / rel_sd;
    let log10_tail = log10_gaussian_tail(z);
    let log10_final_tail = (2.0 * n as f64).log10() + log10_tail;
    Ok(DiversityBound {
        applicable: true,
        threshold_weight: w,
        a,
        log_a,
        z,
        log10_tail,
        log10_final_tail,
        probability_bound_descriptor: format!("P(weak diversity) >= 1 - 10^({log10_final_tail:.2})"),
        note,
    })
}
