use serde::Serialize;

use super::{simulate, PathStats, Registrations, SimConfig};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::ModelParams;

/// Independent paths of one configuration, one per seed.
#[derive(Debug, Clone)]
pub struct Ensemble {
    /// Sum of all per-seed statistics, merged in increasing seed order.
    pub aggregate: PathStats,
    /// Per-seed statistics in increasing seed order.
    pub per_seed: Vec<PathStats>,
}

/// Across-seed mean, sample standard deviation and standard error of a
/// vector-valued statistic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spread {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub se: Vec<f64>,
}

impl Ensemble {
    pub fn seeds(&self) -> &[u64] {
        &self.aggregate.meta.seeds
    }

    /// Spread of `f` evaluated on each seed's statistics.
    pub fn spread<F>(&self, f: F) -> Result<Spread>
    where
        F: Fn(&PathStats) -> Result<Vec<f64>>,
    {
        let values = self.per_seed.iter().map(&f).collect::<Result<Vec<_>>>()?;
        let m = values.len() as f64;
        let dim = values[0].len();
        let mean: Vec<f64> = (0..dim).map(|j| values.iter().map(|v| v[j]).sum::<f64>() / m).collect();
        let sd: Vec<f64> = (0..dim)
            .map(|j| {
                if values.len() < 2 {
                    return 0.0;
                }
                let ss: f64 = values.iter().map(|v| (v[j] - mean[j]).powi(2)).sum();
                (ss / (m - 1.0)).sqrt()
            })
            .collect();
        let se = sd.iter().map(|s| s / m.sqrt()).collect();
        Ok(Spread { mean, sd, se })
    }
}

/// Simulates one path per seed and merges them.
///
/// Seeds are processed and merged in increasing order, so the result does
/// not depend on the order of `seeds` or on the number of threads.
pub fn run_ensemble(
    params: &ModelParams,
    config: &SimConfig,
    regs: &Registrations,
    seeds: &[u64],
    exec: Execution,
) -> Result<Ensemble> {
    if seeds.is_empty() {
        return Err(Error::Config("ensemble needs at least one seed".into()));
    }
    let mut sorted = seeds.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config("ensemble seeds must be distinct".into()));
    }
    params.validate().into_result()?;
    let per_seed = exec
        .map(sorted, |seed| simulate(params, &config.clone().with_seed(seed), regs))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut aggregate = per_seed[0].clone();
    for s in &per_seed[1..] {
        aggregate.merge(s)?;
    }
    Ok(Ensemble { aggregate, per_seed })
}
