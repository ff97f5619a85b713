//! Euler–Maruyama integration of the rank-based system with statistics
//! accumulated alongside the path.

mod ensemble;
mod noise;
mod stats;

use crate::error::{Error, Result};
use crate::model::{rank, ModelParams, Ranking};
use crate::portfolio::{check_weights, fill_weights, wealth_increment, PortfolioRule};

pub use ensemble::{run_ensemble, Ensemble, Spread};
pub use noise::{NoiseSource, SeededNoise, ZeroNoise};
pub use stats::{
    factorial, perm_from_index, perm_index, Functional, FunctionalTrack, GapAccum, Meta,
    PathStats, WealthSample, WealthTrack,
};

/// Largest market for which permutation occupation can be tracked.
pub const MAX_PERM_N: usize = 8;
/// Number of equal-width gap histogram bins.
pub const HIST_BINS: usize = 200;
/// Default number of samples kept for wealth and functional series.
pub const DEFAULT_SAMPLES: u64 = 1000;

/// Time and log-capitalizations `y_i = log X_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketState {
    pub t: f64,
    pub y: Vec<f64>,
}

impl MarketState {
    pub fn new(t: f64, y: Vec<f64>) -> Result<Self> {
        if !t.is_finite() || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("market state must be finite".into()));
        }
        Ok(MarketState { t, y })
    }

    /// All capitalizations equal.
    pub fn flat(n: usize) -> Self {
        MarketState { t: 0.0, y: vec![0.0; n] }
    }

    pub fn capitalizations(&self) -> Vec<f64> {
        self.y.iter().map(|v| v.exp()).collect()
    }

    /// Market weights `mu_i`, computed with the maximum log-cap factored out.
    pub fn weights(&self) -> Vec<f64> {
        let mut mu = vec![0.0; self.y.len()];
        market_weights(&self.y, &mut mu);
        mu
    }

    pub fn ranking(&self) -> Result<Ranking> {
        rank(&self.y)
    }
}

pub(crate) fn market_weights(y: &[f64], mu: &mut [f64]) {
    let top = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (m, &v) in mu.iter_mut().zip(y) {
        *m = (v - top).exp();
        total += *m;
    }
    for m in mu.iter_mut() {
        *m /= total;
    }
}

/// One Euler–Maruyama step with coefficients frozen at the incoming ranks.
pub fn step(state: &MarketState, params: &ModelParams, dt: f64, noise: &[f64]) -> Result<MarketState> {
    let n = params.n();
    if state.y.len() != n || noise.len() != n {
        return Err(Error::InvalidInput("state, parameters and noise disagree on n".into()));
    }
    let ranking = state.ranking()?;
    let sqrt_dt = dt.sqrt();
    let mut y = state.y.clone();
    for (k, &name) in ranking.perm().iter().enumerate() {
        y[name] += (params.gamma + params.g[k]) * dt + params.sigma[k] * sqrt_dt * noise[name];
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { step: 1 });
    }
    Ok(MarketState { t: state.t + dt, y })
}

/// Horizon, step size, burn-in, seed and initial condition of a path.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub t_total: f64,
    pub dt: f64,
    /// Initial time excluded from statistics.
    pub burn_in: f64,
    pub seed: u64,
    /// Initial log-capitalizations; all zero when absent.
    pub y0: Option<Vec<f64>>,
}

impl SimConfig {
    /// Horizon `t_total` with step `dt`, 10% burn-in, seed 0, flat start.
    pub fn new(t_total: f64, dt: f64) -> Self {
        SimConfig { t_total, dt, burn_in: 0.1 * t_total, seed: 0, y0: None }
    }

    pub fn with_burn_in(mut self, burn_in: f64) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_y0(mut self, y0: Vec<f64>) -> Self {
        self.y0 = Some(y0);
        self
    }

    /// Number of steps; `t_total / dt` must be an integer up to round-off.
    pub fn steps(&self) -> Result<u64> {
        self.check()?;
        let ratio = self.t_total / self.dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-6 * ratio.max(1.0) {
            return Err(Error::Config(format!(
                "horizon {} is not a whole number of steps of {}",
                self.t_total, self.dt
            )));
        }
        Ok(steps as u64)
    }

    /// Number of steps excluded by burn-in.
    pub fn burn_steps(&self) -> u64 {
        (self.burn_in / self.dt).round() as u64
    }

    fn check(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= self.t_total && self.t_total.is_finite()) {
            return Err(Error::Config(format!(
                "need 0 < dt <= T, got dt = {}, T = {}",
                self.dt, self.t_total
            )));
        }
        if !(self.burn_in >= 0.0 && self.burn_in < self.t_total) {
            return Err(Error::Config(format!(
                "need 0 <= burn_in < T, got burn_in = {}",
                self.burn_in
            )));
        }
        Ok(())
    }

    fn initial(&self, n: usize) -> Result<Vec<f64>> {
        match &self.y0 {
            None => Ok(vec![0.0; n]),
            Some(y0) if y0.len() != n => Err(Error::Config(format!(
                "initial condition has {} entries, expected {n}",
                y0.len()
            ))),
            Some(y0) if y0.iter().any(|v| !v.is_finite()) => {
                Err(Error::Config("initial condition must be finite".into()))
            }
            Some(y0) => Ok(y0.clone()),
        }
    }
}

/// What to accumulate along a path besides the always-on gap, crossover
/// and weight statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Registrations {
    pub functionals: Vec<Functional>,
    pub rules: Vec<PortfolioRule>,
    /// Name-by-rank occupation counts (`n * n` counters).
    pub track_occupation: bool,
    /// Permutation occupation counts; requires `n <= 8`.
    pub track_perms: bool,
    /// Band half-width per boundary; defaults to `2 s_k sqrt(dt)`.
    pub band_eps: Option<Vec<f64>>,
    /// Histogram range; defaults to ten times the largest analytic mean gap.
    pub hist_max: Option<f64>,
    /// Steps between samples of wealth and functional series.
    pub record_every: Option<u64>,
}

impl Default for Registrations {
    fn default() -> Self {
        Registrations {
            functionals: Vec::new(),
            rules: Vec::new(),
            track_occupation: true,
            track_perms: false,
            band_eps: None,
            hist_max: None,
            record_every: None,
        }
    }
}

impl Registrations {
    pub fn with_rules(mut self, rules: impl IntoIterator<Item = PortfolioRule>) -> Self {
        self.rules.extend(rules);
        self
    }

    pub fn with_functional(mut self, f: Functional) -> Self {
        self.functionals.push(f);
        self
    }

    pub fn with_perms(mut self) -> Self {
        self.track_perms = true;
        self
    }
}

/// Default band half-widths `2 s_k sqrt(dt)`.
pub fn default_band_eps(params: &ModelParams, dt: f64) -> Vec<f64> {
    let v = params.variances();
    v.windows(2).map(|w| 2.0 * (w[0] + w[1]).sqrt() * dt.sqrt()).collect()
}

fn default_hist_max(params: &ModelParams) -> f64 {
    let v = params.variances();
    let rho_max = params
        .partial_sums()
        .iter()
        .zip(v.windows(2))
        .map(|(s, w)| -(w[0] + w[1]) / (4.0 * s))
        .fold(0.0, f64::max);
    if rho_max.is_finite() && rho_max > 0.0 {
        10.0 * rho_max
    } else {
        10.0 * v.iter().copied().fold(0.0, f64::max).sqrt().max(1.0)
    }
}

/// Simulates one path from validated parameters with seeded noise.
pub fn simulate(params: &ModelParams, config: &SimConfig, regs: &Registrations) -> Result<PathStats> {
    params.validate().into_result()?;
    let mut noise = SeededNoise::new(config.seed, params.n());
    simulate_with_noise(params, config, regs, &mut noise)
}

/// Simulates one path with caller-supplied noise and without checking the
/// model's validity conditions. Intended for drift-only and symmetry checks.
pub fn simulate_with_noise<N: NoiseSource + ?Sized>(
    params: &ModelParams,
    config: &SimConfig,
    regs: &Registrations,
    noise_src: &mut N,
) -> Result<PathStats> {
    let n = params.n();
    if n < 2 || params.g.len() != n || params.sigma.len() != n {
        return Err(Error::InvalidParams("need n >= 2 and matching g, sigma lengths".into()));
    }
    let steps = config.steps()?;
    let burn_steps = config.burn_steps().min(steps - 1);
    if regs.track_perms && n > MAX_PERM_N {
        return Err(Error::Config(format!(
            "permutation occupation needs n <= {MAX_PERM_N}, got n = {n}"
        )));
    }
    for rule in &regs.rules {
        rule.validate()?;
    }
    let band_eps = match &regs.band_eps {
        Some(e) if e.len() != n - 1 => {
            return Err(Error::Config(format!("band widths need {} entries", n - 1)))
        }
        Some(e) if e.iter().any(|x| !(*x > 0.0)) => {
            return Err(Error::Config("band widths must be positive".into()))
        }
        Some(e) => e.clone(),
        None => default_band_eps(params, config.dt),
    };
    let hist_max = regs.hist_max.unwrap_or_else(|| default_hist_max(params));
    if !(hist_max > 0.0 && hist_max.is_finite()) {
        return Err(Error::Config("histogram range must be positive".into()));
    }
    let every = regs
        .record_every
        .unwrap_or_else(|| (steps / DEFAULT_SAMPLES).max(1))
        .max(1);

    let dt = config.dt;
    let sqrt_dt = dt.sqrt();
    let measured_steps = steps - burn_steps;
    let mut stats = PathStats {
        meta: Meta {
            n,
            t_total: config.t_total,
            dt,
            burn_in: config.burn_in,
            seeds: vec![config.seed],
            paths: 1,
            steps,
            measured_steps,
        },
        occupation: regs.track_occupation.then(|| vec![0; n * n]),
        perm_counts: regs.track_perms.then(|| vec![0; factorial(n)]),
        gaps: band_eps.iter().map(|&e| GapAccum::new(e, hist_max, HIST_BINS)).collect(),
        crossovers: vec![0; n - 1],
        name_weight_sums: vec![0.0; n],
        ranked_weight_sums: vec![0.0; n],
        functionals: regs
            .functionals
            .iter()
            .map(|&f| FunctionalTrack { functional: f, sum: 0.0, checkpoints: Vec::new() })
            .collect(),
        wealth: regs.rules.iter().map(|&r| WealthTrack::new(r)).collect(),
        y_burn: vec![0.0; n],
        y_final: vec![0.0; n],
    };

    let variances = params.variances();
    let mut y = config.initial(n)?;
    let mut ranking = rank(&y)?;
    let mut old_perm = ranking.perm().to_vec();
    let mut old_rank = ranking.rank_of().to_vec();
    let mut xi = vec![0.0; n];
    let mut mu = vec![0.0; n];
    let mut ranked = vec![0.0; n];
    let mut pi = vec![0.0; n];
    let mut growth_by_name = vec![0.0; n];
    let mut sigma_by_name = vec![0.0; n];

    market_weights(&y, &mut mu);
    for w in stats.wealth.iter_mut() {
        w.log_diversity_start = log_diversity(w.rule, &mu);
        w.samples.push(WealthSample {
            t: 0.0,
            log_wealth: 0.0,
            int_growth: 0.0,
            int_excess: 0.0,
            log_diversity: w.log_diversity_start,
        });
    }

    for j in 0..steps {
        if j == burn_steps {
            stats.y_burn.copy_from_slice(&y);
            stats.wealth.iter_mut().for_each(WealthTrack::snapshot_burn);
        }
        let measure = j >= burn_steps;
        noise_src.fill(&mut xi);
        if j > 0 {
            market_weights(&y, &mut mu);
        }
        let perm = ranking.perm();

        if measure {
            for (k, &name) in perm.iter().enumerate() {
                ranked[k] = mu[name];
                stats.ranked_weight_sums[k] += mu[name];
            }
            for (s, m) in stats.name_weight_sums.iter_mut().zip(&mu) {
                *s += m;
            }
            if let Some(occ) = stats.occupation.as_mut() {
                for (k, &name) in perm.iter().enumerate() {
                    occ[name * n + k] += 1;
                }
            }
            if let Some(pc) = stats.perm_counts.as_mut() {
                pc[perm_index(perm)] += 1;
            }
            for (k, gap) in stats.gaps.iter_mut().enumerate() {
                gap.record(y[perm[k]] - y[perm[k + 1]]);
            }
            for f in stats.functionals.iter_mut() {
                f.sum += f.functional.eval(&ranked);
            }
        }

        if !stats.wealth.is_empty() {
            for (k, &name) in perm.iter().enumerate() {
                growth_by_name[name] = params.gamma + params.g[k];
                sigma_by_name[name] = params.sigma[k];
            }
            for w in stats.wealth.iter_mut() {
                fill_weights(w.rule, &mu, &ranking, &variances, &mut pi);
                check_weights(&pi)?;
                let inc = wealth_increment(&pi, &growth_by_name, &sigma_by_name, dt, &xi);
                w.log_wealth += inc.d_log_wealth;
                w.int_growth += inc.growth * dt;
                w.int_excess += inc.excess * dt;
                w.int_return += inc.rate_of_return * dt;
                w.int_variance += inc.variance * dt;
            }
        }

        for (k, &name) in perm.iter().enumerate() {
            y[name] += (params.gamma + params.g[k]) * dt + params.sigma[k] * sqrt_dt * xi[name];
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: j + 1 });
        }

        old_perm.copy_from_slice(ranking.perm());
        old_rank.copy_from_slice(ranking.rank_of());
        ranking.update(&y);
        if measure && old_perm != ranking.perm() {
            let new_perm = ranking.perm();
            let mut acc = 0.0;
            for k in 0..n - 1 {
                acc += y[new_perm[k]] - y[old_perm[k]];
                stats.gaps[k].local_time += 2.0 * acc;
            }
            for (name, &from) in old_rank.iter().enumerate() {
                let to = ranking.rank_of()[name];
                for b in from..to {
                    stats.crossovers[b] += 1;
                }
            }
        }

        let done = j + 1;
        if done % every == 0 || done == steps {
            let t = done as f64 * dt;
            if !stats.wealth.is_empty() {
                market_weights(&y, &mut mu);
            }
            for w in stats.wealth.iter_mut() {
                w.samples.push(WealthSample {
                    t,
                    log_wealth: w.log_wealth,
                    int_growth: w.int_growth,
                    int_excess: w.int_excess,
                    log_diversity: log_diversity(w.rule, &mu),
                });
            }
            if done > burn_steps {
                for f in stats.functionals.iter_mut() {
                    f.checkpoints.push((t, done - burn_steps, f.sum));
                }
            }
        }
    }

    market_weights(&y, &mut mu);
    for w in stats.wealth.iter_mut() {
        w.log_diversity_end = log_diversity(w.rule, &mu);
    }
    stats.y_final.copy_from_slice(&y);
    Ok(stats)
}

/// `log D_p(mu)` for the diversity-weighted rule, zero for other rules.
fn log_diversity(rule: PortfolioRule, mu: &[f64]) -> f64 {
    match rule {
        PortfolioRule::Diversity(p) => mu.iter().map(|m| m.powf(p)).sum::<f64>().ln() / p,
        _ => 0.0,
    }
}
