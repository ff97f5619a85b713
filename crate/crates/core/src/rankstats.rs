//! Estimators of ergodic rank statistics from accumulated path statistics.

use serde::Serialize;

use crate::engine::{perm_from_index, PathStats};
use crate::error::{Error, Result};
use crate::model::ModelParams;

fn measured(stats: &PathStats) -> Result<f64> {
    let samples = stats.meta.samples();
    if samples <= 0.0 {
        return Err(Error::InvalidInput("no measured time in path statistics".into()));
    }
    Ok(samples)
}

/// Fraction of measured time name `i` spent at rank `k`, as `[i][k]`.
pub fn occupation_fractions(stats: &PathStats) -> Result<Vec<Vec<f64>>> {
    let total = measured(stats)?;
    let occ = stats
        .occupation
        .as_ref()
        .ok_or_else(|| Error::Config("occupation was not tracked".into()))?;
    let n = stats.n();
    Ok((0..n)
        .map(|i| (0..n).map(|k| occ[i * n + k] as f64 / total).collect())
        .collect())
}

/// Fraction of measured time spent in each ordering, keyed by the
/// one-based `perm` (names from largest to smallest).
pub fn permutation_fractions(stats: &PathStats) -> Result<Vec<(Vec<usize>, f64)>> {
    let total = measured(stats)?;
    let counts = stats
        .perm_counts
        .as_ref()
        .ok_or_else(|| Error::Config("permutation occupation needs n <= 8 and --track-perms".into()))?;
    let n = stats.n();
    Ok(counts
        .iter()
        .enumerate()
        .map(|(idx, &c)| {
            let perm = perm_from_index(idx, n).into_iter().map(|i| i + 1).collect();
            (perm, c as f64 / total)
        })
        .collect())
}

/// Time-averaged market weight of each name.
pub fn name_weight_means(stats: &PathStats) -> Result<Vec<f64>> {
    let total = measured(stats)?;
    Ok(stats.name_weight_sums.iter().map(|s| s / total).collect())
}

/// Time-averaged market weight at each rank.
pub fn ranked_weight_means(stats: &PathStats) -> Result<Vec<f64>> {
    let total = measured(stats)?;
    Ok(stats.ranked_weight_sums.iter().map(|s| s / total).collect())
}

/// Per-name growth of `y_i` per unit of measured time.
pub fn log_cap_growth(stats: &PathStats) -> Result<Vec<f64>> {
    measured(stats)?;
    let span = stats.meta.paths as f64 * stats.meta.measured_time();
    Ok(stats.y_final.iter().zip(&stats.y_burn).map(|(a, b)| (a - b) / span).collect())
}

/// Per-boundary count of rank swaps, averaged over paths.
pub fn crossover_counts(stats: &PathStats) -> Vec<f64> {
    let paths = stats.meta.paths as f64;
    stats.crossovers.iter().map(|&c| c as f64 / paths).collect()
}

/// Analytic gap law at one boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapLaw {
    /// `s_k = sqrt(sigma_k^2 + sigma_{k+1}^2)`.
    pub s: f64,
    /// Local-time rate `lambda_{k,k+1} = -2 (g_1 + ... + g_k)`.
    pub lambda: f64,
    /// Exponential rate `r_k = 2 lambda / s_k^2`.
    pub r: f64,
    /// Mean gap `rho_k = 1 / r_k`.
    pub rho: f64,
}

/// Analytic gap laws for boundaries `1..n-1`.
pub fn gap_laws(params: &ModelParams) -> Vec<GapLaw> {
    let v = params.variances();
    params
        .partial_sums()
        .iter()
        .zip(v.windows(2))
        .map(|(sum, w)| {
            let s2 = w[0] + w[1];
            let lambda = -2.0 * sum;
            let r = 2.0 * lambda / s2;
            GapLaw { s: s2.sqrt(), lambda, r, rho: 1.0 / r }
        })
        .collect()
}

/// Empirical and analytic statistics of one gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapStat {
    /// One-based boundary between ranks `k` and `k + 1`.
    pub k: usize,
    pub rho_hat: f64,
    /// Exponential rate by maximum likelihood, `1 / rho_hat`.
    pub r_hat: f64,
    /// Slope of the log survival function over `[rho_k, 4 rho_k]`.
    pub tail_slope: f64,
    /// Local-time rate from the accumulated discrete reflection.
    pub lambda_hat: f64,
    /// Local-time rate from the near-zero band occupation.
    pub lambda_band: f64,
    pub band_eps: f64,
    pub s: f64,
    pub r: f64,
    pub lambda: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapSummary {
    pub gaps: Vec<GapStat>,
}

impl GapSummary {
    pub fn rho_hat(&self) -> Vec<f64> {
        self.gaps.iter().map(|g| g.rho_hat).collect()
    }

    pub fn lambda_hat(&self) -> Vec<f64> {
        self.gaps.iter().map(|g| g.lambda_hat).collect()
    }
}

pub fn gap_summary(stats: &PathStats, params: &ModelParams) -> Result<GapSummary> {
    let total = measured(stats)?;
    if params.n() != stats.n() {
        return Err(Error::InvalidInput("parameters do not match the statistics".into()));
    }
    let laws = gap_laws(params);
    let mut gaps = Vec::with_capacity(laws.len());
    for (k, law) in laws.iter().enumerate() {
        let acc = &stats.gaps[k];
        let rho_hat = acc.sum / total;
        let fit_rho = if law.rho.is_finite() && law.rho > 0.0 { law.rho } else { rho_hat };
        gaps.push(GapStat {
            k: k + 1,
            rho_hat,
            r_hat: 1.0 / rho_hat,
            tail_slope: tail_slope(stats, k + 1, fit_rho, 4.0 * fit_rho)?,
            lambda_hat: skorokhod_local_time_rate(stats, k + 1)?,
            lambda_band: local_time_rate(stats, k + 1, params)?,
            band_eps: acc.band_eps,
            s: law.s,
            r: law.r,
            lambda: law.lambda,
            rho: law.rho,
        });
    }
    Ok(GapSummary { gaps })
}

fn boundary(stats: &PathStats, k: usize) -> Result<usize> {
    if k == 0 || k >= stats.n() {
        return Err(Error::InvalidInput(format!("boundary {k} outside 1..{}", stats.n() - 1)));
    }
    Ok(k - 1)
}

/// Band estimator `s_k^2 / (2 eps) * P[Xi_k < eps]` of the local-time rate
/// at one-based boundary `k`.
pub fn local_time_rate(stats: &PathStats, k: usize, params: &ModelParams) -> Result<f64> {
    let b = boundary(stats, k)?;
    let total = measured(stats)?;
    let acc = &stats.gaps[b];
    if !(acc.band_eps > 0.0) {
        return Err(Error::Config(format!("no band width configured for boundary {k}")));
    }
    let v = params.variances();
    let s2 = v[b] + v[b + 1];
    Ok(s2 / (2.0 * acc.band_eps) * acc.band_count as f64 / total)
}

/// Local-time rate from the discrete reflection accumulated at one-based
/// boundary `k`: the excess of the top-`k` log-cap sum over the sum of the
/// names that held those ranks, doubled, per unit of measured time.
pub fn skorokhod_local_time_rate(stats: &PathStats, k: usize) -> Result<f64> {
    let b = boundary(stats, k)?;
    measured(stats)?;
    let span = stats.meta.paths as f64 * stats.meta.measured_time();
    Ok(stats.gaps[b].local_time / span)
}

/// Empirical survival function `P[Xi_k > x]` at the histogram bin edges.
pub fn gap_survival(stats: &PathStats, k: usize) -> Result<Vec<(f64, f64)>> {
    let b = boundary(stats, k)?;
    let total = measured(stats)?;
    let acc = &stats.gaps[b];
    let w = acc.bin_width();
    let mut tail = acc.hist.iter().sum::<u64>();
    let mut out = Vec::with_capacity(acc.bins() + 1);
    for (j, &c) in acc.hist.iter().enumerate().take(acc.bins() + 1) {
        out.push((j as f64 * w, tail as f64 / total));
        tail -= c;
    }
    Ok(out)
}

/// Least-squares slope of `log P[Xi_k > x]` on `x` over bin edges in `[lo, hi]`.
pub fn tail_slope(stats: &PathStats, k: usize, lo: f64, hi: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = gap_survival(stats, k)?
        .into_iter()
        .filter(|&(x, s)| x >= lo && x <= hi && s > 0.0)
        .map(|(x, s)| (x, s.ln()))
        .collect();
    if pts.len() < 2 {
        return Ok(f64::NAN);
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{simulate, simulate_with_noise, Registrations, SimConfig, ZeroNoise};
    use approx::assert_relative_eq;

    #[test]
    fn analytic_atlas_three() {
        let p = ModelParams::atlas(3, 1.0, 1.0).unwrap();
        let laws = gap_laws(&p);
        let expect = [(2.0, 2.0, 0.5), (4.0, 4.0, 0.25)];
        for (law, (lambda, r, rho)) in laws.iter().zip(expect) {
            assert_relative_eq!(law.lambda, lambda);
            assert_relative_eq!(law.r, r);
            assert_relative_eq!(law.rho, rho);
            assert_relative_eq!(law.s * law.s, 2.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn single_measured_step() {
        let p = ModelParams::atlas(3, 1.0, 1.0).unwrap();
        let cfg = SimConfig::new(0.2, 0.1).with_burn_in(0.1).with_y0(vec![0.0, 3.0, 1.0]);
        let stats =
            simulate_with_noise(&p, &cfg, &Registrations::default().with_perms(), &mut ZeroNoise).unwrap();
        assert_eq!(stats.meta.measured_steps, 1);
        let occ = occupation_fractions(&stats).unwrap();
        assert_eq!(occ[1], vec![1.0, 0.0, 0.0]);
        assert_eq!(occ[2], vec![0.0, 1.0, 0.0]);
        assert_eq!(occ[0], vec![0.0, 0.0, 1.0]);
        let perms = permutation_fractions(&stats).unwrap();
        for (perm, f) in perms {
            assert_eq!(f, if perm == vec![2, 3, 1] { 1.0 } else { 0.0 });
        }
        assert_eq!(crossover_counts(&stats), vec![0.0, 0.0]);
        // Weights measured at the start of the only measured step.
        let y = [0.3, 3.0, 1.0];
        let total: f64 = y.iter().map(|v: &f64| v.exp()).sum();
        let means = name_weight_means(&stats).unwrap();
        for (m, v) in means.iter().zip(y) {
            assert_relative_eq!(*m, v.exp() / total, max_relative = 1e-12);
        }
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn permutations_marginalize_to_occupation() {
        let p = ModelParams::atlas(4, 0.5, 1.0).unwrap();
        let stats = simulate(&p, &SimConfig::new(20.0, 0.01), &Registrations::default().with_perms()).unwrap();
        let occ = occupation_fractions(&stats).unwrap();
        let perms = permutation_fractions(&stats).unwrap();
        for i in 0..4 {
            for k in 0..4 {
                let marginal: f64 = perms.iter().filter(|(q, _)| q[k] == i + 1).map(|(_, f)| f).sum();
                assert_relative_eq!(marginal, occ[i][k], max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn survival_starts_at_one() {
        let p = ModelParams::atlas(3, 1.0, 1.0).unwrap();
        let stats = simulate(&p, &SimConfig::new(10.0, 0.01), &Registrations::default()).unwrap();
        let s = gap_survival(&stats, 1).unwrap();
        assert_relative_eq!(s[0].1, 1.0);
        assert!(s.windows(2).all(|w| w[1].1 <= w[0].1));
        assert!(gap_survival(&stats, 3).is_err());
    }
}
