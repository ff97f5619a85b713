use serde::Serialize;

use crate::error::{Error, Result};
use crate::portfolio::PortfolioRule;

/// Functionals of the ranked weight vector that can be time-averaged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Functional {
    /// `f(x) = sum_k x_k^p`.
    SumPower(f64),
}

impl Functional {
    pub fn eval(&self, ranked: &[f64]) -> f64 {
        match *self {
            Functional::SumPower(p) => ranked.iter().map(|x| x.powf(p)).sum(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Functional::SumPower(p) => format!("sum_power:{p}"),
        }
    }
}

/// Run description shared by every path merged into a [`PathStats`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Meta {
    pub n: usize,
    #[serde(rename = "T")]
    pub t_total: f64,
    pub dt: f64,
    pub burn_in: f64,
    pub seeds: Vec<u64>,
    pub paths: u64,
    pub steps: u64,
    pub measured_steps: u64,
}

impl Meta {
    /// Measured time per path.
    pub fn measured_time(&self) -> f64 {
        self.measured_steps as f64 * self.dt
    }

    /// Total number of measured steps over all paths.
    pub fn samples(&self) -> f64 {
        (self.paths * self.measured_steps) as f64
    }
}

/// Accumulators for one gap `Xi_k = Z_k - Z_{k+1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapAccum {
    /// Sum of the gap over measured steps.
    pub sum: f64,
    /// Half-width of the band used by the band local-time estimator.
    pub band_eps: f64,
    /// Steps with the gap below `band_eps`.
    pub band_count: u64,
    /// Upper edge of the histogram range `[0, hist_max]`.
    pub hist_max: f64,
    /// Equal-width bins followed by one overflow bin.
    pub hist: Vec<u64>,
    /// Accumulated discrete reflection (local time) at the boundary.
    pub local_time: f64,
}

impl GapAccum {
    pub fn new(band_eps: f64, hist_max: f64, bins: usize) -> Self {
        GapAccum {
            sum: 0.0,
            band_eps,
            band_count: 0,
            hist_max,
            hist: vec![0; bins + 1],
            local_time: 0.0,
        }
    }

    pub fn bins(&self) -> usize {
        self.hist.len() - 1
    }

    pub fn bin_width(&self) -> f64 {
        self.hist_max / self.bins() as f64
    }

    #[inline]
    pub(crate) fn record(&mut self, gap: f64) {
        self.sum += gap;
        if gap < self.band_eps {
            self.band_count += 1;
        }
        let bins = self.bins();
        let b = (gap / self.hist_max * bins as f64) as usize;
        self.hist[b.min(bins)] += 1;
    }
}

/// Running time average of a functional, with checkpoints for convergence
/// plots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalTrack {
    pub functional: Functional,
    /// Sum over measured steps.
    pub sum: f64,
    /// `(t, measured steps so far, sum so far)` at each sample time.
    pub checkpoints: Vec<(f64, u64, f64)>,
}

/// One sample of a wealth track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WealthSample {
    pub t: f64,
    pub log_wealth: f64,
    /// Integral of the growth rate from time 0.
    pub int_growth: f64,
    /// Integral of the excess growth rate from time 0.
    pub int_excess: f64,
    /// `log D_p(mu)` for diversity-weighted rules, else 0.
    pub log_diversity: f64,
}

/// Log-wealth and rate integrals of one portfolio rule, all from time 0
/// with a snapshot at the end of burn-in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WealthTrack {
    pub rule: PortfolioRule,
    pub log_wealth: f64,
    pub int_growth: f64,
    pub int_excess: f64,
    pub int_return: f64,
    pub int_variance: f64,
    pub log_wealth_burn: f64,
    pub int_growth_burn: f64,
    pub int_excess_burn: f64,
    pub int_return_burn: f64,
    pub int_variance_burn: f64,
    pub log_diversity_start: f64,
    pub log_diversity_end: f64,
    pub samples: Vec<WealthSample>,
}

impl WealthTrack {
    pub fn new(rule: PortfolioRule) -> Self {
        WealthTrack {
            rule,
            log_wealth: 0.0,
            int_growth: 0.0,
            int_excess: 0.0,
            int_return: 0.0,
            int_variance: 0.0,
            log_wealth_burn: 0.0,
            int_growth_burn: 0.0,
            int_excess_burn: 0.0,
            int_return_burn: 0.0,
            int_variance_burn: 0.0,
            log_diversity_start: 0.0,
            log_diversity_end: 0.0,
            samples: Vec::new(),
        }
    }

    pub(crate) fn snapshot_burn(&mut self) {
        self.log_wealth_burn = self.log_wealth;
        self.int_growth_burn = self.int_growth;
        self.int_excess_burn = self.int_excess;
        self.int_return_burn = self.int_return;
        self.int_variance_burn = self.int_variance;
    }
}

/// Everything accumulated along one path, or summed over several paths of
/// the same configuration.
///
/// All fields are sums over paths; estimators in [`crate::rankstats`] and
/// [`crate::portfolio`] divide by [`Meta::paths`] and the measured step
/// count. Integer counters make bookkeeping identities exact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathStats {
    pub meta: Meta,
    /// Steps name `i` spent at rank `k`, stored at `i * n + k`.
    pub occupation: Option<Vec<u64>>,
    /// Steps spent in each ordering, indexed by the Lehmer code of `perm`.
    pub perm_counts: Option<Vec<u64>>,
    pub gaps: Vec<GapAccum>,
    /// Per boundary, the number of names that crossed it downward.
    pub crossovers: Vec<u64>,
    pub name_weight_sums: Vec<f64>,
    pub ranked_weight_sums: Vec<f64>,
    pub functionals: Vec<FunctionalTrack>,
    pub wealth: Vec<WealthTrack>,
    /// Log-capitalizations at the end of burn-in.
    pub y_burn: Vec<f64>,
    /// Log-capitalizations at the horizon.
    pub y_final: Vec<f64>,
}

impl PathStats {
    pub fn n(&self) -> usize {
        self.meta.n
    }

    /// Adds another path's statistics.
    ///
    /// Integer fields merge exactly; floating sums merge by addition, so the
    /// result depends on merge order only through round-off.
    pub fn merge(&mut self, other: &PathStats) -> Result<()> {
        let (a, b) = (&self.meta, &other.meta);
        if a.n != b.n
            || a.t_total != b.t_total
            || a.dt != b.dt
            || a.burn_in != b.burn_in
            || a.measured_steps != b.measured_steps
            || self.gaps.len() != other.gaps.len()
            || self.functionals.len() != other.functionals.len()
            || self.wealth.len() != other.wealth.len()
            || self.occupation.is_some() != other.occupation.is_some()
            || self.perm_counts.is_some() != other.perm_counts.is_some()
        {
            return Err(Error::InvalidInput("cannot merge statistics of different runs".into()));
        }
        self.meta.seeds.extend_from_slice(&other.meta.seeds);
        self.meta.paths += other.meta.paths;

        fn add_u(a: &mut [u64], b: &[u64]) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        fn add_f(a: &mut [f64], b: &[f64]) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }

        if let (Some(x), Some(y)) = (&mut self.occupation, &other.occupation) {
            add_u(x, y);
        }
        if let (Some(x), Some(y)) = (&mut self.perm_counts, &other.perm_counts) {
            add_u(x, y);
        }
        for (x, y) in self.gaps.iter_mut().zip(&other.gaps) {
            x.sum += y.sum;
            x.band_count += y.band_count;
            x.local_time += y.local_time;
            add_u(&mut x.hist, &y.hist);
        }
        add_u(&mut self.crossovers, &other.crossovers);
        add_f(&mut self.name_weight_sums, &other.name_weight_sums);
        add_f(&mut self.ranked_weight_sums, &other.ranked_weight_sums);
        for (x, y) in self.functionals.iter_mut().zip(&other.functionals) {
            x.sum += y.sum;
            for (c, d) in x.checkpoints.iter_mut().zip(&y.checkpoints) {
                c.1 += d.1;
                c.2 += d.2;
            }
        }
        for (x, y) in self.wealth.iter_mut().zip(&other.wealth) {
            x.log_wealth += y.log_wealth;
            x.int_growth += y.int_growth;
            x.int_excess += y.int_excess;
            x.int_return += y.int_return;
            x.int_variance += y.int_variance;
            x.log_wealth_burn += y.log_wealth_burn;
            x.int_growth_burn += y.int_growth_burn;
            x.int_excess_burn += y.int_excess_burn;
            x.int_return_burn += y.int_return_burn;
            x.int_variance_burn += y.int_variance_burn;
            x.log_diversity_start += y.log_diversity_start;
            x.log_diversity_end += y.log_diversity_end;
            for (s, u) in x.samples.iter_mut().zip(&y.samples) {
                s.log_wealth += u.log_wealth;
                s.int_growth += u.int_growth;
                s.int_excess += u.int_excess;
                s.log_diversity += u.log_diversity;
            }
        }
        add_f(&mut self.y_burn, &other.y_burn);
        add_f(&mut self.y_final, &other.y_final);
        Ok(())
    }

    /// Wealth track of `rule`, if registered.
    pub fn wealth_of(&self, rule: PortfolioRule) -> Option<&WealthTrack> {
        self.wealth.iter().find(|w| w.rule == rule)
    }
}

/// Lehmer-code index of a permutation of `0..n`, in `0..n!`.
pub fn perm_index(perm: &[usize]) -> usize {
    let n = perm.len();
    let mut idx = 0;
    for i in 0..n {
        let smaller = perm[i + 1..].iter().filter(|&&x| x < perm[i]).count();
        idx = idx * (n - i) + smaller;
    }
    idx
}

/// Inverse of [`perm_index`].
pub fn perm_from_index(mut idx: usize, n: usize) -> Vec<usize> {
    let mut digits = vec![0; n];
    for i in (0..n).rev() {
        let base = n - i;
        digits[i] = idx % base;
        idx /= base;
    }
    let mut pool: Vec<usize> = (0..n).collect();
    digits.into_iter().map(|d| pool.remove(d)).collect()
}

pub fn factorial(n: usize) -> usize {
    (1..=n).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lehmer_round_trip() {
        for n in 1..=5 {
            let mut seen = vec![false; factorial(n)];
            for (idx, s) in seen.iter_mut().enumerate() {
                let p = perm_from_index(idx, n);
                assert_eq!(perm_index(&p), idx);
                *s = true;
            }
            assert!(seen.iter().all(|&s| s));
        }
        assert_eq!(perm_index(&[0, 1, 2]), 0);
        assert_eq!(perm_index(&[2, 1, 0]), 5);
    }

    #[test]
    fn histogram_overflow() {
        let mut g = GapAccum::new(0.1, 1.0, 10);
        g.record(0.05);
        g.record(0.95);
        g.record(1.0);
        g.record(7.0);
        assert_eq!(g.hist[0], 1);
        assert_eq!(g.hist[9], 1);
        assert_eq!(g.hist[10], 2);
        assert_eq!(g.band_count, 1);
    }
}
