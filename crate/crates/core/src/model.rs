//! Model parameters for first-order rank-based markets and the ranking
//! machinery shared by every other module.
//!
//! A first-order model assigns growth rate `gamma + g[k]` and volatility
//! `sigma[k]` to whichever stock currently holds rank `k` (largest
//! capitalization first). Vectors here are indexed by rank with position
//! `k - 1` holding rank `k`; names stored in a [`Ranking`] are zero-based
//! stock indices. Files and JSON written by [`crate::output`] use 1-based
//! ranks and names.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance on the zero-sum condition for the growth offsets.
pub const ZERO_SUM_RTOL: f64 = 1e-12;

/// Relative tolerance used when recognising a linear variance profile.
pub const VARIANCE_FIT_RTOL: f64 = 1e-9;

/// Rank-dependent coefficients `(gamma, g_1..g_n, sigma_1..sigma_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub gamma: f64,
    pub g: Vec<f64>,
    pub sigma: Vec<f64>,
}

/// One failed validity condition.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    TooFewStocks { n: usize },
    LengthMismatch { g: usize, sigma: usize },
    NonFinite,
    NonPositiveSigma { rank: usize, value: f64 },
    PartialSumNotNegative { rank: usize, sum: f64 },
    TotalSumNonZero { sum: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooFewStocks { n } => write!(f, "n = {n}, need at least 2 stocks"),
            Violation::LengthMismatch { g, sigma } => {
                write!(f, "g has {g} entries but sigma has {sigma}")
            }
            Violation::NonFinite => write!(f, "parameters contain non-finite values"),
            Violation::NonPositiveSigma { rank, value } => {
                write!(f, "sigma_{rank} = {value} is not positive")
            }
            Violation::PartialSumNotNegative { rank: 1, sum } => write!(f, "g_1 = {sum} is not negative"),
            Violation::PartialSumNotNegative { rank, sum } => {
                write!(f, "g_1 + ... + g_{rank} = {sum} is not negative")
            }
            Violation::TotalSumNonZero { sum } => {
                write!(f, "g_1 + ... + g_n = {sum} is not zero")
            }
        }
    }
}

/// Outcome of [`ModelParams::validate`]: empty means the parameters pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidityReport {
    pub violations: Vec<Violation>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidParams(self.to_string()))
        }
    }
}

impl fmt::Display for ValidityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// `(g, sigma^2, s^2)` recovered from a generalized Atlas parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtlasShape {
    pub g: f64,
    pub sigma2: f64,
    pub s2: f64,
}

impl AtlasShape {
    /// `alpha = sigma^2 / (2 g)`.
    pub fn alpha(&self) -> f64 {
        self.sigma2 / (2.0 * self.g)
    }

    /// `beta = s^2 / (4 g)`.
    pub fn beta(&self) -> f64 {
        self.s2 / (4.0 * self.g)
    }
}

impl ModelParams {
    /// Builds and validates a parameter set.
    pub fn new(gamma: f64, g: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        let params = Self::new_unchecked(gamma, g, sigma);
        params.validate().into_result()?;
        Ok(params)
    }

    /// Builds a parameter set without checking the stability conditions.
    ///
    /// Intended for drift-free or otherwise degenerate test models; the
    /// engine only accepts these through [`crate::engine::simulate_with_noise`].
    pub fn new_unchecked(gamma: f64, g: Vec<f64>, sigma: Vec<f64>) -> Self {
        Self { gamma, g, sigma }
    }

    /// Atlas model: `gamma = g`, `g_k = -g` for `k < n`, `g_n = (n-1) g`,
    /// constant volatility.
    pub fn atlas(n: usize, g: f64, sigma: f64) -> Result<Self> {
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::InvalidParams(format!("atlas growth rate g = {g} must be positive")));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParams(format!("atlas volatility {sigma} must be positive")));
        }
        Self::new(g, atlas_offsets(n, g), vec![sigma; n])
    }

    /// Generalized Atlas model with variances `sigma_k^2 = sigma2 + k * s2`.
    pub fn generalized_atlas(n: usize, g: f64, sigma2: f64, s2: f64) -> Result<Self> {
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::InvalidParams(format!("atlas growth rate g = {g} must be positive")));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidParams(format!("sigma2 = {sigma2} must be positive")));
        }
        if !(s2 >= 0.0) || !s2.is_finite() {
            return Err(Error::InvalidParams(format!("s2 = {s2} must be non-negative")));
        }
        let sigma = (1..=n).map(|k| (sigma2 + k as f64 * s2).sqrt()).collect();
        Self::new(g, atlas_offsets(n, g), sigma)
    }

    pub fn n(&self) -> usize {
        self.g.len()
    }

    /// Variances `sigma_k^2` by rank.
    pub fn variances(&self) -> Vec<f64> {
        self.sigma.iter().map(|s| s * s).collect()
    }

    /// Partial sums `g_1 + ... + g_k` for `k = 1..n` (compensated).
    pub fn partial_sums(&self) -> Vec<f64> {
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        self.g
            .iter()
            .map(|&x| {
                let t = sum + x;
                if sum.abs() >= x.abs() {
                    comp += (sum - t) + x;
                } else {
                    comp += (x - t) + sum;
                }
                sum = t;
                sum + comp
            })
            .collect()
    }

    /// Checks the stability conditions and reports every violation found.
    pub fn validate(&self) -> ValidityReport {
        let mut violations = Vec::new();
        let n = self.g.len();
        if self.sigma.len() != n {
            violations.push(Violation::LengthMismatch { g: n, sigma: self.sigma.len() });
            return ValidityReport { violations };
        }
        if n < 2 {
            violations.push(Violation::TooFewStocks { n });
        }
        if !self.gamma.is_finite()
            || self.g.iter().any(|x| !x.is_finite())
            || self.sigma.iter().any(|x| !x.is_finite())
        {
            violations.push(Violation::NonFinite);
            return ValidityReport { violations };
        }
        for (k, &s) in self.sigma.iter().enumerate() {
            if s <= 0.0 {
                violations.push(Violation::NonPositiveSigma { rank: k + 1, value: s });
            }
        }
        if n >= 2 {
            let sums = self.partial_sums();
            for (k, &sum) in sums[..n - 1].iter().enumerate() {
                if sum >= 0.0 {
                    violations.push(Violation::PartialSumNotNegative { rank: k + 1, sum });
                }
            }
            let total = sums[n - 1];
            let scale = self.g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if total.abs() > ZERO_SUM_RTOL * scale {
                violations.push(Violation::TotalSumNonZero { sum: total });
            }
        }
        ValidityReport { violations }
    }

    /// Recognises a generalized Atlas parameter set.
    ///
    /// Growth offsets must match the Atlas pattern up to [`ZERO_SUM_RTOL`],
    /// and the variances must lie on a line in `k` up to
    /// [`VARIANCE_FIT_RTOL`]. Anything else is rejected; fitting noisy
    /// variance data belongs in [`crate::calibrate`].
    pub fn atlas_shape(&self) -> Result<AtlasShape> {
        let n = self.n();
        if n < 2 || self.sigma.len() != n {
            return Err(Error::InvalidParams("not an Atlas-shaped parameter set".into()));
        }
        let g = -self.g[0];
        let close = |a: f64, b: f64| (a - b).abs() <= ZERO_SUM_RTOL * a.abs().max(b.abs());
        let offsets_ok = g > 0.0
            && close(self.gamma, g)
            && self.g[..n - 1].iter().all(|&x| close(x, -g))
            && close(self.g[n - 1], (n - 1) as f64 * g);
        if !offsets_ok {
            return Err(Error::InvalidParams(
                "growth offsets do not follow the Atlas pattern".into(),
            ));
        }
        let var = self.variances();
        let slope = if n > 1 { (var[n - 1] - var[0]) / (n - 1) as f64 } else { 0.0 };
        let intercept = var[0] - slope;
        let fits = var.iter().enumerate().all(|(i, &v)| {
            let fitted = intercept + (i + 1) as f64 * slope;
            (v - fitted).abs() <= VARIANCE_FIT_RTOL * v.abs()
        });
        if !fits {
            return Err(Error::InvalidParams("variances are not linear in rank".into()));
        }
        let tol = VARIANCE_FIT_RTOL * var.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if slope < -tol || intercept <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "fitted variance profile sigma2 = {intercept}, s2 = {slope} is not admissible"
            )));
        }
        Ok(AtlasShape { g, sigma2: intercept, s2: slope.max(0.0) })
    }

    /// `(alpha, beta)` of a generalized Atlas parameter set.
    pub fn alpha_beta(&self) -> Result<(f64, f64)> {
        let shape = self.atlas_shape()?;
        Ok((shape.alpha(), shape.beta()))
    }
}

fn atlas_offsets(n: usize, g: f64) -> Vec<f64> {
    let mut offsets = vec![-g; n];
    if let Some(last) = offsets.last_mut() {
        *last = (n as f64 - 1.0) * g;
    }
    offsets
}

/// Current ordering of the stocks by capitalization.
///
/// `perm[k]` is the (zero-based) name of the stock at rank `k + 1`;
/// `rank_of[i]` is the zero-based rank of name `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ranking {
    perm: Vec<usize>,
    rank_of: Vec<usize>,
}

#[inline]
fn rank_order(y: &[f64], a: usize, b: usize) -> Ordering {
    // Larger value first; ties go to the lower index.
    match y[b].partial_cmp(&y[a]) {
        Some(Ordering::Equal) | None => a.cmp(&b),
        Some(ord) => ord,
    }
}

/// Ranks a log-capitalization vector, resolving ties by lowest index.
pub fn rank(y: &[f64]) -> Result<Ranking> {
    if y.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("cannot rank a vector containing NaN".into()));
    }
    let mut perm: Vec<usize> = (0..y.len()).collect();
    perm.sort_by(|&a, &b| rank_order(y, a, b));
    let mut rank_of = vec![0; y.len()];
    for (k, &i) in perm.iter().enumerate() {
        rank_of[i] = k;
    }
    Ok(Ranking { perm, rank_of })
}

impl Ranking {
    pub fn n(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn rank_of(&self) -> &[usize] {
        &self.rank_of
    }

    /// Name at zero-based rank `k`.
    #[inline]
    pub fn name_at(&self, k: usize) -> usize {
        self.perm[k]
    }

    /// Name of the smallest stock (the Atlas stock).
    #[inline]
    pub fn smallest(&self) -> usize {
        self.perm[self.perm.len() - 1]
    }

    /// 1-based permutation, as written to output files.
    pub fn perm_one_based(&self) -> Vec<usize> {
        self.perm.iter().map(|i| i + 1).collect()
    }

    /// Re-ranks in place after `y` changed, starting from the current order.
    ///
    /// Insertion sort on the previous permutation: consecutive states of a
    /// path are nearly sorted, so this is close to linear per step. The
    /// result is identical to [`rank`] since the comparison is a total order.
    pub fn update(&mut self, y: &[f64]) {
        let perm = &mut self.perm;
        for j in 1..perm.len() {
            let cur = perm[j];
            let mut k = j;
            while k > 0 && rank_order(y, cur, perm[k - 1]) == Ordering::Less {
                perm[k] = perm[k - 1];
                k -= 1;
            }
            perm[k] = cur;
        }
        for (k, &i) in perm.iter().enumerate() {
            self.rank_of[i] = k;
        }
    }
}
