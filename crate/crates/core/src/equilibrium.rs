//! Certainty-equivalent ranked capital distribution.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::rankstats::gap_laws;

/// How a [`CEWeights`] vector was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CeSource {
    /// Gaps replaced by their exact means.
    Exact,
    /// Power law `k^-alpha`.
    ApproxPower,
    /// Power law with exponential cut-off `k^-(alpha+beta) e^(-2 beta k)`.
    ApproxPowerExp,
}

/// Ranked weights `m_1 >= ... >= m_n` with the mean gaps behind them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CEWeights {
    pub m: Vec<f64>,
    pub rho: Vec<f64>,
    pub source: CeSource,
}

impl CEWeights {
    pub fn n(&self) -> usize {
        self.m.len()
    }

    pub fn capital_curve(&self) -> Result<Vec<CurvePoint>> {
        capital_curve(&self.m)
    }
}

/// Mean gaps `rho_k = -(sigma_k^2 + sigma_{k+1}^2) / (4 (g_1 + ... + g_k))`.
pub fn ce_rho(params: &ModelParams) -> Result<Vec<f64>> {
    params.validate().into_result()?;
    Ok(gap_laws(params).into_iter().map(|l| l.rho).collect())
}

/// Certainty-equivalent weights of a valid model.
pub fn ce_weights(params: &ModelParams) -> Result<CEWeights> {
    Ok(ce_weights_from_rho(&ce_rho(params)?))
}

/// Weights with `log(m_k / m_{k+1}) = rho_k`, normalized in log space.
pub fn ce_weights_from_rho(rho: &[f64]) -> CEWeights {
    let n = rho.len() + 1;
    let mut expo = vec![0.0; n];
    for k in (0..n - 1).rev() {
        expo[k] = expo[k + 1] + rho[k];
    }
    CEWeights { m: normalize_log(&expo), rho: rho.to_vec(), source: CeSource::Exact }
}

fn normalize_log(logw: &[f64]) -> Vec<f64> {
    let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Closed-form approximation to the generalized-Atlas weights.
///
/// `beta = 0` gives `k^-alpha / sum_j j^-alpha`; `beta > 0` gives
/// `k^-(alpha+beta) e^(-2 beta k)` normalized the same way. Sums run over
/// `j <= n` only. `rho` holds `2 beta + (alpha + beta) / k`.
pub fn ce_approx(n: usize, alpha: f64, beta: f64) -> Result<CEWeights> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("need n >= 2, got {n}")));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidInput(format!("alpha = {alpha} must be positive")));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidInput(format!("beta = {beta} must be nonnegative")));
    }
    let rho = (1..n).map(|k| 2.0 * beta + (alpha + beta) / k as f64).collect();
    let (m, source) = if beta == 0.0 {
        let w: Vec<f64> = (1..=n).map(|k| (k as f64).powf(-alpha)).collect();
        let total: f64 = w.iter().sum();
        (w.into_iter().map(|x| x / total).collect(), CeSource::ApproxPower)
    } else {
        let logw: Vec<f64> = (1..=n)
            .map(|k| -(alpha + beta) * (k as f64).ln() - 2.0 * beta * k as f64)
            .collect();
        (normalize_log(&logw), CeSource::ApproxPowerExp)
    };
    Ok(CEWeights { m, rho, source })
}

/// One point of a log-log capital distribution curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub rank: usize,
    pub log_rank: f64,
    pub weight: f64,
    pub log_weight: f64,
}

/// `(log k, log m_k)` in rank order.
pub fn capital_curve(m: &[f64]) -> Result<Vec<CurvePoint>> {
    if m.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::InvalidInput("capital curve needs positive weights".into()));
    }
    Ok(m.iter()
        .enumerate()
        .map(|(k, &w)| CurvePoint {
            rank: k + 1,
            log_rank: ((k + 1) as f64).ln(),
            weight: w,
            log_weight: w.ln(),
        })
        .collect())
}
