//! Parameter estimation and time-unit conversion.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Least-squares fit of `sigma_k^2 = sigma^2 + k s^2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceFit {
    pub sigma2: f64,
    pub s2: f64,
    pub r_squared: f64,
    /// Observed minus fitted variance, in input order.
    pub residuals: Vec<f64>,
    /// The fitted slope is negative, which the generalized model forbids.
    pub negative_slope: bool,
}

/// Ordinary least squares of variance on rank over `(k, sigma_k^2)` pairs.
pub fn fit_linear_variance(points: &[(f64, f64)]) -> Result<VarianceFit> {
    if points.len() < 2 {
        return Err(Error::InvalidInput("need at least two (rank, variance) points".into()));
    }
    if points.iter().any(|&(k, v)| !k.is_finite() || !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidInput("ranks must be finite and variances positive".into()));
    }
    let m = points.len() as f64;
    let mk = points.iter().map(|p| p.0).sum::<f64>() / m;
    let mv = points.iter().map(|p| p.1).sum::<f64>() / m;
    let skk: f64 = points.iter().map(|p| (p.0 - mk).powi(2)).sum();
    if skk == 0.0 {
        return Err(Error::InvalidInput("need at least two distinct ranks".into()));
    }
    let skv: f64 = points.iter().map(|p| (p.0 - mk) * (p.1 - mv)).sum();
    let s2 = skv / skk;
    let sigma2 = mv - s2 * mk;
    let residuals: Vec<f64> = points.iter().map(|&(k, v)| v - (sigma2 + s2 * k)).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mv).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(VarianceFit { sigma2, s2, r_squared, residuals, negative_slope: s2 < 0.0 })
}

/// Atlas growth parameter from the market's long-run excess growth rate,
/// which approaches `g` in large markets.
pub fn estimate_g(excess_growth: f64) -> Result<f64> {
    if !(excess_growth > 0.0 && excess_growth.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "excess growth rate {excess_growth} must be positive"
        )));
    }
    Ok(excess_growth)
}

/// Per-step view of parameters quoted per year.
///
/// The annual parameters are kept, so converting back is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct PerStepParams {
    annual: ModelParams,
    steps_per_year: u32,
}

impl PerStepParams {
    pub fn steps_per_year(&self) -> u32 {
        self.steps_per_year
    }

    /// Drifts divided by the step count, volatilities by its square root.
    pub fn per_step(&self) -> ModelParams {
        let s = self.steps_per_year as f64;
        let root = s.sqrt();
        ModelParams::new_unchecked(
            self.annual.gamma / s,
            self.annual.g.iter().map(|g| g / s).collect(),
            self.annual.sigma.iter().map(|v| v / root).collect(),
        )
    }

    pub fn annual(&self) -> &ModelParams {
        &self.annual
    }

    pub fn into_annual(self) -> ModelParams {
        self.annual
    }
}

pub fn annualize(params: &ModelParams, steps_per_year: u32) -> Result<PerStepParams> {
    if steps_per_year == 0 {
        return Err(Error::InvalidInput("steps per year must be at least 1".into()));
    }
    Ok(PerStepParams { annual: params.clone(), steps_per_year })
}

/// Annual parameters from per-step values; the inverse of
/// [`PerStepParams::per_step`] up to round-off.
pub fn de_annualize(per_step: &ModelParams, steps_per_year: u32) -> Result<ModelParams> {
    if steps_per_year == 0 {
        return Err(Error::InvalidInput("steps per year must be at least 1".into()));
    }
    let s = steps_per_year as f64;
    let root = s.sqrt();
    Ok(ModelParams::new_unchecked(
        per_step.gamma * s,
        per_step.g.iter().map(|g| g * s).collect(),
        per_step.sigma.iter().map(|v| v * root).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_line() {
        let pts: Vec<(f64, f64)> = (1..=100).map(|k| (k as f64, 0.075 + 6.0e-5 * k as f64)).collect();
        let fit = fit_linear_variance(&pts).unwrap();
        assert!((fit.sigma2 - 0.075).abs() < 1e-12);
        assert!((fit.s2 - 6.0e-5).abs() < 1e-12);
        assert!(!fit.negative_slope);
        assert_relative_eq!(fit.r_squared, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn constant_data() {
        let pts: Vec<(f64, f64)> = (1..=10).map(|k| (k as f64, 0.3)).collect();
        let fit = fit_linear_variance(&pts).unwrap();
        assert_relative_eq!(fit.sigma2, 0.3, max_relative = 1e-14);
        assert!(fit.s2.abs() < 1e-15);
    }

    #[test]
    fn negative_slope_flagged() {
        let fit = fit_linear_variance(&[(1.0, 0.5), (2.0, 0.4), (3.0, 0.3)]).unwrap();
        assert!(fit.negative_slope);
    }

    #[test]
    fn fit_errors() {
        assert!(fit_linear_variance(&[(1.0, 0.5)]).is_err());
        assert!(fit_linear_variance(&[(1.0, 0.5), (1.0, 0.6)]).is_err());
        assert!(fit_linear_variance(&[(1.0, 0.5), (2.0, -0.6)]).is_err());
    }

    #[test]
    fn g_estimate() {
        assert_eq!(estimate_g(0.044).unwrap(), 0.044);
        assert_eq!(estimate_g(0.02).unwrap(), 0.02);
        assert!(estimate_g(0.0).is_err());
    }

    #[test]
    fn annualize_examples() {
        let p = ModelParams::generalized_atlas(3, 0.044, 0.075, 0.0).unwrap();
        let view = annualize(&p, 250).unwrap();
        let step = view.per_step();
        assert_relative_eq!(step.gamma, 1.76e-4, max_relative = 1e-14);
        assert_relative_eq!(step.sigma[0].powi(2), 3.0e-4, max_relative = 1e-12);
        assert_eq!(view.annual(), &p);
        assert_eq!(annualize(&p, 1).unwrap().per_step(), p);
        let back = de_annualize(&step, 250).unwrap();
        assert_relative_eq!(back.gamma, p.gamma, max_relative = 1e-15);
        assert!(annualize(&p, 0).is_err());
    }
}
