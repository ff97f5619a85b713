use serde::Serialize;

use super::PortfolioRule;
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Tolerance on the unit sum of a supplied ranked weight vector.
const M_SUM_TOL: f64 = 1e-9;

/// Long-term growth rate `G` and excess growth rate `G_*` of `rule`, with
/// the expected ranked weights replaced by the constants `m`.
pub fn analytic_growth(rule: PortfolioRule, params: &ModelParams, m: &[f64]) -> Result<(f64, f64)> {
    rule.validate()?;
    let n = params.n();
    if m.len() != n {
        return Err(Error::InvalidInput(format!("ranked weights have {} entries, expected {n}", m.len())));
    }
    if m.iter().any(|x| !(*x > 0.0)) || (m.iter().sum::<f64>() - 1.0).abs() > M_SUM_TOL {
        return Err(Error::InvalidInput("ranked weights must be positive and sum to 1".into()));
    }
    let g = &params.g;
    let gamma = params.gamma;
    let var = params.variances();
    let nf = n as f64;
    let last = n - 1;

    let out = match rule {
        PortfolioRule::Market => {
            let gs = -g.iter().zip(m).map(|(a, b)| a * b).sum::<f64>();
            (gamma, gs)
        }
        PortfolioRule::Equal => {
            let gs = (nf - 1.0) / (2.0 * nf * nf) * var.iter().sum::<f64>();
            (gamma + gs, gs)
        }
        PortfolioRule::Diversity(p) => {
            let mp: Vec<f64> = m.iter().map(|x| x.powf(p)).collect();
            let total: f64 = mp.iter().sum();
            let gs = -g.iter().zip(&mp).map(|(a, b)| a * b).sum::<f64>() / (p * total);
            (gamma + (1.0 - p) * gs, gs)
        }
        PortfolioRule::RestrictedMarket => {
            let denom = 1.0 - m[last];
            let inner: f64 = g[..last].iter().zip(m).map(|(a, b)| a * b).sum();
            let gs = -(g[last] * m[last - 1] + inner) / denom;
            (gamma - g[last] * m[last - 1] / denom, gs)
        }
        PortfolioRule::RestrictedEqual => {
            let gs = (nf - 2.0) / (2.0 * (nf - 1.0).powi(2)) * var[..last].iter().sum::<f64>();
            (gamma - g[last] / (nf - 1.0) + gs, gs)
        }
        PortfolioRule::RestrictedDiversity(p) => {
            let mp: Vec<f64> = m.iter().map(|x| x.powf(p)).collect();
            let total: f64 = mp[..last].iter().sum();
            let inner: f64 = g[..last].iter().zip(&mp).map(|(a, b)| a * b).sum();
            let edge = g[last] * mp[last - 1];
            let gs = -(edge + inner) / (p * total);
            let big = gamma - (edge + (1.0 - p) * inner) / (p * total);
            (big, gs)
        }
        PortfolioRule::AtlasStar | PortfolioRule::Efficient(_) => {
            return Err(Error::Unsupported(format!("no closed-form growth rate for {rule}")))
        }
    };
    Ok(out)
}

/// Large-market inputs: `alpha = sigma^2 / 2g`, `beta = s^2 / 4g` and the
/// Atlas growth rate `g` that scales the result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticInputs {
    pub alpha: f64,
    pub beta: f64,
    pub g: f64,
}

/// Large-market limits `(Gamma, Gamma_*)` of the growth and excess growth
/// rates for generalized Atlas models. Infinite limits are returned as
/// `f64::INFINITY`. The boundary `alpha = 1` (or `alpha p = 1`) falls in
/// the lower branch.
pub fn asymptotic_growth(rule: PortfolioRule, inputs: AsymptoticInputs) -> Result<(f64, f64)> {
    rule.validate()?;
    let AsymptoticInputs { alpha, beta, g } = inputs;
    if !(alpha > 0.0 && alpha.is_finite()) || !(beta >= 0.0 && beta.is_finite()) || !(g > 0.0) {
        return Err(Error::InvalidInput(format!(
            "need alpha > 0, beta >= 0, g > 0; got alpha = {alpha}, beta = {beta}, g = {g}"
        )));
    }
    let out = if beta > 0.0 {
        match rule {
            PortfolioRule::Market | PortfolioRule::RestrictedMarket => (g, g),
            PortfolioRule::Diversity(p) | PortfolioRule::RestrictedDiversity(p) => (g / p, g / p),
            PortfolioRule::Equal | PortfolioRule::RestrictedEqual => (f64::INFINITY, f64::INFINITY),
            _ => return Err(unsupported(rule)),
        }
    } else {
        let low = alpha * g;
        match rule {
            PortfolioRule::Market => (g, if alpha > 1.0 { g } else { low }),
            PortfolioRule::Equal => (g * (1.0 + alpha), low),
            PortfolioRule::Diversity(p) => {
                if alpha * p > 1.0 {
                    (g / p, g / p)
                } else {
                    (g + (1.0 - p) * low, low)
                }
            }
            PortfolioRule::RestrictedMarket => {
                let v = if alpha > 1.0 { g } else { low };
                (v, v)
            }
            PortfolioRule::RestrictedEqual => (low, low),
            PortfolioRule::RestrictedDiversity(p) => {
                let v = if alpha * p > 1.0 { g / p } else { low };
                (v, v)
            }
            _ => return Err(unsupported(rule)),
        }
    };
    Ok(out)
}

fn unsupported(rule: PortfolioRule) -> Error {
    Error::Unsupported(format!("no large-market limit for {rule}"))
}
