//! Portfolio rules, their per-step wealth dynamics, and their long-term
//! growth rates (closed-form, large-market asymptotic and empirical).

mod growth;
mod report;

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::engine::MarketState;
use crate::error::{Error, Result};
use crate::model::{ModelParams, Ranking};

pub use growth::{analytic_growth, asymptotic_growth, AsymptoticInputs};
pub use report::{
    empirical_growth, growth_report, master_identity_residual, optimal_growth_bound_check, GrowthReport,
    MasterIdentityReport, MSource, OptimalityReport, RuleGrowth,
};

/// Tolerance on the weight-sum invariant.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A rank-based portfolio rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PortfolioRule {
    /// Capitalization weights.
    Market,
    /// `1/n` in every stock.
    Equal,
    /// Weights proportional to `mu_i^p`.
    Diversity(f64),
    /// Market weights renormalized over all but the smallest stock.
    RestrictedMarket,
    /// `1/(n-1)` in all but the smallest stock.
    RestrictedEqual,
    /// Diversity weights renormalized over all but the smallest stock.
    RestrictedDiversity(f64),
    /// Everything in the current smallest stock.
    AtlasStar,
    /// Frontier mix `lambda/n + (1-lambda) * inverse-variance weight` by rank.
    Efficient(f64),
}

impl PortfolioRule {
    /// Checks the rule's own parameter.
    ///
    /// Diversity exponents are accepted on `(0, 1]`; `p = 1` reproduces the
    /// market (or restricted market) rule.
    pub fn validate(&self) -> Result<()> {
        match *self {
            PortfolioRule::Diversity(p) | PortfolioRule::RestrictedDiversity(p) => {
                if !(p > 0.0 && p <= 1.0) {
                    return Err(Error::InvalidInput(format!(
                        "diversity exponent p = {p} must lie in (0, 1]"
                    )));
                }
            }
            PortfolioRule::Efficient(lambda) if !(0.0..=1.0).contains(&lambda) => {
                return Err(Error::InvalidInput(format!(
                    "frontier mix lambda = {lambda} must lie in [0, 1]"
                )));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn is_restricted(&self) -> bool {
        matches!(
            self,
            PortfolioRule::RestrictedMarket
                | PortfolioRule::RestrictedEqual
                | PortfolioRule::RestrictedDiversity(_)
        )
    }

    /// The eight kinds with representative parameters, used for tables.
    pub fn all_kinds(p: f64, lambda: f64) -> [PortfolioRule; 8] {
        [
            PortfolioRule::Market,
            PortfolioRule::Equal,
            PortfolioRule::Diversity(p),
            PortfolioRule::RestrictedMarket,
            PortfolioRule::RestrictedEqual,
            PortfolioRule::RestrictedDiversity(p),
            PortfolioRule::AtlasStar,
            PortfolioRule::Efficient(lambda),
        ]
    }
}

impl fmt::Display for PortfolioRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PortfolioRule::Market => write!(f, "market"),
            PortfolioRule::Equal => write!(f, "equal"),
            PortfolioRule::Diversity(p) => write!(f, "diversity:{p}"),
            PortfolioRule::RestrictedMarket => write!(f, "restricted_market"),
            PortfolioRule::RestrictedEqual => write!(f, "restricted_equal"),
            PortfolioRule::RestrictedDiversity(p) => write!(f, "restricted_diversity:{p}"),
            PortfolioRule::AtlasStar => write!(f, "atlas_star"),
            PortfolioRule::Efficient(l) => write!(f, "efficient:{l}"),
        }
    }
}

impl Serialize for PortfolioRule {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl FromStr for PortfolioRule {
    type Err = Error;

    /// Parses `market`, `equal`, `diversity:P`, `restricted_market`,
    /// `restricted_equal`, `restricted_diversity:P`, `atlas_star`,
    /// `efficient:L`. Hyphens are accepted in place of underscores.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().replace('-', "_");
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s.as_str(), None),
        };
        let num = |what: &str| -> Result<f64> {
            arg.ok_or_else(|| Error::InvalidInput(format!("rule {kind} needs a {what} argument")))?
                .parse::<f64>()
                .map_err(|e| Error::InvalidInput(format!("bad {what} for {kind}: {e}")))
        };
        let rule = match kind {
            "market" => PortfolioRule::Market,
            "equal" => PortfolioRule::Equal,
            "diversity" => PortfolioRule::Diversity(num("p")?),
            "restricted_market" => PortfolioRule::RestrictedMarket,
            "restricted_equal" => PortfolioRule::RestrictedEqual,
            "restricted_diversity" => PortfolioRule::RestrictedDiversity(num("p")?),
            "atlas_star" => PortfolioRule::AtlasStar,
            "efficient" => PortfolioRule::Efficient(num("lambda")?),
            other => return Err(Error::InvalidInput(format!("unknown portfolio rule '{other}'"))),
        };
        rule.validate()?;
        Ok(rule)
    }
}

/// Fills `out` with the rule's weights by name.
///
/// `mu` are the market weights by name, `var_by_rank` the variances
/// `sigma_k^2` by rank. The rule is assumed to have passed
/// [`PortfolioRule::validate`].
pub(crate) fn fill_weights(
    rule: PortfolioRule,
    mu: &[f64],
    ranking: &Ranking,
    var_by_rank: &[f64],
    out: &mut [f64],
) {
    let n = mu.len();
    let smallest = ranking.smallest();
    match rule {
        PortfolioRule::Market => out.copy_from_slice(mu),
        PortfolioRule::Equal => out.fill(1.0 / n as f64),
        PortfolioRule::Diversity(1.0) => out.copy_from_slice(mu),
        PortfolioRule::Diversity(p) => {
            for (o, &m) in out.iter_mut().zip(mu) {
                *o = m.powf(p);
            }
            normalize(out);
        }
        PortfolioRule::RestrictedDiversity(1.0) => {
            fill_weights(PortfolioRule::RestrictedMarket, mu, ranking, var_by_rank, out)
        }
        PortfolioRule::RestrictedMarket => {
            out.copy_from_slice(mu);
            out[smallest] = 0.0;
            normalize(out);
        }
        PortfolioRule::RestrictedEqual => {
            out.fill(1.0 / (n - 1) as f64);
            out[smallest] = 0.0;
        }
        PortfolioRule::RestrictedDiversity(p) => {
            for (o, &m) in out.iter_mut().zip(mu) {
                *o = m.powf(p);
            }
            out[smallest] = 0.0;
            normalize(out);
        }
        PortfolioRule::AtlasStar => {
            out.fill(0.0);
            out[smallest] = 1.0;
        }
        PortfolioRule::Efficient(lambda) => {
            let ranked = efficient_frontier(var_by_rank, lambda);
            for (k, w) in ranked.into_iter().enumerate() {
                out[ranking.name_at(k)] = w;
            }
        }
    }
}

fn normalize(v: &mut [f64]) {
    let total: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= total;
    }
}

/// Efficient-frontier weights by rank for variances `sigma_k^2`.
///
/// `lambda = 1` gives equal weights, `lambda = 0` inverse-variance weights.
/// With constant variances both components are exactly `1/n`.
pub fn efficient_frontier(var_by_rank: &[f64], lambda: f64) -> Vec<f64> {
    let n = var_by_rank.len();
    let uniform = 1.0 / n as f64;
    let constant = var_by_rank.windows(2).all(|w| w[0] == w[1]);
    let inverse: Vec<f64> = if constant {
        vec![uniform; n]
    } else {
        let total: f64 = var_by_rank.iter().map(|v| 1.0 / v).sum();
        var_by_rank.iter().map(|v| 1.0 / (v * total)).collect()
    };
    inverse.into_iter().map(|w| w + lambda * (uniform - w)).collect()
}

/// Checks nonnegativity and unit sum of a weight vector.
pub fn check_weights(w: &[f64]) -> Result<()> {
    if w.iter().any(|x| !(*x >= 0.0)) {
        return Err(Error::InvalidInput("portfolio weight is negative or NaN".into()));
    }
    let total: f64 = w.iter().sum();
    if (total - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::InvalidInput(format!("portfolio weights sum to {total}")));
    }
    Ok(())
}

/// Weights by name for `rule` in `state`.
pub fn weights(rule: PortfolioRule, state: &MarketState, params: &ModelParams) -> Result<Vec<f64>> {
    rule.validate()?;
    if state.y.len() != params.n() {
        return Err(Error::InvalidInput("state and parameters disagree on n".into()));
    }
    let ranking = state.ranking()?;
    let mu = state.weights();
    let mut out = vec![0.0; mu.len()];
    fill_weights(rule, &mu, &ranking, &params.variances(), &mut out);
    check_weights(&out)?;
    Ok(out)
}

/// Per-step change of a portfolio's log-wealth and its instantaneous rates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WealthIncrement {
    pub d_log_wealth: f64,
    /// Growth rate `gamma^pi`.
    pub growth: f64,
    /// Excess growth rate `gamma_*^pi`.
    pub excess: f64,
    /// Rate of return `b^pi`.
    pub rate_of_return: f64,
    /// Portfolio variance `(sigma^pi)^2`.
    pub variance: f64,
}

/// Applies weights `pi` to per-name growth rates and volatilities.
///
/// `noise` are the standard normal draws the engine used for the step.
pub(crate) fn wealth_increment(
    pi: &[f64],
    growth_by_name: &[f64],
    sigma_by_name: &[f64],
    dt: f64,
    noise: &[f64],
) -> WealthIncrement {
    let sqrt_dt = dt.sqrt();
    let mut drift = 0.0;
    let mut excess = 0.0;
    let mut ret = 0.0;
    let mut var = 0.0;
    let mut diffusion = 0.0;
    for i in 0..pi.len() {
        let w = pi[i];
        if w == 0.0 {
            continue;
        }
        let s2 = sigma_by_name[i] * sigma_by_name[i];
        drift += w * growth_by_name[i];
        excess += w * (1.0 - w) * s2;
        ret += w * (growth_by_name[i] + 0.5 * s2);
        var += w * w * s2;
        diffusion += w * sigma_by_name[i] * noise[i];
    }
    let excess = 0.5 * excess;
    let growth = drift + excess;
    WealthIncrement {
        d_log_wealth: growth * dt + sqrt_dt * diffusion,
        growth,
        excess,
        rate_of_return: ret,
        variance: var,
    }
}

/// Log-wealth increment of `rule` over one engine step from `state`.
pub fn wealth_step(
    rule: PortfolioRule,
    state: &MarketState,
    params: &ModelParams,
    dt: f64,
    noise: &[f64],
) -> Result<WealthIncrement> {
    let pi = weights(rule, state, params)?;
    let ranking = state.ranking()?;
    let growth: Vec<f64> = (0..pi.len())
        .map(|i| params.gamma + params.g[ranking.rank_of()[i]])
        .collect();
    let sigma: Vec<f64> = (0..pi.len()).map(|i| params.sigma[ranking.rank_of()[i]]).collect();
    Ok(wealth_increment(&pi, &growth, &sigma, dt, noise))
}
