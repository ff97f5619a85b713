use serde::Serialize;

use super::{analytic_growth, asymptotic_growth, AsymptoticInputs, PortfolioRule};
use crate::engine::{PathStats, WealthTrack};
use crate::equilibrium::ce_weights;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::rankstats::ranked_weight_means;

/// Where the ranked weights plugged into closed-form growth rates come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MSource {
    /// Certainty-equivalent weights of the model.
    Ce,
    /// Time-averaged ranked weights of the simulated path.
    Empirical,
}

/// Growth rates of one rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleGrowth {
    pub rule: PortfolioRule,
    /// Log-wealth growth per unit time after burn-in.
    #[serde(rename = "empirical_G")]
    pub empirical_g: f64,
    /// Time average of the excess growth rate after burn-in.
    #[serde(rename = "empirical_Gstar")]
    pub empirical_gstar: f64,
    pub empirical_rate_of_return: f64,
    pub empirical_variance: f64,
    #[serde(rename = "analytic_G")]
    pub analytic_g: Option<f64>,
    #[serde(rename = "analytic_Gstar")]
    pub analytic_gstar: Option<f64>,
    #[serde(rename = "asymptotic_Gamma")]
    pub asymptotic_gamma: Option<f64>,
    #[serde(rename = "asymptotic_Gammastar")]
    pub asymptotic_gammastar: Option<f64>,
    pub m_source: MSource,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub gamma: f64,
    pub m_source: MSource,
    pub rules: Vec<RuleGrowth>,
}

impl GrowthReport {
    pub fn get(&self, rule: PortfolioRule) -> Option<&RuleGrowth> {
        self.rules.iter().find(|r| r.rule == rule)
    }
}

fn span(stats: &PathStats) -> Result<f64> {
    let s = stats.meta.paths as f64 * stats.meta.measured_time();
    if s <= 0.0 {
        return Err(Error::InvalidInput("no measured time in path statistics".into()));
    }
    Ok(s)
}

/// Empirical growth rate of one wealth track after burn-in.
pub fn empirical_growth(stats: &PathStats, track: &WealthTrack) -> Result<f64> {
    Ok((track.log_wealth - track.log_wealth_burn) / span(stats)?)
}

/// Empirical, closed-form and large-market growth rates of every
/// registered rule.
pub fn growth_report(stats: &PathStats, params: &ModelParams, m_source: MSource) -> Result<GrowthReport> {
    if params.n() != stats.n() {
        return Err(Error::InvalidInput("parameters do not match the statistics".into()));
    }
    let t = span(stats)?;
    let m = match m_source {
        MSource::Ce => ce_weights(params)?.m,
        MSource::Empirical => ranked_weight_means(stats)?,
    };
    let asym = params.atlas_shape().ok().map(|shape| AsymptoticInputs {
        alpha: shape.alpha(),
        beta: shape.beta(),
        g: shape.g,
    });
    let mut rules = Vec::with_capacity(stats.wealth.len());
    for w in &stats.wealth {
        let analytic = match analytic_growth(w.rule, params, &m) {
            Ok(v) => Some(v),
            Err(Error::Unsupported(_)) => None,
            Err(e) => return Err(e),
        };
        let asymptotic = asym.and_then(|a| asymptotic_growth(w.rule, a).ok());
        rules.push(RuleGrowth {
            rule: w.rule,
            empirical_g: (w.log_wealth - w.log_wealth_burn) / t,
            empirical_gstar: (w.int_excess - w.int_excess_burn) / t,
            empirical_rate_of_return: (w.int_return - w.int_return_burn) / t,
            empirical_variance: (w.int_variance - w.int_variance_burn) / t,
            analytic_g: analytic.map(|v| v.0),
            analytic_gstar: analytic.map(|v| v.1),
            asymptotic_gamma: asymptotic.map(|v| v.0),
            asymptotic_gammastar: asymptotic.map(|v| v.1),
            m_source,
        });
    }
    Ok(GrowthReport { gamma: params.gamma, m_source, rules })
}

/// Pathwise check of the diversity-weighted wealth identity
/// `log(Z^theta / Z^mu) = log(D(mu_t) / D(mu_0)) + (1 - p) int gamma_*^theta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MasterIdentityReport {
    pub p: f64,
    /// `(t, residual)` at each sample time, averaged over paths.
    pub series: Vec<(f64, f64)>,
    pub terminal: f64,
    /// Least-squares slope of the residual through the origin.
    pub slope: f64,
}

pub fn master_identity_residual(stats: &PathStats, p: f64) -> Result<MasterIdentityReport> {
    let theta = stats
        .wealth_of(PortfolioRule::Diversity(p))
        .ok_or_else(|| Error::InvalidInput(format!("diversity rule with p = {p} was not registered")))?;
    let market = stats
        .wealth_of(PortfolioRule::Market)
        .ok_or_else(|| Error::InvalidInput("market rule was not registered".into()))?;
    let paths = stats.meta.paths as f64;
    let d0 = theta.samples[0].log_diversity;
    let series: Vec<(f64, f64)> = theta
        .samples
        .iter()
        .zip(&market.samples)
        .map(|(a, b)| {
            let r = (a.log_wealth - b.log_wealth) - (a.log_diversity - d0) - (1.0 - p) * a.int_excess;
            (a.t, r / paths)
        })
        .collect();
    let terminal = series.last().map(|s| s.1).unwrap_or(0.0);
    let stt: f64 = series.iter().map(|s| s.0 * s.0).sum();
    let slope = if stt > 0.0 { series.iter().map(|s| s.0 * s.1).sum::<f64>() / stt } else { 0.0 };
    Ok(MasterIdentityReport { p, series, terminal, slope })
}

/// Comparison of every registered rule against the Atlas-stock rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalityReport {
    pub applicable: bool,
    pub note: String,
    /// `n g`, the optimal long-term growth rate.
    pub target: f64,
    pub atlas_star_g: f64,
    pub relative_error: f64,
    /// `(rule, empirical G, G <= G^pi* + tolerance)`.
    pub others: Vec<(PortfolioRule, f64, bool)>,
}

impl OptimalityReport {
    pub fn dominates_all(&self) -> bool {
        self.others.iter().all(|o| o.2)
    }
}

/// Checks that holding only the Atlas stock grows at `n g` and no faster
/// than any other registered rule, which holds for Atlas models with
/// `n g >= sigma^2 / 2`.
pub fn optimal_growth_bound_check(stats: &PathStats, params: &ModelParams, tolerance: f64) -> Result<OptimalityReport> {
    let star = stats
        .wealth_of(PortfolioRule::AtlasStar)
        .ok_or_else(|| Error::InvalidInput("atlas_star rule was not registered".into()))?;
    let star_g = empirical_growth(stats, star)?;
    let others = stats
        .wealth
        .iter()
        .filter(|w| w.rule != PortfolioRule::AtlasStar)
        .map(|w| empirical_growth(stats, w).map(|g| (w.rule, g, g <= star_g + tolerance)))
        .collect::<Result<Vec<_>>>()?;
    let n = params.n() as f64;
    let (applicable, note, target) = match params.atlas_shape() {
        Ok(shape) if shape.s2 != 0.0 => (false, "volatilities are not constant".to_string(), n * shape.g),
        Ok(shape) if n * shape.g < shape.sigma2 / 2.0 => {
            (false, format!("n g = {} is below sigma^2 / 2 = {}", n * shape.g, shape.sigma2 / 2.0), n * shape.g)
        }
        Ok(shape) => (true, String::new(), n * shape.g),
        Err(e) => (false, format!("not an Atlas model: {e}"), f64::NAN),
    };
    Ok(OptimalityReport {
        applicable,
        note,
        target,
        atlas_star_g: star_g,
        relative_error: (star_g - target) / target,
        others,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{simulate, Registrations, SimConfig};

    fn run(p: f64, t: f64) -> PathStats {
        let params = ModelParams::atlas(3, 1.0, 1.0).unwrap();
        let regs = Registrations::default().with_rules([PortfolioRule::Market, PortfolioRule::Diversity(p)]);
        simulate(&params, &SimConfig::new(t, 0.01).with_seed(5), &regs).unwrap()
    }

    #[test]
    fn residual_vanishes_for_market() {
        let rep = master_identity_residual(&run(1.0, 10.0), 1.0).unwrap();
        assert!(rep.series.iter().all(|s| s.1.abs() < 1e-12));
    }

    #[test]
    fn residual_starts_at_zero() {
        let rep = master_identity_residual(&run(0.5, 10.0), 0.5).unwrap();
        assert_eq!(rep.series[0], (0.0, 0.0));
        assert!(master_identity_residual(&run(0.5, 1.0), 0.3).is_err());
    }

    #[test]
    fn report_market_analytic_is_gamma() {
        let params = ModelParams::atlas(3, 1.0, 1.0).unwrap();
        let rep = growth_report(&run(0.5, 10.0), &params, MSource::Empirical).unwrap();
        assert_eq!(rep.get(PortfolioRule::Market).unwrap().analytic_g, Some(1.0));
        let div = rep.get(PortfolioRule::Diversity(0.5)).unwrap();
        let (g, gs) = (div.analytic_g.unwrap(), div.analytic_gstar.unwrap());
        assert!((g - (1.0 + 0.5 * gs)).abs() < 1e-14);
    }

    #[test]
    fn optimality_precondition() {
        let params = ModelParams::atlas(3, 0.1, 1.0).unwrap();
        let regs = Registrations::default().with_rules([PortfolioRule::AtlasStar]);
        let stats = simulate(&params, &SimConfig::new(1.0, 0.01), &regs).unwrap();
        let rep = optimal_growth_bound_check(&stats, &params, 0.0).unwrap();
        assert!(!rep.applicable);
    }
}
