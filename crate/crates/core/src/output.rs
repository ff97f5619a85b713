//! CSV and JSON writers. CSV files use `,` separators, `.` decimals, LF
//! line endings and always carry a header; names, ranks and boundaries are
//! one-based.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::engine::{Ensemble, PathStats, Registrations, SimConfig};
use crate::equilibrium::CurvePoint;
use crate::error::Result;
use crate::model::ModelParams;
use crate::portfolio::{growth_report, MSource};
use crate::rankstats::{
    crossover_counts, gap_summary, name_weight_means, occupation_fractions, permutation_fractions,
};
use crate::diversity::time_average_functional;

/// Serializes `value` as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

/// Occupation fractions as `name,rank,time`, with `time` the fraction of
/// measured time.
pub fn occupation_csv(stats: &PathStats) -> Result<String> {
    let mut s = String::from("name,rank,time\n");
    if stats.occupation.is_some() {
        for (i, row) in occupation_fractions(stats)?.iter().enumerate() {
            for (k, f) in row.iter().enumerate() {
                let _ = writeln!(s, "{},{},{}", i + 1, k + 1, f);
            }
        }
    }
    Ok(s)
}

/// Gap histograms as `k,mean,band_frac,hist_bin,mass`. Bins are numbered
/// from 0; the last bin collects overflow beyond the histogram range.
pub fn gaps_csv(stats: &PathStats) -> Result<String> {
    let total = stats.meta.samples();
    let mut s = String::from("k,mean,band_frac,hist_bin,mass\n");
    for (k, gap) in stats.gaps.iter().enumerate() {
        let mean = gap.sum / total;
        let band = gap.band_count as f64 / total;
        for (b, &c) in gap.hist.iter().enumerate() {
            let _ = writeln!(s, "{},{},{},{},{}", k + 1, mean, band, b, c as f64 / total);
        }
    }
    Ok(s)
}

/// Sampled log-wealth as `t,rule,log_wealth`, averaged over paths.
pub fn wealth_csv(stats: &PathStats) -> String {
    let paths = stats.meta.paths as f64;
    let mut s = String::from("t,rule,log_wealth\n");
    for w in &stats.wealth {
        for sample in &w.samples {
            let _ = writeln!(s, "{},{},{}", sample.t, w.rule, sample.log_wealth / paths);
        }
    }
    s
}

pub fn capital_curve_csv(curve: &[CurvePoint]) -> String {
    let mut s = String::from("rank,log_rank,weight,log_weight\n");
    for p in curve {
        let _ = writeln!(s, "{},{},{},{}", p.rank, p.log_rank, p.weight, p.log_weight);
    }
    s
}

/// Resolved configuration of a simulation run.
pub fn run_meta(params: &ModelParams, config: &SimConfig, regs: &Registrations, stats: &PathStats) -> Value {
    json!({
        "params": { "n": params.n(), "gamma": params.gamma, "g": params.g, "sigma": params.sigma },
        "T": config.t_total,
        "dt": config.dt,
        "burn_in": config.burn_in,
        "seeds": stats.meta.seeds,
        "steps": stats.meta.steps,
        "measured_steps": stats.meta.measured_steps,
        "y0": config.y0.clone().unwrap_or_else(|| vec![0.0; params.n()]),
        "band_eps": stats.gaps.iter().map(|g| g.band_eps).collect::<Vec<_>>(),
        "hist_max": stats.gaps.first().map(|g| g.hist_max),
        "hist_bins": stats.gaps.first().map(|g| g.bins()),
        "rules": regs.rules.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
        "functionals": regs.functionals.iter().map(|f| f.label()).collect::<Vec<_>>(),
        "track_occupation": regs.track_occupation,
        "track_perms": regs.track_perms,
        "version": env!("CARGO_PKG_VERSION"),
    })
}

fn perm_json(stats: &PathStats) -> Result<Value> {
    if stats.perm_counts.is_none() {
        return Ok(Value::Null);
    }
    let mut map = Map::new();
    for (perm, f) in permutation_fractions(stats)? {
        let key = perm.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
        map.insert(key, json!(f));
    }
    Ok(Value::Object(map))
}

fn occupation_json(stats: &PathStats) -> Result<Value> {
    Ok(match stats.occupation {
        Some(_) => json!(occupation_fractions(stats)?),
        None => Value::Null,
    })
}

/// Writes every output file of a simulation run into `dir`.
pub fn write_simulation(
    dir: impl AsRef<Path>,
    params: &ModelParams,
    config: &SimConfig,
    regs: &Registrations,
    ensemble: &Ensemble,
) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let stats = &ensemble.aggregate;
    let meta = run_meta(params, config, regs, stats);
    let gaps = gap_summary(stats, params)?;
    let growth = growth_report(stats, params, MSource::Empirical)?;
    let functionals = (0..stats.functionals.len())
        .map(|i| time_average_functional(stats, i))
        .collect::<Result<Vec<_>>>()?;

    fs::write(dir.join("occupation.csv"), occupation_csv(stats)?)?;
    fs::write(dir.join("gaps.csv"), gaps_csv(stats)?)?;
    fs::write(dir.join("wealth.csv"), wealth_csv(stats))?;
    write_json(dir.join("meta.json"), &meta)?;

    let mut growth_rates = Map::new();
    for r in &growth.rules {
        growth_rates.insert(r.rule.to_string(), json!(r.empirical_g));
    }
    let mut functional_means = Map::new();
    for f in &functionals {
        functional_means.insert(f.label.clone(), json!(f.value));
    }
    let mut summary = json!({
        "meta": meta,
        "occupation_fractions": occupation_json(stats)?,
        "perm_fractions": perm_json(stats)?,
        "gap_means": gaps.rho_hat(),
        "crossovers": crossover_counts(stats),
        "name_weight_means": name_weight_means(stats)?,
        "functional_means": functional_means,
        "growth_rates": growth_rates,
    });
    if ensemble.per_seed.len() > 1 {
        let gap_spread = ensemble.spread(|s| Ok(s.gaps.iter().map(|g| g.sum / s.meta.samples()).collect()))?;
        let growth_spread = ensemble.spread(|s| {
            let span = s.meta.measured_time();
            Ok(s.wealth.iter().map(|w| (w.log_wealth - w.log_wealth_burn) / span).collect())
        })?;
        summary["seed_spread"] = json!({ "gap_means": gap_spread, "growth_rates": growth_spread });
    }
    write_json(dir.join("summary.json"), &summary)?;

    let rankstats = json!({
        "occupation": occupation_json(stats)?,
        "perm_fractions": perm_json(stats)?,
        "gaps": gaps.gaps,
        "crossovers": crossover_counts(stats),
        "name_weight_means": name_weight_means(stats)?,
    });
    write_json(dir.join("rankstats.json"), &rankstats)?;
    write_json(dir.join("growth_report.json"), &growth)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_ensemble, simulate};
    use crate::exec::Execution;
    use crate::portfolio::PortfolioRule;

    #[test]
    fn occupation_rows_sum_to_one() {
        let p = ModelParams::atlas(3, 1.0, 1.0).unwrap();
        let stats = simulate(&p, &SimConfig::new(10.0, 0.01), &Registrations::default()).unwrap();
        let csv = occupation_csv(&stats).unwrap();
        let mut sums = [0.0; 3];
        for line in csv.lines().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            sums[f[0].parse::<usize>().unwrap() - 1] += f[2].parse::<f64>().unwrap();
        }
        assert!(sums.iter().all(|s| (s - 1.0).abs() < 1e-12));
    }

    #[test]
    fn writes_all_files() {
        let p = ModelParams::atlas(3, 1.0, 1.0).unwrap();
        let cfg = SimConfig::new(2.0, 0.01);
        let regs = Registrations::default().with_rules([PortfolioRule::Market]).with_perms();
        let e = run_ensemble(&p, &cfg, &regs, &[1, 2], Execution::Sequential).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_simulation(dir.path(), &p, &cfg, &regs, &e).unwrap();
        for f in ["occupation.csv", "gaps.csv", "wealth.csv", "summary.json", "rankstats.json", "growth_report.json", "meta.json"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
        for key in ["meta", "occupation_fractions", "perm_fractions", "gap_means", "crossovers", "name_weight_means", "functional_means", "growth_rates"] {
            assert!(summary.get(key).is_some(), "{key}");
        }
    }
}
