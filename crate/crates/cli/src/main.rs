use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use atlas_core::calibrate::fit_linear_variance;
use atlas_core::config::{load_param_file, ParamFile};
use atlas_core::diversity::{weak_diversity_bound, DiversityBoundInput};
use atlas_core::engine::Functional;
use atlas_core::equilibrium::{ce_approx, ce_weights, CEWeights};
use atlas_core::output::{capital_curve_csv, write_json, write_simulation};
use atlas_core::portfolio::{asymptotic_growth, efficient_frontier, AsymptoticInputs};
use atlas_core::{run_ensemble, Error, Execution, PortfolioRule, Registrations, SimConfig};
use clap::{Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(name = "atlas", version, about = "Rank-based equity market models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a parameter file against the model's validity conditions.
    Validate {
        #[arg(long)]
        params: PathBuf,
    },
    /// Simulate one or more paths and write statistics.
    Simulate {
        #[arg(long)]
        params: PathBuf,
        /// Horizon.
        #[arg(long = "T")]
        t_total: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// Initial time excluded from statistics (default 10% of T).
        #[arg(long)]
        burn_in: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Number of paths, with seeds seed, seed+1, ...
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        /// Track occupation of each ordering (n <= 8).
        #[arg(long)]
        track_perms: bool,
        /// Skip the name-by-rank occupation matrix.
        #[arg(long)]
        no_occupation: bool,
        /// Comma-separated rules, e.g. market,equal,diversity:0.5,atlas_star.
        #[arg(long)]
        portfolios: Option<String>,
        /// Time-averaged functional, e.g. sum-p:0.5. May be repeated.
        #[arg(long)]
        functional: Vec<String>,
        /// Gap band width for every boundary (default 2 s_k sqrt(dt)).
        #[arg(long)]
        eps: Option<f64>,
        /// Steps between wealth and functional samples.
        #[arg(long)]
        record_every: Option<u64>,
        /// Run paths one after another instead of in parallel.
        #[arg(long)]
        sequential: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Certainty-equivalent weights and capital curve.
    Ce {
        #[arg(long)]
        params: Option<PathBuf>,
        /// Closed-form approximation, e.g. alpha:1 or alpha:0.85,beta:3.4e-4.
        #[arg(long)]
        approx: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Large-market growth rates of every rule kind.
    Asymptotics {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, default_value_t = 1.0)]
        g: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Efficient-frontier weights by rank.
    Frontier {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bound on the probability of weak diversity.
    DiversityBound {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        horizon: f64,
        #[arg(long)]
        rel_sd: f64,
        #[arg(long)]
        start_weight: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit sigma_k^2 = sigma^2 + k s^2 to a rank,variance CSV.
    Calibrate {
        #[arg(long)]
        variances: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure with its exit status.
enum Failure {
    Invalid(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParams(_) => Failure::Invalid(e.to_string()),
            e => Failure::Runtime(e),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error[E_USAGE]: {first}");
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error[E_PARAMS]: {}", one_line(&msg));
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error[{}]: {}", e.code(), one_line(&e.to_string()));
            ExitCode::from(2)
        }
    }
}

fn one_line(s: &str) -> String {
    s.replace('\n', "; ")
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Validate { params } => validate(&params),
        Command::Simulate {
            params,
            t_total,
            dt,
            burn_in,
            seed,
            seeds,
            track_perms,
            no_occupation,
            portfolios,
            functional,
            eps,
            record_every,
            sequential,
            out,
        } => {
            let file = load_param_file(&params)?;
            file.params.validate().into_result()?;
            let n = file.params.n();
            let t_total = t_total
                .or(file.run.t_total)
                .ok_or_else(|| Error::Config("horizon not given (--T or key T)".into()))?;
            let dt = dt.or(file.run.dt).unwrap_or(0.01);
            let burn_in = burn_in.or(file.run.burn_in).unwrap_or(0.1 * t_total);
            let seed = seed.or(file.run.seed).unwrap_or(0);
            if seeds == 0 {
                return Err(Error::Config("--seeds must be at least 1".into()).into());
            }
            let mut config = SimConfig::new(t_total, dt).with_burn_in(burn_in).with_seed(seed);
            config.y0 = file.run.y0.clone();
            let regs = Registrations {
                functionals: functional.iter().map(|f| parse_functional(f)).collect::<Result<_, _>>()?,
                rules: match &portfolios {
                    Some(list) => list.split(',').map(str::parse).collect::<Result<_, _>>()?,
                    None => Vec::new(),
                },
                track_occupation: !no_occupation,
                track_perms,
                band_eps: eps.map(|e| vec![e; n - 1]).or(file.run.band_eps.clone()),
                hist_max: None,
                record_every,
            };
            let seed_list: Vec<u64> = (0..seeds).map(|i| seed.wrapping_add(i)).collect();
            let exec = if sequential { Execution::Sequential } else { Execution::Parallel };
            let ensemble = run_ensemble(&file.params, &config, &regs, &seed_list, exec)?;
            write_simulation(&out, &file.params, &config, &regs, &ensemble)?;
            Ok(())
        }
        Command::Ce { params, approx, n, out } => {
            let (weights, config) = match (params, approx) {
                (Some(path), None) => {
                    let ParamFile { params, .. } = load_param_file(&path)?;
                    let w = ce_weights(&params)?;
                    let cfg = json!({ "params": { "n": params.n(), "gamma": params.gamma, "g": params.g, "sigma": params.sigma } });
                    (w, cfg)
                }
                (None, Some(spec)) => {
                    let n = n.ok_or_else(|| Error::Config("--approx needs --n".into()))?;
                    let (alpha, beta) = parse_approx(&spec)?;
                    (ce_approx(n, alpha, beta)?, json!({ "n": n, "alpha": alpha, "beta": beta }))
                }
                _ => return Err(Error::Config("give exactly one of --params or --approx".into()).into()),
            };
            write_ce(&out, &weights, config)
        }
        Command::Asymptotics { alpha, beta, p, g, out } => {
            let inputs = AsymptoticInputs { alpha, beta, g };
            let mut s = String::from("rule,Gamma,Gammastar\n");
            for rule in PortfolioRule::all_kinds(p, 0.5) {
                let label = match rule {
                    PortfolioRule::Efficient(_) => "efficient".to_string(),
                    r => r.to_string(),
                };
                match asymptotic_growth(rule, inputs) {
                    Ok((a, b)) => s.push_str(&format!("{label},{},{}\n", num(a), num(b))),
                    Err(Error::Unsupported(_)) => s.push_str(&format!("{label},n/a,n/a\n")),
                    Err(e) => return Err(e.into()),
                }
            }
            emit(out.as_deref(), &s)
        }
        Command::Frontier { params, lambda, out } => {
            let file = load_param_file(&params)?;
            file.params.validate().into_result()?;
            PortfolioRule::Efficient(lambda).validate()?;
            let w = efficient_frontier(&file.params.variances(), lambda);
            let mut s = String::from("rank,weight\n");
            for (k, x) in w.iter().enumerate() {
                s.push_str(&format!("{},{}\n", k + 1, x));
            }
            emit(out.as_deref(), &s)
        }
        Command::DiversityBound { n, delta, horizon, rel_sd, start_weight, out } => {
            let input = DiversityBoundInput { n, delta, horizon, rel_sd, start_weight };
            let bound = weak_diversity_bound(&input)?;
            let value = json!({ "input": input, "applicable": bound.applicable,
                "threshold_weight": bound.threshold_weight, "note": bound.note,
                "A": bound.a, "log_A": bound.log_a, "z": bound.z,
                "log10_tail": bound.log10_tail, "log10_final_tail": bound.log10_final_tail,
                "probability_bound_descriptor": bound.probability_bound_descriptor });
            emit_json(out.as_deref(), &value)
        }
        Command::Calibrate { variances, out } => {
            let points = read_variances(&variances)?;
            let fit = fit_linear_variance(&points)?;
            let value = json!({
                "sigma2": fit.sigma2,
                "s2": fit.s2,
                "r_squared": fit.r_squared,
                "negative_slope": fit.negative_slope,
                "residuals": fit.residuals,
                "input": variances.display().to_string(),
                "points": points.len(),
            });
            emit_json(out.as_deref(), &value)
        }
    }
}

fn validate(path: &Path) -> Outcome {
    let file = load_param_file(path)?;
    let report = file.params.validate();
    println!("{report}");
    if report.is_valid() {
        Ok(())
    } else {
        Err(Failure::Invalid(report.to_string()))
    }
}

fn num(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        x.to_string()
    }
}

fn parse_functional(s: &str) -> Result<Functional, Error> {
    let p = s
        .strip_prefix("sum-p:")
        .or_else(|| s.strip_prefix("sum_p:"))
        .ok_or_else(|| Error::InvalidInput(format!("unknown functional '{s}', expected sum-p:P")))?
        .parse::<f64>()
        .map_err(|e| Error::InvalidInput(format!("bad exponent in '{s}': {e}")))?;
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidInput(format!("exponent in '{s}' must be positive")));
    }
    Ok(Functional::SumPower(p))
}

fn parse_approx(spec: &str) -> Result<(f64, f64), Error> {
    let (mut alpha, mut beta) = (None, 0.0);
    for part in spec.split(',') {
        let (key, value) = part
            .split_once(':')
            .ok_or_else(|| Error::InvalidInput(format!("bad --approx part '{part}'")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|e| Error::InvalidInput(format!("bad --approx value '{value}': {e}")))?;
        match key.trim() {
            "alpha" => alpha = Some(v),
            "beta" => beta = v,
            other => return Err(Error::InvalidInput(format!("unknown --approx key '{other}'"))),
        }
    }
    Ok((alpha.ok_or_else(|| Error::InvalidInput("--approx needs alpha".into()))?, beta))
}

fn write_ce(out: &Path, w: &CEWeights, config: serde_json::Value) -> Outcome {
    fs::write(out, capital_curve_csv(&w.capital_curve()?)).map_err(Error::from)?;
    let meta = json!({ "config": config, "source": w.source, "rho": w.rho, "m": w.m });
    write_json(sibling_meta(out), &meta)?;
    Ok(())
}

fn sibling_meta(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".meta.json");
    out.with_file_name(name)
}

fn emit(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Runtime(e.into())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json(out: Option<&Path>, value: &serde_json::Value) -> Outcome {
    match out {
        Some(path) => Ok(write_json(path, value)?),
        None => {
            println!("{}", serde_json::to_string_pretty(value).map_err(Error::from)?);
            Ok(())
        }
    }
}

fn read_variances(path: &Path) -> Result<Vec<(f64, f64)>, Error> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Parse { line: 0, msg: e.to_string() })?;
    let headers = reader.headers().map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse { line: 1, msg: format!("missing column '{name}'") })
    };
    let (rk, vk) = (col("rank")?, col("variance")?);
    let mut points = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        let field = |j: usize| -> Result<f64, Error> {
            record
                .get(j)
                .unwrap_or("")
                .parse()
                .map_err(|e| Error::Parse { line, msg: format!("{e}") })
        };
        points.push((field(rk)?, field(vk)?));
    }
    Ok(points)
}
