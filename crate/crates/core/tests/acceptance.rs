//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use atlas_core::calibrate::{annualize, de_annualize, fit_linear_variance};
use atlas_core::diversity::{time_average_functional, weak_diversity_bound, DiversityBoundInput};
use atlas_core::engine::Functional;
use atlas_core::equilibrium::{ce_approx, ce_weights};
use atlas_core::output::write_simulation;
use atlas_core::portfolio::{
    asymptotic_growth, efficient_frontier, empirical_growth, master_identity_residual,
    optimal_growth_bound_check, AsymptoticInputs,
};
use atlas_core::rankstats::{
    gap_summary, log_cap_growth, name_weight_means, occupation_fractions, permutation_fractions,
};
use atlas_core::{run_ensemble, simulate, Ensemble, Execution, ModelParams, PortfolioRule, Registrations, SimConfig};

const SEEDS: [u64; 4] = [11, 12, 13, 14];

struct Report {
    failed: usize,
    total: usize,
}

impl Report {
    fn line(&mut self, id: &str, ok: bool, detail: String) {
        self.total += 1;
        if !ok {
            self.failed += 1;
        }
        println!("[{}] {id} {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn atlas3() -> ModelParams {
    ModelParams::atlas(3, 1.0, 1.0).unwrap()
}

fn base_rules() -> Vec<PortfolioRule> {
    vec![
        PortfolioRule::Market,
        PortfolioRule::Equal,
        PortfolioRule::RestrictedEqual,
        PortfolioRule::RestrictedMarket,
        PortfolioRule::Diversity(0.5),
        PortfolioRule::RestrictedDiversity(0.5),
        PortfolioRule::Efficient(0.5),
        PortfolioRule::AtlasStar,
    ]
}

fn base_run(dt: f64) -> (Ensemble, f64) {
    let config = SimConfig::new(5000.0, dt).with_burn_in(500.0);
    let regs = Registrations::default().with_rules(base_rules()).with_perms();
    let start = Instant::now();
    let e = run_ensemble(&atlas3(), &config, &regs, &SEEDS, Execution::Sequential).unwrap();
    (e, start.elapsed().as_secs_f64() / SEEDS.len() as f64)
}

fn growth(e: &Ensemble, rule: PortfolioRule) -> f64 {
    let s = &e.aggregate;
    empirical_growth(s, s.wealth_of(rule).unwrap()).unwrap()
}

fn simulation_criteria(r: &mut Report) {
    let (e, per_seed) = base_run(0.01);
    let s = &e.aggregate;
    let params = atlas3();

    let occ = occupation_fractions(s).unwrap();
    let worst = occ.iter().flatten().map(|f| (f - 1.0 / 3.0).abs()).fold(0.0, f64::max);
    r.line(
        "C01 occupation",
        worst <= 0.03 && per_seed < 10.0,
        format!("max |frac - 1/3| = {worst:.4} (tol 0.03), {per_seed:.2} s per seed (limit 10)"),
    );

    let perms = permutation_fractions(s).unwrap();
    let worst = perms.iter().map(|p| (p.1 - 1.0 / 6.0).abs()).fold(0.0, f64::max);
    r.line("C02 permutations", perms.len() == 6 && worst <= 0.02, format!("max |frac - 1/6| = {worst:.4} (tol 0.02)"));

    let mu = name_weight_means(s).unwrap();
    let worst = mu.iter().map(|m| (m - 1.0 / 3.0).abs()).fold(0.0, f64::max);
    r.line("C03 name averages", worst <= 0.02, format!("max |mean mu_i - 1/3| = {worst:.4} (tol 0.02)"));

    let yg = log_cap_growth(s).unwrap();
    let worst_y = yg.iter().map(|v| rel(*v, 1.0)).fold(0.0, f64::max);
    let gm = growth(&e, PortfolioRule::Market);
    r.line(
        "C04 coherence",
        worst_y <= 0.05 && rel(gm, 1.0) <= 0.05,
        format!("y growth {yg:.4?}, G^mu = {gm:.4} (rel tol 0.05 of 1)"),
    );

    let gaps = gap_summary(s, &params).unwrap();
    let rho = gaps.rho_hat();
    let slopes: Vec<f64> = gaps.gaps.iter().map(|g| g.tail_slope).collect();
    let ok_rho = rel(rho[0], 0.5) <= 0.05 && rel(rho[1], 0.25) <= 0.05;
    let ok_slope = rel(slopes[0], -2.0) <= 0.10 && rel(slopes[1], -4.0) <= 0.10;
    r.line(
        "C05 gap laws",
        ok_rho && ok_slope,
        format!("rho_hat = {rho:.4?} vs (0.5, 0.25) tol 5%; tail slopes = {slopes:.3?} vs (-2, -4) tol 10%"),
    );

    let lam = gaps.lambda_hat();
    let ok_lam = rel(lam[0], 2.0) <= 0.15 && rel(lam[1], 4.0) <= 0.15;
    // lambda_{0,1} = lambda_{n,n+1} = 0.
    let mut padded = vec![0.0];
    padded.extend(&lam);
    padded.push(0.0);
    let diffs: Vec<f64> = padded.windows(2).map(|w| w[0] - w[1]).collect();
    let ok_diff = diffs.iter().zip(&params.g).all(|(d, g)| rel(*d, 2.0 * g) <= 0.15);
    r.line(
        "C06 local times",
        ok_lam && ok_diff,
        format!("lambda_hat = {lam:.4?} vs (2, 4); differences = {diffs:.4?} vs 2 g_k; tol 15%"),
    );

    let ge = growth(&e, PortfolioRule::Equal);
    r.line("C07a equal weight", rel(ge, 4.0 / 3.0) <= 0.05, format!("G^eta = {ge:.4} vs 4/3 (tol 5%)"));
    let gre = growth(&e, PortfolioRule::RestrictedEqual);
    r.line(
        "C07b restricted equal weight",
        rel(gre, 1.375) <= 0.05,
        format!("G^eta_hat = {gre:.4} vs 1.375 (tol 5%)"),
    );

    let opt = optimal_growth_bound_check(s, &params, 0.0).unwrap();
    let strictly = opt.others.iter().all(|o| o.1 < opt.atlas_star_g);
    r.line(
        "C08 atlas-stock optimality",
        opt.applicable && opt.relative_error.abs() <= 0.05 && strictly,
        format!("G^pi* = {:.4} vs 3 (tol 5%), best other = {:.4}", opt.atlas_star_g, opt.others.iter().map(|o| o.1).fold(f64::MIN, f64::max)),
    );

    let coarse = master_identity_residual(s, 0.5).unwrap().terminal;
    let (fine_run, _) = base_run(0.005);
    let fine = master_identity_residual(&fine_run.aggregate, 0.5).unwrap().terminal;
    let ratio = coarse.abs() / fine.abs();
    r.line(
        "C09 master identity",
        ratio >= 1.8 && fine.abs() / 5000.0 < 1e-2,
        format!("|residual| dt=0.01: {:.4e}, dt=0.005: {:.4e}, ratio {ratio:.3} (>= 1.8), residual/T = {:.2e} (< 1e-2)", coarse.abs(), fine.abs(), fine.abs() / 5000.0),
    );
}

fn figure_criterion(r: &mut Report) {
    let n = 100;
    let sigma2 = 0.075;
    let p = 0.5;
    let dt = 1.0 / 250.0;
    let mut runs = Vec::new();
    for alpha in [0.5, 1.5] {
        let g = sigma2 / (2.0 * alpha);
        let params = ModelParams::atlas(n, g, sigma2.sqrt()).unwrap();
        let ce = ce_weights(&params).unwrap();
        let target: f64 = ce.m.iter().map(|m| m.powf(p)).sum();
        let mut concentrated = vec![0.0; n];
        concentrated[0] = (0.99 * (n as f64 - 1.0) / 0.01).ln();
        let starts = [
            ("ce", ce.m.iter().map(|m| m.ln()).collect::<Vec<_>>()),
            ("equal", vec![0.0; n]),
            ("concentrated", concentrated),
        ];
        for (label, y0) in starts {
            runs.push((alpha, label, params.clone(), y0, target));
        }
    }
    let results = Execution::Parallel.map(runs, |(alpha, label, params, y0, target)| {
        let config = SimConfig::new(2000.0, dt).with_burn_in(0.0).with_seed(7).with_y0(y0);
        let mut regs = Registrations::default().with_functional(Functional::SumPower(p));
        regs.track_occupation = false;
        regs.record_every = Some(250);
        let stats = simulate(&params, &config, &regs).unwrap();
        let avg = time_average_functional(&stats, 0).unwrap();
        (alpha, label, avg.value, target, avg.entry_time(target, 0.05))
    });

    let mut ok = true;
    let mut detail = Vec::new();
    let mut entry = [0.0f64; 2];
    for (alpha, label, value, target, t_in) in &results {
        ok &= rel(*value, *target) <= 0.05 && t_in.is_some();
        let slot = usize::from(*alpha > 1.0);
        entry[slot] = entry[slot].max(t_in.unwrap_or(f64::INFINITY));
        detail.push(format!("a={alpha} {label}: {value:.3}/{target:.3} in at {:.0}", t_in.unwrap_or(f64::NAN)));
    }
    ok &= entry[0] < entry[1];
    r.line("C10 diversity time averages", ok, format!("{}; last entry a=0.5 {:.0} < a=1.5 {:.0}", detail.join("; "), entry[0], entry[1]));
}

fn ce_criterion(r: &mut Report) {
    let params = ModelParams::generalized_atlas(50, 0.044, 0.075, 6e-5).unwrap();
    let ce = ce_weights(&params).unwrap();
    let worst = ce
        .m
        .windows(2)
        .zip(&ce.rho)
        .map(|(w, rho)| ((w[0] / w[1]).ln() - rho).abs())
        .fold(0.0, f64::max);
    let approx = ce_approx(3, 1.0, 0.0).unwrap().m;
    let expect = [6.0 / 11.0, 3.0 / 11.0, 2.0 / 11.0];
    // Exact up to the last bit of the normalizing sum.
    let ok_approx = approx.iter().zip(expect).all(|(a, b)| (a - b).abs() <= 2.0 * f64::EPSILON * b);
    let g = 0.075 / (2.0 * 0.5);
    let big = ce_weights(&ModelParams::atlas(1000, g, 0.075f64.sqrt()).unwrap()).unwrap();
    let nm = 1000.0 * big.m[999];
    r.line(
        "C11 CE weights",
        worst <= 1e-12 && ok_approx && (nm - 0.5).abs() <= 0.02,
        format!("log-ratio error {worst:.2e}; approx(1, n=3) = {approx:?}; n m_n = {nm:.4} vs 0.5"),
    );
}

/// Independent restatement of the large-market limits.
fn golden(rule: PortfolioRule, alpha: f64, beta: f64, g: f64) -> Option<(f64, f64)> {
    let lo = |x: f64| x.min(1.0);
    Some(match (rule, beta > 0.0) {
        (PortfolioRule::Market, false) => (g, g * lo(alpha)),
        (PortfolioRule::Market | PortfolioRule::RestrictedMarket, true) => (g, g),
        (PortfolioRule::RestrictedMarket, false) => (g * lo(alpha), g * lo(alpha)),
        (PortfolioRule::Equal, false) => (g * (1.0 + alpha), alpha * g),
        (PortfolioRule::RestrictedEqual, false) => (alpha * g, alpha * g),
        (PortfolioRule::Diversity(p), false) => (g * (1.0 + (1.0 - p) / p * lo(alpha * p)), g / p * lo(alpha * p)),
        (PortfolioRule::Diversity(p) | PortfolioRule::RestrictedDiversity(p), true) => (g / p, g / p),
        (PortfolioRule::RestrictedDiversity(p), false) => (g / p * lo(alpha * p), g / p * lo(alpha * p)),
        _ => return None,
    })
}

fn asymptotics_criterion(r: &mut Report) {
    let mut checked = 0;
    let mut bad = Vec::new();
    for g in [1.0, 0.044] {
        for alpha in [0.5, 1.0, 1.5] {
            for beta in [0.0, 0.1] {
                for p in [0.3, 0.8] {
                    for rule in PortfolioRule::all_kinds(p, 0.5) {
                        let Some(want) = golden(rule, alpha, beta, g) else { continue };
                        let got = asymptotic_growth(rule, AsymptoticInputs { alpha, beta, g }).unwrap();
                        checked += 1;
                        // Same formulas, possibly rearranged: allow a few ulps.
                        let close = |a: f64, b: f64| (a - b).abs() <= 4.0 * f64::EPSILON * b.abs();
                        if !close(got.0, want.0) || !close(got.1, want.1) {
                            bad.push(format!("{rule} a={alpha} b={beta} g={g}: {got:?} vs {want:?}"));
                        }
                    }
                }
            }
        }
    }
    r.line("C12 asymptotics", bad.is_empty(), format!("{checked} grid cells; mismatches: {bad:?}"));
}

fn frontier_criterion(r: &mut Report) {
    let mut ok = true;
    for lambda in [0.0, 0.5, 1.0] {
        ok &= efficient_frontier(&[0.3; 5], lambda).iter().all(|w| *w == 0.2);
    }
    let w = efficient_frontier(&[1.0, 2.0, 4.0], 0.0);
    ok &= w.iter().zip([4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0]).all(|(a, b)| (a - b).abs() <= 1e-15);
    r.line("C13 efficient frontier", ok, format!("sigma^2 = (1, 2, 4), lambda = 0 -> {w:?}"));
}

fn bound_criterion(r: &mut Report) {
    let input = DiversityBoundInput { n: 5000, delta: 0.01, horizon: 2.0, rel_sd: 0.24, start_weight: 0.03 };
    let start = Instant::now();
    let b = weak_diversity_bound(&input).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let ok = (1580.0..=1590.0).contains(&b.a) && rel(b.log_a, 7.37) <= 0.01 && b.log10_tail <= -190.0 && secs < 0.01;
    r.line("C14 diversity bound", ok, format!("A = {:.2}, ln A = {:.4}, log10 tail = {:.2}, {secs:.1e} s", b.a, b.log_a, b.log10_tail));
}

fn calibration_criterion(r: &mut Report) {
    let points: Vec<(f64, f64)> = (1..=5000).map(|k| (k as f64, 0.075 + 6e-5 * k as f64)).collect();
    let fit = fit_linear_variance(&points).unwrap();
    let ok_fit = (fit.sigma2 - 0.075).abs() <= 1e-12 && (fit.s2 - 6e-5).abs() <= 1e-12;

    let annual = ModelParams::generalized_atlas(4, 0.044, 0.075, 0.01).unwrap();
    let view = annualize(&annual, 250).unwrap();
    let ok_trip = view.annual() == &annual && view.clone().into_annual() == annual;
    let back = de_annualize(&view.per_step(), 250).unwrap();
    let drift = back.g.iter().zip(&annual.g).map(|(a, b)| rel(*a, *b)).fold(0.0, f64::max);

    // Same noise, rescaled clock: annual units at dt = 1/250 versus per-step units at dt = 1.
    let regs = Registrations::default();
    let a = simulate(&annual, &SimConfig::new(20.0, 1.0 / 250.0).with_burn_in(2.0).with_seed(5), &regs).unwrap();
    let b = simulate(&view.per_step(), &SimConfig::new(5000.0, 1.0).with_burn_in(500.0).with_seed(5), &regs).unwrap();
    let same_occ = a.occupation == b.occupation;
    let gap_err = a.gaps.iter().zip(&b.gaps).map(|(x, y)| rel(x.sum, y.sum)).fold(0.0, f64::max);
    r.line(
        "C15 calibration",
        ok_fit && ok_trip && drift <= 1e-15 && same_occ && gap_err <= 1e-9,
        format!(
            "fit error ({:.1e}, {:.1e}); round trip exact: {ok_trip}; occupation identical: {same_occ}; gap sums rel diff {gap_err:.1e}",
            (fit.sigma2 - 0.075).abs(),
            (fit.s2 - 6e-5).abs()
        ),
    );
}

fn determinism_criterion(r: &mut Report) {
    let params = atlas3();
    let config = SimConfig::new(200.0, 0.01).with_burn_in(20.0);
    let regs = Registrations::default().with_rules(base_rules()).with_perms().with_functional(Functional::SumPower(0.5));
    let root = tempfile::tempdir().unwrap();
    let write = |name: &str, threads: usize, exec: Execution| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let e = pool.install(|| run_ensemble(&params, &config, &regs, &[3, 1, 2], exec).unwrap());
        let dir = root.path().join(name);
        write_simulation(&dir, &params, &config, &regs, &e).unwrap();
        dir
    };
    let dirs = [
        write("one", 1, Execution::Parallel),
        write("four", 4, Execution::Parallel),
        write("again", 4, Execution::Parallel),
        write("seq", 1, Execution::Sequential),
    ];
    let mut files: Vec<_> = fs::read_dir(&dirs[0]).unwrap().map(|e| e.unwrap().file_name()).collect();
    files.sort();
    let differing: Vec<_> = files
        .iter()
        .filter(|f| {
            let first = fs::read(dirs[0].join(f)).unwrap();
            dirs[1..].iter().any(|d| fs::read(d.join(f)).unwrap() != first)
        })
        .collect();
    r.line(
        "C16 determinism",
        differing.is_empty() && files.len() == 7,
        format!("{} files compared across 1/4 threads and sequential; differing: {differing:?}", files.len()),
    );
}

fn main() -> ExitCode {
    let mut r = Report { failed: 0, total: 0 };
    simulation_criteria(&mut r);
    figure_criterion(&mut r);
    ce_criterion(&mut r);
    asymptotics_criterion(&mut r);
    frontier_criterion(&mut r);
    bound_criterion(&mut r);
    calibration_criterion(&mut r);
    determinism_criterion(&mut r);
    println!("acceptance: {} passed, {} failed", r.total - r.failed, r.failed);
    if r.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
