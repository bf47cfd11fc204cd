// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt::Write as _;

use serde::Serialize;

use seqar_core::beta_recovery::{beta_error, project_coefficients, step_l2_error, TrigPsi};
use seqar_core::mc_harness::{run_table, Experiment, PipelineRun};
use seqar_core::model_sim::{generate_trajectory_with, NoiseInjection};
use seqar_core::theory::{efficiency_ratio, pinsker_constant, sigma_star, upsilon_from, EfficiencyReport};

use crate::args::{Format, PinskerArgs};
use crate::config::{parse_signal, RunConfig};
use crate::error::CliResult;
use crate::output::ArtifactWriter;

pub fn simulate(cfg: &RunConfig) -> CliResult<()> {
    let n = cfg.single_n()?;
    let noise = cfg.single_noise()?;
    let injection = if cfg.debug_noiseless { NoiseInjection::Zero } else { NoiseInjection::Random };
    let traj = generate_trajectory_with(&cfg.signal, &noise, n, cfg.seed, 0.0, injection)?;
    let mut out = ArtifactWriter::new(cfg, &cfg.out)?;
    if cfg.wants(Format::Csv) {
        out.csv("trajectory.csv", &traj.to_csv())?;
    }
    if cfg.wants(Format::Json) {
        out.json("trajectory.json", &traj)?;
    }
    println!("simulated n={n} seed={} -> {}", cfg.seed, cfg.out.display());
    Ok(())
}

#[derive(Serialize)]
struct EstimateSummary<'a> {
    seed: u64,
    n: usize,
    d: usize,
    delta: f64,
    alpha_hat: usize,
    k_hat: u32,
    t_hat: f64,
    gamma_all: bool,
    point_gamma_fraction: f64,
    error: f64,
    oracle_error: f64,
    lambda_hat: &'a [f64],
    estimate: &'a [f64],
    points: &'a [seqar_core::SeqPointResult],
}

fn points_csv(run: &PipelineRun, exp: &Experiment) -> String {
    let mut out = String::from("l,z_l,k1,iota,k2,s_pre,H,tau,kappa,gamma,S_star,sigma2\n");
    for (p, w) in run.regression.points.iter().zip(&exp.partition.windows) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            p.l,
            exp.partition.z[p.l - 1],
            w.k1,
            w.iota,
            w.k2,
            p.s_pre,
            p.h_threshold,
            p.tau,
            p.kappa,
            p.gamma,
            p.s_star,
            p.sigma2
        );
    }
    out
}

pub fn estimate(cfg: &RunConfig) -> CliResult<()> {
    let n = cfg.single_n()?;
    let noise = cfg.single_noise()?;
    let exp = Experiment::new(&cfg.signal, &noise, n, cfg.pipeline())?;
    let run = exp.run(cfg.seed)?;
    let sel = &run.selection;
    log::info!("selected k={} t={:.4} (alpha {})", sel.k_hat, sel.t_hat, sel.alpha_hat);

    let mut out = ArtifactWriter::new(cfg, &cfg.out)?;
    if cfg.wants(Format::Csv) {
        if !run.regression.points.is_empty() {
            out.csv("seq_points.csv", &points_csv(&run, &exp))?;
        }
        out.csv("regression.csv", &run.regression.to_csv(&exp.partition))?;
        out.csv("coefficients.csv", &run.coeffs.to_csv())?;
        out.csv("criterion.csv", &sel.criterion_csv(&exp.grid))?;
        out.csv("estimate.csv", &sel.estimate_csv(&exp.basis))?;
    }
    if cfg.wants(Format::Json) {
        out.json(
            "estimate.json",
            &EstimateSummary {
                seed: cfg.seed,
                n,
                d: exp.d(),
                delta: exp.delta,
                alpha_hat: sel.alpha_hat,
                k_hat: sel.k_hat,
                t_hat: sel.t_hat,
                gamma_all: run.regression.gamma_all,
                point_gamma_fraction: run.regression.point_gamma_fraction(),
                error: run.error,
                oracle_error: run.oracle_error,
                lambda_hat: &sel.lambda_hat,
                estimate: &sel.s_star,
                points: &run.regression.points,
            },
        )?;
    }
    println!(
        "n={n} d={} selected k={} t={:.4} gamma={} error={:.6} -> {}",
        exp.d(),
        sel.k_hat,
        sel.t_hat,
        run.regression.gamma_all,
        run.error,
        cfg.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct TableOutput<'a> {
    report: &'a seqar_core::RiskReport,
    efficiency: &'a [EfficiencyReport],
}

pub fn risk_table(cfg: &RunConfig) -> CliResult<()> {
    let report = run_table(&cfg.signal, &cfg.noises, &cfg.n, cfg.replications, cfg.seed, &cfg.pipeline())?;
    let efficiency = match (cfg.k, cfg.r) {
        (Some(k), Some(r)) => {
            let signal = cfg.signal.compile()?;
            report
                .cells
                .iter()
                .map(|c| efficiency_ratio(c.risk, &c.noise, &signal, k, r, c.n))
                .collect::<Result<Vec<_>, _>>()?
        }
        _ => Vec::new(),
    };
    let mut out = ArtifactWriter::new(cfg, &cfg.out)?;
    if cfg.wants(Format::Csv) {
        out.csv("risk_table.csv", &report.to_csv())?;
        for c in &report.cells {
            out.csv(&format!("plot_{}_n{}_{}.csv", c.signal, c.n, c.noise), &c.plot_csv())?;
        }
        if !efficiency.is_empty() {
            let mut body = format!("{}\n", EfficiencyReport::CSV_HEADER);
            for e in &efficiency {
                body.push_str(&e.csv_row());
                body.push('\n');
            }
            out.csv("efficiency.csv", &body)?;
        }
    }
    if cfg.wants(Format::Json) {
        out.json("risk_table.json", &TableOutput { report: &report, efficiency: &efficiency })?;
    }
    println!("signal,n,noise,M,risk,relative_risk,gamma_frequency");
    for c in &report.cells {
        println!(
            "{},{},{},{},{:.6},{:.6},{:.3}",
            c.signal, c.n, c.noise, c.replications, c.risk, c.relative_risk, c.gamma_frequency
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct BetaOutput<'a> {
    n: usize,
    d: usize,
    i_max: usize,
    coefficients: &'a [f64],
    orthonormality_defect: Option<f64>,
    /// `sum (beta_hat_i - beta_i)^2` when the true coefficients are known.
    coefficient_error: Option<f64>,
    step_l2_error: f64,
}

pub fn beta(cfg: &RunConfig) -> CliResult<()> {
    let n = cfg.single_n()?;
    let noise = cfg.single_noise()?;
    let exp = Experiment::new(&cfg.signal, &noise, n, cfg.pipeline())?;
    let run = exp.run(cfg.seed)?;
    let i_max = cfg.i_max.unwrap_or(64 * exp.d());
    let psi = TrigPsi { a: cfg.signal.a, b: cfg.signal.b };
    let est = project_coefficients(&run.selection.s_star, &psi, i_max, true)?;
    let coefficient_error = exp.signal.trig_coefficients(i_max).map(|truth| beta_error(&est, &truth));
    let l2 = step_l2_error(&run.selection.s_star, &exp.signal);

    let mut out = ArtifactWriter::new(cfg, &cfg.out)?;
    if cfg.wants(Format::Csv) {
        out.csv("beta.csv", &est.to_csv())?;
    }
    if cfg.wants(Format::Json) {
        out.json(
            "beta.json",
            &BetaOutput {
                n,
                d: exp.d(),
                i_max,
                coefficients: &est.coefficients,
                orthonormality_defect: est.orthonormality_defect,
                coefficient_error,
                step_l2_error: l2,
            },
        )?;
    }
    let shown = est.coefficients.iter().take(6).map(|b| format!("{b:.6}")).collect::<Vec<_>>().join(", ");
    print!("n={n} d={} i_max={i_max} beta_hat[1..6]=[{shown}] l2_error={l2:.6e}", exp.d());
    match coefficient_error {
        Some(e) => println!(" coefficient_error={e:.6e}"),
        None => println!(),
    }
    Ok(())
}

#[derive(Serialize)]
struct PinskerConfig<'a> {
    command: &'static str,
    k: u32,
    r: f64,
    signal: Option<&'a str>,
}

#[derive(Serialize)]
struct PinskerOutput {
    k: u32,
    r: f64,
    pinsker: f64,
    sigma_star: Option<f64>,
    upsilon: Option<f64>,
}

pub fn pinsker(args: &PinskerArgs) -> CliResult<()> {
    let value = pinsker_constant(args.k, args.r)?;
    let mut result = PinskerOutput { k: args.k, r: args.r, pinsker: value, sigma_star: None, upsilon: None };
    println!("l_{}({}) = {value:.6}", args.k, args.r);
    if let Some(name) = &args.signal {
        let spec = parse_signal(name)?;
        let signal = spec.compile()?;
        let ss = sigma_star(&signal);
        let ups = upsilon_from(ss, spec.width(), args.k);
        println!("sigma_star = {ss:.6}");
        println!("upsilon = {ups:.6}");
        result.sigma_star = Some(ss);
        result.upsilon = Some(ups);
    }
    if let Some(dir) = &args.out {
        let config = PinskerConfig { command: "pinsker", k: args.k, r: args.r, signal: args.signal.as_deref() };
        let formats = args.format.clone().unwrap_or_else(|| vec![Format::Csv, Format::Json]);
        let mut out = ArtifactWriter::new(&config, dir)?;
        if formats.contains(&Format::Csv) {
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            let body = format!(
                "k,r,pinsker,sigma_star,upsilon\n{},{},{},{},{}\n",
                result.k,
                result.r,
                result.pinsker,
                opt(result.sigma_star),
                opt(result.upsilon)
            );
            out.csv("pinsker.csv", &body)?;
        }
        if formats.contains(&Format::Json) {
            out.json("pinsker.json", &result)?;
        }
    }
    Ok(())
}
