//! Subcommand pipelines: simulate -> filter -> solve -> price, each emitting
//! its CSV/JSON artifacts plus the reproduction manifest.

use defport_core::bsde::{solve_bsde, BsdeSolution, InfoMode};
use defport_core::drivers::{
    k_limit, KPoint, MonotoneDirection, PowerSupGenerator, StrategyBound,
};
use defport_core::filtering::{filter_paths, FilterOutput};
use defport_core::log_strategy::{log_value, CoeffSource};
use defport_core::paths::{simulate_paths, wealth_path, Controls, PathBundle, StrategyKind};
use defport_core::pricing::{exp_value, hodges_price, information_price, ClaimSpec};
use defport_core::EngineError;

use crate::artifacts::{fmt_f, write_manifest, Csv, OutDir};
use crate::config::{ExperimentConfig, UtilityKindSection};

#[derive(Debug)]
pub enum CliError {
    /// Exit 2: configuration/schema problems.
    Config(String),
    /// Exit 3: numerical failure; a diagnostics file is written.
    Engine(EngineError),
    /// Exit 4: filesystem problems.
    Io(std::io::Error),
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::InvalidModel { field, message } => {
                CliError::Config(format!("{field}: {message}"))
            }
            other => CliError::Engine(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

pub fn run(subcommand: &str, cfg: &ExperimentConfig, out: &OutDir) -> Result<(), CliError> {
    let spec = cfg.model_spec();
    let bundle = simulate_paths(
        &spec,
        cfg.numerics.steps,
        cfg.numerics.paths,
        cfg.numerics.seed,
    )?;
    let info = cfg.info_mode();
    let needs_filter = info == InfoMode::Partial || subcommand == "info-price";
    let filter = if needs_filter {
        if spec.regime.is_none() {
            return Err(CliError::Config(
                "regime: this run requires a regime section".to_string(),
            ));
        }
        Some(filter_paths(&spec, &bundle)?)
    } else {
        None
    };

    match subcommand {
        "simulate" => cmd_simulate(cfg, &spec, &bundle, out)?,
        "log" => cmd_log(cfg, &spec, &bundle, filter.as_ref(), out)?,
        "power" => cmd_power(cfg, &spec, &bundle, filter.as_ref(), out)?,
        "exp" => cmd_exp(cfg, &spec, &bundle, filter.as_ref(), out)?,
        "price" => cmd_price(cfg, &spec, &bundle, filter.as_ref(), out)?,
        "info-price" => cmd_info_price(cfg, &spec, &bundle, filter.as_ref(), out)?,
        other => return Err(CliError::Config(format!("unknown subcommand {other}"))),
    }

    if let Some(f) = &filter {
        write_filter_trace(cfg, &bundle, f, out)?;
    }
    write_manifest(out, subcommand, cfg)?;
    Ok(())
}

fn cmd_simulate(
    cfg: &ExperimentConfig,
    spec: &defport_core::ModelSpec,
    bundle: &PathBundle,
    out: &OutDir,
) -> Result<(), CliError> {
    let n = bundle.n_assets;
    let p = bundle.n_defaults;
    let zero = vec![0.0; n];
    let pi = cfg.outputs.wealth_pi.clone().unwrap_or(zero);
    let wealth = wealth_path(spec, bundle, &Controls::Constant(&pi), StrategyKind::Proportional, 1.0)?;

    let mut header: Vec<String> = vec!["path_id".into(), "step".into(), "t".into()];
    for l in 0..n {
        header.push(format!("S_{}", l + 1));
    }
    for j in 0..p {
        header.push(format!("N_{}", j + 1));
    }
    header.push("X".into());
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut csv = Csv::new(&header_refs);

    let limit = cfg.outputs_max_paths().min(bundle.n_paths);
    for path in 0..limit {
        for point in 0..=bundle.n_steps {
            let mut row: Vec<String> = vec![
                path.to_string(),
                point.to_string(),
                fmt_f(bundle.grid.t[point]),
            ];
            for &s in bundle.s_at(path, point) {
                row.push(fmt_f(s));
            }
            for &nv in bundle.n_at(path, point) {
                row.push(nv.to_string());
            }
            row.push(fmt_f(wealth.at(path, point, bundle.n_steps + 1)));
            csv.row(&row);
        }
    }
    out.write_text("paths.csv", &csv.finish())?;
    Ok(())
}

fn cmd_log(
    cfg: &ExperimentConfig,
    spec: &defport_core::ModelSpec,
    bundle: &PathBundle,
    filter: Option<&FilterOutput>,
    out: &OutDir,
) -> Result<(), CliError> {
    let source = if cfg.info_mode() == InfoMode::Partial {
        CoeffSource::Filtered
    } else {
        CoeffSource::Exact
    };
    let sol = log_value(spec, bundle, 1.0, source, filter)?;
    let mut csv = Csv::new(&["t", "pi_hat_mean", "epsilon_mean", "value", "se"]);
    let n_points = bundle.n_steps + 1;
    for point in 0..n_points {
        let mut pi_acc = 0.0;
        let mut eps_acc = 0.0;
        for path in 0..bundle.n_paths {
            pi_acc += sol.pi_at(path, point);
            eps_acc += sol.eps_at(path, point);
        }
        let nf = bundle.n_paths as f64;
        csv.row(&[
            fmt_f(bundle.grid.t[point]),
            fmt_f(pi_acc / nf),
            fmt_f(eps_acc / nf),
            fmt_f(sol.value),
            fmt_f(sol.value_se),
        ]);
    }
    out.write_text("log.csv", &csv.finish())?;
    Ok(())
}

fn write_solution_csv(
    name: &str,
    bundle: &PathBundle,
    sol: &BsdeSolution,
    out: &OutDir,
) -> Result<(), CliError> {
    let mut csv = Csv::new(&["step", "t", "y_mean", "y_sd", "z_mean", "u_mean", "argopt_mean", "r_squared"]);
    let m = bundle.n_steps;
    let nf = bundle.n_paths as f64;
    for step in 0..m {
        let mut y_acc = 0.0;
        let mut y_sq = 0.0;
        let mut z_acc = 0.0;
        let mut u_acc = 0.0;
        let mut c_acc = 0.0;
        for path in 0..bundle.n_paths {
            let y = sol.y_at(path, step);
            y_acc += y;
            y_sq += y * y;
            z_acc += sol.z[(path * m + step) * bundle.n_assets];
            u_acc += sol.u[(path * m + step) * bundle.n_defaults];
            if let Some(c) = &sol.control {
                c_acc += c[(path * m + step) * bundle.n_assets];
            }
        }
        let y_mean = y_acc / nf;
        let y_var = (y_sq / nf - y_mean * y_mean).max(0.0);
        csv.row(&[
            step.to_string(),
            fmt_f(bundle.grid.t[step]),
            fmt_f(y_mean),
            fmt_f(y_var.sqrt()),
            fmt_f(z_acc / nf),
            fmt_f(u_acc / nf),
            if sol.control.is_some() { fmt_f(c_acc / nf) } else { String::new() },
            fmt_f(sol.diagnostics[step].r_squared),
        ]);
    }
    // Terminal row: Y stats only.
    let mut y_acc = 0.0;
    let mut y_sq = 0.0;
    for path in 0..bundle.n_paths {
        let y = sol.y_at(path, m);
        y_acc += y;
        y_sq += y * y;
    }
    let y_mean = y_acc / nf;
    let y_var = (y_sq / nf - y_mean * y_mean).max(0.0);
    csv.row(&[
        m.to_string(),
        fmt_f(bundle.grid.t[m]),
        fmt_f(y_mean),
        fmt_f(y_var.sqrt()),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
    ]);
    out.write_text(name, &csv.finish())?;
    Ok(())
}

fn cmd_power(
    cfg: &ExperimentConfig,
    spec: &defport_core::ModelSpec,
    bundle: &PathBundle,
    filter: Option<&FilterOutput>,
    out: &OutDir,
) -> Result<(), CliError> {
    if cfg.utility.kind != UtilityKindSection::Power {
        return Err(CliError::Config(
            "utility.kind: the power subcommand requires kind = \"power\"".to_string(),
        ));
    }
    let opts = cfg.solve_options();
    let mut points = Vec::new();
    let mut csv = Csv::new(&["k", "y0", "se"]);
    for (i, &k) in cfg.bounds.k_list.iter().enumerate() {
        let gen = PowerSupGenerator::new(cfg.utility.gamma, StrategyBound::new(k)?, spec)?;
        let sol = solve_bsde(&gen, spec, bundle, filter, &opts)?;
        csv.row(&[fmt_f(k), fmt_f(sol.y0), fmt_f(sol.y0_se)]);
        points.push(KPoint { k, value: sol.y0, se: sol.y0_se });
        write_solution_csv(&format!("solution_k{i}.csv"), bundle, &sol, out)?;
    }
    out.write_text("power.csv", &csv.finish())?;
    if points.len() >= 3 {
        let report = k_limit(&points, MonotoneDirection::NonDecreasing)?;
        out.write_json("power_klimit.json", &report)?;
    }
    Ok(())
}

fn cmd_exp(
    cfg: &ExperimentConfig,
    spec: &defport_core::ModelSpec,
    bundle: &PathBundle,
    filter: Option<&FilterOutput>,
    out: &OutDir,
) -> Result<(), CliError> {
    if cfg.utility.kind != UtilityKindSection::Exp {
        return Err(CliError::Config(
            "utility.kind: the exp subcommand requires kind = \"exp\"".to_string(),
        ));
    }
    let claim = cfg.utility.claim.as_ref().map(|c| c.to_core());
    let opts = cfg.solve_options();
    let info = cfg.info_mode();
    let mut points = Vec::new();
    let mut csv = Csv::new(&["k", "j0", "se"]);
    for (i, &k) in cfg.bounds.k_list.iter().enumerate() {
        let (v, sol) = exp_value(
            claim.as_ref(),
            info,
            StrategyBound::new(k)?,
            cfg.utility.gamma,
            spec,
            bundle,
            filter,
            &opts,
        )?;
        csv.row(&[fmt_f(k), fmt_f(v.value), fmt_f(v.se)]);
        points.push(KPoint { k, value: v.value, se: v.se });
        write_solution_csv(&format!("solution_k{i}.csv"), bundle, &sol, out)?;
    }
    out.write_text("exp.csv", &csv.finish())?;
    if points.len() >= 3 {
        let report = k_limit(&points, MonotoneDirection::NonIncreasing)?;
        out.write_json("exp_klimit.json", &report)?;
    }
    Ok(())
}

fn require_claim(cfg: &ExperimentConfig) -> Result<ClaimSpec, CliError> {
    cfg.utility
        .claim
        .as_ref()
        .map(|c| c.to_core())
        .ok_or_else(|| CliError::Config("utility.claim: pricing requires a claim".to_string()))
}

fn cmd_price(
    cfg: &ExperimentConfig,
    spec: &defport_core::ModelSpec,
    bundle: &PathBundle,
    filter: Option<&FilterOutput>,
    out: &OutDir,
) -> Result<(), CliError> {
    let claim = require_claim(cfg)?;
    let report = hodges_price(
        &claim,
        cfg.info_mode(),
        &cfg.bounds.k_list,
        cfg.utility.gamma,
        spec,
        bundle,
        filter,
        &cfg.solve_options(),
    )?;
    let mut csv = Csv::new(&["k", "j_zero", "j_zero_se", "j_claim", "j_claim_se", "price", "price_se"]);
    for r in &report.rows {
        csv.row(&[
            fmt_f(r.k),
            fmt_f(r.j_zero),
            fmt_f(r.j_zero_se),
            fmt_f(r.j_claim),
            fmt_f(r.j_claim_se),
            fmt_f(r.price),
            fmt_f(r.price_se),
        ]);
    }
    out.write_text("price.csv", &csv.finish())?;
    out.write_json("price.json", &report)?;
    Ok(())
}

fn cmd_info_price(
    cfg: &ExperimentConfig,
    spec: &defport_core::ModelSpec,
    bundle: &PathBundle,
    filter: Option<&FilterOutput>,
    out: &OutDir,
) -> Result<(), CliError> {
    let claim = require_claim(cfg)?;
    let filter = filter.ok_or_else(|| {
        CliError::Config("regime: info-price requires a regime section".to_string())
    })?;
    if cfg.bounds.k_list.len() < 3 {
        return Err(CliError::Config(
            "bounds.k_list: info-price needs at least 3 bounds for the k-limit".to_string(),
        ));
    }
    let report = information_price(
        &claim,
        &cfg.bounds.k_list,
        cfg.utility.gamma,
        spec,
        bundle,
        filter,
        &cfg.solve_options(),
    )?;
    let mut csv = Csv::new(&[
        "k", "p_bar_k", "p_bar_se", "p_k", "p_se", "d_k", "d_se",
    ]);
    for r in &report.rows {
        csv.row(&[
            fmt_f(r.k),
            fmt_f(r.p_bar),
            fmt_f(r.p_bar_se),
            fmt_f(r.p),
            fmt_f(r.p_se),
            fmt_f(r.d),
            fmt_f(r.d_se),
        ]);
    }
    out.write_text("info_price.csv", &csv.finish())?;
    out.write_json("info_price.json", &report)?;
    Ok(())
}

fn write_filter_trace(
    cfg: &ExperimentConfig,
    bundle: &PathBundle,
    filter: &FilterOutput,
    out: &OutDir,
) -> Result<(), CliError> {
    let r = filter.n_regimes;
    let mut header: Vec<String> = vec!["path_id".into(), "step".into()];
    for i in 0..r {
        header.push(format!("posterior_{}", i + 1));
    }
    header.push("mu_tilde".into());
    header.push("lambda_tilde".into());
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut csv = Csv::new(&header_refs);
    let limit = cfg.outputs_max_paths().min(bundle.n_paths);
    for path in 0..limit {
        for point in 0..filter.n_points {
            let mut row = vec![path.to_string(), point.to_string()];
            for &pr in filter.posterior_at(path, point) {
                row.push(fmt_f(pr));
            }
            row.push(fmt_f(filter.mu_tilde_at(path, point, bundle.n_assets)[0]));
            row.push(fmt_f(filter.lambda_tilde_at(path, point, bundle.n_defaults)[0]));
            csv.row(&row);
        }
    }
    out.write_text("filter_trace.csv", &csv.finish())?;
    Ok(())
}

impl ExperimentConfig {
    /// Path-level exports are capped to keep artifact sizes sane.
    pub fn outputs_max_paths(&self) -> usize {
        1000
    }
}
