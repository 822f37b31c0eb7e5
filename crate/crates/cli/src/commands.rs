//! One function per subcommand. Each is a pure function of its config, the
//! master seed and (for `fit` and `ci`) the input series, and returns the
//! bytes to be written.

use std::path::Path;

use logcount::bootstrap::{confidence_interval, coverage_experiment, write_coverage_csv};
use logcount::coupling::estimate_beta;
use logcount::estimation::{theta_bar_mc, theta_hat};
use logcount::innovations::tv_bound_check;
use logcount::innovations::TvBoundReport;
use logcount::mc;
use logcount::process::{Model, ModelParams};
use logcount::rng::{derive_seed, tag};
use logcount::stats::{box_summary, mean, variance};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::{
    self, BoxplotConfig, CiConfig, ConstantsConfig, CoverageConfig, FitConfig, MixingConfig, SimulateConfig,
    TvCheckConfig,
};
use crate::error::{Categorize, HarnessError, Result};
use crate::ingest::{read_counts, CountSeries};
use crate::output::{json_document, Header};

/// Smallest replicate count accepted by `mc-boxplot`.
pub const MIN_BOXPLOT_REPLICATES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Fit,
    Ci,
    McBoxplot,
    Mixing,
    Coverage,
    TvCheck,
    Constants,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Fit => "fit",
            Command::Ci => "ci",
            Command::McBoxplot => "mc-boxplot",
            Command::Mixing => "mixing",
            Command::Coverage => "coverage",
            Command::TvCheck => "tv-check",
            Command::Constants => "constants",
        }
    }

    pub fn needs_data(self) -> bool {
        matches!(self, Command::Fit | Command::Ci)
    }
}

/// Everything a command produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub primary: Vec<u8>,
    /// Secondary files as `(suffix, contents)`; written next to the primary
    /// file with the suffix replacing its extension.
    pub sidecars: Vec<(String, Vec<u8>)>,
    /// Human-readable report lines.
    pub summary: Vec<String>,
}

impl Output {
    fn primary(primary: Vec<u8>) -> Self {
        Output { primary, sidecars: Vec::new(), summary: Vec::new() }
    }
}

/// Loads the config and data for `command` and runs it.
pub fn execute(command: Command, config_path: Option<&Path>, seed: Option<u64>, data: Option<&Path>) -> Result<Output> {
    fn load<C: DeserializeOwned + Default>(path: Option<&Path>, seed: Option<u64>) -> Result<(C, u64)> {
        let l = config::load::<C>(path)?;
        Ok((l.config, seed.or(l.seed).unwrap_or(0)))
    }
    let series = |column: Option<&str>| -> Result<CountSeries> {
        let path = data.ok_or_else(|| HarnessError::Config("this command needs --data <csv>".into()))?;
        read_counts(path, column)
    };
    match command {
        Command::Simulate => {
            let (c, s) = load(config_path, seed)?;
            simulate(&c, s)
        }
        Command::Fit => {
            let (c, s): (FitConfig, u64) = load(config_path, seed)?;
            fit(&c, &series(c.column.as_deref())?, s)
        }
        Command::Ci => {
            let (c, s): (CiConfig, u64) = load(config_path, seed)?;
            ci(&c, &series(c.column.as_deref())?, s)
        }
        Command::McBoxplot => {
            let (c, s) = load(config_path, seed)?;
            mc_boxplot(&c, s)
        }
        Command::Mixing => {
            let (c, s) = load(config_path, seed)?;
            mixing(&c, s)
        }
        Command::Coverage => {
            let (c, s) = load(config_path, seed)?;
            coverage(&c, s)
        }
        Command::TvCheck => {
            let (c, s) = load(config_path, seed)?;
            tv_check(&c, s)
        }
        Command::Constants => {
            let (c, s) = load(config_path, seed)?;
            constants(&c, s)
        }
    }
}

fn model(params: &ModelParams<f64>) -> Result<Model<f64>> {
    Model::new(*params).config()
}

fn data_digest(values: &[u64]) -> String {
    let mut h = Sha256::new();
    for v in values {
        h.update(v.to_le_bytes());
    }
    hex::encode(h.finalize())
}

pub fn simulate(cfg: &SimulateConfig, seed: u64) -> Result<Output> {
    let m = model(&cfg.model)?;
    let path = m.simulate(cfg.n, seed).numeric()?;
    let mut out = Header::new("simulate", cfg, seed).csv_comment().into_bytes();
    path.write_csv(&mut out)?;
    let mut summary = vec![
        format!("final sigma: {}", path.sigma[cfg.n]),
        format!("max X: {}", path.x.iter().max().copied().unwrap_or(0)),
    ];
    if cfg.n >= 2 {
        let fit = theta_hat::<f64>(&path.x[1..]).numeric()?;
        summary.push(format!("theta_hat: {}", fit.theta_hat));
    }
    Ok(Output { summary, ..Output::primary(out) })
}

pub fn fit(cfg: &FitConfig, series: &CountSeries, seed: u64) -> Result<Output> {
    let fit = theta_hat::<f64>(&series.values).data()?;
    let header = Header::new("fit", cfg, seed);
    let body = json!({
        "data_sha256": data_digest(&series.values),
        "n": fit.n,
        "theta_hat": fit.theta_hat,
        "trend_curve": fit.trend_curve(),
    });
    let mut out = Output::primary(json_document(&header, &body));
    out.summary.push(format!("theta_hat: {} (n = {})", fit.theta_hat, fit.n));
    Ok(out)
}

pub fn ci(cfg: &CiConfig, series: &CountSeries, seed: u64) -> Result<Output> {
    cfg.bootstrap.validate().config()?;
    let fit = theta_hat::<f64>(&series.values).data()?;
    let warnings = cfg.bootstrap.warnings(fit.n);
    let ci = confidence_interval(&fit, &cfg.bootstrap, seed).numeric()?;
    let header = Header::new("ci", cfg, seed);
    let body = json!({
        "data_sha256": data_digest(&series.values),
        "n": fit.n,
        "theta_hat": ci.theta_hat,
        "lower": ci.lower,
        "upper": ci.upper,
        "level": ci.level,
        "u_star": ci.u_star,
        "half_width": ci.half_width,
        "bootstrap": cfg.bootstrap,
        "warnings": warnings,
    });
    let mut out = Output::primary(json_document(&header, &body));
    out.summary.extend(warnings.iter().map(|w| format!("warning: {w}")));
    out.summary.push(format!("{}% interval: [{}, {}]", ci.level * 100.0, ci.lower, ci.upper));
    Ok(out)
}

/// Per-cell summary of the `mc-boxplot` experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxplotCell {
    pub family: String,
    pub n: usize,
    pub replicates: usize,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub iqr: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub mean: f64,
    pub sd: f64,
    /// Normal-theory standard error of the sample median.
    pub median_stderr: f64,
    pub theta_bar: f64,
    pub theta_bar_stderr: f64,
    pub theta_bar_loops: usize,
}

/// Replicated `θ̂` for one model and sample size; replicate `r` is seeded by
/// `(seed, n, r)` only, so different families share random numbers.
pub fn theta_hat_replicates(m: &Model<f64>, n: usize, replicates: usize, seed: u64) -> logcount::Result<Vec<f64>> {
    mc::try_map(replicates, |r| {
        let path = m.simulate(n, derive_seed(seed, &[tag::BOXPLOT, n as u64, r as u64]))?;
        Ok(theta_hat::<f64>(&path.x[1..])?.theta_hat)
    })
}

pub fn boxplot_cell(m: &Model<f64>, n: usize, replicates: usize, theta_bar_loops: usize, seed: u64) -> logcount::Result<(BoxplotCell, Vec<f64>)> {
    let values = theta_hat_replicates(m, n, replicates, seed)?;
    let target = theta_bar_mc(m, n, theta_bar_loops, seed)?;
    let b = box_summary(&values);
    let sd = variance(&values).sqrt();
    let cell = BoxplotCell {
        family: m.params().innovation.family().to_string(),
        n,
        replicates,
        q1: b.q1,
        median: b.median,
        q3: b.q3,
        iqr: b.iqr,
        whisker_low: b.whisker_low,
        whisker_high: b.whisker_high,
        mean: mean(&values),
        sd,
        median_stderr: sd * (std::f64::consts::PI / 2.0).sqrt() / (replicates as f64).sqrt(),
        theta_bar: target.theta_bar,
        theta_bar_stderr: target.stderr,
        theta_bar_loops,
    };
    Ok((cell, values))
}

pub fn mc_boxplot(cfg: &BoxplotConfig, seed: u64) -> Result<Output> {
    if cfg.replicates < MIN_BOXPLOT_REPLICATES {
        return Err(HarnessError::Config(format!(
            "replicates must be >= {MIN_BOXPLOT_REPLICATES}, got {}",
            cfg.replicates
        )));
    }
    if cfg.n.iter().any(|&n| n < 2) || cfg.theta_bar_loops == 0 {
        return Err(HarnessError::Config("need n >= 2 and theta_bar_loops >= 1".into()));
    }
    let models = cfg.model.models().iter().map(model).collect::<Result<Vec<_>>>()?;
    let header = Header::new("mc-boxplot", cfg, seed);
    let mut csv = header.csv_comment();
    csv.push_str("family,n,replicate,theta_hat\n");
    let mut cells = Vec::new();
    let mut summary = Vec::new();
    for m in &models {
        for &n in &cfg.n {
            let (cell, values) = boxplot_cell(m, n, cfg.replicates, cfg.theta_bar_loops, seed).numeric()?;
            for (r, v) in values.iter().enumerate() {
                csv.push_str(&format!("{},{n},{r},{v:?}\n", cell.family));
            }
            summary.push(format!(
                "{} n={}: median {} IQR {} theta_bar {}",
                cell.family, n, cell.median, cell.iqr, cell.theta_bar
            ));
            cells.push(cell);
        }
    }
    Ok(Output {
        primary: csv.into_bytes(),
        sidecars: vec![("summary.json".into(), json_document(&header, &json!({ "cells": cells })))],
        summary,
    })
}

pub fn mixing(cfg: &MixingConfig, seed: u64) -> Result<Output> {
    let m = model(&cfg.model)?;
    if cfg.n.is_empty() {
        return Err(HarnessError::Config("n grid is empty".into()));
    }
    let result = estimate_beta(&m, cfg.k, &cfg.n, cfg.horizon, cfg.replicates, seed).map_err(|e| match e {
        logcount::Error::Usage(msg) => HarnessError::Config(msg),
        e => HarnessError::Numeric(e.to_string()),
    })?;
    let floor = cfg.slope_floor.unwrap_or(10.0 / cfg.replicates as f64);
    let slope = result.log_slope(floor);
    let contraction = m.contraction();
    let header = Header::new("mixing", cfg, seed);
    let mut csv = header.csv_comment().into_bytes();
    result.write_csv(&mut csv)?;
    let body = json!({
        "log_slope": slope,
        "slope_floor": floor,
        "contraction": contraction,
        "ln_contraction": contraction.ln(),
    });
    let summary = vec![match slope {
        Some(s) => format!("log-slope {s} (ln(a + b*gamma) = {})", contraction.ln()),
        None => "log-slope undefined: fewer than two beta_hat values above the floor".into(),
    }];
    Ok(Output { primary: csv, sidecars: vec![("summary.json".into(), json_document(&header, &body))], summary })
}

pub fn coverage(cfg: &CoverageConfig, seed: u64) -> Result<Output> {
    if cfg.cells.is_empty() || cfg.alphas.is_empty() || cfg.mc_loops == 0 || cfg.theta_bar_loops == 0 {
        return Err(HarnessError::Config("coverage needs cells, alphas, mc_loops >= 1 and theta_bar_loops >= 1".into()));
    }
    if cfg.n < 2 {
        return Err(HarnessError::Config(format!("n must be >= 2, got {}", cfg.n)));
    }
    let models = cfg.model.models().iter().map(model).collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for m in &models {
        let target = theta_bar_mc(m, cfg.n, cfg.theta_bar_loops, seed).numeric()?;
        let table = coverage_experiment(m, cfg.n, &cfg.cells, &cfg.alphas, cfg.mc_loops, cfg.replications, Some(target.theta_bar), seed)
            .map_err(|e| match e {
                logcount::Error::Domain(msg) => HarnessError::Config(msg),
                e => HarnessError::Numeric(e.to_string()),
            })?;
        targets.push(json!({ "family": m.params().innovation.family(), "theta_bar": target }));
        rows.extend(table.rows);
    }
    let header = Header::new("coverage", cfg, seed);
    let mut csv = header.csv_comment().into_bytes();
    write_coverage_csv(&rows, &mut csv)?;

    let families: Vec<&str> = models.iter().map(|m| m.params().innovation.family()).collect();
    let mut wide = header.csv_comment();
    wide.push_str("l_n,N_n");
    for f in &families {
        for a in &cfg.alphas {
            wide.push_str(&format!(",{f}_alpha_{a:?}"));
        }
    }
    wide.push('\n');
    let mut summary = Vec::new();
    for c in &cfg.cells {
        let mut line = format!("{:?},{}", c.l_n, c.nn_window);
        for f in &families {
            for &a in &cfg.alphas {
                let v = rows
                    .iter()
                    .find(|r| r.family == *f && r.l_n == c.l_n && r.nn_window == c.nn_window && r.alpha == a)
                    .map(|r| r.coverage)
                    .unwrap_or(f64::NAN);
                line.push_str(&format!(",{v:?}"));
            }
        }
        summary.push(line.replace(',', "  "));
        wide.push_str(&line);
        wide.push('\n');
    }
    Ok(Output {
        primary: csv,
        sidecars: vec![
            ("table.csv".into(), wide.into_bytes()),
            ("summary.json".into(), json_document(&header, &json!({ "theta_bar": targets }))),
        ],
        summary,
    })
}

pub fn tv_check(cfg: &TvCheckConfig, seed: u64) -> Result<Output> {
    let pairs = TvBoundReport::grid_pairs(&cfg.sigmas);
    let header = Header::new("tv-check", cfg, seed);
    let mut csv = header.csv_comment();
    csv.push_str("family,sigma,sigma_prime,tv,bound,slack\n");
    let mut summary = Vec::new();
    for spec in &cfg.innovations {
        spec.validate().config()?;
        let report = tv_bound_check(spec, &pairs).map_err(|e| match e {
            logcount::Error::Domain(msg) => HarnessError::Config(msg),
            e => HarnessError::Numeric(e.to_string()),
        })?;
        for p in &report.pairs {
            csv.push_str(&format!(
                "{},{:?},{:?},{:?},{:?},{:?}\n",
                spec.family(),
                p.sigma,
                p.sigma_prime,
                p.tv,
                p.bound,
                p.slack
            ));
        }
        summary.push(format!(
            "{}: {} pairs, Gamma = {}, min slack {}",
            spec.family(),
            report.pairs.len(),
            report.big_gamma,
            report.min_slack()
        ));
    }
    Ok(Output { summary, ..Output::primary(csv.into_bytes()) })
}

pub fn constants(cfg: &ConstantsConfig, seed: u64) -> Result<Output> {
    let mut rows = Vec::new();
    for spec in &cfg.innovations {
        let c = spec.constants().config()?;
        rows.push(json!({
            "innovation": spec,
            "monotone_density": spec.monotone_density(),
            "scale_mlr": spec.scale_mlr(),
            "constants": c,
        }));
    }
    let header = Header::new("constants", cfg, seed);
    let summary = rows.iter().map(|r| format!("{}: {}", r["innovation"]["family"], r["constants"])).collect();
    Ok(Output { summary, ..Output::primary(json_document(&header, &json!({ "families": rows }))) })
}
