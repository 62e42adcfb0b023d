//! Per-instrument study: descriptive correlations plus the plain, volume and
//! transaction-count model fits, rendered as text tables or JSON.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::garch::ModelSpec;
use crate::mcmc::{
    integrated_autocorrelation_time, run_chain, summarize, Chain, ChainConfig, PosteriorSummary,
};
use crate::timeseries::{compute_log_returns, model_returns, pearson_correlation};
use crate::timeseries::{ExogenousMode, PriceSeries};

#[derive(Debug, Clone, PartialEq)]
pub struct Instrument {
    pub name: String,
    pub prices: PriceSeries,
}

impl Instrument {
    pub fn new(name: impl Into<String>, prices: PriceSeries) -> Self {
        Self {
            name: name.into(),
            prices,
        }
    }
}

/// Pearson correlations over the return-aligned dates. `None` when a column
/// is absent or degenerate.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Correlations {
    pub returns_volume: Option<f64>,
    pub returns_transactions: Option<f64>,
    pub volume_transactions: Option<f64>,
}

pub fn correlations(prices: &PriceSeries) -> Correlations {
    let Ok(returns) = compute_log_returns(prices) else {
        return Correlations::default();
    };
    let aligned = |mode| prices.exogenous(mode).map(|v| &v[1..]);
    let volume = aligned(ExogenousMode::Volume);
    let transactions = aligned(ExogenousMode::Transactions);
    let corr = |x: Option<&[f64]>, y: Option<&[f64]>| {
        x.zip(y).and_then(|(x, y)| pearson_correlation(x, y).ok())
    };
    Correlations {
        returns_volume: corr(Some(returns.returns()), volume),
        returns_transactions: corr(Some(returns.returns()), transactions),
        volume_transactions: corr(volume, transactions),
    }
}

/// SHA-256 over dates, closes and exogenous columns, hex encoded.
pub fn data_fingerprint(prices: &PriceSeries) -> String {
    let mut h = Sha256::new();
    for d in prices.dates() {
        h.update(d.to_string().as_bytes());
    }
    let mut column = |tag: &[u8], values: Option<&[f64]>| {
        h.update(tag);
        if let Some(values) = values {
            for v in values {
                h.update(v.to_bits().to_le_bytes());
            }
        }
    };
    column(b"close", Some(prices.closes()));
    column(b"volume", prices.volumes());
    column(b"transactions", prices.transactions());
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub seed: u64,
    pub summary: PosteriorSummary,
    /// Integrated autocorrelation time per parameter, `None` when undefined.
    pub autocorrelation_times: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum FitOutcome {
    Completed(FitReport),
    Skipped { reason: String },
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitCell {
    pub mode: ExogenousMode,
    pub outcome: FitOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentReport {
    pub name: String,
    pub observations: usize,
    pub data_fingerprint: String,
    pub correlations: Correlations,
    pub fits: Vec<FitCell>,
}

impl InstrumentReport {
    pub fn fit(&self, mode: ExogenousMode) -> Option<&FitOutcome> {
        self.fits.iter().find(|c| c.mode == mode).map(|c| &c.outcome)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    /// Chain settings; per-fit seeds derive from `config.seed`.
    pub config: ChainConfig,
    pub instruments: Vec<InstrumentReport>,
}

/// Seed for the fit of `instrument` under `mode`.
pub fn fit_seed(base: u64, instrument: &str, mode: ExogenousMode) -> u64 {
    crate::derive_seed(base, instrument, mode as u64)
}

/// Runs one chain for `instrument` under `mode` and summarizes it.
pub fn fit_instrument(
    instrument: &Instrument,
    mode: ExogenousMode,
    config: &ChainConfig,
) -> Result<(FitReport, Chain)> {
    let seed = fit_seed(config.seed, &instrument.name, mode);
    fit_with_seed(&instrument.prices, mode, config, seed)
}

fn fit_with_seed(
    prices: &PriceSeries,
    mode: ExogenousMode,
    config: &ChainConfig,
    seed: u64,
) -> Result<(FitReport, Chain)> {
    let data = model_returns(prices, mode)?;
    let chain = run_chain(&data, &ModelSpec::new(mode), &config.with_seed(seed))?;
    let autocorrelation_times = (0..chain.dim())
        .map(|j| integrated_autocorrelation_time(&chain, j).ok())
        .collect();
    let report = FitReport {
        seed,
        summary: summarize(&chain),
        autocorrelation_times,
    };
    Ok((report, chain))
}

fn skip_reason(prices: &PriceSeries, mode: ExogenousMode) -> Option<String> {
    (mode != ExogenousMode::None && prices.exogenous(mode).is_none())
        .then(|| format!("no {mode} column"))
}

fn instrument_shell(instrument: &Instrument, name: String) -> InstrumentReport {
    InstrumentReport {
        name,
        observations: instrument.prices.len(),
        data_fingerprint: data_fingerprint(&instrument.prices),
        correlations: correlations(&instrument.prices),
        fits: Vec::new(),
    }
}

/// Fits every available model variant of every instrument.
///
/// Fits run concurrently; a failing fit is recorded in its own cell and does
/// not affect the others. The result does not depend on completion order.
pub fn run_study(instruments: &[Instrument], config: &ChainConfig) -> StudyReport {
    let cells: Vec<(usize, ExogenousMode)> = (0..instruments.len())
        .flat_map(|i| ExogenousMode::ALL.into_iter().map(move |m| (i, m)))
        .collect();
    let outcomes: Vec<FitOutcome> = cells
        .par_iter()
        .map(|&(i, mode)| {
            let inst = &instruments[i];
            if let Some(reason) = skip_reason(&inst.prices, mode) {
                log::info!("{}: skipping {mode} model: {reason}", inst.name);
                return FitOutcome::Skipped { reason };
            }
            match fit_instrument(inst, mode, config) {
                Ok((fit, _)) => FitOutcome::Completed(fit),
                Err(e) => FitOutcome::Failed {
                    error: e.to_string(),
                },
            }
        })
        .collect();

    let mut reports: Vec<InstrumentReport> = instruments
        .iter()
        .map(|inst| instrument_shell(inst, inst.name.clone()))
        .collect();
    for ((i, mode), outcome) in cells.into_iter().zip(outcomes) {
        reports[i].fits.push(FitCell { mode, outcome });
    }
    StudyReport {
        config: *config,
        instruments: reports,
    }
}

/// A single-model report for `instrument`, with the retained chains.
///
/// With `chains > 1`, each chain gets its own row named `name#k` and a seed
/// derived from the cell seed.
pub fn fit_report(
    instrument: &Instrument,
    mode: ExogenousMode,
    config: &ChainConfig,
    chains: usize,
) -> Result<(StudyReport, Vec<Chain>)> {
    if chains == 0 {
        return Err(Error::InvalidConfig("need at least one chain".into()));
    }
    if let Some(reason) = skip_reason(&instrument.prices, mode) {
        return Err(Error::InvalidConfig(reason));
    }
    let base = fit_seed(config.seed, &instrument.name, mode);
    let seeds: Vec<u64> = if chains == 1 {
        vec![base]
    } else {
        (0..chains as u64)
            .map(|k| crate::derive_seed(base, "chain", k))
            .collect()
    };
    let fits = seeds
        .par_iter()
        .map(|&seed| fit_with_seed(&instrument.prices, mode, config, seed))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(chains);
    let mut out = Vec::with_capacity(chains);
    for (k, (fit, chain)) in fits.into_iter().enumerate() {
        let name = if chains == 1 {
            instrument.name.clone()
        } else {
            format!("{}#{}", instrument.name, k + 1)
        };
        let mut row = instrument_shell(instrument, name);
        row.fits.push(FitCell {
            mode,
            outcome: FitOutcome::Completed(fit),
        });
        rows.push(row);
        out.push(chain);
    }
    Ok((
        StudyReport {
            config: *config,
            instruments: rows,
        },
        out,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "table" | "text" => Ok(ReportFormat::Table),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format `{other}`")),
        }
    }
}

pub fn render_report(report: &StudyReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Table => render_tables(report),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report is serializable");
            s.push('\n');
            s
        }
    }
}

pub fn parse_report(json: &str) -> Result<StudyReport> {
    Ok(serde_json::from_str(json)?)
}

const NAME_WIDTH: usize = 24;
const COL_WIDTH: usize = 9;

fn fmt3(v: f64) -> String {
    format!("{v:.3}")
}

fn fmt_opt(v: Option<f64>, precision: usize) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.precision$}"))
}

fn title(mode: ExogenousMode) -> &'static str {
    match mode {
        ExogenousMode::None => "GARCH(1,1) without exogenous term",
        ExogenousMode::Volume => "GARCH(1,1) with trading volume",
        ExogenousMode::Transactions => "GARCH(1,1) with number of transactions",
    }
}

fn name_width(report: &StudyReport) -> usize {
    report
        .instruments
        .iter()
        .map(|i| i.name.chars().count() + 2)
        .fold(NAME_WIDTH, usize::max)
}

fn push_row(out: &mut String, width: usize, label: &str, cells: &[String]) {
    let mut line = format!("{label:<width$}");
    for c in cells {
        let _ = write!(line, "{c:>COL_WIDTH$}");
    }
    out.push_str(line.trim_end());
    out.push('\n');
}

/// Estimate row and SD row per instrument; columns alpha, beta, omega,
/// [gamma], alpha+beta.
fn render_table(out: &mut String, report: &StudyReport, mode: ExogenousMode, width: usize) {
    let with_gamma = mode != ExogenousMode::None;
    let mut headers = vec!["α", "β", "ω"];
    if with_gamma {
        headers.push("γ");
    }
    headers.push("α+β");
    let total = width + COL_WIDTH * headers.len();

    out.push_str(title(mode));
    out.push('\n');
    out.push_str(&"=".repeat(total));
    out.push('\n');
    push_row(
        out,
        width,
        "",
        &headers.iter().map(|h| h.to_string()).collect::<Vec<_>>(),
    );
    out.push_str(&"-".repeat(total));
    out.push('\n');

    for inst in &report.instruments {
        match inst.fit(mode) {
            None => {}
            Some(FitOutcome::Completed(fit)) => {
                let s = &fit.summary;
                let pick = |v: &[f64], name: &str| {
                    s.parameter_names
                        .iter()
                        .position(|n| n == name)
                        .map_or_else(|| "n/a".to_string(), |i| fmt3(v[i]))
                };
                let mut names = vec!["alpha", "beta", "omega"];
                if with_gamma {
                    names.push("gamma");
                }
                let mut est: Vec<String> = names.iter().map(|n| pick(&s.means, n)).collect();
                est.push(fmt3(s.persistence_mean));
                let sd: Vec<String> = names.iter().map(|n| pick(&s.sds, n)).collect();
                push_row(out, width, &inst.name, &est);
                push_row(out, width, "  SD", &sd);
            }
            Some(FitOutcome::Skipped { reason }) => {
                let _ = writeln!(out, "{:<width$}skipped: {reason}", inst.name);
            }
            Some(FitOutcome::Failed { error }) => {
                let _ = writeln!(out, "{:<width$}failed: {error}", inst.name);
            }
        }
    }
    out.push_str(&"=".repeat(total));
    out.push('\n');
}

fn render_tables(report: &StudyReport) -> String {
    let width = name_width(report);
    let mut out = String::new();
    let mut first = true;
    for mode in ExogenousMode::ALL {
        let shown = report.instruments.is_empty()
            || report.instruments.iter().any(|i| i.fit(mode).is_some());
        if shown {
            if !first {
                out.push('\n');
            }
            first = false;
            render_table(&mut out, report, mode, width);
        }
    }

    let rule = |n: usize| "-".repeat(width + COL_WIDTH * n);
    out.push_str("\nCorrelations (Pearson, return-aligned dates)\n");
    out.push_str(&rule(3));
    out.push('\n');
    push_row(
        &mut out,
        width,
        "",
        &["r~vol".into(), "r~tx".into(), "vol~tx".into()],
    );
    out.push_str(&rule(3));
    out.push('\n');
    for inst in &report.instruments {
        let c = &inst.correlations;
        push_row(
            &mut out,
            width,
            &inst.name,
            &[
                fmt_opt(c.returns_volume, 3),
                fmt_opt(c.returns_transactions, 3),
                fmt_opt(c.volume_transactions, 3),
            ],
        );
    }
    out.push_str(&rule(3));
    out.push('\n');

    out.push_str("\nDiagnostics (acceptance rate, integrated autocorrelation time)\n");
    out.push_str(&rule(6));
    out.push('\n');
    push_row(
        &mut out,
        width,
        "",
        &["model", "accept", "τ ω", "τ α", "τ β", "τ γ"].map(String::from),
    );
    out.push_str(&rule(6));
    out.push('\n');
    for inst in &report.instruments {
        for cell in &inst.fits {
            if let FitOutcome::Completed(fit) = &cell.outcome {
                let mut cells = vec![cell.mode.to_string(), fmt3(fit.summary.acceptance_rate)];
                for j in 0..4 {
                    cells.push(match fit.autocorrelation_times.get(j) {
                        Some(t) => fmt_opt(*t, 1),
                        None => String::new(),
                    });
                }
                push_row(&mut out, width, &inst.name, &cells);
            }
        }
    }
    out.push_str(&rule(6));
    out.push('\n');

    let c = &report.config;
    let _ = writeln!(
        out,
        "\nseed {} | burn-in {} | samples {} | dof {} | inflation {} | adapt every {}",
        c.seed, c.burn_in, c.samples, c.dof, c.scale_inflation, c.adapt_interval
    );
    for inst in &report.instruments {
        let _ = writeln!(
            out,
            "{}: {} observations, data sha256 {}",
            inst.name, inst.observations, inst.data_fingerprint
        );
    }
    out
}
