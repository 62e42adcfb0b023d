//! Command-line front end: reads price files, runs the sampler, and prints
//! or writes reports. All modelling lives in the `garchmh` library.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use garchmh::mcmc::write_chain_csv;
use garchmh::study::{correlations, fit_report, parse_report, Correlations};
use garchmh::timeseries::{prices_from_returns, write_csv, Column};
use garchmh::{
    load_csv, render_report, run_study, ChainConfig, ColumnMap, ErrorClass, ExogenousMode,
    GarchParams, Instrument, ReportFormat,
};

#[derive(Debug, Parser)]
#[command(
    name = "garchmh",
    version,
    about = "Bayesian GARCH(1,1) and GARCH-X estimation by independence Metropolis-Hastings"
)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit one model variant to one price file.
    Fit(FitArgs),
    /// Fit all model variants to one or more price files.
    Study(StudyArgs),
    /// Simulate a GARCH(1,1) or GARCH-X price path.
    Simulate(SimulateArgs),
    /// Pearson correlations between returns, volume and transactions.
    Corr(CorrArgs),
}

#[derive(Debug, Args)]
struct ColumnArgs {
    /// Header of the date column (yyyy-mm-dd values).
    #[arg(long, default_value = "date")]
    date_col: String,
    /// Header of the closing-price column.
    #[arg(long, default_value = "close")]
    close_col: String,
    /// Header of the trading-volume column; required when given, otherwise
    /// `volume` is used if present.
    #[arg(long)]
    volume_col: Option<String>,
    /// Header of the transaction-count column; required when given,
    /// otherwise `transactions` is used if present.
    #[arg(long)]
    tx_col: Option<String>,
}

impl ColumnArgs {
    fn to_map(&self) -> ColumnMap {
        let pick = |explicit: &Option<String>, fallback: &str| match explicit {
            Some(name) => Column::Required(name.clone()),
            None => Column::IfPresent(fallback.into()),
        };
        ColumnMap {
            date: self.date_col.clone(),
            close: self.close_col.clone(),
            volume: pick(&self.volume_col, "volume"),
            transactions: pick(&self.tx_col, "transactions"),
        }
    }
}

#[derive(Debug, Args)]
struct ChainArgs {
    /// Burn-in steps; the proposal adapts during burn-in only.
    #[arg(long, default_value_t = 5000)]
    burnin: usize,
    /// Retained draws after burn-in.
    #[arg(long, default_value_t = 50000)]
    samples: usize,
    /// Base random seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Degrees of freedom of the Student-t proposal (must exceed 2).
    #[arg(long, default_value_t = 10.0)]
    dof: f64,
    /// Proposal scale is inflation^2 times the pilot covariance.
    #[arg(long, default_value_t = 1.2)]
    inflation: f64,
    /// Burn-in steps between proposal refits.
    #[arg(long, default_value_t = 500)]
    adapt_interval: usize,
}

impl ChainArgs {
    fn to_config(&self) -> ChainConfig {
        ChainConfig {
            burn_in: self.burnin,
            samples: self.samples,
            seed: self.seed,
            dof: self.dof,
            adapt_interval: self.adapt_interval,
            scale_inflation: self.inflation,
        }
    }
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Report format: table or json.
    #[arg(long, default_value = "table")]
    format: ReportFormat,
    /// Write the report to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Price file (CSV with a header row).
    #[arg(long)]
    data: PathBuf,
    /// Instrument name in the report; defaults to the file stem.
    #[arg(long)]
    name: Option<String>,
    /// Exogenous regressor: none, volume or transactions.
    #[arg(long, default_value = "none")]
    exo: ExogenousMode,
    /// Number of independent chains.
    #[arg(long, default_value_t = 1)]
    chains: usize,
    /// Write retained draws as CSV; with several chains, `-k` is appended to
    /// the file stem.
    #[arg(long)]
    chain_out: Option<PathBuf>,
    #[command(flatten)]
    columns: ColumnArgs,
    #[command(flatten)]
    chain: ChainArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct StudyArgs {
    /// Price files, as PATH or NAME=PATH; repeat for several instruments.
    #[arg(long, required = true, num_args = 1..)]
    data: Vec<String>,
    /// Also write the JSON report here (useful with --format table).
    #[arg(long)]
    json_out: Option<PathBuf>,
    /// Re-run with the settings stored in a previous JSON report; chain
    /// options on the command line are then ignored.
    #[arg(long)]
    config_from: Option<PathBuf>,
    #[command(flatten)]
    columns: ColumnArgs,
    #[command(flatten)]
    chain: ChainArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    omega: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
    /// Coefficient of the exogenous term; adds a synthetic regressor column.
    #[arg(long)]
    gamma: Option<f64>,
    /// Column for the synthetic regressor when --gamma is given.
    #[arg(long, default_value = "volume")]
    exo: ExogenousMode,
    /// Number of returns (the file has one more price row).
    #[arg(long, default_value_t = 3000)]
    length: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// First date of the path; later rows use consecutive weekdays.
    #[arg(long, default_value = "2000-01-03")]
    start_date: NaiveDate,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CorrArgs {
    /// Price files, as PATH or NAME=PATH.
    #[arg(long, required = true, num_args = 1..)]
    data: Vec<String>,
    #[command(flatten)]
    columns: ColumnArgs,
    #[command(flatten)]
    output: OutputArgs,
}

/// Front-end failure with its exit status.
#[derive(Debug)]
enum Failure {
    Library(garchmh::Error),
    Write { path: String, source: io::Error },
    Usage(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Write { .. } => 2,
            Failure::Library(e) => match e.class() {
                ErrorClass::Data => 2,
                ErrorClass::Numeric => 3,
            },
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Library(e) => write!(f, "{e}"),
            Failure::Write { path, source } => write!(f, "cannot write {path}: {source}"),
            Failure::Usage(m) => write!(f, "{m}"),
        }
    }
}

impl From<garchmh::Error> for Failure {
    fn from(e: garchmh::Error) -> Self {
        Failure::Library(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let outcome = match &cli.command {
        Command::Fit(a) => fit(a),
        Command::Study(a) => study(a),
        Command::Simulate(a) => simulate(a),
        Command::Corr(a) => corr(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Writes through `body` to `path`, or to standard output.
fn emit(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> CliResult<()>) -> CliResult<()> {
    let label = path.map_or_else(|| "standard output".to_string(), |p| p.display().to_string());
    let wrap = |source| Failure::Write {
        path: label.clone(),
        source,
    };
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).map_err(wrap)?);
            body(&mut w)?;
            w.flush().map_err(wrap)
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            body(&mut w)?;
            w.flush().map_err(wrap)
        }
    }
}

fn emit_text(path: Option<&Path>, text: &str) -> CliResult<()> {
    let label = path.map_or_else(|| "standard output".to_string(), |p| p.display().to_string());
    emit(path, |w| {
        w.write_all(text.as_bytes()).map_err(|source| Failure::Write {
            path: label.clone(),
            source,
        })
    })
}

/// Splits `NAME=PATH`; a bare path is named after its file stem.
fn named_path(spec: &str) -> (String, PathBuf) {
    match spec.split_once('=') {
        Some((name, path)) if !name.is_empty() => (name.to_string(), PathBuf::from(path)),
        _ => {
            let path = PathBuf::from(spec);
            (stem(&path), path)
        }
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn load_instruments(specs: &[String], columns: &ColumnArgs) -> CliResult<Vec<Instrument>> {
    let map = columns.to_map();
    specs
        .iter()
        .map(|spec| {
            let (name, path) = named_path(spec);
            log::info!("reading {name} from {}", path.display());
            Ok(Instrument::new(name, load_csv(&path, &map)?))
        })
        .collect()
}

fn chain_path(base: &Path, k: usize, total: usize) -> PathBuf {
    if total == 1 {
        return base.to_path_buf();
    }
    let mut name = format!("{}-{k}", stem(base));
    if let Some(ext) = base.extension() {
        name.push('.');
        name.push_str(&ext.to_string_lossy());
    }
    base.with_file_name(name)
}

fn fit(args: &FitArgs) -> CliResult<()> {
    let config = args.chain.to_config();
    config.validate()?;
    let prices = load_csv(&args.data, &args.columns.to_map())?;
    let name = args.name.clone().unwrap_or_else(|| stem(&args.data));
    let instrument = Instrument::new(name, prices);
    if args.exo != ExogenousMode::None && instrument.prices.exogenous(args.exo).is_none() {
        return Err(Failure::Library(garchmh::Error::MissingColumn(
            args.exo.as_str().into(),
        )));
    }
    let (report, chains) = fit_report(&instrument, args.exo, &config, args.chains)?;
    if let Some(base) = &args.chain_out {
        for (k, chain) in chains.iter().enumerate() {
            let path = chain_path(base, k + 1, chains.len());
            emit(Some(&path), |w| Ok(write_chain_csv(chain, w)?))?;
        }
    }
    emit_text(args.output.out.as_deref(), &render_report(&report, args.output.format))
}

fn study(args: &StudyArgs) -> CliResult<()> {
    let config = match &args.config_from {
        Some(path) => {
            let json = std::fs::read_to_string(path).map_err(|source| garchmh::Error::Io {
                path: path.clone(),
                source,
            })?;
            parse_report(&json)?.config
        }
        None => args.chain.to_config(),
    };
    config.validate()?;
    let instruments = load_instruments(&args.data, &args.columns)?;
    let mut names: Vec<&str> = instruments.iter().map(|i| i.name.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(Failure::Usage(format!("instrument name `{}` is used twice", w[0])));
    }
    let report = run_study(&instruments, &config);
    if let Some(path) = &args.json_out {
        emit_text(Some(path), &render_report(&report, ReportFormat::Json))?;
    }
    emit_text(args.output.out.as_deref(), &render_report(&report, args.output.format))
}

fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let mut params = GarchParams::new(args.omega, args.alpha, args.beta)?;
    let mut raw = None;
    if let Some(gamma) = args.gamma {
        if args.exo == ExogenousMode::None {
            return Err(Failure::Usage("--gamma needs --exo volume or transactions".into()));
        }
        params = params.with_gamma(gamma)?;
        let seed = garchmh::derive_seed(args.seed, "exogenous", 0);
        raw = Some(garchmh::garch::synthetic_exogenous(args.length, 1.0, 0.2, seed)?);
    }
    let exogenous = raw.as_deref().map(|r| (args.exo, r));
    let returns = garchmh::simulate(&params, args.length, args.seed, exogenous)?;
    let prices = prices_from_returns(args.start_date, 100.0, &returns)?;
    emit(args.out.as_deref(), |w| {
        Ok(write_csv(&prices, Some(returns.returns()), w)?)
    })
}

fn corr(args: &CorrArgs) -> CliResult<()> {
    let instruments = load_instruments(&args.data, &args.columns)?;
    let rows: Vec<(String, Correlations)> = instruments
        .iter()
        .map(|i| (i.name.clone(), correlations(&i.prices)))
        .collect();
    let text = match args.output.format {
        ReportFormat::Json => {
            let map: serde_json::Map<String, serde_json::Value> = rows
                .into_iter()
                .map(|(n, c)| (n, serde_json::to_value(c).expect("plain struct")))
                .collect();
            let mut s = serde_json::to_string_pretty(&map).expect("plain map");
            s.push('\n');
            s
        }
        ReportFormat::Table => {
            let width = rows.iter().map(|(n, _)| n.chars().count() + 2).fold(24, usize::max);
            let cell = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"));
            let mut s = format!("{:<width$}{:>9}{:>9}{:>9}\n", "", "r~vol", "r~tx", "vol~tx");
            for (name, c) in rows {
                let _ = writeln!(
                    s,
                    "{name:<width$}{:>9}{:>9}{:>9}",
                    cell(c.returns_volume),
                    cell(c.returns_transactions),
                    cell(c.volume_transactions)
                );
            }
            s
        }
    };
    emit_text(args.output.out.as_deref(), &text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn chain_defaults_match_library() {
        let cli = Cli::try_parse_from(["garchmh", "fit", "--data", "x.csv"]).unwrap();
        let Command::Fit(args) = cli.command else {
            panic!("expected fit");
        };
        assert_eq!(args.chain.to_config(), ChainConfig::default());
    }

    #[test]
    fn named_paths() {
        assert_eq!(named_path("A=b/c.csv"), ("A".into(), PathBuf::from("b/c.csv")));
        assert_eq!(named_path("dir/nikkei.csv"), ("nikkei".into(), PathBuf::from("dir/nikkei.csv")));
        assert_eq!(chain_path(Path::new("o/c.csv"), 2, 3), PathBuf::from("o/c-2.csv"));
        assert_eq!(chain_path(Path::new("o/c.csv"), 1, 1), PathBuf::from("o/c.csv"));
    }
}
