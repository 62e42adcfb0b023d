//! Daily price data: CSV ingestion, percent log-returns, and exogenous
//! series alignment.
//!
//! Exogenous series (volume, transaction counts) are normalized by their
//! full-sample mean over the return-aligned dates. That uses information
//! from the whole sample, so the normalized series is only suitable for
//! in-sample estimation.

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

const DATE_FORMAT: &str = "%Y-%m-%d";

/// Which exogenous regressor enters the variance equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExogenousMode {
    None,
    Volume,
    Transactions,
}

impl ExogenousMode {
    pub const ALL: [ExogenousMode; 3] = [
        ExogenousMode::None,
        ExogenousMode::Volume,
        ExogenousMode::Transactions,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExogenousMode::None => "none",
            ExogenousMode::Volume => "volume",
            ExogenousMode::Transactions => "transactions",
        }
    }
}

impl fmt::Display for ExogenousMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ExogenousMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "none" => Ok(ExogenousMode::None),
            "volume" => Ok(ExogenousMode::Volume),
            "transactions" | "tx" => Ok(ExogenousMode::Transactions),
            other => Err(format!("unknown exogenous mode `{other}`")),
        }
    }
}

/// Daily observations for one instrument.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    dates: Vec<NaiveDate>,
    closes: Vec<f64>,
    volumes: Option<Vec<f64>>,
    transactions: Option<Vec<f64>>,
}

impl PriceSeries {
    pub fn new(
        dates: Vec<NaiveDate>,
        closes: Vec<f64>,
        volumes: Option<Vec<f64>>,
        transactions: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = dates.len();
        for column in [Some(&closes), volumes.as_ref(), transactions.as_ref()]
            .into_iter()
            .flatten()
        {
            if column.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: column.len(),
                });
            }
        }
        for (i, w) in dates.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::UnorderedDates {
                    row: i + 2,
                    date: w[1].format(DATE_FORMAT).to_string(),
                });
            }
        }
        for (i, &c) in closes.iter().enumerate() {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::NonPositivePrice { row: i + 1, value: c });
            }
        }
        for (name, column) in [("volume", &volumes), ("transactions", &transactions)] {
            if let Some(values) = column {
                if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::Parse {
                        row: i + 1,
                        message: format!("{name} must be finite and non-negative"),
                    });
                }
            }
        }
        Ok(Self {
            dates,
            closes,
            volumes,
            transactions,
        })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn closes(&self) -> &[f64] {
        &self.closes
    }

    pub fn volumes(&self) -> Option<&[f64]> {
        self.volumes.as_deref()
    }

    pub fn transactions(&self) -> Option<&[f64]> {
        self.transactions.as_deref()
    }

    /// Raw exogenous column for `mode`, `None` when absent (or for `ExogenousMode::None`).
    pub fn exogenous(&self, mode: ExogenousMode) -> Option<&[f64]> {
        match mode {
            ExogenousMode::None => None,
            ExogenousMode::Volume => self.volumes(),
            ExogenousMode::Transactions => self.transactions(),
        }
    }
}

/// How to find a column in the CSV header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Column {
    /// Not read at all.
    Absent,
    /// Read when the header has it, otherwise treated as absent.
    IfPresent(String),
    /// Must be present in the header.
    Required(String),
}

impl Column {
    fn name(&self) -> Option<&str> {
        match self {
            Column::Absent => None,
            Column::IfPresent(n) | Column::Required(n) => Some(n),
        }
    }
}

/// Maps CSV header names to the roles of a [`PriceSeries`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    pub date: String,
    pub close: String,
    pub volume: Column,
    pub transactions: Column,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            date: "date".into(),
            close: "close".into(),
            volume: Column::IfPresent("volume".into()),
            transactions: Column::IfPresent("transactions".into()),
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, columns: &ColumnMap) -> Result<PriceSeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, columns)
}

/// Reads a header-first, comma-delimited price table.
///
/// Rows are validated as they are read; any missing or unparseable cell in a
/// mapped column is an error naming the 1-based data row.
pub fn read_csv<R: Read>(reader: R, columns: &ColumnMap) -> Result<PriceSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);

    let date_idx = find(&columns.date).ok_or_else(|| Error::MissingColumn(columns.date.clone()))?;
    let close_idx =
        find(&columns.close).ok_or_else(|| Error::MissingColumn(columns.close.clone()))?;
    let optional = |col: &Column| -> Result<Option<(usize, String)>> {
        match (col, col.name().and_then(find)) {
            (Column::Absent, _) => Ok(None),
            (Column::Required(n), None) => Err(Error::MissingColumn(n.clone())),
            (Column::IfPresent(_), None) => Ok(None),
            (_, Some(i)) => Ok(Some((i, col.name().unwrap_or_default().to_string()))),
        }
    };
    let volume_idx = optional(&columns.volume)?;
    let tx_idx = optional(&columns.transactions)?;

    let mut dates = Vec::new();
    let mut closes = Vec::new();
    let mut volumes = volume_idx.as_ref().map(|_| Vec::new());
    let mut transactions = tx_idx.as_ref().map(|_| Vec::new());

    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let cell = |idx: usize, name: &str| -> Result<&str> {
            match record.get(idx) {
                Some(s) if !s.is_empty() => Ok(s),
                _ => Err(Error::Parse {
                    row,
                    message: format!("missing value in column `{name}`"),
                }),
            }
        };
        let number = |idx: usize, name: &str| -> Result<f64> {
            let s = cell(idx, name)?;
            s.parse::<f64>().map_err(|_| Error::Parse {
                row,
                message: format!("cannot parse `{s}` in column `{name}` as a number"),
            })
        };

        let raw_date = cell(date_idx, &columns.date)?;
        let date = NaiveDate::parse_from_str(raw_date, DATE_FORMAT).map_err(|_| Error::Parse {
            row,
            message: format!("cannot parse `{raw_date}` as a yyyy-mm-dd date"),
        })?;
        if let Some(&prev) = dates.last() {
            if date <= prev {
                return Err(Error::UnorderedDates {
                    row,
                    date: raw_date.to_string(),
                });
            }
        }
        let close = number(close_idx, &columns.close)?;
        if !(close > 0.0 && close.is_finite()) {
            return Err(Error::NonPositivePrice { row, value: close });
        }
        for (slot, idx) in [(&mut volumes, &volume_idx), (&mut transactions, &tx_idx)] {
            if let (Some(values), Some((idx, name))) = (slot.as_mut(), idx) {
                let v = number(*idx, name)?;
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::Parse {
                        row,
                        message: format!("`{name}` must be non-negative, got {v}"),
                    });
                }
                values.push(v);
            }
        }
        dates.push(date);
        closes.push(close);
    }

    PriceSeries::new(dates, closes, volumes, transactions)
}

/// A mean-normalized exogenous regressor aligned with a return series.
#[derive(Debug, Clone, PartialEq)]
pub struct ExogenousSeries {
    mode: ExogenousMode,
    values: Vec<f64>,
}

impl ExogenousSeries {
    /// Normalizes `raw` by its mean. `mode` must not be `ExogenousMode::None`.
    pub fn normalized(mode: ExogenousMode, raw: &[f64]) -> Result<Self> {
        if mode == ExogenousMode::None {
            return Err(Error::InvalidConfig(
                "an exogenous series needs a volume or transactions label".into(),
            ));
        }
        if let Some(i) = raw.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Parse {
                row: i + 1,
                message: format!("{mode} must be finite and non-negative"),
            });
        }
        Ok(Self {
            mode,
            values: normalize_by_mean(raw)?,
        })
    }

    pub fn mode(&self) -> ExogenousMode {
        self.mode
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Percent log-returns `r[t]`, t = 2..T, with an optional aligned regressor.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    returns: Vec<f64>,
    exogenous: Option<ExogenousSeries>,
}

impl ReturnSeries {
    pub fn new(returns: Vec<f64>) -> Self {
        Self {
            returns,
            exogenous: None,
        }
    }

    /// Attaches an exogenous series that is already aligned with the returns.
    pub fn with_exogenous(mut self, exogenous: ExogenousSeries) -> Result<Self> {
        if exogenous.values.len() != self.returns.len() {
            return Err(Error::LengthMismatch {
                expected: self.returns.len(),
                got: exogenous.values.len(),
            });
        }
        self.exogenous = Some(exogenous);
        Ok(self)
    }

    pub fn returns(&self) -> &[f64] {
        &self.returns
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    pub fn exogenous(&self) -> Option<&ExogenousSeries> {
        self.exogenous.as_ref()
    }

    pub fn mode(&self) -> ExogenousMode {
        self.exogenous
            .as_ref()
            .map_or(ExogenousMode::None, |e| e.mode)
    }
}

/// `r[t] = 100 (ln P[t] - ln P[t-1])`.
pub fn compute_log_returns(prices: &PriceSeries) -> Result<ReturnSeries> {
    if prices.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: prices.len(),
        });
    }
    let returns = prices
        .closes()
        .windows(2)
        .map(|w| 100.0 * (w[1].ln() - w[0].ln()))
        .collect();
    Ok(ReturnSeries::new(returns))
}

pub fn normalize_by_mean(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    let m = stats::mean(values);
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::ZeroMean);
    }
    Ok(values.iter().map(|v| v / m).collect())
}

/// Drops the first (return-less) date of `raw`, then normalizes it by its mean
/// and attaches it to `returns`.
pub fn align_exogenous(
    returns: ReturnSeries,
    raw: &[f64],
    mode: ExogenousMode,
) -> Result<ReturnSeries> {
    let expected = returns.len() + 1;
    if raw.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            got: raw.len(),
        });
    }
    let series = ExogenousSeries::normalized(mode, &raw[1..])?;
    returns.with_exogenous(series)
}

/// Log-returns for `prices`, with the regressor for `mode` aligned and normalized.
pub fn model_returns(prices: &PriceSeries, mode: ExogenousMode) -> Result<ReturnSeries> {
    let returns = compute_log_returns(prices)?;
    match mode {
        ExogenousMode::None => Ok(returns),
        _ => {
            let raw = prices.exogenous(mode).ok_or(Error::MissingExogenous)?;
            align_exogenous(returns, raw, mode)
        }
    }
}

/// Pearson product-moment correlation, clamped to [-1, 1].
pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: x.len(),
        });
    }
    let mx = stats::mean(x);
    let my = stats::mean(y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("first series"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("second series"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Rebuilds a price path from percent log-returns, starting at `start`.
pub fn price_path(start: f64, returns: &[f64]) -> Vec<f64> {
    let mut prices = Vec::with_capacity(returns.len() + 1);
    let mut log_price = start.ln();
    prices.push(start);
    for r in returns {
        log_price += r / 100.0;
        prices.push(log_price.exp());
    }
    prices
}

/// Builds a price table from a return series: closes start at `start_price`,
/// dates run over consecutive weekdays from `start_date`, and an exogenous
/// series (if any) becomes the matching column with 1.0 on the first row,
/// which has no return.
pub fn prices_from_returns(
    start_date: NaiveDate,
    start_price: f64,
    returns: &ReturnSeries,
) -> Result<PriceSeries> {
    let closes = price_path(start_price, returns.returns());
    let mut dates = Vec::with_capacity(closes.len());
    let mut day = start_date;
    while dates.len() < closes.len() {
        if !matches!(day.weekday(), Weekday::Sat | Weekday::Sun) {
            dates.push(day);
        }
        day = day
            .succ_opt()
            .ok_or_else(|| Error::InvalidConfig("date range overflows".into()))?;
    }
    let column = returns
        .exogenous()
        .map(|e| std::iter::once(1.0).chain(e.values().iter().copied()).collect());
    let (volumes, transactions) = match returns.mode() {
        ExogenousMode::Volume => (column, None),
        ExogenousMode::Transactions => (None, column),
        ExogenousMode::None => (None, None),
    };
    PriceSeries::new(dates, closes, volumes, transactions)
}

/// Writes `prices` in the layout [`read_csv`] accepts with the default
/// [`ColumnMap`]. With `returns`, a `return` column follows `close`; its first
/// cell is empty. Numbers use shortest round-trip formatting.
pub fn write_csv<W: Write>(prices: &PriceSeries, returns: Option<&[f64]>, writer: W) -> Result<()> {
    if let Some(r) = returns {
        if r.len() + 1 != prices.len() {
            return Err(Error::LengthMismatch {
                expected: prices.len().saturating_sub(1),
                got: r.len(),
            });
        }
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["date", "close"];
    if returns.is_some() {
        header.push("return");
    }
    if prices.volumes().is_some() {
        header.push("volume");
    }
    if prices.transactions().is_some() {
        header.push("transactions");
    }
    w.write_record(&header)?;
    for i in 0..prices.len() {
        let mut row = vec![
            prices.dates()[i].format(DATE_FORMAT).to_string(),
            prices.closes()[i].to_string(),
        ];
        if let Some(r) = returns {
            row.push(if i == 0 { String::new() } else { r[i - 1].to_string() });
        }
        for column in [prices.volumes(), prices.transactions()].into_iter().flatten() {
            row.push(column[i].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}
