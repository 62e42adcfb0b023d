//! Bayesian estimation of GARCH(1,1) and GARCH-X volatility models.
//!
//! The pipeline reads daily prices ([`timeseries`]), turns them into percent
//! log-returns with an optional mean-normalized regressor (trading volume or
//! transaction count), and samples the posterior of `(omega, alpha, beta[,
//! gamma])` ([`garch`], [`mcmc`]). [`study`] runs the three model variants
//! per instrument and renders the results as tables.

pub mod error;
pub mod garch;
pub mod mcmc;
pub mod stats;
pub mod study;
pub mod timeseries;

pub use error::{Error, ErrorClass, Result};
pub use garch::{
    log_likelihood, persistence, simulate, variance_recursion, GarchModel, GarchParams,
    InitialVariance, ModelSpec, VariancePath,
};
pub use mcmc::{run_chain, summarize, Chain, ChainConfig, PosteriorSummary};
pub use study::{render_report, run_study, Instrument, ReportFormat, StudyReport};
pub use timeseries::{
    compute_log_returns, load_csv, ColumnMap, ExogenousMode, PriceSeries, ReturnSeries,
};

/// 64-bit FNV-1a.
pub(crate) fn fnv1a(bytes: impl IntoIterator<Item = u8>) -> u64 {
    bytes.into_iter().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Deterministic, platform-independent seed for an independent stream
/// identified by `(base, label, index)`.
pub fn derive_seed(base: u64, label: &str, index: u64) -> u64 {
    let h = fnv1a(
        base.to_le_bytes()
            .into_iter()
            .chain(label.bytes())
            .chain([0xff])
            .chain(index.to_le_bytes()),
    );
    // splitmix64 finalizer
    let mut z = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
