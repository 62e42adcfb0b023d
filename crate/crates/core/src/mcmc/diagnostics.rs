use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::sampler::Chain;
use crate::error::{Error, Result};
use crate::stats;

/// Posterior mean and standard deviation per parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub parameter_names: Vec<String>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    /// Mean of `alpha + beta` over the draws.
    pub persistence_mean: f64,
    pub persistence_sd: f64,
    pub acceptance_rate: f64,
    pub draws: usize,
}

impl PosteriorSummary {
    pub fn mean_of(&self, name: &str) -> Option<f64> {
        self.index_of(name).map(|i| self.means[i])
    }

    pub fn sd_of(&self, name: &str) -> Option<f64> {
        self.index_of(name).map(|i| self.sds[i])
    }

    fn index_of(&self, name: &str) -> Option<usize> {
        self.parameter_names.iter().position(|n| n == name)
    }
}

/// Sample mean and (n - 1) standard deviation of every parameter; the SD of
/// a single draw is 0.
///
/// # Panics
/// On an empty chain.
pub fn summarize(chain: &Chain) -> PosteriorSummary {
    assert!(!chain.is_empty(), "cannot summarize an empty chain");
    let sd = |xs: &[f64]| if xs.len() < 2 { 0.0 } else { stats::sample_sd(xs) };
    let mut means = Vec::with_capacity(chain.dim());
    let mut sds = Vec::with_capacity(chain.dim());
    for j in 0..chain.dim() {
        let trace = chain.trace(j);
        means.push(stats::mean(&trace));
        sds.push(sd(&trace));
    }
    let persistence: Vec<f64> = chain.draws().map(|d| d[1] + d[2]).collect();
    PosteriorSummary {
        parameter_names: chain.parameter_names().to_vec(),
        means,
        sds,
        persistence_mean: stats::mean(&persistence),
        persistence_sd: sd(&persistence),
        acceptance_rate: chain.acceptance_rate(),
        draws: chain.len(),
    }
}

/// Normalized autocorrelation `rho(k)` for `k = 0..n`, computed by FFT with
/// zero padding. Autocovariances use the `1/n` convention.
fn autocorrelation(trace: &[f64]) -> Vec<f64> {
    let n = trace.len();
    let m = stats::mean(trace);
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = trace
        .iter()
        .map(|x| Complex::new(x - m, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let c0 = buf[0].re;
    buf[..n].iter().map(|c| c.re / c0).collect()
}

/// Integrated autocorrelation time `1/2 + sum_{k=1..W} rho(k)` with the
/// self-consistent window: the smallest `W` such that `W >= 5 tau(W)`.
/// White noise gives 1/2.
pub fn autocorrelation_time(trace: &[f64]) -> Result<f64> {
    const MIN_LEN: usize = 100;
    const WINDOW_FACTOR: f64 = 5.0;
    if trace.len() < MIN_LEN {
        return Err(Error::TooShort {
            needed: MIN_LEN,
            got: trace.len(),
        });
    }
    let first = trace[0];
    if trace.iter().all(|&x| x == first) {
        return Err(Error::ZeroVariance("parameter trace"));
    }
    let rho = autocorrelation(trace);
    let mut tau = 0.5;
    for (w, r) in rho.iter().enumerate().skip(1) {
        tau += r;
        if w as f64 >= WINDOW_FACTOR * tau {
            break;
        }
    }
    Ok(tau.max(0.5))
}

/// [`autocorrelation_time`] of one parameter of a chain.
pub fn integrated_autocorrelation_time(chain: &Chain, parameter: usize) -> Result<f64> {
    if parameter >= chain.dim() {
        return Err(Error::Dimension {
            expected: chain.dim(),
            got: parameter,
        });
    }
    autocorrelation_time(&chain.trace(parameter))
}
