//! GARCH(1,1) and GARCH-X variance recursion, Gaussian likelihood, and a
//! process simulator.
//!
//! With returns `r[t]` (percent) and an optional mean-one regressor `N[t]`:
//!
//! ```text
//! sigma2[1] = initial variance
//! sigma2[t] = omega + alpha * r[t-1]^2 + beta * sigma2[t-1] (+ gamma * N[t])
//! ```
//!
//! The likelihood is conditional on `sigma2[1]`. No stationarity constraint
//! is imposed on `alpha + beta`.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;
use crate::timeseries::{ExogenousMode, ExogenousSeries, ReturnSeries};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchParams {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl GarchParams {
    pub fn new(omega: f64, alpha: f64, beta: f64) -> Result<Self> {
        let p = Self {
            omega,
            alpha,
            beta,
            gamma: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_gamma(self, gamma: f64) -> Result<Self> {
        let p = Self {
            gamma: Some(gamma),
            ..self
        };
        p.validate()?;
        Ok(p)
    }

    /// Unchecked construction from a `(omega, alpha, beta[, gamma])` vector.
    pub fn from_slice(v: &[f64]) -> Self {
        Self {
            omega: v[0],
            alpha: v[1],
            beta: v[2],
            gamma: v.get(3).copied(),
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![self.omega, self.alpha, self.beta];
        v.extend(self.gamma);
        v
    }

    pub fn dim(&self) -> usize {
        3 + usize::from(self.gamma.is_some())
    }

    /// `omega > 0`, `alpha, beta, gamma >= 0`, all finite.
    pub fn in_support(&self) -> bool {
        let nonneg = |x: f64| x >= 0.0 && x.is_finite();
        self.omega > 0.0
            && self.omega.is_finite()
            && nonneg(self.alpha)
            && nonneg(self.beta)
            && self.gamma.is_none_or(nonneg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_support() {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "need omega > 0 and alpha, beta, gamma >= 0, got {self:?}"
            )))
        }
    }

    pub fn persistence(&self) -> f64 {
        persistence(self)
    }
}

/// The volatility persistence statistic `alpha + beta`.
pub fn persistence(params: &GarchParams) -> f64 {
    params.alpha + params.beta
}

/// Names of the parameter vector entries, in storage order.
pub fn parameter_names(mode: ExogenousMode) -> Vec<String> {
    let mut names = vec!["omega".to_string(), "alpha".into(), "beta".into()];
    if mode != ExogenousMode::None {
        names.push("gamma".into());
    }
    names
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule", content = "value")]
pub enum InitialVariance {
    SampleVariance,
    Explicit(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub exogenous: ExogenousMode,
    pub initial_variance: InitialVariance,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self::new(ExogenousMode::None)
    }
}

impl ModelSpec {
    pub fn new(exogenous: ExogenousMode) -> Self {
        Self {
            exogenous,
            initial_variance: InitialVariance::SampleVariance,
        }
    }

    pub fn with_initial_variance(mut self, rule: InitialVariance) -> Self {
        self.initial_variance = rule;
        self
    }

    pub fn dim(&self) -> usize {
        3 + usize::from(self.exogenous != ExogenousMode::None)
    }
}

/// Conditional variances `sigma2[t]`, aligned with the return series.
#[derive(Debug, Clone, PartialEq)]
pub struct VariancePath(Vec<f64>);

impl VariancePath {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// One step of the recursion.
#[inline]
pub fn next_variance(
    params: &GarchParams,
    prev_variance: f64,
    prev_return: f64,
    exogenous: Option<f64>,
) -> f64 {
    let mut v = params.omega + params.alpha * prev_return * prev_return + params.beta * prev_variance;
    if let (Some(g), Some(n)) = (params.gamma, exogenous) {
        v += g * n;
    }
    v
}

/// A return series bound to a model specification, with the initial
/// variance resolved once.
#[derive(Debug, Clone)]
pub struct GarchModel<'a> {
    returns: &'a [f64],
    exogenous: Option<&'a [f64]>,
    spec: ModelSpec,
    initial_variance: f64,
}

impl<'a> GarchModel<'a> {
    pub fn new(data: &'a ReturnSeries, spec: &ModelSpec) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::TooShort { needed: 1, got: 0 });
        }
        match (spec.exogenous, data.exogenous()) {
            (ExogenousMode::None, Some(_)) => return Err(Error::UnexpectedExogenous),
            (ExogenousMode::None, None) => {}
            (_, None) => return Err(Error::MissingExogenous),
            (mode, Some(e)) if e.mode() != mode => {
                return Err(Error::InvalidConfig(format!(
                    "model expects {mode} but the series carries {}",
                    e.mode()
                )))
            }
            _ => {}
        }
        let initial_variance = match spec.initial_variance {
            InitialVariance::Explicit(v) => {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "explicit initial variance must be positive, got {v}"
                    )));
                }
                v
            }
            InitialVariance::SampleVariance => {
                let v = stats::sample_variance(data.returns());
                if data.len() < 2 {
                    return Err(Error::TooShort {
                        needed: 2,
                        got: data.len(),
                    });
                }
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::ZeroVariance("return series"));
                }
                v
            }
        };
        Ok(Self {
            returns: data.returns(),
            exogenous: data.exogenous().map(ExogenousSeries::values),
            spec: *spec,
            initial_variance,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn initial_variance(&self) -> f64 {
        self.initial_variance
    }

    pub fn returns(&self) -> &[f64] {
        self.returns
    }

    fn check_params(&self, params: &GarchParams) -> Result<()> {
        params.validate()?;
        match (params.gamma.is_some(), self.exogenous.is_some()) {
            (true, false) => Err(Error::MissingExogenous),
            (false, true) => Err(Error::UnexpectedExogenous),
            _ => Ok(()),
        }
    }

    pub fn variance_path(&self, params: &GarchParams) -> Result<VariancePath> {
        self.check_params(params)?;
        let mut path = Vec::with_capacity(self.returns.len());
        let mut var = self.initial_variance;
        path.push(var);
        for t in 1..self.returns.len() {
            var = next_variance(
                params,
                var,
                self.returns[t - 1],
                self.exogenous.map(|n| n[t]),
            );
            if !(var > 0.0 && var.is_finite()) {
                return Err(Error::NonFinite(t + 1));
            }
            path.push(var);
        }
        Ok(VariancePath(path))
    }

    /// `-1/2 sum_t [ln(2 pi sigma2[t]) + r[t]^2 / sigma2[t]]`.
    pub fn log_likelihood(&self, params: &GarchParams) -> Result<f64> {
        self.check_params(params)?;
        let r = self.returns;
        let mut var = self.initial_variance;
        let mut acc = var.ln() + r[0] * r[0] / var;
        for t in 1..r.len() {
            var = next_variance(params, var, r[t - 1], self.exogenous.map(|n| n[t]));
            if !(var > 0.0 && var.is_finite()) {
                return Err(Error::NonFinite(t + 1));
            }
            acc += var.ln() + r[t] * r[t] / var;
        }
        Ok(-0.5 * (r.len() as f64 * LN_2PI + acc))
    }
}

pub fn variance_recursion(
    params: &GarchParams,
    returns: &ReturnSeries,
    spec: &ModelSpec,
) -> Result<VariancePath> {
    GarchModel::new(returns, spec)?.variance_path(params)
}

/// Gaussian log-likelihood of the returns given `params`.
pub fn log_likelihood(params: &GarchParams, returns: &ReturnSeries, spec: &ModelSpec) -> Result<f64> {
    GarchModel::new(returns, spec)?.log_likelihood(params)
}

/// Simulates `length` returns with i.i.d. standard normal innovations.
///
/// `exogenous` is mean-normalized before use and must have `length` entries
/// when `params.gamma` is set.
pub fn simulate(
    params: &GarchParams,
    length: usize,
    seed: u64,
    exogenous: Option<(ExogenousMode, &[f64])>,
) -> Result<ReturnSeries> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let innovations: Vec<f64> = (0..length).map(|_| StandardNormal.sample(&mut rng)).collect();
    simulate_with_innovations(params, &innovations, exogenous)
}

/// Applies the recursion to a given innovation stream.
///
/// The process starts at its unconditional variance
/// `(omega + gamma) / (1 - alpha - beta)` when `alpha + beta < 1`, and at
/// `omega (+ gamma N[1])` otherwise.
pub fn simulate_with_innovations(
    params: &GarchParams,
    innovations: &[f64],
    exogenous: Option<(ExogenousMode, &[f64])>,
) -> Result<ReturnSeries> {
    params.validate()?;
    let length = innovations.len();
    if length == 0 {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    let exo = match (params.gamma, exogenous) {
        (Some(_), None) => return Err(Error::MissingExogenous),
        (None, Some(_)) => return Err(Error::UnexpectedExogenous),
        (None, None) => None,
        (Some(_), Some((mode, raw))) => {
            if raw.len() != length {
                return Err(Error::LengthMismatch {
                    expected: length,
                    got: raw.len(),
                });
            }
            Some(ExogenousSeries::normalized(mode, raw)?)
        }
    };
    let n = exo.as_ref().map(ExogenousSeries::values);
    let gamma = params.gamma.unwrap_or(0.0);

    let p = persistence(params);
    let mut var = if p < 1.0 {
        (params.omega + gamma) / (1.0 - p)
    } else {
        params.omega + gamma * n.map_or(0.0, |n| n[0])
    };
    let mut returns = Vec::with_capacity(length);
    for t in 0..length {
        if t > 0 {
            var = next_variance(params, var, returns[t - 1], n.map(|n| n[t]));
        }
        if !(var > 0.0 && var.is_finite()) {
            return Err(Error::NonFinite(t + 1));
        }
        returns.push(var.sqrt() * innovations[t]);
    }
    let series = ReturnSeries::new(returns);
    match exo {
        Some(e) => series.with_exogenous(e),
        None => Ok(series),
    }
}

/// I.i.d. draws of `|N(mean, sd^2)|`, normalized to mean one.
pub fn synthetic_exogenous(length: usize, mean: f64, sd: f64, seed: u64) -> Result<Vec<f64>> {
    let normal = Normal::new(mean, sd)
        .map_err(|e| Error::InvalidConfig(format!("exogenous generator: {e}")))?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..length).map(|_| normal.sample(&mut rng).abs()).collect();
    crate::timeseries::normalize_by_mean(&raw)
}
