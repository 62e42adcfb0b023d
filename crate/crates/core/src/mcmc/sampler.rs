//! Independence Metropolis-Hastings over GARCH parameters.
//!
//! A run has two phases. During burn-in the proposal is refit every
//! `adapt_interval` steps to all burn-in states accumulated so far. Before
//! the first successful refit the proposal is a diagonal Student-t centred on
//! the best state seen. After burn-in the proposal is frozen and every state
//! of the measurement phase is retained, repeats included.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::proposal::{fit_proposal, ProposalDensity, StudentT};
use crate::error::{Error, Result};
use crate::garch::{parameter_names, GarchModel, GarchParams, ModelSpec};
use crate::stats;
use crate::timeseries::ReturnSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ChainConfig {
    /// Discarded adaptation steps.
    pub burn_in: usize,
    /// Retained measurement steps.
    pub samples: usize,
    pub seed: u64,
    pub dof: f64,
    pub adapt_interval: usize,
    pub scale_inflation: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            burn_in: 5000,
            samples: 50000,
            seed: 1,
            dof: 10.0,
            adapt_interval: 500,
            scale_inflation: 1.2,
        }
    }
}

impl ChainConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        if self.burn_in == 0 {
            return fail("burn-in must be positive".into());
        }
        if self.samples == 0 {
            return fail("sample count must be positive".into());
        }
        if self.adapt_interval == 0 {
            return fail("adapt interval must be positive".into());
        }
        if !(self.dof > 2.0 && self.dof.is_finite()) {
            return fail(format!("dof must exceed 2, got {}", self.dof));
        }
        if !(self.scale_inflation >= 1.0 && self.scale_inflation.is_finite()) {
            return fail(format!(
                "scale inflation must be at least 1, got {}",
                self.scale_inflation
            ));
        }
        Ok(())
    }
}

/// Flat prior on the positivity region: log-likelihood inside, `-inf` outside.
///
/// Any likelihood failure (including a data/spec mismatch) also maps to `-inf`.
pub fn log_posterior(params: &GarchParams, returns: &ReturnSeries, spec: &ModelSpec) -> f64 {
    match GarchModel::new(returns, spec) {
        Ok(model) => model_log_posterior(&model, params),
        Err(_) => f64::NEG_INFINITY,
    }
}

pub(crate) fn model_log_posterior(model: &GarchModel<'_>, params: &GarchParams) -> f64 {
    if !params.in_support() {
        return f64::NEG_INFINITY;
    }
    match model.log_likelihood(params) {
        Ok(ll) if !ll.is_nan() => ll,
        _ => f64::NEG_INFINITY,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub point: Vec<f64>,
    pub log_target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub state: State,
    pub accepted: bool,
    /// `ln [p(x') q(x)] - ln [p(x) q(x')]`.
    pub log_ratio: f64,
}

/// One independence Metropolis-Hastings transition.
///
/// Draws `x' ~ q`, then accepts with probability
/// `min(1, p(x') q(x) / (p(x) q(x')))`, evaluated in log space. Exactly one
/// uniform is consumed per step after the proposal draw.
pub fn mh_step<R, F>(current: &State, proposal: &StudentT, mut target: F, rng: &mut R) -> Step
where
    R: Rng + ?Sized,
    F: FnMut(&[f64]) -> f64,
{
    let candidate = proposal.sample(rng);
    let log_target = target(&candidate);
    let log_ratio = (log_target - current.log_target)
        + (proposal.logpdf(&current.point) - proposal.logpdf(&candidate));
    let u: f64 = rng.random();
    if u.ln() < log_ratio {
        Step {
            state: State {
                point: candidate,
                log_target,
            },
            accepted: true,
            log_ratio,
        }
    } else {
        Step {
            state: current.clone(),
            accepted: false,
            log_ratio,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    BurnIn,
    Sampling,
}

/// Per-step record handed to a [`run_chain_observed`] observer.
#[derive(Debug)]
pub struct StepEvent<'a> {
    pub phase: Phase,
    /// Index within the phase.
    pub step: usize,
    pub accepted: bool,
    pub proposal: &'a ProposalDensity,
    pub state: &'a State,
}

/// Retained draws of a run (measurement phase only).
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    parameter_names: Vec<String>,
    dim: usize,
    draws: Vec<f64>,
    log_posteriors: Vec<f64>,
    acceptance_rate: f64,
    config: ChainConfig,
}

impl Chain {
    /// Builds a chain from externally produced draws, e.g. for diagnostics
    /// on injected samples.
    pub fn from_draws(
        parameter_names: Vec<String>,
        rows: &[Vec<f64>],
        log_posteriors: Vec<f64>,
        acceptance_rate: f64,
        config: ChainConfig,
    ) -> Result<Self> {
        let dim = parameter_names.len();
        if rows.len() != log_posteriors.len() {
            return Err(Error::LengthMismatch {
                expected: rows.len(),
                got: log_posteriors.len(),
            });
        }
        let mut draws = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: row.len(),
                });
            }
            draws.extend_from_slice(row);
        }
        Ok(Self {
            parameter_names,
            dim,
            draws,
            log_posteriors,
            acceptance_rate,
            config,
        })
    }

    pub fn parameter_names(&self) -> &[String] {
        &self.parameter_names
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.log_posteriors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_posteriors.is_empty()
    }

    pub fn draw(&self, i: usize) -> &[f64] {
        &self.draws[i * self.dim..(i + 1) * self.dim]
    }

    pub fn draws(&self) -> impl Iterator<Item = &[f64]> {
        self.draws.chunks_exact(self.dim)
    }

    pub fn params(&self, i: usize) -> GarchParams {
        GarchParams::from_slice(self.draw(i))
    }

    /// Column `j` of the draws matrix.
    pub fn trace(&self, j: usize) -> Vec<f64> {
        self.draws().map(|d| d[j]).collect()
    }

    pub fn log_posteriors(&self) -> &[f64] {
        &self.log_posteriors
    }

    /// Fraction of accepted proposals during the measurement phase.
    pub fn acceptance_rate(&self) -> f64 {
        self.acceptance_rate
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }
}

/// Starting point `(0.1 Var(r), 0.1, 0.8[, 0.1])`.
pub fn initial_point(data: &ReturnSeries, spec: &ModelSpec) -> Result<Vec<f64>> {
    let var = stats::sample_variance(data.returns());
    if !(var > 0.0 && var.is_finite()) {
        return Err(Error::ZeroVariance("return series"));
    }
    let mut x = vec![0.1 * var, 0.1, 0.8];
    if spec.dim() == 4 {
        x.push(0.1);
    }
    Ok(x)
}

pub fn run_chain(data: &ReturnSeries, spec: &ModelSpec, config: &ChainConfig) -> Result<Chain> {
    run_chain_observed(data, spec, config, |_| {})
}

/// [`run_chain`] with a callback invoked after every step of both phases.
pub fn run_chain_observed<F>(
    data: &ReturnSeries,
    spec: &ModelSpec,
    config: &ChainConfig,
    mut observer: F,
) -> Result<Chain>
where
    F: FnMut(&StepEvent<'_>),
{
    config.validate()?;
    let model = GarchModel::new(data, spec)?;
    let dim = spec.dim();
    let target = |x: &[f64]| model_log_posterior(&model, &GarchParams::from_slice(x));
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);

    let start = initial_point(data, spec)?;
    let start_lp = target(&start);
    if !start_lp.is_finite() {
        return Err(Error::NonFinite(0));
    }
    let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        dim,
        start.iter().map(|v| (0.1 * v) * (0.1 * v)),
    ));
    let bootstrap = ProposalDensity::new(start.clone(), diag, config.dof)?;

    let mut current = State {
        point: start,
        log_target: start_lp,
    };
    let mut best = current.clone();
    let mut proposal = bootstrap.clone();
    let mut adapted = false;
    let mut pilot: Vec<Vec<f64>> = Vec::with_capacity(config.burn_in);
    let mut burn_accepted = 0usize;

    for step in 0..config.burn_in {
        let next = mh_step(&current, &proposal, target, &mut rng);
        current = next.state;
        if next.accepted {
            burn_accepted += 1;
        }
        observer(&StepEvent {
            phase: Phase::BurnIn,
            step,
            accepted: next.accepted,
            proposal: &proposal,
            state: &current,
        });
        pilot.push(current.point.clone());

        if current.log_target > best.log_target {
            best = current.clone();
            if !adapted {
                proposal = bootstrap.recentered(&best.point);
            }
        }

        // Distinct states = accepted moves + the starting point.
        if (step + 1) % config.adapt_interval == 0 && burn_accepted + 1 >= dim + 2 {
            match fit_proposal(&pilot, config.dof, config.scale_inflation) {
                Ok(q) => {
                    log::debug!("burn-in step {}: refit proposal at {:?}", step + 1, q.location());
                    proposal = q;
                    adapted = true;
                }
                Err(e) => log::debug!("burn-in step {}: refit skipped: {e}", step + 1),
            }
        }
    }
    if burn_accepted == 0 {
        return Err(Error::FlatChain);
    }
    log::debug!(
        "burn-in acceptance {:.3}, adapted: {adapted}",
        burn_accepted as f64 / config.burn_in as f64
    );

    let frozen = proposal;
    let mut draws = Vec::with_capacity(config.samples * dim);
    let mut log_posteriors = Vec::with_capacity(config.samples);
    let mut accepted = 0usize;
    for step in 0..config.samples {
        let next = mh_step(&current, &frozen, target, &mut rng);
        current = next.state;
        if next.accepted {
            accepted += 1;
        }
        observer(&StepEvent {
            phase: Phase::Sampling,
            step,
            accepted: next.accepted,
            proposal: &frozen,
            state: &current,
        });
        draws.extend_from_slice(&current.point);
        log_posteriors.push(current.log_target);
    }

    Ok(Chain {
        parameter_names: parameter_names(spec.exogenous),
        dim,
        draws,
        log_posteriors,
        acceptance_rate: accepted as f64 / config.samples as f64,
        config: *config,
    })
}

/// Runs `n` chains concurrently, chain `k` seeded with
/// `derive_seed(config.seed, "chain", k)`.
pub fn run_chains(
    data: &ReturnSeries,
    spec: &ModelSpec,
    config: &ChainConfig,
    n: usize,
) -> Vec<Result<Chain>> {
    (0..n)
        .into_par_iter()
        .map(|k| {
            let cfg = config.with_seed(crate::derive_seed(config.seed, "chain", k as u64));
            run_chain(data, spec, &cfg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::garch::simulate;
    use crate::timeseries::ExogenousMode;

    fn small() -> ChainConfig {
        ChainConfig {
            burn_in: 1000,
            samples: 2000,
            adapt_interval: 200,
            ..ChainConfig::default()
        }
    }

    fn data() -> ReturnSeries {
        let p = GarchParams::new(0.1, 0.1, 0.8).unwrap();
        simulate(&p, 800, 3, None).unwrap()
    }

    #[test]
    fn defaults_follow_protocol() {
        let c = ChainConfig::default();
        assert_eq!((c.burn_in, c.samples), (5000, 50000));
        assert_eq!((c.dof, c.adapt_interval, c.scale_inflation), (10.0, 500, 1.2));
        c.validate().unwrap();
    }

    #[test]
    fn config_validation() {
        let bad = [
            ChainConfig { burn_in: 0, ..small() },
            ChainConfig { samples: 0, ..small() },
            ChainConfig { dof: 2.0, ..small() },
            ChainConfig { adapt_interval: 0, ..small() },
            ChainConfig { scale_inflation: 0.9, ..small() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn posterior_outside_support() {
        let d = data();
        let spec = ModelSpec::default();
        let bad = GarchParams::from_slice(&[-0.1, 0.1, 0.8]);
        assert_eq!(log_posterior(&bad, &d, &spec), f64::NEG_INFINITY);
        let ok = GarchParams::new(0.1, 0.1, 0.8).unwrap();
        assert_eq!(
            log_posterior(&ok, &d, &spec),
            crate::garch::log_likelihood(&ok, &d, &spec).unwrap()
        );
        let edge = GarchParams::new(0.1, 0.0, 0.8).unwrap();
        let lp = log_posterior(&edge, &d, &spec);
        assert!(lp.is_finite());
        assert_eq!(lp, crate::garch::log_likelihood(&edge, &d, &spec).unwrap());
    }

    #[test]
    fn out_of_support_proposal_always_rejected() {
        let q = StudentT::new(vec![0.0], DMatrix::identity(1, 1), 5.0).unwrap();
        let current = State {
            point: vec![0.0],
            log_target: -1.0,
        };
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let s = mh_step(&current, &q, |_| f64::NEG_INFINITY, &mut rng);
            assert!(!s.accepted);
            assert_eq!(s.state, current);
        }
    }

    #[test]
    fn retained_count_and_support() {
        let chain = run_chain(&data(), &ModelSpec::default(), &small()).unwrap();
        assert_eq!(chain.len(), 2000);
        assert_eq!(chain.parameter_names(), &["omega", "alpha", "beta"]);
        for i in 0..chain.len() {
            assert!(chain.params(i).in_support());
        }
        assert!(chain.acceptance_rate() > 0.0 && chain.acceptance_rate() <= 1.0);
    }

    #[test]
    fn same_seed_same_chain() {
        let d = data();
        let a = run_chain(&d, &ModelSpec::default(), &small()).unwrap();
        let b = run_chain(&d, &ModelSpec::default(), &small()).unwrap();
        assert_eq!(a, b);
        let c = run_chain(&d, &ModelSpec::default(), &small().with_seed(99)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn spec_mismatch_is_an_error() {
        assert!(matches!(
            run_chain(&data(), &ModelSpec::new(ExogenousMode::Volume), &small()),
            Err(Error::MissingExogenous)
        ));
    }

    #[test]
    fn constant_returns_fail_fast() {
        let d = ReturnSeries::new(vec![0.0; 100]);
        assert!(run_chain(&d, &ModelSpec::default(), &small()).is_err());
    }

    #[test]
    fn multiple_chains_differ() {
        let chains = run_chains(&data(), &ModelSpec::default(), &small(), 2);
        let a = chains[0].as_ref().unwrap();
        let b = chains[1].as_ref().unwrap();
        assert_ne!(a.draw(0), b.draw(0));
    }
}
