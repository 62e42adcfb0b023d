//! Bayesian estimation by independence Metropolis-Hastings with a
//! multivariate Student-t proposal.

mod diagnostics;
mod export;
mod proposal;
mod sampler;

pub use diagnostics::{
    autocorrelation_time, integrated_autocorrelation_time, summarize, PosteriorSummary,
};
pub use export::{save_chain_csv, write_chain_csv};
pub use proposal::{fit_proposal, sample_student_t, student_t_logpdf, ProposalDensity, StudentT};
pub use sampler::{
    initial_point, log_posterior, mh_step, run_chain, run_chain_observed, run_chains, Chain,
    ChainConfig, Phase, State, Step, StepEvent,
};
