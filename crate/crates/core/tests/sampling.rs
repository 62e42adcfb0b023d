mod common;

use std::collections::HashSet;

use garchmh::mcmc::{
    autocorrelation_time, fit_proposal, mh_step, run_chain_observed, sample_student_t, summarize,
    Chain, Phase, State, StudentT,
};
use garchmh::{run_chain, ChainConfig, Error, GarchParams, ModelSpec};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

const DRAWS: usize = 100_000;

fn column(rows: &[Vec<f64>], j: usize) -> Vec<f64> {
    rows.iter().map(|r| r[j]).collect()
}

fn covariance(rows: &[Vec<f64>], i: usize, j: usize) -> f64 {
    let (mi, _) = common::naive_mean_sd(&column(rows, i));
    let (mj, _) = common::naive_mean_sd(&column(rows, j));
    rows.iter().map(|r| (r[i] - mi) * (r[j] - mj)).sum::<f64>() / (rows.len() - 1) as f64
}

fn example_scale() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[1.0, 0.3, -0.2, 0.3, 0.5, 0.1, -0.2, 0.1, 2.0])
}

/// Standard error of a mean from non-overlapping batch means.
fn batch_means_se(xs: &[f64], batches: usize) -> f64 {
    let size = xs.len() / batches;
    let means: Vec<f64> = xs
        .chunks_exact(size)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    common::naive_mean_sd(&means).1 / (means.len() as f64).sqrt()
}

#[test]
fn student_t_moments() {
    let location = vec![1.0, -2.0, 0.5];
    let dof = 10.0;
    let t = StudentT::new(location.clone(), example_scale(), dof).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let rows: Vec<Vec<f64>> = (0..DRAWS).map(|_| sample_student_t(&t, &mut rng)).collect();
    let expected = example_scale() * (dof / (dof - 2.0));
    for i in 0..3 {
        let (m, _) = common::naive_mean_sd(&column(&rows, i));
        let se = (expected[(i, i)] / DRAWS as f64).sqrt();
        assert!((m - location[i]).abs() < 4.0 * se, "mean {i}: {m}");
        for j in 0..3 {
            let c = covariance(&rows, i, j);
            let reference = (expected[(i, i)] * expected[(j, j)]).sqrt();
            assert!(
                (c - expected[(i, j)]).abs() < 0.1 * reference,
                "cov ({i},{j}): {c} vs {}",
                expected[(i, j)]
            );
        }
    }
}

#[test]
fn proposal_fit_recovers_gaussian_moments() {
    let mu = [0.3, 0.1, 0.8];
    let sigma = example_scale();
    let chol = sigma.clone().cholesky().unwrap().l();
    let mut rng = ChaCha20Rng::seed_from_u64(12);
    let rows: Vec<Vec<f64>> = (0..DRAWS)
        .map(|_| {
            let z = nalgebra::DVector::from_fn(3, |_, _| StandardNormal.sample(&mut rng));
            let x = &chol * z;
            (0..3).map(|i| mu[i] + x[i]).collect()
        })
        .collect();
    let inflation = 1.2;
    let q = fit_proposal(&rows, 10.0, inflation).unwrap();
    for i in 0..3 {
        let se = (sigma[(i, i)] / DRAWS as f64).sqrt();
        assert!((q.location()[i] - mu[i]).abs() < 4.0 * se);
        for j in 0..3 {
            let fitted = q.scale()[(i, j)] / (inflation * inflation);
            let reference = (sigma[(i, i)] * sigma[(j, j)]).sqrt();
            assert!((fitted - sigma[(i, j)]).abs() < 0.1 * reference);
        }
    }
}

/// A two-region target: weight 0.3 on the negative half-line and 0.7 on the
/// positive one, each shaped like a standard normal. The chain must visit the
/// negative region 30% of the time.
#[test]
fn independence_sampler_hits_region_probabilities() {
    let target = |x: &[f64]| {
        let w: f64 = if x[0] < 0.0 { 0.3 } else { 0.7 };
        w.ln() - 0.5 * x[0] * x[0]
    };
    let q = StudentT::new(vec![0.5], DMatrix::from_element(1, 1, 2.25), 5.0).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(13);
    let mut state = State {
        point: vec![0.1],
        log_target: target(&[0.1]),
    };
    let mut hits = Vec::with_capacity(DRAWS);
    for _ in 0..DRAWS {
        state = mh_step(&state, &q, target, &mut rng).state;
        hits.push(if state.point[0] < 0.0 { 1.0 } else { 0.0 });
    }
    let freq = hits.iter().sum::<f64>() / DRAWS as f64;
    let se = batch_means_se(&hits, 100);
    assert!((freq - 0.3).abs() < 4.0 * se, "frequency {freq}, se {se}");
}

#[test]
fn summary_of_injected_draws() {
    let truth = [(0.2, 0.05), (0.1, 0.02), (0.85, 0.03)];
    let mut rng = ChaCha20Rng::seed_from_u64(14);
    let normals: Vec<Normal<f64>> = truth.iter().map(|&(m, s)| Normal::new(m, s).unwrap()).collect();
    let rows: Vec<Vec<f64>> = (0..DRAWS)
        .map(|_| normals.iter().map(|n| n.sample(&mut rng)).collect())
        .collect();
    let chain = Chain::from_draws(
        vec!["omega".into(), "alpha".into(), "beta".into()],
        &rows,
        vec![0.0; DRAWS],
        1.0,
        ChainConfig::default(),
    )
    .unwrap();
    let s = summarize(&chain);
    let n = DRAWS as f64;
    for (j, &(m, sd)) in truth.iter().enumerate() {
        assert!((s.means[j] - m).abs() < 3.0 * sd / n.sqrt());
        assert!((s.sds[j] - sd).abs() < 3.0 * sd / (2.0 * n).sqrt());
    }
}

#[test]
fn autocorrelation_time_of_white_noise() {
    let mut rng = ChaCha20Rng::seed_from_u64(15);
    let xs: Vec<f64> = (0..DRAWS).map(|_| StandardNormal.sample(&mut rng)).collect();
    let tau = autocorrelation_time(&xs).unwrap();
    assert!((tau - 0.5).abs() < 0.1, "tau {tau}");
}

#[test]
fn autocorrelation_time_of_ar1() {
    let phi: f64 = 0.9;
    let mut rng = ChaCha20Rng::seed_from_u64(16);
    let mut x = 0.0;
    let xs: Vec<f64> = (0..DRAWS)
        .map(|_| {
            let e: f64 = StandardNormal.sample(&mut rng);
            x = phi * x + e;
            x
        })
        .collect();
    // Integrated time of an AR(1): 1/2 + phi / (1 - phi).
    let expected = 0.5 + phi / (1.0 - phi);
    let tau = autocorrelation_time(&xs).unwrap();
    assert!((tau - expected).abs() < 0.2 * expected, "tau {tau}");
}

#[test]
fn proposal_is_frozen_after_burn_in() {
    let truth = GarchParams::new(0.1, 0.1, 0.8).unwrap();
    let data = garchmh::garch::simulate(&truth, 1000, 17, None).unwrap();
    let config = ChainConfig {
        burn_in: 2000,
        samples: 3000,
        ..ChainConfig::default()
    };
    let mut burn_in = HashSet::new();
    let mut sampling = HashSet::new();
    run_chain_observed(&data, &ModelSpec::default(), &config, |e| {
        let fp = e.proposal.fingerprint();
        match e.phase {
            Phase::BurnIn => burn_in.insert(fp),
            Phase::Sampling => sampling.insert(fp),
        };
    })
    .unwrap();
    assert!(burn_in.len() > 1, "the proposal never adapted");
    assert_eq!(sampling.len(), 1);
}

#[test]
fn exogenous_draws_stay_in_support() {
    let truth = GarchParams::new(0.05, 0.1, 0.8).unwrap().with_gamma(0.1).unwrap();
    let raw = garchmh::garch::synthetic_exogenous(1500, 1.0, 0.3, 18).unwrap();
    let mode = garchmh::ExogenousMode::Volume;
    let data = garchmh::garch::simulate(&truth, 1500, 19, Some((mode, &raw))).unwrap();
    let config = ChainConfig {
        burn_in: 2000,
        samples: 4000,
        ..ChainConfig::default()
    };
    let chain = run_chain(&data, &ModelSpec::new(mode), &config).unwrap();
    assert_eq!(chain.dim(), 4);
    assert!(chain.draws().all(|d| d[0] > 0.0 && d[1..].iter().all(|&v| v >= 0.0)));
    assert!(chain.log_posteriors().iter().all(|lp| lp.is_finite()));
}

#[test]
fn burn_in_without_acceptance_is_an_error() {
    let data = garchmh::garch::simulate(&GarchParams::new(0.1, 0.1, 0.8).unwrap(), 500, 20, None)
        .unwrap();
    let config = ChainConfig {
        burn_in: 1,
        samples: 1,
        ..ChainConfig::default()
    };
    let mut rng = ChaCha20Rng::seed_from_u64(21);
    let flat = (0..200).map(|_| rng.random::<u64>()).any(|seed| {
        matches!(
            run_chain(&data, &ModelSpec::default(), &config.with_seed(seed)),
            Err(Error::FlatChain)
        )
    });
    assert!(flat, "no single-step burn-in was rejected");
}
