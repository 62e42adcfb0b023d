#![allow(dead_code)]

use rand::Rng;

/// Independent two-pass transcription of the conditional Gaussian
/// log-likelihood: build the whole variance path first, then sum the
/// per-observation normal log-densities.
pub fn naive_log_likelihood(
    omega: f64,
    alpha: f64,
    beta: f64,
    gamma: Option<(f64, &[f64])>,
    returns: &[f64],
    initial_variance: f64,
) -> f64 {
    let n = returns.len();
    let mut sigma2 = vec![0.0; n];
    sigma2[0] = initial_variance;
    for t in 1..n {
        let exo = match gamma {
            Some((g, x)) => g * x[t],
            None => 0.0,
        };
        sigma2[t] = omega + alpha * returns[t - 1].powi(2) + beta * sigma2[t - 1] + exo;
    }
    let mut total = 0.0;
    for t in 0..n {
        let density_log = -0.5 * (2.0 * std::f64::consts::PI).ln()
            - 0.5 * sigma2[t].ln()
            - returns[t].powi(2) / (2.0 * sigma2[t]);
        total += density_log;
    }
    total
}

/// Unbiased sample variance, written out independently of the library.
pub fn naive_sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m: f64 = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Random returns with fat-ish tails and volatility bursts.
pub fn random_returns<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut scale = 1.0;
    (0..n)
        .map(|_| {
            if rng.random::<f64>() < 0.05 {
                scale = rng.random_range(0.3..3.0);
            }
            let u: f64 = rng.random_range(-1.0..1.0);
            let v: f64 = rng.random_range(-1.0..1.0);
            scale * (u + v + 0.3 * u * u * u)
        })
        .collect()
}

/// Naive mean and (n - 1) SD.
pub fn naive_mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mut s = 0.0;
    for x in xs {
        s += x;
    }
    let m = s / n;
    let mut ss = 0.0;
    for x in xs {
        ss += (x - m) * (x - m);
    }
    (m, (ss / (n - 1.0)).sqrt())
}
