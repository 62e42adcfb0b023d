//! Fixtures shared by the benchmarks.

use garchmh::garch::{simulate, synthetic_exogenous};
use garchmh::{ExogenousMode, GarchParams, ReturnSeries};

/// Simulated GARCH(1,1) returns with omega 0.1, alpha 0.1, beta 0.8.
pub fn plain_returns(length: usize) -> ReturnSeries {
    let params = GarchParams::new(0.1, 0.1, 0.8).expect("valid parameters");
    simulate(&params, length, 1, None).expect("simulation succeeds")
}

/// Simulated GARCH-X returns with a volume-like regressor and gamma 0.2.
pub fn volume_returns(length: usize) -> ReturnSeries {
    let params = GarchParams::new(0.05, 0.1, 0.8)
        .and_then(|p| p.with_gamma(0.2))
        .expect("valid parameters");
    let raw = synthetic_exogenous(length, 1.0, 0.2, 2).expect("valid generator");
    simulate(&params, length, 1, Some((ExogenousMode::Volume, &raw))).expect("simulation succeeds")
}
