//! Shared inputs for the benchmarks.

use monopo_core::analysis::{synthesize, Observation};
use monopo_core::SqueezingParams;

/// Noiseless pump sweep of OPO No.1 at 2 MHz, both quadratures.
pub fn sweep_observations(points: usize) -> Vec<Observation> {
    let params = SqueezingParams::opo1();
    let powers: Vec<f64> = (1..=points)
        .map(|i| 0.9 * params.p_threshold_w * i as f64 / points as f64)
        .collect();
    synthesize(&params, &powers, 2e6).expect("powers are below threshold")
}

/// `n` frequencies from 0 to 200 MHz.
pub fn frequency_grid(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 200e6 * i as f64 / (n - 1).max(1) as f64)
        .collect()
}
