//! Shared fixtures for the criterion benches.

use tempered_coint::process::simulate_model_fn;
use tempered_coint::{NoiseConfig, RegressionFunction, SimulatedPath, TemperedProcessSpec};

/// Semi-long memory path with `d = 0.3`, `lambda = N^-1/5` and the sine
/// regression function.
pub fn slm_path(n: usize, seed: u64) -> SimulatedPath {
    let lambda = (n as f64).powf(-0.2);
    let spec = TemperedProcessSpec::semi_long_memory(n, 0.3, lambda).expect("valid spec");
    let noise = NoiseConfig::new(0.5, 0.25, 0.2, seed).expect("valid noise");
    simulate_model_fn(&spec, &noise, &RegressionFunction::sine()).expect("simulation")
}
