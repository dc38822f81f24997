//! Kernel L2 specification test of a parametric regression family, with
//! critical values from block subsampling.

mod family;
mod statistic;
mod subsample;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::schedule::{BlockRule, ScheduleRule};

pub use family::{nls_fit, residuals, FamilyKind, NlsFit, ParametricFamily};
pub use statistic::{
    normalized_statistic, normalizer, t_statistic, t_statistic_from_residuals, MemoryNormalization,
    WeightFunction, DEFAULT_QUAD_CELLS,
};
pub use subsample::{
    block_statistic, subsample_p_value, subsample_quantile, subsample_statistics, Subsample,
    MAX_SKIPPED_FRACTION,
};

/// Everything needed to run the test on a data set.
#[derive(Debug, Clone)]
pub struct SpecTestConfig {
    pub family: ParametricFamily,
    /// Bandwidth rule, evaluated at `n` for the full sample and at `b` for blocks.
    pub bandwidth: ScheduleRule,
    pub block: BlockRule,
    pub kernel: Kernel,
    pub weight: WeightFunction,
    pub memory: MemoryNormalization,
    pub quad_cells: usize,
    /// Starting point for custom families; closed-form families ignore it.
    pub theta_init: Option<Vec<f64>>,
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl SpecTestConfig {
    /// Gaussian kernel, `π = 1` on `[-100, 100]`, 2048 quadrature cells.
    pub fn new(family: ParametricFamily, bandwidth: ScheduleRule, block: BlockRule, memory: MemoryNormalization) -> Self {
        SpecTestConfig {
            family,
            bandwidth,
            block,
            kernel: Kernel::Gaussian,
            weight: WeightFunction::wide(),
            memory,
            quad_cells: DEFAULT_QUAD_CELLS,
            theta_init: None,
            bounds: None,
        }
    }

    pub fn with_kernel(mut self, kernel: Kernel) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn with_weight(mut self, weight: WeightFunction) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_quad_cells(mut self, cells: usize) -> Self {
        self.quad_cells = cells;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.quad_cells < 2 {
            return Err(Error::invalid("quadrature needs at least 2 cells"));
        }
        if let ScheduleRule::Fixed(h) = self.bandwidth {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::invalid(format!("bandwidth must be positive, got {h}")));
            }
        }
        match self.memory {
            MemoryNormalization::SemiLong { d, lambda } => {
                if !d.is_finite() {
                    return Err(Error::invalid("d must be finite"));
                }
                if let ScheduleRule::Fixed(l) = lambda {
                    if !(l > 0.0 && l.is_finite()) {
                        return Err(Error::invalid("semi-long memory normalization requires lambda > 0"));
                    }
                }
            }
            MemoryNormalization::Long { d } => {
                if !d.is_finite() {
                    return Err(Error::invalid("d must be finite"));
                }
            }
            MemoryNormalization::Short => {}
        }
        Ok(())
    }
}

/// Outcome of one specification test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecTestResult {
    pub n: usize,
    pub family: String,
    pub t_raw: f64,
    pub t_normalized: f64,
    pub normalizer: f64,
    pub theta_hat: Vec<f64>,
    pub bandwidth: f64,
    pub block_size: usize,
    pub block_bandwidth: f64,
    /// Ascending normalized block statistics.
    pub subsample_values: Vec<f64>,
    /// Block statistics in block order; `null` for skipped blocks.
    pub by_block: Vec<Option<f64>>,
    pub skipped_blocks: usize,
    pub p_value: f64,
}

impl SpecTestResult {
    /// Subsampling critical value at level `alpha`.
    pub fn critical_value(&self, alpha: f64) -> Option<f64> {
        subsample_quantile(&self.subsample_values, alpha)
    }

    /// Rejects when the statistic exceeds the `(1 - α)` subsample quantile.
    pub fn rejects(&self, alpha: f64) -> bool {
        self.critical_value(alpha).is_some_and(|q| self.t_normalized > q)
    }
}

/// Full-sample part of the test, shared across block sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct FullSampleFit {
    pub theta: Vec<f64>,
    pub bandwidth: f64,
    pub t_raw: f64,
    pub normalizer: f64,
    pub t_normalized: f64,
}

fn check_data(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("x has {} values but y has {}", x.len(), y.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("data contain non-finite values"));
    }
    Ok(())
}

pub fn full_sample_statistic(x: &[f64], y: &[f64], config: &SpecTestConfig) -> Result<FullSampleFit> {
    config.validate()?;
    check_data(x, y)?;
    let n = x.len();
    let fit = nls_fit(&config.family, x, y, config.theta_init.as_deref(), config.bounds.as_deref())?;
    let h = config.bandwidth.value(n);
    let r = residuals(&config.family, x, y, &fit.theta);
    let t_raw = t_statistic_from_residuals(x, &r, h, config.kernel, &config.weight, config.quad_cells)?;
    let normalizer = config.memory.normalizer(n, h)?;
    Ok(FullSampleFit { theta: fit.theta, bandwidth: h, t_raw, normalizer, t_normalized: t_raw / normalizer })
}

fn assemble(n: usize, config: &SpecTestConfig, full: &FullSampleFit, sub: Subsample) -> SpecTestResult {
    SpecTestResult {
        n,
        family: config.family.to_string(),
        t_raw: full.t_raw,
        t_normalized: full.t_normalized,
        normalizer: full.normalizer,
        theta_hat: full.theta.clone(),
        bandwidth: full.bandwidth,
        block_size: sub.block_size,
        block_bandwidth: sub.bandwidth,
        p_value: subsample_p_value(&sub.sorted, full.t_normalized),
        subsample_values: sub.sorted,
        by_block: sub.by_block,
        skipped_blocks: sub.skipped,
    }
}

fn block_init<'a>(config: &'a SpecTestConfig, full: &'a FullSampleFit) -> Option<&'a [f64]> {
    if config.family.has_closed_form() {
        None
    } else {
        Some(config.theta_init.as_deref().unwrap_or(&full.theta))
    }
}

/// Fits, computes and normalizes the statistic, and calibrates it against
/// the block-subsampling distribution.
pub fn run_spec_test(x: &[f64], y: &[f64], config: &SpecTestConfig) -> Result<SpecTestResult> {
    let full = full_sample_statistic(x, y, config)?;
    let b = config.block.block_size(x.len());
    let sub = subsample_statistics(x, y, config, b, block_init(config, &full))?;
    Ok(assemble(x.len(), config, &full, sub))
}

/// Same as [`run_spec_test`] for several block rules, reusing the
/// full-sample fit.
pub fn run_spec_test_blocks(
    x: &[f64],
    y: &[f64],
    config: &SpecTestConfig,
    blocks: &[BlockRule],
) -> Result<Vec<SpecTestResult>> {
    let full = full_sample_statistic(x, y, config)?;
    blocks
        .iter()
        .map(|rule| {
            let b = rule.block_size(x.len());
            let sub = subsample_statistics(x, y, config, b, block_init(config, &full))?;
            Ok(assemble(x.len(), config, &full, sub))
        })
        .collect()
}
