use rayon::prelude::*;

use crate::error::{Error, Result};

use super::family::{nls_fit, residuals};
use super::statistic::t_statistic_from_residuals;
use super::SpecTestConfig;

/// Largest fraction of blocks that may fail before the subsample
/// distribution is considered unusable.
pub const MAX_SKIPPED_FRACTION: f64 = 0.05;

/// Normalized block statistics for one block size.
#[derive(Debug, Clone, PartialEq)]
pub struct Subsample {
    pub block_size: usize,
    pub bandwidth: f64,
    /// Ascending; skipped blocks are omitted.
    pub sorted: Vec<f64>,
    /// In block order, `None` where the block fit failed.
    pub by_block: Vec<Option<f64>>,
    pub skipped: usize,
}

/// Normalized statistic of one contiguous block.
pub fn block_statistic(x: &[f64], y: &[f64], config: &SpecTestConfig, theta_init: Option<&[f64]>) -> Result<f64> {
    let b = x.len();
    let h = config.bandwidth.value(b);
    let fit = nls_fit(&config.family, x, y, theta_init, config.bounds.as_deref())?;
    let r = residuals(&config.family, x, y, &fit.theta);
    let t = t_statistic_from_residuals(x, &r, h, config.kernel, &config.weight, config.quad_cells)?;
    Ok(t / config.memory.normalizer(b, h)?)
}

/// Statistics of all `n - b + 1` overlapping blocks of length `b`, with the
/// bandwidth and tempering rules re-evaluated at size `b`.
pub fn subsample_statistics(
    x: &[f64],
    y: &[f64],
    config: &SpecTestConfig,
    b: usize,
    theta_init: Option<&[f64]>,
) -> Result<Subsample> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::invalid("x and y lengths differ"));
    }
    if b < 2 || b > n {
        return Err(Error::invalid(format!("block size {b} must lie in [2, {n}]")));
    }
    if b < config.family.dim() {
        return Err(Error::invalid(format!(
            "block size {b} is smaller than the {} family parameters",
            config.family.dim()
        )));
    }
    let count = n - b + 1;
    let by_block: Vec<Option<f64>> = (0..count)
        .into_par_iter()
        .map(|t| block_statistic(&x[t..t + b], &y[t..t + b], config, theta_init).ok())
        .collect();
    let skipped = by_block.iter().filter(|v| v.is_none()).count();
    if skipped as f64 > MAX_SKIPPED_FRACTION * count as f64 {
        return Err(Error::numerical(format!(
            "{skipped} of {count} blocks of size {b} could not be fitted"
        )));
    }
    let mut sorted: Vec<f64> = by_block.iter().flatten().copied().collect();
    sorted.sort_by(f64::total_cmp);
    Ok(Subsample { block_size: b, bandwidth: config.bandwidth.value(b), sorted, by_block, skipped })
}

/// `(1 + #{v >= t}) / (1 + m)` for ascending `sorted`.
pub fn subsample_p_value(sorted: &[f64], t: f64) -> f64 {
    let below = sorted.partition_point(|&v| v < t);
    (1 + sorted.len() - below) as f64 / (1 + sorted.len()) as f64
}

/// Empirical `(1 - α)` quantile `v_(⌈(1-α) m⌉)` of ascending `sorted`.
pub fn subsample_quantile(sorted: &[f64], alpha: f64) -> Option<f64> {
    if sorted.is_empty() || !(alpha > 0.0 && alpha < 1.0) {
        return None;
    }
    let m = sorted.len();
    let k = ((1.0 - alpha) * m as f64 - 1e-9).ceil().max(1.0) as usize;
    Some(sorted[k.min(m) - 1])
}
