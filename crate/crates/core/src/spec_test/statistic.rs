use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::process::MemoryKind;
use crate::schedule::ScheduleRule;

use super::family::{residuals, ParametricFamily};

pub const DEFAULT_QUAD_CELLS: usize = 2048;
const RECURRENCE_RUN: usize = 64;

type WeightFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Nonnegative weight `π(x)` with compact support `[lo, hi]`.
#[derive(Clone)]
pub struct WeightFunction {
    lo: f64,
    hi: f64,
    shape: Option<WeightFn>,
}

impl fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.shape {
            None => write!(f, "Indicator[{}, {}]", self.lo, self.hi),
            Some(_) => write!(f, "Custom[{}, {}]", self.lo, self.hi),
        }
    }
}

impl WeightFunction {
    /// `π(x) = 1` on `[lo, hi]`.
    pub fn indicator(lo: f64, hi: f64) -> Result<Self> {
        Self::check_support(lo, hi)?;
        Ok(WeightFunction { lo, hi, shape: None })
    }

    /// The `[-100, 100]` indicator used for specification tests by default.
    pub fn wide() -> Self {
        WeightFunction { lo: -100.0, hi: 100.0, shape: None }
    }

    /// Arbitrary shape on `[lo, hi]`; values must be nonnegative.
    pub fn custom<F>(lo: f64, hi: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::check_support(lo, hi)?;
        Ok(WeightFunction { lo, hi, shape: Some(Arc::new(f)) })
    }

    fn check_support(lo: f64, hi: f64) -> Result<()> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(format!("weight support [{lo}, {hi}] is empty or unbounded")));
        }
        Ok(())
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn is_indicator(&self) -> bool {
        self.shape.is_none()
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            return 0.0;
        }
        match &self.shape {
            None => 1.0,
            Some(f) => f(x),
        }
    }
}

/// How the raw statistic is scaled before comparison with its subsampling
/// distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MemoryNormalization {
    /// Divide by `√n λ^d h`; λ follows `lambda` at every sample size.
    SemiLong { d: f64, lambda: ScheduleRule },
    /// Multiply by `n^{d-1/2}/h`.
    Long { d: f64 },
    /// Divide by `√n h`.
    Short,
}

impl MemoryNormalization {
    pub fn kind(&self) -> MemoryKind {
        match self {
            MemoryNormalization::SemiLong { .. } => MemoryKind::SemiLongMemory,
            MemoryNormalization::Long { .. } => MemoryKind::LongMemory,
            MemoryNormalization::Short => MemoryKind::ShortMemory,
        }
    }

    pub fn d(&self) -> f64 {
        match *self {
            MemoryNormalization::SemiLong { d, .. } | MemoryNormalization::Long { d } => d,
            MemoryNormalization::Short => 0.0,
        }
    }

    /// λ at sample size `n` (zero outside the semi-long case).
    pub fn lambda(&self, n: usize) -> f64 {
        match self {
            MemoryNormalization::SemiLong { lambda, .. } => lambda.value(n),
            _ => 0.0,
        }
    }

    /// Divisor turning `T` into the normalized statistic at size `n`.
    pub fn normalizer(&self, n: usize, h: f64) -> Result<f64> {
        normalizer(n, self.lambda(n), self.d(), h, self.kind())
    }
}

/// Divisor of `T`: `√n λ^d h` (semi-long), `n^{1/2-d} h` (long), `√n h`
/// (short).
pub fn normalizer(n: usize, lambda: f64, d: f64, h: f64, kind: MemoryKind) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("sample size must be positive"));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid(format!("bandwidth must be positive, got {h}")));
    }
    let nf = n as f64;
    let v = match kind {
        MemoryKind::SemiLongMemory => {
            if !(lambda > 0.0 && lambda.is_finite()) {
                return Err(Error::invalid("semi-long memory normalization requires lambda > 0"));
            }
            nf.sqrt() * lambda.powf(d) * h
        }
        MemoryKind::LongMemory => nf.powf(0.5 - d) * h,
        MemoryKind::ShortMemory => nf.sqrt() * h,
    };
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::numerical(format!("normalizer is not a positive finite number ({v})")));
    }
    Ok(v)
}

pub fn normalized_statistic(t_raw: f64, n: usize, lambda: f64, d: f64, h: f64, kind: MemoryKind) -> Result<f64> {
    Ok(t_raw / normalizer(n, lambda, d, h, kind)?)
}

/// Integration interval: the weight support clipped to where the kernel sum
/// can be nonzero. `None` when they do not overlap.
pub(crate) fn integration_domain(x: &[f64], h: f64, kernel: Kernel, weight: &WeightFunction) -> Option<(f64, f64)> {
    let (xmin, xmax) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let reach = kernel.effective_radius() * h;
    let (wlo, whi) = weight.support();
    let lo = wlo.max(xmin - reach);
    let hi = whi.min(xmax + reach);
    (lo < hi).then_some((lo, hi))
}

/// `T = ∫ {Σ_k K((x_k - x)/h) r_k}² π(x) dx` by the composite midpoint rule
/// with `cells` cells.
pub fn t_statistic_from_residuals(
    x: &[f64],
    r: &[f64],
    h: f64,
    kernel: Kernel,
    weight: &WeightFunction,
    cells: usize,
) -> Result<f64> {
    if x.len() != r.len() {
        return Err(Error::invalid("x and residual lengths differ"));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid(format!("bandwidth must be positive, got {h}")));
    }
    if cells < 2 {
        return Err(Error::invalid(format!("quadrature needs at least 2 cells, got {cells}")));
    }
    if x.is_empty() || r.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let Some((lo, hi)) = integration_domain(x, h, kernel, weight) else {
        return Ok(0.0);
    };
    let step = (hi - lo) / cells as f64;
    let node = |m: usize| lo + (m as f64 + 0.5) * step;
    let mut sums = vec![0.0; cells];
    let reach = kernel.effective_radius() * h;

    for (&xk, &rk) in x.iter().zip(r) {
        if rk == 0.0 {
            continue;
        }
        // Grid indices with |node - x_k| <= reach.
        let first = ((xk - reach - lo) / step - 0.5).ceil().max(0.0);
        let last = ((xk + reach - lo) / step - 0.5).floor().min(cells as f64 - 1.0);
        if first > last {
            continue;
        }
        let (first, last) = (first as usize, last as usize);
        match kernel {
            Kernel::Gaussian => {
                // exp(-u²/2) along the uniform grid by a two-term recurrence,
                // re-anchored every RECURRENCE_RUN nodes to bound drift.
                let delta = step / h;
                let decay = (-delta * delta).exp();
                for start in (first..=last).step_by(RECURRENCE_RUN) {
                    let end = (start + RECURRENCE_RUN - 1).min(last);
                    let u0 = (node(start) - xk) / h;
                    let mut e = kernel.eval(u0) * rk;
                    let mut q = (-u0 * delta - 0.5 * delta * delta).exp();
                    for s in &mut sums[start..=end] {
                        *s += e;
                        e *= q;
                        q *= decay;
                    }
                }
            }
            Kernel::Epanechnikov => {
                for (m, s) in sums.iter_mut().enumerate().take(last + 1).skip(first) {
                    *s += kernel.eval((node(m) - xk) / h) * rk;
                }
            }
        }
    }

    let total: f64 = if weight.is_indicator() {
        sums.iter().map(|s| s * s).sum()
    } else {
        let mut acc = 0.0;
        for (m, s) in sums.iter().enumerate() {
            let w = weight.eval(node(m));
            if w < 0.0 {
                return Err(Error::invalid("weight function returned a negative value"));
            }
            acc += s * s * w;
        }
        acc
    };
    Ok(total * step)
}

/// Raw statistic for data `(x, y)` with parametric fit `theta`.
#[allow(clippy::too_many_arguments)]
pub fn t_statistic(
    x: &[f64],
    y: &[f64],
    family: &ParametricFamily,
    theta: &[f64],
    h: f64,
    kernel: Kernel,
    weight: &WeightFunction,
    cells: usize,
) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid("x and y lengths differ"));
    }
    if theta.len() != family.dim() {
        return Err(Error::invalid(format!("theta must have {} entries", family.dim())));
    }
    let r = residuals(family, x, y, theta);
    t_statistic_from_residuals(x, &r, h, kernel, weight, cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn riemann(x: &[f64], r: &[f64], h: f64, kernel: Kernel, lo: f64, hi: f64, cells: usize) -> f64 {
        let step = (hi - lo) / cells as f64;
        (0..cells)
            .map(|m| {
                let z = lo + (m as f64 + 0.5) * step;
                let s: f64 = x.iter().zip(r).map(|(&xk, &rk)| kernel.eval((xk - z) / h) * rk).sum();
                s * s * step
            })
            .sum()
    }

    #[test]
    fn zero_cases() {
        let x = [0.0, 1.0, 2.0];
        let w = WeightFunction::wide();
        assert_eq!(t_statistic_from_residuals(&x, &[0.0; 3], 0.5, Kernel::Gaussian, &w, 64).unwrap(), 0.0);
        let far = WeightFunction::indicator(50.0, 60.0).unwrap();
        assert_eq!(t_statistic_from_residuals(&x, &[1.0; 3], 0.5, Kernel::Epanechnikov, &far, 64).unwrap(), 0.0);
        let null = WeightFunction::custom(-10.0, 10.0, |_| 0.0).unwrap();
        assert_eq!(t_statistic_from_residuals(&x, &[1.0; 3], 0.5, Kernel::Gaussian, &null, 64).unwrap(), 0.0);
        assert!(t_statistic_from_residuals(&x, &[1.0; 3], 0.5, Kernel::Gaussian, &w, 1).is_err());
        assert!(WeightFunction::indicator(1.0, 1.0).is_err());
    }

    #[test]
    fn gaussian_single_point_closed_form() {
        // ∫ φ(z/h)² dz = h / (2√π)
        let h = 0.3;
        let t = t_statistic_from_residuals(&[0.2], &[2.0], h, Kernel::Gaussian, &WeightFunction::wide(), 2048)
            .unwrap();
        let exact = 4.0 * h / (2.0 * std::f64::consts::PI.sqrt());
        assert!((t - exact).abs() < 1e-12 * exact, "{t} {exact}");
    }

    #[test]
    fn matches_direct_sum_on_same_grid() {
        let x = [0.1, -0.4, 0.7, 1.5, 1.1];
        let r = [0.3, -1.0, 0.2, 0.9, -0.5];
        for kernel in [Kernel::Gaussian, Kernel::Epanechnikov] {
            let h = 0.45;
            let w = WeightFunction::wide();
            let t = t_statistic_from_residuals(&x, &r, h, kernel, &w, 500).unwrap();
            let (lo, hi) = integration_domain(&x, h, kernel, &w).unwrap();
            let oracle = riemann(&x, &r, h, kernel, lo, hi, 500);
            assert!((t - oracle).abs() < 1e-11 * oracle.abs(), "{kernel:?}: {t} vs {oracle}");
        }
    }

    #[test]
    fn custom_weight_halves() {
        let x = [0.0, 0.5];
        let r = [1.0, -0.5];
        let full = WeightFunction::indicator(-5.0, 5.0).unwrap();
        let half = WeightFunction::custom(-5.0, 5.0, |_| 0.5).unwrap();
        let a = t_statistic_from_residuals(&x, &r, 0.4, Kernel::Gaussian, &full, 1024).unwrap();
        let b = t_statistic_from_residuals(&x, &r, 0.4, Kernel::Gaussian, &half, 1024).unwrap();
        assert!((a - 2.0 * b).abs() < 1e-14 * a);
    }

    #[test]
    fn normalizations() {
        let short = normalized_statistic(10.0, 100, 0.0, 0.0, 0.1, MemoryKind::ShortMemory).unwrap();
        assert!((short - 10.0).abs() < 1e-12);
        let lm = normalized_statistic(10.0, 100, 0.0, 0.25, 0.1, MemoryKind::LongMemory).unwrap();
        assert!((lm - 31.622776601683793).abs() < 1e-9);
        let slm = normalized_statistic(10.0, 100, 1.0, 0.4, 0.1, MemoryKind::SemiLongMemory).unwrap();
        assert_eq!(slm, short);
        assert!(normalized_statistic(10.0, 100, 0.0, 0.4, 0.1, MemoryKind::SemiLongMemory).is_err());
    }
}
