//! Nadaraya–Watson estimation, local residual variance and self-normalized
//! pointwise confidence intervals.
//!
//! Points where no observation receives kernel weight are reported as
//! `None` rather than interpolated.

use std::io::Write;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::kernel::Kernel;

/// Observations sorted by regressor value, for windowed kernel sums.
#[derive(Debug, Clone)]
pub(crate) struct SortedSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl SortedSample {
    pub fn new(x: &[f64], y: &[f64]) -> Self {
        let mut idx: Vec<usize> = (0..x.len()).collect();
        idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
        SortedSample {
            x: idx.iter().map(|&i| x[i]).collect(),
            y: idx.iter().map(|&i| y[i]).collect(),
        }
    }

    /// Indices that can receive nonzero weight at `point`.
    pub fn window(&self, point: f64, h: f64, kernel: Kernel) -> Range<usize> {
        match kernel.support() {
            Some((lo, hi)) => {
                let a = self.x.partition_point(|&v| v < point + lo * h);
                let b = self.x.partition_point(|&v| v <= point + hi * h);
                a..b.max(a)
            }
            None => 0..self.x.len(),
        }
    }

    /// `(Σ K((x_k - p)/h) y_k, Σ K((x_k - p)/h))`.
    pub fn weighted_sums(&self, point: f64, h: f64, kernel: Kernel) -> (f64, f64) {
        let mut num = 0.0;
        let mut den = 0.0;
        for k in self.window(point, h, kernel) {
            let w = kernel.eval((self.x[k] - point) / h);
            num += w * self.y[k];
            den += w;
        }
        (num, den)
    }
}

fn check_inputs(x: &[f64], y: &[f64], h: f64) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "series lengths differ: x has {}, y has {}",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::invalid("no observations"));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid(format!("bandwidth must be positive, got {h}")));
    }
    Ok(())
}

/// Standard-normal quantile `z_{α/2}`; zero for the degenerate `α = 1`.
pub fn z_quantile(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if alpha == 1.0 {
        return Ok(0.0);
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(normal.inverse_cdf(1.0 - alpha / 2.0))
}

/// Nadaraya–Watson fit on a grid, with local residual variance at each
/// defined point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelEstimate {
    pub grid: Vec<f64>,
    pub fhat: Vec<Option<f64>>,
    pub sigma2hat: Vec<Option<f64>>,
    /// `Σ_k K((x_k - x)/h)`, without the `1/h` factor.
    pub local_mass: Vec<f64>,
    pub bandwidth: f64,
    pub kernel: Kernel,
    pub band: Option<ConfidenceBand>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBand {
    pub alpha: f64,
    pub lo: Vec<Option<f64>>,
    pub hi: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    pub lo: f64,
    pub hi: f64,
    pub fhat: f64,
    pub sigma2hat: f64,
    pub local_mass: f64,
}

impl ConfidenceInterval {
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn covers(&self, value: f64) -> bool {
        self.lo <= value && value <= self.hi
    }
}

/// Half-width `z · {σ̂² ∫K² / (mass · ∫K)}^{1/2}`.
fn half_width(z: f64, sigma2: f64, mass: f64, kernel: Kernel) -> f64 {
    let (d1, k2) = kernel.moments();
    z * (sigma2 * k2 / (mass * d1)).sqrt()
}

impl KernelEstimate {
    pub fn is_defined(&self, i: usize) -> bool {
        self.fhat[i].is_some()
    }

    /// Adds the band `f̂(x) ± z_{α/2} {σ̂² ∫K² / (Σ K · ∫K)}^{1/2}`.
    pub fn with_confidence(mut self, alpha: f64) -> Result<Self> {
        let z = z_quantile(alpha)?;
        let mut lo = Vec::with_capacity(self.grid.len());
        let mut hi = Vec::with_capacity(self.grid.len());
        for i in 0..self.grid.len() {
            match (self.fhat[i], self.sigma2hat[i]) {
                (Some(f), Some(s2)) => {
                    let hw = half_width(z, s2, self.local_mass[i], self.kernel);
                    lo.push(Some(f - hw));
                    hi.push(Some(f + hw));
                }
                _ => {
                    lo.push(None);
                    hi.push(None);
                }
            }
        }
        self.band = Some(ConfidenceBand { alpha, lo, hi });
        Ok(self)
    }

    /// CSV `x,fhat,sigma2hat,local_mass,ci_lo,ci_hi`; undefined entries are
    /// left empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record(["x", "fhat", "sigma2hat", "local_mass", "ci_lo", "ci_hi"])?;
        let fmt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for i in 0..self.grid.len() {
            let (lo, hi) = match &self.band {
                Some(b) => (b.lo[i], b.hi[i]),
                None => (None, None),
            };
            w.write_record([
                self.grid[i].to_string(),
                fmt(self.fhat[i]),
                fmt(self.sigma2hat[i]),
                self.local_mass[i].to_string(),
                fmt(lo),
                fmt(hi),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fitted values and kernel mass on a grid, without variance estimates.
pub fn nw_fit(
    x: &[f64],
    y: &[f64],
    grid: &[f64],
    h: f64,
    kernel: Kernel,
) -> Result<(Vec<Option<f64>>, Vec<f64>)> {
    check_inputs(x, y, h)?;
    let data = SortedSample::new(x, y);
    Ok(grid
        .iter()
        .map(|&p| {
            let (num, den) = data.weighted_sums(p, h, kernel);
            ((den > 0.0).then(|| num / den), den)
        })
        .unzip())
}

/// `f̂(x) = Σ y_k K_h(x_k - x) / Σ K_h(x_k - x)` on `grid`, together with the
/// local residual variance from leave-in fitted values.
pub fn nw_estimate(x: &[f64], y: &[f64], grid: &[f64], h: f64, kernel: Kernel) -> Result<KernelEstimate> {
    check_inputs(x, y, h)?;
    if grid.is_empty() {
        return Err(Error::invalid("evaluation grid is empty"));
    }
    let data = SortedSample::new(x, y);
    let mut fitted = FittedCache::new(&data, h, kernel);
    let mut fhat = Vec::with_capacity(grid.len());
    let mut sigma2hat = Vec::with_capacity(grid.len());
    let mut local_mass = Vec::with_capacity(grid.len());
    for &p in grid {
        let (num, den) = data.weighted_sums(p, h, kernel);
        local_mass.push(den);
        if den > 0.0 {
            fhat.push(Some(num / den));
            sigma2hat.push(fitted.local_variance(p));
        } else {
            fhat.push(None);
            sigma2hat.push(None);
        }
    }
    Ok(KernelEstimate {
        grid: grid.to_vec(),
        fhat,
        sigma2hat,
        local_mass,
        bandwidth: h,
        kernel,
        band: None,
    })
}

/// Leave-in fitted values `f̂(x_k)`, computed on demand.
struct FittedCache<'a> {
    data: &'a SortedSample,
    h: f64,
    kernel: Kernel,
    values: Vec<f64>,
}

impl<'a> FittedCache<'a> {
    fn new(data: &'a SortedSample, h: f64, kernel: Kernel) -> Self {
        FittedCache { data, h, kernel, values: vec![f64::NAN; data.x.len()] }
    }

    fn get(&mut self, k: usize) -> f64 {
        if self.values[k].is_nan() {
            let (num, den) = self.data.weighted_sums(self.data.x[k], self.h, self.kernel);
            self.values[k] = num / den;
        }
        self.values[k]
    }

    fn local_variance(&mut self, point: f64) -> Option<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        for k in self.data.window(point, self.h, self.kernel) {
            let w = self.kernel.eval((self.data.x[k] - point) / self.h);
            if w > 0.0 {
                let r = self.data.y[k] - self.get(k);
                num += w * r * r;
                den += w;
            }
        }
        (den > 0.0).then(|| num / den)
    }
}

/// Leave-in fitted values `f̂(x_k)` at every observation.
pub fn fitted_values(x: &[f64], y: &[f64], h: f64, kernel: Kernel) -> Result<Vec<f64>> {
    check_inputs(x, y, h)?;
    let data = SortedSample::new(x, y);
    Ok(x.iter()
        .map(|&p| {
            let (num, den) = data.weighted_sums(p, h, kernel);
            num / den
        })
        .collect())
}

/// `σ̂²(x) = Σ [y_k - f̂(x_k)]² K_h(x_k - x) / Σ K_h(x_k - x)`.
pub fn residual_variance(
    x: &[f64],
    y: &[f64],
    fitted: &[f64],
    h: f64,
    kernel: Kernel,
    point: f64,
) -> Result<Option<f64>> {
    check_inputs(x, y, h)?;
    if fitted.len() != x.len() {
        return Err(Error::invalid("fitted values must match the series length"));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..x.len() {
        let w = kernel.eval((x[k] - point) / h);
        if w > 0.0 {
            if !fitted[k].is_finite() {
                return Err(Error::invalid(format!("fitted value at observation {k} is undefined")));
            }
            let r = y[k] - fitted[k];
            num += w * r * r;
            den += w;
        }
    }
    Ok((den > 0.0).then(|| num / den))
}

/// Pointwise interval at `point`; `None` when the point has no kernel mass.
pub fn confidence_interval(
    x: &[f64],
    y: &[f64],
    point: f64,
    h: f64,
    kernel: Kernel,
    alpha: f64,
) -> Result<Option<ConfidenceInterval>> {
    check_inputs(x, y, h)?;
    let data = SortedSample::new(x, y);
    confidence_interval_sorted(&data, point, h, kernel, z_quantile(alpha)?)
}

/// Intervals at several points sharing one sort of the data.
pub fn confidence_intervals(
    x: &[f64],
    y: &[f64],
    points: &[f64],
    h: f64,
    kernel: Kernel,
    alpha: f64,
) -> Result<Vec<Option<ConfidenceInterval>>> {
    check_inputs(x, y, h)?;
    let z = z_quantile(alpha)?;
    let data = SortedSample::new(x, y);
    points
        .iter()
        .map(|&p| confidence_interval_sorted(&data, p, h, kernel, z))
        .collect()
}

fn confidence_interval_sorted(
    data: &SortedSample,
    point: f64,
    h: f64,
    kernel: Kernel,
    z: f64,
) -> Result<Option<ConfidenceInterval>> {
    let (num, mass) = data.weighted_sums(point, h, kernel);
    if !(mass > 0.0) {
        return Ok(None);
    }
    let fhat = num / mass;
    let mut cache = FittedCache::new(data, h, kernel);
    let sigma2hat = cache
        .local_variance(point)
        .ok_or_else(|| Error::numerical("residual variance undefined at a point with mass"))?;
    let hw = half_width(z, sigma2hat, mass, kernel);
    Ok(Some(ConfidenceInterval { lo: fhat - hw, hi: fhat + hw, fhat, sigma2hat, local_mass: mass }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_response() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let y = vec![2.5; 50];
        let grid: Vec<f64> = (0..20).map(|i| -4.0 + 0.4 * i as f64).collect();
        let est = nw_estimate(&x, &y, &grid, 0.3, Kernel::Epanechnikov).unwrap();
        for i in 0..grid.len() {
            if let Some(f) = est.fhat[i] {
                assert!((f - 2.5).abs() < 1e-14);
                assert!(est.sigma2hat[i].unwrap().abs() < 1e-24);
            } else {
                assert_eq!(est.local_mass[i], 0.0);
            }
        }
        assert!(est.fhat.iter().any(|f| f.is_none()));
    }

    #[test]
    fn single_observation() {
        let est = nw_estimate(&[0.0], &[5.0], &[0.0], 0.5, Kernel::Epanechnikov).unwrap();
        assert_eq!(est.fhat[0], Some(5.0));
        assert_eq!(est.local_mass[0], 0.75);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(nw_estimate(&[0.0, 1.0], &[1.0], &[0.0], 0.5, Kernel::Gaussian).is_err());
        assert!(nw_estimate(&[0.0], &[1.0], &[0.0], 0.0, Kernel::Gaussian).is_err());
        assert!(nw_estimate(&[0.0], &[1.0], &[], 0.5, Kernel::Gaussian).is_err());
        assert!(z_quantile(0.0).is_err());
    }

    #[test]
    fn residual_variance_cases() {
        let x = [0.0, 0.1, 0.2, 0.3];
        let y = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(residual_variance(&x, &y, &y, 0.5, Kernel::Epanechnikov, 0.1).unwrap(), Some(0.0));
        let fitted: Vec<f64> = y.iter().map(|v| v - 0.5).collect();
        let v = residual_variance(&x, &y, &fitted, 0.5, Kernel::Epanechnikov, 0.1).unwrap().unwrap();
        assert!((v - 0.25).abs() < 1e-15);
        assert_eq!(residual_variance(&x, &y, &y, 0.05, Kernel::Epanechnikov, 10.0).unwrap(), None);
    }

    #[test]
    fn z_values() {
        assert!((z_quantile(0.05).unwrap() - 1.959964).abs() < 1e-6);
        assert_eq!(z_quantile(1.0).unwrap(), 0.0);
    }

    #[test]
    fn interval_collapses_with_zero_variance() {
        let x = [0.0, 0.1, -0.1];
        let y = [1.0, 1.0, 1.0];
        let ci = confidence_interval(&x, &y, 0.0, 0.5, Kernel::Epanechnikov, 0.05).unwrap().unwrap();
        assert_eq!(ci.lo, ci.hi);
        assert_eq!(ci.fhat, 1.0);
        assert!(confidence_interval(&x, &y, 9.0, 0.5, Kernel::Epanechnikov, 0.05).unwrap().is_none());
    }

    #[test]
    fn interval_half_width_formula() {
        let x = [0.0, 0.2, -0.3, 0.4, 0.1];
        let y = [1.0, -1.0, 0.5, 2.0, 0.0];
        let h = 0.6;
        let ci = confidence_interval(&x, &y, 0.05, h, Kernel::Epanechnikov, 0.05).unwrap().unwrap();
        let expected = 1.959963984540054 * (ci.sigma2hat * 0.6 / ci.local_mass).sqrt();
        assert!((0.5 * ci.length() - expected).abs() < 1e-12);
    }

    #[test]
    fn csv_has_empty_fields_for_undefined_points() {
        let est = nw_estimate(&[0.0, 0.1], &[1.0, 2.0], &[0.0, 5.0], 0.5, Kernel::Epanechnikov)
            .unwrap()
            .with_confidence(0.05)
            .unwrap();
        let mut buf = Vec::new();
        est.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,fhat,sigma2hat,local_mass,ci_lo,ci_hi");
        assert_eq!(lines[2], "5,,,0,,");
    }
}
