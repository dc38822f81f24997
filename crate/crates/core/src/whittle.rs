//! Whittle estimation of ARTFIMA(0, d, λ, 0) and ARFIMA(0, d, 0).
//!
//! The spectral density is `f(ω) = σ²/(2π) |1 - e^{-(λ+iω)}|^{-2d}`. The
//! innovation variance is profiled out, leaving an objective in `(d, λ)`
//! that is scanned on a coarse grid and then polished by Nelder–Mead.

use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{self, NelderMeadOptions};
use crate::process::{convolve_valid, tempered_coeffs, ConvolutionMethod, TEMPERED_LAG_FLOOR};
use crate::rng::rng_from_seed;

pub const MIN_FIT_LEN: usize = 32;
pub const AR_LAGS: usize = 50;
pub const D_RANGE: (f64, f64) = (-1.0, 3.0);
pub const LAMBDA_RANGE: (f64, f64) = (1e-6, 2.0);
const D_GRID_STEP: f64 = 0.05;
const LAMBDA_GRID_POINTS: usize = 20;
const ARFIMA_D_LIMIT: f64 = 0.499;

/// `f(ω) = σ²/(2π) |1 - e^{-(λ+iω)}|^{-2d}` for `ω ∈ (0, π]`.
pub fn artfima_spectral_density(d: f64, lambda: f64, sigma2: f64, omega: f64) -> Result<f64> {
    if !(omega > 0.0 && omega <= PI) {
        return Err(Error::invalid(format!("frequency must lie in (0, pi], got {omega}")));
    }
    if !(sigma2 > 0.0) || !(lambda >= 0.0) || !d.is_finite() {
        return Err(Error::invalid("need sigma2 > 0, lambda >= 0 and finite d"));
    }
    Ok(sigma2 / (2.0 * PI) * (-d * log_modulus2(lambda, omega.cos())).exp())
}

/// `ln |1 - e^{-(λ+iω)}|²` given `cos ω`.
#[inline]
fn log_modulus2(lambda: f64, cos_omega: f64) -> f64 {
    let r = (-lambda).exp();
    (1.0 - 2.0 * r * cos_omega + r * r).ln()
}

/// Periodogram at the Fourier frequencies `2πj/n`, `j = 1..⌊(n-1)/2⌋`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Periodogram {
    pub n: usize,
    pub freqs: Vec<f64>,
    pub values: Vec<f64>,
    /// All ordinates are zero (constant input).
    pub degenerate: bool,
}

/// `I(ω_j) = |Σ_k z_k e^{-iω_j k}|² / (2πn)` of the mean-removed series.
pub fn periodogram(series: &[f64]) -> Result<Periodogram> {
    let n = series.len();
    if n < 4 {
        return Err(Error::invalid(format!("periodogram needs at least 4 observations, got {n}")));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("series contains non-finite values"));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = series.iter().map(|&v| Complex::new(v - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let m = (n - 1) / 2;
    let scale = 1.0 / (2.0 * PI * n as f64);
    let freqs: Vec<f64> = (1..=m).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
    let values: Vec<f64> = (1..=m).map(|j| buf[j].norm_sqr() * scale).collect();
    let spread = series.iter().fold(0.0_f64, |a, &v| a.max((v - mean).abs()));
    let degenerate = spread == 0.0;
    let values = if degenerate { vec![0.0; m] } else { values };
    Ok(Periodogram { n, freqs, values, degenerate })
}

/// Precomputed `cos ω_j` for repeated objective evaluations.
struct Whittle<'a> {
    pg: &'a Periodogram,
    cos: Vec<f64>,
}

impl<'a> Whittle<'a> {
    fn new(pg: &'a Periodogram) -> Self {
        Whittle { pg, cos: pg.freqs.iter().map(|w| w.cos()).collect() }
    }

    /// `ln g_j = -d · ln|1 - e^{-(λ+iω_j)}|²`.
    fn log_g(&self, lambda: f64) -> Vec<f64> {
        self.cos.iter().map(|&c| log_modulus2(lambda, c)).collect()
    }

    fn objective_with(&self, d: f64, logmod: &[f64]) -> (f64, f64) {
        let m = logmod.len() as f64;
        let mut ratio = 0.0;
        let mut log_g = 0.0;
        for (&i, &l) in self.pg.values.iter().zip(logmod) {
            let lg = -d * l;
            ratio += i * (-lg).exp();
            log_g += lg;
        }
        let mean_ratio = ratio / m;
        ((mean_ratio).ln() + log_g / m, 2.0 * PI * mean_ratio)
    }

    fn objective(&self, d: f64, lambda: f64) -> f64 {
        self.objective_with(d, &self.log_g(lambda)).0
    }
}

/// Profile Whittle objective `ln(mean I/g) + mean ln g`.
pub fn whittle_objective(d: f64, lambda: f64, pg: &Periodogram) -> Result<f64> {
    if !d.is_finite() || !(lambda >= 0.0) {
        return Err(Error::invalid("need finite d and lambda >= 0"));
    }
    if pg.degenerate || pg.values.is_empty() {
        return Err(Error::invalid("periodogram is identically zero"));
    }
    Ok(Whittle::new(pg).objective(d, lambda))
}

/// `σ̂² = 2π · mean I/g` at `(d, λ)`.
pub fn whittle_sigma2(d: f64, lambda: f64, pg: &Periodogram) -> f64 {
    let w = Whittle::new(pg);
    w.objective_with(d, &w.log_g(lambda)).1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtfimaFit {
    pub d_hat: f64,
    /// Exactly zero for ARFIMA fits.
    pub lambda_hat: f64,
    pub sigma2_hat: f64,
    pub objective: f64,
    /// Best objective on the coarse grid.
    pub grid_objective: f64,
    /// Mean squared one-step residual from the truncated AR(∞) form.
    pub mse: f64,
    pub at_boundary: bool,
    /// λ = 0 with d ≥ 1/2: the untempered process is not stationary.
    pub nonstationary: bool,
    pub n: usize,
}

fn check_series(series: &[f64]) -> Result<Periodogram> {
    if series.len() < MIN_FIT_LEN {
        return Err(Error::invalid(format!(
            "fitting needs at least {MIN_FIT_LEN} observations, got {}",
            series.len()
        )));
    }
    let pg = periodogram(series)?;
    if pg.degenerate || pg.values.iter().all(|&v| v == 0.0) {
        return Err(Error::invalid("series is constant"));
    }
    Ok(pg)
}

/// Log-spaced tempering grid on `LAMBDA_RANGE`.
pub fn lambda_grid() -> Vec<f64> {
    let (lo, hi) = (LAMBDA_RANGE.0.ln(), LAMBDA_RANGE.1.ln());
    (0..LAMBDA_GRID_POINTS)
        .map(|i| (lo + (hi - lo) * i as f64 / (LAMBDA_GRID_POINTS - 1) as f64).exp())
        .collect()
}

pub fn d_grid() -> Vec<f64> {
    let steps = ((D_RANGE.1 - D_RANGE.0) / D_GRID_STEP).round() as usize;
    (0..=steps).map(|i| D_RANGE.0 + D_GRID_STEP * i as f64).collect()
}

fn refine_options() -> NelderMeadOptions {
    NelderMeadOptions { ftol: 1e-10, xtol: 1e-8, initial_step: 0.05, ..Default::default() }
}

/// Whittle fit of ARTFIMA(0, d, λ, 0) over `[-1, 3] × [1e-6, 2]`.
pub fn fit_artfima00(series: &[f64]) -> Result<ArtfimaFit> {
    let pg = check_series(series)?;
    let w = Whittle::new(&pg);
    let mut best = (f64::INFINITY, 0.0, 1.0);
    for &lambda in &lambda_grid() {
        let lm = w.log_g(lambda);
        for &d in &d_grid() {
            let v = w.objective_with(d, &lm).0;
            if v < best.0 {
                best = (v, d, lambda);
            }
        }
    }
    let (grid_objective, d0, l0) = best;
    if !grid_objective.is_finite() {
        return Err(Error::numerical("Whittle objective is not finite anywhere on the grid"));
    }
    let bounds = [D_RANGE, (LAMBDA_RANGE.0.ln(), LAMBDA_RANGE.1.ln())];
    let m = optim::minimize(|p| w.objective(p[0], p[1].exp()), &[d0, l0.ln()], Some(&bounds), &refine_options());
    let (d_hat, lambda_hat, objective) = if m.fx <= grid_objective {
        (m.x[0], m.x[1].exp(), m.fx)
    } else {
        (d0, l0, grid_objective)
    };
    finish(series, &pg, d_hat, lambda_hat, objective, grid_objective, m.at_boundary)
}

/// Whittle fit of ARFIMA(0, d, 0) with `|d| < 1/2`.
pub fn fit_arfima00(series: &[f64]) -> Result<ArtfimaFit> {
    let pg = check_series(series)?;
    let w = Whittle::new(&pg);
    let lm = w.log_g(0.0);
    let mut best = (f64::INFINITY, 0.0);
    let steps = (2.0 * ARFIMA_D_LIMIT / 0.01).floor() as usize;
    for i in 0..=steps {
        let d = -ARFIMA_D_LIMIT + 0.01 * i as f64;
        let v = w.objective_with(d, &lm).0;
        if v < best.0 {
            best = (v, d);
        }
    }
    let (grid_objective, d0) = best;
    let bounds = [(-ARFIMA_D_LIMIT, ARFIMA_D_LIMIT)];
    let m = optim::minimize(|p| w.objective_with(p[0], &lm).0, &[d0], Some(&bounds), &refine_options());
    let (d_hat, objective) = if m.fx <= grid_objective { (m.x[0], m.fx) } else { (d0, grid_objective) };
    finish(series, &pg, d_hat, 0.0, objective, grid_objective, m.at_boundary)
}

fn finish(
    series: &[f64],
    pg: &Periodogram,
    d_hat: f64,
    lambda_hat: f64,
    objective: f64,
    grid_objective: f64,
    at_boundary: bool,
) -> Result<ArtfimaFit> {
    Ok(ArtfimaFit {
        d_hat,
        lambda_hat,
        sigma2_hat: whittle_sigma2(d_hat, lambda_hat, pg),
        objective,
        grid_objective,
        mse: one_step_mse(series, d_hat, lambda_hat, AR_LAGS)?,
        at_boundary,
        nonstationary: lambda_hat == 0.0 && d_hat >= 0.5,
        n: series.len(),
    })
}

/// AR(∞) weights `π_j = e^{-λj} c_j` of `(1 - e^{-λ}B)^d`, `j = 0..=lags`.
pub fn ar_weights(d: f64, lambda: f64, lags: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(lags + 1);
    w.push(1.0);
    let r = (-lambda).exp();
    for j in 1..=lags {
        let prev = w[j - 1];
        w.push(prev * r * (j as f64 - 1.0 - d) / j as f64);
    }
    w
}

/// Mean of squared one-step residuals `e_t = Σ_{j ≤ min(t, L)} π_j z_{t-j}`,
/// `t ≥ 1`, on the mean-removed series.
pub fn one_step_mse(series: &[f64], d: f64, lambda: f64, lags: usize) -> Result<f64> {
    let n = series.len();
    if n < 2 {
        return Err(Error::invalid("need at least two observations"));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let z: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let w = ar_weights(d, lambda, lags);
    let mut acc = 0.0;
    for t in 1..n {
        let e: f64 = (0..=t.min(lags)).map(|j| w[j] * z[t - j]).sum();
        acc += e * e;
    }
    Ok(acc / (n - 1) as f64)
}

/// Simulates `n` values of ARTFIMA(0, d, λ, 0) with unit-variance Gaussian
/// innovations, truncating the MA(∞) form where the tempered weights fall
/// below 1e-12.
pub fn simulate_artfima(n: usize, d: f64, lambda: f64, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    if !(lambda > 0.0) && d != 0.0 {
        return Err(Error::invalid("simulation requires lambda > 0 unless d = 0"));
    }
    let lags = if d == 0.0 {
        0
    } else {
        (-(1e-12f64).ln() / lambda).ceil() as usize + TEMPERED_LAG_FLOOR
    };
    let coeffs = tempered_coeffs(d, lambda, lags)?;
    let mut rng = rng_from_seed(seed);
    let xi: Vec<f64> = (0..n + lags).map(|_| StandardNormal.sample(&mut rng)).collect();
    Ok(convolve_valid(&coeffs, &xi, ConvolutionMethod::Auto))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_periodogram(z: &[f64]) -> Vec<f64> {
        let n = z.len();
        let mean = z.iter().sum::<f64>() / n as f64;
        (1..=(n - 1) / 2)
            .map(|j| {
                let w = 2.0 * PI * j as f64 / n as f64;
                let (mut re, mut im) = (0.0, 0.0);
                for (k, v) in z.iter().enumerate() {
                    re += (v - mean) * (w * k as f64).cos();
                    im -= (v - mean) * (w * k as f64).sin();
                }
                (re * re + im * im) / (2.0 * PI * n as f64)
            })
            .collect()
    }

    #[test]
    fn periodogram_matches_direct_dft() {
        let z: Vec<f64> = (0..16).map(|k| ((k * k) as f64 * 0.37).sin() + 0.1 * k as f64).collect();
        let pg = periodogram(&z).unwrap();
        let oracle = naive_periodogram(&z);
        assert_eq!(pg.values.len(), 7);
        for (a, b) in pg.values.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_series() {
        let pg = periodogram(&[3.0; 20]).unwrap();
        assert!(pg.degenerate);
        assert!(pg.values.iter().all(|&v| v == 0.0));
        assert!(fit_artfima00(&[3.0; 64]).is_err());
        assert!(fit_artfima00(&[1.0; 10]).is_err());
    }

    #[test]
    fn cosine_concentrates() {
        let n = 64;
        let z: Vec<f64> = (0..n).map(|k| (2.0 * PI * 5.0 * k as f64 / n as f64).cos()).collect();
        let pg = periodogram(&z).unwrap();
        let peak = pg.values[4];
        let rest: f64 = pg.values.iter().enumerate().filter(|(j, _)| *j != 4).map(|(_, v)| v).sum();
        assert!(rest < 1e-20 * peak.max(1.0) + 1e-20, "{rest}");
    }

    #[test]
    fn spectral_density_cases() {
        let s = 2.0;
        assert!((artfima_spectral_density(0.0, 0.3, s, 1.0).unwrap() - s / (2.0 * PI)).abs() < 1e-15);
        let far = artfima_spectral_density(0.4, 40.0, s, 0.2).unwrap();
        assert!((far - s / (2.0 * PI)).abs() < 1e-12);
        let v = artfima_spectral_density(0.3, 0.1, 1.0, PI / 2.0).unwrap();
        let z = Complex::new(1.0, 0.0) - Complex::from_polar((-0.1f64).exp(), -PI / 2.0);
        let oracle = z.norm().powf(-0.6) / (2.0 * PI);
        assert!((v - oracle).abs() < 1e-14);
        assert!(artfima_spectral_density(0.3, 0.1, 1.0, 0.0).is_err());
    }

    #[test]
    fn objective_at_zero_d() {
        let z: Vec<f64> = (0..100).map(|k| (k as f64 * 1.3).sin()).collect();
        let pg = periodogram(&z).unwrap();
        let mean = pg.values.iter().sum::<f64>() / pg.values.len() as f64;
        for lambda in [0.0, 0.5, 2.0] {
            assert!((whittle_objective(0.0, lambda, &pg).unwrap() - mean.ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn ar_weights_invert_ma() {
        // (1 - rB)^d (1 - rB)^{-d} = 1
        let (d, lambda) = (0.7, 0.2);
        let ma = tempered_coeffs(d, lambda, 20).unwrap();
        let ar = ar_weights(d, lambda, 20);
        for k in 0..=20 {
            let c: f64 = (0..=k).map(|j| ar[j] * ma[k - j]).sum();
            assert!((c - if k == 0 { 1.0 } else { 0.0 }).abs() < 1e-13);
        }
    }

    #[test]
    fn grids() {
        let d = d_grid();
        assert_eq!(d.len(), 81);
        assert!((d[80] - 3.0).abs() < 1e-12);
        let l = lambda_grid();
        assert_eq!(l.len(), 20);
        assert!((l[0] - 1e-6).abs() < 1e-18 && (l[19] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn white_noise_fit() {
        let z = simulate_artfima(1024, 0.0, 0.0, 7).unwrap();
        let fit = fit_arfima00(&z).unwrap();
        assert!(fit.d_hat.abs() < 0.1);
        assert_eq!(fit.lambda_hat, 0.0);
        assert!(fit.objective <= fit.grid_objective);
        assert!((fit.mse - 1.0).abs() < 0.15);
    }
}
