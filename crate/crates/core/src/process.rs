//! Simulation of long memory and semi-long memory (tempered) regressors,
//! endogenous AR(1) errors and the responses of a nonlinear cointegrating
//! regression `y_k = f(x_k) + σ u_k`.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Pre-sample length used for the AR(1) error and shock history.
pub const DEFAULT_BURN_IN: usize = 1000;
/// Relative size of the first dropped tempered coefficient, `e^{-λJ}`.
pub const TEMPERED_TAIL_TOL: f64 = 1e-12;
/// Extra lags kept beyond the analytic tempered cut-off.
pub const TEMPERED_LAG_FLOOR: usize = 50;
/// Above this many multiply-adds the shock convolution switches to FFT.
const DIRECT_CONVOLUTION_LIMIT: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MemoryKind {
    #[serde(rename = "lm")]
    LongMemory,
    #[serde(rename = "slm")]
    SemiLongMemory,
    #[serde(rename = "short")]
    ShortMemory,
}

impl std::fmt::Display for MemoryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MemoryKind::LongMemory => "lm",
            MemoryKind::SemiLongMemory => "slm",
            MemoryKind::ShortMemory => "short",
        })
    }
}

impl std::str::FromStr for MemoryKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lm" | "long" | "long_memory" => Ok(MemoryKind::LongMemory),
            "slm" | "semi" | "semi_long_memory" => Ok(MemoryKind::SemiLongMemory),
            "short" | "sm" | "short_memory" => Ok(MemoryKind::ShortMemory),
            other => Err(Error::invalid(format!("unknown memory kind `{other}`"))),
        }
    }
}

/// Parameters of a shock process `X(s) = Σ_j e^{-λj} b_d(j) ξ(s-j)` and its
/// partial sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperedProcessSpec {
    pub d: f64,
    pub lambda: f64,
    pub n: usize,
    pub memory_kind: MemoryKind,
    /// Number of lags `J` kept in the moving-average sum.
    pub truncation: usize,
    pub burn_in: usize,
}

impl TemperedProcessSpec {
    pub fn long_memory(n: usize, d: f64) -> Result<Self> {
        Self::new(MemoryKind::LongMemory, n, d, 0.0)
    }

    pub fn semi_long_memory(n: usize, d: f64, lambda: f64) -> Result<Self> {
        Self::new(MemoryKind::SemiLongMemory, n, d, lambda)
    }

    pub fn short_memory(n: usize) -> Result<Self> {
        Self::new(MemoryKind::ShortMemory, n, 0.0, 0.0)
    }

    /// Validated spec with the default burn-in and truncation.
    pub fn new(memory_kind: MemoryKind, n: usize, d: f64, lambda: f64) -> Result<Self> {
        let spec = TemperedProcessSpec {
            d,
            lambda,
            n,
            memory_kind,
            truncation: default_truncation(memory_kind, n, DEFAULT_BURN_IN, lambda),
            burn_in: DEFAULT_BURN_IN,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Changes the burn-in and resets the truncation to its default for the
    /// new pre-sample length.
    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self.truncation = default_truncation(self.memory_kind, self.n, burn_in, self.lambda);
        self
    }

    pub fn with_truncation(mut self, truncation: usize) -> Self {
        self.truncation = truncation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("sample size must be positive"));
        }
        if !self.d.is_finite() || !self.lambda.is_finite() {
            return Err(Error::invalid("d and lambda must be finite"));
        }
        match self.memory_kind {
            MemoryKind::LongMemory => {
                if !(self.d > 0.0 && self.d < 0.5) {
                    return Err(Error::invalid(format!(
                        "long memory requires 0 < d < 1/2, got d = {}",
                        self.d
                    )));
                }
                if self.lambda != 0.0 {
                    return Err(Error::invalid("long memory requires lambda = 0"));
                }
            }
            MemoryKind::SemiLongMemory => {
                if !(self.d > 0.0) {
                    return Err(Error::invalid(format!(
                        "semi-long memory requires d > 0, got d = {}",
                        self.d
                    )));
                }
                if !(self.lambda > 0.0) {
                    return Err(Error::invalid(format!(
                        "semi-long memory requires lambda > 0, got lambda = {}",
                        self.lambda
                    )));
                }
            }
            MemoryKind::ShortMemory => {
                if self.d != 0.0 {
                    return Err(Error::invalid("short memory requires d = 0"));
                }
                if self.lambda < 0.0 {
                    return Err(Error::invalid("lambda must be non-negative"));
                }
            }
        }
        Ok(())
    }

    /// Shock coefficients `φ(j) = e^{-λj} b_d(j)`, `j = 0..=truncation`.
    pub fn coefficients(&self) -> Result<Vec<f64>> {
        tempered_coeffs(self.d, self.lambda, self.truncation)
    }

    /// Innovations needed by [`simulate_model`]: sample, burn-in and lag history.
    pub fn innovation_len(&self) -> usize {
        self.n + self.burn_in + self.truncation
    }
}

/// Default MA truncation: the full pre-sample for long memory, the analytic
/// tempered cut-off `ceil(-ln(tol)/λ) + 50` (capped at `n + burn_in`) for
/// semi-long memory, and a single lag for short memory.
pub fn default_truncation(kind: MemoryKind, n: usize, burn_in: usize, lambda: f64) -> usize {
    let full = n + burn_in;
    match kind {
        MemoryKind::LongMemory => full,
        MemoryKind::SemiLongMemory if lambda > 0.0 => {
            let tail = (-TEMPERED_TAIL_TOL.ln() / lambda).ceil();
            if tail.is_finite() && tail < full as f64 {
                (tail as usize + TEMPERED_LAG_FLOOR).min(full)
            } else {
                full
            }
        }
        MemoryKind::SemiLongMemory => full,
        MemoryKind::ShortMemory => 0,
    }
}

/// Fractional integration coefficients `b_d(j) = Γ(j+d) / (Γ(d) Γ(j+1))`
/// for `j = 0..=lags`, by the recursion `b(j) = b(j-1)(j-1+d)/j`.
pub fn frac_coeffs(d: f64, lags: usize) -> Result<Vec<f64>> {
    if !d.is_finite() {
        return Err(Error::invalid("d must be finite"));
    }
    if d < 0.0 && d.fract() == 0.0 {
        return Err(Error::invalid(format!("d = {d} is a pole of Γ(d)")));
    }
    let mut b = Vec::with_capacity(lags + 1);
    b.push(1.0);
    for j in 1..=lags {
        let prev = b[j - 1];
        b.push(prev * (j as f64 - 1.0 + d) / j as f64);
    }
    Ok(b)
}

/// Tempered coefficients `e^{-λj} b_d(j)`.
pub fn tempered_coeffs(d: f64, lambda: f64, lags: usize) -> Result<Vec<f64>> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("lambda must be >= 0, got {lambda}")));
    }
    let mut b = frac_coeffs(d, lags)?;
    if lambda > 0.0 {
        for (j, c) in b.iter_mut().enumerate().skip(1) {
            *c *= (-lambda * j as f64).exp();
        }
    }
    Ok(b)
}

/// Innovation correlation and error parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// corr(ξ_k, ε_k).
    pub rho: f64,
    /// AR(1) coefficient of the error.
    pub psi: f64,
    /// Error scale.
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn new(rho: f64, psi: f64, sigma: f64, seed: u64) -> Result<Self> {
        let cfg = NoiseConfig { rho, psi, sigma, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho.abs() <= 1.0) {
            return Err(Error::invalid(format!("|rho| must be <= 1, got {}", self.rho)));
        }
        if !(self.psi.abs() < 1.0) {
            return Err(Error::invalid(format!(
                "|psi| must be < 1 for a stationary error, got {}",
                self.psi
            )));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Correlated standard-normal innovation pairs `(ξ, ε)` with
/// `ε = ρξ + √(1-ρ²) e`.
///
/// Draws are anchored at the end of the series: the last element is drawn
/// first. Two requests with the same seed but different lengths therefore
/// share their trailing elements, which keeps sample-period innovations
/// identical across processes that need different amounts of history.
pub fn simulate_innovations(n_total: usize, noise: &NoiseConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    if n_total == 0 {
        return Err(Error::invalid("n_total must be >= 1"));
    }
    noise.validate()?;
    let mut rng = rng_from_seed(noise.seed);
    let mut xi = vec![0.0; n_total];
    let mut eps = vec![0.0; n_total];
    let rho = noise.rho;
    let comp = (1.0 - rho * rho).max(0.0).sqrt();
    for i in (0..n_total).rev() {
        let a: f64 = rng.sample(StandardNormal);
        let e: f64 = rng.sample(StandardNormal);
        xi[i] = a;
        eps[i] = rho * a + comp * e;
    }
    Ok((xi, eps))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvolutionMethod {
    Direct,
    Fft,
    #[default]
    Auto,
}

/// Valid part of the linear convolution: `out[s] = Σ_j c[j] signal[s + J - j]`
/// for `s = 0..signal.len() - J`, where `J = coeffs.len() - 1`.
pub fn convolve_valid(coeffs: &[f64], signal: &[f64], method: ConvolutionMethod) -> Vec<f64> {
    assert!(!coeffs.is_empty() && signal.len() >= coeffs.len());
    let out_len = signal.len() + 1 - coeffs.len();
    let method = match method {
        ConvolutionMethod::Auto if out_len * coeffs.len() <= DIRECT_CONVOLUTION_LIMIT => {
            ConvolutionMethod::Direct
        }
        ConvolutionMethod::Auto => ConvolutionMethod::Fft,
        m => m,
    };
    match method {
        ConvolutionMethod::Fft => convolve_valid_fft(coeffs, signal),
        _ => {
            let lags = coeffs.len() - 1;
            (0..out_len)
                .map(|s| {
                    let window = &signal[s..=s + lags];
                    coeffs
                        .iter()
                        .zip(window.iter().rev())
                        .map(|(c, v)| c * v)
                        .sum()
                })
                .collect()
        }
    }
}

fn convolve_valid_fft(coeffs: &[f64], signal: &[f64]) -> Vec<f64> {
    let lags = coeffs.len() - 1;
    let out_len = signal.len() - lags;
    let size = (signal.len() + lags).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);

    let mut a: Vec<Complex<f64>> = Vec::with_capacity(size);
    a.extend(coeffs.iter().map(|&c| Complex::new(c, 0.0)));
    a.resize(size, Complex::new(0.0, 0.0));
    let mut b: Vec<Complex<f64>> = Vec::with_capacity(size);
    b.extend(signal.iter().map(|&v| Complex::new(v, 0.0)));
    b.resize(size, Complex::new(0.0, 0.0));

    forward.process(&mut a);
    forward.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    inverse.process(&mut a);
    let scale = 1.0 / size as f64;
    a[lags..lags + out_len].iter().map(|z| z.re * scale).collect()
}

/// Shocks `X(1..=n)` of the process, drawing lag history from the front of
/// `xi`. The sample period is the last `n` entries of `xi`.
pub fn simulate_shocks(spec: &TemperedProcessSpec, xi: &[f64]) -> Result<Vec<f64>> {
    simulate_shocks_with(spec, xi, ConvolutionMethod::Auto)
}

pub fn simulate_shocks_with(
    spec: &TemperedProcessSpec,
    xi: &[f64],
    method: ConvolutionMethod,
) -> Result<Vec<f64>> {
    let needed = spec.n + spec.truncation;
    if xi.len() < needed {
        return Err(Error::invalid(format!(
            "innovation series too short: need at least {needed}, got {}",
            xi.len()
        )));
    }
    let coeffs = spec.coefficients()?;
    let signal = &xi[xi.len() - needed..];
    if coeffs.len() == 1 || spec.d == 0.0 {
        return Ok(signal[spec.truncation..].iter().map(|v| v * coeffs[0]).collect());
    }
    Ok(convolve_valid(&coeffs, signal, method))
}

/// Regressor partial sums `x_k = Σ_{s≤k} X(s)`.
///
/// `xi` must hold at least `n + burn_in + truncation` values (the layout
/// produced by [`simulate_innovations`] for [`TemperedProcessSpec::innovation_len`]).
pub fn simulate_regressor(spec: &TemperedProcessSpec, xi: &[f64]) -> Result<Vec<f64>> {
    simulate_regressor_with(spec, xi, ConvolutionMethod::Auto)
}

pub fn simulate_regressor_with(
    spec: &TemperedProcessSpec,
    xi: &[f64],
    method: ConvolutionMethod,
) -> Result<Vec<f64>> {
    spec.validate()?;
    if xi.len() < spec.innovation_len() {
        return Err(Error::invalid(format!(
            "innovation series too short: need at least {}, got {}",
            spec.innovation_len(),
            xi.len()
        )));
    }
    let shocks = simulate_shocks_with(spec, xi, method)?;
    let mut acc = 0.0;
    Ok(shocks
        .into_iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect())
}

/// AR(1) error `u_k = ψ u_{k-1} + ε_k` started at zero; the first `burn_in`
/// values are discarded so the returned series is effectively stationary.
pub fn simulate_error_ar1(eps: &[f64], psi: f64, burn_in: usize) -> Result<Vec<f64>> {
    if !(psi.abs() < 1.0) {
        return Err(Error::invalid(format!("|psi| must be < 1, got {psi}")));
    }
    if eps.len() <= burn_in {
        return Err(Error::invalid("error innovations shorter than burn-in"));
    }
    let mut u = 0.0;
    let mut out = Vec::with_capacity(eps.len() - burn_in);
    for (k, &e) in eps.iter().enumerate() {
        u = psi * u + e;
        if k >= burn_in {
            out.push(u);
        }
    }
    Ok(out)
}

/// Truncated series `Σ_{j=1}^{terms} (-1)^{j+1} sin(jπx) / j²`.
///
/// The sines come from the Chebyshev recurrence
/// `sin((j+1)θ) = 2cos θ sin(jθ) - sin((j-1)θ)`.
pub fn regression_function_sine(x: f64, terms: usize) -> f64 {
    // (-1)^{j+1} sin(jπx) = -sin(jπ(x+1)); reduce the angle into [0, 2π).
    let theta = PI * (x + 1.0).rem_euclid(2.0);
    let two_cos = 2.0 * theta.cos();
    let mut s_prev = 0.0;
    let mut s = theta.sin();
    let mut total = 0.0;
    for j in 1..=terms {
        let jf = j as f64;
        total -= s / (jf * jf);
        let next = two_cos * s - s_prev;
        s_prev = s;
        s = next;
    }
    total
}

/// Regression functions that can be recorded in a run manifest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RegressionFunction {
    Sine { terms: usize },
    Zero,
    Linear { intercept: f64, slope: f64 },
    Quadratic { c0: f64, c1: f64, c2: f64 },
    /// `intercept + slope·x + amplitude·sin(πx)`.
    LinearPlusSine { intercept: f64, slope: f64, amplitude: f64 },
}

impl RegressionFunction {
    /// Default truncation of the sine series.
    pub const SINE_TERMS: usize = 1000;

    pub fn sine() -> Self {
        RegressionFunction::Sine { terms: Self::SINE_TERMS }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            RegressionFunction::Sine { terms } => regression_function_sine(x, terms),
            RegressionFunction::Zero => 0.0,
            RegressionFunction::Linear { intercept, slope } => intercept + slope * x,
            RegressionFunction::Quadratic { c0, c1, c2 } => c0 + c1 * x + c2 * x * x,
            RegressionFunction::LinearPlusSine { intercept, slope, amplitude } => {
                intercept + slope * x + amplitude * (PI * x).sin()
            }
        }
    }
}

/// One draw of `(x, u, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedPath {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    pub spec: TemperedProcessSpec,
    pub noise: NoiseConfig,
    /// Set when the path was generated from a recordable function.
    pub function: Option<RegressionFunction>,
}

/// Simulates `y_k = f(x_k) + σ u_k` with ξ and ε from one seeded stream.
pub fn simulate_model<F>(spec: &TemperedProcessSpec, noise: &NoiseConfig, f: F) -> Result<SimulatedPath>
where
    F: Fn(f64) -> f64,
{
    spec.validate()?;
    noise.validate()?;
    let total = spec.innovation_len();
    let (xi, eps) = simulate_innovations(total, noise)?;
    let x = simulate_regressor(spec, &xi)?;
    let u = simulate_error_ar1(&eps[total - spec.n - spec.burn_in..], noise.psi, spec.burn_in)?;
    let y = x
        .iter()
        .zip(&u)
        .map(|(&xk, &uk)| f(xk) + noise.sigma * uk)
        .collect();
    Ok(SimulatedPath { x, u, y, spec: *spec, noise: *noise, function: None })
}

pub fn simulate_model_fn(
    spec: &TemperedProcessSpec,
    noise: &NoiseConfig,
    function: &RegressionFunction,
) -> Result<SimulatedPath> {
    let mut path = simulate_model(spec, noise, |x| function.eval(x))?;
    path.function = Some(*function);
    Ok(path)
}

/// Normalizing scale of `x_n`: `√n/λ^d` (semi-long), `n^{d+1/2}` (long),
/// `√n` (short).
pub fn scale_dn(n: usize, lambda: f64, d: f64, kind: MemoryKind) -> Result<f64> {
    let nf = n as f64;
    match kind {
        MemoryKind::SemiLongMemory => {
            if !(lambda > 0.0) {
                return Err(Error::invalid("semi-long memory scale requires lambda > 0"));
            }
            Ok(nf.sqrt() / lambda.powf(d))
        }
        MemoryKind::LongMemory => Ok(nf.powf(d + 0.5)),
        MemoryKind::ShortMemory => Ok(nf.sqrt()),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct PathRow {
    k: usize,
    x: f64,
    u: f64,
    y: f64,
}

/// JSON record stored alongside a path CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathManifest {
    pub spec: TemperedProcessSpec,
    pub noise: NoiseConfig,
    pub function: Option<RegressionFunction>,
}

impl SimulatedPath {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn manifest(&self) -> PathManifest {
        PathManifest { spec: self.spec, noise: self.noise, function: self.function }
    }

    /// Writes `k,x,u,y` rows (k from 1) with LF endings.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        for k in 0..self.len() {
            w.serialize(PathRow { k: k + 1, x: self.x[k], u: self.u[k], y: self.y[k] })?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `<path>` as CSV and `<path>.manifest.json`.
    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(BufWriter::new(File::create(path)?))?;
        let manifest = manifest_path(path);
        let mut f = BufWriter::new(File::create(manifest)?);
        serde_json::to_writer_pretty(&mut f, &self.manifest())?;
        f.write_all(b"\n")?;
        Ok(())
    }

    /// Reads the `k,x,u,y` columns back; the manifest is loaded from the
    /// sibling `.manifest.json` file.
    pub fn load(path: &Path) -> Result<Self> {
        let (x, u, y) = read_path_columns(File::open(path)?)?;
        let mut text = String::new();
        File::open(manifest_path(path))?.read_to_string(&mut text)?;
        let m: PathManifest = serde_json::from_str(&text)?;
        Ok(SimulatedPath { x, u, y, spec: m.spec, noise: m.noise, function: m.function })
    }
}

pub fn manifest_path(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    path.with_file_name(name)
}

fn read_path_columns<R: Read>(reader: R) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::Reader::from_reader(reader);
    let (mut x, mut u, mut y) = (Vec::new(), Vec::new(), Vec::new());
    for row in rdr.deserialize() {
        let row: PathRow = row?;
        x.push(row.x);
        u.push(row.u);
        y.push(row.y);
    }
    Ok((x, u, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn frac_coeffs_examples() {
        assert_eq!(frac_coeffs(0.0, 3).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
        let b = frac_coeffs(0.3, 2).unwrap();
        assert!(close(b[0], 1.0, 1e-15) && close(b[1], 0.3, 1e-15) && close(b[2], 0.195, 1e-15));
        assert_eq!(frac_coeffs(1.0, 3).unwrap(), vec![1.0, 1.0, 1.0, 1.0]);
        assert!(frac_coeffs(-2.0, 3).is_err());
        assert!(frac_coeffs(-0.4, 3).is_ok());
    }

    #[test]
    fn tempered_coeffs_examples() {
        assert_eq!(tempered_coeffs(0.3, 0.0, 2).unwrap(), frac_coeffs(0.3, 2).unwrap());
        let c = tempered_coeffs(0.3, 0.1, 1).unwrap();
        assert!(close(c[1], 0.3 * (-0.1f64).exp(), 1e-15));
        assert!(tempered_coeffs(0.3, -0.1, 1).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(TemperedProcessSpec::long_memory(100, 0.0).is_err());
        assert!(TemperedProcessSpec::long_memory(100, 0.5).is_err());
        assert!(TemperedProcessSpec::long_memory(100, 0.2).is_ok());
        assert!(TemperedProcessSpec::semi_long_memory(100, 1.7, 0.1).is_ok());
        assert!(TemperedProcessSpec::semi_long_memory(100, 0.3, 0.0).is_err());
        assert!(TemperedProcessSpec::semi_long_memory(100, 0.0, 0.1).is_err());
        assert!(TemperedProcessSpec::short_memory(100).is_ok());
        let mut s = TemperedProcessSpec::short_memory(10).unwrap();
        s.d = 0.1;
        assert!(s.validate().is_err());
    }

    #[test]
    fn default_truncations() {
        let lm = TemperedProcessSpec::long_memory(1000, 0.2).unwrap();
        assert_eq!(lm.truncation, 2000);
        let slm = TemperedProcessSpec::semi_long_memory(1000, 0.2, 0.25).unwrap();
        // ceil(27.631/0.25) = 111, plus the 50-lag floor
        assert_eq!(slm.truncation, 161);
        let tiny = TemperedProcessSpec::semi_long_memory(10, 0.2, 1e-4).unwrap();
        assert_eq!(tiny.truncation, 10 + DEFAULT_BURN_IN);
        assert_eq!(TemperedProcessSpec::short_memory(10).unwrap().truncation, 0);
    }

    #[test]
    fn innovations_correlation_extremes() {
        let noise = NoiseConfig::new(1.0, 0.0, 1.0, 3).unwrap();
        let (xi, eps) = simulate_innovations(1000, &noise).unwrap();
        assert_eq!(xi, eps);
        assert!(simulate_innovations(10, &NoiseConfig { rho: 1.5, psi: 0.0, sigma: 1.0, seed: 0 }).is_err());
        assert!(simulate_innovations(0, &noise).is_err());
    }

    #[test]
    fn innovations_share_trailing_values() {
        let noise = NoiseConfig::new(0.5, 0.25, 0.2, 11).unwrap();
        let (a, ea) = simulate_innovations(50, &noise).unwrap();
        let (b, eb) = simulate_innovations(80, &noise).unwrap();
        assert_eq!(&a[..], &b[30..]);
        assert_eq!(&ea[..], &eb[30..]);
    }

    #[test]
    fn ar1_examples() {
        let eps: Vec<f64> = (0..20).map(|i| i as f64 * 0.1 - 1.0).collect();
        assert_eq!(simulate_error_ar1(&eps, 0.0, 5).unwrap(), eps[5..].to_vec());
        let ones = vec![1.0; 1100];
        let u = simulate_error_ar1(&ones, 0.25, 1000).unwrap();
        assert!(u.iter().all(|v| close(*v, 4.0 / 3.0, 1e-14)));
        assert!(simulate_error_ar1(&ones, 1.0, 10).is_err());
        assert!(simulate_error_ar1(&ones, -1.2, 10).is_err());
    }

    #[test]
    fn regressor_random_walk_cases() {
        let noise = NoiseConfig::new(0.0, 0.0, 1.0, 5).unwrap();
        let spec = TemperedProcessSpec::short_memory(30).unwrap();
        let (xi, _) = simulate_innovations(spec.innovation_len(), &noise).unwrap();
        let x = simulate_regressor(&spec, &xi).unwrap();
        let tail = &xi[xi.len() - 30..];
        let mut acc = 0.0;
        for k in 0..30 {
            acc += tail[k];
            assert_eq!(x[k], acc);
        }
        // J = 0 with d > 0 keeps only the leading unit coefficient
        let slm = TemperedProcessSpec::semi_long_memory(30, 0.3, 0.1).unwrap().with_truncation(0);
        assert_eq!(simulate_regressor(&slm, &xi).unwrap(), x);
    }

    #[test]
    fn regressor_rejects_short_innovations() {
        let spec = TemperedProcessSpec::long_memory(10, 0.2).unwrap();
        assert!(simulate_regressor(&spec, &vec![0.0; 50]).is_err());
    }

    #[test]
    fn sine_function_values() {
        assert!(regression_function_sine(0.0, 1000).abs() < 1e-12);
        assert!(regression_function_sine(1.0, 1000).abs() < 1e-10);
        // direct evaluation agrees with the recurrence
        for &x in &[0.13, 0.5, 0.77, -3.4, 12.9] {
            let direct: f64 = (1..=500)
                .map(|j| {
                    let jf = j as f64;
                    let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                    sign * (jf * PI * x).sin() / (jf * jf)
                })
                .sum();
            assert!(close(regression_function_sine(x, 500), direct, 1e-10), "x = {x}");
        }
    }

    #[test]
    fn scale_dn_examples() {
        assert!(close(scale_dn(100, 0.0, 0.0, MemoryKind::ShortMemory).unwrap(), 10.0, 1e-12));
        assert!(close(scale_dn(100, 1.0, 0.37, MemoryKind::SemiLongMemory).unwrap(), 10.0, 1e-12));
        assert!(close(scale_dn(100, 0.0, 0.25, MemoryKind::LongMemory).unwrap(), 31.622776601683793, 1e-9));
        assert!(scale_dn(100, 0.0, 0.25, MemoryKind::SemiLongMemory).is_err());
    }

    #[test]
    fn model_noiseless_and_pure_error() {
        let spec = TemperedProcessSpec::semi_long_memory(200, 0.4, 0.2).unwrap();
        let noise = NoiseConfig::new(0.5, 0.25, 0.0, 9).unwrap();
        let p = simulate_model(&spec, &noise, |x| x.sin()).unwrap();
        assert!(p.x.iter().zip(&p.y).all(|(x, y)| *y == x.sin()));
        let noise = NoiseConfig::new(0.5, 0.25, 1.0, 9).unwrap();
        let p = simulate_model(&spec, &noise, |_| 0.0).unwrap();
        assert_eq!(p.y, p.u);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let spec = TemperedProcessSpec::long_memory(25, 0.3).unwrap();
        let noise = NoiseConfig::new(0.5, 0.25, 0.2, 1).unwrap();
        let p = simulate_model_fn(&spec, &noise, &RegressionFunction::sine()).unwrap();
        let file = dir.path().join("path.csv");
        p.save(&file).unwrap();
        let text = std::fs::read_to_string(&file).unwrap();
        assert!(text.starts_with("k,x,u,y\n"));
        assert!(!text.contains('\r'));
        assert_eq!(SimulatedPath::load(&file).unwrap(), p);
    }
}
