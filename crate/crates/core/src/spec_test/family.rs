use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::optim::{self, NelderMeadOptions};

type FamilyFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Linear,
    Quadratic,
    Custom,
}

/// Parametric regression family `g(x, θ)`.
#[derive(Clone)]
pub enum ParametricFamily {
    /// `θ₀ + θ₁ x`
    Linear,
    /// `θ₀ + θ₁ x + θ₂ x²`
    Quadratic,
    Custom { name: String, dim: usize, eval: FamilyFn },
}

impl fmt::Debug for ParametricFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParametricFamily::Linear => write!(f, "Linear"),
            ParametricFamily::Quadratic => write!(f, "Quadratic"),
            ParametricFamily::Custom { name, dim, .. } => write!(f, "Custom({name}, dim={dim})"),
        }
    }
}

impl fmt::Display for ParametricFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParametricFamily::Linear => write!(f, "linear"),
            ParametricFamily::Quadratic => write!(f, "quadratic"),
            ParametricFamily::Custom { name, .. } => write!(f, "{name}"),
        }
    }
}

impl FromStr for ParametricFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(ParametricFamily::Linear),
            "quadratic" => Ok(ParametricFamily::Quadratic),
            other => Err(Error::invalid(format!("unknown family '{other}' (expected linear or quadratic)"))),
        }
    }
}

impl ParametricFamily {
    pub fn custom<F>(name: impl Into<String>, dim: usize, eval: F) -> Self
    where
        F: Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    {
        ParametricFamily::Custom { name: name.into(), dim, eval: Arc::new(eval) }
    }

    pub fn kind(&self) -> FamilyKind {
        match self {
            ParametricFamily::Linear => FamilyKind::Linear,
            ParametricFamily::Quadratic => FamilyKind::Quadratic,
            ParametricFamily::Custom { .. } => FamilyKind::Custom,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ParametricFamily::Linear => 2,
            ParametricFamily::Quadratic => 3,
            ParametricFamily::Custom { dim, .. } => *dim,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64, theta: &[f64]) -> f64 {
        match self {
            ParametricFamily::Linear => theta[0] + theta[1] * x,
            ParametricFamily::Quadratic => theta[0] + x * (theta[1] + x * theta[2]),
            ParametricFamily::Custom { eval, .. } => eval(x, theta),
        }
    }

    /// Sum of absolute term magnitudes, used as the rounding scale of `g`.
    fn magnitude(&self, x: f64, theta: &[f64]) -> f64 {
        match self {
            ParametricFamily::Linear => theta[0].abs() + (theta[1] * x).abs(),
            ParametricFamily::Quadratic => theta[0].abs() + (theta[1] * x).abs() + (theta[2] * x * x).abs(),
            ParametricFamily::Custom { eval, .. } => eval(x, theta).abs(),
        }
    }

    pub fn has_closed_form(&self) -> bool {
        !matches!(self, ParametricFamily::Custom { .. })
    }
}

/// Fitted parameters of a least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct NlsFit {
    pub theta: Vec<f64>,
    /// `Q(θ̂) = Σ (y_k - g(x_k, θ̂))²`.
    pub objective: f64,
    pub at_boundary: bool,
    pub restarts: usize,
}

/// Least-squares fit of `family` to `(x, y)`.
///
/// Linear and quadratic families are solved in closed form; `theta_init` and
/// `bounds` are only used by custom families.
pub fn nls_fit(
    family: &ParametricFamily,
    x: &[f64],
    y: &[f64],
    theta_init: Option<&[f64]>,
    bounds: Option<&[(f64, f64)]>,
) -> Result<NlsFit> {
    let p = family.dim();
    if x.len() != y.len() {
        return Err(Error::invalid("x and y lengths differ"));
    }
    if x.len() < p {
        return Err(Error::invalid(format!("need at least {p} observations, got {}", x.len())));
    }
    if let Some(b) = bounds {
        if b.len() != p || b.iter().any(|&(lo, hi)| !(lo <= hi)) {
            return Err(Error::invalid("bounds must be one well-ordered interval per parameter"));
        }
    }
    let q = |theta: &[f64]| -> f64 {
        x.iter()
            .zip(y)
            .map(|(&xk, &yk)| {
                let r = yk - family.eval(xk, theta);
                r * r
            })
            .sum()
    };
    if family.has_closed_form() {
        let theta = polynomial_ls(x, y, p - 1)?;
        let objective = q(&theta);
        return Ok(NlsFit { theta, objective, at_boundary: false, restarts: 0 });
    }

    let start = match theta_init {
        Some(t) if t.len() == p => t.to_vec(),
        Some(_) => return Err(Error::invalid(format!("theta_init must have {p} entries"))),
        None => vec![0.0; p],
    };
    let opts = NelderMeadOptions { ftol: 1e-14, xtol: 1e-10, ..Default::default() };
    let m = optim::minimize(q, &start, bounds, &opts);
    if !m.converged || !m.fx.is_finite() {
        return Err(Error::NoConvergence { best: m.x, objective: m.fx, restarts: m.restarts });
    }
    Ok(NlsFit { theta: m.x, objective: m.fx, at_boundary: m.at_boundary, restarts: m.restarts })
}

/// Polynomial least squares of the given degree (1 or 2) via Cholesky on the
/// Gram matrix of a centered and scaled basis.
fn polynomial_ls(x: &[f64], y: &[f64], degree: usize) -> Result<Vec<f64>> {
    let p = degree + 1;
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let s = x.iter().fold(0.0_f64, |a, &v| a.max((v - m).abs()));
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::numerical("rank-deficient design: regressor is constant"));
    }
    let mut gram = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for (&xk, &yk) in x.iter().zip(y) {
        let t = (xk - m) / s;
        let basis = [1.0, t, t * t];
        for i in 0..p {
            rhs[i] += basis[i] * yk;
            for j in 0..=i {
                gram[i][j] += basis[i] * basis[j];
            }
        }
    }
    // Cholesky G = L Lᵀ.
    let mut l = [[0.0; 3]; 3];
    for i in 0..p {
        for j in 0..=i {
            let mut v = gram[i][j];
            for k in 0..j {
                v -= l[i][k] * l[j][k];
            }
            if i == j {
                if !(v > 1e-12 * gram[i][i].max(f64::MIN_POSITIVE)) {
                    return Err(Error::numerical("rank-deficient design: too few distinct regressor values"));
                }
                l[i][i] = v.sqrt();
            } else {
                l[i][j] = v / l[j][j];
            }
        }
    }
    let mut z = [0.0; 3];
    for i in 0..p {
        let mut v = rhs[i];
        for k in 0..i {
            v -= l[i][k] * z[k];
        }
        z[i] = v / l[i][i];
    }
    let mut beta = [0.0; 3];
    for i in (0..p).rev() {
        let mut v = z[i];
        for k in i + 1..p {
            v -= l[k][i] * beta[k];
        }
        beta[i] = v / l[i][i];
    }
    // Back to the raw basis: t = (x - m)/s.
    let theta = if degree == 1 {
        vec![beta[0] - beta[1] * m / s, beta[1] / s]
    } else {
        let s2 = s * s;
        vec![
            beta[0] - beta[1] * m / s + beta[2] * m * m / s2,
            beta[1] / s - 2.0 * beta[2] * m / s2,
            beta[2] / s2,
        ]
    };
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("least-squares solution is not finite"));
    }
    Ok(theta)
}

/// Residuals `y_k - g(x_k, θ)`.
///
/// For closed-form families, residuals within a few thousand ulps of the
/// fitted value are set to zero so that exact fits give exactly zero.
pub fn residuals(family: &ParametricFamily, x: &[f64], y: &[f64], theta: &[f64]) -> Vec<f64> {
    let snap = family.has_closed_form();
    x.iter()
        .zip(y)
        .map(|(&xk, &yk)| {
            let r = yk - family.eval(xk, theta);
            if snap && r.abs() <= 1e3 * f64::EPSILON * (yk.abs() + family.magnitude(xk, theta)) {
                0.0
            } else {
                r
            }
        })
        .collect()
}
