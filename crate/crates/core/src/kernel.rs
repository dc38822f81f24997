use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Second-order smoothing kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// `0.75 (1 - u²)` on `[-1, 1]`.
    Epanechnikov,
    /// Standard normal density.
    Gaussian,
}

impl Kernel {
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Kernel::Epanechnikov => {
                if u.abs() <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
            Kernel::Gaussian => INV_SQRT_2PI * (-0.5 * u * u).exp(),
        }
    }

    /// `(∫K, ∫K²)`.
    pub fn moments(&self) -> (f64, f64) {
        match self {
            Kernel::Epanechnikov => (1.0, 0.6),
            Kernel::Gaussian => (1.0, 0.5 / PI.sqrt()),
        }
    }

    /// `None` for unbounded support.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            Kernel::Epanechnikov => Some((-1.0, 1.0)),
            Kernel::Gaussian => None,
        }
    }

    /// Radius beyond which the kernel is zero, or negligible (`< 1e-14`
    /// relative to its peak) for unbounded kernels.
    pub fn effective_radius(&self) -> f64 {
        match self {
            Kernel::Epanechnikov => 1.0,
            Kernel::Gaussian => 8.0,
        }
    }
}

impl std::str::FromStr for Kernel {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "epanechnikov" | "epa" => Ok(Kernel::Epanechnikov),
            "gaussian" | "normal" => Ok(Kernel::Gaussian),
            other => Err(crate::Error::invalid(format!("unknown kernel `{other}`"))),
        }
    }
}

impl std::fmt::Display for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Kernel::Epanechnikov => "epanechnikov",
            Kernel::Gaussian => "gaussian",
        })
    }
}
