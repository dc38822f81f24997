//! Sample-size dependent rules for bandwidths, tempering parameters and
//! subsampling block sizes.
//!
//! Rules are written the way they appear in study designs, e.g. `N^-1/3`,
//! `N^-0.2` or `fixed:0.05`, and round-trip through that text form.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `value(n) = n^(-num/den)` or a constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ScheduleRule {
    Power { num: f64, den: f64 },
    Fixed(f64),
}

impl ScheduleRule {
    pub fn power(exponent: f64) -> Self {
        ScheduleRule::Power { num: exponent, den: 1.0 }
    }

    pub fn inverse_root(den: u32) -> Self {
        ScheduleRule::Power { num: 1.0, den: den as f64 }
    }

    pub fn exponent(&self) -> Option<f64> {
        match *self {
            ScheduleRule::Power { num, den } => Some(num / den),
            ScheduleRule::Fixed(_) => None,
        }
    }

    pub fn value(&self, n: usize) -> f64 {
        match *self {
            ScheduleRule::Power { num, den } => (n as f64).powf(-num / den),
            ScheduleRule::Fixed(v) => v,
        }
    }

    /// Tempering schedules must have the form `N^-a` with `0 < a < 1` so that
    /// λ → 0 while Nλ → ∞.
    pub fn satisfies_tempering_schedule(&self) -> bool {
        matches!(self.exponent(), Some(a) if a > 0.0 && a < 1.0)
    }
}

impl fmt::Display for ScheduleRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ScheduleRule::Power { num, den } if den == 1.0 => write!(f, "N^-{num}"),
            ScheduleRule::Power { num, den } => write!(f, "N^-{num}/{den}"),
            ScheduleRule::Fixed(v) => write!(f, "fixed:{v}"),
        }
    }
}

impl FromStr for ScheduleRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::invalid(format!("unrecognized rule `{s}` (expected N^-a, N^-p/q or fixed:v)"));
        if let Some(v) = s.strip_prefix("fixed:") {
            let v: f64 = v.trim().parse().map_err(|_| bad())?;
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("fixed rule value must be positive, got {v}")));
            }
            return Ok(ScheduleRule::Fixed(v));
        }
        let rest = s
            .strip_prefix("N^-")
            .or_else(|| s.strip_prefix("n^-"))
            .ok_or_else(bad)?;
        let (num, den) = match rest.split_once('/') {
            Some((a, b)) => (
                a.trim().parse::<f64>().map_err(|_| bad())?,
                b.trim().parse::<f64>().map_err(|_| bad())?,
            ),
            None => (rest.trim().parse::<f64>().map_err(|_| bad())?, 1.0),
        };
        if !(num.is_finite() && den.is_finite() && den > 0.0 && num >= 0.0) {
            return Err(bad());
        }
        Ok(ScheduleRule::Power { num, den })
    }
}

impl TryFrom<String> for ScheduleRule {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ScheduleRule> for String {
    fn from(r: ScheduleRule) -> String {
        r.to_string()
    }
}

/// Block size `b = [c · N^0.5]` (integer part), or a fixed block length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BlockRule {
    SqrtMultiple(f64),
    Fixed(usize),
}

impl BlockRule {
    /// Block size for a sample of length `n`, clamped to `[2, n]`.
    pub fn block_size(&self, n: usize) -> usize {
        let b = match *self {
            BlockRule::SqrtMultiple(c) => (c * (n as f64).sqrt()).floor() as usize,
            BlockRule::Fixed(b) => b,
        };
        b.clamp(2, n.max(2))
    }
}

impl fmt::Display for BlockRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            BlockRule::SqrtMultiple(c) => write!(f, "[{c}N^0.5]"),
            BlockRule::Fixed(b) => write!(f, "fixed:{b}"),
        }
    }
}

impl FromStr for BlockRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::invalid(format!("unrecognized block rule `{s}` (expected sqrt:c, [cN^0.5] or fixed:b)"));
        if let Some(v) = s.strip_prefix("fixed:") {
            return v.trim().parse().map(BlockRule::Fixed).map_err(|_| bad());
        }
        let c = if let Some(v) = s.strip_prefix("sqrt:") {
            v.trim()
        } else if let Some(inner) = s.strip_prefix('[').and_then(|v| v.strip_suffix("N^0.5]")) {
            if inner.is_empty() { "1" } else { inner }
        } else {
            return Err(bad());
        };
        let c: f64 = c.parse().map_err(|_| bad())?;
        if !(c.is_finite() && c > 0.0) {
            return Err(bad());
        }
        Ok(BlockRule::SqrtMultiple(c))
    }
}

impl TryFrom<String> for BlockRule {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BlockRule> for String {
    fn from(r: BlockRule) -> String {
        r.to_string()
    }
}
