use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::process::{MemoryKind, RegressionFunction, TemperedProcessSpec, DEFAULT_BURN_IN};
use crate::schedule::{BlockRule, ScheduleRule};
use crate::spec_test::{MemoryNormalization, DEFAULT_QUAD_CELLS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Estimation,
    Coverage,
    Size,
}

impl std::str::FromStr for StudyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "estimation" => Ok(StudyKind::Estimation),
            "coverage" => Ok(StudyKind::Coverage),
            "size" => Ok(StudyKind::Size),
            other => Err(Error::invalid(format!("unknown study kind '{other}'"))),
        }
    }
}

/// A regressor memory design: long memory, or semi-long memory with a
/// tempering schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemorySetting {
    pub label: String,
    pub kind: MemoryKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<ScheduleRule>,
}

impl MemorySetting {
    pub fn long_memory() -> Self {
        MemorySetting { label: "LM".into(), kind: MemoryKind::LongMemory, lambda: None }
    }

    /// `SLM{i}` with `λ = N^{-1/(i+2)}`, `i = 1..=4`.
    pub fn slm(i: u32) -> Self {
        MemorySetting {
            label: format!("SLM{i}"),
            kind: MemoryKind::SemiLongMemory,
            lambda: Some(ScheduleRule::inverse_root(i + 2)),
        }
    }

    /// Parses `LM` or `SLM1`..`SLM4`.
    pub fn named(label: &str) -> Result<Self> {
        match label {
            "LM" => Ok(Self::long_memory()),
            "SLM1" => Ok(Self::slm(1)),
            "SLM2" => Ok(Self::slm(2)),
            "SLM3" => Ok(Self::slm(3)),
            "SLM4" => Ok(Self::slm(4)),
            other => Err(Error::invalid(format!("unknown memory setting '{other}'"))),
        }
    }

    fn validate(&self) -> Result<()> {
        match self.kind {
            MemoryKind::SemiLongMemory => match self.lambda {
                Some(rule) if rule.satisfies_tempering_schedule() => Ok(()),
                Some(rule) => Err(Error::invalid(format!(
                    "{}: tempering rule {rule} must have the form N^-a with 0 < a < 1",
                    self.label
                ))),
                None => Err(Error::invalid(format!("{}: semi-long memory needs a lambda rule", self.label))),
            },
            MemoryKind::LongMemory => Ok(()),
            MemoryKind::ShortMemory => Err(Error::invalid(format!(
                "{}: short memory is obtained with d = 0, not as a setting",
                self.label
            ))),
        }
    }

    /// Process for sample size `n`; `d = 0` gives the short-memory process,
    /// which every setting reduces to.
    pub fn process(&self, n: usize, d: f64, burn_in: usize) -> Result<TemperedProcessSpec> {
        let spec = if d == 0.0 {
            TemperedProcessSpec::short_memory(n)?
        } else {
            match self.kind {
                MemoryKind::LongMemory => TemperedProcessSpec::long_memory(n, d)?,
                MemoryKind::SemiLongMemory => {
                    let rule = self.lambda.ok_or_else(|| Error::invalid("missing lambda rule"))?;
                    TemperedProcessSpec::semi_long_memory(n, d, rule.value(n))?
                }
                MemoryKind::ShortMemory => return Err(Error::invalid("short memory requires d = 0")),
            }
        };
        Ok(spec.with_burn_in(burn_in))
    }

    pub fn normalization(&self, d: f64) -> MemoryNormalization {
        if d == 0.0 {
            return MemoryNormalization::Short;
        }
        match (self.kind, self.lambda) {
            (MemoryKind::SemiLongMemory, Some(lambda)) => MemoryNormalization::SemiLong { d, lambda },
            (MemoryKind::LongMemory, _) => MemoryNormalization::Long { d },
            _ => MemoryNormalization::Short,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalPoints {
    /// `count` equally spaced points from `lo` to `hi` inclusive.
    Grid { lo: f64, hi: f64, count: usize },
    Points(Vec<f64>),
}

impl EvalPoints {
    pub fn points(&self) -> Vec<f64> {
        match self {
            EvalPoints::Grid { lo, hi, count } => match count {
                0 => Vec::new(),
                1 => vec![*lo],
                _ => (0..*count).map(|i| lo + (hi - lo) * i as f64 / (*count - 1) as f64).collect(),
            },
            EvalPoints::Points(p) => p.clone(),
        }
    }
}

fn default_alpha() -> f64 {
    0.05
}
fn default_levels() -> Vec<f64> {
    vec![0.01, 0.05, 0.10]
}
fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}
fn default_quad_cells() -> usize {
    DEFAULT_QUAD_CELLS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub study_kind: StudyKind,
    pub n: usize,
    pub replications: usize,
    pub d_values: Vec<f64>,
    pub memory_settings: Vec<MemorySetting>,
    pub bandwidth_rules: Vec<ScheduleRule>,
    pub rho: f64,
    pub psi: f64,
    pub sigma: f64,
    pub eval_points: EvalPoints,
    #[serde(default)]
    pub block_rules: Vec<BlockRule>,
    pub master_seed: u64,
    /// Interval level for coverage studies.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Nominal test levels for size studies.
    #[serde(default = "default_levels")]
    pub nominal_levels: Vec<f64>,
    /// Defaults to Epanechnikov for estimation and coverage, Gaussian for size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<Kernel>,
    /// Defaults to the sine series, or `y = x` under the null for size studies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<RegressionFunction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_support: Option<(f64, f64)>,
    #[serde(default = "default_quad_cells")]
    pub quad_cells: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
}

impl StudyConfig {
    fn base(kind: StudyKind, n: usize, replications: usize) -> Self {
        StudyConfig {
            study_kind: kind,
            n,
            replications,
            d_values: vec![0.0, 0.1, 0.2, 0.3, 0.4],
            memory_settings: vec![MemorySetting::long_memory(), MemorySetting::slm(1), MemorySetting::slm(3)],
            bandwidth_rules: vec![ScheduleRule::inverse_root(3), ScheduleRule::inverse_root(5)],
            rho: 0.5,
            psi: 0.25,
            sigma: 0.2,
            eval_points: EvalPoints::Grid { lo: 0.0, hi: 1.0, count: 100 },
            block_rules: Vec::new(),
            master_seed: 20_240_601,
            alpha: default_alpha(),
            nominal_levels: default_levels(),
            kernel: None,
            function: None,
            weight_support: None,
            quad_cells: DEFAULT_QUAD_CELLS,
            burn_in: DEFAULT_BURN_IN,
        }
    }

    /// Bias/Std/RMSE design: N = 1000, sine regression function, 100 points on [0, 1].
    pub fn estimation(replications: usize) -> Self {
        Self::base(StudyKind::Estimation, 1000, replications)
    }

    /// Coverage design at x ∈ {0.25, 0.5, 0.75, 0.95}, 95% intervals.
    pub fn coverage(replications: usize) -> Self {
        let mut c = Self::base(StudyKind::Coverage, 1000, replications);
        c.eval_points = EvalPoints::Points(vec![0.25, 0.5, 0.75, 0.95]);
        c
    }

    /// Size design: N = 500, linear null with θ = (0, 1), four block rules.
    pub fn size(replications: usize) -> Self {
        let mut c = Self::base(StudyKind::Size, 500, replications);
        c.eval_points = EvalPoints::Points(Vec::new());
        c.block_rules = [0.5, 1.0, 2.0, 4.0].into_iter().map(BlockRule::SqrtMultiple).collect();
        c
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel.unwrap_or(match self.study_kind {
            StudyKind::Size => Kernel::Gaussian,
            _ => Kernel::Epanechnikov,
        })
    }

    pub fn function(&self) -> RegressionFunction {
        self.function.unwrap_or(match self.study_kind {
            StudyKind::Size => RegressionFunction::Linear { intercept: 0.0, slope: 1.0 },
            _ => RegressionFunction::sine(),
        })
    }

    pub fn weight_support(&self) -> (f64, f64) {
        self.weight_support.unwrap_or((-100.0, 100.0))
    }

    /// Criterion names in output order.
    pub fn criteria(&self) -> Vec<String> {
        match self.study_kind {
            StudyKind::Estimation => vec!["bias".into(), "std".into(), "rmse".into()],
            StudyKind::Coverage => {
                let pts = self.eval_points.points();
                let mut v: Vec<String> = pts.iter().map(|x| format!("coverage_x{x}")).collect();
                v.extend(pts.iter().map(|x| format!("length_x{x}")));
                v
            }
            StudyKind::Size => {
                let mut v = Vec::new();
                for rule in &self.block_rules {
                    let b = rule.block_size(self.n);
                    for a in &self.nominal_levels {
                        v.push(format!("size_b{b}_a{a}"));
                    }
                }
                v
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::invalid("replications must be >= 1"));
        }
        if self.n < 4 {
            return Err(Error::invalid("n must be at least 4"));
        }
        for m in &self.memory_settings {
            m.validate()?;
            for &d in &self.d_values {
                m.process(self.n, d, self.burn_in)?;
            }
        }
        for rule in &self.bandwidth_rules {
            if !(rule.value(self.n) > 0.0 && rule.value(self.n).is_finite()) {
                return Err(Error::invalid(format!("bandwidth rule {rule} gives a non-positive bandwidth")));
            }
        }
        if !(self.rho.abs() <= 1.0 && self.psi.abs() < 1.0 && self.sigma >= 0.0) {
            return Err(Error::invalid("need |rho| <= 1, |psi| < 1 and sigma >= 0"));
        }
        match self.study_kind {
            StudyKind::Estimation => {
                if self.eval_points.points().is_empty() {
                    return Err(Error::invalid("estimation study needs evaluation points"));
                }
            }
            StudyKind::Coverage => {
                if !(self.alpha > 0.0 && self.alpha <= 1.0) {
                    return Err(Error::invalid("alpha must lie in (0, 1]"));
                }
            }
            StudyKind::Size => {
                if self.block_rules.is_empty() {
                    return Err(Error::invalid("size study needs at least one block rule"));
                }
                if self.nominal_levels.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
                    return Err(Error::invalid("nominal levels must lie in (0, 1)"));
                }
                if !matches!(self.function(), RegressionFunction::Linear { .. }) {
                    return Err(Error::invalid("size study simulates under a linear null"));
                }
                let (lo, hi) = self.weight_support();
                if !(lo < hi) {
                    return Err(Error::invalid("weight support must be a non-empty interval"));
                }
                if self.quad_cells < 2 {
                    return Err(Error::invalid("quad_cells must be >= 2"));
                }
            }
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: StudyConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let cfg = StudyConfig::size(10);
        let text = cfg.to_json().unwrap();
        assert!(text.contains("\"[0.5N^0.5]\""));
        assert_eq!(StudyConfig::from_json_str(&text).unwrap(), cfg);
    }

    #[test]
    fn minimal_json() {
        let text = r#"{
            "study_kind": "estimation", "n": 200, "replications": 3,
            "d_values": [0.0, 0.2],
            "memory_settings": [{"label": "LM", "kind": "lm"},
                                {"label": "SLM3", "kind": "slm", "lambda": "N^-1/5"}],
            "bandwidth_rules": ["N^-1/3"],
            "rho": 0.5, "psi": 0.25, "sigma": 0.2,
            "eval_points": {"grid": {"lo": 0.0, "hi": 1.0, "count": 5}},
            "master_seed": 1
        }"#;
        let cfg = StudyConfig::from_json_str(text).unwrap();
        assert_eq!(cfg.eval_points.points(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(cfg.kernel(), Kernel::Epanechnikov);
        assert_eq!(cfg.memory_settings[1], MemorySetting::slm(3));
    }

    #[test]
    fn rejects_bad_schedule() {
        let mut cfg = StudyConfig::estimation(1);
        cfg.memory_settings.push(MemorySetting {
            label: "bad".into(),
            kind: MemoryKind::SemiLongMemory,
            lambda: Some(ScheduleRule::Fixed(0.1)),
        });
        assert!(cfg.validate().is_err());
        let mut cfg = StudyConfig::estimation(0);
        cfg.replications = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn criteria_names() {
        assert_eq!(StudyConfig::coverage(1).criteria()[0], "coverage_x0.25");
        let size = StudyConfig::size(1).criteria();
        assert_eq!(size.len(), 12);
        assert_eq!(size[4], "size_b22_a0.05");
    }

    #[test]
    fn zero_d_is_short_memory() {
        for m in [MemorySetting::long_memory(), MemorySetting::slm(3)] {
            let p = m.process(100, 0.0, 50).unwrap();
            assert_eq!(p.memory_kind, MemoryKind::ShortMemory);
            assert_eq!(m.normalization(0.0), MemoryNormalization::Short);
        }
    }
}
