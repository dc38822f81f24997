//! Semi-long memory (tempered) cointegrating regression.
//!
//! The crate covers the full workflow for nonparametric regression with an
//! integrated regressor whose shocks are long memory or exponentially
//! tempered long memory:
//!
//! * [`process`]: fractional / tempered coefficient sequences and simulation
//!   of regressor, endogenous error and response paths.
//! * [`kernel`] and [`regression`]: Nadaraya–Watson estimation with
//!   self-normalized pointwise confidence intervals.
//! * [`spec_test`]: parametric specification testing with the L2 kernel
//!   statistic and block-subsampling calibration.
//! * [`whittle`]: Whittle estimation of ARTFIMA(0, d, λ, 0) and ARFIMA(0, d, 0).
//! * [`mc`]: configuration driven Monte Carlo studies.
//! * [`empirical`]: ingestion of carbon/GDP panels and the full empirical
//!   analysis (memory fits plus specification-test p-value grid).

pub mod empirical;
pub mod error;
pub mod kernel;
pub mod mc;
pub mod optim;
pub mod process;
pub mod regression;
pub mod rng;
pub mod schedule;
pub mod spec_test;
pub mod whittle;

pub use error::{Error, Result};
pub use kernel::Kernel;
pub use process::{
    MemoryKind, NoiseConfig, RegressionFunction, SimulatedPath, TemperedProcessSpec,
};
pub use regression::KernelEstimate;
pub use schedule::{BlockRule, ScheduleRule};
pub use spec_test::{
    MemoryNormalization, ParametricFamily, SpecTestConfig, SpecTestResult, WeightFunction,
};
pub use whittle::ArtfimaFit;
