//! Free-transport particle with a thermalising wall on `[0, 1)`: laws of the
//! re-emission speed, the renewal process, empirical measures, the two rate
//! functionals and rare-event estimators.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod empirical;
pub mod error;
pub mod laws;
pub mod numerics;
pub mod process;
pub mod rare_event;
pub mod rate;
pub mod rng;
pub mod scalar;

pub use empirical::{EmpiricalMeasure, MeasureDistanceReport};
pub use error::{Error, Result};
pub use laws::{LawRole, LawSpec, ProbabilityLaw};
pub use process::{RecurrencePair, StateSample, Trajectory};
pub use scalar::{ratio, ExtendedReal, Scalar};

pub type Trajectory64 = Trajectory<f64>;
pub type TrajectoryExact = Trajectory<ExactRational>;

/// Exact rational scalar.
pub type ExactRational = num_rational::BigRational;
pub type EmpiricalMeasure64 = EmpiricalMeasure<f64>;
pub type EmpiricalMeasureExact = EmpiricalMeasure<ExactRational>;
