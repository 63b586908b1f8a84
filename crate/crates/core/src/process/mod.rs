//! Event-driven simulation of `(q_t, p_t)`: free flight at constant speed on
//! `[0, 1)` and re-emission from `0` with a fresh speed at each wall hit.

mod markov;
mod trajectory;

pub use markov::{
    generator_integral, generator_residual, semigroup_residual, ResidualReport, StateFn, TestFunction,
};
pub use trajectory::{simulate, simulate_undelayed, RecurrencePair, Start, StateSample, Trajectory};
