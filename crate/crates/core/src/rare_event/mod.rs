//! Rare-event probabilities of the empirical measure: direct and importance
//! sampling, analytic bounds, and the paired-subsequence experiment.

mod bounds;
mod estimate;
mod event;
mod nonldp;
mod scheme;

pub use bounds::{
    age_statistics, decomposition_log_bound, decomposition_probability, free_energy_check, in_decomposition_event,
    log_interarrival_tail, renewal_mean_bound, tightness_bound, tightness_check, tightness_log_c, BoundCheckRow,
};
pub use estimate::{
    direct_probability, empirical_at, fit_slope, importance_probability, importance_with_costs, ProbabilityEstimate,
    SlopeEstimate, ESS_WARNING,
};
pub use event::{a_ball_center, gamma, Event, EventSpec};
pub use nonldp::{calibrate_delta1, non_ldp_experiment, NonLdpConfig, NonLdpPoint, NonLdpReport};
pub use scheme::{entropy_cost, tilted_sampler, TiltMode, TiltedSample, TiltedScheme};
