//! Kinetic Monte Carlo trajectory sampling, path reversal, the trajectorial
//! entropy process with its Doob-Meyer compensator, and the statistical
//! martingale/submartingale verdicts.

mod process;
mod stats;
mod trajectory;

pub use process::{line_generator_for, ProcessPath, SemigroupSide, TrajectorialEngine};
pub use stats::{
    chi_square_gof, chi_square_two_sample, covariance_ci, exact_conditional_check,
    martingale_test, mean_ci, submartingale_test, two_time_battery, ChiSquare, FeatureSet,
    Hypothesis, TestReport, Verdict, MIN_POWERED_SAMPLES,
};
pub use trajectory::{
    gillespie_sample, sample_stationary_ensemble, trajectory_rng, Event, SeedInfo,
    StationarySampler, Trajectory,
};
