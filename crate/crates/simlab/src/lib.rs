//! Simulation designs and experiment runners for the cpc independence test:
//! size and power grids, null calibration, the total-variation sandwich, the
//! QDA condition check, the lasso rate experiment and timing benchmarks.
//!
//! Every replicate draws its data from a seed derived from the experiment's
//! master seed, so results do not depend on scheduling or worker count.

pub mod calibration;
pub mod checks;
pub mod config;
pub mod lasso;
pub mod models;
pub mod mu;
pub mod output;
pub mod power;
pub mod timing;
pub mod tv;

pub use calibration::{null_calibration, variance_validity, CalibrationConfig, CalibrationResult, VarianceCheck, VarianceCheckConfig};
pub use checks::{run_checks, CheckOutcome, CheckSizes};
pub use config::{load_experiment, parse_experiment, ClassifierOverrides, Experiment};
pub use lasso::{lasso_rate_experiment, LassoConfig, LassoRate};
pub use models::{generate, Covariance, ModelId, SimModel, Tails};
pub use mu::{mu_condition_check, MuConfig, MuRow};
pub use power::{power_experiment, Method, PowerCell, PowerConfig, PowerCurve, PowerOutcome, RepRecord};
pub use timing::{dcor_scaling, rank_sum_scaling, timing_bench, Scaling, TimingConfig, TimingRow};
pub use tv::{tv_bound_check, tv_fuzz, DiscreteDistPair, TvBound};
