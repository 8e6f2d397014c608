//! Exact distribution evolution, total-variation mixing, exact k-wise
//! independence distances at tiny scale and Monte Carlo tests beyond it.

mod distribution;
mod empirical;
mod exact;
mod kwise;

pub use distribution::{pointwise_relative_error, tv_distance, Distribution};
pub use empirical::{empirical_tv_series, EmpiricalPoint};
pub use exact::{
    evolve, kwise_tv_exact, kwise_tv_series, mixing_series, mixing_time_exact, MixingPoint, MixingRun, Starts,
};
pub use kwise::{kwise_stat_mc, statistic_law, KwiseSource, KwiseTestConfig, KwiseTestReport, Statistic};
