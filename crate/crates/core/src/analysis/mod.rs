//! Dirichlet forms, entropy, log-Sobolev ratios, spectral gaps, and the
//! conditional-entropy decomposition on distinct-tuple spaces.

mod conditional;
mod functional;
mod reversibility;
mod search;
mod spectral;

pub use conditional::{chain_rule_residual, marginal, restrict_conditional};
pub use functional::{dirichlet_form, entropy, lsc_ratio, StateFunction};
pub use reversibility::{verify_reversible, ReversibilityReport, REVERSIBILITY_TOL};
pub use search::{lsc_search, SearchOptions, SearchOutcome, SEARCH_LIMIT};
pub use spectral::{eigenvalues, spectral_gap, DENSE_LIMIT};
