//! Noise model, tail probabilities and the number of false alarms.

mod density;
mod estimate;
mod nfa;
mod table;
mod tail;

pub use density::GammaDensity;
pub use estimate::{estimate_p, estimate_p_datasets, PEstimate, PEstimator, DEFAULT_P};
pub use nfa::{choose, nfa, number_of_tests, NfaConfig};
pub use table::TailTable;
pub use tail::{binomial_pmf, tail_probability, KFoldSums, TailEvaluator, MIXTURE_TRUNCATION};
