//! Top-k selection: the threshold algorithm and its private variants.

mod params;
mod private;
mod ta;

pub use params::{accuracy_bound, gumbel_privacy_params, laplace_privacy_params, DEFAULT_ACCURACY_CONSTANT};
pub(crate) use private::oneshot_with_noise;
pub use private::{exponential_mechanism, oneshot_private_topk, private_threshold_topk, Mode};
pub use ta::{threshold_algorithm, Aggregation, ScoreList, SortedList, Sum, TaOutcome};
