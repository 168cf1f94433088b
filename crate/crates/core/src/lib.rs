//! Differentially private top-k selection under a metered access model.
//!
//! Data lives behind a [`MeteredView`] that supports *sorted access* (next
//! item in descending score order) and *random access* (score of a named
//! item); every call is counted. [`private_threshold_topk`] runs the
//! threshold algorithm over the histogram and a sorted array of noise
//! values, reaching the output of one-shot noisy top-k while touching only
//! `O(sqrt(mk))` histogram entries in expectation. In lazy mode the noise
//! array is never materialized: [`LazyNoiseArray`] samples its entries on
//! demand from the conditional distribution of uniform order statistics.

pub mod algorithms;
pub mod error;
pub mod experiment;
pub mod harness;
pub mod instances;
pub mod lazy;
pub mod model;
pub mod noise;
pub mod rng;
pub mod stats;
pub mod verify;

pub use algorithms::{
    exponential_mechanism, gumbel_privacy_params, laplace_privacy_params, accuracy_bound,
    oneshot_private_topk, private_threshold_topk, threshold_algorithm, Aggregation, Mode,
    ScoreList, SortedList, Sum, TaOutcome,
};
pub use error::{Error, Result};
pub use lazy::{LazyNoiseArray, PredecessorSet};
pub use model::{exact_top_k, is_accurate, Histogram, ItemId, MeteredView, TopKOutcome};
pub use noise::{ConditioningState, NoiseKind, NoiseSpec};
