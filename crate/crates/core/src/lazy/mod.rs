//! On-demand sorted noise array and the predecessor structure behind it.

mod oracle;
mod shuffle;
mod veb;

pub use oracle::LazyNoiseArray;
pub use veb::PredecessorSet;
