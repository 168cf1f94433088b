//! Noiseless variants for testing and exact baselines.
//!
//! Nothing here is differentially private. These functions exist so tests
//! and benchmarks can compare the private algorithms against the exact
//! answer computed through the same code paths.

use crate::algorithms::{oneshot_with_noise, threshold_algorithm, SortedList, Sum};
use crate::error::{Error, Result};
use crate::model::{Histogram, MeteredView, TopKOutcome};

/// One-shot top-k with every noise value fixed at zero.
pub fn noiseless_oneshot_topk(h: &Histogram, k: usize) -> Result<TopKOutcome> {
    oneshot_with_noise(h, k, || 0.0)
}

/// The private threshold algorithm's two-list run with an all-zero noise
/// list. Returns the exact top-k under the canonical tie-break.
pub fn noiseless_threshold_topk(view: &mut MeteredView<'_>, k: usize) -> Result<TopKOutcome> {
    let m = view.m();
    if k == 0 || k > m {
        return Err(Error::BadK { k, m });
    }
    let mut zeros = SortedList::from_values(&vec![0.0; m])?;
    let out = threshold_algorithm(&mut [view, &mut zeros], &Sum, k)?;
    Ok(TopKOutcome {
        items: out.items.iter().map(|&(i, _)| i).collect(),
        k,
        access_cost: out.accesses[0],
        access_cost_total: out.accesses.iter().sum(),
    })
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::model::exact_top_k;

    #[test]
    fn noiseless_runs_equal_exact_top_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..2000 {
            let m = rng.random_range(1..=40);
            let n = rng.random_range(1..=6);
            let scores: Vec<u64> = (0..m).map(|_| rng.random_range(0..=n)).collect();
            let h = Histogram::new(scores, n).unwrap();
            let k = rng.random_range(1..=m);
            let exact = exact_top_k(&h, k).unwrap();
            assert_eq!(noiseless_oneshot_topk(&h, k).unwrap().items, exact);
            let mut view = h.view();
            let out = noiseless_threshold_topk(&mut view, k).unwrap();
            assert_eq!(out.items, exact, "h = {:?}, k = {k}", h.scores());
            assert_eq!(out.access_cost, view.access_count());
        }
    }
}
