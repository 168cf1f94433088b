use std::collections::HashMap;

use rand::Rng;

use super::shuffle::SparseShuffle;
use super::veb::PredecessorSet;
use crate::error::{Error, Result};
use crate::model::ItemId;
use crate::noise::{sample_between, NoiseSpec};

#[derive(Clone, Copy, Debug, PartialEq)]
struct Entry {
    item: ItemId,
    noise: f64,
    uniform: f64,
}

/// Sorted array of `m` i.i.d. noise values, sampled on demand.
///
/// Position `j` holds the pair `(I_(j), Z_(j))` of the eagerly generated
/// array: the item occupying the j-th largest noise value and that value.
/// Item identities are a uniform random permutation independent of the
/// values, so each is drawn from the items not yet placed; values are drawn
/// in uniform space given the nearest already-sampled positions and mapped
/// through the inverse CDF. Every answer has the same distribution as the
/// corresponding read of the eager array, in any query order.
#[derive(Debug)]
pub struct LazyNoiseArray<R> {
    m: usize,
    spec: NoiseSpec,
    sampled: PredecessorSet,
    entries: HashMap<usize, Entry>,
    inv_index: HashMap<ItemId, usize>,
    unseen_items: SparseShuffle,
    free_positions: SparseShuffle,
    cursor: usize,
    accesses: u64,
    rng: R,
}

impl<R: Rng> LazyNoiseArray<R> {
    pub fn new(m: usize, spec: NoiseSpec, rng: R) -> Result<Self> {
        if m == 0 {
            return Err(Error::params("noise array needs at least one item"));
        }
        Ok(LazyNoiseArray {
            m,
            spec,
            sampled: PredecessorSet::new(m),
            entries: HashMap::new(),
            inv_index: HashMap::new(),
            unseen_items: SparseShuffle::new(m),
            free_positions: SparseShuffle::new(m),
            cursor: 0,
            accesses: 0,
            rng,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn spec(&self) -> &NoiseSpec {
        &self.spec
    }

    /// Last position returned by sorted access (0 before the first call).
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn access_count(&self) -> u64 {
        self.accesses
    }

    /// Number of materialized positions.
    pub fn sampled_count(&self) -> usize {
        self.sampled.len()
    }

    pub fn position_of(&self, item: ItemId) -> Option<usize> {
        self.inv_index.get(&item).copied()
    }

    /// `(item, noise, uniform)` at position `j`, if materialized.
    pub fn entry(&self, j: usize) -> Option<(ItemId, f64, f64)> {
        self.entries.get(&j).map(|e| (e.item, e.noise, e.uniform))
    }

    pub fn into_rng(self) -> R {
        self.rng
    }

    pub fn sorted_access(&mut self) -> Result<(ItemId, f64)> {
        if self.cursor == self.m {
            return Err(Error::Exhausted(self.m));
        }
        self.cursor += 1;
        self.accesses += 1;
        let j = self.cursor;
        if let Some(e) = self.entries.get(&j) {
            return Ok((e.item, e.noise));
        }
        let item = self.unseen_items.take_random(&mut self.rng).expect("a free position implies a free item");
        self.free_positions.remove(j);
        let noise = self.materialize(j, ItemId(item));
        Ok((ItemId(item), noise))
    }

    pub fn random_access(&mut self, item: ItemId) -> Result<(ItemId, f64)> {
        if item.0 == 0 || item.0 > self.m {
            return Err(Error::OutOfRange { item: item.0, m: self.m });
        }
        self.accesses += 1;
        if let Some(j) = self.inv_index.get(&item) {
            return Ok((item, self.entries[j].noise));
        }
        let j = self.free_positions.take_random(&mut self.rng).expect("an unplaced item implies a free position");
        self.unseen_items.remove(item.0);
        let noise = self.materialize(j, item);
        Ok((item, noise))
    }

    fn materialize(&mut self, j: usize, item: ItemId) -> f64 {
        let neighbour = |p: usize| (p, self.entries[&p].uniform);
        let upper = self.sampled.predecessor(j).expect("j in range").map(neighbour);
        let lower = self.sampled.successor(j).expect("j in range").map(neighbour);
        let uniform = clamp_open(sample_between(self.m, j, upper, lower, &mut self.rng));
        let noise = self.spec.inverse_cdf(uniform).expect("clamped into (0, 1)");
        self.sampled.insert(j).expect("j in range");
        self.entries.insert(j, Entry { item, noise, uniform });
        self.inv_index.insert(item, j);
        noise
    }

    /// Panics if any structural invariant is broken.
    pub fn assert_invariants(&self) {
        assert_eq!(self.entries.len(), self.sampled.len());
        assert_eq!(self.inv_index.len(), self.sampled.len());
        assert_eq!(self.unseen_items.remaining(), self.m - self.sampled.len());
        assert_eq!(self.free_positions.remaining(), self.m - self.sampled.len());
        let mut positions: Vec<usize> = self.entries.keys().copied().collect();
        positions.sort_unstable();
        for pair in positions.windows(2) {
            let (a, b) = (&self.entries[&pair[0]], &self.entries[&pair[1]]);
            assert!(a.uniform >= b.uniform && a.noise >= b.noise, "order broken at {pair:?}");
        }
        for (&j, e) in &self.entries {
            assert_eq!(self.inv_index[&e.item], j);
            assert_eq!(e.noise, self.spec.inverse_cdf(e.uniform).unwrap());
            assert!(!self.unseen_items.contains(e.item.0));
            assert!(!self.free_positions.contains(j));
        }
    }
}

fn clamp_open(u: f64) -> f64 {
    const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;
    u.clamp(f64::MIN_POSITIVE, BELOW_ONE)
}
