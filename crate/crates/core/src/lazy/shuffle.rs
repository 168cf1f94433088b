use std::collections::HashMap;

use rand::Rng;

/// The values `1..=n` in an implicit array, shuffled on the fly.
///
/// Only displaced slots are stored, so construction is O(1) and memory is
/// proportional to the number of removals. Removal swaps the value to the
/// back of the live prefix; uniform removal picks a random live slot.
#[derive(Debug, Clone)]
pub(crate) struct SparseShuffle {
    live: usize,
    slot_value: HashMap<usize, usize>,
    value_slot: HashMap<usize, usize>,
}

impl SparseShuffle {
    pub(crate) fn new(n: usize) -> Self {
        SparseShuffle { live: n, slot_value: HashMap::new(), value_slot: HashMap::new() }
    }

    pub(crate) fn remaining(&self) -> usize {
        self.live
    }

    fn value_at(&self, slot: usize) -> usize {
        self.slot_value.get(&slot).copied().unwrap_or(slot + 1)
    }

    fn slot_of(&self, value: usize) -> usize {
        self.value_slot.get(&value).copied().unwrap_or(value - 1)
    }

    pub(crate) fn contains(&self, value: usize) -> bool {
        value >= 1 && self.slot_of(value) < self.live
    }

    /// Removes and returns a uniformly random remaining value.
    pub(crate) fn take_random<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<usize> {
        if self.live == 0 {
            return None;
        }
        let slot = rng.random_range(0..self.live);
        let value = self.value_at(slot);
        self.retire(slot, value);
        Some(value)
    }

    /// Removes `value`; returns `false` if it was already gone.
    pub(crate) fn remove(&mut self, value: usize) -> bool {
        if !self.contains(value) {
            return false;
        }
        let slot = self.slot_of(value);
        self.retire(slot, value);
        true
    }

    fn retire(&mut self, slot: usize, value: usize) {
        let last = self.live - 1;
        let last_value = self.value_at(last);
        self.slot_value.insert(slot, last_value);
        self.value_slot.insert(last_value, slot);
        self.slot_value.insert(last, value);
        self.value_slot.insert(value, last);
        self.live -= 1;
    }
}
