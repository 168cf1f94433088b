use std::collections::HashMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::lazy::LazyNoiseArray;
use crate::model::{ItemId, MeteredView};

/// A list supporting sorted and random access over items `1..=len`.
pub trait ScoreList {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Next `(item, value)` in descending value order.
    fn next_sorted(&mut self) -> Result<(ItemId, f64)>;

    /// Value of `item`.
    fn lookup(&mut self, item: ItemId) -> Result<f64>;

    /// Accesses performed so far.
    fn accesses(&self) -> u64;
}

impl ScoreList for MeteredView<'_> {
    fn len(&self) -> usize {
        self.m()
    }

    fn next_sorted(&mut self) -> Result<(ItemId, f64)> {
        self.sorted_access().map(|(i, s)| (i, s as f64))
    }

    fn lookup(&mut self, item: ItemId) -> Result<f64> {
        self.random_access(item).map(|(_, s)| s as f64)
    }

    fn accesses(&self) -> u64 {
        self.access_count()
    }
}

impl<R: Rng> ScoreList for LazyNoiseArray<R> {
    fn len(&self) -> usize {
        self.m()
    }

    fn next_sorted(&mut self) -> Result<(ItemId, f64)> {
        self.sorted_access()
    }

    fn lookup(&mut self, item: ItemId) -> Result<f64> {
        self.random_access(item).map(|(_, z)| z)
    }

    fn accesses(&self) -> u64 {
        self.access_count()
    }
}

/// Tuples sorted by descending value with an inverted index.
#[derive(Clone, Debug)]
pub struct SortedList {
    tuples: Vec<(ItemId, f64)>,
    position: Vec<u32>,
    cursor: usize,
    accesses: u64,
}

impl SortedList {
    /// `values[i]` is the value of item `i + 1`. Ties sort by ascending id.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::params("sorted list needs at least one item"));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::params("NaN value"));
        }
        let mut tuples: Vec<(ItemId, f64)> =
            values.iter().enumerate().map(|(i, &v)| (ItemId(i + 1), v)).collect();
        tuples.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut position = vec![0u32; values.len()];
        for (p, (item, _)) in tuples.iter().enumerate() {
            position[item.index()] = p as u32;
        }
        Ok(SortedList { tuples, position, cursor: 0, accesses: 0 })
    }

    pub fn tuples(&self) -> &[(ItemId, f64)] {
        &self.tuples
    }

    /// 1-based position of `item`.
    pub fn position_of(&self, item: ItemId) -> Option<usize> {
        self.position.get(item.0.wrapping_sub(1)).map(|&p| p as usize + 1)
    }

    pub fn sorted_access(&mut self) -> Result<(ItemId, f64)> {
        let t = *self.tuples.get(self.cursor).ok_or(Error::Exhausted(self.tuples.len()))?;
        self.cursor += 1;
        self.accesses += 1;
        Ok(t)
    }

    pub fn random_access(&mut self, item: ItemId) -> Result<(ItemId, f64)> {
        let p = self
            .position_of(item)
            .ok_or(Error::OutOfRange { item: item.0, m: self.tuples.len() })?;
        self.accesses += 1;
        Ok(self.tuples[p - 1])
    }
}

impl ScoreList for SortedList {
    fn len(&self) -> usize {
        self.tuples.len()
    }

    fn next_sorted(&mut self) -> Result<(ItemId, f64)> {
        self.sorted_access()
    }

    fn lookup(&mut self, item: ItemId) -> Result<f64> {
        self.random_access(item).map(|(_, v)| v)
    }

    fn accesses(&self) -> u64 {
        self.accesses
    }
}

/// A monotone aggregation of per-list attributes.
pub trait Aggregation {
    fn aggregate(&self, values: &[f64]) -> f64;
}

/// `f(y) = y_1 + ... + y_t`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sum;

impl Aggregation for Sum {
    fn aggregate(&self, values: &[f64]) -> f64 {
        values.iter().sum()
    }
}

impl<F: Fn(&[f64]) -> f64> Aggregation for F {
    fn aggregate(&self, values: &[f64]) -> f64 {
        self(values)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaOutcome {
    /// Selected `(item, aggregate score)`, best first.
    pub items: Vec<(ItemId, f64)>,
    pub rounds: usize,
    /// Accesses charged to each list during this run.
    pub accesses: Vec<u64>,
    /// Threshold at termination.
    pub threshold: f64,
}

/// Best-first (score descending, id ascending).
fn better(a: (ItemId, f64), b: (ItemId, f64)) -> bool {
    a.1 > b.1 || (a.1 == b.1 && a.0 < b.0)
}

/// Threshold algorithm over `t` lists sharing the item universe.
///
/// Each round performs one sorted access per list, in list order. A newly
/// encountered item has its remaining attributes fetched by random access;
/// items already seen are answered from a memo. After the round the
/// threshold is the aggregate of the last sorted-access values, and the run
/// stops once the k best seen items all score at least that much, or once
/// every item has been seen.
pub fn threshold_algorithm(
    lists: &mut [&mut dyn ScoreList],
    f: &dyn Aggregation,
    k: usize,
) -> Result<TaOutcome> {
    let t = lists.len();
    if t == 0 {
        return Err(Error::params("threshold algorithm needs at least one list"));
    }
    let m = lists[0].len();
    if lists.iter().any(|l| l.len() != m) {
        return Err(Error::params("lists must share the same item universe"));
    }
    if k == 0 || k > m {
        return Err(Error::BadK { k, m });
    }
    let start: Vec<u64> = lists.iter().map(|l| l.accesses()).collect();

    let mut seen: HashMap<ItemId, f64> = HashMap::new();
    let mut top: Vec<(ItemId, f64)> = Vec::with_capacity(k + 1);
    let mut last = vec![f64::INFINITY; t];
    let mut attrs = vec![0.0; t];
    let mut rounds = 0;
    let threshold = loop {
        rounds += 1;
        for j in 0..t {
            let (item, value) = lists[j].next_sorted()?;
            last[j] = value;
            if seen.contains_key(&item) {
                continue;
            }
            for (l, list) in lists.iter_mut().enumerate() {
                attrs[l] = if l == j { value } else { list.lookup(item)? };
            }
            let score = f.aggregate(&attrs);
            seen.insert(item, score);
            let cand = (item, score);
            if top.len() < k || better(cand, top[k - 1]) {
                let at = top.partition_point(|&x| better(x, cand));
                top.insert(at, cand);
                top.truncate(k);
            }
        }
        let tau = f.aggregate(&last);
        if top.len() == k && top[k - 1].1 >= tau {
            break tau;
        }
        if seen.len() == m {
            break tau;
        }
    };

    let accesses = lists.iter().zip(&start).map(|(l, s)| l.accesses() - s).collect();
    Ok(TaOutcome { items: top, rounds, accesses, threshold })
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::model::{exact_top_k, Histogram};

    #[test]
    fn hand_traced_two_list_run() {
        // L1: (1:10),(2:8),(3:1); L2: (3:5),(1:2),(2:0)
        let h = Histogram::new(vec![10, 8, 1], 10).unwrap();
        let mut l1 = h.view();
        let mut l2 = SortedList::from_values(&[2.0, 0.0, 5.0]).unwrap();
        let out = threshold_algorithm(&mut [&mut l1, &mut l2], &Sum, 1).unwrap();
        assert_eq!(out.items, vec![(ItemId(1), 12.0)]);
        assert_eq!(out.rounds, 2);
        assert_eq!(out.threshold, 10.0);
        assert_eq!(out.accesses[0], 3);
        assert_eq!(l1.access_count(), 3);
        // L2: 2 sorted + random for items 1 and 2
        assert_eq!(out.accesses[1], 4);
    }

    #[test]
    fn single_list_reads_exactly_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let m = rng.random_range(1..40);
            let scores: Vec<u64> = (0..m).map(|_| rng.random_range(0..6)).collect();
            let h = Histogram::new(scores, 5).unwrap();
            let k = rng.random_range(1..=m);
            let mut view = h.view();
            let out = threshold_algorithm(&mut [&mut view], &|y: &[f64]| y[0], k).unwrap();
            let items: Vec<ItemId> = out.items.iter().map(|x| x.0).collect();
            assert_eq!(items, exact_top_k(&h, k).unwrap());
            assert_eq!(view.access_count(), k as u64);
        }
    }

    #[test]
    fn rejects_bad_k_and_mismatched_lists() {
        let h = Histogram::new(vec![1, 2, 3], 3).unwrap();
        let mut view = h.view();
        assert!(matches!(threshold_algorithm(&mut [&mut view], &Sum, 0), Err(Error::BadK { .. })));
        assert!(matches!(threshold_algorithm(&mut [&mut view], &Sum, 4), Err(Error::BadK { .. })));
        let mut short = SortedList::from_values(&[1.0, 2.0]).unwrap();
        assert!(threshold_algorithm(&mut [&mut view, &mut short], &Sum, 1).is_err());
        assert!(threshold_algorithm(&mut [], &Sum, 1).is_err());
    }

    #[test]
    fn stops_soundly_on_integer_ties() {
        // With ties the output may differ from the canonical tie-break, but
        // its score multiset is exact and no unseen item beats the threshold.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let m = rng.random_range(1..=50);
            let a: Vec<f64> = (0..m).map(|_| rng.random_range(0..8) as f64).collect();
            let b: Vec<f64> = (0..m).map(|_| rng.random_range(0..8) as f64).collect();
            let k = rng.random_range(1..=m.min(5));
            let mut l1 = SortedList::from_values(&a).unwrap();
            let mut l2 = SortedList::from_values(&b).unwrap();
            let out = threshold_algorithm(&mut [&mut l1, &mut l2], &Sum, k).unwrap();
            let mut all: Vec<f64> = (0..m).map(|i| a[i] + b[i]).collect();
            all.sort_by(|x, y| y.total_cmp(x));
            let got: Vec<f64> = out.items.iter().map(|x| x.1).collect();
            assert_eq!(got, all[..k].to_vec());
        }
    }

    #[test]
    fn sorted_list_index() {
        let mut list = SortedList::from_values(&[0.5, 2.0, 2.0]).unwrap();
        assert_eq!(list.tuples(), &[(ItemId(2), 2.0), (ItemId(3), 2.0), (ItemId(1), 0.5)]);
        assert_eq!(list.position_of(ItemId(1)), Some(3));
        assert_eq!(list.position_of(ItemId(0)), None);
        assert_eq!(list.random_access(ItemId(3)).unwrap(), (ItemId(3), 2.0));
        assert!(list.random_access(ItemId(4)).is_err());
        assert!(SortedList::from_values(&[f64::NAN]).is_err());
    }
}
