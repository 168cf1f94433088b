//! Histograms with a metered access view, plus accuracy checks.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 1-based item identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(pub usize);

impl ItemId {
    #[inline]
    pub fn get(self) -> usize {
        self.0
    }

    #[inline]
    pub(crate) fn index(self) -> usize {
        self.0 - 1
    }
}

impl From<usize> for ItemId {
    fn from(id: usize) -> Self {
        ItemId(id)
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Per-item vote counts aggregated over `n` clients.
#[derive(Debug)]
pub struct Histogram {
    scores: Vec<u64>,
    n: u64,
    order: OnceLock<Vec<u32>>,
}

#[derive(Serialize, Deserialize)]
struct HistogramFile {
    n: u64,
    scores: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    s_low: Option<Vec<usize>>,
}

impl Histogram {
    pub fn new(scores: Vec<u64>, n: u64) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::params("histogram needs at least one item"));
        }
        if n == 0 {
            return Err(Error::params("client count n must be positive"));
        }
        if scores.len() > u32::MAX as usize {
            return Err(Error::params("too many items"));
        }
        if let Some((i, &s)) = scores.iter().enumerate().find(|(_, &s)| s > n) {
            return Err(Error::params(format!("score {s} of item {} exceeds n = {n}", i + 1)));
        }
        Ok(Histogram { scores, n, order: OnceLock::new() })
    }

    /// Number of items.
    #[inline]
    pub fn m(&self) -> usize {
        self.scores.len()
    }

    #[inline]
    pub fn n(&self) -> u64 {
        self.n
    }

    #[inline]
    pub fn scores(&self) -> &[u64] {
        &self.scores
    }

    /// Score of `item`, without metering.
    pub fn score(&self, item: ItemId) -> Result<u64> {
        self.check(item)?;
        Ok(self.scores[item.index()])
    }

    fn check(&self, item: ItemId) -> Result<()> {
        if item.0 == 0 || item.0 > self.m() {
            return Err(Error::OutOfRange { item: item.0, m: self.m() });
        }
        Ok(())
    }

    /// Descending-score permutation (ties by ascending id), as 0-based
    /// indices. Computed once and shared by every view.
    pub(crate) fn order(&self) -> &[u32] {
        self.order.get_or_init(|| {
            let mut idx: Vec<u32> = (0..self.m() as u32).collect();
            idx.sort_unstable_by(|&a, &b| {
                self.scores[b as usize].cmp(&self.scores[a as usize]).then(a.cmp(&b))
            });
            idx
        })
    }

    /// Score of the item at 1-based rank `rank` in the canonical order.
    pub fn ranked_score(&self, rank: usize) -> u64 {
        self.scores[self.order()[rank - 1] as usize]
    }

    pub fn view(&self) -> MeteredView<'_> {
        MeteredView::new(self)
    }

    pub fn from_json_str(text: &str) -> Result<(Self, Option<Vec<ItemId>>)> {
        let file: HistogramFile = serde_json::from_str(text)?;
        let s_low = file.s_low.map(|v| v.into_iter().map(ItemId).collect());
        Ok((Histogram::new(file.scores, file.n)?, s_low))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, Option<Vec<ItemId>>)> {
        Histogram::from_json_str(&fs::read_to_string(path)?)
    }

    /// Serializes as `{"n": .., "scores": [..]}`, with an optional
    /// `"s_low"` sidecar listing item ids.
    pub fn to_json_string(&self, s_low: Option<&[ItemId]>) -> Result<String> {
        let file = HistogramFile {
            n: self.n,
            scores: self.scores.clone(),
            s_low: s_low.map(|s| s.iter().map(|i| i.0).collect()),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn save(&self, path: impl AsRef<Path>, s_low: Option<&[ItemId]>) -> Result<()> {
        fs::write(path, self.to_json_string(s_low)?)?;
        Ok(())
    }
}

impl Clone for Histogram {
    fn clone(&self) -> Self {
        Histogram { scores: self.scores.clone(), n: self.n, order: self.order.clone() }
    }
}

impl PartialEq for Histogram {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.scores == other.scores
    }
}

/// Access-counted facade over a histogram.
///
/// Every sorted and every random access increments `access_count`,
/// including repeated random accesses to the same item.
#[derive(Debug)]
pub struct MeteredView<'h> {
    source: &'h Histogram,
    sorted_cursor: usize,
    access_count: u64,
}

impl<'h> MeteredView<'h> {
    pub fn new(source: &'h Histogram) -> Self {
        source.order();
        MeteredView { source, sorted_cursor: 0, access_count: 0 }
    }

    pub fn histogram(&self) -> &'h Histogram {
        self.source
    }

    pub fn m(&self) -> usize {
        self.source.m()
    }

    pub fn sorted_cursor(&self) -> usize {
        self.sorted_cursor
    }

    pub fn access_count(&self) -> u64 {
        self.access_count
    }

    pub fn sorted_access(&mut self) -> Result<(ItemId, u64)> {
        if self.sorted_cursor == self.m() {
            return Err(Error::Exhausted(self.m()));
        }
        let idx = self.source.order()[self.sorted_cursor] as usize;
        self.sorted_cursor += 1;
        self.access_count += 1;
        Ok((ItemId(idx + 1), self.source.scores[idx]))
    }

    pub fn random_access(&mut self, item: ItemId) -> Result<(ItemId, u64)> {
        self.source.check(item)?;
        self.access_count += 1;
        Ok((item, self.source.scores[item.index()]))
    }
}

/// Items returned by a top-k algorithm plus access telemetry.
#[derive(Clone, Debug, PartialEq)]
pub struct TopKOutcome {
    /// Returned items, best first.
    pub items: Vec<ItemId>,
    pub k: usize,
    /// Accesses charged to the histogram view.
    pub access_cost: u64,
    /// Accesses to every list, including the noise array.
    pub access_cost_total: u64,
}

impl TopKOutcome {
    pub fn item_set(&self) -> BTreeSet<ItemId> {
        self.items.iter().copied().collect()
    }
}

/// Whether every item of `set` scores at least `h[pi(k)] - alpha`.
pub fn is_accurate(h: &Histogram, set: &[ItemId], alpha: f64, k: usize) -> Result<bool> {
    if k == 0 || k > h.m() {
        return Err(Error::BadK { k, m: h.m() });
    }
    if set.len() != k {
        return Err(Error::BadCardinality { expected: k, actual: set.len() });
    }
    let kth = h.ranked_score(k) as f64;
    for &i in set {
        if (h.score(i)? as f64) < kth - alpha {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Largest shortfall `h[pi(k)] - h[i]` over the set, floored at zero.
pub fn accuracy_error(h: &Histogram, set: &[ItemId], k: usize) -> Result<u64> {
    if k == 0 || k > h.m() {
        return Err(Error::BadK { k, m: h.m() });
    }
    let kth = h.ranked_score(k);
    let mut worst = 0;
    for &i in set {
        worst = worst.max(kth.saturating_sub(h.score(i)?));
    }
    Ok(worst)
}

/// The k best items under descending score, ascending id.
pub fn exact_top_k(h: &Histogram, k: usize) -> Result<Vec<ItemId>> {
    if k == 0 || k > h.m() {
        return Err(Error::BadK { k, m: h.m() });
    }
    Ok(h.order()[..k].iter().map(|&i| ItemId(i as usize + 1)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[usize]) -> Vec<ItemId> {
        v.iter().copied().map(ItemId).collect()
    }

    #[test]
    fn sorted_access_walks_descending() {
        let h = Histogram::new(vec![5, 9, 1], 10).unwrap();
        let mut view = h.view();
        assert_eq!(view.sorted_access().unwrap(), (ItemId(2), 9));
        assert_eq!(view.sorted_access().unwrap(), (ItemId(1), 5));
        assert_eq!(view.sorted_access().unwrap(), (ItemId(3), 1));
        assert!(matches!(view.sorted_access(), Err(Error::Exhausted(3))));
        assert_eq!(view.access_count(), 3);
        assert_eq!(view.sorted_cursor(), 3);
    }

    #[test]
    fn ties_break_by_ascending_id() {
        let h = Histogram::new(vec![7, 7], 7).unwrap();
        let mut view = h.view();
        assert_eq!(view.sorted_access().unwrap(), (ItemId(1), 7));
        assert_eq!(view.sorted_access().unwrap(), (ItemId(2), 7));
    }

    #[test]
    fn random_access_charges_every_call() {
        let h = Histogram::new(vec![5, 9, 1], 10).unwrap();
        let mut view = h.view();
        assert_eq!(view.random_access(ItemId(3)).unwrap(), (ItemId(3), 1));
        view.random_access(ItemId(3)).unwrap();
        assert_eq!(view.access_count(), 2);
        assert!(matches!(view.random_access(ItemId(4)), Err(Error::OutOfRange { item: 4, m: 3 })));
        assert!(matches!(view.random_access(ItemId(0)), Err(Error::OutOfRange { .. })));
        assert_eq!(view.access_count(), 2);
    }

    #[test]
    fn accuracy_examples() {
        let h = Histogram::new(vec![10, 9, 8, 1], 10).unwrap();
        assert!(is_accurate(&h, &ids(&[1, 2]), 0.0, 2).unwrap());
        assert!(!is_accurate(&h, &ids(&[1, 3]), 0.0, 2).unwrap());
        assert!(is_accurate(&h, &ids(&[1, 3]), 1.0, 2).unwrap());
        assert!(!is_accurate(&h, &ids(&[1, 4]), 7.0, 2).unwrap());
        assert!(is_accurate(&h, &ids(&[1, 4]), 8.0, 2).unwrap());
        assert!(matches!(
            is_accurate(&h, &ids(&[1]), 0.0, 2),
            Err(Error::BadCardinality { expected: 2, actual: 1 })
        ));
        assert_eq!(accuracy_error(&h, &ids(&[1, 4]), 2).unwrap(), 8);
        assert_eq!(accuracy_error(&h, &ids(&[1, 2]), 2).unwrap(), 0);
    }

    #[test]
    fn exact_top_k_examples() {
        let h = Histogram::new(vec![5, 9, 1], 10).unwrap();
        assert_eq!(exact_top_k(&h, 2).unwrap(), ids(&[2, 1]));
        let h = Histogram::new(vec![3, 3, 3], 3).unwrap();
        assert_eq!(exact_top_k(&h, 2).unwrap(), ids(&[1, 2]));
        let h = Histogram::new(vec![0], 1).unwrap();
        assert_eq!(exact_top_k(&h, 1).unwrap(), ids(&[1]));
        assert!(matches!(exact_top_k(&h, 2), Err(Error::BadK { k: 2, m: 1 })));
        assert!(matches!(exact_top_k(&h, 0), Err(Error::BadK { .. })));
    }

    #[test]
    fn histogram_invariants_enforced() {
        assert!(Histogram::new(vec![], 1).is_err());
        assert!(Histogram::new(vec![1], 0).is_err());
        assert!(Histogram::new(vec![2, 4], 3).is_err());
    }

    #[test]
    fn json_round_trip_with_sidecar() {
        let (h, s_low) = Histogram::from_json_str(r#"{"n": 6, "scores": [6, 3, 2]}"#).unwrap();
        assert_eq!(h.m(), 3);
        assert!(s_low.is_none());
        let text = h.to_json_string(Some(&ids(&[3]))).unwrap();
        assert_eq!(text, r#"{"n":6,"scores":[6,3,2],"s_low":[3]}"#);
        let (back, s_low) = Histogram::from_json_str(&text).unwrap();
        assert_eq!(back, h);
        assert_eq!(s_low, Some(ids(&[3])));
    }
}
