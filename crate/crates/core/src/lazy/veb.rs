//! Van Emde Boas predecessor set with lazily allocated clusters.
//!
//! Universes of at most 64 keys are a single bit word. Larger nodes keep
//! `min` outside the clusters (as in the classic layout) and allocate
//! clusters and the summary on first insert, so memory grows with the
//! number of members rather than the universe.

use std::collections::HashMap;

use crate::error::{Error, Result};

const LEAF_BITS: u32 = 6;

#[derive(Debug, Clone)]
enum Node {
    Leaf(u64),
    Branch(Box<Branch>),
}

#[derive(Debug, Clone)]
struct Branch {
    lo_bits: u32,
    hi_bits: u32,
    /// `(min, max)`, or `None` when empty.
    bounds: Option<(u64, u64)>,
    summary: Option<Node>,
    clusters: HashMap<u64, Node>,
}

impl Node {
    fn new(bits: u32) -> Node {
        if bits <= LEAF_BITS {
            Node::Leaf(0)
        } else {
            let lo_bits = bits / 2;
            Node::Branch(Box::new(Branch {
                lo_bits,
                hi_bits: bits - lo_bits,
                bounds: None,
                summary: None,
                clusters: HashMap::new(),
            }))
        }
    }

    fn min(&self) -> Option<u64> {
        match self {
            Node::Leaf(w) => (*w != 0).then(|| w.trailing_zeros() as u64),
            Node::Branch(b) => b.bounds.map(|(lo, _)| lo),
        }
    }

    fn max(&self) -> Option<u64> {
        match self {
            Node::Leaf(w) => (*w != 0).then(|| 63 - w.leading_zeros() as u64),
            Node::Branch(b) => b.bounds.map(|(_, hi)| hi),
        }
    }

    fn contains(&self, x: u64) -> bool {
        match self {
            Node::Leaf(w) => w >> x & 1 == 1,
            Node::Branch(b) => match b.bounds {
                None => false,
                Some((lo, hi)) if x == lo || x == hi => true,
                Some(_) => {
                    let (h, l) = b.split(x);
                    b.clusters.get(&h).is_some_and(|c| c.contains(l))
                }
            },
        }
    }

    /// Inserts `x`, which must not already be present.
    fn insert(&mut self, x: u64) {
        match self {
            Node::Leaf(w) => *w |= 1 << x,
            Node::Branch(b) => {
                let Some((lo, hi)) = b.bounds else {
                    b.bounds = Some((x, x));
                    return;
                };
                let (mut lo, mut hi) = (lo, hi);
                let mut x = x;
                if x < lo {
                    std::mem::swap(&mut x, &mut lo);
                }
                if x > hi {
                    hi = x;
                }
                b.bounds = Some((lo, hi));
                let (h, l) = b.split(x);
                let lo_bits = b.lo_bits;
                match b.clusters.get_mut(&h) {
                    Some(cluster) => cluster.insert(l),
                    None => {
                        let hi_bits = b.hi_bits;
                        b.summary.get_or_insert_with(|| Node::new(hi_bits)).insert(h);
                        let mut cluster = Node::new(lo_bits);
                        cluster.insert(l);
                        b.clusters.insert(h, cluster);
                    }
                }
            }
        }
    }

    /// Smallest member strictly greater than `x`.
    fn successor(&self, x: u64) -> Option<u64> {
        match self {
            Node::Leaf(w) => {
                if x >= 63 {
                    return None;
                }
                let rest = w & (!0u64 << (x + 1));
                (rest != 0).then(|| rest.trailing_zeros() as u64)
            }
            Node::Branch(b) => {
                let (lo, _) = b.bounds?;
                if x < lo {
                    return Some(lo);
                }
                let (h, l) = b.split(x);
                if let Some(cluster) = b.clusters.get(&h) {
                    if cluster.max().is_some_and(|cmax| l < cmax) {
                        return cluster.successor(l).map(|s| b.join(h, s));
                    }
                }
                let next = b.summary.as_ref()?.successor(h)?;
                let cmin = b.clusters[&next].min().expect("summary tracks non-empty clusters");
                Some(b.join(next, cmin))
            }
        }
    }

    /// Largest member strictly smaller than `x`.
    fn predecessor(&self, x: u64) -> Option<u64> {
        match self {
            Node::Leaf(w) => {
                let rest = w & ((1u64 << x) - 1);
                (rest != 0).then(|| 63 - rest.leading_zeros() as u64)
            }
            Node::Branch(b) => {
                let (lo, hi) = b.bounds?;
                if x > hi {
                    return Some(hi);
                }
                let (h, l) = b.split(x);
                if let Some(cluster) = b.clusters.get(&h) {
                    if cluster.min().is_some_and(|cmin| cmin < l) {
                        return cluster.predecessor(l).map(|p| b.join(h, p));
                    }
                }
                match b.summary.as_ref().and_then(|s| s.predecessor(h)) {
                    Some(prev) => {
                        let cmax = b.clusters[&prev].max().expect("summary tracks non-empty clusters");
                        Some(b.join(prev, cmax))
                    }
                    None => (lo < x).then_some(lo),
                }
            }
        }
    }
}

impl Branch {
    #[inline]
    fn split(&self, x: u64) -> (u64, u64) {
        (x >> self.lo_bits, x & ((1 << self.lo_bits) - 1))
    }

    #[inline]
    fn join(&self, h: u64, l: u64) -> u64 {
        (h << self.lo_bits) | l
    }
}

/// Ordered set over `[1, m]` with `O(log log m)` predecessor and successor.
#[derive(Debug, Clone)]
pub struct PredecessorSet {
    universe: usize,
    len: usize,
    root: Node,
}

impl PredecessorSet {
    pub fn new(universe: usize) -> Self {
        let bits = (usize::BITS - universe.leading_zeros()).max(1);
        PredecessorSet { universe, len: 0, root: Node::new(bits) }
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn check(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.universe {
            return Err(Error::OutOfRange { item: j, m: self.universe });
        }
        Ok(())
    }

    /// Adds `j`; returns `false` if it was already a member.
    pub fn insert(&mut self, j: usize) -> Result<bool> {
        self.check(j)?;
        if self.root.contains(j as u64) {
            return Ok(false);
        }
        self.root.insert(j as u64);
        self.len += 1;
        Ok(true)
    }

    pub fn contains(&self, j: usize) -> Result<bool> {
        self.check(j)?;
        Ok(self.root.contains(j as u64))
    }

    /// Largest member strictly less than `j`.
    pub fn predecessor(&self, j: usize) -> Result<Option<usize>> {
        self.check(j)?;
        Ok(self.root.predecessor(j as u64).map(|x| x as usize))
    }

    /// Smallest member strictly greater than `j`.
    pub fn successor(&self, j: usize) -> Result<Option<usize>> {
        self.check(j)?;
        Ok(self.root.successor(j as u64).map(|x| x as usize))
    }

    pub fn min(&self) -> Option<usize> {
        self.root.min().map(|x| x as usize)
    }

    pub fn max(&self) -> Option<usize> {
        self.root.max().map(|x| x as usize)
    }
}
