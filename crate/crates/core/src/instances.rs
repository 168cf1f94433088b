//! Instance families: benign benchmarks and the adversarial constructions
//! that separate access models.
//!
//! The hard families put a block `S` of high scores somewhere in `[m]`:
//! most of `S` scores `n`, a uniformly chosen subset `S_L` scores `n - 1`,
//! and everything outside `S` scores 0. An algorithm that must report an
//! `S_L` member has to find it among the `n` entries first.

use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Histogram, ItemId};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceFamily {
    UniformRandom,
    Zipf,
    RandomAccessHard,
    SortedHard,
    BothAccessHard,
}

impl InstanceFamily {
    pub const ALL: [InstanceFamily; 5] = [
        InstanceFamily::UniformRandom,
        InstanceFamily::Zipf,
        InstanceFamily::RandomAccessHard,
        InstanceFamily::SortedHard,
        InstanceFamily::BothAccessHard,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InstanceFamily::UniformRandom => "uniform_random",
            InstanceFamily::Zipf => "zipf",
            InstanceFamily::RandomAccessHard => "random_access_hard",
            InstanceFamily::SortedHard => "sorted_hard",
            InstanceFamily::BothAccessHard => "both_access_hard",
        }
    }
}

impl fmt::Display for InstanceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InstanceFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        InstanceFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::params(format!("unknown instance family '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFamilySpec {
    pub family: InstanceFamily,
    pub m: usize,
    pub n: u64,
    pub k: usize,
    /// Zipf exponent.
    pub s: f64,
    pub seed: u64,
}

/// A generated histogram and, for the hard families, its low set `S_L`.
#[derive(Clone, Debug)]
pub struct Instance {
    pub histogram: Histogram,
    pub s_low: Option<Vec<ItemId>>,
}

impl InstanceFamilySpec {
    pub fn new(family: InstanceFamily, m: usize, n: u64, k: usize) -> Self {
        InstanceFamilySpec { family, m, n, k, s: 1.0, seed: 0 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_exponent(mut self, s: f64) -> Self {
        self.s = s;
        self
    }

    /// Deterministic in `(family, m, n, k, s, seed)`.
    pub fn generate(&self) -> Result<Instance> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::params("m and n must be positive"));
        }
        if self.k == 0 || self.k > self.m {
            return Err(Error::BadK { k: self.k, m: self.m });
        }
        let mut rng = rng::stream(self.seed, rng::INSTANCE_STREAM);
        let (histogram, s_low) = match self.family {
            InstanceFamily::UniformRandom => (gen_uniform_random(self.m, self.n, &mut rng)?, None),
            InstanceFamily::Zipf => (gen_zipf(self.m, self.n, self.s, &mut rng)?, None),
            InstanceFamily::RandomAccessHard => (gen_random_access_hard(self.m, self.n, self.k, &mut rng)?, None),
            InstanceFamily::SortedHard => {
                let (h, low) = gen_sorted_hard(self.m, self.n, self.k, &mut rng)?;
                (h, Some(low))
            }
            InstanceFamily::BothAccessHard => {
                let (h, low) = gen_both_access_hard(self.m, self.n, self.k, &mut rng)?;
                (h, Some(low))
            }
        };
        Ok(Instance { histogram, s_low })
    }
}

/// Each entry independently `n` with probability `2k/m`, else 0.
pub fn gen_random_access_hard<R: Rng + ?Sized>(m: usize, n: u64, k: usize, rng: &mut R) -> Result<Histogram> {
    if k == 0 || 2 * k > m {
        return Err(Error::params(format!("random_access_hard needs 1 <= k <= m/2 (m = {m}, k = {k})")));
    }
    let p = 2.0 * k as f64 / m as f64;
    let scores = (0..m).map(|_| if rng.random_bool(p) { n } else { 0 }).collect();
    Histogram::new(scores, n)
}

/// Fills `block` with the three-level construction; returns `S_L`.
fn three_level<R: Rng + ?Sized>(scores: &mut [u64], block: &[usize], n: u64, k: usize, rng: &mut R) -> Vec<ItemId> {
    let low_size = block.len() / k;
    let mut low: Vec<ItemId> = index::sample(rng, block.len(), low_size)
        .into_iter()
        .map(|p| ItemId(block[p] + 1))
        .collect();
    for &i in block {
        scores[i] = n;
    }
    for i in &low {
        scores[i.index()] = n - 1;
    }
    low.sort_unstable();
    low
}

/// `S = [m/2]`; `S_L` is a uniform subset of `S` of size `floor(|S|/k)`.
pub fn gen_sorted_hard<R: Rng + ?Sized>(m: usize, n: u64, k: usize, rng: &mut R) -> Result<(Histogram, Vec<ItemId>)> {
    if !m.is_multiple_of(2) {
        return Err(Error::params(format!("sorted_hard needs even m, got {m}")));
    }
    if n < 2 {
        return Err(Error::params("sorted_hard needs n >= 2"));
    }
    if k == 0 || k > m / 2 {
        return Err(Error::params(format!("sorted_hard needs 1 <= k <= m/2 (m = {m}, k = {k})")));
    }
    let block: Vec<usize> = (0..m / 2).collect();
    let mut scores = vec![0; m];
    let low = three_level(&mut scores, &block, n, k, rng);
    Ok((Histogram::new(scores, n)?, low))
}

/// Block size `tau = round(sqrt(mk))` used by [`gen_both_access_hard`].
pub fn both_access_block_size(m: usize, k: usize) -> usize {
    ((m as f64) * (k as f64)).sqrt().round() as usize
}

/// `S` a uniform subset of `[m]` of size `tau = round(sqrt(mk))`; `S_L` a
/// uniform subset of `S` of size `floor(tau/k)`.
pub fn gen_both_access_hard<R: Rng + ?Sized>(
    m: usize,
    n: u64,
    k: usize,
    rng: &mut R,
) -> Result<(Histogram, Vec<ItemId>)> {
    if n < 2 {
        return Err(Error::params("both_access_hard needs n >= 2"));
    }
    let tau = both_access_block_size(m, k);
    if k == 0 || tau < k || tau > m {
        return Err(Error::params(format!("both_access_hard needs k <= sqrt(mk) <= m (m = {m}, k = {k})")));
    }
    let mut block = index::sample(rng, m, tau).into_vec();
    block.sort_unstable();
    let mut scores = vec![0; m];
    let low = three_level(&mut scores, &block, n, k, rng);
    Ok((Histogram::new(scores, n)?, low))
}

/// Rank `r` gets `floor(n / r^s)`, ranks assigned to a random permutation.
pub fn gen_zipf<R: Rng + ?Sized>(m: usize, n: u64, s: f64, rng: &mut R) -> Result<Histogram> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::params(format!("zipf exponent must be positive, got {s}")));
    }
    let mut scores: Vec<u64> = (1..=m as u64)
        .map(|r| if s == 1.0 { n / r } else { ((n as f64) / (r as f64).powf(s)).floor().min(n as f64) as u64 })
        .collect();
    scores.shuffle(rng);
    Histogram::new(scores, n)
}

/// Each entry uniform on `0..=n`.
pub fn gen_uniform_random<R: Rng + ?Sized>(m: usize, n: u64, rng: &mut R) -> Result<Histogram> {
    let scores = (0..m).map(|_| rng.random_range(0..=n)).collect();
    Histogram::new(scores, n)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::stats::chi_square_gof_counts;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(21)
    }

    fn level_counts(h: &Histogram) -> (usize, usize, usize) {
        let n = h.n();
        let count = |v| h.scores().iter().filter(|&&s| s == v).count();
        (count(n), count(n - 1), count(0))
    }

    #[test]
    fn random_access_hard_support_and_mean() {
        let mut rng = rng();
        let (m, k) = (200, 5);
        let counts: Vec<f64> = (0..1000)
            .map(|_| {
                let h = gen_random_access_hard(m, 9, k, &mut rng).unwrap();
                assert!(h.scores().iter().all(|&s| s == 0 || s == 9));
                h.scores().iter().filter(|&&s| s == 9).count() as f64
            })
            .collect();
        let mean = counts.iter().sum::<f64>() / 1000.0;
        let p = 2.0 * k as f64 / m as f64;
        let se = (m as f64 * p * (1.0 - p) / 1000.0).sqrt();
        assert!((mean - 2.0 * k as f64).abs() <= 3.0 * se, "mean {mean}");
        let full = gen_random_access_hard(8, 3, 4, &mut rng).unwrap();
        assert!(full.scores().iter().all(|&s| s == 3));
        assert!(gen_random_access_hard(8, 3, 5, &mut rng).is_err());
    }

    #[test]
    fn sorted_hard_levels_and_ranks() {
        let mut rng = rng();
        let (h, low) = gen_sorted_hard(8, 5, 2, &mut rng).unwrap();
        assert_eq!(level_counts(&h), (2, 2, 4));
        assert_eq!(low.len(), 2);
        assert!(low.iter().all(|i| i.0 <= 4 && h.score(*i).unwrap() == 4));
        let mut view = h.view();
        let ranks: Vec<ItemId> = (0..8).map(|_| view.sorted_access().unwrap().0).collect();
        for i in &low {
            let rank = ranks.iter().position(|x| x == i).unwrap() + 1;
            assert!((3..=4).contains(&rank));
        }
        assert!(gen_sorted_hard(7, 5, 2, &mut rng).is_err());
        assert!(gen_sorted_hard(8, 1, 2, &mut rng).is_err());
        assert!(gen_sorted_hard(8, 5, 5, &mut rng).is_err());
    }

    #[test]
    fn sorted_hard_low_set_is_uniform() {
        let mut rng = rng();
        let (m, k) = (20, 5);
        let mut counts = vec![0u64; m / 2];
        for _ in 0..10_000 {
            let (_, low) = gen_sorted_hard(m, 3, k, &mut rng).unwrap();
            for i in low {
                counts[i.index()] += 1;
            }
        }
        let p = chi_square_gof_counts(&counts, &[0.1; 10]).unwrap().p_value;
        assert!(p > 0.001, "p = {p}");
    }

    #[test]
    fn both_access_hard_split() {
        let mut rng = rng();
        let (h, low) = gen_both_access_hard(100, 7, 4, &mut rng).unwrap();
        assert_eq!(both_access_block_size(100, 4), 20);
        assert_eq!(low.len(), 5);
        assert_eq!(level_counts(&h), (15, 5, 80));
        assert!(gen_both_access_hard(100, 1, 4, &mut rng).is_err());
    }

    #[test]
    fn both_access_hard_block_position_uniform() {
        let mut rng = rng();
        let m = 10;
        let mut counts = vec![0u64; m];
        let trials = 10_000;
        for _ in 0..trials {
            let (h, _) = gen_both_access_hard(m, 2, 1, &mut rng).unwrap();
            for (i, &s) in h.scores().iter().enumerate() {
                if s > 0 {
                    counts[i] += 1;
                }
            }
        }
        // tau = round(sqrt(10)) = 3 members per draw
        let total: u64 = counts.iter().sum();
        assert_eq!(total, 3 * trials);
        let p = chi_square_gof_counts(&counts, &vec![0.1; m]).unwrap().p_value;
        assert!(p > 0.001, "p = {p}");
    }

    #[test]
    fn zipf_levels() {
        let mut rng = rng();
        let h = gen_zipf(3, 6, 1.0, &mut rng).unwrap();
        let mut scores = h.scores().to_vec();
        scores.sort_unstable();
        assert_eq!(scores, vec![2, 3, 6]);
        let h = gen_zipf(1000, 50, 0.7, &mut rng).unwrap();
        assert!(h.scores().iter().all(|&s| s <= 50));
        assert!(gen_zipf(3, 6, 0.0, &mut rng).is_err());
    }

    #[test]
    fn uniform_random_mean() {
        let mut rng = rng();
        let n = 100;
        let h = gen_uniform_random(20_000, n, &mut rng).unwrap();
        let mean = h.scores().iter().sum::<u64>() as f64 / 20_000.0;
        let se = ((n as f64 + 1.0).powi(2) - 1.0) / 12.0;
        let se = (se / 20_000.0).sqrt();
        assert!((mean - 50.0).abs() <= 3.0 * se, "mean {mean}");
    }

    #[test]
    fn generation_is_deterministic() {
        for family in InstanceFamily::ALL {
            let spec = InstanceFamilySpec::new(family, 64, 10, 4).with_seed(5);
            let a = spec.generate().unwrap();
            let b = spec.generate().unwrap();
            assert_eq!(a.histogram, b.histogram);
            assert_eq!(a.s_low, b.s_low);
            assert!(a.histogram.scores().iter().all(|&s| s <= 10));
            assert_eq!(family.name().parse::<InstanceFamily>().unwrap(), family);
        }
        assert!(InstanceFamilySpec::new(InstanceFamily::Zipf, 5, 10, 6).generate().is_err());
    }
}
