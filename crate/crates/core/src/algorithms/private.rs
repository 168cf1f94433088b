use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ta::{threshold_algorithm, ScoreList, SortedList, Sum};
use crate::error::{Error, Result};
use crate::lazy::LazyNoiseArray;
use crate::model::{Histogram, ItemId, MeteredView, TopKOutcome};
use crate::noise::{NoiseKind, NoiseSpec};

/// How the private threshold algorithm obtains its noise list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Draw all `m` noise values up front and sort them.
    Eager,
    /// Sample noise positions on demand.
    Lazy,
}

/// Noisy scores `h[i] + Z_i` for every item, top k returned.
///
/// Reads every entry, so the access cost is `m`.
pub fn oneshot_private_topk<R: Rng + ?Sized>(
    h: &Histogram,
    k: usize,
    spec: &NoiseSpec,
    rng: &mut R,
) -> Result<TopKOutcome> {
    oneshot_with_noise(h, k, || spec.sample(rng))
}

pub(crate) fn oneshot_with_noise(
    h: &Histogram,
    k: usize,
    mut noise: impl FnMut() -> f64,
) -> Result<TopKOutcome> {
    let m = h.m();
    if k == 0 || k > m {
        return Err(Error::BadK { k, m });
    }
    let mut noisy: Vec<(f64, u32)> =
        h.scores().iter().enumerate().map(|(i, &s)| (s as f64 + noise(), i as u32)).collect();
    let by_rank = |a: &(f64, u32), b: &(f64, u32)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
    if k < m {
        noisy.select_nth_unstable_by(k - 1, by_rank);
    }
    noisy.truncate(k);
    noisy.sort_unstable_by(by_rank);
    Ok(TopKOutcome {
        items: noisy.iter().map(|&(_, i)| ItemId(i as usize + 1)).collect(),
        k,
        access_cost: m as u64,
        access_cost_total: m as u64,
    })
}

/// Threshold algorithm over the histogram view and a sorted noise list,
/// aggregating `h[i] + Z_i`.
///
/// The output has the distribution of [`oneshot_private_topk`] with the
/// same noise. `access_cost` counts accesses to the view only.
pub fn private_threshold_topk<R: Rng + ?Sized>(
    view: &mut MeteredView<'_>,
    k: usize,
    spec: &NoiseSpec,
    rng: &mut R,
    mode: Mode,
) -> Result<TopKOutcome> {
    let m = view.m();
    if k == 0 || k > m {
        return Err(Error::BadK { k, m });
    }
    match mode {
        Mode::Eager => {
            let values: Vec<f64> = (0..m).map(|_| spec.sample(rng)).collect();
            let mut noise = SortedList::from_values(&values)?;
            run(view, &mut noise, k)
        }
        Mode::Lazy => {
            let mut noise = LazyNoiseArray::new(m, *spec, rng)?;
            run(view, &mut noise, k)
        }
    }
}

fn run(view: &mut MeteredView<'_>, noise: &mut dyn ScoreList, k: usize) -> Result<TopKOutcome> {
    let out = threshold_algorithm(&mut [view, noise], &Sum, k)?;
    Ok(TopKOutcome {
        items: out.items.iter().map(|&(i, _)| i).collect(),
        k,
        access_cost: out.accesses[0],
        access_cost_total: out.accesses.iter().sum(),
    })
}

/// Exponential mechanism: one item with probability proportional to
/// `exp(epsilon * h[i])`, via the lazy private threshold algorithm with
/// `Gumbel(1/epsilon)` noise and `k = 1`.
pub fn exponential_mechanism<R: Rng + ?Sized>(
    view: &mut MeteredView<'_>,
    epsilon: f64,
    rng: &mut R,
) -> Result<TopKOutcome> {
    let spec = NoiseSpec::for_epsilon(NoiseKind::Gumbel, epsilon)?;
    private_threshold_topk(view, 1, &spec, rng, Mode::Lazy)
}
