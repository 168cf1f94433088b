//! Goodness-of-fit tests and brute-force reference distributions used by the
//! verification suites.

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::model::{Histogram, ItemId};

/// Observed counts against hypothesised category probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyTable {
    pub categories: Vec<String>,
    pub observed: Vec<u64>,
    pub expected: Vec<f64>,
}

impl FrequencyTable {
    pub fn new(categories: Vec<String>, observed: Vec<u64>, expected: Vec<f64>) -> Result<Self> {
        if categories.len() != observed.len() || observed.len() != expected.len() {
            return Err(Error::params("categories, observed and expected differ in length"));
        }
        if observed.len() < 2 {
            return Err(Error::params("need at least two categories"));
        }
        if expected.iter().any(|&p| p.is_nan() || p < 0.0) {
            return Err(Error::params("probabilities must be non-negative"));
        }
        let total: f64 = expected.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::params(format!("probabilities sum to {total}, not 1")));
        }
        Ok(FrequencyTable { categories, observed, expected })
    }

    pub fn total(&self) -> u64 {
        self.observed.iter().sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

fn chi_square_tail(statistic: f64, dof: usize) -> f64 {
    if statistic <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(dof as f64).expect("dof >= 1").sf(statistic)
}

/// Pearson goodness-of-fit test with `categories - 1` degrees of freedom.
///
/// Fails with [`Error::SparseCells`] when any expected count is below 5.
pub fn chi_square_gof(table: &FrequencyTable) -> Result<ChiSquareResult> {
    let total = table.total() as f64;
    let mut statistic = 0.0;
    for (cell, (&o, &p)) in table.observed.iter().zip(&table.expected).enumerate() {
        let e = total * p;
        if e < 5.0 {
            return Err(Error::SparseCells { cell, expected: e });
        }
        statistic += (o as f64 - e).powi(2) / e;
    }
    let dof = table.observed.len() - 1;
    Ok(ChiSquareResult { statistic, dof, p_value: chi_square_tail(statistic, dof) })
}

/// [`chi_square_gof`] on unlabeled cells.
pub fn chi_square_gof_counts(observed: &[u64], expected: &[f64]) -> Result<ChiSquareResult> {
    let labels = (0..observed.len()).map(|i| i.to_string()).collect();
    chi_square_gof(&FrequencyTable::new(labels, observed.to_vec(), expected.to_vec())?)
}

/// Pearson test that two count vectors over the same categories come from
/// one distribution (a 2 x c contingency table).
///
/// Categories empty in both samples are dropped; any other cell with an
/// expected count below 5 is an error.
pub fn chi_square_homogeneity(a: &[u64], b: &[u64]) -> Result<ChiSquareResult> {
    if a.len() != b.len() {
        return Err(Error::params("count vectors differ in length"));
    }
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::params("both samples must be non-empty"));
    }
    let total = na + nb;
    let mut statistic = 0.0;
    let mut used = 0;
    for (cell, (&x, &y)) in a.iter().zip(b).enumerate() {
        let col = (x + y) as f64;
        if col == 0.0 {
            continue;
        }
        used += 1;
        for (o, n) in [(x, na), (y, nb)] {
            let e = n * col / total;
            if e < 5.0 {
                return Err(Error::SparseCells { cell, expected: e });
            }
            statistic += (o as f64 - e).powi(2) / e;
        }
    }
    if used < 2 {
        return Err(Error::params("need at least two non-empty categories"));
    }
    let dof = used - 1;
    Ok(ChiSquareResult { statistic, dof, p_value: chi_square_tail(statistic, dof) })
}

/// Survival function of the Kolmogorov distribution.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Theta-function form converges fast for small arguments.
        let c = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let sum: f64 = (1..=10).map(|j| (((2 * j - 1) as f64).powi(2) * c).exp()).sum();
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * sum).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-300 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    const MIN: usize = 25;
    let smaller = a.len().min(b.len());
    if smaller < MIN {
        return Err(Error::TooFew { min: MIN, actual: smaller });
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::params("NaN in sample"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = (na * nb / (na + nb)).sqrt();
    let lambda = (ne + 0.12 + 0.11 / ne) * d;
    Ok(KsResult { statistic: d, p_value: kolmogorov_sf(lambda) })
}

/// Brute-force sampler for a uniform order statistic under conditioning.
///
/// Repeatedly draws `m` i.i.d. uniforms, sorts them descending, and keeps
/// `U_(j)` whenever every targeted `U_(j')` lies within `window` of its
/// target. Targets are taken as given, so an infeasible configuration is
/// expressible; it ends in [`Error::Timeout`] once at least two million
/// attempts have run at an acceptance rate below `1e-6`.
pub fn rejection_order_stat_oracle<R: Rng + ?Sized>(
    m: usize,
    targets: &[(usize, f64)],
    j: usize,
    window: f64,
    rng: &mut R,
    n: usize,
) -> Result<Vec<f64>> {
    const MIN_ATTEMPTS: u64 = 2_000_000;
    const MIN_RATE: f64 = 1e-6;
    if m == 0 || m > 10 {
        return Err(Error::params(format!("rejection oracle supports 1 <= m <= 10, got {m}")));
    }
    if j == 0 || j > m {
        return Err(Error::BadIndex { j, m });
    }
    if let Some(&(p, _)) = targets.iter().find(|&&(p, _)| p == 0 || p > m) {
        return Err(Error::BadIndex { j: p, m });
    }
    if window.is_nan() || window <= 0.0 {
        return Err(Error::params("window must be positive"));
    }
    let mut out = Vec::with_capacity(n);
    let mut u = vec![0.0f64; m];
    let mut attempts: u64 = 0;
    while out.len() < n {
        attempts += 1;
        for x in u.iter_mut() {
            *x = rng.random();
        }
        u.sort_unstable_by(|x, y| y.total_cmp(x));
        if targets.iter().all(|&(p, t)| (u[p - 1] - t).abs() <= window) {
            out.push(u[j - 1]);
        }
        if attempts >= MIN_ATTEMPTS && attempts.is_multiple_of(MIN_ATTEMPTS) {
            let rate = out.len() as f64 / attempts as f64;
            if rate < MIN_RATE {
                return Err(Error::Timeout { attempts, rate });
            }
        }
    }
    Ok(out)
}

/// `p[i] = exp(eps h[i]) / sum_j exp(eps h[j])`, shifted by the maximum
/// score so large counts do not overflow.
pub fn exponential_mechanism_exact_probs(h: &Histogram, epsilon: f64) -> Result<Vec<f64>> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::params(format!("epsilon must be positive, got {epsilon}")));
    }
    let top = *h.scores().iter().max().expect("histogram is non-empty");
    let weights: Vec<f64> = h.scores().iter().map(|&s| (-epsilon * (top - s) as f64).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Exact distribution of the unordered top-k set under i.i.d. Gumbel noise
/// of scale `1/epsilon`, by summing sequential-softmax probabilities over
/// every ordering. Sets are listed in lexicographic order of sorted ids.
///
/// Work grows like `m^k`, so keep `m` and `k` small.
pub fn gumbel_topk_set_probs(h: &Histogram, k: usize, epsilon: f64) -> Result<Vec<(Vec<ItemId>, f64)>> {
    let m = h.m();
    if k == 0 || k > m {
        return Err(Error::BadK { k, m });
    }
    if m > 20 {
        return Err(Error::params("exact set enumeration supports m <= 20"));
    }
    let weights = exponential_mechanism_exact_probs(h, epsilon)?;
    let mut sets = Vec::new();
    let mut chosen = Vec::with_capacity(k);
    subsets(m, k, 0, &mut chosen, &mut |set| {
        let mut p = 0.0;
        let mut order = set.to_vec();
        permute(&mut order, 0, &mut |seq| {
            let mut rest: f64 = 1.0;
            let mut q = 1.0;
            for &i in seq {
                q *= weights[i] / rest;
                rest -= weights[i];
            }
            p += q;
        });
        sets.push((set.iter().map(|&i| ItemId(i + 1)).collect(), p));
    });
    Ok(sets)
}

fn subsets(m: usize, k: usize, from: usize, chosen: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
    if chosen.len() == k {
        visit(chosen);
        return;
    }
    for i in from..m {
        chosen.push(i);
        subsets(m, k, i + 1, chosen, visit);
        chosen.pop();
    }
}

fn permute(items: &mut [usize], at: usize, visit: &mut dyn FnMut(&[usize])) {
    if at == items.len() {
        visit(items);
        return;
    }
    for i in at..items.len() {
        items.swap(at, i);
        permute(items, at + 1, visit);
        items.swap(at, i);
    }
}
