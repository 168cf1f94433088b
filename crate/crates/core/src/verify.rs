//! Statistical verification suites.
//!
//! Each check runs a fixed-seed experiment and compares what it observes
//! with a stated bound. A failing check is rerun once with a second fixed
//! seed before it is reported as a failure, so an isolated unlucky draw at
//! the 0.001 level does not fail the suite.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::algorithms::{
    accuracy_bound, exponential_mechanism, oneshot_private_topk, private_threshold_topk, threshold_algorithm, Mode,
    ScoreList, SortedList, Sum, DEFAULT_ACCURACY_CONSTANT,
};
use crate::error::{Error, Result};
use crate::instances::{gen_sorted_hard, InstanceFamily, InstanceFamilySpec};
use crate::lazy::LazyNoiseArray;
use crate::model::{accuracy_error, is_accurate, Histogram, ItemId};
use crate::noise::{sample_conditional_order_stat, ConditioningState, NoiseKind, NoiseSpec};
use crate::rng;
use crate::stats::{
    chi_square_gof_counts, chi_square_homogeneity, exponential_mechanism_exact_probs, gumbel_topk_set_probs,
    ks_two_sample, rejection_order_stat_oracle,
};

/// Significance level for every distributional test.
pub const SIGNIFICANCE: f64 = 0.001;

/// Offset applied to the seed for the single retry.
pub const RETRY_SEED_OFFSET: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Oracle,
    Equivalence,
    Accesscost,
    Accuracy,
    Expmech,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Oracle, Suite::Equivalence, Suite::Accesscost, Suite::Accuracy, Suite::Expmech];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Oracle => "oracle",
            Suite::Equivalence => "equivalence",
            Suite::Accesscost => "accesscost",
            Suite::Accuracy => "accuracy",
            Suite::Expmech => "expmech",
        }
    }

    /// Checks run by this suite, in order.
    pub fn checks(self) -> &'static [Check] {
        match self {
            Suite::Oracle => &[Check::ConditionalSampler, Check::BetaTransforms, Check::LazyScript],
            Suite::Equivalence => &[Check::OutputEquivalence, Check::ThresholdExactness],
            Suite::Accesscost => &[Check::AccessCost, Check::ExpMechCost, Check::TailBound, Check::Separation],
            Suite::Accuracy => &[Check::Accuracy],
            Suite::Expmech => &[Check::ExpMechExactness],
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::params(format!("unknown suite '{s}'")))
    }
}

/// One verifiable claim. The numbered ones are the acceptance criteria.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Check {
    AccessCost,
    ExpMechCost,
    OutputEquivalence,
    ExpMechExactness,
    ConditionalSampler,
    BetaTransforms,
    ThresholdExactness,
    TailBound,
    Accuracy,
    Separation,
    LazyScript,
}

impl Check {
    pub const CRITERIA: [Check; 10] = [
        Check::AccessCost,
        Check::ExpMechCost,
        Check::OutputEquivalence,
        Check::ExpMechExactness,
        Check::ConditionalSampler,
        Check::BetaTransforms,
        Check::ThresholdExactness,
        Check::TailBound,
        Check::Accuracy,
        Check::Separation,
    ];

    pub fn number(self) -> Option<u8> {
        Check::CRITERIA.iter().position(|&c| c == self).map(|i| i as u8 + 1)
    }

    pub fn title(self) -> &'static str {
        match self {
            Check::AccessCost => "private TA access cost within 2 sqrt(mk) + sqrt(2m)",
            Check::ExpMechCost => "exponential mechanism access cost scales as sqrt(m)",
            Check::OutputEquivalence => "lazy, eager and one-shot output sets agree",
            Check::ExpMechExactness => "exponential mechanism frequencies match softmax",
            Check::ConditionalSampler => "conditional order statistic matches rejection oracle",
            Check::BetaTransforms => "beta transforms match target moments",
            Check::ThresholdExactness => "threshold algorithm equals brute-force top-k",
            Check::TailBound => "access cost tail within the round-count bound",
            Check::Accuracy => "one-shot Laplace accuracy and 1/eps error scaling",
            Check::Separation => "sorted-only consumer vs lazy private TA on sorted_hard",
            Check::LazyScript => "lazy oracle mixed access script matches eager array",
        }
    }

    pub fn run(self, seed: u64) -> Result<CheckReport> {
        with_retry(self, seed, |s| match self {
            Check::AccessCost => access_cost(s),
            Check::ExpMechCost => exp_mech_cost(s),
            Check::OutputEquivalence => output_equivalence(s),
            Check::ExpMechExactness => exp_mech_exactness(s),
            Check::ConditionalSampler => conditional_sampler(s),
            Check::BetaTransforms => beta_transforms(s),
            Check::ThresholdExactness => threshold_exactness(s),
            Check::TailBound => tail_bound(s),
            Check::Accuracy => accuracy(s),
            Check::Separation => separation(s),
            Check::LazyScript => lazy_script(s),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub number: Option<u8>,
    pub name: String,
    pub observed: String,
    pub bound: String,
    pub pass: bool,
    /// 1, or 2 when the retry seed was needed.
    pub attempts: u32,
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let label = self.number.map_or_else(|| "[-]".to_string(), |n| format!("[{n}]"));
        write!(f, "{verdict} {label} {}: {} (bound: {})", self.name, self.observed, self.bound)?;
        if self.attempts > 1 {
            write!(f, " [retried]")?;
        }
        Ok(())
    }
}

/// Result of a single attempt.
struct Outcome {
    observed: String,
    bound: String,
    pass: bool,
}

fn with_retry(check: Check, seed: u64, run: impl Fn(u64) -> Result<Outcome>) -> Result<CheckReport> {
    let mut attempts = 1;
    let mut out = run(seed)?;
    if !out.pass {
        attempts = 2;
        out = run(seed.wrapping_add(RETRY_SEED_OFFSET))?;
    }
    Ok(CheckReport {
        number: check.number(),
        name: check.title().to_string(),
        observed: out.observed,
        bound: out.bound,
        pass: out.pass,
        attempts,
    })
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<CheckReport>> {
    suite.checks().iter().map(|c| c.run(seed)).collect()
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn sample_var(xs: &[f64]) -> f64 {
    let (_, se) = mean_se(xs);
    se * se * xs.len() as f64
}

/// `trials` independent runs, each on its own stream `base + t`.
fn par_trials<T: Send>(
    seed: u64,
    base: u64,
    trials: usize,
    run: impl Fn(&mut rng::TrialRng) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|t| run(&mut rng::trial_stream(seed, base + t)))
        .collect()
}

fn cost_limit(m: usize, k: usize) -> f64 {
    2.0 * ((m * k) as f64).sqrt() + 2f64.sqrt() * (m as f64).sqrt()
}

fn lazy_costs(h: &Histogram, k: usize, spec: NoiseSpec, seed: u64, base: u64, trials: usize) -> Result<Vec<f64>> {
    par_trials(seed, base, trials, |rng| {
        let out = private_threshold_topk(&mut h.view(), k, &spec, rng, Mode::Lazy)?;
        Ok(out.access_cost as f64)
    })
}

fn access_cost(seed: u64) -> Result<Outcome> {
    let (m, n, trials) = (100_000, 1_000_000, 200);
    let mut worst = (f64::NEG_INFINITY, String::new());
    let mut pass = true;
    let mut base = 0;
    for family in [InstanceFamily::Zipf, InstanceFamily::BothAccessHard] {
        for k in [1, 10, 100] {
            let h = InstanceFamilySpec::new(family, m, n, k).with_seed(seed).generate()?.histogram;
            for kind in [NoiseKind::Gumbel, NoiseKind::Laplace] {
                let costs = lazy_costs(&h, k, NoiseSpec::new(kind, 1.0)?, seed, base, trials)?;
                base += trials as u64;
                let (mean, se) = mean_se(&costs);
                let limit = cost_limit(m, k) + 3.0 * se;
                pass &= mean <= limit;
                let ratio = mean / limit;
                if ratio > worst.0 {
                    let label = format!("{family} k={k} {kind:?}: mean {mean:.1} vs limit {limit:.1}");
                    worst = (ratio, label);
                }
            }
        }
    }
    Ok(Outcome {
        observed: format!("worst mean/limit {:.3} ({})", worst.0, worst.1),
        bound: "mean <= 2 sqrt(mk) + sqrt(2) sqrt(m) + 3 SE in all 12 settings".into(),
        pass,
    })
}

fn exp_mech_cost(seed: u64) -> Result<Outcome> {
    let (n, trials) = (1_000_000, 500);
    let sizes = [10_000, 40_000, 160_000];
    let mut means = Vec::new();
    let mut pass = true;
    for (i, &m) in sizes.iter().enumerate() {
        let h = InstanceFamilySpec::new(InstanceFamily::BothAccessHard, m, n, 1).with_seed(seed).generate()?.histogram;
        let costs = par_trials(seed, (i * trials) as u64, trials, |rng| {
            Ok(exponential_mechanism(&mut h.view(), 1.0, rng)?.access_cost as f64)
        })?;
        let (mean, se) = mean_se(&costs);
        pass &= mean <= cost_limit(m, 1) + 3.0 * se;
        means.push(mean);
    }
    let ratios: Vec<f64> = means.windows(2).map(|w| w[1] / w[0]).collect();
    pass &= ratios.iter().all(|r| (1.6..=2.4).contains(r));
    Ok(Outcome {
        observed: format!(
            "means {:.1}/{:.1}/{:.1}, ratios {:.3}/{:.3}",
            means[0], means[1], means[2], ratios[0], ratios[1]
        ),
        bound: "mean <= (2 + sqrt 2) sqrt(m) + 3 SE; mean(4m)/mean(m) in [1.6, 2.4]".into(),
        pass,
    })
}

fn output_equivalence(seed: u64) -> Result<Outcome> {
    let h = Histogram::new(vec![5, 4, 3, 2, 1, 0], 5)?;
    let (k, trials) = (2, 100_000);
    let spec = NoiseSpec::gumbel(1.0)?;
    let exact = gumbel_topk_set_probs(&h, k, 1.0)?;
    let cell: HashMap<Vec<ItemId>, usize> = exact.iter().enumerate().map(|(i, (s, _))| (s.clone(), i)).collect();
    let probs: Vec<f64> = exact.iter().map(|(_, p)| *p).collect();
    let count = |base: u64, f: &(dyn Fn(&mut rng::TrialRng) -> Result<Vec<ItemId>> + Sync)| -> Result<Vec<u64>> {
        let sets = par_trials(seed, base, trials, |rng| {
            let mut s = f(rng)?;
            s.sort_unstable();
            Ok(cell[&s])
        })?;
        let mut counts = vec![0u64; cell.len()];
        for c in sets {
            counts[c] += 1;
        }
        Ok(counts)
    };
    let oneshot = count(0, &|rng| Ok(oneshot_private_topk(&h, k, &spec, rng)?.items))?;
    let eager = count(trials as u64, &|rng| {
        Ok(private_threshold_topk(&mut h.view(), k, &spec, rng, Mode::Eager)?.items)
    })?;
    let lazy = count(2 * trials as u64, &|rng| {
        Ok(private_threshold_topk(&mut h.view(), k, &spec, rng, Mode::Lazy)?.items)
    })?;
    let pairs = [
        ("lazy/eager", chi_square_homogeneity(&lazy, &eager)?.p_value),
        ("lazy/oneshot", chi_square_homogeneity(&lazy, &oneshot)?.p_value),
        ("eager/oneshot", chi_square_homogeneity(&eager, &oneshot)?.p_value),
    ];
    let fits = [
        ("oneshot", chi_square_gof_counts(&oneshot, &probs)?.p_value),
        ("eager", chi_square_gof_counts(&eager, &probs)?.p_value),
        ("lazy", chi_square_gof_counts(&lazy, &probs)?.p_value),
    ];
    let pass = pairs.iter().chain(&fits).all(|(_, p)| *p > SIGNIFICANCE);
    let show = |xs: &[(&str, f64)]| xs.iter().map(|(n, p)| format!("{n} p={p:.4}")).collect::<Vec<_>>().join(", ");
    Ok(Outcome {
        observed: format!("pairwise {}; vs exact {}", show(&pairs), show(&fits)),
        bound: format!("every p > {SIGNIFICANCE} over 15 sets, N = {trials} each"),
        pass,
    })
}

fn exp_mech_exactness(seed: u64) -> Result<Outcome> {
    let h = Histogram::new(vec![2, 1, 0], 2)?;
    let trials = 100_000;
    let probs = exponential_mechanism_exact_probs(&h, 1.0)?;
    let literal = [0.66524, 0.24473, 0.09003];
    let mut pass = probs.iter().zip(literal).all(|(p, q)| (p - q).abs() < 5e-6);
    let spec = NoiseSpec::gumbel(1.0)?;
    let mut parts = Vec::new();
    for (i, mode) in [Mode::Lazy, Mode::Eager].into_iter().enumerate() {
        let picks = par_trials(seed, (i * trials) as u64, trials, |rng| {
            Ok(private_threshold_topk(&mut h.view(), 1, &spec, rng, mode)?.items[0].get() - 1)
        })?;
        let mut counts = vec![0u64; 3];
        for p in picks {
            counts[p] += 1;
        }
        let p = chi_square_gof_counts(&counts, &probs)?.p_value;
        pass &= p > SIGNIFICANCE;
        let freq: Vec<String> = counts.iter().map(|&c| format!("{:.5}", c as f64 / trials as f64)).collect();
        parts.push(format!("{mode:?} ({}) p={p:.4}", freq.join(", ")));
    }
    Ok(Outcome {
        observed: parts.join("; "),
        bound: format!("chi-square p > {SIGNIFICANCE} against (0.66524, 0.24473, 0.09003)"),
        pass,
    })
}

fn conditional_sampler(seed: u64) -> Result<Outcome> {
    let (m, j, window, n) = (10, 4, 0.01, 10_000);
    let scenarios: [(&str, &[(usize, f64)]); 3] = [
        ("unconditioned", &[]),
        ("J={2}", &[(2, 0.8)]),
        ("J={2,7}", &[(2, 0.8), (7, 0.3)]),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, targets) in scenarios {
        let state = ConditioningState::from_pairs(targets)?;
        let direct: Vec<f64> =
            (0..n).map(|_| sample_conditional_order_stat(&state, m, j, &mut rng)).collect::<Result<_>>()?;
        let reference = rejection_order_stat_oracle(m, targets, j, window, &mut rng, n)?;
        let p = ks_two_sample(&direct, &reference)?.p_value;
        pass &= p > SIGNIFICANCE;
        parts.push(format!("{label} p={p:.4}"));
    }
    Ok(Outcome {
        observed: parts.join(", "),
        bound: format!("KS p > {SIGNIFICANCE}, m=10, j=4, window 0.01, N={n}"),
        pass,
    })
}

/// Moments of a density on `[a, b]` by composite Simpson's rule.
struct Moments {
    mass: f64,
    mean: f64,
    var: f64,
    fourth: f64,
}

/// Label, expected moments and the fixed positions that produce them.
type Claim = (&'static str, Moments, Vec<(usize, f64)>);

fn moments(density: impl Fn(f64) -> f64, a: f64, b: f64) -> Moments {
    let steps = 20_000;
    let h = (b - a) / steps as f64;
    let integrate = |g: &dyn Fn(f64) -> f64| {
        let mut s = g(a) + g(b);
        for i in 1..steps {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(x);
        }
        s * h / 3.0
    };
    let mass = integrate(&|x| density(x));
    let mean = integrate(&|x| x * density(x));
    let var = integrate(&|x| (x - mean).powi(2) * density(x));
    let fourth = integrate(&|x| (x - mean).powi(4) * density(x));
    Moments { mass, mean, var, fourth }
}

fn ln_factorial(n: usize) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

fn beta_transforms(seed: u64) -> Result<Outcome> {
    let (m, j, n) = (10usize, 4usize, 100_000);
    let (l, u_l, r, u_r) = (2usize, 0.8, 7usize, 0.3);
    // Order-statistic densities written out directly from the joint
    // density of uniform order statistics, independent of the sampler.
    let unconditioned = move |y: f64| {
        let c = ln_factorial(m) - ln_factorial(j - 1) - ln_factorial(m - j);
        c.exp() * y.powi((m - j) as i32) * (1.0 - y).powi((j - 1) as i32)
    };
    let below = move |y: f64| {
        let c = ln_factorial(m - l) - ln_factorial(j - l - 1) - ln_factorial(m - j);
        c.exp() * y.powi((m - j) as i32) * (u_l - y).powi((j - l - 1) as i32) / u_l.powi((m - l) as i32)
    };
    let between = move |y: f64| {
        let c = ln_factorial(r - l - 1) - ln_factorial(j - l - 1) - ln_factorial(r - j - 1);
        c.exp() * (y - u_r).powi((r - j - 1) as i32) * (u_l - y).powi((j - l - 1) as i32)
            / (u_l - u_r).powi((r - l - 1) as i32)
    };
    let claims: [Claim; 3] = [
        ("Beta(m-j+1, j)", moments(unconditioned, 0.0, 1.0), vec![]),
        ("u_l Beta(m-j+1, j-l)", moments(below, 0.0, u_l), vec![(l, u_l)]),
        ("u_r + (u_l-u_r) Beta(r-j, j-l)", moments(between, u_r, u_l), vec![(l, u_l), (r, u_r)]),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, target, pairs) in claims {
        let state = ConditioningState::from_pairs(&pairs)?;
        let xs: Vec<f64> = (0..n).map(|_| sample_conditional_order_stat(&state, m, j, &mut rng)).collect::<Result<_>>()?;
        let (mean, se_mean) = mean_se(&xs);
        let var = sample_var(&xs);
        let se_var = ((target.fourth - target.var * target.var) / n as f64).sqrt();
        let z_mean = (mean - target.mean) / se_mean;
        let z_var = (var - target.var) / se_var;
        pass &= (target.mass - 1.0).abs() < 1e-6 && z_mean.abs() <= 3.0 && z_var.abs() <= 3.0;
        parts.push(format!(
            "{label}: mean {mean:.5} vs {:.5} ({z_mean:+.2} SE), var {var:.6} vs {:.6} ({z_var:+.2} SE)",
            target.mean, target.var
        ));
    }
    Ok(Outcome {
        observed: parts.join("; "),
        bound: format!("|z| <= 3 for mean and variance, N = {n}, m=10, j=4"),
        pass,
    })
}

fn threshold_exactness(seed: u64) -> Result<Outcome> {
    let instances = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut matches = 0;
    for _ in 0..instances {
        let m = rng.random_range(1..=50);
        let n = rng.random_range(1..=20u64);
        let k = rng.random_range(1..=m.min(5));
        let scores: Vec<u64> = (0..m).map(|_| rng.random_range(0..=n)).collect();
        let second: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * n as f64).collect();
        let h = Histogram::new(scores, n)?;
        let mut l1 = h.view();
        let mut l2 = SortedList::from_values(&second)?;
        let out = threshold_algorithm(&mut [&mut l1, &mut l2], &Sum, k)?;

        let mut brute: Vec<(ItemId, f64)> =
            (0..m).map(|i| (ItemId(i + 1), h.scores()[i] as f64 + second[i])).collect();
        brute.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        brute.truncate(k);
        if out.items == brute {
            matches += 1;
        }
    }
    Ok(Outcome {
        observed: format!("{matches}/{instances} exact matches"),
        bound: "all instances match (t=2, f=sum, m <= 50, k <= 5)".into(),
        pass: matches == instances,
    })
}

/// `(e^k / k^k) (r^2/m)^k / e^{r^2/m}`.
pub fn tail_bound_value(m: usize, k: usize, r: f64) -> f64 {
    let k_f = k as f64;
    let x = r * r / m as f64;
    (k_f - k_f * k_f.ln() + k_f * x.ln() - x).exp()
}

fn tail_bound(seed: u64) -> Result<Outcome> {
    let (m, n, trials) = (10_000, 1_000_000, 10_000);
    let mut pass = true;
    let mut parts = Vec::new();
    let mut base = 0;
    for k in [1, 5] {
        let h = InstanceFamilySpec::new(InstanceFamily::BothAccessHard, m, n, k).with_seed(seed).generate()?.histogram;
        let r = 2.0 * ((m * k) as f64).sqrt();
        let formula = tail_bound_value(m, k, r);
        let allowed = formula + 3.0 * (formula * (1.0 - formula) / trials as f64).sqrt();
        for kind in [NoiseKind::Gumbel, NoiseKind::Laplace] {
            let costs = lazy_costs(&h, k, NoiseSpec::new(kind, 1.0)?, seed, base, trials)?;
            base += trials as u64;
            let freq = costs.iter().filter(|&&c| c >= 2.0 * r).count() as f64 / trials as f64;
            pass &= freq <= allowed;
            parts.push(format!("k={k} {kind:?}: P[cost >= {:.0}] = {freq:.5} vs {allowed:.5}", 2.0 * r));
        }
    }
    Ok(Outcome {
        observed: parts.join("; "),
        bound: "empirical tail <= formula + 3 binomial SE at r = 2 sqrt(mk), both_access_hard".into(),
        pass,
    })
}

/// Instance used by the accuracy check: ten items at each score 100, 99,
/// ..., 1. The error is integer valued, so its 95th percentile is only
/// meaningful when the error CDF crosses 0.95 well away from an integer;
/// with this many items per level it does so at every tested epsilon.
pub fn accuracy_instance() -> Result<Histogram> {
    let (m, copies, n) = (1000, 10, 100);
    Histogram::new((0..m).map(|i| n - (i / copies) as u64).collect(), n)
}

/// Nearest-rank empirical quantile.
fn quantile(sorted: &[u64], q: f64) -> u64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

fn accuracy(seed: u64) -> Result<Outcome> {
    let (k, beta, trials) = (5, 0.05, 10_000);
    let h = accuracy_instance()?;
    let mut pass = true;
    let mut parts = Vec::new();
    let mut p95 = Vec::new();
    for (i, eps) in [0.5, 1.0, 2.0].into_iter().enumerate() {
        let alpha = accuracy_bound(h.m(), beta, eps, DEFAULT_ACCURACY_CONSTANT)?;
        let spec = NoiseSpec::for_epsilon(NoiseKind::Laplace, eps)?;
        let runs = par_trials(seed, (i * trials) as u64, trials, |rng| {
            let out = oneshot_private_topk(&h, k, &spec, rng)?;
            Ok((accuracy_error(&h, &out.items, k)?, is_accurate(&h, &out.items, alpha, k)?))
        })?;
        let violations = runs.iter().filter(|r| !r.1).count() as f64 / trials as f64;
        let mut errors: Vec<u64> = runs.iter().map(|r| r.0).collect();
        errors.sort_unstable();
        let q = quantile(&errors, 0.95);
        pass &= violations <= beta;
        p95.push(q as f64);
        parts.push(format!("eps={eps}: alpha {alpha:.2}, violations {violations:.4}, p95 error {q}"));
    }
    let ratios: Vec<f64> = p95.windows(2).map(|w| w[0] / w[1]).collect();
    pass &= ratios.iter().all(|r| (1.7..=2.3).contains(r));
    Ok(Outcome {
        observed: format!("{}; p95 ratios {:.2}/{:.2}", parts.join("; "), ratios[0], ratios[1]),
        bound: format!("violations <= {beta} at alpha = 3 ln(m/beta)/eps; p95(eps)/p95(2 eps) in [1.7, 2.3]"),
        pass,
    })
}

fn separation(seed: u64) -> Result<Outcome> {
    let (m, n, k, trials) = (10_000, 1000, 10, 100);
    let mut gen_rng = rng::stream(seed, rng::INSTANCE_STREAM);
    let (h, low) = gen_sorted_hard(m, n, k, &mut gen_rng)?;
    let block = m / 2;
    let needed = block - block / k;
    let mut view = h.view();
    let first_low = loop {
        let (item, _) = view.sorted_access()?;
        if low.binary_search(&item).is_ok() {
            break view.access_count();
        }
    };
    let sorted_reads = first_low - 1;
    let costs = lazy_costs(&h, k, NoiseSpec::gumbel(1.0)?, seed, 0, trials)?;
    let (mean, _) = mean_se(&costs);
    let limit = 0.1 * needed as f64;
    Ok(Outcome {
        observed: format!(
            "sorted-only reads {sorted_reads} before the first low item; lazy private TA mean cost {mean:.1}"
        ),
        bound: format!("sorted-only >= {needed}; private TA mean < {limit:.0}"),
        pass: sorted_reads >= needed as u64 && mean < limit,
    })
}

/// Eager noise array read by the same script as the lazy oracle.
fn eager_array<R: Rng>(m: usize, spec: &NoiseSpec, rng: &mut R) -> Result<SortedList> {
    let values: Vec<f64> = (0..m).map(|_| spec.sample(rng)).collect();
    SortedList::from_values(&values)
}

/// Script `sorted, random(4), sorted, random(1)`. Returns the two items
/// from sorted access and the four values read.
fn run_script(list: &mut dyn ScoreList) -> Result<([usize; 2], [f64; 4])> {
    let (a, za) = list.next_sorted()?;
    let z4 = list.lookup(ItemId(4))?;
    let (b, zb) = list.next_sorted()?;
    let z1 = list.lookup(ItemId(1))?;
    Ok(([a.get(), b.get()], [za, z4, zb, z1]))
}

/// Exact distribution of the script's `(item, item, pos 4, pos 1)` pattern
/// under a uniformly random assignment of items to positions.
fn script_pattern_probs(m: usize) -> HashMap<[usize; 4], f64> {
    let mut perm: Vec<usize> = (1..=m).collect();
    let mut probs = HashMap::new();
    let total: f64 = (1..=m).map(|x| x as f64).product();
    visit_perms(&mut perm, 0, &mut |p| {
        let pos = |item: usize| p.iter().position(|&x| x == item).unwrap() + 1;
        *probs.entry([p[0], p[1], pos(4), pos(1)]).or_insert(0.0) += 1.0 / total;
    });
    probs
}

fn visit_perms(items: &mut [usize], at: usize, visit: &mut dyn FnMut(&[usize])) {
    if at == items.len() {
        visit(items);
        return;
    }
    for i in at..items.len() {
        items.swap(at, i);
        visit_perms(items, at + 1, visit);
        items.swap(at, i);
    }
}

struct ScriptLazy<R>(LazyNoiseArray<R>);

impl<R: Rng> ScoreList for ScriptLazy<R> {
    fn len(&self) -> usize {
        self.0.m()
    }

    fn next_sorted(&mut self) -> Result<(ItemId, f64)> {
        self.0.sorted_access()
    }

    fn lookup(&mut self, item: ItemId) -> Result<f64> {
        self.0.random_access(item).map(|(_, z)| z)
    }

    fn accesses(&self) -> u64 {
        self.0.access_count()
    }
}

fn lazy_script(seed: u64) -> Result<Outcome> {
    let (m, trials) = (6, 100_000);
    let spec = NoiseSpec::gumbel(1.0)?;
    let lazy = par_trials(seed, 0, trials, |rng| {
        let mut arr = ScriptLazy(LazyNoiseArray::new(m, spec, &mut *rng)?);
        let (items, values) = run_script(&mut arr)?;
        let pos = |i| arr.0.position_of(ItemId(i)).expect("touched item is placed");
        Ok(([items[0], items[1], pos(4), pos(1)], values))
    })?;
    let eager = par_trials(seed, trials as u64, trials, |rng| {
        let mut list = eager_array(m, &spec, rng)?;
        let (items, values) = run_script(&mut list)?;
        let pos = |i| list.position_of(ItemId(i)).expect("item in range");
        Ok(([items[0], items[1], pos(4), pos(1)], values))
    })?;

    let probs = script_pattern_probs(m);
    let mut keys: Vec<[usize; 4]> = probs.keys().copied().collect();
    keys.sort_unstable();
    let index: HashMap<[usize; 4], usize> = keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    let expected: Vec<f64> = keys.iter().map(|k| probs[k]).collect();
    let tally = |runs: &[([usize; 4], [f64; 4])]| {
        let mut counts = vec![0u64; keys.len()];
        for (p, _) in runs {
            counts[index[p]] += 1;
        }
        counts
    };
    let p_lazy = chi_square_gof_counts(&tally(&lazy), &expected)?.p_value;
    let p_eager = chi_square_gof_counts(&tally(&eager), &expected)?.p_value;
    let mut ks = Vec::new();
    for step in 0..4 {
        let a: Vec<f64> = lazy.iter().map(|r| r.1[step]).collect();
        let b: Vec<f64> = eager.iter().map(|r| r.1[step]).collect();
        ks.push(ks_two_sample(&a, &b)?.p_value);
    }
    let pass = p_lazy > SIGNIFICANCE && p_eager > SIGNIFICANCE && ks.iter().all(|&p| p > SIGNIFICANCE);
    let ks_text: Vec<String> = ks.iter().map(|p| format!("{p:.4}")).collect();
    Ok(Outcome {
        observed: format!(
            "pattern fit p lazy {p_lazy:.4}, eager {p_eager:.4} over {} cells; value KS p {}",
            keys.len(),
            ks_text.join("/")
        ),
        bound: format!("every p > {SIGNIFICANCE}, N = {trials}"),
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_formula_examples() {
        let r1 = 2.0 * 100.0;
        assert!((tail_bound_value(10_000, 1, r1) - 4.0 / std::f64::consts::E.powi(3)).abs() < 1e-12);
        let r5 = 2.0 * 50_000f64.sqrt();
        let expected = (4.0 / std::f64::consts::E.powi(3)).powi(5);
        assert!((tail_bound_value(10_000, 5, r5) - expected).abs() < 1e-15);
    }

    #[test]
    fn density_quadrature_matches_beta_moments() {
        // Beta(7, 4): mean 7/11, variance 28/(121 * 12)
        let mm = moments(|y| {
            let c = ln_factorial(10) - ln_factorial(3) - ln_factorial(6);
            c.exp() * y.powi(6) * (1.0 - y).powi(3)
        }, 0.0, 1.0);
        assert!((mm.mass - 1.0).abs() < 1e-10);
        assert!((mm.mean - 7.0 / 11.0).abs() < 1e-10);
        assert!((mm.var - 28.0 / (121.0 * 12.0)).abs() < 1e-10);
    }

    #[test]
    fn script_probabilities_sum_to_one() {
        let probs = script_pattern_probs(6);
        assert!((probs.values().sum::<f64>() - 1.0).abs() < 1e-12);
        // item 4 read second by sorted access: its position is 2
        assert!(probs.keys().filter(|k| k[1] == 4).all(|k| k[2] == 2));
    }

    #[test]
    fn quantile_is_nearest_rank() {
        let xs: Vec<u64> = (1..=100).collect();
        assert_eq!(quantile(&xs, 0.95), 95);
        assert_eq!(quantile(&xs, 1.0), 100);
        assert_eq!(quantile(&[3], 0.5), 3);
    }

    #[test]
    fn suites_cover_every_criterion_once() {
        let mut seen: Vec<u8> = Suite::ALL.iter().flat_map(|s| s.checks()).filter_map(|c| c.number()).collect();
        seen.sort_unstable();
        assert_eq!(seen, (1..=10).collect::<Vec<u8>>());
        assert_eq!("accesscost".parse::<Suite>().unwrap(), Suite::Accesscost);
    }

    #[test]
    fn report_line_format() {
        let r = CheckReport {
            number: Some(7),
            name: "x".into(),
            observed: "1/1".into(),
            bound: "all".into(),
            pass: true,
            attempts: 1,
        };
        assert_eq!(r.to_string(), "PASS [7] x: 1/1 (bound: all)");
    }
}
