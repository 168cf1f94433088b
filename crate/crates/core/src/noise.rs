//! Noise distributions and order-statistic sampling.
//!
//! The sorted noise sequence `Z_(1) >= ... >= Z_(m)` is generated as
//! `F^{-1}(U_(1)), ..., F^{-1}(U_(m))` where `U_(j)` is the j-th largest of
//! `m` i.i.d. uniforms. Any single `U_(j)` can be drawn conditionally on the
//! ones already fixed: only the nearest fixed neighbours matter, and the
//! conditional law is an affine image of a Beta variate.

use std::collections::BTreeMap;

use rand::distr::Open01;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Laplace,
    Gumbel,
}

/// A Laplace or Gumbel distribution with scale `b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    kind: NoiseKind,
    scale: f64,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::params(format!("noise scale must be positive, got {scale}")));
        }
        Ok(NoiseSpec { kind, scale })
    }

    pub fn laplace(scale: f64) -> Result<Self> {
        NoiseSpec::new(NoiseKind::Laplace, scale)
    }

    pub fn gumbel(scale: f64) -> Result<Self> {
        NoiseSpec::new(NoiseKind::Gumbel, scale)
    }

    /// Scale `1/epsilon`, as used by the private mechanisms.
    pub fn for_epsilon(kind: NoiseKind, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::params(format!("epsilon must be positive, got {epsilon}")));
        }
        NoiseSpec::new(kind, 1.0 / epsilon)
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn density(&self, z: f64) -> f64 {
        let b = self.scale;
        match self.kind {
            NoiseKind::Laplace => (-(z.abs()) / b).exp() / (2.0 * b),
            NoiseKind::Gumbel => {
                let t = z / b;
                (-(t + (-t).exp())).exp() / b
            }
        }
    }

    pub fn cdf(&self, z: f64) -> f64 {
        let b = self.scale;
        match self.kind {
            NoiseKind::Laplace => {
                if z < 0.0 {
                    0.5 * (z / b).exp()
                } else {
                    1.0 - 0.5 * (-z / b).exp()
                }
            }
            NoiseKind::Gumbel => (-(-z / b).exp()).exp(),
        }
    }

    /// `F^{-1}(u)` in closed form; non-decreasing in `u`.
    pub fn inverse_cdf(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(u));
        }
        let b = self.scale;
        Ok(match self.kind {
            NoiseKind::Laplace => {
                if u <= 0.5 {
                    b * (2.0 * u).ln()
                } else {
                    -b * (2.0 * (1.0 - u)).ln()
                }
            }
            NoiseKind::Gumbel => -b * (-u.ln()).ln(),
        })
    }

    /// One i.i.d. draw by inversion.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = open_uniform(rng);
        self.inverse_cdf(u).expect("open uniform lies in (0, 1)")
    }
}

/// Noise value for a sampled uniform order statistic.
pub fn noise_from_uniform_order_stat(spec: &NoiseSpec, u: f64) -> Result<f64> {
    spec.inverse_cdf(u)
}

/// Uniform draw from the open interval (0, 1).
#[inline]
pub fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

/// Marsaglia-Tsang squeeze/rejection sampler for `Gamma(shape, 1)`,
/// `shape >= 1`. Acceptance probability exceeds 0.95 for every such shape.
fn sample_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    debug_assert!(shape >= 1.0);
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = open_uniform(rng);
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// Exact `Beta(alpha, beta)` draw for shapes `>= 1` as `G_a / (G_a + G_b)`.
pub fn sample_beta<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> Result<f64> {
    if !(alpha >= 1.0 && beta >= 1.0) || !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::BadShape { alpha, beta });
    }
    let a = sample_gamma(alpha, rng);
    let b = sample_gamma(beta, rng);
    Ok(a / (a + b))
}

/// Draw of `U_(j)`, the j-th largest of `m` uniforms: `Beta(m - j + 1, j)`.
pub fn sample_unconditional_order_stat<R: Rng + ?Sized>(m: usize, j: usize, rng: &mut R) -> Result<f64> {
    if j == 0 || j > m {
        return Err(Error::BadIndex { j, m });
    }
    sample_beta((m - j + 1) as f64, j as f64, rng)
}

/// Draw of `U_(j)` given its nearest fixed neighbours.
///
/// `upper` is the closest fixed position above `j` (smaller index, larger
/// value) and `lower` the closest below. A missing upper neighbour acts as
/// position 0 with value 1, a missing lower one as position `m + 1` with
/// value 0; with both sentinels in place every case reduces to
/// `u_r + (u_l - u_r) * Beta(r - j, j - l)`.
pub(crate) fn sample_between<R: Rng + ?Sized>(
    m: usize,
    j: usize,
    upper: Option<(usize, f64)>,
    lower: Option<(usize, f64)>,
    rng: &mut R,
) -> f64 {
    let (l, u_l) = upper.unwrap_or((0, 1.0));
    let (r, u_r) = lower.unwrap_or((m + 1, 0.0));
    debug_assert!(l < j && j < r);
    let x = sample_beta((r - j) as f64, (j - l) as f64, rng).expect("shapes are >= 1");
    u_r + (u_l - u_r) * x
}

/// A fixed `(position, value)` pair.
type Fixed = (usize, f64);

/// Sampled positions and their uniform order-statistic values.
///
/// Values are non-increasing in position; equal values are tolerated.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConditioningState {
    values: BTreeMap<usize, f64>,
}

impl ConditioningState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a state from `(position, value)` pairs, checking feasibility.
    pub fn from_pairs(pairs: &[(usize, f64)]) -> Result<Self> {
        let mut state = Self::new();
        for &(j, u) in pairs {
            state.insert(j, u)?;
        }
        Ok(state)
    }

    pub fn insert(&mut self, j: usize, u: f64) -> Result<()> {
        if j == 0 {
            return Err(Error::BadIndex { j, m: usize::MAX });
        }
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(u));
        }
        if self.values.contains_key(&j) {
            return Err(Error::AlreadySampled(j));
        }
        let (upper, lower) = self.neighbours(j);
        if let Some((l, u_l)) = upper {
            if u > u_l {
                return Err(Error::InfeasibleState(format!(
                    "value {u} at position {j} exceeds {u_l} at position {l}"
                )));
            }
        }
        if let Some((r, u_r)) = lower {
            if u < u_r {
                return Err(Error::InfeasibleState(format!(
                    "value {u} at position {j} is below {u_r} at position {r}"
                )));
            }
        }
        self.values.insert(j, u);
        Ok(())
    }

    pub fn get(&self, j: usize) -> Option<f64> {
        self.values.get(&j).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn pairs(&self) -> Vec<(usize, f64)> {
        self.values.iter().map(|(&j, &u)| (j, u)).collect()
    }

    pub fn max_position(&self) -> Option<usize> {
        self.values.keys().next_back().copied()
    }

    fn neighbours(&self, j: usize) -> (Option<Fixed>, Option<Fixed>) {
        let upper = self.values.range(..j).next_back().map(|(&p, &u)| (p, u));
        let lower = self.values.range(j + 1..).next().map(|(&p, &u)| (p, u));
        (upper, lower)
    }

    fn check_feasible(&self) -> Result<()> {
        let mut prev: Option<(usize, f64)> = None;
        for (&j, &u) in &self.values {
            if let Some((p, v)) = prev {
                if u > v {
                    return Err(Error::InfeasibleState(format!(
                        "value {u} at position {j} exceeds {v} at position {p}"
                    )));
                }
            }
            prev = Some((j, u));
        }
        Ok(())
    }
}

/// Draws `U_(j)` conditioned on the realization held in `state`.
///
/// The caller records the result with [`ConditioningState::insert`].
pub fn sample_conditional_order_stat<R: Rng + ?Sized>(
    state: &ConditioningState,
    m: usize,
    j: usize,
    rng: &mut R,
) -> Result<f64> {
    if j == 0 || j > m {
        return Err(Error::BadIndex { j, m });
    }
    if let Some(max) = state.max_position() {
        if max > m {
            return Err(Error::BadIndex { j: max, m });
        }
    }
    if state.values.contains_key(&j) {
        return Err(Error::AlreadySampled(j));
    }
    state.check_feasible()?;
    let (upper, lower) = state.neighbours(j);
    Ok(sample_between(m, j, upper, lower, rng))
}
