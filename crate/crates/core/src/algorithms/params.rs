//! Privacy and utility parameters of one-shot noisy top-k.

use crate::error::{Error, Result};

/// Harness constant for [`accuracy_bound`]; the underlying guarantee is
/// only asymptotic.
pub const DEFAULT_ACCURACY_CONSTANT: f64 = 3.0;

/// Laplace(1/eps) noise: `(pure, approximate)` privacy levels.
///
/// Pure DP is `2 k eps`. The approximate level `8 eps sqrt(k ln(m/delta))`
/// at the given `delta` is reported only when `m >= 2`, `0 < delta <= 0.05`
/// and the value is at most 0.2; otherwise it is `None`.
pub fn laplace_privacy_params(k: usize, eps_base: f64, delta: f64, m: usize) -> Result<(f64, Option<f64>)> {
    if !(eps_base > 0.0 && eps_base.is_finite()) {
        return Err(Error::params(format!("epsilon must be positive, got {eps_base}")));
    }
    if k == 0 || m == 0 {
        return Err(Error::params("k and m must be positive"));
    }
    if delta.is_nan() || delta < 0.0 {
        return Err(Error::params(format!("delta must be non-negative, got {delta}")));
    }
    let pure = 2.0 * k as f64 * eps_base;
    let approx = (m >= 2 && delta > 0.0 && delta <= 0.05)
        .then(|| 8.0 * eps_base * (k as f64 * (m as f64 / delta).ln()).sqrt())
        .filter(|&e| e <= 0.2);
    Ok((pure, approx))
}

/// Gumbel(1/eps) noise: `min{k eps, k eps tanh(eps/2) + eps sqrt(k ln(1/delta))}`.
pub fn gumbel_privacy_params(k: usize, eps_base: f64, delta: f64) -> Result<f64> {
    if !(eps_base > 0.0 && eps_base.is_finite()) {
        return Err(Error::params(format!("epsilon must be positive, got {eps_base}")));
    }
    if k == 0 {
        return Err(Error::params("k must be positive"));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::params(format!("delta must lie in [0, 1], got {delta}")));
    }
    let k = k as f64;
    let basic = k * eps_base;
    let ratio = (eps_base.exp() - 1.0) / (eps_base.exp() + 1.0);
    let advanced = k * eps_base * ratio + eps_base * (k * (1.0 / delta).ln()).sqrt();
    Ok(basic.min(advanced))
}

/// Error target `c ln(m/beta) / eps` used by the accuracy harness.
pub fn accuracy_bound(m: usize, beta: f64, eps_base: f64, c: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::params(format!("beta must lie in (0, 1), got {beta}")));
    }
    if eps_base.is_nan() || eps_base <= 0.0 || m == 0 || c.is_nan() || c <= 0.0 {
        return Err(Error::params("m, epsilon and c must be positive"));
    }
    Ok(c * (m as f64 / beta).ln() / eps_base)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplace_examples() {
        let (pure, _) = laplace_privacy_params(1, 0.1, 0.01, 10).unwrap();
        assert!((pure - 0.2).abs() < 1e-12);
        let (_, approx) = laplace_privacy_params(3, 0.001, 0.0, 100).unwrap();
        assert_eq!(approx, None);
        let (pure, approx) = laplace_privacy_params(4, 0.001, 0.01, 100).unwrap();
        assert!((pure - 0.008).abs() < 1e-15);
        let expected = 8.0 * 0.001 * (4.0 * 10_000f64.ln()).sqrt();
        assert!((approx.unwrap() - expected).abs() < 1e-15);
        assert!((approx.unwrap() - 0.0486).abs() < 1e-4);
        // above 0.2 or delta beyond 0.05: pure only
        assert_eq!(laplace_privacy_params(4, 0.1, 0.01, 100).unwrap().1, None);
        assert_eq!(laplace_privacy_params(4, 0.001, 0.06, 100).unwrap().1, None);
        assert_eq!(laplace_privacy_params(4, 0.001, 0.01, 1).unwrap().1, None);
        assert!(laplace_privacy_params(1, 0.0, 0.01, 10).is_err());
        assert!(laplace_privacy_params(1, 0.1, -0.01, 10).is_err());
    }

    #[test]
    fn gumbel_examples() {
        let eps = 0.3;
        let got = gumbel_privacy_params(1, eps, 1.0).unwrap();
        assert!((got - eps * (eps / 2.0).tanh()).abs() < 1e-15);
        assert!(got < eps);
        let got = gumbel_privacy_params(4, 0.5, 0.01).unwrap();
        assert_eq!(got, 2.0);
        let advanced = 4.0 * 0.5 * 0.25f64.tanh() + 0.5 * (4.0 * 100f64.ln()).sqrt();
        assert!((advanced - 2.636).abs() < 1e-3);
        assert_eq!(gumbel_privacy_params(3, 0.2, 0.0).unwrap(), 3.0 * 0.2);
        assert!(gumbel_privacy_params(3, 0.2, 1.5).is_err());
        assert!(gumbel_privacy_params(0, 0.2, 0.5).is_err());
    }

    #[test]
    fn accuracy_bound_shape() {
        assert!((accuracy_bound(100, 0.1, 1.0, 1.0).unwrap() - 6.907_755_278_982_137).abs() < 1e-12);
        let a = accuracy_bound(1000, 0.05, 1.0, 3.0).unwrap();
        assert!((accuracy_bound(1000, 0.05, 0.5, 3.0).unwrap() - 2.0 * a).abs() < 1e-12);
        assert!(accuracy_bound(1000, 0.01, 1.0, 3.0).unwrap() > a);
        assert!(accuracy_bound(1000, 1.0, 1.0, 3.0).is_err());
        assert!(accuracy_bound(1000, 0.0, 1.0, 3.0).is_err());
    }
}
