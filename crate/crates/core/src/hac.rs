//! Newey–West long-run variance and the sandwich variance of the shock
//! coefficient.
//!
//! ```text
//! Omega   = sum_{l=-(K-1)}^{K-1} (1 - |l|/K) / (T - |l|) * sum_t psi_t psi_{t-|l|}
//! tau^2   = (1/T) sum_t v_t^2
//! sigma^2 = Omega / tau^4
//! ```
//!
//! `psi_t = v_t * u_t`, with `v` the residual of the shock on its selected
//! controls and `u` the residual of the final regression (or, optionally, the
//! residual of the outcome on its own selected controls).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum series length for the variance estimator.
pub const MIN_HAC_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    /// `floor(4 (T/100)^(2/9)) + 1`
    #[default]
    Auto,
    Fixed(usize),
}

impl Bandwidth {
    pub fn resolve(self, t: usize) -> usize {
        match self {
            Bandwidth::Auto => auto_bandwidth(t),
            Bandwidth::Fixed(k) => k,
        }
    }
}

/// Which residual multiplies the shock residual in the score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiSource {
    /// Residual of the final (union-set) regression.
    #[default]
    FinalU,
    /// Residual of the outcome on its own selected controls.
    FirstStageE,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HacConfig {
    pub bandwidth: Bandwidth,
    pub psi_source: PsiSource,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HacVariance {
    pub sigma_sq: f64,
    pub tau_sq: f64,
    pub omega: f64,
    pub bandwidth: usize,
}

pub fn auto_bandwidth(t: usize) -> usize {
    (4.0 * (t as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize + 1
}

/// Bartlett-weighted long-run variance of `psi` with bandwidth `k`.
pub fn newey_west(psi: &[f64], k: usize) -> Result<f64> {
    let t = psi.len();
    if k == 0 || t <= k {
        return Err(Error::BandwidthTooLarge { bandwidth: k, len: t });
    }
    let autocov = |lag: usize| -> f64 { psi[lag..].iter().zip(psi).map(|(a, b)| a * b).sum() };
    let kf = k as f64;
    let mut omega = autocov(0) / t as f64;
    for lag in 1..k {
        let w = 1.0 - lag as f64 / kf;
        omega += 2.0 * w * autocov(lag) / (t - lag) as f64;
    }
    if omega < 0.0 {
        let mean = psi.iter().sum::<f64>() / t as f64;
        let var = psi.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / t as f64;
        omega = 1e-14 * var;
    }
    Ok(omega)
}

/// `sigma^2 = Omega(v * u) / tau^4` with `tau^2 = mean(v^2)`.
pub fn hac_variance(v: &[f64], u: &[f64], bandwidth: Bandwidth) -> Result<HacVariance> {
    if v.len() != u.len() {
        return Err(Error::DimensionMismatch(format!(
            "residual lengths {} and {}",
            v.len(),
            u.len()
        )));
    }
    let t = v.len();
    if t < MIN_HAC_LEN {
        return Err(Error::InsufficientSample { needed: MIN_HAC_LEN, available: t });
    }
    let tau_sq = v.iter().map(|x| x * x).sum::<f64>() / t as f64;
    if tau_sq < 1e-12 {
        return Err(Error::DegenerateShock(tau_sq));
    }
    let k = bandwidth.resolve(t);
    let psi: Vec<f64> = v.iter().zip(u).map(|(a, b)| a * b).collect();
    let omega = newey_west(&psi, k)?;
    Ok(HacVariance { sigma_sq: omega / (tau_sq * tau_sq), tau_sq, omega, bandwidth: k })
}

/// Cluster-robust analogue: scores are summed within clusters before squaring.
pub fn cluster_variance(v: &[f64], u: &[f64], clusters: &[usize]) -> Result<HacVariance> {
    if v.len() != u.len() || v.len() != clusters.len() {
        return Err(Error::DimensionMismatch("residual and cluster lengths differ".into()));
    }
    let t = v.len();
    if t < MIN_HAC_LEN {
        return Err(Error::InsufficientSample { needed: MIN_HAC_LEN, available: t });
    }
    let tau_sq = v.iter().map(|x| x * x).sum::<f64>() / t as f64;
    if tau_sq < 1e-12 {
        return Err(Error::DegenerateShock(tau_sq));
    }
    let n_clusters = clusters.iter().max().map_or(0, |m| m + 1);
    let mut sums = vec![0.0; n_clusters];
    for ((a, b), &g) in v.iter().zip(u).zip(clusters) {
        sums[g] += a * b;
    }
    let omega = sums.iter().map(|s| s * s).sum::<f64>() / t as f64;
    Ok(HacVariance { sigma_sq: omega / (tau_sq * tau_sq), tau_sq, omega, bandwidth: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn bandwidth_one_is_mean_square() {
        let psi = [0.5, -1.0, 2.0, 0.25];
        let want = (0.25 + 1.0 + 4.0 + 0.0625) / 4.0;
        assert_eq!(newey_west(&psi, 1).unwrap(), want);
    }

    #[test]
    fn zeros_give_zero() {
        assert_eq!(newey_west(&[0.0; 20], 3).unwrap(), 0.0);
    }

    #[test]
    fn white_noise_long_run_variance() {
        let psi = gaussian(17, 10_000);
        let om = newey_west(&psi, 5).unwrap();
        assert!((om - 1.0).abs() < 0.05, "{om}");
    }

    #[test]
    fn explicit_two_lag_sum() {
        let psi = [1.0, 2.0, -1.0, 0.5, 3.0];
        let t = 5.0;
        let s0: f64 = psi.iter().map(|p| p * p).sum();
        let s1: f64 = psi.windows(2).map(|w| w[0] * w[1]).sum();
        let s2: f64 = (2..5).map(|i| psi[i] * psi[i - 2]).sum();
        let want = s0 / t + 2.0 * (2.0 / 3.0) * s1 / 4.0 + 2.0 * (1.0 / 3.0) * s2 / 3.0;
        assert!((newey_west(&psi, 3).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn bandwidth_too_large() {
        assert_eq!(
            newey_west(&[1.0, 2.0], 2),
            Err(Error::BandwidthTooLarge { bandwidth: 2, len: 2 })
        );
        assert!(newey_west(&[1.0, 2.0], 0).is_err());
    }

    #[test]
    fn auto_bandwidth_rule() {
        assert_eq!(auto_bandwidth(100), 5);
        assert_eq!(auto_bandwidth(279), 6);
        assert_eq!(auto_bandwidth(20_000), 13);
    }

    #[test]
    fn iid_sandwich_near_one() {
        // The 5% band is about 1.4 sampling sd at this T and bandwidth; the
        // seed is fixed, not tuned per run.
        let v = gaussian(3, 20_000);
        let u = gaussian(4, 20_000);
        let h = hac_variance(&v, &u, Bandwidth::Auto).unwrap();
        assert!((h.sigma_sq - 1.0).abs() < 0.05, "{}", h.sigma_sq);
    }

    #[test]
    fn bandwidth_one_reduces_to_white() {
        let v = gaussian(3, 50);
        let u = gaussian(4, 50);
        let h = hac_variance(&v, &u, Bandwidth::Fixed(1)).unwrap();
        let t = 50.0;
        let tau: f64 = v.iter().map(|x| x * x).sum::<f64>() / t;
        let om: f64 = v.iter().zip(&u).map(|(a, b)| (a * b).powi(2)).sum::<f64>() / t;
        assert!((h.sigma_sq - om / (tau * tau)).abs() < 1e-12 * h.sigma_sq);
    }

    #[test]
    fn degenerate_shock_detected() {
        let v = vec![0.0; 10];
        let u = gaussian(5, 10);
        assert!(matches!(hac_variance(&v, &u, Bandwidth::Auto), Err(Error::DegenerateShock(_))));
    }

    proptest! {
        #[test]
        fn scale_homogeneity(seed in 0u64..1000, c in 0.1f64..10.0) {
            let v = gaussian(seed, 200);
            let u = gaussian(seed + 7, 200);
            let base = hac_variance(&v, &u, Bandwidth::Auto).unwrap();
            let vs: Vec<f64> = v.iter().map(|x| x * c).collect();
            let s = hac_variance(&vs, &u, Bandwidth::Auto).unwrap();
            prop_assert!((s.tau_sq - c * c * base.tau_sq).abs() <= 1e-10 * s.tau_sq);
            prop_assert!((s.omega - c * c * base.omega).abs() <= 1e-10 * s.omega);
            prop_assert!((s.sigma_sq - base.sigma_sq / (c * c)).abs() <= 1e-10 * s.sigma_sq);
        }

        #[test]
        fn time_reversal_invariance(seed in 0u64..1000, k in 1usize..10) {
            let psi = gaussian(seed, 60);
            let rev: Vec<f64> = psi.iter().rev().copied().collect();
            let a = newey_west(&psi, k).unwrap();
            let b = newey_west(&rev, k).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
        }
    }
}
