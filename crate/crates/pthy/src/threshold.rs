//! The pre-averaged local universal threshold (PLUT).
//!
//! A spot-variance proxy for the pre-averaged returns is the local bipower
//! average
//!
//! ```text
//! Σ̂ᵢ = mu_1⁻² / (K - 2kₙ + 1) Σ_{p=i-K}^{i-2kₙ} |Z̄ᵖ||Z̄^{p+kₙ}|,   i = K..N-1,
//! ```
//!
//! constant-extended to the left (Σ̂ᵢ = Σ̂_K for i < K) with bandwidth
//! K = ⌈N^{3/4}⌉. The threshold is then
//!
//! ```text
//! ϱᵢ = 2 (log N)^{1+ε} Σ̂ᵢ,
//! ```
//!
//! natural log, default ε = 0.2. When the sample is too short for the
//! local window (N ≤ 2kₙ + K, or K ≤ 2kₙ), the spot estimate falls back to
//! the global bipower variance over all available products.

use crate::error::{Error, Result};
use crate::estimators::MU1_SQ_INV;
use crate::preavg::PreAveraged;
use serde::Serialize;

/// Default exponent bump of the universal threshold.
pub const DEFAULT_EPSILON: f64 = 0.2;

/// Bandwidth rule K = ⌈N^{3/4}⌉.
pub fn bandwidth_rule(n: usize) -> usize {
    (n as f64).powf(0.75).ceil() as usize
}

/// Spot variance and thresholds for one pre-averaged leg.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdProfile {
    pub epsilon: f64,
    /// Bandwidth K actually used (⌈N^{3/4}⌉), or None when the global
    /// fallback was taken.
    pub bandwidth: Option<usize>,
    /// Spot-variance estimates Σ̂ᵢ, one per pre-averaged return.
    pub sigma_hat: Vec<f64>,
    /// Thresholds ϱᵢ, one per pre-averaged return.
    pub rho: Vec<f64>,
}

/// Local pre-averaged bipower spot variance with bandwidth `k`.
///
/// Entries below index `k` are filled with the value at `k`; all entries
/// are nonnegative.
pub fn spot_variance_bipower(pa: &PreAveraged, k: usize) -> Result<Vec<f64>> {
    let n = pa.len();
    let k_n = pa.k_n;
    if k <= 2 * k_n {
        return Err(Error::InvalidParameter(format!(
            "spot bipower bandwidth K={k} must exceed 2 k_n = {}",
            2 * k_n
        )));
    }
    if k >= n {
        return Err(Error::InsufficientData {
            what: "pre-averaged returns for one spot window",
            required: k + 1,
            actual: n,
        });
    }
    let window = (k - 2 * k_n + 1) as f64;
    let v = &pa.values;
    let mut out = vec![0.0; n];
    for (i, slot) in out.iter_mut().enumerate().skip(k) {
        let mut acc = 0.0;
        for p in (i - k)..=(i - 2 * k_n) {
            acc += v[p].abs() * v[p + k_n].abs();
        }
        *slot = MU1_SQ_INV * acc / window;
    }
    let head = out[k];
    for slot in out[..k].iter_mut() {
        *slot = head;
    }
    Ok(out)
}

/// Global bipower variance over all available products, used as the
/// degenerate-sample fallback.
pub fn global_bipower_variance(pa: &PreAveraged) -> Result<f64> {
    let n = pa.len();
    let k_n = pa.k_n;
    if n <= k_n {
        return Err(Error::InsufficientData {
            what: "pre-averaged returns for one bipower product",
            required: k_n + 1,
            actual: n,
        });
    }
    let v = &pa.values;
    let count = n - k_n;
    let sum: f64 = (0..count).map(|p| v[p].abs() * v[p + k_n].abs()).sum();
    Ok(MU1_SQ_INV * sum / count as f64)
}

/// The universal threshold ϱᵢ = 2 (log N)^{1+ε} Σ̂ᵢ.
pub fn plut(sigma_hat: &[f64], n: usize, epsilon: f64) -> Vec<f64> {
    assert!(n >= 3, "PLUT needs N >= 3 so that log N > 1");
    assert!(epsilon >= 0.0, "epsilon must be nonnegative");
    let factor = 2.0 * (n as f64).ln().powf(1.0 + epsilon);
    sigma_hat.iter().map(|&s| factor * s).collect()
}

/// Full PLUT pipeline for one pre-averaged leg: bandwidth rule, spot
/// variance (with the global fallback for short samples), thresholds.
pub fn plut_profile(pa: &PreAveraged, epsilon: f64) -> Result<ThresholdProfile> {
    let n = pa.len();
    if n < 3 {
        return Err(Error::InsufficientData {
            what: "pre-averaged returns for PLUT",
            required: 3,
            actual: n,
        });
    }
    let k = bandwidth_rule(n);
    let (bandwidth, sigma_hat) = if k > 2 * pa.k_n && n > 2 * pa.k_n + k {
        (Some(k), spot_variance_bipower(pa, k)?)
    } else {
        (None, vec![global_bipower_variance(pa)?; n])
    };
    let rho = plut(&sigma_hat, n, epsilon);
    Ok(ThresholdProfile {
        epsilon,
        bandwidth,
        sigma_hat,
        rho,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preavg::preaverage;
    use crate::weights::make_min_weight;

    fn pre_averaged(values: &[f64], k_n: usize) -> PreAveraged {
        let w = make_min_weight();
        let n = values.len();
        let times: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        preaverage(&times, values, k_n, &w).unwrap()
    }

    /// A pre-averaged object with prescribed |Z̄| values, for exercising the
    /// spot window arithmetic directly.
    fn with_values(values: Vec<f64>, k_n: usize) -> PreAveraged {
        let n = values.len();
        let times: Vec<f64> = (0..n + k_n).map(|i| i as f64).collect();
        PreAveraged {
            values,
            k_n,
            anchor_times: times[..n].to_vec(),
            end_times: times[k_n..].to_vec(),
        }
    }

    #[test]
    fn zero_returns_give_zero_spot_variance() {
        let pa = with_values(vec![0.0; 40], 2);
        let spot = spot_variance_bipower(&pa, 10).unwrap();
        assert!(spot.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn constant_magnitude_gives_pi_over_two_c_squared() {
        let c = 0.3;
        let signs: Vec<f64> = (0..50).map(|i| if i % 3 == 0 { -c } else { c }).collect();
        let pa = with_values(signs, 2);
        let spot = spot_variance_bipower(&pa, 10).unwrap();
        for &s in &spot {
            assert!((s - MU1_SQ_INV * c * c).abs() < 1e-12);
        }
    }

    #[test]
    fn spot_window_matches_direct_loop_oracle() {
        let k_n = 2;
        let k = 10;
        let values: Vec<f64> = (0..30).map(|i| ((i * i) as f64 * 0.37).sin()).collect();
        let pa = with_values(values.clone(), k_n);
        let spot = spot_variance_bipower(&pa, k).unwrap();

        let n = values.len();
        #[allow(clippy::needless_range_loop)]
        for i in k..n {
            let mut acc = 0.0;
            let mut cnt = 0;
            for p in 0..n {
                // independent restatement of the window: i-K <= p <= i-2k_n
                if p + k >= i && p + 2 * k_n <= i && p + k_n < n {
                    acc += values[p].abs() * values[p + k_n].abs();
                    cnt += 1;
                }
            }
            assert_eq!(cnt, k - 2 * k_n + 1);
            let oracle = MU1_SQ_INV * acc / cnt as f64;
            assert_eq!(spot[i].to_bits(), oracle.to_bits(), "index {i}");
        }
        for i in 0..k {
            assert_eq!(spot[i], spot[k]);
        }
    }

    #[test]
    fn bandwidth_errors() {
        let pa = with_values(vec![1.0; 20], 3);
        assert!(spot_variance_bipower(&pa, 6).is_err()); // K = 2 k_n
        assert!(spot_variance_bipower(&pa, 25).is_err()); // K >= N
    }

    #[test]
    fn plut_examples() {
        let zeros = vec![0.0; 5];
        assert!(plut(&zeros, 10, 0.2).iter().all(|&r| r == 0.0));

        // epsilon = 0 edge documents the (log N)^{1+eps} parse
        let rho = plut(&[1.0], 8, 0.0);
        assert!((rho[0] - 2.0 * 8.0f64.ln()).abs() < 1e-12);

        let base = plut(&[0.5, 1.5], 100, 0.2);
        let doubled = plut(&[1.0, 3.0], 100, 0.2);
        for (b, d) in base.iter().zip(&doubled) {
            assert!((d - 2.0 * b).abs() < 1e-12);
        }
    }

    #[test]
    fn rho_nondecreasing_in_epsilon() {
        let sigma = [0.2, 0.4, 0.9];
        let mut last = plut(&sigma, 50, 0.0);
        for eps in [0.1, 0.2, 0.5, 1.0] {
            let next = plut(&sigma, 50, eps);
            for (l, n) in last.iter().zip(&next) {
                assert!(n >= l);
            }
            last = next;
        }
    }

    #[test]
    fn profile_uses_local_window_when_sample_allows() {
        let values: Vec<f64> = (0..400).map(|i| (i as f64 * 0.11).sin() * 0.01).collect();
        let pa = pre_averaged(&values, 3);
        let profile = plut_profile(&pa, 0.2).unwrap();
        assert_eq!(profile.bandwidth, Some(bandwidth_rule(pa.len())));
        assert_eq!(profile.rho.len(), pa.len());
        assert!(profile.rho.iter().all(|&r| r >= 0.0));
    }

    #[test]
    fn profile_falls_back_to_global_for_short_samples() {
        let values: Vec<f64> = (0..12).map(|i| (i as f64).cos() * 0.1).collect();
        let pa = pre_averaged(&values, 3);
        // N = 10, K = ceil(10^{3/4}) = 6, N <= 2 k_n + K = 12 -> fallback
        let profile = plut_profile(&pa, 0.2).unwrap();
        assert_eq!(profile.bandwidth, None);
        let g = global_bipower_variance(&pa).unwrap();
        assert!(profile.sigma_hat.iter().all(|&s| s == g));
    }

    /// Scaling all prices by c scales every Σ̂ and every ϱ by c², so the set
    /// of indices kept by the truncation is invariant.
    #[test]
    fn truncation_pattern_scale_invariant() {
        let values: Vec<f64> = (0..200)
            .map(|i| (i as f64 * 0.73).sin() * 0.02 + if i == 77 { 0.5 } else { 0.0 })
            .collect();
        let scaled: Vec<f64> = values.iter().map(|v| v * 3.7).collect();
        let pa = pre_averaged(&values, 3);
        let pb = pre_averaged(&scaled, 3);
        let ra = plut_profile(&pa, 0.2).unwrap().rho;
        let rb = plut_profile(&pb, 0.2).unwrap().rho;
        let kept_a: Vec<bool> = pa
            .values
            .iter()
            .zip(&ra)
            .map(|(v, r)| v * v <= *r)
            .collect();
        let kept_b: Vec<bool> = pb
            .values
            .iter()
            .zip(&rb)
            .map(|(v, r)| v * v <= *r)
            .collect();
        assert!(kept_a.iter().any(|&k| !k), "jump index should be cut");
        assert_eq!(kept_a, kept_b);
    }
}
