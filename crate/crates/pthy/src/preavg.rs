//! Pre-averaged returns on a sampling design and the window-length rule.
//!
//! Given observations Z⁰, Z¹, ... on a design with times Ŝ⁰, Ŝ¹, ..., the
//! pre-averaged return anchored at index i is
//!
//! ```text
//! Z̄ⁱ = Σ_{p=1}^{kₙ-1} g(p/kₙ) (Z^{i+p} - Z^{i+p-1}),
//! ```
//!
//! an exact linear combination with no normalization. Index i runs over
//! 0 ..= N - kₙ where N is the tick count.

use crate::error::{Error, Result};
use crate::weights::WeightProfile;

/// Pre-averaged returns plus the design times needed by the estimators.
#[derive(Debug, Clone)]
pub struct PreAveraged {
    /// Z̄ⁱ for i = 0 ..= N - kₙ.
    pub values: Vec<f64>,
    pub k_n: usize,
    /// Anchor times Ŝⁱ, one per entry of `values`.
    pub anchor_times: Vec<f64>,
    /// End times Ŝ^{i+kₙ}; +∞ where the design has no tick i+kₙ.
    pub end_times: Vec<f64>,
}

impl PreAveraged {
    /// Number of pre-averaged returns.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Pre-average `values` observed at `times` with window `k_n`.
pub fn preaverage(
    times: &[f64],
    values: &[f64],
    k_n: usize,
    profile: &WeightProfile,
) -> Result<PreAveraged> {
    if k_n < 2 {
        return Err(Error::InvalidParameter(format!(
            "pre-averaging window must be at least 2, got {k_n}"
        )));
    }
    if times.len() != values.len() {
        return Err(Error::LengthMismatch {
            what: "preaverage times/values",
            expected: times.len(),
            actual: values.len(),
        });
    }
    let n = values.len();
    if n < k_n {
        return Err(Error::InsufficientData {
            what: "ticks for one pre-averaging window",
            required: k_n,
            actual: n,
        });
    }

    let weights: Vec<f64> = (1..k_n).map(|p| profile.g(p as f64 / k_n as f64)).collect();

    let count = n - k_n + 1;
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut acc = 0.0;
        for (p, w) in weights.iter().enumerate() {
            acc += w * (values[i + p + 1] - values[i + p]);
        }
        out.push(acc);
    }

    let anchor_times = times[..count].to_vec();
    let end_times: Vec<f64> = (0..count)
        .map(|i| {
            if i + k_n < n {
                times[i + k_n]
            } else {
                f64::INFINITY
            }
        })
        .collect();

    Ok(PreAveraged {
        values: out,
        k_n,
        anchor_times,
        end_times,
    })
}

/// Window length kₙ = ⌈θ√m⌉, floored at 2.
pub fn select_kn(m: usize, theta: f64) -> usize {
    assert!(m >= 1, "m must be positive");
    assert!(theta > 0.0, "theta must be positive");
    let k = (theta * (m as f64).sqrt()).ceil() as usize;
    k.max(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::make_min_weight;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn constant_series_preaverages_to_zero() {
        let w = make_min_weight();
        let times = grid(10);
        let values = vec![3.5; 10];
        for k_n in 2..6 {
            let pa = preaverage(&times, &values, k_n, &w).unwrap();
            assert!(pa.values.iter().all(|&v| v == 0.0));
            assert_eq!(pa.len(), 10 - k_n + 1);
        }
    }

    #[test]
    fn window_two_is_half_the_increment() {
        let w = make_min_weight();
        let times = grid(5);
        let values = vec![1.0, 2.0, 4.0, 8.0, 16.0];
        let pa = preaverage(&times, &values, 2, &w).unwrap();
        // single term g(1/2) = 1/2
        assert_eq!(pa.values, vec![0.5, 1.0, 2.0, 4.0]);
    }

    #[test]
    fn window_three_hand_example() {
        let w = make_min_weight();
        let times = grid(4);
        let values = vec![0.0, 3.0, 3.0, 9.0];
        let pa = preaverage(&times, &values, 3, &w).unwrap();
        // g(1/3) = g(2/3) = 1/3
        assert_eq!(pa.len(), 2);
        assert!((pa.values[0] - 1.0).abs() < 1e-12);
        assert!((pa.values[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn end_times_are_shifted_by_kn() {
        let w = make_min_weight();
        let times = vec![0.0, 0.1, 0.3, 0.35, 0.9];
        let values = vec![1.0, 2.0, 1.5, 1.7, 1.9];
        let pa = preaverage(&times, &values, 2, &w).unwrap();
        assert_eq!(pa.anchor_times, &times[..4]);
        assert_eq!(pa.end_times[0], 0.3);
        assert_eq!(pa.end_times[2], 0.9);
        assert_eq!(pa.end_times[3], f64::INFINITY);
    }

    #[test]
    fn rejects_window_below_two() {
        let w = make_min_weight();
        let times = grid(5);
        assert!(preaverage(&times, &[1.0; 5], 1, &w).is_err());
    }

    #[test]
    fn rejects_short_series() {
        let w = make_min_weight();
        assert!(preaverage(&[0.0, 1.0], &[1.0, 2.0], 3, &w).is_err());
    }

    #[test]
    fn kn_rule_examples() {
        assert_eq!(select_kn(100, 0.15), 2);
        assert_eq!(select_kn(7800, 0.15), 14);
        assert_eq!(select_kn(1, 0.15), 2);
        assert_eq!(select_kn(23400, 0.15), 23);
    }

    #[test]
    fn linearity_and_shift_invariance() {
        let w = make_min_weight();
        let times = grid(12);
        let z: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).sin()).collect();
        let y: Vec<f64> = (0..12).map(|i| (i as f64 * 1.3).cos()).collect();
        let combo: Vec<f64> = z.iter().zip(&y).map(|(a, b)| 2.0 * a - 3.0 * b).collect();
        let shifted: Vec<f64> = z.iter().map(|a| a + 17.0).collect();

        let pz = preaverage(&times, &z, 4, &w).unwrap();
        let py = preaverage(&times, &y, 4, &w).unwrap();
        let pc = preaverage(&times, &combo, 4, &w).unwrap();
        let ps = preaverage(&times, &shifted, 4, &w).unwrap();

        for i in 0..pc.len() {
            assert!((pc.values[i] - (2.0 * pz.values[i] - 3.0 * py.values[i])).abs() < 1e-12);
            assert!((ps.values[i] - pz.values[i]).abs() < 1e-12);
        }
    }
}
