//! The pre-averaged (truncated) Hayashi-Yoshida estimators on
//! refresh-interpolated designs, jump covariation, and the fixed-grid
//! benchmark estimators (realized covariance, subsampled bipower
//! (co)variation).
//!
//! The PHY estimator of two observation series is
//!
//! ```text
//! (psi_hy kₙ)⁻² Σ_{i,j : Ŝ^{i+kₙ} ∨ T̂^{j+kₙ} ≤ t} Z̄¹ⁱ Z̄²ʲ
//!                  1{[Ŝⁱ, Ŝ^{i+kₙ}) ∩ [T̂ʲ, T̂^{j+kₙ}) ≠ ∅},
//! ```
//!
//! and PTHY keeps a term only when both squared pre-averaged returns sit at
//! or below their thresholds. On refresh-interpolated designs a pair can
//! only overlap when |i - j| ≤ kₙ, so the double sum is evaluated over the
//! band |i - j| ≤ 2kₙ + 1; the band is asserted exact in debug builds and
//! the plain O(N²) sum is reproduced bit for bit.

use crate::error::{Error, Result};
use crate::preavg::{preaverage, select_kn, PreAveraged};
use crate::sampling::{refresh_grid, RefreshGrid, TickSeries};
use crate::weights::WeightProfile;
use serde::{Deserialize, Serialize};

/// mu_1 = E|N(0,1)| = sqrt(2/pi); bipower sums are scaled by mu_1^{-2}.
pub const MU1_SQ_INV: f64 = std::f64::consts::PI / 2.0;

/// A point estimate of integrated covariance together with the bookkeeping
/// needed to audit the truncation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovEstimate {
    pub value: f64,
    /// Number of (i, j) terms summed.
    pub n_pairs: u64,
    /// Number of overlapping terms removed by thresholding (0 for PHY).
    pub n_truncated: u64,
    pub k_n: usize,
    /// Evaluation time.
    pub t: f64,
}

/// The refresh-interpolated design of a pair of tick series, with the
/// pre-averaged returns already computed. Building this once lets the
/// estimators, thresholds and asymptotic-variance machinery share work.
#[derive(Debug, Clone)]
pub struct SyncedPair {
    grid: RefreshGrid,
    k_n: usize,
    psi_hy: f64,
    pa1: PreAveraged,
    pa2: PreAveraged,
}

impl SyncedPair {
    /// Synchronize `a` and `b` by refresh times and pre-average both legs.
    /// kₙ = ⌈θ√m⌉ with m the number of refresh times minus one.
    pub fn build(
        a: &TickSeries,
        b: &TickSeries,
        theta: f64,
        profile: &WeightProfile,
    ) -> Result<Self> {
        if theta <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "theta must be positive, got {theta}"
            )));
        }
        let grid = refresh_grid(a, b)?;
        let m = grid.len() - 1;
        let k_n = select_kn(m, theta);
        if grid.len() < k_n + 1 {
            return Err(Error::InsufficientData {
                what: "refresh times",
                required: k_n + 1,
                actual: grid.len(),
            });
        }
        let z1: Vec<f64> = grid.s_hat_idx.iter().map(|&i| a.values()[i]).collect();
        let z2: Vec<f64> = grid.t_hat_idx.iter().map(|&j| b.values()[j]).collect();
        let pa1 = preaverage(&grid.s_hat, &z1, k_n, profile)?;
        let pa2 = preaverage(&grid.t_hat, &z2, k_n, profile)?;
        Ok(SyncedPair {
            grid,
            k_n,
            psi_hy: profile.psi_hy,
            pa1,
            pa2,
        })
    }

    pub fn k_n(&self) -> usize {
        self.k_n
    }

    pub fn grid(&self) -> &RefreshGrid {
        &self.grid
    }

    /// Pre-averaged returns of the first leg (design Î).
    pub fn pre_averaged_1(&self) -> &PreAveraged {
        &self.pa1
    }

    /// Pre-averaged returns of the second leg (design Ĵ).
    pub fn pre_averaged_2(&self) -> &PreAveraged {
        &self.pa2
    }

    /// Normalization (psi_hy · kₙ)⁻².
    pub fn norm(&self) -> f64 {
        let d = self.psi_hy * self.k_n as f64;
        1.0 / (d * d)
    }

    /// PHY and PTHY in a single banded pass; `thresholds` of `None` makes
    /// the two estimates identical.
    pub fn estimate(
        &self,
        thresholds: Option<(&[f64], &[f64])>,
        t: f64,
    ) -> Result<(CovEstimate, CovEstimate)> {
        let sums = self.banded_sums(thresholds, t)?;
        let norm = self.norm();
        let phy = CovEstimate {
            value: sums.phy * norm,
            n_pairs: sums.n_kept + sums.n_truncated,
            n_truncated: 0,
            k_n: self.k_n,
            t,
        };
        let pthy = CovEstimate {
            value: sums.pthy * norm,
            n_pairs: sums.n_kept,
            n_truncated: sums.n_truncated,
            k_n: self.k_n,
            t,
        };
        Ok((phy, pthy))
    }

    /// Same leg twice: the cross-leg estimate (1,1), (1,2) or (2,2) used by
    /// the asymptotic-variance machinery.
    pub(crate) fn legs(&self, l1: usize, l2: usize) -> (&PreAveraged, &PreAveraged) {
        let pick = |l: usize| if l == 1 { &self.pa1 } else { &self.pa2 };
        (pick(l1), pick(l2))
    }

    fn banded_sums(&self, thresholds: Option<(&[f64], &[f64])>, t: f64) -> Result<BandedSums> {
        banded_sums(&self.pa1, &self.pa2, thresholds, t)
    }

    /// Estimate between arbitrary legs (used for the 2x2 spot matrices).
    pub(crate) fn estimate_legs(
        &self,
        l1: usize,
        l2: usize,
        thresholds: Option<(&[f64], &[f64])>,
        t: f64,
    ) -> Result<(CovEstimate, CovEstimate)> {
        let (pa1, pa2) = self.legs(l1, l2);
        let sums = banded_sums(pa1, pa2, thresholds, t)?;
        let norm = self.norm();
        Ok((
            CovEstimate {
                value: sums.phy * norm,
                n_pairs: sums.n_kept + sums.n_truncated,
                n_truncated: 0,
                k_n: self.k_n,
                t,
            },
            CovEstimate {
                value: sums.pthy * norm,
                n_pairs: sums.n_kept,
                n_truncated: sums.n_truncated,
                k_n: self.k_n,
                t,
            },
        ))
    }

    /// All terms of the PTHY sum with their activation times
    /// Ŝ^{i+kₙ} ∨ T̂^{j+kₙ}, sorted ascending. Summing a prefix gives the
    /// estimator path at any evaluation time.
    pub(crate) fn pthy_terms(
        &self,
        l1: usize,
        l2: usize,
        thresholds: Option<(&[f64], &[f64])>,
    ) -> Result<Vec<(f64, f64)>> {
        let (pa1, pa2) = self.legs(l1, l2);
        if let Some((r1, r2)) = thresholds {
            check_thresholds(pa1, pa2, r1, r2)?;
        }
        let band = 2 * self.k_n + 1;
        let mut terms = Vec::new();
        for i in 0..pa1.len() {
            let e1 = pa1.end_times[i];
            if e1.is_infinite() {
                break;
            }
            let (jlo, jhi) = band_window(i, band, pa2.len());
            for j in jlo..=jhi {
                let e2 = pa2.end_times[j];
                if e2.is_infinite() {
                    break;
                }
                if !(pa1.anchor_times[i] < e2 && pa2.anchor_times[j] < e1) {
                    continue;
                }
                if let Some((r1, r2)) = thresholds {
                    let v1 = pa1.values[i];
                    let v2 = pa2.values[j];
                    if !(v1 * v1 <= r1[i] && v2 * v2 <= r2[j]) {
                        continue;
                    }
                }
                terms.push((e1.max(e2), pa1.values[i] * pa2.values[j]));
            }
        }
        terms.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        Ok(terms)
    }
}

struct BandedSums {
    phy: f64,
    pthy: f64,
    n_kept: u64,
    n_truncated: u64,
}

#[inline]
fn band_window(i: usize, band: usize, len2: usize) -> (usize, usize) {
    (i.saturating_sub(band), (i + band).min(len2 - 1))
}

fn check_thresholds(
    pa1: &PreAveraged,
    pa2: &PreAveraged,
    rho1: &[f64],
    rho2: &[f64],
) -> Result<()> {
    if rho1.len() != pa1.len() {
        return Err(Error::LengthMismatch {
            what: "thresholds for leg 1",
            expected: pa1.len(),
            actual: rho1.len(),
        });
    }
    if rho2.len() != pa2.len() {
        return Err(Error::LengthMismatch {
            what: "thresholds for leg 2",
            expected: pa2.len(),
            actual: rho2.len(),
        });
    }
    if rho1
        .iter()
        .chain(rho2.iter())
        .any(|&r| r < 0.0 || r.is_nan())
    {
        return Err(Error::InvalidParameter(
            "thresholds must be nonnegative".into(),
        ));
    }
    Ok(())
}

/// The banded double sum. Iteration is row-major in (i, j) so the result is
/// bit-identical to the plain O(N²) sum restricted to included pairs.
fn banded_sums(
    pa1: &PreAveraged,
    pa2: &PreAveraged,
    thresholds: Option<(&[f64], &[f64])>,
    t: f64,
) -> Result<BandedSums> {
    if t > 1.0 || t.is_nan() {
        return Err(Error::InvalidParameter(format!(
            "evaluation time must satisfy t <= 1, got {t}"
        )));
    }
    if let Some((r1, r2)) = thresholds {
        check_thresholds(pa1, pa2, r1, r2)?;
    }
    debug_assert!(pa1.k_n == pa2.k_n);
    let band = 2 * pa1.k_n + 1;

    #[cfg(debug_assertions)]
    debug_assert_band_exact(pa1, pa2, band);

    let mut phy = 0.0f64;
    let mut pthy = 0.0f64;
    let mut n_kept = 0u64;
    let mut n_truncated = 0u64;

    for i in 0..pa1.len() {
        // End times are nondecreasing, so the first row past t ends the sum.
        let e1 = pa1.end_times[i];
        if e1 > t {
            break;
        }
        let v1 = pa1.values[i];
        let pass1 = thresholds.is_none_or(|(r1, _)| v1 * v1 <= r1[i]);
        let (jlo, jhi) = band_window(i, band, pa2.len());
        for j in jlo..=jhi {
            let e2 = pa2.end_times[j];
            if e2 > t {
                break;
            }
            if !(pa1.anchor_times[i] < e2 && pa2.anchor_times[j] < e1) {
                continue;
            }
            let v2 = pa2.values[j];
            let term = v1 * v2;
            phy += term;
            let pass2 = thresholds.is_none_or(|(_, r2)| v2 * v2 <= r2[j]);
            if pass1 && pass2 {
                pthy += term;
                n_kept += 1;
            } else {
                n_truncated += 1;
            }
        }
    }
    Ok(BandedSums {
        phy,
        pthy,
        n_kept,
        n_truncated,
    })
}

/// Verify that no overlapping pair falls outside the band. Overlap in j is
/// an interval, so it suffices to compare its binary-searched endpoints
/// against the band.
#[cfg(debug_assertions)]
fn debug_assert_band_exact(pa1: &PreAveraged, pa2: &PreAveraged, band: usize) {
    for i in 0..pa1.len() {
        let e1 = pa1.end_times[i];
        if e1.is_infinite() {
            break;
        }
        // largest j with T̂ʲ < Ŝ^{i+kₙ}
        let hi = pa2.anchor_times.partition_point(|&s| s < e1);
        // smallest j with T̂^{j+kₙ} > Ŝⁱ
        let lo = pa2.end_times.partition_point(|&e| e <= pa1.anchor_times[i]);
        if lo < hi {
            assert!(
                lo + band >= i && hi - 1 <= i + band,
                "overlap window [{}, {}] escapes band around row {}",
                lo,
                hi - 1,
                i
            );
        }
    }
}

/// Pre-averaged Hayashi-Yoshida estimator on the refresh-interpolated
/// designs of `a` and `b`, evaluated at time `t`.
pub fn phy(
    a: &TickSeries,
    b: &TickSeries,
    theta: f64,
    profile: &WeightProfile,
    t: f64,
) -> Result<CovEstimate> {
    let pair = SyncedPair::build(a, b, theta, profile)?;
    Ok(pair.estimate(None, t)?.0)
}

/// Pre-averaged truncated Hayashi-Yoshida estimator with per-index squared
/// thresholds `rho1`, `rho2` (lengths must match the pre-averaged arrays).
pub fn pthy(
    a: &TickSeries,
    b: &TickSeries,
    theta: f64,
    profile: &WeightProfile,
    rho1: &[f64],
    rho2: &[f64],
    t: f64,
) -> Result<CovEstimate> {
    let pair = SyncedPair::build(a, b, theta, profile)?;
    Ok(pair.estimate(Some((rho1, rho2)), t)?.1)
}

/// Jump covariation estimate PHY - PTHY.
pub fn jump_covariation(
    a: &TickSeries,
    b: &TickSeries,
    theta: f64,
    profile: &WeightProfile,
    rho1: &[f64],
    rho2: &[f64],
    t: f64,
) -> Result<f64> {
    let pair = SyncedPair::build(a, b, theta, profile)?;
    let (phy, pthy) = pair.estimate(Some((rho1, rho2)), t)?;
    Ok(phy.value - pthy.value)
}

/// Realized covariance of two series observed on identical times: the sum
/// of products of matched increments up to `t`.
pub fn realized_covariance(a: &TickSeries, b: &TickSeries, t: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            what: "synchronous pair",
            expected: a.len(),
            actual: b.len(),
        });
    }
    if let Some(index) = a.times().iter().zip(b.times()).position(|(x, y)| x != y) {
        return Err(Error::NotSynchronous { index });
    }
    let mut sum = 0.0;
    for i in 1..a.len() {
        if a.times()[i] > t {
            break;
        }
        sum += (a.values()[i] - a.values()[i - 1]) * (b.values()[i] - b.values()[i - 1]);
    }
    Ok(sum)
}

/// Returns on the fixed grid origin, origin+delta, ... with last-tick
/// interpolated prices; the final partial interval is dropped.
fn grid_returns(series: &TickSeries, delta: f64, origin: f64) -> Result<Vec<f64>> {
    if delta <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "grid spacing must be positive, got {delta}"
        )));
    }
    if origin < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "grid origin must be nonnegative, got {origin}"
        )));
    }
    let mut prices = Vec::new();
    let mut k = 0usize;
    loop {
        let t = origin + k as f64 * delta;
        // tolerate rounding at the session end so a grid landing on 1.0
        // keeps its last point
        if t > 1.0 + 1e-9 {
            break;
        }
        prices.push(series.last_tick_value(t.min(1.0)));
        k += 1;
    }
    if prices.len() < 2 {
        return Err(Error::InsufficientData {
            what: "grid returns",
            required: 2,
            actual: prices.len().saturating_sub(1),
        });
    }
    Ok(prices.windows(2).map(|w| w[1] - w[0]).collect())
}

/// mu_1^{-2} Σ |r_i||r_{i+1}| over a return sequence.
fn bipower_from_returns(returns: &[f64]) -> Result<f64> {
    if returns.len() < 2 {
        return Err(Error::InsufficientData {
            what: "returns for one bipower product",
            required: 2,
            actual: returns.len(),
        });
    }
    let sum: f64 = returns.windows(2).map(|w| w[0].abs() * w[1].abs()).sum();
    Ok(MU1_SQ_INV * sum)
}

/// Bipower variation over delta-spaced returns starting at `origin`
/// (normalized session time), prices by last-tick interpolation.
pub fn bipower_variation(series: &TickSeries, delta: f64, origin: f64) -> Result<f64> {
    bipower_from_returns(&grid_returns(series, delta, origin)?)
}

/// Average of `shifts` bipower variations whose origins advance by
/// `shift_step` each time.
pub fn subsampled_bpv(
    series: &TickSeries,
    delta: f64,
    shifts: usize,
    shift_step: f64,
) -> Result<f64> {
    let mut acc = 0.0;
    for s in 0..shifts {
        acc += bipower_variation(series, delta, s as f64 * shift_step)?;
    }
    Ok(acc / shifts as f64)
}

/// Subsampled bipower covariation by polarization on the common grid:
/// {BPV(Z¹+Z²) - BPV(Z¹-Z²)}/4, averaged over shifted origins.
pub fn bipower_covariation(
    a: &TickSeries,
    b: &TickSeries,
    delta: f64,
    shifts: usize,
    shift_step: f64,
) -> Result<f64> {
    let mut acc = 0.0;
    for s in 0..shifts {
        let origin = s as f64 * shift_step;
        let r1 = grid_returns(a, delta, origin)?;
        let r2 = grid_returns(b, delta, origin)?;
        let sum: Vec<f64> = r1.iter().zip(&r2).map(|(x, y)| x + y).collect();
        let diff: Vec<f64> = r1.iter().zip(&r2).map(|(x, y)| x - y).collect();
        acc += (bipower_from_returns(&sum)? - bipower_from_returns(&diff)?) / 4.0;
    }
    Ok(acc / shifts as f64)
}

/// Subsampled realized variance on the same shifted grids.
pub fn subsampled_rv(
    series: &TickSeries,
    delta: f64,
    shifts: usize,
    shift_step: f64,
) -> Result<f64> {
    let mut acc = 0.0;
    for s in 0..shifts {
        let returns = grid_returns(series, delta, s as f64 * shift_step)?;
        acc += returns.iter().map(|r| r * r).sum::<f64>();
    }
    Ok(acc / shifts as f64)
}

/// Subsampled realized covariance of matched grid increments.
pub fn subsampled_rc(
    a: &TickSeries,
    b: &TickSeries,
    delta: f64,
    shifts: usize,
    shift_step: f64,
) -> Result<f64> {
    let mut acc = 0.0;
    for s in 0..shifts {
        let origin = s as f64 * shift_step;
        let r1 = grid_returns(a, delta, origin)?;
        let r2 = grid_returns(b, delta, origin)?;
        acc += r1.iter().zip(&r2).map(|(x, y)| x * y).sum::<f64>();
    }
    Ok(acc / shifts as f64)
}

/// Benchmark jump-variation estimator: subsampled RV minus subsampled BPV.
pub fn rv_minus_bpv(
    series: &TickSeries,
    delta: f64,
    shifts: usize,
    shift_step: f64,
) -> Result<f64> {
    Ok(subsampled_rv(series, delta, shifts, shift_step)?
        - subsampled_bpv(series, delta, shifts, shift_step)?)
}

/// Benchmark jump-covariation estimator: subsampled realized covariance
/// minus subsampled bipower covariation.
pub fn rc_minus_bpv(
    a: &TickSeries,
    b: &TickSeries,
    delta: f64,
    shifts: usize,
    shift_step: f64,
) -> Result<f64> {
    Ok(subsampled_rc(a, b, delta, shifts, shift_step)?
        - bipower_covariation(a, b, delta, shifts, shift_step)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::make_min_weight;

    fn ticks(times: &[f64], values: &[f64]) -> TickSeries {
        TickSeries::new(times.to_vec(), values.to_vec()).unwrap()
    }

    fn uniform_times(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn phy_of_constant_prices_is_zero() {
        let w = make_min_weight();
        let times = uniform_times(50);
        let a = ticks(&times, &vec![1.23; 50]);
        let b = ticks(&times, &vec![4.56; 50]);
        let est = phy(&a, &b, 0.15, &w, 1.0).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.n_truncated, 0);
        assert!(est.n_pairs > 0);
    }

    #[test]
    fn pthy_with_zero_thresholds_kills_everything() {
        let w = make_min_weight();
        let times = uniform_times(40);
        let values: Vec<f64> = (0..40).map(|i| (i as f64).sin()).collect();
        let a = ticks(&times, &values);
        let pair = SyncedPair::build(&a, &a, 0.15, &w).unwrap();
        let n = pair.pre_averaged_1().len();
        let zero = vec![0.0; n];
        let (_, pt) = pair.estimate(Some((&zero, &zero)), 1.0).unwrap();
        assert_eq!(pt.value, 0.0);
        assert_eq!(pt.n_pairs, 0);
        assert!(pt.n_truncated > 0);
    }

    #[test]
    fn pthy_with_infinite_thresholds_is_phy_bitwise() {
        let w = make_min_weight();
        let times1: Vec<f64> = vec![0.0, 0.03, 0.09, 0.15, 0.21, 0.33, 0.47, 0.55, 0.71, 0.92];
        let times2: Vec<f64> = vec![0.0, 0.05, 0.12, 0.2, 0.28, 0.41, 0.52, 0.66, 0.8, 0.97];
        let v1: Vec<f64> = (0..10).map(|i| (i as f64 * 0.9).sin()).collect();
        let v2: Vec<f64> = (0..10).map(|i| (i as f64 * 1.7).cos()).collect();
        let a = ticks(&times1, &v1);
        let b = ticks(&times2, &v2);
        let pair = SyncedPair::build(&a, &b, 0.3, &w).unwrap();
        let inf1 = vec![f64::INFINITY; pair.pre_averaged_1().len()];
        let inf2 = vec![f64::INFINITY; pair.pre_averaged_2().len()];
        let (phy_est, pthy_est) = pair.estimate(Some((&inf1, &inf2)), 1.0).unwrap();
        assert_eq!(phy_est.value.to_bits(), pthy_est.value.to_bits());
        assert_eq!(pthy_est.n_truncated, 0);
    }

    #[test]
    fn jump_covariation_zero_at_infinite_thresholds() {
        let w = make_min_weight();
        let times = uniform_times(30);
        let values: Vec<f64> = (0..30).map(|i| (i as f64 * 0.61).sin()).collect();
        let a = ticks(&times, &values);
        let pair = SyncedPair::build(&a, &a, 0.15, &w).unwrap();
        let inf = vec![f64::INFINITY; pair.pre_averaged_1().len()];
        let jv = jump_covariation(&a, &a, 0.15, &w, &inf, &inf, 1.0).unwrap();
        assert_eq!(jv, 0.0);
    }

    #[test]
    fn threshold_length_mismatch_rejected() {
        let w = make_min_weight();
        let times = uniform_times(20);
        let values: Vec<f64> = (0..20).map(|i| (i as f64).cos()).collect();
        let a = ticks(&times, &values);
        let short = vec![1.0; 3];
        assert!(pthy(&a, &a, 0.15, &w, &short, &short, 1.0).is_err());
    }

    #[test]
    fn insufficient_data_reports_requirement() {
        let w = make_min_weight();
        let a = ticks(&[0.0, 0.4], &[0.0, 1.0]);
        let b = ticks(&[0.0, 0.5], &[0.0, 2.0]);
        match phy(&a, &b, 0.15, &w, 1.0) {
            Err(Error::InsufficientData { required, .. }) => assert!(required >= 3),
            other => panic!("expected InsufficientData, got {other:?}"),
        }
    }

    #[test]
    fn realized_covariance_diagonal_and_hand_case() {
        let times = [0.0, 0.2, 0.4, 0.6, 0.8];
        let z1 = [0.0, 1.0, -0.5, 2.0, 1.0];
        let z2 = [1.0, 1.5, 1.0, 3.0, 2.5];
        let a = ticks(&times, &z1);
        let b = ticks(&times, &z2);
        // hand evaluation: 1*.5 + (-1.5)(-.5) + 2.5*2 + (-1)(-.5)
        let expected = 0.5 + 0.75 + 5.0 + 0.5;
        assert!((realized_covariance(&a, &b, 1.0).unwrap() - expected).abs() < 1e-12);

        let rv = realized_covariance(&a, &a, 1.0).unwrap();
        let expected_rv = 1.0 + 2.25 + 6.25 + 1.0;
        assert!((rv - expected_rv).abs() < 1e-12);

        let c = ticks(&times, &[7.0; 5]);
        assert_eq!(realized_covariance(&a, &c, 1.0).unwrap(), 0.0);

        let shifted = ticks(&[0.0, 0.25, 0.4, 0.6, 0.8], &z2);
        assert!(matches!(
            realized_covariance(&a, &shifted, 1.0),
            Err(Error::NotSynchronous { index: 1 })
        ));
    }

    #[test]
    fn bipower_hand_cases() {
        let times = uniform_times(200);
        let constant = ticks(&times, &vec![2.0; 200]);
        assert_eq!(bipower_variation(&constant, 0.1, 0.0).unwrap(), 0.0);

        // ticks placed exactly on the sampling grid so last-tick lookups
        // are exact: slope-1 path, 10 returns of 0.1 each
        let grid_times: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let linear = ticks(&grid_times, &grid_times);
        let bpv = bipower_variation(&linear, 0.1, 0.0).unwrap();
        assert!((bpv - MU1_SQ_INV * 9.0 * 0.01).abs() < 1e-12);

        // alternating returns +-c on the grid itself
        let n = 101;
        let t2 = uniform_times(n);
        let c = 0.25;
        let alt: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 0.0 } else { c }).collect();
        let alternating = ticks(&t2, &alt);
        let m = (n - 1) as f64;
        let bpv_alt = bipower_variation(&alternating, 1.0 / (n as f64 - 1.0), 0.0).unwrap();
        assert!((bpv_alt - MU1_SQ_INV * (m - 1.0) * c * c).abs() < 1e-10);

        let rvb = rv_minus_bpv(&linear, 0.1, 1, 0.0).unwrap();
        assert!((rvb - (10.0 * 0.01 - MU1_SQ_INV * 9.0 * 0.01)).abs() < 1e-12);
    }

    #[test]
    fn bipower_shift_invariant_on_linear_path() {
        // dyadic ticks, dyadic grid and a slope-1 path: every shifted grid
        // with the same interval count yields bitwise identical returns
        let times: Vec<f64> = (0..=1024).map(|i| i as f64 / 1024.0).collect();
        let linear = ticks(&times, &times);
        let delta = 0.125;
        let reference = bipower_variation(&linear, delta, 1.0 / 1024.0).unwrap();
        for s in 2..=32 {
            let shifted = bipower_variation(&linear, delta, s as f64 / 1024.0).unwrap();
            assert_eq!(shifted.to_bits(), reference.to_bits(), "shift {s}");
        }
        // origin 0 fits one more full interval
        let at_zero = bipower_variation(&linear, delta, 0.0).unwrap();
        assert!((at_zero - MU1_SQ_INV * 7.0 * 0.125 * 0.125).abs() < 1e-12);
        assert!((reference - MU1_SQ_INV * 6.0 * 0.125 * 0.125).abs() < 1e-12);
    }

    #[test]
    fn bipower_covariation_diagonal_scaling() {
        let times = uniform_times(300);
        let values: Vec<f64> = times.iter().map(|t| (20.0 * t).sin() * 0.1).collect();
        let z = ticks(&times, &values);
        let cov = bipower_covariation(&z, &z, 0.05, 10, 0.001).unwrap();
        let bpv = subsampled_bpv(&z, 0.05, 10, 0.001).unwrap();
        assert!((cov - bpv).abs() < 1e-12);
    }

    #[test]
    fn bipower_needs_two_returns() {
        let times = uniform_times(20);
        let values: Vec<f64> = times.iter().map(|t| t * 2.0).collect();
        let z = ticks(&times, &values);
        // grid spacing so wide only one return fits
        assert!(matches!(
            bipower_variation(&z, 0.8, 0.0),
            Err(Error::InsufficientData { .. })
        ));
        assert!(bipower_variation(&z, 0.5, 0.0).is_ok());
    }

    #[test]
    fn negative_thresholds_rejected() {
        let w = make_min_weight();
        let times = uniform_times(20);
        let values: Vec<f64> = (0..20).map(|i| (i as f64).cos()).collect();
        let a = ticks(&times, &values);
        let pair = SyncedPair::build(&a, &a, 0.15, &w).unwrap();
        let mut rho = vec![1.0; pair.pre_averaged_1().len()];
        rho[3] = -0.5;
        assert!(pair.estimate(Some((&rho, &rho)), 1.0).is_err());
    }

    #[test]
    fn evaluation_time_restricts_terms() {
        let w = make_min_weight();
        let times = uniform_times(60);
        let values: Vec<f64> = (0..60).map(|i| (i as f64 * 0.37).sin()).collect();
        let a = ticks(&times, &values);
        let full = phy(&a, &a, 0.15, &w, 1.0).unwrap();
        let half = phy(&a, &a, 0.15, &w, 0.5).unwrap();
        assert!(half.n_pairs < full.n_pairs);
        assert!(phy(&a, &a, 0.15, &w, 1.5).is_err());
    }
}
