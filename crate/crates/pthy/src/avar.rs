//! Kernel-based estimation of the asymptotic variance ∫ w² ds of the PTHY
//! estimator (exogenous-noise case) and feasible confidence intervals.
//!
//! Spot quadratic covariations are difference quotients of the PTHY path
//! over a block of length hₙ. Noise covariances are negative
//! first-autocovariance sums of observed returns, the cross term gated by
//! coincident refresh anchors Ŝᵏ = T̂ᵏ. Per refresh time Rᵏ,
//!
//! ```text
//! ŵ²_{Rᵏ} = kₙ psi_hy⁻⁴ [ κ  {q̂11 q̂22 + q̂12²}
//!                        + κ̃ {Ψ̂11 Ψ̂22 + Ψ̂12χ²}
//!                        + κ̄ {q̂11 Ψ̂22 + q̂22 Ψ̂11 + 2 q̂12 Ψ̂12χ} ] |Γᵏ||Γᵏ⁺¹|,
//! ```
//!
//! and the integral estimate is bₙ^{-1/2} Σ_{k: Rᵏ ≤ t} ŵ²_{Rᵏ} with
//! bₙ = 1/(number of refresh times - 1), the identification under which
//! kₙ = ⌈θ√m⌉ matches the window rate. The variance contribution of
//! endogenous noise has no known estimator and is not included.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::estimators::SyncedPair;
use crate::sampling::{RefreshGrid, TickSeries};
use crate::threshold::plut_profile;
use crate::weights::WeightProfile;

/// Configuration shared by the estimators and the variance machinery.
#[derive(Debug, Clone)]
pub struct AvarConfig {
    pub theta: f64,
    /// PLUT exponent bump.
    pub epsilon: f64,
    /// Block length hₙ; defaults to bₙ^{1/8}.
    pub h_n: Option<f64>,
    pub ci_level: f64,
    /// Evaluation time.
    pub t: f64,
}

impl Default for AvarConfig {
    fn default() -> Self {
        AvarConfig {
            theta: 0.15,
            epsilon: crate::threshold::DEFAULT_EPSILON,
            h_n: None,
            ci_level: 0.95,
            t: 1.0,
        }
    }
}

/// Per-refresh-time spot quantities entering ŵ².
#[derive(Debug, Clone, Default, Serialize)]
pub struct SpotSeries {
    /// Refresh times Rᵏ carrying a ŵ² block (k = 1 .. m-1).
    pub r: Vec<f64>,
    pub quad11: Vec<f64>,
    pub quad12: Vec<f64>,
    pub quad22: Vec<f64>,
    pub psi11: Vec<f64>,
    pub psi22: Vec<f64>,
    pub psi12chi: Vec<f64>,
    pub w2: Vec<f64>,
}

/// Estimate of ∫₀ᵗ w² ds with the feasible confidence interval.
#[derive(Debug, Clone, Serialize)]
pub struct AvarReport {
    /// Raw estimate; may be negative in finite samples because noise
    /// autocovariance estimates can be negative.
    pub integrated_w2: f64,
    /// True when integrated_w2 ≤ 0 (the CI half-width clamps it to 0).
    pub nonpositive: bool,
    pub h_n: f64,
    /// Finite-sample rate proxy 1/(refresh count - 1).
    pub b_n: f64,
    /// PTHY point estimate the interval is centered on.
    pub point: f64,
    pub ci_level: f64,
    pub ci: (f64, f64),
    /// The endogenous-noise variance term has no estimator; always false.
    pub endogenous_term_estimated: bool,
    pub spot_series: SpotSeries,
}

/// Difference quotients of the PTHY path over (s-hₙ, s] for the pairs
/// (1,1), (1,2), (2,2), as a symmetric 2x2 matrix. Thresholds are PLUT per
/// leg. Each entry is literally two estimator calls.
pub fn spot_quadcov(
    a: &TickSeries,
    b: &TickSeries,
    s: f64,
    h_n: f64,
    profile: &WeightProfile,
    cfg: &AvarConfig,
) -> Result<[[f64; 2]; 2]> {
    if h_n <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "block length must be positive, got {h_n}"
        )));
    }
    let pair = SyncedPair::build(a, b, cfg.theta, profile)?;
    require_refresh_in_window(pair.grid(), s, h_n)?;
    let rho1 = plut_profile(pair.pre_averaged_1(), cfg.epsilon)?.rho;
    let rho2 = plut_profile(pair.pre_averaged_2(), cfg.epsilon)?.rho;
    let prev = (s - h_n).max(0.0);
    let quot = |l1: usize, l2: usize| -> Result<f64> {
        let thr = (
            if l1 == 1 { &rho1 } else { &rho2 }.as_slice(),
            if l2 == 1 { &rho1 } else { &rho2 }.as_slice(),
        );
        let hi = pair.estimate_legs(l1, l2, Some(thr), s)?.1.value;
        let lo = pair.estimate_legs(l1, l2, Some(thr), prev)?.1.value;
        Ok((hi - lo) / h_n)
    };
    let q11 = quot(1, 1)?;
    let q12 = quot(1, 2)?;
    let q22 = quot(2, 2)?;
    Ok([[q11, q12], [q12, q22]])
}

fn require_refresh_in_window(grid: &RefreshGrid, s: f64, h_n: f64) -> Result<()> {
    let lo = s - h_n;
    if !grid.r.iter().any(|&r| lo < r && r <= s) {
        return Err(Error::InsufficientData {
            what: "refresh times in the spot window",
            required: 1,
            actual: 0,
        });
    }
    Ok(())
}

/// Negative first-autocovariance noise estimates over (s-hₙ, s]:
/// Ψ̂¹¹, Ψ̂²² on each asset's own ticks, and the symmetrized cross term
/// Ψ̂¹²χ on the refresh design, gated by Ŝᵏ = T̂ᵏ.
pub fn noise_cov_estimates(
    a: &TickSeries,
    b: &TickSeries,
    grid: &RefreshGrid,
    s: f64,
    h_n: f64,
    k_n: usize,
) -> Result<(f64, f64, f64)> {
    if h_n <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "block length must be positive, got {h_n}"
        )));
    }
    require_refresh_in_window(grid, s, h_n)?;
    let scale = 1.0 / (h_n * (k_n * k_n) as f64);

    let own = |z: &TickSeries| -> f64 {
        let times = z.times();
        let vals = z.values();
        // indices m = i+1 with s-h < S^m <= s and i >= 1
        let lo = times.partition_point(|&x| x <= s - h_n).max(2);
        let hi = times.partition_point(|&x| x <= s);
        let mut acc = 0.0;
        for m in lo..hi {
            acc += (vals[m - 1] - vals[m - 2]) * (vals[m] - vals[m - 1]);
        }
        -acc * scale
    };
    let psi11 = own(a);
    let psi22 = own(b);

    // k with s-h < R^{k+1} <= s, k >= 1
    let va = a.values();
    let vb = b.values();
    let si = &grid.s_hat_idx;
    let ti = &grid.t_hat_idx;
    let lo = grid.r.partition_point(|&x| x <= s - h_n).max(2);
    let hi = grid.r.partition_point(|&x| x <= s);
    let mut acc = 0.0;
    for kp1 in lo..hi {
        let k = kp1 - 1;
        if grid.s_hat[k] == grid.t_hat[k] {
            let d1 = va[si[k]] - va[si[k - 1]];
            let d2_next = vb[ti[k + 1]] - vb[ti[k]];
            let d1_next = va[si[k + 1]] - va[si[k]];
            let d2 = vb[ti[k]] - vb[ti[k - 1]];
            acc += d1 * d2_next + d1_next * d2;
        }
    }
    let psi12chi = -acc * scale / 2.0;

    Ok((psi11, psi22, psi12chi))
}

/// ŵ² for one refresh block from its spot quantities.
#[allow(clippy::too_many_arguments)]
pub fn w2_block(
    k_n: usize,
    psi_hy: f64,
    kappa: f64,
    kappa_tilde: f64,
    kappa_bar: f64,
    quad: (f64, f64, f64),
    noise: (f64, f64, f64),
    gamma_k: f64,
    gamma_k1: f64,
) -> f64 {
    let (q11, q12, q22) = quad;
    let (n11, n22, n12) = noise;
    let body = kappa * (q11 * q22 + q12 * q12)
        + kappa_tilde * (n11 * n22 + n12 * n12)
        + kappa_bar * (q11 * n22 + q22 * n11 + 2.0 * q12 * n12);
    k_n as f64 * psi_hy.powi(-4) * body * gamma_k * gamma_k1
}

/// Step-function evaluation of a sorted (activation time, term) list.
struct PathEval {
    times: Vec<f64>,
    cum: Vec<f64>,
}

impl PathEval {
    fn new(terms: Vec<(f64, f64)>, norm: f64) -> Self {
        let mut times = Vec::with_capacity(terms.len());
        let mut cum = Vec::with_capacity(terms.len());
        let mut acc = 0.0;
        for (t, v) in terms {
            acc += v;
            times.push(t);
            cum.push(acc * norm);
        }
        PathEval { times, cum }
    }

    fn eval(&self, t: f64) -> f64 {
        let i = self.times.partition_point(|&x| x <= t);
        if i == 0 {
            0.0
        } else {
            self.cum[i - 1]
        }
    }

    fn quotient(&self, s: f64, h: f64) -> f64 {
        (self.eval(s) - self.eval((s - h).max(0.0))) / h
    }
}

/// Integrated asymptotic variance of the PTHY estimator with the feasible
/// confidence interval at `cfg.ci_level`.
pub fn integrated_avar(
    a: &TickSeries,
    b: &TickSeries,
    profile: &WeightProfile,
    cfg: &AvarConfig,
) -> Result<AvarReport> {
    let pair = SyncedPair::build(a, b, cfg.theta, profile)?;
    let m = pair.grid().len() - 1;
    if m < 2 {
        return Err(Error::InsufficientData {
            what: "refresh intervals",
            required: 2,
            actual: m,
        });
    }
    let b_n = 1.0 / m as f64;
    let h_n = cfg.h_n.unwrap_or_else(|| b_n.powf(0.125));
    let k_n = pair.k_n();

    let rho1 = plut_profile(pair.pre_averaged_1(), cfg.epsilon)?.rho;
    let rho2 = plut_profile(pair.pre_averaged_2(), cfg.epsilon)?.rho;

    let norm = pair.norm();
    let p11 = PathEval::new(pair.pthy_terms(1, 1, Some((&rho1, &rho1)))?, norm);
    let p12 = PathEval::new(pair.pthy_terms(1, 2, Some((&rho1, &rho2)))?, norm);
    let p22 = PathEval::new(pair.pthy_terms(2, 2, Some((&rho2, &rho2)))?, norm);

    let grid = pair.grid();
    let mut spots = SpotSeries::default();
    let mut integrated = 0.0;
    for k in 1..m {
        let s = grid.r[k];
        if s > cfg.t {
            break;
        }
        let quad = (
            p11.quotient(s, h_n),
            p12.quotient(s, h_n),
            p22.quotient(s, h_n),
        );
        let noise = noise_cov_estimates(a, b, grid, s, h_n, k_n)?;
        let w2 = w2_block(
            k_n,
            profile.psi_hy,
            profile.kappa,
            profile.kappa_tilde,
            profile.kappa_bar,
            quad,
            noise,
            grid.r[k] - grid.r[k - 1],
            grid.r[k + 1] - grid.r[k],
        );
        integrated += w2;
        spots.r.push(s);
        spots.quad11.push(quad.0);
        spots.quad12.push(quad.1);
        spots.quad22.push(quad.2);
        spots.psi11.push(noise.0);
        spots.psi22.push(noise.1);
        spots.psi12chi.push(noise.2);
        spots.w2.push(w2);
    }
    let integrated_w2 = integrated / b_n.sqrt();

    let point = pair.estimate(Some((&rho1, &rho2)), cfg.t)?.1.value;
    let z = Normal::new(0.0, 1.0)
        .expect("unit normal")
        .inverse_cdf(0.5 + cfg.ci_level / 2.0);
    let half = z * b_n.powf(0.25) * integrated_w2.max(0.0).sqrt();

    Ok(AvarReport {
        integrated_w2,
        nonpositive: integrated_w2 <= 0.0,
        h_n,
        b_n,
        point,
        ci_level: cfg.ci_level,
        ci: (point - half, point + half),
        endogenous_term_estimated: false,
        spot_series: spots,
    })
}
