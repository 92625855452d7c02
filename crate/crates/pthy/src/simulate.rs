//! Generative models for the Monte Carlo study: bivariate stochastic
//! volatility paths, jump processes, microstructure noise and Poisson
//! sampling, with the ground-truth functionals recorded per replication.
//!
//! Three observation models share the \[0,1\] session discretized into `n`
//! Euler steps:
//!
//! * Model 1 — factor stochastic volatility plus additive Gaussian noise,
//! * Model 2 — constant volatility plus price rounding to a cent grid,
//! * Model 3 — Model-1 dynamics with noise proportional to the lagged
//!   efficient return at each asset's own sampling times.
//!
//! Jumps are either absent, a single common compound-Poisson jump with
//! normal inverse Gaussian size (SCP1), or a correlated pair of variance
//! gamma paths (VG).

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::sampling::{poisson_sample_times, TickSeries};

/// Model-1/3 drift.
const MU: f64 = 0.03;
/// Volatility is exp(BETA0 + BETA1 * rho_t); BETA0 = BETA1²/(2 alpha)
/// normalizes E[∫ sigma² ds] to 1.
const BETA0: f64 = -5.0 / 16.0;
const BETA1: f64 = 1.0 / 8.0;
/// OU mean reversion of the volatility factor.
const ALPHA_OU: f64 = -1.0 / 40.0;
/// Correlation between an asset's Brownian driver and its own volatility
/// factor (leverage).
const RHO_LEV: f64 = -0.3;
/// Noise-to-signal ratio of the Model-1 additive noise.
const ETA_SQ: f64 = 0.001;
/// Model-2 constant volatility, initial price and rounding grid.
pub(crate) const MODEL2_SIGMA: f64 = 0.2 / 15.874507866387544; // 0.2/sqrt(252)
const MODEL2_X0_EXP: f64 = 8.0;
const MODEL2_ALPHA: f64 = 0.01;
const MODEL2_R: f64 = 0.5;
/// Model-3 endogenous noise loading.
const MODEL3_DELTA: f64 = -0.01;

/// Cross-asset correlation sqrt(1-rho¹²) sqrt(1-rho²²), used for the
/// Model-1 noise, the Model-1/3 latent covariance, and the VG jump mixing
/// in Models 1 and 3.
fn model1_r() -> f64 {
    (1.0 - RHO_LEV * RHO_LEV).sqrt() * (1.0 - RHO_LEV * RHO_LEV).sqrt()
}

/// Which generative model to simulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Model1,
    Model2,
    Model3,
}

/// Jump specification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JumpKind {
    /// No jumps.
    No,
    /// Single common jump at a uniform time, normal inverse Gaussian size.
    Scp1,
    /// Correlated variance gamma pair.
    Vg,
}

/// Full generative configuration of one replication.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimScenario {
    pub model: Model,
    pub jumps: JumpKind,
    /// Average waiting times (in grid steps) of the two Poisson samplers.
    pub lambda: (f64, f64),
    /// Euler grid size.
    pub n: usize,
    /// Jump size parameter (variance of a unit-time jump increment).
    pub c: f64,
    /// Jump shape parameter.
    pub gamma: f64,
    pub seed: u64,
}

impl SimScenario {
    pub fn new(model: Model, jumps: JumpKind, lambda: (f64, f64), seed: u64) -> Self {
        SimScenario {
            model,
            jumps,
            lambda,
            n: 23_400,
            c: 0.1,
            gamma: 0.25,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda.0 < 1.0 || self.lambda.1 < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "lambda must be >= 1, got ({}, {})",
                self.lambda.0, self.lambda.1
            )));
        }
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid size must be >= 2, got {}",
                self.n
            )));
        }
        if self.c <= 0.0 || self.gamma <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "jump parameters must be positive, got c={} gamma={}",
                self.c, self.gamma
            )));
        }
        Ok(())
    }
}

/// One simulated replication: the two observed tick series plus the
/// ground-truth integrated covariance and jump covariation matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimOutput {
    pub ticks1: TickSeries,
    pub ticks2: TickSeries,
    /// [Xᵏ, Xˡ]₁ of the latent continuous parts.
    pub true_ic: [[f64; 2]; 2],
    /// JVᵏˡ = [Zᵏ, Zˡ]₁ − [Xᵏ, Xˡ]₁, the co-jump contribution.
    pub true_jv: [[f64; 2]; 2],
}

/// Simulate a scenario with the stream derived from its seed (this matches
/// replication 0 of the Monte Carlo harness run with the same master seed).
pub fn simulate(scn: &SimScenario) -> Result<SimOutput> {
    let mut rng = Stream::for_replication(scn.seed, 0);
    simulate_with(scn, &mut rng)
}

/// Simulate a scenario drawing from the given stream.
pub fn simulate_with(scn: &SimScenario, rng: &mut Stream) -> Result<SimOutput> {
    scn.validate()?;
    match scn.model {
        Model::Model1 => simulate_model1(scn, rng),
        Model::Model2 => simulate_model2(scn, rng),
        Model::Model3 => simulate_model3(scn, rng),
    }
}

/// Latent factor-SV paths shared by Models 1 and 3.
struct FactorPaths {
    /// Log-price paths on the grid, n+1 points.
    x1: Vec<f64>,
    x2: Vec<f64>,
    /// Spot volatilities at the grid points, n+1 points.
    sigma1: Vec<f64>,
    sigma2: Vec<f64>,
}

impl FactorPaths {
    /// Integrated variance/covariance as left-endpoint grid sums, exact for
    /// the discretized dynamics (B¹ ⊥ B² ⊥ W).
    fn integrated_cov(&self) -> [[f64; 2]; 2] {
        let n = self.x1.len() - 1;
        let r = model1_r();
        let (mut v11, mut v12, mut v22) = (0.0, 0.0, 0.0);
        for k in 0..n {
            v11 += self.sigma1[k] * self.sigma1[k];
            v12 += self.sigma1[k] * self.sigma2[k];
            v22 += self.sigma2[k] * self.sigma2[k];
        }
        let h = 1.0 / n as f64;
        [[v11 * h, r * v12 * h], [r * v12 * h, v22 * h]]
    }
}

/// Euler-Maruyama on n equispaced points. Each asset loads on its own
/// volatility factor B^l (which also drives the OU factor, producing
/// leverage) plus the common driver W.
fn factor_sv_paths(n: usize, rng: &mut Stream) -> FactorPaths {
    let dt = 1.0 / n as f64;
    let sdt = dt.sqrt();
    let load_common = (1.0 - RHO_LEV * RHO_LEV).sqrt();
    // stationary initialization N(0, 1/(-2 alpha))
    let stat_sd = (1.0 / (-2.0 * ALPHA_OU)).sqrt();
    let mut ou1 = stat_sd * normal(rng);
    let mut ou2 = stat_sd * normal(rng);

    let mut x1 = Vec::with_capacity(n + 1);
    let mut x2 = Vec::with_capacity(n + 1);
    let mut sigma1 = Vec::with_capacity(n + 1);
    let mut sigma2 = Vec::with_capacity(n + 1);
    x1.push(0.0);
    x2.push(0.0);

    for _ in 0..n {
        let s1 = (BETA0 + BETA1 * ou1).exp();
        let s2 = (BETA0 + BETA1 * ou2).exp();
        sigma1.push(s1);
        sigma2.push(s2);

        let db1 = sdt * normal(rng);
        let db2 = sdt * normal(rng);
        let dw = sdt * normal(rng);

        let last1 = *x1.last().unwrap();
        let last2 = *x2.last().unwrap();
        x1.push(last1 + MU * dt + RHO_LEV * s1 * db1 + load_common * s1 * dw);
        x2.push(last2 + MU * dt + RHO_LEV * s2 * db2 + load_common * s2 * dw);

        ou1 += ALPHA_OU * ou1 * dt + db1;
        ou2 += ALPHA_OU * ou2 * dt + db2;
    }
    sigma1.push((BETA0 + BETA1 * ou1).exp());
    sigma2.push((BETA0 + BETA1 * ou2).exp());

    FactorPaths {
        x1,
        x2,
        sigma1,
        sigma2,
    }
}

#[inline]
fn normal(rng: &mut Stream) -> f64 {
    StandardNormal.sample(rng)
}

/// Jump covariation matrix from realized grid increments.
fn jump_covariation_matrix(j1: &[f64], j2: &[f64]) -> [[f64; 2]; 2] {
    let (mut v11, mut v12, mut v22) = (0.0, 0.0, 0.0);
    for k in 1..j1.len() {
        let d1 = j1[k] - j1[k - 1];
        let d2 = j2[k] - j2[k - 1];
        v11 += d1 * d1;
        v12 += d1 * d2;
        v22 += d2 * d2;
    }
    [[v11, v12], [v12, v22]]
}

/// Grid indices of sampled times (the sampler emits multiples of 1/n).
fn sample_indices(n: usize, lambda: f64, rng: &mut Stream) -> Vec<usize> {
    poisson_sample_times(n, lambda, rng)
        .into_iter()
        .map(|t| (t * n as f64).round() as usize)
        .collect()
}

fn tick_series_from(times_idx: &[usize], n: usize, values: Vec<f64>) -> Result<TickSeries> {
    let times: Vec<f64> = times_idx.iter().map(|&k| k as f64 / n as f64).collect();
    TickSeries::new(times, values)
}

/// Model 1: stochastic volatility and additive noise.
pub fn simulate_model1(scn: &SimScenario, rng: &mut Stream) -> Result<SimOutput> {
    scn.validate()?;
    let n = scn.n;
    let paths = factor_sv_paths(n, rng);
    let (j1, j2) = gen_jumps(scn.jumps, scn.c, scn.gamma, model1_r(), n, rng);

    // omega² = eta² sqrt((1/n) Σ_{i=1..n} sigma_i⁴), per asset
    let omega = |sigma: &[f64]| -> f64 {
        let s4: f64 = sigma[1..].iter().map(|s| s.powi(4)).sum::<f64>() / n as f64;
        (ETA_SQ * s4.sqrt()).sqrt()
    };
    let om1 = omega(&paths.sigma1);
    let om2 = omega(&paths.sigma2);
    let r = model1_r();
    let r_orth = (1.0 - r * r).sqrt();

    // cross-correlated at common times, independent otherwise
    let mut u1 = Vec::with_capacity(n + 1);
    let mut u2 = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        let z1 = normal(rng);
        let z2 = normal(rng);
        u1.push(om1 * z1);
        u2.push(om2 * (r * z1 + r_orth * z2));
    }

    let idx1 = sample_indices(n, scn.lambda.0, rng);
    let idx2 = sample_indices(n, scn.lambda.1, rng);
    let v1: Vec<f64> = idx1.iter().map(|&k| paths.x1[k] + j1[k] + u1[k]).collect();
    let v2: Vec<f64> = idx2.iter().map(|&k| paths.x2[k] + j2[k] + u2[k]).collect();

    Ok(SimOutput {
        ticks1: tick_series_from(&idx1, n, v1)?,
        ticks2: tick_series_from(&idx2, n, v2)?,
        true_ic: paths.integrated_cov(),
        true_jv: jump_covariation_matrix(&j1, &j2),
    })
}

/// Model 2: constant volatility, jumps scaled by sigma, prices rounded to
/// the cent grid with a Bernoulli up-rounding term.
pub fn simulate_model2(scn: &SimScenario, rng: &mut Stream) -> Result<SimOutput> {
    scn.validate()?;
    let n = scn.n;
    let dt = 1.0 / n as f64;
    let sdt = dt.sqrt();
    let sigma = MODEL2_SIGMA;
    let x0 = MODEL2_X0_EXP.ln();
    let r_orth = (1.0 - MODEL2_R * MODEL2_R).sqrt();

    let mut x1 = Vec::with_capacity(n + 1);
    let mut x2 = Vec::with_capacity(n + 1);
    x1.push(x0);
    x2.push(x0);
    for _ in 0..n {
        let z1 = normal(rng);
        let z2 = normal(rng);
        x1.push(x1.last().unwrap() + sigma * sdt * z1);
        x2.push(x2.last().unwrap() + sigma * sdt * (MODEL2_R * z1 + r_orth * z2));
    }

    let (j1, j2) = gen_jumps(scn.jumps, scn.c, scn.gamma, MODEL2_R, n, rng);

    let idx1 = sample_indices(n, scn.lambda.0, rng);
    let idx2 = sample_indices(n, scn.lambda.1, rng);
    let v1: Vec<f64> = idx1
        .iter()
        .map(|&k| round_observation(x1[k] + sigma * j1[k], MODEL2_ALPHA, rng))
        .collect();
    let v2: Vec<f64> = idx2
        .iter()
        .map(|&k| round_observation(x2[k] + sigma * j2[k], MODEL2_ALPHA, rng))
        .collect();

    let s2 = sigma * sigma;
    let jv = jump_covariation_matrix(&j1, &j2);
    Ok(SimOutput {
        ticks1: tick_series_from(&idx1, n, v1)?,
        ticks2: tick_series_from(&idx2, n, v2)?,
        true_ic: [[s2, MODEL2_R * s2], [MODEL2_R * s2, s2]],
        true_jv: [
            [s2 * jv[0][0], s2 * jv[0][1]],
            [s2 * jv[1][0], s2 * jv[1][1]],
        ],
    })
}

/// Model 3: Model-1 latent dynamics with endogenous noise proportional to
/// the lagged efficient return at the asset's own sampling times.
pub fn simulate_model3(scn: &SimScenario, rng: &mut Stream) -> Result<SimOutput> {
    simulate_model3_with_delta(scn, MODEL3_DELTA, rng)
}

fn simulate_model3_with_delta(
    scn: &SimScenario,
    delta: f64,
    rng: &mut Stream,
) -> Result<SimOutput> {
    scn.validate()?;
    let n = scn.n;
    let paths = factor_sv_paths(n, rng);
    let (j1, j2) = gen_jumps(scn.jumps, scn.c, scn.gamma, model1_r(), n, rng);

    let idx1 = sample_indices(n, scn.lambda.0, rng);
    let idx2 = sample_indices(n, scn.lambda.1, rng);

    let observe = |x: &[f64], j: &[f64], idx: &[usize], lambda: f64| -> Vec<f64> {
        let scale = delta * (n as f64 / lambda).sqrt();
        let mut prev = 0usize; // S^{-1} = 0
        idx.iter()
            .map(|&k| {
                let u = scale * (x[k] - x[prev]);
                prev = k;
                x[k] + j[k] + u
            })
            .collect()
    };
    let v1 = observe(&paths.x1, &j1, &idx1, scn.lambda.0);
    let v2 = observe(&paths.x2, &j2, &idx2, scn.lambda.1);

    Ok(SimOutput {
        ticks1: tick_series_from(&idx1, n, v1)?,
        ticks2: tick_series_from(&idx2, n, v2)?,
        true_ic: paths.integrated_cov(),
        true_jv: jump_covariation_matrix(&j1, &j2),
    })
}

/// Round a log-price to the cent grid: with probability p the price rounds
/// up to the next multiple of `alpha`, otherwise down, where p is the
/// log-scale interpolation weight of the true price between the two grid
/// neighbors.
fn round_observation(z: f64, alpha: f64, rng: &mut Stream) -> f64 {
    let e = z.exp();
    let x = e / alpha;
    // tolerate float fuzz around exact grid multiples
    let m_lo = (x + 1e-9).floor();
    let m_hi = (x - 1e-9).ceil();
    debug_assert!(m_lo >= 1.0, "price fell below one grid step");
    if m_hi <= m_lo {
        return (alpha * m_lo).ln();
    }
    let lo = alpha * m_lo;
    let hi = alpha * m_hi;
    let p = (e / lo).ln() / (hi / lo).ln();
    let u = if rng.random::<f64>() < p {
        (hi / e).ln()
    } else {
        0.0
    };
    (alpha * ((z + u).exp() / alpha + 1e-9).floor()).ln()
}

/// Jump paths on the grid for both assets, mixed by `r_vg` in the VG case.
pub fn gen_jumps(
    kind: JumpKind,
    c: f64,
    gamma: f64,
    r_vg: f64,
    n: usize,
    rng: &mut Stream,
) -> (Vec<f64>, Vec<f64>) {
    match kind {
        JumpKind::No => (vec![0.0; n + 1], vec![0.0; n + 1]),
        JumpKind::Scp1 => {
            // one jump, uniform over grid cells, of size eps sqrt(S) with
            // S ~ IG(c, c²/gamma)
            let cell = 1 + ((rng.random::<f64>() * n as f64).floor() as usize).min(n - 1);
            let s = sample_inverse_gaussian(c, c * c / gamma, rng);
            let size = normal(rng) * s.sqrt();
            let mut path = vec![0.0; n + 1];
            for slot in path[cell..].iter_mut() {
                *slot = size;
            }
            (path.clone(), path)
        }
        JumpKind::Vg => {
            let l1 = variance_gamma_path(c, gamma, n, rng);
            let l2 = variance_gamma_path(c, gamma, n, rng);
            let orth = (1.0 - r_vg * r_vg).sqrt();
            let j2: Vec<f64> = l1
                .iter()
                .zip(&l2)
                .map(|(a, b)| r_vg * a + orth * b)
                .collect();
            (l1, j2)
        }
    }
}

/// A variance gamma path on the grid: Brownian motion time-changed by a
/// Gamma subordinator with increment law Γ(Δt·c/γ, rate 1/γ), so the
/// unit-time subordinator has mean c and variance cγ.
fn variance_gamma_path(c: f64, gamma: f64, n: usize, rng: &mut Stream) -> Vec<f64> {
    let shape = (c / gamma) / n as f64;
    let subordinator = Gamma::new(shape, gamma).expect("valid gamma parameters");
    let mut path = Vec::with_capacity(n + 1);
    path.push(0.0);
    let mut level = 0.0;
    for _ in 0..n {
        let ds: f64 = subordinator.sample(rng);
        level += ds.sqrt() * normal(rng);
        path.push(level);
    }
    path
}

/// One inverse Gaussian draw IG(mu, lam) via the Michael-Schucany-Haas
/// transform, written in the cancellation-free form
///
/// ```text
/// x = mu (sqrt(4 lam + mu y) - sqrt(mu y)) / (sqrt(4 lam + mu y) + sqrt(mu y)),
/// ```
///
/// y = Z², which keeps the small root strictly positive.
pub fn sample_inverse_gaussian(mu: f64, lam: f64, rng: &mut Stream) -> f64 {
    assert!(mu > 0.0 && lam > 0.0, "IG parameters must be positive");
    let z = normal(rng);
    let muy = mu * z * z;
    let root = (4.0 * lam + muy).sqrt();
    let x = mu * (root - muy.sqrt()) / (root + muy.sqrt());
    let u: f64 = rng.random();
    if u <= mu / (mu + x) {
        x
    } else {
        mu * mu / x
    }
}
