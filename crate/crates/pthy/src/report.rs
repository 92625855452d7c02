//! The estimate report produced for a pair of tick series: PHY and PTHY
//! point estimates, their difference (the jump covariation estimate), and
//! optionally the asymptotic-variance block with a feasible confidence
//! interval.

use serde::Serialize;

use crate::avar::{integrated_avar, AvarConfig, AvarReport};
use crate::error::Result;
use crate::estimators::{CovEstimate, SyncedPair};
use crate::sampling::TickSeries;
use crate::threshold::{plut_profile, DEFAULT_EPSILON};
use crate::weights::WeightProfile;

/// Where the truncation thresholds come from.
#[derive(Debug, Clone)]
pub enum ThresholdChoice {
    /// No truncation: PTHY equals PHY.
    None,
    /// Pre-averaged local universal threshold.
    Plut { epsilon: f64 },
    /// Externally supplied per-index thresholds, one per pre-averaged
    /// return of each leg.
    Fixed { rho1: Vec<f64>, rho2: Vec<f64> },
}

impl ThresholdChoice {
    fn describe(&self) -> String {
        match self {
            ThresholdChoice::None => "none".into(),
            ThresholdChoice::Plut { epsilon } => format!("plut(epsilon={epsilon})"),
            ThresholdChoice::Fixed { .. } => "file".into(),
        }
    }
}

/// Configuration of one `estimate` invocation.
#[derive(Debug, Clone)]
pub struct EstimateConfig {
    pub theta: f64,
    /// Evaluation time in normalized session units.
    pub t: f64,
    pub thresholds: ThresholdChoice,
    /// Confidence level; set to add the asymptotic-variance block.
    pub ci: Option<f64>,
    /// Override of the avar block length.
    pub h_n: Option<f64>,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig {
            theta: 0.15,
            t: 1.0,
            thresholds: ThresholdChoice::Plut {
                epsilon: DEFAULT_EPSILON,
            },
            ci: None,
            h_n: None,
        }
    }
}

/// Point estimates plus diagnostics for one pair of series.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub phy: CovEstimate,
    pub pthy: CovEstimate,
    pub jump_covariation: f64,
    pub theta: f64,
    pub n_refresh: usize,
    pub thresholds: String,
    pub avar: Option<AvarReport>,
}

/// Estimate the integrated covariance and jump covariation of a pair.
pub fn estimate_pair(
    a: &TickSeries,
    b: &TickSeries,
    profile: &WeightProfile,
    cfg: &EstimateConfig,
) -> Result<EstimateReport> {
    let pair = SyncedPair::build(a, b, cfg.theta, profile)?;

    let resolved: Option<(Vec<f64>, Vec<f64>)> = match &cfg.thresholds {
        ThresholdChoice::None => None,
        ThresholdChoice::Plut { epsilon } => Some((
            plut_profile(pair.pre_averaged_1(), *epsilon)?.rho,
            plut_profile(pair.pre_averaged_2(), *epsilon)?.rho,
        )),
        ThresholdChoice::Fixed { rho1, rho2 } => Some((rho1.clone(), rho2.clone())),
    };
    let (phy, pthy) = match &resolved {
        None => pair.estimate(None, cfg.t)?,
        Some((r1, r2)) => pair.estimate(Some((r1, r2)), cfg.t)?,
    };

    let avar = match cfg.ci {
        None => None,
        Some(level) => {
            let epsilon = match &cfg.thresholds {
                ThresholdChoice::Plut { epsilon } => *epsilon,
                _ => DEFAULT_EPSILON,
            };
            Some(integrated_avar(
                a,
                b,
                profile,
                &AvarConfig {
                    theta: cfg.theta,
                    epsilon,
                    h_n: cfg.h_n,
                    ci_level: level,
                    t: cfg.t,
                },
            )?)
        }
    };

    Ok(EstimateReport {
        jump_covariation: phy.value - pthy.value,
        phy,
        pthy,
        theta: cfg.theta,
        n_refresh: pair.grid().len(),
        thresholds: cfg.thresholds.describe(),
        avar,
    })
}
