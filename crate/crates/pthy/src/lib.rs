//! Estimation of integrated covariance and jump covariation of two Itô
//! semimartingales from noisy, nonsynchronous tick observations.
//!
//! The point estimators are the pre-averaged Hayashi-Yoshida estimator
//! (PHY) and its truncated version (PTHY) on refresh-interpolated sampling
//! designs; their difference estimates the jump covariation. Thresholds
//! come from the pre-averaged local universal threshold (PLUT), and a
//! kernel-based estimator of the asymptotic variance yields feasible
//! confidence intervals. A simulator of three bivariate stochastic
//! volatility models plus a Monte Carlo harness reproduce bias/RMSE tables
//! at desk scale.

pub mod avar;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod preavg;
pub mod report;
pub mod rng;
pub mod sampling;
pub mod simulate;
pub mod threshold;
pub mod weights;

pub use error::{Error, Result};
