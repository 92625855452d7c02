//! Monte Carlo driver: runs replications in parallel with per-replication
//! random streams, compares estimators against the recorded ground truths
//! and tabulates bias and RMSE.
//!
//! Replication r of a run with master seed S draws from the stream keyed
//! by hash(S, r), and aggregation walks replications in index order, so
//! results are bit-identical no matter how many workers execute the run.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{
    bipower_covariation, subsampled_bpv, subsampled_rc, subsampled_rv, SyncedPair,
};
use crate::rng::{derive_seed, Stream};
use crate::sampling::DEFAULT_SESSION_SECONDS;
use crate::simulate;
use crate::simulate::{simulate_with, Model, SimOutput, SimScenario};
use crate::threshold::plut_profile;
use crate::weights::WeightProfile;

/// Estimation target: an entry of the integrated covariance or jump
/// covariation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Target {
    Ic11,
    Ic12,
    Ic22,
    Jv11,
    Jv12,
    Jv22,
}

impl Target {
    pub fn label(self) -> &'static str {
        match self {
            Target::Ic11 => "[X1]",
            Target::Ic12 => "[X1,X2]",
            Target::Ic22 => "[X2]",
            Target::Jv11 => "JV11",
            Target::Jv12 => "JV12",
            Target::Jv22 => "JV22",
        }
    }

    fn truth(self, out: &SimOutput) -> f64 {
        match self {
            Target::Ic11 => out.true_ic[0][0],
            Target::Ic12 => out.true_ic[0][1],
            Target::Ic22 => out.true_ic[1][1],
            Target::Jv11 => out.true_jv[0][0],
            Target::Jv12 => out.true_jv[0][1],
            Target::Jv22 => out.true_jv[1][1],
        }
    }

    const IC: [Target; 3] = [Target::Ic11, Target::Ic12, Target::Ic22];
    const JV: [Target; 3] = [Target::Jv11, Target::Jv12, Target::Jv22];
}

/// Which estimator a table row reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EstimatorKind {
    /// PTHY with PLUT thresholds, targeting integrated covariance.
    Pthy,
    /// Subsampled 5-minute bipower (co)variation, targeting IC.
    Bpv,
    /// PHY - PTHY, targeting jump covariation.
    PhyMinusPthy,
    /// Subsampled realized (co)variance minus BPV, targeting JV.
    RvMinusBpv,
}

impl EstimatorKind {
    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::Pthy => "PTHY",
            EstimatorKind::Bpv => "BPV",
            EstimatorKind::PhyMinusPthy => "PHY-PTHY",
            EstimatorKind::RvMinusBpv => "RV-BPV",
        }
    }

    pub fn all() -> Vec<EstimatorKind> {
        vec![
            EstimatorKind::Pthy,
            EstimatorKind::Bpv,
            EstimatorKind::PhyMinusPthy,
            EstimatorKind::RvMinusBpv,
        ]
    }

    fn targets(self) -> &'static [Target] {
        match self {
            EstimatorKind::Pthy | EstimatorKind::Bpv => &Target::IC,
            EstimatorKind::PhyMinusPthy | EstimatorKind::RvMinusBpv => &Target::JV,
        }
    }
}

/// Tuning of the estimators inside the Monte Carlo loop.
#[derive(Debug, Clone)]
pub struct McConfig {
    pub theta: f64,
    /// PLUT exponent bump.
    pub epsilon: f64,
    pub estimators: Vec<EstimatorKind>,
    /// Benchmark grid spacing in seconds (5 minutes).
    pub bpv_delta_seconds: f64,
    /// Number of shifted benchmark grids and their step in seconds.
    pub bpv_shifts: usize,
    pub bpv_shift_seconds: f64,
    pub session_seconds: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            theta: 0.15,
            epsilon: crate::threshold::DEFAULT_EPSILON,
            estimators: EstimatorKind::all(),
            bpv_delta_seconds: 300.0,
            bpv_shifts: 300,
            bpv_shift_seconds: 1.0,
            session_seconds: DEFAULT_SESSION_SECONDS,
        }
    }
}

/// One aggregated table row.
#[derive(Debug, Clone, Serialize)]
pub struct McTableRow {
    pub model: Model,
    pub jumps: simulate::JumpKind,
    pub lambda: (f64, f64),
    pub target: Target,
    pub estimator: EstimatorKind,
    pub bias: f64,
    pub rmse: f64,
    pub reps: usize,
}

/// Per-replication estimation errors, indexed [estimator][target].
type RepErrors = [[f64; 6]; 4];

fn estimator_index(e: EstimatorKind) -> usize {
    match e {
        EstimatorKind::Pthy => 0,
        EstimatorKind::Bpv => 1,
        EstimatorKind::PhyMinusPthy => 2,
        EstimatorKind::RvMinusBpv => 3,
    }
}

fn target_index(t: Target) -> usize {
    match t {
        Target::Ic11 => 0,
        Target::Ic12 => 1,
        Target::Ic22 => 2,
        Target::Jv11 => 3,
        Target::Jv12 => 4,
        Target::Jv22 => 5,
    }
}

/// Errors of all requested estimators on one simulated replication.
fn replication_errors(
    out: &SimOutput,
    profile: &WeightProfile,
    cfg: &McConfig,
    scale: f64,
) -> Result<RepErrors> {
    let mut errors = [[f64::NAN; 6]; 4];
    let want_pthy = cfg
        .estimators
        .iter()
        .any(|e| matches!(e, EstimatorKind::Pthy | EstimatorKind::PhyMinusPthy));
    let want_bpv = cfg
        .estimators
        .iter()
        .any(|e| matches!(e, EstimatorKind::Bpv | EstimatorKind::RvMinusBpv));

    if want_pthy {
        // componentwise: each variance on the asset's own ticks, the
        // covariance on the refresh design
        let legs: [(usize, usize, Target, Target); 3] = [
            (0, 0, Target::Ic11, Target::Jv11),
            (0, 1, Target::Ic12, Target::Jv12),
            (1, 1, Target::Ic22, Target::Jv22),
        ];
        for (l1, l2, ic_target, jv_target) in legs {
            let (a, b) = (
                if l1 == 0 { &out.ticks1 } else { &out.ticks2 },
                if l2 == 0 { &out.ticks1 } else { &out.ticks2 },
            );
            let pair = SyncedPair::build(a, b, cfg.theta, profile)?;
            let rho1 = plut_profile(pair.pre_averaged_1(), cfg.epsilon)?.rho;
            let rho2 = plut_profile(pair.pre_averaged_2(), cfg.epsilon)?.rho;
            let (phy, pthy) = pair.estimate(Some((&rho1, &rho2)), 1.0)?;
            errors[0][target_index(ic_target)] = (pthy.value - ic_target.truth(out)) / scale;
            errors[2][target_index(jv_target)] =
                ((phy.value - pthy.value) - jv_target.truth(out)) / scale;
        }
    }

    if want_bpv {
        let delta = cfg.bpv_delta_seconds / cfg.session_seconds;
        let step = cfg.bpv_shift_seconds / cfg.session_seconds;
        let shifts = cfg.bpv_shifts;

        let bpv11 = subsampled_bpv(&out.ticks1, delta, shifts, step)?;
        let bpv22 = subsampled_bpv(&out.ticks2, delta, shifts, step)?;
        let bpv12 = bipower_covariation(&out.ticks1, &out.ticks2, delta, shifts, step)?;
        errors[1][target_index(Target::Ic11)] = (bpv11 - out.true_ic[0][0]) / scale;
        errors[1][target_index(Target::Ic12)] = (bpv12 - out.true_ic[0][1]) / scale;
        errors[1][target_index(Target::Ic22)] = (bpv22 - out.true_ic[1][1]) / scale;

        let rv11 = subsampled_rv(&out.ticks1, delta, shifts, step)?;
        let rv22 = subsampled_rv(&out.ticks2, delta, shifts, step)?;
        let rv12 = subsampled_rc(&out.ticks1, &out.ticks2, delta, shifts, step)?;
        errors[3][target_index(Target::Jv11)] = ((rv11 - bpv11) - out.true_jv[0][0]) / scale;
        errors[3][target_index(Target::Jv12)] = ((rv12 - bpv12) - out.true_jv[0][1]) / scale;
        errors[3][target_index(Target::Jv22)] = ((rv22 - bpv22) - out.true_jv[1][1]) / scale;
    }

    Ok(errors)
}

/// Run the Monte Carlo study: `reps` replications of `scn`, aggregated
/// into one row per (estimator, target). Replications run in parallel;
/// aggregation is in replication order. Any replication failure aborts
/// the run with the replication index and stream seed attached.
pub fn run_mc(scn: &SimScenario, reps: usize, cfg: &McConfig) -> Result<Vec<McTableRow>> {
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be at least 1".into()));
    }
    if cfg.estimators.is_empty() {
        return Err(Error::InvalidParameter(
            "estimator set must not be empty".into(),
        ));
    }
    // Model-2 rows are reported normalized by the constant-volatility
    // scale sigma².
    let scale = match scn.model {
        Model::Model2 => simulate::MODEL2_SIGMA * simulate::MODEL2_SIGMA,
        _ => 1.0,
    };

    let profile = crate::weights::make_min_weight();
    let per_rep: Vec<Result<RepErrors>> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = Stream::for_replication(scn.seed, rep);
            let out = simulate_with(scn, &mut rng)?;
            replication_errors(&out, &profile, cfg, scale).map_err(|source| Error::Replication {
                rep,
                seed: derive_seed(scn.seed, rep),
                source: Box::new(source),
            })
        })
        .collect();

    let mut acc_sum = [[0.0f64; 6]; 4];
    let mut acc_sq = [[0.0f64; 6]; 4];
    for (rep, res) in per_rep.into_iter().enumerate() {
        let errors = res.map_err(|e| match e {
            e @ Error::Replication { .. } => e,
            other => Error::Replication {
                rep: rep as u64,
                seed: derive_seed(scn.seed, rep as u64),
                source: Box::new(other),
            },
        })?;
        for ei in 0..4 {
            for ti in 0..6 {
                let e = errors[ei][ti];
                if e.is_nan() {
                    continue;
                }
                acc_sum[ei][ti] += e;
                acc_sq[ei][ti] += e * e;
            }
        }
    }

    let mut rows = Vec::new();
    for &est in &cfg.estimators {
        for &target in est.targets() {
            let ei = estimator_index(est);
            let ti = target_index(target);
            rows.push(McTableRow {
                model: scn.model,
                jumps: scn.jumps,
                lambda: scn.lambda,
                target,
                estimator: est,
                bias: acc_sum[ei][ti] / reps as f64,
                rmse: (acc_sq[ei][ti] / reps as f64).sqrt(),
                reps,
            });
        }
    }
    Ok(rows)
}

/// Output format of [`emit_table`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Text,
    Json,
}

/// Compact journal-table number: three decimals, no leading zero
/// ("-.003", ".136").
fn fmt_compact(x: f64) -> String {
    let s = format!("{x:.3}");
    if let Some(rest) = s.strip_prefix("0.") {
        format!(".{rest}")
    } else if let Some(rest) = s.strip_prefix("-0.") {
        format!("-.{rest}")
    } else {
        s
    }
}

/// "bias (rmse)" cell in the compact journal-table layout.
pub fn table_cell(bias: f64, rmse: f64) -> String {
    format!("{} ({})", fmt_compact(bias), fmt_compact(rmse))
}

/// Render rows as CSV, an aligned text table, or JSON.
pub fn emit_table(rows: &[McTableRow], format: TableFormat) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::InvalidParameter(
            "no rows to render (empty estimator set?)".into(),
        ));
    }
    match format {
        TableFormat::Csv => {
            let mut out =
                String::from("model,jumps,lambda1,lambda2,target,estimator,bias,rmse,reps\n");
            for r in rows {
                out.push_str(&format!(
                    "{:?},{:?},{},{},{},{},{},{},{}\n",
                    r.model,
                    r.jumps,
                    r.lambda.0,
                    r.lambda.1,
                    r.target.label(),
                    r.estimator.label(),
                    r.bias,
                    r.rmse,
                    r.reps
                ));
            }
            Ok(out)
        }
        TableFormat::Json => Ok(serde_json::to_string_pretty(rows)?),
        TableFormat::Text => {
            let head = &rows[0];
            let mut out = format!(
                "{:?} {:?} lambda=({},{}) reps={}\n",
                head.model, head.jumps, head.lambda.0, head.lambda.1, head.reps
            );
            // one block per estimator, columns are its targets
            let mut seen: Vec<EstimatorKind> = Vec::new();
            for r in rows {
                if !seen.contains(&r.estimator) {
                    seen.push(r.estimator);
                }
            }
            for est in seen {
                let cells: Vec<(String, String)> = rows
                    .iter()
                    .filter(|r| r.estimator == est)
                    .map(|r| (r.target.label().to_string(), table_cell(r.bias, r.rmse)))
                    .collect();
                out.push_str(&format!("{:<10}", est.label()));
                for (label, _) in &cells {
                    out.push_str(&format!("{label:>14}"));
                }
                out.push('\n');
                out.push_str(&format!("{:<10}", ""));
                for (_, cell) in &cells {
                    out.push_str(&format!("{cell:>14}"));
                }
                out.push('\n');
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::JumpKind;

    fn small_scenario() -> SimScenario {
        SimScenario {
            model: Model::Model1,
            jumps: JumpKind::No,
            lambda: (3.0, 6.0),
            n: 2000,
            c: 0.1,
            gamma: 0.25,
            seed: 4242,
        }
    }

    fn small_config() -> McConfig {
        McConfig {
            // 2000-step session: keep 5-minute analogue grids feasible
            bpv_delta_seconds: 100.0,
            bpv_shifts: 20,
            bpv_shift_seconds: 1.0,
            session_seconds: 2000.0,
            ..McConfig::default()
        }
    }

    #[test]
    fn single_rep_is_deterministic() {
        let scn = small_scenario();
        let cfg = small_config();
        let rows1 = run_mc(&scn, 1, &cfg).unwrap();
        let rows2 = run_mc(&scn, 1, &cfg).unwrap();
        assert_eq!(rows1.len(), 12);
        for (a, b) in rows1.iter().zip(&rows2) {
            assert_eq!(a.bias.to_bits(), b.bias.to_bits());
            assert_eq!(a.rmse.to_bits(), b.rmse.to_bits());
        }
        // with one rep, rmse = |bias|
        for r in &rows1 {
            assert!((r.rmse - r.bias.abs()).abs() < 1e-15);
        }
    }

    #[test]
    fn rmse_dominates_bias() {
        let scn = small_scenario();
        let rows = run_mc(&scn, 5, &small_config()).unwrap();
        for r in &rows {
            assert!(r.rmse >= 0.0);
            assert!(
                r.rmse * r.rmse - r.bias * r.bias >= -1e-15,
                "variance decomposition violated: {r:?}"
            );
        }
    }

    #[test]
    fn worker_count_does_not_change_bytes() {
        let scn = small_scenario();
        let cfg = small_config();
        let pool1 = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let pool4 = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let rows1 = pool1.install(|| run_mc(&scn, 6, &cfg)).unwrap();
        let rows4 = pool4.install(|| run_mc(&scn, 6, &cfg)).unwrap();
        let bytes1 = emit_table(&rows1, TableFormat::Csv).unwrap();
        let bytes4 = emit_table(&rows4, TableFormat::Csv).unwrap();
        assert_eq!(bytes1, bytes4);
    }

    #[test]
    fn rerun_reproduces_rows_exactly() {
        let scn = small_scenario();
        let cfg = small_config();
        let a = emit_table(&run_mc(&scn, 4, &cfg).unwrap(), TableFormat::Csv).unwrap();
        let b = emit_table(&run_mc(&scn, 4, &cfg).unwrap(), TableFormat::Csv).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn table_cell_format() {
        assert_eq!(table_cell(-0.003, 0.136), "-.003 (.136)");
        assert_eq!(table_cell(0.013, 0.074), ".013 (.074)");
        assert_eq!(table_cell(-0.0001, 0.0), "-.000 (.000)");
        assert_eq!(table_cell(1.25, 2.5), "1.250 (2.500)");
    }

    #[test]
    fn empty_inputs_rejected() {
        let scn = small_scenario();
        let mut cfg = small_config();
        cfg.estimators.clear();
        assert!(run_mc(&scn, 1, &cfg).is_err());
        assert!(emit_table(&[], TableFormat::Csv).is_err());
        assert!(run_mc(&small_scenario(), 0, &small_config()).is_err());
    }

    #[test]
    fn estimator_subset_produces_matching_rows() {
        let scn = small_scenario();
        let cfg = McConfig {
            estimators: vec![EstimatorKind::Pthy],
            ..small_config()
        };
        let rows = run_mc(&scn, 2, &cfg).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.estimator == EstimatorKind::Pthy));
        let text = emit_table(&rows, TableFormat::Text).unwrap();
        assert!(text.contains("PTHY"));
        assert!(!text.contains("BPV"));
    }
}
