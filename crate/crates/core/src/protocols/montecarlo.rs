//! Monte Carlo ensembles of conditional protocol runs.
//!
//! Trial `t` of a run rooted at seed `s` draws its homodyne outcome from the
//! stream `trial_seed(s, t)`, so an ensemble is reproducible bit for bit
//! regardless of how trials are scheduled across threads.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{analytic_fidelities, pipeline, Ancillas, ProtocolConfig, ProtocolKind, CLONE_LABELS};
use crate::error::{Error, Result};
use crate::measurement::{trial_seed, OutcomeSource};
use crate::phase_space::{fidelity_with_coherent, reduced_state, GaussianState, ModeLabel};

/// One conditional run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub trial: u64,
    pub seed: u64,
    pub outcome: Option<f64>,
    pub clone_means: [[f64; 2]; 2],
    pub fidelities: [f64; 2],
    /// First 16 hex digits of SHA-256 over the clone covariance entries.
    pub clone_cov_digest: String,
}

/// Ensemble statistics for one clone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloneEnsemble {
    pub label: String,
    pub empirical_mean: [f64; 2],
    pub mean_std_error: [f64; 2],
    /// Conditional covariance plus the spread of the conditional means.
    pub mixture_covariance: [[f64; 2]; 2],
    pub mean_fidelity: f64,
    pub fidelity_std_error: f64,
    pub analytic_fidelity: Option<f64>,
    pub fidelity_abs_diff: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub protocol: ProtocolKind,
    pub seed: u64,
    pub trials: u64,
    pub input_alpha: [f64; 2],
    /// Number of distinct conditional covariances seen (1 for Gaussian runs).
    pub distinct_covariances: usize,
    pub mixture_mean: Vec<f64>,
    pub mixture_covariance: Vec<Vec<f64>>,
    pub clones: Vec<CloneEnsemble>,
}

impl MonteCarloSummary {
    /// The ensemble-averaged joint state of the clones.
    pub fn mixture_state(&self) -> GaussianState {
        let d = self.mixture_mean.len();
        let mean = DVector::from_column_slice(&self.mixture_mean);
        let cov = DMatrix::from_fn(d, d, |i, j| self.mixture_covariance[i][j]);
        GaussianState::from_parts(mean, cov)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloRun {
    pub trajectories: Vec<Trajectory>,
    pub summary: MonteCarloSummary,
}

fn cov_digest(cov: &DMatrix<f64>) -> String {
    let mut h = Sha256::new();
    for v in cov.iter() {
        h.update(v.to_le_bytes());
    }
    hex::encode(&h.finalize()[..8])
}

struct TrialOutput {
    trajectory: Trajectory,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

/// Runs `cfg.trials` conditional trials with outcomes sampled from `cfg`'s seed.
pub fn run_monte_carlo(cfg: &ProtocolConfig) -> Result<MonteCarloRun> {
    cfg.validate()?;
    run_with_ancillas(cfg, None)
}

pub(crate) fn run_with_ancillas(cfg: &ProtocolConfig, anc: Option<&Ancillas>) -> Result<MonteCarloRun> {
    let OutcomeSource::Sampled { seed: root } = cfg.outcome_source else {
        return Err(Error::Config("Monte Carlo runs need sampled outcomes".into()));
    };
    if cfg.protocol == ProtocolKind::SqueezePrep {
        return Err(Error::Config("squeeze-prep has no clones to sample".into()));
    }
    let [ax, ap] = cfg.input_alpha;
    let outputs: Vec<TrialOutput> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = trial_seed(root, trial);
            let p = pipeline(cfg, cfg.input_alpha, OutcomeSource::Sampled { seed }, anc)?;
            let mut clone_means = [[0.0; 2]; 2];
            let mut fidelities = [0.0; 2];
            for k in 0..2 {
                clone_means[k] = p.clones.mode_mean(k)?;
                let single = reduced_state(&p.clones, &[ModeLabel::atom_a(k)])?;
                fidelities[k] = fidelity_with_coherent(&single, ax, ap)?;
            }
            Ok(TrialOutput {
                trajectory: Trajectory {
                    trial,
                    seed,
                    outcome: p.outcome,
                    clone_means,
                    fidelities,
                    clone_cov_digest: cov_digest(p.clones.cov()),
                },
                mean: p.clones.mean().clone(),
                cov: p.clones.cov().clone(),
            })
        })
        .collect::<Result<_>>()?;

    let n = outputs.len() as f64;
    let d = outputs[0].mean.len();
    let mut mean = DVector::zeros(d);
    let mut cond = DMatrix::zeros(d, d);
    for o in &outputs {
        mean += &o.mean;
        cond += &o.cov;
    }
    mean /= n;
    cond /= n;
    let mut spread = DMatrix::zeros(d, d);
    for o in &outputs {
        let dm = &o.mean - &mean;
        spread += &dm * dm.transpose();
    }
    spread /= n;
    let mixture = &cond + &spread;

    let mut digests: Vec<&str> = outputs.iter().map(|o| o.trajectory.clone_cov_digest.as_str()).collect();
    digests.sort_unstable();
    digests.dedup();

    let analytic = analytic_fidelities(cfg);
    let sem = |values: &mut dyn Iterator<Item = f64>| -> (f64, f64) {
        let v: Vec<f64> = values.collect();
        let m = v.iter().sum::<f64>() / n;
        if v.len() < 2 {
            return (m, 0.0);
        }
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (var / n).sqrt())
    };
    let clones = CLONE_LABELS
        .iter()
        .enumerate()
        .map(|(k, label)| {
            let (mx, sx) = sem(&mut outputs.iter().map(|o| o.trajectory.clone_means[k][0]));
            let (mp, sp) = sem(&mut outputs.iter().map(|o| o.trajectory.clone_means[k][1]));
            let (f, sf) = sem(&mut outputs.iter().map(|o| o.trajectory.fidelities[k]));
            let a = analytic.map(|a| a[k]);
            CloneEnsemble {
                label: (*label).to_string(),
                empirical_mean: [mx, mp],
                mean_std_error: [sx, sp],
                mixture_covariance: [
                    [mixture[(2 * k, 2 * k)], mixture[(2 * k, 2 * k + 1)]],
                    [mixture[(2 * k + 1, 2 * k)], mixture[(2 * k + 1, 2 * k + 1)]],
                ],
                mean_fidelity: f,
                fidelity_std_error: sf,
                analytic_fidelity: a,
                fidelity_abs_diff: a.map(|a| (a - f).abs()),
            }
        })
        .collect();

    let summary = MonteCarloSummary {
        protocol: cfg.protocol,
        seed: root,
        trials: cfg.trials,
        input_alpha: cfg.input_alpha,
        distinct_covariances: digests.len(),
        mixture_mean: mean.iter().copied().collect(),
        mixture_covariance: (0..d).map(|i| (0..d).map(|j| mixture[(i, j)]).collect()).collect(),
        clones,
    };
    Ok(MonteCarloRun {
        trajectories: outputs.into_iter().map(|o| o.trajectory).collect(),
        summary,
    })
}
