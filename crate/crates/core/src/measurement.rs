//! Ideal homodyne detection and classical feedback.
//!
//! Conditioning on a perfect measurement of quadrature `m` with outcome `y`
//! updates the remaining quadratures `r` as
//!
//! ```text
//! μ_r ← μ_r + K (y − μ_m),     Σ_rr ← Σ_rr − K Σ_mr,     K = Σ_rm / Σ_mm
//! ```
//!
//! where `1/Σ_mm` is the pseudoinverse of the projected block (zero when the
//! measured variance is below [`RANK_TOL`]). The measured mode is removed
//! from the register.
//!
//! [`OutcomeSource::Averaged`] gives the unconditional state, i.e. the
//! average of the conditional states over the outcome distribution. For
//! measurement followed by linear feedback this is the Heisenberg-picture
//! substitution `r ← r + g·m`, which is how the deferred two-pass circuit
//! and the measured single-pass circuit are compared.

use nalgebra::{DMatrix, DVector};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::phase_space::{Axis, GaussianState, ModeLabel};

/// Variances below this are treated as zero in the conditional update.
pub const RANK_TOL: f64 = 1e-12;

/// Where a homodyne outcome comes from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeSource {
    /// Drawn from the Gaussian marginal with a seeded generator.
    Sampled { seed: u64 },
    /// Taken as given.
    Forced(f64),
    /// The marginal mean.
    MeanValue,
    /// No single outcome: the state is averaged over all outcomes.
    Averaged,
}

impl Default for OutcomeSource {
    fn default() -> Self {
        OutcomeSource::Averaged
    }
}

impl OutcomeSource {
    pub fn is_conditional(&self) -> bool {
        !matches!(self, OutcomeSource::Averaged)
    }
}

/// Seed for trial `trial` of an ensemble rooted at `root`.
///
/// Trials draw from independent ChaCha streams, so seeds do not depend on
/// evaluation order.
pub fn trial_seed(root: u64, trial: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(trial);
    rng.next_u64()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomodyneResult {
    pub outcome: f64,
    pub post_state: GaussianState,
    pub measured_mode: ModeLabel,
    pub measured_axis: Axis,
    pub marginal_mean: f64,
    pub marginal_variance: f64,
    /// `K = Σ_rm / Σ_mm` over the remaining quadratures.
    pub gain: Vec<f64>,
    /// False when the post state is the unconditional average.
    pub conditional: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedbackGain {
    pub target: ModeLabel,
    pub axis: Axis,
    pub gain: f64,
}

/// Displacements proportional to a measured outcome.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRule {
    pub gains: Vec<FeedbackGain>,
}

impl FeedbackRule {
    pub fn new(gains: Vec<FeedbackGain>) -> Result<Self> {
        if let Some(bad) = gains.iter().find(|g| !g.gain.is_finite()) {
            return Err(domain(format!("non-finite feedback gain on {}", bad.target)));
        }
        Ok(FeedbackRule { gains })
    }

    /// One gain per `(target, axis)` pair.
    pub fn from_pairs(pairs: &[(ModeLabel, Axis, f64)]) -> Result<Self> {
        FeedbackRule::new(
            pairs
                .iter()
                .map(|&(target, axis, gain)| FeedbackGain { target, axis, gain })
                .collect(),
        )
    }

    pub fn scaled(&self, factor: f64) -> FeedbackRule {
        FeedbackRule {
            gains: self
                .gains
                .iter()
                .map(|g| FeedbackGain {
                    gain: g.gain * factor,
                    ..*g
                })
                .collect(),
        }
    }

    /// Re-addresses the rule after `removed` is dropped from the register.
    pub fn after_removal(&self, removed: usize) -> Result<FeedbackRule> {
        let gains = self
            .gains
            .iter()
            .map(|g| {
                Ok(FeedbackGain {
                    target: g.target.after_removal(removed)?,
                    ..*g
                })
            })
            .collect::<Result<_>>()?;
        Ok(FeedbackRule { gains })
    }
}

fn remaining_indices(num_modes: usize, mode: usize) -> Vec<usize> {
    (0..2 * num_modes).filter(|&i| i / 2 != mode).collect()
}

/// `Σ_rm` times the pseudoinverse of `Σ_mm`.
fn conditioning_gain(sigma: &DMatrix<f64>, m: usize, rest: &[usize]) -> DVector<f64> {
    let var = sigma[(m, m)];
    let inv = if var > RANK_TOL { 1.0 / var } else { 0.0 };
    DVector::from_iterator(rest.len(), rest.iter().map(|&r| sigma[(r, m)] * inv))
}

/// Measures one quadrature of `mode` and removes the mode from the register.
pub fn homodyne(
    s: &GaussianState,
    mode: ModeLabel,
    axis: Axis,
    source: OutcomeSource,
) -> Result<HomodyneResult> {
    s.check_physical()?;
    mode.check_in(s.num_modes())?;
    if s.num_modes() < 2 {
        return Err(domain("homodyne would leave an empty register"));
    }
    let m = mode.quadrature(axis);
    let rest = remaining_indices(s.num_modes(), mode.index);
    let mu = s.mean();
    let sigma = s.cov();
    let var_m = sigma[(m, m)];
    let mean_m = mu[m];
    let k = conditioning_gain(sigma, m, &rest);

    let outcome = match source {
        OutcomeSource::Forced(v) => {
            if !v.is_finite() {
                return Err(domain("forced outcome must be finite"));
            }
            v
        }
        OutcomeSource::MeanValue | OutcomeSource::Averaged => mean_m,
        OutcomeSource::Sampled { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sd = var_m.max(0.0).sqrt();
            Normal::new(mean_m, sd)
                .map_err(|e| Error::InvalidCovariance(format!("outcome distribution: {e}")))?
                .sample(&mut rng)
        }
    };

    let mean_r = DVector::from_iterator(rest.len(), rest.iter().map(|&r| mu[r]));
    let cov_r = DMatrix::from_fn(rest.len(), rest.len(), |i, j| sigma[(rest[i], rest[j])]);
    let conditional = source.is_conditional();
    let (mean, cov) = if conditional {
        let sigma_mr = DVector::from_iterator(rest.len(), rest.iter().map(|&r| sigma[(m, r)]));
        let cov = &cov_r - &k * sigma_mr.transpose();
        (mean_r + &k * (outcome - mean_m), (&cov + cov.transpose()) * 0.5)
    } else {
        (mean_r, cov_r)
    };
    let post_state = GaussianState::from_parts(mean, cov);
    Ok(HomodyneResult {
        outcome,
        post_state,
        measured_mode: mode,
        measured_axis: axis,
        marginal_mean: mean_m,
        marginal_variance: var_m,
        gain: k.iter().copied().collect(),
        conditional,
    })
}

/// Shifts each targeted quadrature mean by `gain · outcome`.
pub fn feed_back(s: &GaussianState, rule: &FeedbackRule, outcome: f64) -> Result<GaussianState> {
    let mut mean = s.mean().clone();
    for g in &rule.gains {
        g.target.check_in(s.num_modes())?;
        mean[g.target.quadrature(g.axis)] += g.gain * outcome;
    }
    Ok(GaussianState::from_parts(mean, s.cov().clone()))
}

/// State after measurement and feedback, with the outcome when there is one.
#[derive(Clone, Debug, PartialEq)]
pub struct FedBack {
    pub outcome: Option<f64>,
    pub state: GaussianState,
}

/// Homodyne on `mode`, then feedback with `rule`.
///
/// Rule targets address the register *before* the measured mode is removed.
pub fn measure_and_feed_traced(
    s: &GaussianState,
    mode: ModeLabel,
    axis: Axis,
    rule: &FeedbackRule,
    source: OutcomeSource,
) -> Result<FedBack> {
    let shifted = rule.after_removal(mode.index)?;
    if let OutcomeSource::Averaged = source {
        s.check_physical()?;
        mode.check_in(s.num_modes())?;
        for g in &rule.gains {
            g.target.check_in(s.num_modes())?;
        }
        return Ok(FedBack {
            outcome: None,
            state: averaged_feedback(s, mode, axis, rule)?,
        });
    }
    let h = homodyne(s, mode, axis, source)?;
    let state = feed_back(&h.post_state, &shifted, h.outcome)?;
    Ok(FedBack {
        outcome: Some(h.outcome),
        state,
    })
}

pub fn measure_and_feed(
    s: &GaussianState,
    mode: ModeLabel,
    axis: Axis,
    rule: &FeedbackRule,
    source: OutcomeSource,
) -> Result<GaussianState> {
    measure_and_feed_traced(s, mode, axis, rule, source).map(|f| f.state)
}

/// Unconditional state: `r_i ← r_i + g_i m` on the remaining quadratures.
fn averaged_feedback(
    s: &GaussianState,
    mode: ModeLabel,
    axis: Axis,
    rule: &FeedbackRule,
) -> Result<GaussianState> {
    if s.num_modes() < 2 {
        return Err(domain("homodyne would leave an empty register"));
    }
    let m = mode.quadrature(axis);
    let rest = remaining_indices(s.num_modes(), mode.index);
    let mut t = DMatrix::zeros(rest.len(), s.dim());
    for (row, &r) in rest.iter().enumerate() {
        t[(row, r)] = 1.0;
    }
    for g in &rule.gains {
        let q = g.target.quadrature(g.axis);
        let row = rest
            .iter()
            .position(|&r| r == q)
            .ok_or_else(|| domain(format!("feedback targets the measured mode {}", g.target)))?;
        t[(row, m)] += g.gain;
    }
    let mean = &t * s.mean();
    let cov = &t * s.cov() * t.transpose();
    Ok(GaussianState::from_parts(mean, (&cov + cov.transpose()) * 0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::{make_coherent, make_squeezed_vacuum, reduced_state, tensor};
    use crate::symplectic::{apply, cnot};
    use approx::assert_abs_diff_eq;

    const L: ModeLabel = ModeLabel::light(0);
    const A: ModeLabel = ModeLabel::atom_a(1);
    const B: ModeLabel = ModeLabel::atom_b(2);

    fn first_pass(ax: f64, ap: f64) -> GaussianState {
        let s = tensor(&[make_coherent(ax, ap), make_coherent(0.0, 0.0), make_coherent(0.0, 0.0)])
            .unwrap();
        let s = apply(&cnot(L, A).unwrap(), &s).unwrap();
        apply(&cnot(L, B).unwrap(), &s).unwrap()
    }

    fn eq6_rule() -> FeedbackRule {
        FeedbackRule::from_pairs(&[(A, Axis::P, 1.0), (B, Axis::P, 1.0)]).unwrap()
    }

    #[test]
    fn product_state_factor_unchanged() {
        let s = tensor(&[make_coherent(1.0, 2.0), make_squeezed_vacuum(0.2, Axis::X).unwrap()]).unwrap();
        for src in [OutcomeSource::Forced(3.7), OutcomeSource::Sampled { seed: 9 }, OutcomeSource::MeanValue] {
            let h = homodyne(&s, L, Axis::P, src).unwrap();
            assert_eq!(h.post_state, make_squeezed_vacuum(0.2, Axis::X).unwrap());
        }
    }

    #[test]
    fn first_pass_marginal_variance() {
        let h = homodyne(&first_pass(0.0, 0.0), L, Axis::P, OutcomeSource::MeanValue).unwrap();
        assert_abs_diff_eq!(h.marginal_variance, 1.5, epsilon = 1e-15);
        assert_eq!(h.post_state.num_modes(), 2);
    }

    #[test]
    fn conditional_covariance_is_outcome_independent() {
        let s = first_pass(0.4, -1.1);
        let a = homodyne(&s, L, Axis::P, OutcomeSource::Forced(-3.0)).unwrap();
        let b = homodyne(&s, L, Axis::P, OutcomeSource::Forced(5.5)).unwrap();
        assert_eq!(a.post_state.cov(), b.post_state.cov());
        // p_A' and p_B' each lose (1/2)²/(3/2) of variance to p_L'
        assert_abs_diff_eq!(a.post_state.cov()[(1, 1)], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a.post_state.cov()[(1, 3)], -1.0 / 6.0, epsilon = 1e-15);
        assert!(a.post_state.is_physical());
    }

    #[test]
    fn averaged_feedback_equals_outcome_average_of_conditionals() {
        // Exact Gauss–Hermite average over y of the feedback-displaced
        // conditional states, as an independent route to the unconditional state.
        let s = first_pass(0.7, -0.3);
        let rule = eq6_rule();
        let avg = measure_and_feed(&s, L, Axis::P, &rule, OutcomeSource::Averaged).unwrap();
        let h = homodyne(&s, L, Axis::P, OutcomeSource::MeanValue).unwrap();
        let (mu, sd) = (h.marginal_mean, h.marginal_variance.sqrt());
        // 3-point Gauss–Hermite (probabilists') integrates quadratics exactly
        let nodes = [(-3f64.sqrt(), 1.0 / 6.0), (0.0, 2.0 / 3.0), (3f64.sqrt(), 1.0 / 6.0)];
        let mut mean = DVector::zeros(4);
        let mut second = DMatrix::zeros(4, 4);
        let mut cond_cov = DMatrix::zeros(4, 4);
        for (z, w) in nodes {
            let st = measure_and_feed(&s, L, Axis::P, &rule, OutcomeSource::Forced(mu + sd * z)).unwrap();
            mean += st.mean() * w;
            second += st.mean() * st.mean().transpose() * w;
            cond_cov = st.cov().clone();
        }
        let cov = cond_cov + second - &mean * mean.transpose();
        assert!((avg.mean() - mean).amax() < 1e-12);
        assert!((avg.cov() - cov).amax() < 1e-12);
        // clones: unit gain, half a photon of noise
        let a = reduced_state(&avg, &[ModeLabel::atom_a(0)]).unwrap();
        assert_abs_diff_eq!(a.mean()[0], 0.7, epsilon = 1e-14);
        assert_abs_diff_eq!(a.mean()[1], -0.3, epsilon = 1e-14);
        assert_abs_diff_eq!(a.cov()[(0, 0)], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(a.cov()[(1, 1)], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn feedback_shifts_means_only() {
        let s = GaussianState::vacuum(2).unwrap();
        let rule = FeedbackRule::from_pairs(&[(ModeLabel::atom_a(0), Axis::P, 1.0), (ModeLabel::atom_b(1), Axis::P, 1.0)]).unwrap();
        assert_eq!(feed_back(&s, &rule, 0.0).unwrap(), s);
        let out = feed_back(&s, &rule, 2.5).unwrap();
        assert_eq!(out.mean().as_slice(), &[0.0, 2.5, 0.0, 2.5]);
        assert_eq!(out.cov(), s.cov());
        let rule = FeedbackRule::from_pairs(&[(ModeLabel::atom_a(0), Axis::P, 2f64.sqrt()), (ModeLabel::atom_b(1), Axis::P, 1.0)]).unwrap();
        let out = feed_back(&s, &rule, 1.0).unwrap();
        assert_abs_diff_eq!(out.mean()[1], 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(out.mean()[3], 1.0);
        let bad = FeedbackRule::from_pairs(&[(ModeLabel::ancilla(4), Axis::X, 1.0)]).unwrap();
        assert!(feed_back(&s, &bad, 1.0).is_err());
        assert!(FeedbackRule::from_pairs(&[(A, Axis::X, f64::NAN)]).is_err());
    }

    #[test]
    fn feedback_cannot_target_measured_mode() {
        let s = first_pass(0.0, 0.0);
        let rule = FeedbackRule::from_pairs(&[(L, Axis::X, 1.0)]).unwrap();
        assert!(measure_and_feed(&s, L, Axis::P, &rule, OutcomeSource::Forced(1.0)).is_err());
        assert!(measure_and_feed(&s, L, Axis::P, &rule, OutcomeSource::Averaged).is_err());
    }

    #[test]
    fn forced_outcomes_share_covariance_after_feedback() {
        let s = first_pass(1.0, 2.0);
        let a = measure_and_feed(&s, L, Axis::P, &eq6_rule(), OutcomeSource::Forced(0.0)).unwrap();
        let b = measure_and_feed(&s, L, Axis::P, &eq6_rule(), OutcomeSource::Forced(-7.0)).unwrap();
        assert_eq!(a.cov(), b.cov());
    }

    #[test]
    fn sampling_is_reproducible() {
        let s = first_pass(0.0, 0.0);
        let a = homodyne(&s, L, Axis::P, OutcomeSource::Sampled { seed: 42 }).unwrap();
        let b = homodyne(&s, L, Axis::P, OutcomeSource::Sampled { seed: 42 }).unwrap();
        let c = homodyne(&s, L, Axis::P, OutcomeSource::Sampled { seed: 43 }).unwrap();
        assert_eq!(a.outcome, b.outcome);
        assert_ne!(a.outcome, c.outcome);
        assert_ne!(trial_seed(1, 0), trial_seed(1, 1));
        assert_eq!(trial_seed(7, 3), trial_seed(7, 3));
    }

    #[test]
    fn zero_variance_quadrature_uses_pseudoinverse() {
        let mut cov = DMatrix::identity(4, 4) * 0.5;
        cov[(1, 1)] = 1e-14;
        cov[(1, 2)] = 1e-14;
        cov[(2, 1)] = 1e-14;
        let k = conditioning_gain(&cov, 1, &remaining_indices(2, 0));
        assert_eq!(k.as_slice(), &[0.0, 0.0]);
        cov[(1, 1)] = 0.5;
        cov[(1, 2)] = 0.25;
        cov[(2, 1)] = 0.25;
        let k = conditioning_gain(&cov, 1, &remaining_indices(2, 0));
        assert_eq!(k.as_slice(), &[0.5, 0.0]);
    }

    #[test]
    fn errors() {
        let s = first_pass(0.0, 0.0);
        assert!(homodyne(&s, ModeLabel::light(3), Axis::P, OutcomeSource::MeanValue).is_err());
        assert!(homodyne(&make_coherent(0.0, 0.0), L, Axis::P, OutcomeSource::MeanValue).is_err());
        assert!(homodyne(&s, L, Axis::P, OutcomeSource::Forced(f64::INFINITY)).is_err());
    }
}
