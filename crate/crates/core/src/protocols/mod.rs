//! End-to-end cloning protocols and their reports.
//!
//! Every protocol acts on a register `L, A, B`: the light beam carrying the
//! coherent input and two clone modes. Each stage of a run is checked
//! against the uncertainty relation; a failure surfaces as
//! [`Error::InvariantViolation`] naming the stage.
//!
//! Runs come in three flavours depending on [`OutcomeSource`]:
//!
//! * `Averaged` (deterministic): the clone state averaged over homodyne
//!   outcomes, the state an outside observer assigns to the clones;
//! * `Forced`/`MeanValue` (conditional): one measurement record;
//! * `Sampled`: a Monte Carlo ensemble of conditional runs.

pub mod analytic;
mod montecarlo;
mod sweep;

use std::f64::consts::SQRT_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{homodyne, measure_and_feed_traced, trial_seed, FeedbackRule, OutcomeSource};
use crate::phase_space::{
    fidelity_with_coherent, make_coherent, make_squeezed_vacuum, reduced_state, tensor, Axis,
    GaussianState, ModeLabel,
};
use crate::symplectic::{apply, beam_splitter_balanced, qnd_pp, qnd_xp, squeezer, SymplecticOp};

pub use montecarlo::{run_monte_carlo, CloneEnsemble, MonteCarloRun, MonteCarloSummary, Trajectory};
pub use sweep::{sweep, SweepParam, SweepPoint, SweepRange};

const L: ModeLabel = ModeLabel::light(0);
const A: ModeLabel = ModeLabel::atom_a(1);
const B: ModeLabel = ModeLabel::atom_b(2);

/// Tolerance for deciding that a clone has unit gain and zero offset.
pub const UNIT_GAIN_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    /// Four C-NOT network, light passing the atoms twice.
    TwoPass,
    /// First pass, homodyne of `p_L`, feedback `(1, 1)` onto `p_A, p_B`.
    SinglePass,
    /// Atomic clone A plus a flying clone B squeezed by √2.
    AtomsLight,
    /// As `AtomsLight`, with clone B unsqueezed afterwards.
    AtomsLightUnsqueezed,
    /// Single pass with x-squeezed A and p-squeezed B ancillas.
    #[serde(alias = "asymmetric")]
    AsymmetricSinglePass,
    /// Squeezed-ancilla preparation by two QND probe pulses.
    SqueezePrep,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 6] = [
        ProtocolKind::TwoPass,
        ProtocolKind::SinglePass,
        ProtocolKind::AtomsLight,
        ProtocolKind::AtomsLightUnsqueezed,
        ProtocolKind::AsymmetricSinglePass,
        ProtocolKind::SqueezePrep,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ProtocolKind::TwoPass => "two-pass",
            ProtocolKind::SinglePass => "single-pass",
            ProtocolKind::AtomsLight => "atoms-light",
            ProtocolKind::AtomsLightUnsqueezed => "atoms-light-unsqueezed",
            ProtocolKind::AsymmetricSinglePass => "asymmetric",
            ProtocolKind::SqueezePrep => "squeeze-prep",
        }
    }

    fn has_measurement(&self) -> bool {
        !matches!(self, ProtocolKind::TwoPass)
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        match norm.as_str() {
            "two-pass" | "twopass" => Ok(ProtocolKind::TwoPass),
            "single-pass" | "singlepass" => Ok(ProtocolKind::SinglePass),
            "atoms-light" => Ok(ProtocolKind::AtomsLight),
            "atoms-light-unsqueezed" => Ok(ProtocolKind::AtomsLightUnsqueezed),
            "asymmetric" | "asymmetric-single-pass" => Ok(ProtocolKind::AsymmetricSinglePass),
            "squeeze-prep" => Ok(ProtocolKind::SqueezePrep),
            _ => Err(Error::Config(format!(
                "unknown protocol `{s}` (expected one of: {})",
                ProtocolKind::ALL.map(|p| p.name()).join(", ")
            ))),
        }
    }
}

/// Parameters of one protocol run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub protocol: ProtocolKind,
    /// Coherent input `(α_x, α_p)`.
    pub input_alpha: [f64; 2],
    /// Squeezed ancilla variance `V`.
    pub asymmetry_v: f64,
    /// QND interaction strength.
    pub kappa: f64,
    /// Scale applied to the protocol's feedback gains.
    pub feedback_gain: f64,
    pub outcome_source: OutcomeSource,
    pub trials: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            protocol: ProtocolKind::SinglePass,
            input_alpha: [0.0, 0.0],
            asymmetry_v: 0.5,
            kappa: 1.0,
            feedback_gain: 1.0,
            outcome_source: OutcomeSource::Averaged,
            trials: 1,
        }
    }
}

impl ProtocolConfig {
    pub fn new(protocol: ProtocolKind) -> Self {
        ProtocolConfig {
            protocol,
            ..Default::default()
        }
    }

    pub fn with_alpha(mut self, alpha_x: f64, alpha_p: f64) -> Self {
        self.input_alpha = [alpha_x, alpha_p];
        self
    }

    pub fn with_v(mut self, v: f64) -> Self {
        self.asymmetry_v = v;
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_feedback_gain(mut self, gain: f64) -> Self {
        self.feedback_gain = gain;
        self
    }

    pub fn with_outcomes(mut self, source: OutcomeSource) -> Self {
        self.outcome_source = source;
        self
    }

    pub fn with_trials(mut self, trials: u64) -> Self {
        self.trials = trials;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.input_alpha.iter().any(|a| !a.is_finite()) {
            return bad("input amplitude must be finite".into());
        }
        if !(self.asymmetry_v > 0.0) || !self.asymmetry_v.is_finite() {
            return bad(format!("V must be positive, got {}", self.asymmetry_v));
        }
        if !self.kappa.is_finite() {
            return bad("kappa must be finite".into());
        }
        if !self.feedback_gain.is_finite() {
            return bad("feedback gain must be finite".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.trials > 1 && !matches!(self.outcome_source, OutcomeSource::Sampled { .. }) {
            return bad("more than one trial needs sampled outcomes".into());
        }
        if let OutcomeSource::Forced(v) = self.outcome_source {
            if !v.is_finite() {
                return bad("forced outcome must be finite".into());
            }
        }
        Ok(())
    }

    /// True at the design point `κ = 1` with unscaled feedback.
    pub fn at_design_point(&self) -> bool {
        self.kappa == 1.0 && self.feedback_gain == 1.0
    }

    fn expect(&self, kinds: &[ProtocolKind]) -> Result<()> {
        self.validate()?;
        if kinds.contains(&self.protocol) {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "configuration is for `{}`, expected one of: {}",
                self.protocol,
                kinds.iter().map(|k| k.name()).collect::<Vec<_>>().join(", ")
            )))
        }
    }
}

/// How the reported clone states were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    /// Averaged over measurement outcomes.
    Deterministic,
    /// Conditioned on a single given outcome.
    Conditional,
    /// Monte Carlo over sampled outcomes.
    Sampled,
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunMode::Deterministic => "deterministic",
            RunMode::Conditional => "conditional",
            RunMode::Sampled => "sampled",
        })
    }
}

/// Figures of merit for one clone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloneReport {
    pub label: String,
    /// Fidelity with the input coherent state (ensemble mean when sampled).
    pub fidelity: f64,
    pub analytic_fidelity: Option<f64>,
    pub fidelity_abs_diff: Option<f64>,
    pub fidelity_std_error: Option<f64>,
    /// Worst-case fidelity over all coherent inputs: zero unless the clone
    /// has unit gain and no offset.
    pub universal_fidelity: f64,
    pub mean: [f64; 2],
    /// Linear map from `α` to the clone mean (outcome-averaged).
    pub gain: [[f64; 2]; 2],
    pub covariance: [[f64; 2]; 2],
    pub variances: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub protocol: ProtocolKind,
    pub input_alpha: [f64; 2],
    pub kappa: f64,
    pub asymmetry_v: Option<f64>,
    pub feedback_gain: f64,
    pub mode: RunMode,
    pub seed: Option<u64>,
    pub trials: u64,
    pub outcome: Option<f64>,
    pub clones: Vec<CloneReport>,
    /// Joint state of the clone modes `A, B`.
    pub clone_state: GaussianState,
    /// Light mode after the two-pass network (the anti-clone).
    pub residual_light: Option<GaussianState>,
    /// Every intermediate register state, in order.
    #[serde(skip)]
    pub trace: Vec<GaussianState>,
}

impl ProtocolReport {
    pub fn clone(&self, label: &str) -> Option<&CloneReport> {
        self.clones.iter().find(|c| c.label == label)
    }

    pub fn fidelities(&self) -> Vec<f64> {
        self.clones.iter().map(|c| c.fidelity).collect()
    }
}

/// Result of a squeezed-ancilla preparation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezePrepReport {
    pub asymmetry_v: f64,
    pub kappa: f64,
    /// `A` squeezed in x, `B` squeezed in p.
    pub state_a: GaussianState,
    pub state_b: GaussianState,
    pub squeezed_variances: [f64; 2],
    pub anti_squeezed_variances: [f64; 2],
    pub purities: [f64; 2],
    /// Largest deviation of the squeezed variances from `V`.
    pub abs_diff: f64,
    pub outcomes: Vec<f64>,
    #[serde(skip)]
    pub trace: Vec<GaussianState>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RunOutput {
    Cloning(ProtocolReport),
    SqueezePrep(SqueezePrepReport),
}

#[derive(Default)]
struct Tracer {
    trace: Vec<GaussianState>,
}

impl Tracer {
    fn record(&mut self, s: GaussianState, stage: &str) -> Result<GaussianState> {
        s.check_physical()
            .map_err(|e| Error::InvariantViolation(format!("uncertainty relation after {stage}: {e}")))?;
        self.trace.push(s.clone());
        Ok(s)
    }

    fn gate(&mut self, op: Result<SymplecticOp>, s: &GaussianState, stage: &str) -> Result<GaussianState> {
        let out = apply(&op?, s)?;
        self.record(out, stage)
    }
}

/// Outcome of one pass through a protocol's circuit.
pub(crate) struct Pipeline {
    pub clones: GaussianState,
    pub residual_light: Option<GaussianState>,
    pub outcome: Option<f64>,
    pub trace: Vec<GaussianState>,
}

type Ancillas = (GaussianState, GaussianState);

fn vacuum_ancillas() -> Ancillas {
    (make_coherent(0.0, 0.0), make_coherent(0.0, 0.0))
}

fn squeezed_ancillas(v: f64) -> Result<Ancillas> {
    Ok((make_squeezed_vacuum(v, Axis::X)?, make_squeezed_vacuum(v, Axis::P)?))
}

fn input_register(alpha: [f64; 2], anc: &Ancillas, tr: &mut Tracer) -> Result<GaussianState> {
    for (s, name) in [(&anc.0, "A"), (&anc.1, "B")] {
        if s.num_modes() != 1 {
            return Err(Error::Config(format!("ancilla {name} must be a single mode")));
        }
    }
    let s = tensor(&[make_coherent(alpha[0], alpha[1]), anc.0.clone(), anc.1.clone()])?;
    tr.record(s, "input preparation")
}

/// Light passes both ensembles with `H = x_L (p_A + p_B)`.
fn first_pass(s: &GaussianState, kappa: f64, tr: &mut Tracer) -> Result<GaussianState> {
    let s = tr.gate(qnd_xp(kappa, L, A), s, "first pass through A")?;
    tr.gate(qnd_xp(kappa, L, B), &s, "first pass through B")
}

fn two_pass(alpha: [f64; 2], kappa: f64, anc: &Ancillas) -> Result<Pipeline> {
    let mut tr = Tracer::default();
    let s = input_register(alpha, anc, &mut tr)?;
    let s = first_pass(&s, kappa, &mut tr)?;
    let s = tr.gate(qnd_xp(-kappa, A, L), &s, "second pass through A")?;
    let s = tr.gate(qnd_xp(-kappa, B, L), &s, "second pass through B")?;
    Ok(Pipeline {
        clones: reduced_state(&s, &[A, B])?,
        residual_light: Some(reduced_state(&s, &[L])?),
        outcome: None,
        trace: tr.trace,
    })
}

fn single_pass(
    alpha: [f64; 2],
    kappa: f64,
    gain: f64,
    anc: &Ancillas,
    source: OutcomeSource,
) -> Result<Pipeline> {
    let mut tr = Tracer::default();
    let s = input_register(alpha, anc, &mut tr)?;
    let s = first_pass(&s, kappa, &mut tr)?;
    let rule = FeedbackRule::from_pairs(&[(A, Axis::P, gain), (B, Axis::P, gain)])?;
    let fed = measure_and_feed_traced(&s, L, Axis::P, &rule, source)?;
    let s = tr.record(fed.state, "homodyne and feedback")?;
    Ok(Pipeline {
        clones: s,
        residual_light: None,
        outcome: fed.outcome,
        trace: tr.trace,
    })
}

fn atoms_light(
    alpha: [f64; 2],
    kappa: f64,
    gain: f64,
    unsqueeze: bool,
    source: OutcomeSource,
) -> Result<Pipeline> {
    let mut tr = Tracer::default();
    let s = input_register(alpha, &vacuum_ancillas(), &mut tr)?;
    let s = tr.gate(qnd_xp(kappa, L, A), &s, "pass through A")?;
    let s = tr.gate(beam_splitter_balanced(L, B), &s, "beam splitter")?;
    let rule = FeedbackRule::from_pairs(&[(A, Axis::P, SQRT_2 * gain), (B, Axis::P, gain)])?;
    let fed = measure_and_feed_traced(&s, L, Axis::P, &rule, source)?;
    let mut s = tr.record(fed.state, "homodyne and feedback")?;
    if unsqueeze {
        let b = B.after_removal(L.index)?;
        s = tr.gate(squeezer(SQRT_2, b), &s, "unsqueezing of B")?;
    }
    Ok(Pipeline {
        clones: s,
        residual_light: None,
        outcome: fed.outcome,
        trace: tr.trace,
    })
}

pub(crate) fn pipeline(
    cfg: &ProtocolConfig,
    alpha: [f64; 2],
    source: OutcomeSource,
    ancillas: Option<&Ancillas>,
) -> Result<Pipeline> {
    let owned;
    let anc = match (ancillas, cfg.protocol) {
        (Some(a), _) => a,
        (None, ProtocolKind::AsymmetricSinglePass) => {
            owned = squeezed_ancillas(cfg.asymmetry_v)?;
            &owned
        }
        (None, _) => {
            owned = vacuum_ancillas();
            &owned
        }
    };
    match cfg.protocol {
        ProtocolKind::TwoPass => two_pass(alpha, cfg.kappa, anc),
        ProtocolKind::SinglePass | ProtocolKind::AsymmetricSinglePass => {
            single_pass(alpha, cfg.kappa, cfg.feedback_gain, anc, source)
        }
        ProtocolKind::AtomsLight => atoms_light(alpha, cfg.kappa, cfg.feedback_gain, false, source),
        ProtocolKind::AtomsLightUnsqueezed => {
            atoms_light(alpha, cfg.kappa, cfg.feedback_gain, true, source)
        }
        ProtocolKind::SqueezePrep => Err(Error::Config(
            "squeeze-prep produces ancillas, not clones; use run_squeeze_prep".into(),
        )),
    }
}

/// Closed-form clone fidelities at the design point, for outcome-averaged states.
pub fn analytic_fidelities(cfg: &ProtocolConfig) -> Option<[f64; 2]> {
    if !cfg.at_design_point() {
        return None;
    }
    let f = analytic::symmetric_fidelity();
    match cfg.protocol {
        ProtocolKind::TwoPass | ProtocolKind::SinglePass | ProtocolKind::AtomsLightUnsqueezed => Some([f, f]),
        ProtocolKind::AtomsLight => Some([
            f,
            analytic::atoms_light_raw_fidelity(cfg.input_alpha[0], cfg.input_alpha[1]),
        ]),
        ProtocolKind::AsymmetricSinglePass => Some([
            analytic::asymmetric_fidelity_a(cfg.asymmetry_v),
            analytic::asymmetric_fidelity_b(cfg.asymmetry_v),
        ]),
        ProtocolKind::SqueezePrep => None,
    }
}

const CLONE_LABELS: [&str; 2] = ["A", "B"];

fn block(s: &GaussianState, k: usize) -> Result<([f64; 2], [[f64; 2]; 2])> {
    Ok((s.mode_mean(k)?, s.mode_cov(k)?))
}

/// Mean gains and worst-case fidelities from outcome-averaged runs.
fn linear_response(cfg: &ProtocolConfig, anc: Option<&Ancillas>) -> Result<Vec<([[f64; 2]; 2], f64)>> {
    let det = |a: [f64; 2]| pipeline(cfg, a, OutcomeSource::Averaged, anc).map(|p| p.clones);
    let base = det([0.0, 0.0])?;
    let ex = det([1.0, 0.0])?;
    let ep = det([0.0, 1.0])?;
    (0..2)
        .map(|k| {
            let (off, _) = block(&base, k)?;
            let (mx, _) = block(&ex, k)?;
            let (mp, _) = block(&ep, k)?;
            let gain = [
                [mx[0] - off[0], mp[0] - off[0]],
                [mx[1] - off[1], mp[1] - off[1]],
            ];
            let unit = (gain[0][0] - 1.0).abs() <= UNIT_GAIN_TOL
                && (gain[1][1] - 1.0).abs() <= UNIT_GAIN_TOL
                && gain[0][1].abs() <= UNIT_GAIN_TOL
                && gain[1][0].abs() <= UNIT_GAIN_TOL
                && off.iter().all(|o| o.abs() <= UNIT_GAIN_TOL);
            let universal = if unit {
                fidelity_with_coherent(&reduced_state(&base, &[ModeLabel::atom_a(k)])?, 0.0, 0.0)?
            } else {
                0.0
            };
            Ok((gain, universal))
        })
        .collect()
}

fn build_report(cfg: &ProtocolConfig, anc: Option<&Ancillas>) -> Result<ProtocolReport> {
    cfg.validate()?;
    let response = linear_response(cfg, anc)?;
    let [ax, ap] = cfg.input_alpha;

    let (mode, clone_state, residual_light, outcome, trace, ensemble) = match cfg.outcome_source {
        OutcomeSource::Sampled { .. } => {
            let mc = montecarlo::run_with_ancillas(cfg, anc)?;
            let state = mc.summary.mixture_state();
            (RunMode::Sampled, state, None, None, Vec::new(), Some(mc.summary))
        }
        source => {
            let p = pipeline(cfg, cfg.input_alpha, source, anc)?;
            let mode = if source == OutcomeSource::Averaged || !cfg.protocol.has_measurement() {
                RunMode::Deterministic
            } else {
                RunMode::Conditional
            };
            (mode, p.clones, p.residual_light, p.outcome, p.trace, None)
        }
    };

    let analytic = if mode == RunMode::Conditional {
        None
    } else {
        analytic_fidelities(cfg)
    };

    let mut clones = Vec::with_capacity(2);
    for (k, label) in CLONE_LABELS.iter().enumerate() {
        let (mean, covariance) = block(&clone_state, k)?;
        let (fidelity, std_err) = match &ensemble {
            Some(sum) => (sum.clones[k].mean_fidelity, Some(sum.clones[k].fidelity_std_error)),
            None => {
                let single = reduced_state(&clone_state, &[ModeLabel::atom_a(k)])?;
                (fidelity_with_coherent(&single, ax, ap)?, None)
            }
        };
        let analytic_fidelity = analytic.map(|a| a[k]);
        clones.push(CloneReport {
            label: (*label).to_string(),
            fidelity,
            analytic_fidelity,
            fidelity_abs_diff: analytic_fidelity.map(|a| (a - fidelity).abs()),
            fidelity_std_error: std_err,
            universal_fidelity: response[k].1,
            mean,
            gain: response[k].0,
            covariance,
            variances: [covariance[0][0], covariance[1][1]],
        });
    }

    Ok(ProtocolReport {
        protocol: cfg.protocol,
        input_alpha: cfg.input_alpha,
        kappa: cfg.kappa,
        asymmetry_v: matches!(cfg.protocol, ProtocolKind::AsymmetricSinglePass).then_some(cfg.asymmetry_v),
        feedback_gain: cfg.feedback_gain,
        mode,
        seed: match cfg.outcome_source {
            OutcomeSource::Sampled { seed } => Some(seed),
            _ => None,
        },
        trials: cfg.trials,
        outcome,
        clones,
        clone_state,
        residual_light,
        trace,
    })
}

/// Four-gate network: C-NOTs light→atoms, then C-NOT†s atoms→light.
pub fn run_two_pass(cfg: &ProtocolConfig) -> Result<ProtocolReport> {
    cfg.expect(&[ProtocolKind::TwoPass])?;
    build_report(cfg, None)
}

/// One pass, homodyne of `p_L`, feedback onto both atomic `p` quadratures.
pub fn run_single_pass(cfg: &ProtocolConfig) -> Result<ProtocolReport> {
    cfg.expect(&[ProtocolKind::SinglePass])?;
    build_report(cfg, None)
}

/// One atomic clone and one flying light clone.
pub fn run_atoms_light(cfg: &ProtocolConfig) -> Result<ProtocolReport> {
    cfg.expect(&[ProtocolKind::AtomsLight, ProtocolKind::AtomsLightUnsqueezed])?;
    build_report(cfg, None)
}

/// Single pass with ancillas squeezed to variance `cfg.asymmetry_v`.
pub fn run_asymmetric(cfg: &ProtocolConfig) -> Result<ProtocolReport> {
    cfg.expect(&[ProtocolKind::AsymmetricSinglePass])?;
    build_report(cfg, None)
}

/// Single pass with caller-supplied single-mode ancillas for A and B.
pub fn run_asymmetric_with_ancillas(
    cfg: &ProtocolConfig,
    ancilla_a: &GaussianState,
    ancilla_b: &GaussianState,
) -> Result<ProtocolReport> {
    cfg.expect(&[ProtocolKind::AsymmetricSinglePass])?;
    let anc = (ancilla_a.clone(), ancilla_b.clone());
    build_report(cfg, Some(&anc))
}

/// Prepares A squeezed in x and B squeezed in p, both to variance `V`.
///
/// Two probe pulses measure the commuting nonlocal quadratures `x_A + p_B`
/// and `x_A − p_B` through QND couplings of strength `κ = √(1/(4V) − 1/2)`;
/// each probe's `x` is read out and the atoms are displaced by the
/// conditional-mean gain so the coherent component vanishes.
pub fn run_squeeze_prep(cfg: &ProtocolConfig) -> Result<(GaussianState, GaussianState)> {
    squeeze_prep(cfg).map(|r| (r.state_a, r.state_b))
}

pub fn squeeze_prep(cfg: &ProtocolConfig) -> Result<SqueezePrepReport> {
    cfg.validate()?;
    let v = cfg.asymmetry_v;
    if !(v < 0.5) {
        return Err(Error::Domain(format!(
            "squeezed variance must be below 1/2 for a real coupling, got {v}"
        )));
    }
    let kappa = analytic::squeezing_kappa(v);
    let (a, b) = (ModeLabel::atom_a(0), ModeLabel::atom_b(1));
    let probes = [ModeLabel::ancilla(2), ModeLabel::ancilla(3)];
    let mut tr = Tracer::default();
    let mut s = tr.record(GaussianState::vacuum(4)?, "input preparation")?;
    let mut outcomes = Vec::new();
    let mut live = probes.to_vec();
    for (round, sign) in [1.0, -1.0].into_iter().enumerate() {
        let probe = live[0];
        // x_P += κ (x_A ± p_B)
        s = tr.gate(qnd_xp(kappa, a, probe), &s, "probe coupling to x_A")?;
        s = tr.gate(qnd_pp(sign * kappa, probe, b), &s, "probe coupling to p_B")?;
        let gain = homodyne(&s, probe, Axis::X, OutcomeSource::MeanValue)?.gain;
        let source = match cfg.outcome_source {
            OutcomeSource::Sampled { seed } => OutcomeSource::Sampled {
                seed: trial_seed(seed, round as u64),
            },
            other => other,
        };
        let remaining: Vec<ModeLabel> = (0..s.num_modes())
            .filter(|&i| i != probe.index)
            .map(|i| ModeLabel::ancilla(i))
            .collect();
        let pairs: Vec<(ModeLabel, Axis, f64)> = remaining
            .iter()
            .enumerate()
            .flat_map(|(j, m)| [(*m, Axis::X, -gain[2 * j]), (*m, Axis::P, -gain[2 * j + 1])])
            .collect();
        let rule = FeedbackRule::from_pairs(&pairs)?;
        let fed = measure_and_feed_traced(&s, probe, Axis::X, &rule, source)?;
        if let Some(y) = fed.outcome {
            outcomes.push(y);
        }
        s = tr.record(fed.state, "probe readout and displacement")?;
        live = live[1..]
            .iter()
            .map(|m| m.after_removal(probe.index))
            .collect::<Result<_>>()?;
    }
    let state_a = reduced_state(&s, &[a])?;
    let state_b = reduced_state(&s, &[b])?;
    let squeezed = [state_a.cov()[(0, 0)], state_b.cov()[(1, 1)]];
    Ok(SqueezePrepReport {
        asymmetry_v: v,
        kappa,
        squeezed_variances: squeezed,
        anti_squeezed_variances: [state_a.cov()[(1, 1)], state_b.cov()[(0, 0)]],
        purities: [state_a.purity(), state_b.purity()],
        abs_diff: squeezed.iter().map(|x| (x - v).abs()).fold(0.0, f64::max),
        state_a,
        state_b,
        outcomes,
        trace: tr.trace,
    })
}

/// Runs whichever protocol `cfg` names.
pub fn run(cfg: &ProtocolConfig) -> Result<RunOutput> {
    match cfg.protocol {
        ProtocolKind::TwoPass => run_two_pass(cfg).map(RunOutput::Cloning),
        ProtocolKind::SinglePass => run_single_pass(cfg).map(RunOutput::Cloning),
        ProtocolKind::AtomsLight | ProtocolKind::AtomsLightUnsqueezed => {
            run_atoms_light(cfg).map(RunOutput::Cloning)
        }
        ProtocolKind::AsymmetricSinglePass => run_asymmetric(cfg).map(RunOutput::Cloning),
        ProtocolKind::SqueezePrep => squeeze_prep(cfg).map(RunOutput::SqueezePrep),
    }
}
