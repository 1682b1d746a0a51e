//! C ABI for the cvclone simulator.
//!
//! Objects cross the boundary as opaque handles ([`CvState`], [`CvReport`])
//! created by `cv_*` constructors and released with the matching `*_free`
//! function. Every fallible call returns a [`CvStatus`]; on failure a
//! description is available from [`cv_last_error_message`] on the same
//! thread. Panics never unwind into C: they are caught and reported as
//! [`CvStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cvclone::feasibility::{feasibility_check, kappa_from_physical, Coupling, CouplingParams};
use cvclone::phase_space::{fidelity_with_coherent, make_coherent, make_squeezed_vacuum, reduced_state};
use cvclone::protocols::{
    run_asymmetric_with_ancillas, squeeze_prep, ProtocolConfig, ProtocolKind, ProtocolReport, RunOutput,
};
use cvclone::{Axis, Error, GaussianState, ModeLabel, OutcomeSource};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CvStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A parameter was out of range or inconsistent.
    InvalidArgument = 2,
    /// A covariance matrix violated the uncertainty relation.
    InvalidCovariance = 3,
    /// A physical invariant failed during a protocol run.
    InvariantViolation = 4,
    /// An output buffer was too small.
    BufferTooSmall = 5,
    /// Internal panic; the library state is unchanged.
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CvAxis {
    X = 0,
    P = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CvProtocol {
    TwoPass = 0,
    SinglePass = 1,
    AtomsLight = 2,
    AtomsLightUnsqueezed = 3,
    Asymmetric = 4,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CvOutcome {
    /// Average over all homodyne outcomes.
    Averaged = 0,
    /// Condition on the mean outcome.
    MeanValue = 1,
    /// Condition on `forced_outcome`.
    Forced = 2,
    /// Monte Carlo over `trials` outcomes drawn from `seed`.
    Sampled = 3,
}

/// Protocol parameters; obtain defaults from [`cv_protocol_config_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CvProtocolConfig {
    pub protocol: CvProtocol,
    pub alpha_x: f64,
    pub alpha_p: f64,
    /// Squeezed ancilla variance.
    pub v: f64,
    pub kappa: f64,
    pub feedback_gain: f64,
    pub outcome: CvOutcome,
    pub forced_outcome: f64,
    pub seed: u64,
    pub trials: u64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CvFeasibility {
    pub kappa: f64,
    pub optical_density: f64,
    pub eta: f64,
    pub bound: f64,
    pub margin: f64,
    pub feasible: bool,
    pub required_optical_density: f64,
}

/// Opaque Gaussian state.
pub struct CvState(GaussianState);

/// Opaque protocol report.
pub struct CvReport(ProtocolReport);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(CvStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::InvalidCovariance(_) => CvStatus::InvalidCovariance,
            Error::InvariantViolation(_) => CvStatus::InvariantViolation,
            _ => CvStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(CvStatus::NullPointer, format!("`{what}` is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            CvStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            CvStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

fn c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|e| Failure(CvStatus::InvalidArgument, e.to_string()))
}

fn json_error(e: serde_json::Error) -> Failure {
    Failure(CvStatus::InvalidArgument, e.to_string())
}

fn axis(a: CvAxis) -> Axis {
    match a {
        CvAxis::X => Axis::X,
        CvAxis::P => Axis::P,
    }
}

fn to_config(c: &CvProtocolConfig) -> ProtocolConfig {
    let protocol = match c.protocol {
        CvProtocol::TwoPass => ProtocolKind::TwoPass,
        CvProtocol::SinglePass => ProtocolKind::SinglePass,
        CvProtocol::AtomsLight => ProtocolKind::AtomsLight,
        CvProtocol::AtomsLightUnsqueezed => ProtocolKind::AtomsLightUnsqueezed,
        CvProtocol::Asymmetric => ProtocolKind::AsymmetricSinglePass,
    };
    let outcome_source = match c.outcome {
        CvOutcome::Averaged => OutcomeSource::Averaged,
        CvOutcome::MeanValue => OutcomeSource::MeanValue,
        CvOutcome::Forced => OutcomeSource::Forced(c.forced_outcome),
        CvOutcome::Sampled => OutcomeSource::Sampled { seed: c.seed },
    };
    ProtocolConfig {
        protocol,
        input_alpha: [c.alpha_x, c.alpha_p],
        asymmetry_v: c.v,
        kappa: c.kappa,
        feedback_gain: c.feedback_gain,
        outcome_source,
        trials: c.trials,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cv_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => c"unknown",
    };
    VERSION.as_ptr()
}

/// Message describing the last failed call on this thread; empty after a
/// successful call. Valid until the next `cv_*` call on this thread.
#[no_mangle]
pub extern "C" fn cv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Single-pass symmetric cloner, vacuum input, `κ = 1`, averaged outcomes.
#[no_mangle]
pub extern "C" fn cv_protocol_config_default() -> CvProtocolConfig {
    let d = ProtocolConfig::default();
    CvProtocolConfig {
        protocol: CvProtocol::SinglePass,
        alpha_x: d.input_alpha[0],
        alpha_p: d.input_alpha[1],
        v: d.asymmetry_v,
        kappa: d.kappa,
        feedback_gain: d.feedback_gain,
        outcome: CvOutcome::Averaged,
        forced_outcome: 0.0,
        seed: 0,
        trials: d.trials,
    }
}

/// Coherent state with quadrature means `(alpha_x, alpha_p)`.
///
/// # Safety
/// `out` must be null or valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn cv_state_coherent(alpha_x: f64, alpha_p: f64, out: *mut *mut CvState) -> CvStatus {
    guard(|| {
        if !alpha_x.is_finite() || !alpha_p.is_finite() {
            return Err(Failure(CvStatus::InvalidArgument, "amplitude must be finite".into()));
        }
        write_out(out, boxed(CvState(make_coherent(alpha_x, alpha_p))), "out")
    })
}

/// Pure squeezed vacuum with variance `variance` along `axis`.
///
/// # Safety
/// `out` must be null or valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn cv_state_squeezed_vacuum(variance: f64, squeezed: CvAxis, out: *mut *mut CvState) -> CvStatus {
    guard(|| {
        let s = make_squeezed_vacuum(variance, axis(squeezed))?;
        write_out(out, boxed(CvState(s)), "out")
    })
}

/// Releases a state; null is ignored.
///
/// # Safety
/// `state` must be null or a handle returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cv_state_free(state: *mut CvState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Number of modes, or 0 for a null handle.
///
/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cv_state_num_modes(state: *const CvState) -> usize {
    state.as_ref().map_or(0, |s| s.0.num_modes())
}

unsafe fn copy_to(src: &[f64], out: *mut f64, len: usize) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    if len < src.len() {
        return Err(Failure(
            CvStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

/// Copies the `2n` quadrature means `(x1, p1, x2, p2, …)` into `out`.
///
/// # Safety
/// `state` must be a live handle and `out` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cv_state_mean(state: *const CvState, out: *mut f64, len: usize) -> CvStatus {
    guard(|| {
        let s = deref(state, "state")?;
        copy_to(s.0.mean().as_slice(), out, len)
    })
}

/// Copies the `2n × 2n` covariance matrix into `out`, row-major.
///
/// # Safety
/// `state` must be a live handle and `out` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cv_state_covariance(state: *const CvState, out: *mut f64, len: usize) -> CvStatus {
    guard(|| {
        let s = deref(state, "state")?;
        let cov = s.0.cov();
        let row_major: Vec<f64> = cov.transpose().as_slice().to_vec();
        copy_to(&row_major, out, len)
    })
}

/// Fidelity of a single-mode state with the coherent state `(alpha_x, alpha_p)`.
///
/// # Safety
/// `state` must be a live handle and `out` valid for one double.
#[no_mangle]
pub unsafe extern "C" fn cv_state_fidelity_with_coherent(
    state: *const CvState,
    alpha_x: f64,
    alpha_p: f64,
    out: *mut f64,
) -> CvStatus {
    guard(|| {
        let s = deref(state, "state")?;
        let f = fidelity_with_coherent(&s.0, alpha_x, alpha_p)?;
        write_out(out, f, "out")
    })
}

/// Serializes a state as JSON; free the string with [`cv_string_free`].
///
/// # Safety
/// `state` must be a live handle and `out` valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn cv_state_to_json(state: *const CvState, out: *mut *mut c_char) -> CvStatus {
    guard(|| {
        let s = deref(state, "state")?;
        write_out(out, c_string(serde_json::to_string(&s.0).map_err(json_error)?)?, "out")
    })
}

/// Runs a cloning protocol.
///
/// # Safety
/// `config` must point to a valid configuration and `out` be valid for
/// writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn cv_run_protocol(config: *const CvProtocolConfig, out: *mut *mut CvReport) -> CvStatus {
    guard(|| {
        let cfg = to_config(deref(config, "config")?);
        if out.is_null() {
            return Err(null("out"));
        }
        match cvclone::protocols::run(&cfg)? {
            RunOutput::Cloning(r) => write_out(out, boxed(CvReport(r)), "out"),
            RunOutput::SqueezePrep(_) => Err(Failure(
                CvStatus::InvalidArgument,
                "use cv_squeeze_prep for ancilla preparation".into(),
            )),
        }
    })
}

/// Asymmetric cloner with caller-supplied single-mode ancillas.
///
/// # Safety
/// `config`, `ancilla_a` and `ancilla_b` must be valid; `out` valid for
/// writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn cv_run_asymmetric_with_ancillas(
    config: *const CvProtocolConfig,
    ancilla_a: *const CvState,
    ancilla_b: *const CvState,
    out: *mut *mut CvReport,
) -> CvStatus {
    guard(|| {
        let cfg = to_config(deref(config, "config")?);
        let a = deref(ancilla_a, "ancilla_a")?;
        let b = deref(ancilla_b, "ancilla_b")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = run_asymmetric_with_ancillas(&cfg, &a.0, &b.0)?;
        write_out(out, boxed(CvReport(r)), "out")
    })
}

/// Prepares ancilla A squeezed in x and B squeezed in p, both to variance `v`.
///
/// # Safety
/// `out_a` and `out_b` must be valid for writing one pointer each.
#[no_mangle]
pub unsafe extern "C" fn cv_squeeze_prep(v: f64, out_a: *mut *mut CvState, out_b: *mut *mut CvState) -> CvStatus {
    guard(|| {
        if out_a.is_null() || out_b.is_null() {
            return Err(null("out"));
        }
        let cfg = ProtocolConfig::new(ProtocolKind::SqueezePrep).with_v(v);
        let r = squeeze_prep(&cfg)?;
        write_out(out_a, boxed(CvState(r.state_a)), "out_a")?;
        write_out(out_b, boxed(CvState(r.state_b)), "out_b")
    })
}

/// Releases a report; null is ignored.
///
/// # Safety
/// `report` must be null or a handle returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cv_report_free(report: *mut CvReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Number of clones in a report, or 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cv_report_num_clones(report: *const CvReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.clones.len())
}

unsafe fn clone_field(
    report: *const CvReport,
    clone: usize,
    out: *mut f64,
    field: impl FnOnce(&cvclone::protocols::CloneReport) -> f64,
) -> CvStatus {
    guard(|| {
        let r = deref(report, "report")?;
        let c = r.0.clones.get(clone).ok_or_else(|| {
            Failure(
                CvStatus::InvalidArgument,
                format!("clone index {clone} out of range ({} clones)", r.0.clones.len()),
            )
        })?;
        write_out(out, field(c), "out")
    })
}

/// Simulated fidelity of clone `clone` (0 for A, 1 for B).
///
/// # Safety
/// `report` must be a live handle and `out` valid for one double.
#[no_mangle]
pub unsafe extern "C" fn cv_report_fidelity(report: *const CvReport, clone: usize, out: *mut f64) -> CvStatus {
    clone_field(report, clone, out, |c| c.fidelity)
}

/// Closed-form fidelity of clone `clone`, or NaN when none applies.
///
/// # Safety
/// `report` must be a live handle and `out` valid for one double.
#[no_mangle]
pub unsafe extern "C" fn cv_report_analytic_fidelity(report: *const CvReport, clone: usize, out: *mut f64) -> CvStatus {
    clone_field(report, clone, out, |c| c.analytic_fidelity.unwrap_or(f64::NAN))
}

/// Worst-case fidelity of clone `clone` over all coherent inputs.
///
/// # Safety
/// `report` must be a live handle and `out` valid for one double.
#[no_mangle]
pub unsafe extern "C" fn cv_report_universal_fidelity(report: *const CvReport, clone: usize, out: *mut f64) -> CvStatus {
    clone_field(report, clone, out, |c| c.universal_fidelity)
}

/// Single-mode state of clone `clone`; free it with [`cv_state_free`].
///
/// # Safety
/// `report` must be a live handle and `out` valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn cv_report_clone_state(report: *const CvReport, clone: usize, out: *mut *mut CvState) -> CvStatus {
    guard(|| {
        let r = deref(report, "report")?;
        if clone >= r.0.clones.len() {
            return Err(Failure(CvStatus::InvalidArgument, format!("clone index {clone} out of range")));
        }
        let s = reduced_state(&r.0.clone_state, &[ModeLabel::ancilla(clone)])?;
        write_out(out, boxed(CvState(s)), "out")
    })
}

/// Serializes a report as JSON; free the string with [`cv_string_free`].
///
/// # Safety
/// `report` must be a live handle and `out` valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn cv_report_to_json(report: *const CvReport, out: *mut *mut c_char) -> CvStatus {
    guard(|| {
        let r = deref(report, "report")?;
        write_out(out, c_string(serde_json::to_string(&r.0).map_err(json_error)?)?, "out")
    })
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `κ = (σγ/(Aδ)) √(N_L N_A) / 2` with `σ = λ²/(2π)`, SI units.
///
/// # Safety
/// `out` must be valid for one double.
#[no_mangle]
pub unsafe extern "C" fn cv_kappa_from_physical(
    lambda: f64,
    gamma: f64,
    delta: f64,
    beam_area: f64,
    n_l: f64,
    n_a: f64,
    out: *mut f64,
) -> CvStatus {
    guard(|| {
        let k = kappa_from_physical(lambda, gamma, delta, beam_area, n_l, n_a)?;
        write_out(out, k, "out")
    })
}

/// Spontaneous-emission check for coupling `kappa` at `optical_density`.
///
/// # Safety
/// `out` must be valid for writing one [`CvFeasibility`].
#[no_mangle]
pub unsafe extern "C" fn cv_feasibility_check(
    kappa: f64,
    optical_density: f64,
    margin: f64,
    out: *mut CvFeasibility,
) -> CvStatus {
    guard(|| {
        let params = CouplingParams {
            coupling: Coupling::Kappa(kappa),
            optical_density,
        };
        let r = feasibility_check(&params, margin)?;
        write_out(
            out,
            CvFeasibility {
                kappa: r.kappa,
                optical_density: r.optical_density,
                eta: r.eta,
                bound: r.bound,
                margin: r.margin,
                feasible: r.feasible,
                required_optical_density: r.required_optical_density,
            },
            "out",
        )
    })
}
