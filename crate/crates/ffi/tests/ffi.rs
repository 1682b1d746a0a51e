use std::ffi::{c_char, CStr};
use std::ptr;

use cvclone_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(cv_last_error_message()) }.to_string_lossy().into_owned()
}

fn take_string(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let owned = unsafe { CStr::from_ptr(s) }.to_string_lossy().into_owned();
    unsafe { cv_string_free(s) };
    owned
}

fn run(config: &CvProtocolConfig) -> *mut CvReport {
    let mut report = ptr::null_mut();
    let status = unsafe { cv_run_protocol(config, &mut report) };
    assert_eq!(status, CvStatus::Ok, "{}", last_error());
    report
}

fn fidelities(report: *const CvReport) -> Vec<f64> {
    let n = unsafe { cv_report_num_clones(report) };
    (0..n)
        .map(|i| {
            let mut f = f64::NAN;
            assert_eq!(unsafe { cv_report_fidelity(report, i, &mut f) }, CvStatus::Ok);
            f
        })
        .collect()
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(cv_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn coherent_state_accessors() {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { cv_state_coherent(1.5, -0.5, &mut s) }, CvStatus::Ok);
    assert_eq!(last_error(), "");
    assert_eq!(unsafe { cv_state_num_modes(s) }, 1);

    let mut mean = [0.0; 2];
    assert_eq!(unsafe { cv_state_mean(s, mean.as_mut_ptr(), mean.len()) }, CvStatus::Ok);
    assert_eq!(mean, [1.5, -0.5]);

    let mut cov = [0.0; 4];
    assert_eq!(unsafe { cv_state_covariance(s, cov.as_mut_ptr(), cov.len()) }, CvStatus::Ok);
    assert_eq!(cov, [0.5, 0.0, 0.0, 0.5]);

    let mut f = 0.0;
    assert_eq!(unsafe { cv_state_fidelity_with_coherent(s, 1.5, -0.5, &mut f) }, CvStatus::Ok);
    assert!((f - 1.0).abs() < 1e-15);

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { cv_state_to_json(s, &mut json) }, CvStatus::Ok);
    let value: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
    assert!(value.is_object());

    unsafe { cv_state_free(s) };
}

#[test]
fn squeezed_vacuum_covariance_is_row_major() {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { cv_state_squeezed_vacuum(0.125, CvAxis::P, &mut s) }, CvStatus::Ok);
    let mut cov = [0.0; 4];
    assert_eq!(unsafe { cv_state_covariance(s, cov.as_mut_ptr(), 4) }, CvStatus::Ok);
    assert!((cov[0] - 2.0).abs() < 1e-12);
    assert!((cov[3] - 0.125).abs() < 1e-12);
    unsafe { cv_state_free(s) };
}

#[test]
fn invalid_squeezing_reports_invalid_covariance_or_argument() {
    let mut s = ptr::null_mut();
    let status = unsafe { cv_state_squeezed_vacuum(-1.0, CvAxis::X, &mut s) };
    assert!(matches!(status, CvStatus::InvalidArgument | CvStatus::InvalidCovariance));
    assert!(s.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn non_finite_amplitude_is_rejected() {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { cv_state_coherent(f64::NAN, 0.0, &mut s) }, CvStatus::InvalidArgument);
    assert!(last_error().contains("finite"));
}

#[test]
fn small_buffer_is_reported() {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { cv_state_coherent(0.0, 0.0, &mut s) }, CvStatus::Ok);
    let mut cov = [0.0; 3];
    assert_eq!(unsafe { cv_state_covariance(s, cov.as_mut_ptr(), 3) }, CvStatus::BufferTooSmall);
    assert!(last_error().contains("4 needed"));
    unsafe { cv_state_free(s) };
}

#[test]
fn null_pointers_are_reported() {
    let mut f = 0.0;
    assert_eq!(unsafe { cv_state_coherent(0.0, 0.0, ptr::null_mut()) }, CvStatus::NullPointer);
    assert_eq!(
        unsafe { cv_state_fidelity_with_coherent(ptr::null(), 0.0, 0.0, &mut f) },
        CvStatus::NullPointer
    );
    assert!(last_error().contains("state"));
    assert_eq!(unsafe { cv_run_protocol(ptr::null(), ptr::null_mut()) }, CvStatus::NullPointer);
    assert_eq!(unsafe { cv_report_fidelity(ptr::null(), 0, &mut f) }, CvStatus::NullPointer);
    assert_eq!(unsafe { cv_feasibility_check(1.0, 10.0, 10.0, ptr::null_mut()) }, CvStatus::NullPointer);
    assert_eq!(unsafe { cv_state_num_modes(ptr::null()) }, 0);
    assert_eq!(unsafe { cv_report_num_clones(ptr::null()) }, 0);
    unsafe {
        cv_state_free(ptr::null_mut());
        cv_report_free(ptr::null_mut());
        cv_string_free(ptr::null_mut());
    }
}

#[test]
fn symmetric_cloners_reach_two_thirds() {
    for protocol in [CvProtocol::TwoPass, CvProtocol::SinglePass] {
        let config = CvProtocolConfig {
            protocol,
            alpha_x: 0.7,
            alpha_p: -2.0,
            ..cv_protocol_config_default()
        };
        let report = run(&config);
        let f = fidelities(report);
        assert_eq!(f.len(), 2);
        for (i, fi) in f.iter().enumerate() {
            assert!((fi - 2.0 / 3.0).abs() < 1e-12, "{protocol:?}: {fi}");
            let mut analytic = 0.0;
            assert_eq!(unsafe { cv_report_analytic_fidelity(report, i, &mut analytic) }, CvStatus::Ok);
            assert!((analytic - 2.0 / 3.0).abs() < 1e-12);
            let mut universal = 0.0;
            assert_eq!(unsafe { cv_report_universal_fidelity(report, i, &mut universal) }, CvStatus::Ok);
            assert!((universal - 2.0 / 3.0).abs() < 1e-12);
        }
        unsafe { cv_report_free(report) };
    }
}

#[test]
fn clone_state_is_a_single_mode_with_the_input_mean() {
    let config = CvProtocolConfig {
        alpha_x: 1.0,
        alpha_p: 2.0,
        ..cv_protocol_config_default()
    };
    let report = run(&config);
    for i in 0..2 {
        let mut s = ptr::null_mut();
        assert_eq!(unsafe { cv_report_clone_state(report, i, &mut s) }, CvStatus::Ok, "{}", last_error());
        assert_eq!(unsafe { cv_state_num_modes(s) }, 1);
        let mut mean = [0.0; 2];
        assert_eq!(unsafe { cv_state_mean(s, mean.as_mut_ptr(), 2) }, CvStatus::Ok);
        assert!((mean[0] - 1.0).abs() < 1e-12 && (mean[1] - 2.0).abs() < 1e-12, "{mean:?}");
        unsafe { cv_state_free(s) };
    }
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { cv_report_clone_state(report, 2, &mut s) }, CvStatus::InvalidArgument);
    let mut f = 0.0;
    assert_eq!(unsafe { cv_report_fidelity(report, 5, &mut f) }, CvStatus::InvalidArgument);
    assert!(last_error().contains("out of range"));
    unsafe { cv_report_free(report) };
}

#[test]
fn asymmetric_cloner_follows_the_trade_off() {
    let v = 0.2;
    let config = CvProtocolConfig {
        protocol: CvProtocol::Asymmetric,
        v,
        ..cv_protocol_config_default()
    };
    let report = run(&config);
    let f = fidelities(report);
    assert!((f[0] - 1.0 / (1.0 + v)).abs() < 1e-10);
    assert!((f[1] - 4.0 * v / (4.0 * v + 1.0)).abs() < 1e-10);
    unsafe { cv_report_free(report) };
}

#[test]
fn atoms_and_light_variants_run() {
    for protocol in [CvProtocol::AtomsLight, CvProtocol::AtomsLightUnsqueezed] {
        let config = CvProtocolConfig {
            protocol,
            alpha_x: -0.4,
            alpha_p: 0.9,
            ..cv_protocol_config_default()
        };
        let report = run(&config);
        let f = fidelities(report);
        assert!((f[0] - 2.0 / 3.0).abs() < 1e-12);
        if protocol == CvProtocol::AtomsLightUnsqueezed {
            assert!((f[1] - 2.0 / 3.0).abs() < 1e-12);
        }
        unsafe { cv_report_free(report) };
    }
}

#[test]
fn prepared_ancillas_feed_the_asymmetric_cloner() {
    let mut a = ptr::null_mut();
    let mut b = ptr::null_mut();
    assert_eq!(unsafe { cv_squeeze_prep(0.25, &mut a, &mut b) }, CvStatus::Ok, "{}", last_error());
    let mut cov = [0.0; 4];
    assert_eq!(unsafe { cv_state_covariance(a, cov.as_mut_ptr(), 4) }, CvStatus::Ok);
    assert!((cov[0] - 0.25).abs() < 1e-10);
    assert_eq!(unsafe { cv_state_covariance(b, cov.as_mut_ptr(), 4) }, CvStatus::Ok);
    assert!((cov[3] - 0.25).abs() < 1e-10);

    let config = CvProtocolConfig {
        protocol: CvProtocol::Asymmetric,
        v: 0.25,
        alpha_x: 1.2,
        alpha_p: 0.4,
        ..cv_protocol_config_default()
    };
    let mut report = ptr::null_mut();
    let status = unsafe { cv_run_asymmetric_with_ancillas(&config, a, b, &mut report) };
    assert_eq!(status, CvStatus::Ok, "{}", last_error());
    let f = fidelities(report);
    assert!((f[0] - 0.8).abs() < 1e-10 && (f[1] - 0.5).abs() < 1e-10, "{f:?}");
    unsafe {
        cv_report_free(report);
        cv_state_free(a);
        cv_state_free(b);
    }
}

#[test]
fn negative_ancilla_variance_is_rejected() {
    let mut report = ptr::null_mut();
    let mut config = cv_protocol_config_default();
    config.v = -1.0;
    config.protocol = CvProtocol::Asymmetric;
    let status = unsafe { cv_run_protocol(&config, &mut report) };
    assert_eq!(status, CvStatus::InvalidArgument);
    assert!(report.is_null());
}

#[test]
fn report_json_lists_every_clone() {
    let report = run(&cv_protocol_config_default());
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { cv_report_to_json(report, &mut json) }, CvStatus::Ok);
    let value: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
    assert_eq!(value["clones"].as_array().map(Vec::len), Some(2));
    unsafe { cv_report_free(report) };
}

#[test]
fn sampled_outcomes_are_reproducible() {
    let config = CvProtocolConfig {
        outcome: CvOutcome::Sampled,
        seed: 42,
        alpha_x: 0.5,
        ..cv_protocol_config_default()
    };
    let first = run(&config);
    let second = run(&config);
    assert_eq!(fidelities(first), fidelities(second));
    unsafe {
        cv_report_free(first);
        cv_report_free(second);
    }
}

#[test]
fn feasibility_matches_the_reference_points() {
    let mut out = CvFeasibility {
        kappa: 0.0,
        optical_density: 0.0,
        eta: 0.0,
        bound: 0.0,
        margin: 0.0,
        feasible: false,
        required_optical_density: 0.0,
    };
    assert_eq!(unsafe { cv_feasibility_check(1.0, 100.0, 10.0, &mut out) }, CvStatus::Ok);
    assert_eq!(out.eta, 0.01);
    assert_eq!(out.bound, 0.5);
    assert!(out.feasible);
    assert_eq!(unsafe { cv_feasibility_check(1.0, 2.0, 10.0, &mut out) }, CvStatus::Ok);
    assert_eq!(out.eta, 0.5);
    assert!(!out.feasible);
    assert_eq!(unsafe { cv_feasibility_check(1.0, -2.0, 10.0, &mut out) }, CvStatus::InvalidArgument);
}

#[test]
fn physical_coupling_is_positive() {
    let mut k = 0.0;
    let status = unsafe { cv_kappa_from_physical(852e-9, 2.0 * std::f64::consts::PI * 5.2e6, 2.0 * std::f64::consts::PI * 700e6, 1e-4, 1e13, 1e12, &mut k) };
    assert_eq!(status, CvStatus::Ok, "{}", last_error());
    assert!(k > 0.0 && k.is_finite());
    assert_eq!(
        unsafe { cv_kappa_from_physical(-1.0, 1.0, 1.0, 1.0, 1.0, 1.0, &mut k) },
        CvStatus::InvalidArgument
    );
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/cvclone.h")).unwrap();
    let source = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .filter_map(|rest| rest.split('(').next())
        .collect();
    assert!(exports.len() >= 20);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    for item in ["typedef struct CvState CvState;", "typedef struct CvReport CvReport;", "CV_STATUS_OK = 0"] {
        assert!(header.contains(item), "{item}");
    }
}
