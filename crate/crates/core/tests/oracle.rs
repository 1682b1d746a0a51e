use cvclone::oracle::{added_noise_variances, check_commutators, parse_circuit, propagate, vacuum_variances, CircuitStep};
use cvclone::phase_space::{make_squeezed_vacuum, tensor, make_coherent};
use cvclone::protocols::{run_asymmetric, run_atoms_light, run_single_pass, run_two_pass, ProtocolConfig, ProtocolKind};
use cvclone::symplectic::Gate;
use cvclone::{Axis, GaussianState, ModeLabel, Surd};
use nalgebra::DMatrix;

const L: ModeLabel = ModeLabel::light(0);
const A: ModeLabel = ModeLabel::atom_a(1);
const B: ModeLabel = ModeLabel::atom_b(2);
const REG: [ModeLabel; 3] = [L, A, B];

/// Covariance the Heisenberg table predicts for independent inputs.
fn predicted_cov(steps: &[CircuitStep], input: &GaussianState) -> DMatrix<f64> {
    let t = propagate(&REG, steps).unwrap();
    assert!(check_commutators(&t).ok());
    let m = t.coefficient_matrix();
    &m * input.cov() * m.transpose()
}

fn single_pass_steps(gain_a: Surd, gain_b: Surd, bs: bool) -> Vec<CircuitStep> {
    let mut c: Vec<CircuitStep> = vec![Gate::cnot(L, A).into()];
    if bs {
        c.push(Gate::BeamSplitter { mode1: L, mode2: B }.into());
    } else {
        c.push(Gate::cnot(L, B).into());
    }
    c.push(CircuitStep::MeasureFeed {
        mode: L,
        axis: Axis::P,
        gains: vec![(A, Axis::P, gain_a), (B, Axis::P, gain_b)],
    });
    c
}

#[test]
fn two_pass_table_predicts_simulated_state() {
    let text = "cnot L A\ncnot L B\n# second pass\ncnot_dag A L\ncnot_dag B L\n";
    let steps = parse_circuit(text, &REG).unwrap();
    let vac = GaussianState::vacuum(3).unwrap();
    let cov = predicted_cov(&steps, &vac);
    let r = run_two_pass(&ProtocolConfig::new(ProtocolKind::TwoPass)).unwrap();
    let clones = cov.view((2, 2), (4, 4)).into_owned();
    assert!((clones - r.clone_state.cov()).amax() < 1e-15);
}

#[test]
fn single_pass_table_predicts_averaged_state() {
    let vac = GaussianState::vacuum(3).unwrap();
    let cov = predicted_cov(&single_pass_steps(Surd::integer(1), Surd::integer(1), false), &vac);
    let r = run_single_pass(&ProtocolConfig::new(ProtocolKind::SinglePass)).unwrap();
    assert!((cov - r.clone_state.cov()).amax() < 1e-15);
}

#[test]
fn atoms_light_table_predicts_averaged_state() {
    let vac = GaussianState::vacuum(3).unwrap();
    let cov = predicted_cov(&single_pass_steps(Surd::sqrt2(), Surd::integer(1), true), &vac);
    let r = run_atoms_light(&ProtocolConfig::new(ProtocolKind::AtomsLight)).unwrap();
    assert!((cov - r.clone_state.cov()).amax() < 1e-15);
}

#[test]
fn asymmetric_table_predicts_fidelities() {
    for v in [0.1, 0.25, 0.5, 2.0] {
        let input = tensor(&[
            make_coherent(0.0, 0.0),
            make_squeezed_vacuum(v, Axis::X).unwrap(),
            make_squeezed_vacuum(v, Axis::P).unwrap(),
        ])
        .unwrap();
        let cov = predicted_cov(&single_pass_steps(Surd::integer(1), Surd::integer(1), false), &input);
        let r = run_asymmetric(&ProtocolConfig::new(ProtocolKind::AsymmetricSinglePass).with_v(v)).unwrap();
        assert!((cov - r.clone_state.cov()).amax() < 1e-14);

        let t = propagate(&REG, &single_pass_steps(Surd::integer(1), Surd::integer(1), false)).unwrap();
        let mut vars = vacuum_variances(&REG);
        vars.insert((1, Axis::X), v);
        vars.insert((1, Axis::P), 1.0 / (4.0 * v));
        vars.insert((2, Axis::X), 1.0 / (4.0 * v));
        vars.insert((2, Axis::P), v);
        let noise = added_noise_variances(&t, &vars).unwrap();
        let added = |mode: usize, axis: Axis| {
            noise
                .iter()
                .find(|o| o.mode.index == mode && o.axis == axis)
                .map(|o| o.variance - 0.5)
                .unwrap()
        };
        // added noise is V on clone A and 1/(4V) on clone B, in both quadratures
        for axis in [Axis::X, Axis::P] {
            assert!((added(1, axis) - v).abs() < 1e-12);
            assert!((added(2, axis) - 1.0 / (4.0 * v)).abs() < 1e-12);
        }
    }
}

#[test]
fn circuit_text_errors() {
    assert!(parse_circuit("teleport L A", &REG).is_err());
    assert!(parse_circuit("cnot L Z", &REG).is_err());
    assert!(parse_circuit("qnd_xp L A", &REG).is_err());
    let steps = parse_circuit("qnd_pp A B -1/3\nrot L 2\nsq B sqrt2\ndisp A 1 -1/2\nbs L B\n", &REG).unwrap();
    assert_eq!(steps.len(), 5);
    assert!(check_commutators(&propagate(&REG, &steps).unwrap()).ok());
}
