#![allow(dead_code)]

use cvclone::symplectic::Gate;
use cvclone::{GaussianState, ModeLabel, ModeTag, Surd};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub fn register(n: usize) -> Vec<ModeLabel> {
    let tags = [ModeTag::Light, ModeTag::AtomA, ModeTag::AtomB];
    (0..n)
        .map(|i| ModeLabel::new(i, tags.get(i).copied().unwrap_or(ModeTag::Ancilla)))
        .collect()
}

fn small_rational<R: Rng>(rng: &mut R, max_num: i64) -> Surd {
    loop {
        let num = rng.random_range(-max_num..=max_num);
        let den = rng.random_range(1..=4);
        if num != 0 {
            return Surd::ratio(num, den);
        }
    }
}

/// A gate drawn uniformly from the catalog, acting on `reg`.
pub fn random_gate<R: Rng>(rng: &mut R, reg: &[ModeLabel]) -> Gate {
    let one = reg[rng.random_range(0..reg.len())];
    let two = |rng: &mut R| loop {
        let other = reg[rng.random_range(0..reg.len())];
        if other != one {
            return other;
        }
    };
    match rng.random_range(0..7) {
        0 => Gate::QndXp {
            control: one,
            target: two(rng),
            kappa: small_rational(rng, 4),
        },
        1 => Gate::QndPp {
            control: one,
            target: two(rng),
            kappa: small_rational(rng, 4),
        },
        2 => Gate::Rotation {
            mode: one,
            quarter_turns: rng.random_range(-3..=3),
        },
        3 => Gate::BeamSplitter {
            mode1: one,
            mode2: two(rng),
        },
        4 => {
            let factors = [
                Surd::sqrt2(),
                Surd::inv_sqrt2(),
                Surd::ratio(1, 2),
                Surd::integer(2),
                Surd::ratio(3, 2),
                Surd::ratio(2, 3),
            ];
            Gate::Squeezer {
                mode: one,
                factor: factors[rng.random_range(0..factors.len())].clone(),
            }
        }
        5 => Gate::cnot(one, two(rng)),
        _ => Gate::Displace {
            mode: one,
            dx: small_rational(rng, 6),
            dp: small_rational(rng, 6),
        },
    }
}

/// Numeric affine map `r → S r + d` of a gate sequence on an `n`-mode register.
pub fn numeric_map(gates: &[Gate], n: usize) -> (DMatrix<f64>, DVector<f64>) {
    let mut s = DMatrix::identity(2 * n, 2 * n);
    let mut d = DVector::zeros(2 * n);
    for g in gates {
        let (sg, dg) = g.to_op().unwrap().on_register(n).unwrap();
        s = &sg * s;
        d = &sg * d + dg;
    }
    (s, d)
}

pub fn random_coherent_register<R: Rng>(rng: &mut R, n: usize) -> GaussianState {
    let states: Vec<GaussianState> = (0..n)
        .map(|_| cvclone::phase_space::make_coherent(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)))
        .collect();
    cvclone::phase_space::tensor(&states).unwrap()
}
