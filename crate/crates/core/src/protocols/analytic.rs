//! Closed-form fidelities the simulations are compared against.

use std::f64::consts::SQRT_2;

/// `F = 1/(n̄ + 1)` for a unit-gain clone with `n̄` thermal photons of noise.
pub fn fidelity_from_thermal_photons(nbar: f64) -> f64 {
    1.0 / (nbar + 1.0)
}

/// Optimal symmetric Gaussian cloner: half a photon of added noise.
pub fn symmetric_fidelity() -> f64 {
    fidelity_from_thermal_photons(0.5)
}

/// Clone A with an x-squeezed ancilla of variance `v`.
pub fn asymmetric_fidelity_a(v: f64) -> f64 {
    1.0 / (1.0 + v)
}

/// Clone B with a p-squeezed ancilla of variance `v`.
pub fn asymmetric_fidelity_b(v: f64) -> f64 {
    4.0 * v / (4.0 * v + 1.0)
}

/// `κ = √(1/(4V) − 1/2)`: QND strength that squeezes to variance `v`.
pub fn squeezing_kappa(v: f64) -> f64 {
    (1.0 / (4.0 * v) - 0.5).sqrt()
}

/// Fidelity of the flying clone before unsqueezing.
///
/// The clone has mean `(α_x/√2, √2 α_p)` and covariance `diag(1/2, 2)`.
pub fn atoms_light_raw_fidelity(alpha_x: f64, alpha_p: f64) -> f64 {
    let (sx, sp) = (1.0, 2.5);
    let dx = alpha_x * (1.0 / SQRT_2 - 1.0);
    let dp = alpha_p * (SQRT_2 - 1.0);
    (-0.5 * (dx * dx / sx + dp * dp / sp)).exp() / (sx * sp).sqrt()
}
