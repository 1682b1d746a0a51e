//! Experimental feasibility of the light–atom QND coupling.
//!
//! Units are SI throughout:
//!
//! | quantity                    | symbol | unit |
//! |-----------------------------|--------|------|
//! | optical wavelength          | `λ`    | m    |
//! | excited-state linewidth     | `γ`    | s⁻¹  |
//! | detuning                    | `δ`    | s⁻¹  |
//! | beam cross-section          | `A`    | m²   |
//! | photon and atom numbers     | `N_L`, `N_A` | 1 |
//! | resonant optical density    | `α`    | 1    |
//!
//! The resonant cross-section is `σ = λ²/(2π)`, the per-atom coupling
//! `a = σγ/(Aδ)`, and the QND strength `κ = a √(N_L N_A) / 2`. A coupling
//! of strength `κ` costs a spontaneous-emission probability `η = κ²/α`,
//! which must stay well below the tolerable `1/(1 + κ²)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default factor by which `η` must undercut its bound.
pub const DEFAULT_MARGIN: f64 = 10.0;

/// How the coupling strength is specified.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// Per-atom coupling `a` and the photon and atom numbers.
    Effective { a: f64, n_l: f64, n_a: f64 },
    /// Physical parameters from which `a` is derived.
    Physical {
        lambda: f64,
        gamma: f64,
        delta: f64,
        beam_area: f64,
        n_l: f64,
        n_a: f64,
    },
    /// The QND strength directly.
    Kappa(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingParams {
    pub coupling: Coupling,
    pub optical_density: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub kappa: f64,
    pub optical_density: f64,
    /// Spontaneous-emission probability `κ²/α`.
    pub eta: f64,
    /// Tolerable emission probability `1/(1 + κ²)`.
    pub bound: f64,
    pub margin: f64,
    pub feasible: bool,
    /// Optical density at which the check passes with equality.
    pub required_optical_density: f64,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Resonant absorption cross-section `λ²/(2π)`.
pub fn sigma(lambda: f64) -> Result<f64> {
    let lambda = positive("wavelength", lambda)?;
    Ok(lambda * lambda / (2.0 * PI))
}

/// Per-atom coupling `a = σγ/(Aδ)`; negative detunings give negative `a`.
pub fn coupling_constant(lambda: f64, gamma: f64, delta: f64, beam_area: f64) -> Result<f64> {
    let s = sigma(lambda)?;
    let gamma = positive("linewidth", gamma)?;
    let area = positive("beam area", beam_area)?;
    if !delta.is_finite() || delta == 0.0 {
        return Err(Error::Domain(format!("detuning must be finite and nonzero, got {delta}")));
    }
    Ok(s * gamma / (area * delta))
}

/// `κ = a √(N_L N_A) / 2`.
pub fn kappa_from_effective(a: f64, n_l: f64, n_a: f64) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::Domain(format!("coupling must be finite, got {a}")));
    }
    let n_l = positive("photon number", n_l)?;
    let n_a = positive("atom number", n_a)?;
    Ok(a * (n_l * n_a).sqrt() / 2.0)
}

pub fn kappa_from_physical(
    lambda: f64,
    gamma: f64,
    delta: f64,
    beam_area: f64,
    n_l: f64,
    n_a: f64,
) -> Result<f64> {
    kappa_from_effective(coupling_constant(lambda, gamma, delta, beam_area)?, n_l, n_a)
}

impl Coupling {
    pub fn kappa(&self) -> Result<f64> {
        match *self {
            Coupling::Effective { a, n_l, n_a } => kappa_from_effective(a, n_l, n_a),
            Coupling::Physical {
                lambda,
                gamma,
                delta,
                beam_area,
                n_l,
                n_a,
            } => kappa_from_physical(lambda, gamma, delta, beam_area, n_l, n_a),
            Coupling::Kappa(k) if k.is_finite() => Ok(k),
            Coupling::Kappa(k) => Err(Error::Domain(format!("kappa must be finite, got {k}"))),
        }
    }
}

/// Optical density needed so that `η · margin = 1/(1 + κ²)`.
pub fn required_optical_density(kappa: f64, margin: f64) -> f64 {
    let k2 = kappa * kappa;
    margin * k2 * (1.0 + k2)
}

/// Checks `η · margin ≤ 1/(1 + κ²)`.
pub fn feasibility_check(params: &CouplingParams, margin: f64) -> Result<FeasibilityReport> {
    let margin = positive("margin", margin)?;
    let od = positive("optical density", params.optical_density)?;
    let kappa = params.coupling.kappa()?;
    let k2 = kappa * kappa;
    let eta = k2 / od;
    let bound = 1.0 / (1.0 + k2);
    Ok(FeasibilityReport {
        kappa,
        optical_density: od,
        eta,
        bound,
        margin,
        feasible: eta * margin <= bound,
        required_optical_density: required_optical_density(kappa, margin),
    })
}
