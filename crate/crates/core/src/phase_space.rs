//! Multimode Gaussian states in phase space.
//!
//! Conventions used throughout the crate:
//!
//! * quadratures obey `[x, p] = i`, so the vacuum has variance `1/2` in
//!   every quadrature and a thermal state with `n̄` photons has `1/2 + n̄`;
//! * the phase-space vector is ordered `(x₁, p₁, x₂, p₂, …)` and the
//!   symplectic form is `Ω = ⊕ [[0, 1], [-1, 0]]`.
//!
//! With these conventions a clone carrying half a thermal photon of added
//! noise has fidelity `2/3` with its coherent target.

use std::fmt;

use nalgebra::{Cholesky, DMatrix, DVector, Matrix2, SymmetricEigen, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Tolerance for structural checks (symmetry, uncertainty relation, purity).
pub const STRUCTURE_TOL: f64 = 1e-10;

/// Which quadrature of a mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    P,
}

impl Axis {
    /// Offset of this quadrature inside its mode's `(x, p)` pair.
    pub fn offset(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::P => 1,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::P => "p",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "x" | "X" => Ok(Axis::X),
            "p" | "P" => Ok(Axis::P),
            other => Err(domain(format!("unknown quadrature axis `{other}`"))),
        }
    }
}

/// Role a mode plays in a protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModeTag {
    Light,
    AtomA,
    AtomB,
    Ancilla,
}

/// A mode position in a register together with its semantic role.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeLabel {
    pub index: usize,
    pub tag: ModeTag,
}

impl ModeLabel {
    pub const fn new(index: usize, tag: ModeTag) -> Self {
        ModeLabel { index, tag }
    }

    pub const fn light(index: usize) -> Self {
        ModeLabel::new(index, ModeTag::Light)
    }

    pub const fn atom_a(index: usize) -> Self {
        ModeLabel::new(index, ModeTag::AtomA)
    }

    pub const fn atom_b(index: usize) -> Self {
        ModeLabel::new(index, ModeTag::AtomB)
    }

    pub const fn ancilla(index: usize) -> Self {
        ModeLabel::new(index, ModeTag::Ancilla)
    }

    /// Short name used in operator tables: `L`, `A`, `B`, or `C<index>`.
    pub fn name(&self) -> String {
        match self.tag {
            ModeTag::Light => "L".into(),
            ModeTag::AtomA => "A".into(),
            ModeTag::AtomB => "B".into(),
            ModeTag::Ancilla => format!("C{}", self.index),
        }
    }

    /// Position of `axis` of this mode in the phase-space vector.
    pub fn quadrature(&self, axis: Axis) -> usize {
        2 * self.index + axis.offset()
    }

    /// The same mode after mode `removed` has been deleted from the register.
    pub fn after_removal(&self, removed: usize) -> Result<ModeLabel> {
        match self.index.cmp(&removed) {
            std::cmp::Ordering::Less => Ok(*self),
            std::cmp::Ordering::Greater => Ok(ModeLabel::new(self.index - 1, self.tag)),
            std::cmp::Ordering::Equal => Err(domain(format!(
                "mode {} was removed from the register",
                self.name()
            ))),
        }
    }

    pub(crate) fn check_in(&self, num_modes: usize) -> Result<()> {
        if self.index < num_modes {
            Ok(())
        } else {
            Err(Error::ModeOutOfRange {
                index: self.index,
                num_modes,
            })
        }
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Canonical symplectic form `Ω` for `num_modes` modes in `(x₁,p₁,…)` order.
pub fn symplectic_form(num_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * num_modes, 2 * num_modes);
    for k in 0..num_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

/// A Gaussian state: first moments and covariance matrix.
///
/// States are values; every operation returns a new state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateRepr", into = "StateRepr")]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

/// JSON layout `{num_modes, mean: [...], cov: [[...]]}`.
#[derive(Serialize, Deserialize)]
struct StateRepr {
    num_modes: usize,
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

impl From<GaussianState> for StateRepr {
    fn from(s: GaussianState) -> Self {
        let dim = s.dim();
        StateRepr {
            num_modes: s.num_modes(),
            mean: s.mean.iter().copied().collect(),
            cov: (0..dim)
                .map(|i| (0..dim).map(|j| s.cov[(i, j)]).collect())
                .collect(),
        }
    }
}

impl TryFrom<StateRepr> for GaussianState {
    type Error = Error;
    fn try_from(r: StateRepr) -> Result<Self> {
        let dim = 2 * r.num_modes;
        if r.mean.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: r.mean.len(),
            });
        }
        if r.cov.len() != dim || r.cov.iter().any(|row| row.len() != dim) {
            return Err(Error::Dimension {
                expected: dim,
                got: r.cov.len(),
            });
        }
        let cov = DMatrix::from_fn(dim, dim, |i, j| r.cov[i][j]);
        GaussianState::new(DVector::from_vec(r.mean), cov)
    }
}

impl GaussianState {
    /// Builds a state and checks symmetry and the uncertainty relation.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let s = GaussianState::new_unchecked(mean, cov)?;
        s.check_physical()?;
        Ok(s)
    }

    /// Builds a state checking only dimensions.
    pub fn new_unchecked(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if mean.len() % 2 != 0 || mean.is_empty() {
            return Err(domain(format!(
                "mean vector length {} is not a positive even number",
                mean.len()
            )));
        }
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::Dimension {
                expected: mean.len(),
                got: cov.nrows(),
            });
        }
        Ok(GaussianState { mean, cov })
    }

    pub fn vacuum(num_modes: usize) -> Result<Self> {
        if num_modes == 0 {
            return Err(domain("a state needs at least one mode"));
        }
        let dim = 2 * num_modes;
        Ok(GaussianState {
            mean: DVector::zeros(dim),
            cov: DMatrix::identity(dim, dim) * 0.5,
        })
    }

    pub fn num_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// `(⟨x⟩, ⟨p⟩)` of one mode.
    pub fn mode_mean(&self, mode: usize) -> Result<[f64; 2]> {
        ModeLabel::ancilla(mode).check_in(self.num_modes())?;
        Ok([self.mean[2 * mode], self.mean[2 * mode + 1]])
    }

    /// The 2×2 covariance block of one mode.
    pub fn mode_cov(&self, mode: usize) -> Result<[[f64; 2]; 2]> {
        ModeLabel::ancilla(mode).check_in(self.num_modes())?;
        let i = 2 * mode;
        Ok([
            [self.cov[(i, i)], self.cov[(i, i + 1)]],
            [self.cov[(i + 1, i)], self.cov[(i + 1, i + 1)]],
        ])
    }

    pub fn quadrature_variance(&self, mode: usize, axis: Axis) -> Result<f64> {
        ModeLabel::ancilla(mode).check_in(self.num_modes())?;
        let i = 2 * mode + axis.offset();
        Ok(self.cov[(i, i)])
    }

    /// Symplectic eigenvalues in ascending order.
    ///
    /// Computed as the singular values of `Lᵀ Ω L` for `V = L Lᵀ`, which come in
    /// equal pairs; fails if `V` is not positive definite.
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        symplectic_eigenvalues(&self.cov)
    }

    /// Symmetry and `V + iΩ/2 ≥ 0`, both to [`STRUCTURE_TOL`].
    pub fn check_physical(&self) -> Result<()> {
        let asym = (&self.cov - self.cov.transpose()).amax();
        if asym > STRUCTURE_TOL || !asym.is_finite() {
            return Err(Error::InvalidCovariance(format!(
                "covariance is not symmetric (max asymmetry {asym:e})"
            )));
        }
        if self.mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidCovariance("non-finite mean".into()));
        }
        let nu = self.symplectic_eigenvalues()?;
        if let Some(&min) = nu.first() {
            if min < 0.5 - STRUCTURE_TOL {
                return Err(Error::InvalidCovariance(format!(
                    "uncertainty relation violated: smallest symplectic eigenvalue {min} < 1/2"
                )));
            }
        }
        Ok(())
    }

    pub fn is_physical(&self) -> bool {
        self.check_physical().is_ok()
    }

    /// All symplectic eigenvalues equal to `1/2`.
    pub fn is_pure(&self) -> bool {
        self.symplectic_eigenvalues()
            .map(|nu| nu.iter().all(|v| (v - 0.5).abs() <= STRUCTURE_TOL))
            .unwrap_or(false)
    }

    /// `1/√det(2V)`.
    pub fn purity(&self) -> f64 {
        let det = (&self.cov * 2.0).determinant();
        1.0 / det.sqrt()
    }

    /// Largest absolute difference of means and covariances.
    pub fn max_abs_diff(&self, other: &GaussianState) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let dm = (&self.mean - &other.mean).amax();
        let dc = (&self.cov - &other.cov).amax();
        Ok(dm.max(dc))
    }

    pub fn approx_eq(&self, other: &GaussianState, tol: f64) -> bool {
        self.max_abs_diff(other).map(|d| d <= tol).unwrap_or(false)
    }

    pub(crate) fn from_parts(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        debug_assert_eq!(mean.len(), cov.nrows());
        GaussianState { mean, cov }
    }
}

pub(crate) fn symplectic_eigenvalues(cov: &DMatrix<f64>) -> Result<Vec<f64>> {
    let dim = cov.nrows();
    if dim == 0 || dim % 2 != 0 || cov.ncols() != dim {
        return Err(domain("covariance must be a square matrix of even order"));
    }
    let sym = (cov + cov.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym.clone());
    let min_eig = eig.eigenvalues.min();
    if min_eig < -STRUCTURE_TOL || !min_eig.is_finite() {
        return Err(Error::InvalidCovariance(format!(
            "covariance is not positive semidefinite (eigenvalue {min_eig:e})"
        )));
    }
    // With V = L Lᵀ, the antisymmetric Lᵀ Ω L has singular values equal to
    // the symplectic eigenvalues, each twice.
    let chol = Cholesky::new(sym).ok_or_else(|| {
        Error::InvalidCovariance("covariance is singular, so no state satisfies the uncertainty relation".into())
    })?;
    let l = chol.l();
    let k = l.transpose() * symplectic_form(dim / 2) * &l;
    let mut sv: Vec<f64> = k.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| a.partial_cmp(b).expect("finite singular values"));
    Ok(sv.chunks(2).map(|pair| 0.5 * (pair[0] + pair[1])).collect())
}

/// Coherent state with quadrature means `(alpha_x, alpha_p)`.
pub fn make_coherent(alpha_x: f64, alpha_p: f64) -> GaussianState {
    GaussianState::from_parts(
        DVector::from_vec(vec![alpha_x, alpha_p]),
        DMatrix::identity(2, 2) * 0.5,
    )
}

/// Pure squeezed vacuum with variance `variance` along `axis` and
/// `1/(4·variance)` along the conjugate quadrature.
pub fn make_squeezed_vacuum(variance: f64, axis: Axis) -> Result<GaussianState> {
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(domain(format!(
            "squeezed variance must be positive and finite, got {variance}"
        )));
    }
    let conj = 1.0 / (4.0 * variance);
    let (vx, vp) = match axis {
        Axis::X => (variance, conj),
        Axis::P => (conj, variance),
    };
    Ok(GaussianState::from_parts(
        DVector::zeros(2),
        DMatrix::from_diagonal(&DVector::from_vec(vec![vx, vp])),
    ))
}

/// Thermal noise of `nbar` photons on top of a coherent amplitude.
pub fn make_displaced_thermal(alpha_x: f64, alpha_p: f64, nbar: f64) -> Result<GaussianState> {
    if !(nbar >= 0.0) {
        return Err(domain(format!("thermal photon number must be ≥ 0, got {nbar}")));
    }
    Ok(GaussianState::from_parts(
        DVector::from_vec(vec![alpha_x, alpha_p]),
        DMatrix::identity(2, 2) * (0.5 + nbar),
    ))
}

/// Direct sum of states; mode order is preserved.
pub fn tensor(states: &[GaussianState]) -> Result<GaussianState> {
    if states.is_empty() {
        return Err(domain("tensor product of an empty list"));
    }
    let dim: usize = states.iter().map(GaussianState::dim).sum();
    let mut mean = DVector::zeros(dim);
    let mut cov = DMatrix::zeros(dim, dim);
    let mut at = 0;
    for s in states {
        let d = s.dim();
        mean.rows_mut(at, d).copy_from(&s.mean);
        cov.view_mut((at, at), (d, d)).copy_from(&s.cov);
        at += d;
    }
    Ok(GaussianState::from_parts(mean, cov))
}

/// Marginal state of the selected modes, in the order given.
pub fn reduced_state(s: &GaussianState, modes: &[ModeLabel]) -> Result<GaussianState> {
    if modes.is_empty() {
        return Err(domain("reduced state needs at least one mode"));
    }
    let n = s.num_modes();
    let mut seen = vec![false; n];
    for m in modes {
        m.check_in(n)?;
        if std::mem::replace(&mut seen[m.index], true) {
            return Err(domain(format!("mode {} selected twice", m.index)));
        }
    }
    let idx: Vec<usize> = modes
        .iter()
        .flat_map(|m| [2 * m.index, 2 * m.index + 1])
        .collect();
    let mean = DVector::from_iterator(idx.len(), idx.iter().map(|&i| s.mean[i]));
    let cov = DMatrix::from_fn(idx.len(), idx.len(), |i, j| s.cov[(idx[i], idx[j])]);
    Ok(GaussianState::from_parts(mean, cov))
}

/// Fidelity `⟨α|ρ|α⟩` between a single-mode Gaussian state and a coherent state.
///
/// For a pure target, `F = exp(-½ δᵀ (V + I/2)⁻¹ δ) / √det(V + I/2)` with
/// `δ` the mean mismatch.
pub fn fidelity_with_coherent(s: &GaussianState, alpha_x: f64, alpha_p: f64) -> Result<f64> {
    if s.num_modes() != 1 {
        return Err(domain(format!(
            "fidelity with a coherent state needs a single-mode state, got {} modes",
            s.num_modes()
        )));
    }
    s.check_physical()?;
    let sigma = Matrix2::new(
        s.cov[(0, 0)] + 0.5,
        s.cov[(0, 1)],
        s.cov[(1, 0)],
        s.cov[(1, 1)] + 0.5,
    );
    let det = sigma.determinant();
    let inv = sigma
        .try_inverse()
        .ok_or_else(|| Error::InvalidCovariance("singular overlap matrix".into()))?;
    let delta = Vector2::new(s.mean[0] - alpha_x, s.mean[1] - alpha_p);
    let exponent = -0.5 * (delta.transpose() * inv * delta)[(0, 0)];
    Ok(exponent.exp() / det.sqrt())
}
