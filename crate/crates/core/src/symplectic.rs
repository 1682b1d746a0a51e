//! Quadratic-Hamiltonian gates as affine symplectic maps.
//!
//! A [`SymplecticOp`] acts on the quadratures of its own modes only,
//! `r ↦ S r + d`; it is lifted onto a full register when applied. Sequential
//! application of `U₁` then `U₂` composes as `S₂ S₁`.
//!
//! Sign conventions (Heisenberg picture, `O ↦ U† O U`):
//!
//! | gate | action |
//! |------|--------|
//! | `qnd_xp(κ)`, `U = exp(-iκ x_c p_t)` | `x_t += κ x_c`, `p_c -= κ p_t` |
//! | `qnd_pp(κ)`, `U = exp(-iκ p_c p_t)` | `x_c += κ p_t`, `x_t += κ p_c` |
//! | `phase_rotation(θ)` | `x ↦ x cosθ + p sinθ`, `p ↦ p cosθ − x sinθ` |
//! | `beam_splitter_balanced(1, 2)` | `r₁ ↦ (r₁ − r₂)/√2`, `r₂ ↦ (r₁ + r₂)/√2` |
//! | `squeezer(f)` | `x ↦ f x`, `p ↦ p/f` |
//!
//! The beam-splitter orientation is the one for which the atoms-plus-light
//! cloner with feedback gains `(√2, 1)` yields `x_B = (x_L + x_B)/√2` and
//! `p_A = p_L − p_B` without extra signs. With these conventions
//! `qnd_xp(κ) = R_c(π/2) · qnd_pp(κ) · R_c(−π/2)` exactly.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::exact::Surd;
use crate::phase_space::{symplectic_form, GaussianState, ModeLabel, STRUCTURE_TOL};

/// An affine symplectic map on a list of modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OpRepr", into = "OpRepr")]
pub struct SymplecticOp {
    matrix: DMatrix<f64>,
    displacement: DVector<f64>,
    modes: Vec<ModeLabel>,
}

#[derive(Serialize, Deserialize)]
struct OpRepr {
    matrix: Vec<Vec<f64>>,
    displacement: Vec<f64>,
    modes: Vec<ModeLabel>,
}

impl From<SymplecticOp> for OpRepr {
    fn from(op: SymplecticOp) -> Self {
        let d = op.dim();
        OpRepr {
            matrix: (0..d)
                .map(|i| (0..d).map(|j| op.matrix[(i, j)]).collect())
                .collect(),
            displacement: op.displacement.iter().copied().collect(),
            modes: op.modes,
        }
    }
}

impl TryFrom<OpRepr> for SymplecticOp {
    type Error = Error;
    fn try_from(r: OpRepr) -> Result<Self> {
        let d = 2 * r.modes.len();
        if r.matrix.len() != d || r.matrix.iter().any(|row| row.len() != d) {
            return Err(Error::Dimension {
                expected: d,
                got: r.matrix.len(),
            });
        }
        let matrix = DMatrix::from_fn(d, d, |i, j| r.matrix[i][j]);
        let op = SymplecticOp::new(matrix, DVector::from_vec(r.displacement), r.modes)?;
        if !op.is_symplectic(STRUCTURE_TOL) {
            return Err(domain("matrix does not preserve the symplectic form"));
        }
        Ok(op)
    }
}

fn check_distinct(modes: &[ModeLabel]) -> Result<()> {
    for (i, a) in modes.iter().enumerate() {
        if modes[i + 1..].iter().any(|b| b.index == a.index) {
            return Err(domain(format!("mode {} used twice in one gate", a.index)));
        }
    }
    Ok(())
}

impl SymplecticOp {
    pub fn new(matrix: DMatrix<f64>, displacement: DVector<f64>, modes: Vec<ModeLabel>) -> Result<Self> {
        check_distinct(&modes)?;
        let d = 2 * modes.len();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::Dimension {
                expected: d,
                got: matrix.nrows(),
            });
        }
        if displacement.len() != d {
            return Err(Error::Dimension {
                expected: d,
                got: displacement.len(),
            });
        }
        Ok(SymplecticOp {
            matrix,
            displacement,
            modes,
        })
    }

    pub fn identity(modes: Vec<ModeLabel>) -> Result<Self> {
        let d = 2 * modes.len();
        SymplecticOp::new(DMatrix::identity(d, d), DVector::zeros(d), modes)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn displacement(&self) -> &DVector<f64> {
        &self.displacement
    }

    pub fn modes(&self) -> &[ModeLabel] {
        &self.modes
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `S Ω Sᵀ = Ω` entrywise within `tol`.
    pub fn is_symplectic(&self, tol: f64) -> bool {
        let omega = symplectic_form(self.modes.len());
        (&self.matrix * &omega * self.matrix.transpose() - omega).amax() <= tol
    }

    /// The inverse map `r ↦ S⁻¹(r − d)`, using `S⁻¹ = −Ω Sᵀ Ω`.
    pub fn inverse(&self) -> SymplecticOp {
        let omega = symplectic_form(self.modes.len());
        let inv = -(&omega * self.matrix.transpose() * &omega);
        let disp = -(&inv * &self.displacement);
        SymplecticOp {
            matrix: inv,
            displacement: disp,
            modes: self.modes.clone(),
        }
    }

    /// Lifts the op onto `target` modes, which must include all of its own.
    pub fn embed(&self, target: &[ModeLabel]) -> Result<SymplecticOp> {
        check_distinct(target)?;
        let positions: Vec<usize> = self
            .modes
            .iter()
            .map(|m| {
                target
                    .iter()
                    .position(|t| t.index == m.index)
                    .ok_or_else(|| domain(format!("mode {} not in the target register", m.index)))
            })
            .collect::<Result<_>>()?;
        let d = 2 * target.len();
        let mut matrix = DMatrix::identity(d, d);
        let mut displacement = DVector::zeros(d);
        for (a, &pa) in positions.iter().enumerate() {
            for qa in 0..2 {
                displacement[2 * pa + qa] = self.displacement[2 * a + qa];
                for (b, &pb) in positions.iter().enumerate() {
                    for qb in 0..2 {
                        matrix[(2 * pa + qa, 2 * pb + qb)] = self.matrix[(2 * a + qa, 2 * b + qb)];
                    }
                }
            }
        }
        Ok(SymplecticOp {
            matrix,
            displacement,
            modes: target.to_vec(),
        })
    }

    /// Full `2N×2N` matrix and displacement on a register of `num_modes` modes.
    pub fn on_register(&self, num_modes: usize) -> Result<(DMatrix<f64>, DVector<f64>)> {
        for m in &self.modes {
            m.check_in(num_modes)?;
        }
        let register: Vec<ModeLabel> = (0..num_modes)
            .map(|i| {
                self.modes
                    .iter()
                    .copied()
                    .find(|m| m.index == i)
                    .unwrap_or(ModeLabel::ancilla(i))
            })
            .collect();
        let full = self.embed(&register)?;
        Ok((full.matrix, full.displacement))
    }
}

impl fmt::Display for SymplecticOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.modes.iter().map(ModeLabel::name).collect();
        writeln!(f, "modes: [{}]", names.join(", "))?;
        write!(f, "S = {}d = {}", self.matrix, self.displacement.transpose())
    }
}

fn two_mode(c: ModeLabel, t: ModeLabel, rows: [[f64; 4]; 4]) -> Result<SymplecticOp> {
    if c.index == t.index {
        return Err(domain(format!("two-mode gate applied to mode {} twice", c.index)));
    }
    let m = DMatrix::from_fn(4, 4, |i, j| rows[i][j]);
    SymplecticOp::new(m, DVector::zeros(4), vec![c, t])
}

/// QND coupling `exp(-iκ p_c p_t)`: `x_c ↦ x_c + κ p_t`, `x_t ↦ x_t + κ p_c`.
pub fn qnd_pp(kappa: f64, control: ModeLabel, target: ModeLabel) -> Result<SymplecticOp> {
    two_mode(
        control,
        target,
        [
            [1.0, 0.0, 0.0, kappa],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, kappa, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ],
    )
}

/// QND coupling `exp(-iκ x_c p_t)`: `x_t ↦ x_t + κ x_c`, `p_c ↦ p_c − κ p_t`.
///
/// `κ = 1` is the CV C-NOT and `κ = −1` its inverse.
pub fn qnd_xp(kappa: f64, control: ModeLabel, target: ModeLabel) -> Result<SymplecticOp> {
    two_mode(
        control,
        target,
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, -kappa],
            [kappa, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ],
    )
}

pub fn cnot(control: ModeLabel, target: ModeLabel) -> Result<SymplecticOp> {
    qnd_xp(1.0, control, target)
}

pub fn cnot_dagger(control: ModeLabel, target: ModeLabel) -> Result<SymplecticOp> {
    qnd_xp(-1.0, control, target)
}

pub fn phase_rotation(theta: f64, mode: ModeLabel) -> SymplecticOp {
    let (s, c) = theta.sin_cos();
    SymplecticOp {
        matrix: DMatrix::from_row_slice(2, 2, &[c, s, -s, c]),
        displacement: DVector::zeros(2),
        modes: vec![mode],
    }
}

pub fn beam_splitter_balanced(mode1: ModeLabel, mode2: ModeLabel) -> Result<SymplecticOp> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    two_mode(
        mode1,
        mode2,
        [
            [h, 0.0, -h, 0.0],
            [0.0, h, 0.0, -h],
            [h, 0.0, h, 0.0],
            [0.0, h, 0.0, h],
        ],
    )
}

pub fn squeezer(factor: f64, mode: ModeLabel) -> Result<SymplecticOp> {
    if !(factor > 0.0) || !factor.is_finite() {
        return Err(domain(format!("squeezing factor must be positive, got {factor}")));
    }
    SymplecticOp::new(
        DMatrix::from_row_slice(2, 2, &[factor, 0.0, 0.0, 1.0 / factor]),
        DVector::zeros(2),
        vec![mode],
    )
}

/// Pure displacement; `d` lists `(dx, dp)` per mode.
pub fn displace(d: &[f64], modes: &[ModeLabel]) -> Result<SymplecticOp> {
    if d.len() != 2 * modes.len() {
        return Err(Error::Dimension {
            expected: 2 * modes.len(),
            got: d.len(),
        });
    }
    let n = d.len();
    SymplecticOp::new(
        DMatrix::identity(n, n),
        DVector::from_column_slice(d),
        modes.to_vec(),
    )
}

/// `mean ↦ S mean + d`, `cov ↦ S cov Sᵀ`.
pub fn apply(op: &SymplecticOp, s: &GaussianState) -> Result<GaussianState> {
    let (m, d) = op.on_register(s.num_modes())?;
    let mean = &m * s.mean() + d;
    let cov = &m * s.cov() * m.transpose();
    Ok(GaussianState::from_parts(mean, (&cov + cov.transpose()) * 0.5))
}

/// Single map equal to applying `ops` in order; acts on the union of their modes.
pub fn compose(ops: &[SymplecticOp]) -> Result<SymplecticOp> {
    let mut union: BTreeMap<usize, ModeLabel> = BTreeMap::new();
    for op in ops {
        for m in &op.modes {
            union.entry(m.index).or_insert(*m);
        }
    }
    let modes: Vec<ModeLabel> = union.into_values().collect();
    let mut acc = SymplecticOp::identity(modes.clone())?;
    for op in ops {
        let lifted = op.embed(&modes)?;
        acc.displacement = &lifted.matrix * &acc.displacement + &lifted.displacement;
        acc.matrix = &lifted.matrix * &acc.matrix;
    }
    Ok(acc)
}

/// Gate descriptor with exact parameters.
///
/// Descriptors are what the Heisenberg oracle consumes; [`Gate::to_op`]
/// produces the numeric map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum Gate {
    QndXp {
        control: ModeLabel,
        target: ModeLabel,
        kappa: Surd,
    },
    QndPp {
        control: ModeLabel,
        target: ModeLabel,
        kappa: Surd,
    },
    /// Rotation by `quarter_turns · π/2`.
    Rotation { mode: ModeLabel, quarter_turns: i32 },
    BeamSplitter { mode1: ModeLabel, mode2: ModeLabel },
    Squeezer { mode: ModeLabel, factor: Surd },
    Displace { mode: ModeLabel, dx: Surd, dp: Surd },
}

impl Gate {
    pub fn cnot(control: ModeLabel, target: ModeLabel) -> Gate {
        Gate::QndXp {
            control,
            target,
            kappa: Surd::integer(1),
        }
    }

    pub fn cnot_dagger(control: ModeLabel, target: ModeLabel) -> Gate {
        Gate::QndXp {
            control,
            target,
            kappa: Surd::integer(-1),
        }
    }

    pub fn modes(&self) -> Vec<ModeLabel> {
        match self {
            Gate::QndXp { control, target, .. } | Gate::QndPp { control, target, .. } => {
                vec![*control, *target]
            }
            Gate::BeamSplitter { mode1, mode2 } => vec![*mode1, *mode2],
            Gate::Rotation { mode, .. } | Gate::Squeezer { mode, .. } | Gate::Displace { mode, .. } => {
                vec![*mode]
            }
        }
    }

    pub fn to_op(&self) -> Result<SymplecticOp> {
        match self {
            Gate::QndXp {
                control,
                target,
                kappa,
            } => qnd_xp(kappa.to_f64(), *control, *target),
            Gate::QndPp {
                control,
                target,
                kappa,
            } => qnd_pp(kappa.to_f64(), *control, *target),
            Gate::Rotation {
                mode,
                quarter_turns,
            } => Ok(phase_rotation(
                f64::from(*quarter_turns) * std::f64::consts::FRAC_PI_2,
                *mode,
            )),
            Gate::BeamSplitter { mode1, mode2 } => beam_splitter_balanced(*mode1, *mode2),
            Gate::Squeezer { mode, factor } => squeezer(factor.to_f64(), *mode),
            Gate::Displace { mode, dx, dp } => displace(&[dx.to_f64(), dp.to_f64()], &[*mode]),
        }
    }

    /// Parses `keyword mode… [param…]` with modes named as in `register`.
    ///
    /// Keywords: `cnot`, `cnot_dag`, `qnd_xp`, `qnd_pp`, `rot`, `bs`, `sq`, `disp`.
    /// Example: `qnd_xp L A 1/2`, `sq B sqrt2`, `disp A 1 0`.
    pub fn parse(s: &str, register: &[ModeLabel]) -> Result<Gate> {
        let words: Vec<&str> = s.split_whitespace().collect();
        let (&kw, args) = words
            .split_first()
            .ok_or_else(|| Error::UnknownGate(s.to_string()))?;
        let mode = |i: usize| -> Result<ModeLabel> {
            let name = args
                .get(i)
                .ok_or_else(|| domain(format!("`{s}`: missing mode argument")))?;
            register
                .iter()
                .copied()
                .find(|m| m.name() == *name)
                .ok_or_else(|| domain(format!("`{s}`: unknown mode `{name}`")))
        };
        let num = |i: usize| -> Result<Surd> {
            args.get(i)
                .ok_or_else(|| domain(format!("`{s}`: missing parameter")))?
                .parse()
        };
        let arity = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(domain(format!("`{s}`: expected {n} arguments")))
            }
        };
        match kw {
            "cnot" => {
                arity(2)?;
                Ok(Gate::cnot(mode(0)?, mode(1)?))
            }
            "cnot_dag" => {
                arity(2)?;
                Ok(Gate::cnot_dagger(mode(0)?, mode(1)?))
            }
            "qnd_xp" | "qnd_pp" => {
                arity(3)?;
                let (control, target, kappa) = (mode(0)?, mode(1)?, num(2)?);
                Ok(if kw == "qnd_xp" {
                    Gate::QndXp { control, target, kappa }
                } else {
                    Gate::QndPp { control, target, kappa }
                })
            }
            "rot" => {
                arity(2)?;
                let k: i32 = args[1]
                    .parse()
                    .map_err(|_| domain(format!("`{s}`: quarter turns must be an integer")))?;
                Ok(Gate::Rotation {
                    mode: mode(0)?,
                    quarter_turns: k,
                })
            }
            "bs" => {
                arity(2)?;
                Ok(Gate::BeamSplitter {
                    mode1: mode(0)?,
                    mode2: mode(1)?,
                })
            }
            "sq" => {
                arity(2)?;
                let factor = num(1)?;
                if factor.signum() <= 0 {
                    return Err(domain(format!("`{s}`: squeezing factor must be positive")));
                }
                Ok(Gate::Squeezer { mode: mode(0)?, factor })
            }
            "disp" => {
                arity(3)?;
                Ok(Gate::Displace {
                    mode: mode(0)?,
                    dx: num(1)?,
                    dp: num(2)?,
                })
            }
            _ => Err(Error::UnknownGate(kw.to_string())),
        }
    }
}
