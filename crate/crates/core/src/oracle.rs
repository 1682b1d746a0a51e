//! Exact Heisenberg-picture propagation.
//!
//! Each output quadrature is tracked as a linear combination of the input
//! quadrature operators with coefficients in Q(√2), using the gates' in-out
//! relations directly rather than their matrices. This gives an independent
//! check on [`crate::symplectic`]: the coefficient matrix of a propagated
//! table must equal the numeric symplectic matrix of the same circuit, and
//! commutators can be verified exactly.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::exact::Surd;
use crate::phase_space::{Axis, ModeLabel};
use crate::symplectic::Gate;

/// Linear combination of input quadratures plus a c-number offset.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LinearOperatorExpr {
    coeffs: BTreeMap<(usize, Axis), Surd>,
    constant: Surd,
}

impl LinearOperatorExpr {
    /// The input operator `axis_mode_in`.
    pub fn input(mode: usize, axis: Axis) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert((mode, axis), Surd::one());
        LinearOperatorExpr {
            coeffs,
            constant: Surd::zero(),
        }
    }

    pub fn coefficient(&self, mode: usize, axis: Axis) -> Surd {
        self.coeffs.get(&(mode, axis)).cloned().unwrap_or_default()
    }

    pub fn constant(&self) -> &Surd {
        &self.constant
    }

    /// Nonzero coefficients keyed by `(input mode index, axis)`.
    pub fn terms(&self) -> impl Iterator<Item = (&(usize, Axis), &Surd)> {
        self.coeffs.iter()
    }

    pub fn set_coefficient(&mut self, mode: usize, axis: Axis, c: Surd) {
        if c.is_zero() {
            self.coeffs.remove(&(mode, axis));
        } else {
            self.coeffs.insert((mode, axis), c);
        }
    }

    pub fn scaled(&self, c: &Surd) -> Self {
        let mut out = LinearOperatorExpr::default();
        for (k, v) in &self.coeffs {
            let p = v * c;
            if !p.is_zero() {
                out.coeffs.insert(*k, p);
            }
        }
        out.constant = &self.constant * c;
        out
    }

    pub fn plus(&self, other: &LinearOperatorExpr) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.coeffs {
            let sum = &out.coeffs.get(k).cloned().unwrap_or_default() + v;
            out.set_coefficient(k.0, k.1, sum);
        }
        out.constant += &other.constant;
        out
    }

    pub fn plus_scaled(&self, other: &LinearOperatorExpr, c: &Surd) -> Self {
        self.plus(&other.scaled(c))
    }

    fn plus_constant(&self, c: &Surd) -> Self {
        let mut out = self.clone();
        out.constant += c;
        out
    }

    /// `[self, other] / i`, exact.
    pub fn commutator(&self, other: &LinearOperatorExpr) -> Surd {
        // [x_k, p_k] = i for each input mode k
        let mut acc = Surd::zero();
        for (&(mode, axis), a) in &self.coeffs {
            if axis == Axis::X {
                acc += &(a * &other.coefficient(mode, Axis::P));
            } else {
                acc += &(-(a * &other.coefficient(mode, Axis::X)));
            }
        }
        acc
    }

    /// Renders with input names such as `x_L_in`.
    pub fn render(&self, names: &BTreeMap<usize, String>) -> String {
        let mut out = String::new();
        for (&(mode, axis), c) in &self.coeffs {
            let name = names.get(&mode).cloned().unwrap_or_else(|| format!("C{mode}"));
            let sym = format!("{}_{}_in", axis.symbol(), name);
            push_term(&mut out, c, Some(&sym));
        }
        if !self.constant.is_zero() {
            push_term(&mut out, &self.constant, None);
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }
}

fn push_term(out: &mut String, c: &Surd, sym: Option<&str>) {
    let negative = c.signum() < 0;
    let mag = if negative { -c } else { c.clone() };
    let body = match sym {
        Some(s) if mag == Surd::one() => s.to_string(),
        Some(s) => format!("{mag} {s}"),
        None => mag.to_string(),
    };
    match (out.is_empty(), negative) {
        (true, false) => out.push_str(&body),
        (true, true) => {
            out.push('-');
            out.push_str(&body);
        }
        (false, false) => {
            out.push_str(" + ");
            out.push_str(&body);
        }
        (false, true) => {
            out.push_str(" - ");
            out.push_str(&body);
        }
    }
}

/// Output quadratures of a circuit as functions of its inputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorTable {
    inputs: Vec<ModeLabel>,
    outputs: BTreeMap<usize, (ModeLabel, [LinearOperatorExpr; 2])>,
}

impl OperatorTable {
    pub fn identity(inputs: &[ModeLabel]) -> Result<Self> {
        let mut outputs = BTreeMap::new();
        for m in inputs {
            let fresh = (
                *m,
                [
                    LinearOperatorExpr::input(m.index, Axis::X),
                    LinearOperatorExpr::input(m.index, Axis::P),
                ],
            );
            if outputs.insert(m.index, fresh).is_some() {
                return Err(domain(format!("input mode {} declared twice", m.index)));
            }
        }
        Ok(OperatorTable {
            inputs: inputs.to_vec(),
            outputs,
        })
    }

    pub fn inputs(&self) -> &[ModeLabel] {
        &self.inputs
    }

    /// Surviving output modes, by register index.
    pub fn output_modes(&self) -> Vec<ModeLabel> {
        self.outputs.values().map(|(m, _)| *m).collect()
    }

    pub fn get(&self, mode: usize, axis: Axis) -> Result<&LinearOperatorExpr> {
        self.outputs
            .get(&mode)
            .map(|(_, e)| &e[axis.offset()])
            .ok_or_else(|| domain(format!("mode {mode} is not an output of this table")))
    }

    /// Mutable access, e.g. to build corrupted tables for negative tests.
    pub fn get_mut(&mut self, mode: usize, axis: Axis) -> Result<&mut LinearOperatorExpr> {
        self.outputs
            .get_mut(&mode)
            .map(|(_, e)| &mut e[axis.offset()])
            .ok_or_else(|| domain(format!("mode {mode} is not an output of this table")))
    }

    fn exprs(&self) -> Vec<(ModeLabel, Axis, &LinearOperatorExpr)> {
        self.outputs
            .values()
            .flat_map(|(m, e)| [(*m, Axis::X, &e[0]), (*m, Axis::P, &e[1])])
            .collect()
    }

    /// Rows: output quadratures in register order; columns: input quadratures.
    pub fn coefficient_matrix(&self) -> DMatrix<f64> {
        let rows = self.exprs();
        let cols: Vec<(usize, Axis)> = self
            .inputs
            .iter()
            .flat_map(|m| [(m.index, Axis::X), (m.index, Axis::P)])
            .collect();
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
            rows[i].2.coefficient(cols[j].0, cols[j].1).to_f64()
        })
    }

    pub fn constants(&self) -> Vec<f64> {
        self.exprs().iter().map(|(_, _, e)| e.constant.to_f64()).collect()
    }

    fn names(&self) -> BTreeMap<usize, String> {
        self.inputs.iter().map(|m| (m.index, m.name())).collect()
    }

    fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        let need = gate.modes();
        for (i, m) in need.iter().enumerate() {
            if !self.outputs.contains_key(&m.index) {
                return Err(domain(format!("gate acts on mode {} which is not in the register", m)));
            }
            if need[..i].iter().any(|o| o.index == m.index) {
                return Err(domain(format!("gate uses mode {} twice", m)));
            }
        }
        let cur = |t: &Self, m: &ModeLabel, a: Axis| t.outputs[&m.index].1[a.offset()].clone();
        let set = |t: &mut Self, m: &ModeLabel, a: Axis, e: LinearOperatorExpr| {
            t.outputs.get_mut(&m.index).expect("checked above").1[a.offset()] = e;
        };
        match gate {
            Gate::QndXp {
                control,
                target,
                kappa,
            } => {
                let (xc, pc) = (cur(self, control, Axis::X), cur(self, control, Axis::P));
                let (xt, pt) = (cur(self, target, Axis::X), cur(self, target, Axis::P));
                set(self, target, Axis::X, xt.plus_scaled(&xc, kappa));
                set(self, control, Axis::P, pc.plus_scaled(&pt, &-kappa));
            }
            Gate::QndPp {
                control,
                target,
                kappa,
            } => {
                let (xc, pc) = (cur(self, control, Axis::X), cur(self, control, Axis::P));
                let (xt, pt) = (cur(self, target, Axis::X), cur(self, target, Axis::P));
                set(self, control, Axis::X, xc.plus_scaled(&pt, kappa));
                set(self, target, Axis::X, xt.plus_scaled(&pc, kappa));
            }
            Gate::Rotation {
                mode,
                quarter_turns,
            } => {
                let (x, p) = (cur(self, mode, Axis::X), cur(self, mode, Axis::P));
                let minus = Surd::integer(-1);
                let (nx, np) = match quarter_turns.rem_euclid(4) {
                    0 => (x, p),
                    1 => (p, x.scaled(&minus)),
                    2 => (x.scaled(&minus), p.scaled(&minus)),
                    _ => (p.scaled(&minus), x),
                };
                set(self, mode, Axis::X, nx);
                set(self, mode, Axis::P, np);
            }
            Gate::BeamSplitter { mode1, mode2 } => {
                let h = Surd::inv_sqrt2();
                for axis in [Axis::X, Axis::P] {
                    let (a, b) = (cur(self, mode1, axis), cur(self, mode2, axis));
                    set(self, mode1, axis, a.plus_scaled(&b, &Surd::integer(-1)).scaled(&h));
                    set(self, mode2, axis, a.plus(&b).scaled(&h));
                }
            }
            Gate::Squeezer { mode, factor } => {
                if factor.signum() <= 0 {
                    return Err(domain("squeezing factor must be positive"));
                }
                let (x, p) = (cur(self, mode, Axis::X), cur(self, mode, Axis::P));
                set(self, mode, Axis::X, x.scaled(factor));
                set(self, mode, Axis::P, p.scaled(&factor.recip()?));
            }
            Gate::Displace { mode, dx, dp } => {
                let (x, p) = (cur(self, mode, Axis::X), cur(self, mode, Axis::P));
                set(self, mode, Axis::X, x.plus_constant(dx));
                set(self, mode, Axis::P, p.plus_constant(dp));
            }
        }
        Ok(())
    }

    fn measure_feed(&mut self, mode: ModeLabel, axis: Axis, gains: &[(ModeLabel, Axis, Surd)]) -> Result<()> {
        let measured = self.get(mode.index, axis)?.clone();
        for (target, t_axis, g) in gains {
            if target.index == mode.index {
                return Err(domain(format!("feedback targets the measured mode {mode}")));
            }
            let e = self.get(target.index, *t_axis)?.plus_scaled(&measured, g);
            *self.get_mut(target.index, *t_axis)? = e;
        }
        self.outputs.remove(&mode.index);
        Ok(())
    }
}

impl fmt::Display for OperatorTable {
    /// One line per output quadrature, e.g. `x_A_out = x_L_in + x_A_in`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = self.names();
        for (m, axis, e) in self.exprs() {
            writeln!(f, "{}_{}_out = {}", axis.symbol(), m.name(), e.render(&names))?;
        }
        Ok(())
    }
}

/// One element of a circuit given to [`propagate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CircuitStep {
    Gate(Gate),
    /// Ideal measurement of `axis` of `mode` followed by displacements
    /// `target += gain · outcome`; represented by substituting the measured
    /// operator. The measured mode leaves the register.
    MeasureFeed {
        mode: ModeLabel,
        axis: Axis,
        gains: Vec<(ModeLabel, Axis, Surd)>,
    },
}

impl From<Gate> for CircuitStep {
    fn from(g: Gate) -> Self {
        CircuitStep::Gate(g)
    }
}

/// Propagates the input quadratures of `inputs` through `circuit`.
pub fn propagate(inputs: &[ModeLabel], circuit: &[CircuitStep]) -> Result<OperatorTable> {
    let mut table = OperatorTable::identity(inputs)?;
    for step in circuit {
        match step {
            CircuitStep::Gate(g) => table.apply_gate(g)?,
            CircuitStep::MeasureFeed { mode, axis, gains } => table.measure_feed(*mode, *axis, gains)?,
        }
    }
    Ok(table)
}

/// Parses one descriptor per line (see [`Gate::parse`]); blank lines and `#` comments skipped.
pub fn parse_circuit(text: &str, register: &[ModeLabel]) -> Result<Vec<CircuitStep>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| Gate::parse(l, register).map(CircuitStep::Gate))
        .collect()
}

/// A pair of outputs whose commutator is wrong.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommutatorViolation {
    pub left: String,
    pub right: String,
    /// Expected `[left, right]/i`.
    pub expected: Surd,
    pub found: Surd,
}

impl fmt::Display for CommutatorViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}] = {}·i, expected {}·i",
            self.left, self.right, self.found, self.expected
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommutatorReport {
    pub violations: Vec<CommutatorViolation>,
}

impl CommutatorReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `[r_i, r_j] = i Ω_ij` exactly for all pairs of output quadratures.
pub fn check_commutators(t: &OperatorTable) -> CommutatorReport {
    let rows = t.exprs();
    let mut violations = Vec::new();
    for (i, (mi, ai, ei)) in rows.iter().enumerate() {
        for (mj, aj, ej) in rows.iter().skip(i + 1) {
            let expected = if mi.index == mj.index && *ai == Axis::X && *aj == Axis::P {
                Surd::one()
            } else {
                Surd::zero()
            };
            let found = ei.commutator(ej);
            if found != expected {
                violations.push(CommutatorViolation {
                    left: format!("{}_{}_out", ai.symbol(), mi.name()),
                    right: format!("{}_{}_out", aj.symbol(), mj.name()),
                    expected,
                    found,
                });
            }
        }
    }
    CommutatorReport { violations }
}

/// Variance of one output quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputVariance {
    pub mode: ModeLabel,
    pub axis: Axis,
    pub variance: f64,
}

/// `Var(out) = Σ coeff² Var(in)` for uncorrelated inputs.
pub fn added_noise_variances(
    t: &OperatorTable,
    input_variances: &BTreeMap<(usize, Axis), f64>,
) -> Result<Vec<OutputVariance>> {
    if let Some((k, v)) = input_variances.iter().find(|(_, v)| !(**v > 0.0)) {
        return Err(domain(format!("input variance of {:?} must be positive, got {v}", k)));
    }
    t.exprs()
        .into_iter()
        .map(|(mode, axis, e)| {
            let variance = e
                .terms()
                .map(|(key, c)| {
                    let v = input_variances.get(key).ok_or_else(|| {
                        Error::Domain(format!(
                            "no variance given for {}_{}_in",
                            key.1.symbol(),
                            key.0
                        ))
                    })?;
                    Ok(c.to_f64().powi(2) * v)
                })
                .sum::<Result<f64>>()?;
            Ok(OutputVariance { mode, axis, variance })
        })
        .collect()
}

/// Variance `1/2` on every input quadrature.
pub fn vacuum_variances(inputs: &[ModeLabel]) -> BTreeMap<(usize, Axis), f64> {
    inputs
        .iter()
        .flat_map(|m| [((m.index, Axis::X), 0.5), ((m.index, Axis::P), 0.5)])
        .collect()
}
