//! Gaussian phase-space simulator for cloning coherent states of light into
//! atomic quantum memories.
//!
//! The crate models light and collective atomic spins as bosonic modes with
//! quadratures `[x, p] = i` (vacuum variance `1/2`) and simulates the
//! cloning networks built from QND light–atom couplings:
//!
//! * a two-pass network of four CV C-NOT gates,
//! * the single-pass version where the second pass is replaced by a
//!   homodyne measurement of the light and feedback onto the atoms,
//! * a variant with one atomic clone and one clone on a light beam,
//! * asymmetric cloning with squeezed atomic ancillas, including their
//!   preparation by QND measurement.
//!
//! [`oracle`] propagates the same circuits symbolically in exact arithmetic
//! and is used to cross-check the numeric engine.

pub mod cli;
pub mod error;
pub mod exact;
pub mod feasibility;
pub mod measurement;
pub mod oracle;
pub mod phase_space;
pub mod protocols;
pub mod symplectic;

pub use error::{Error, Result};
pub use exact::Surd;
pub use measurement::{FeedbackRule, HomodyneResult, OutcomeSource};
pub use oracle::{CircuitStep, LinearOperatorExpr, OperatorTable};
pub use phase_space::{Axis, GaussianState, ModeLabel, ModeTag};
pub use symplectic::{Gate, SymplecticOp};
