//! Solvability, operator model and canonical solutions for the two-index
//! moment problem on the strip `ℝ × [-π, π)`:
//! `s_{m,n} = ∫ x^m e^{inφ} dμ(x, φ)`.
//!
//! The pipeline runs moments → Gram factorization → shifts `A`, `B` and
//! conjugation `J` → commuting self-adjoint extensions → joint spectrum →
//! atomic solution measure. [`resolvent`] probes generalized resolvents.

pub mod error;
pub mod extension;
pub mod gns;
pub mod io;
pub mod linalg;
pub mod moments;
pub mod operators;
pub mod pipeline;
pub mod resolvent;
pub mod spectral;

pub use error::{Error, Result};
pub use extension::{CommutantParameter, ExtensionContext, ParameterSource};
pub use gns::{GnsSpace, IndexWindow, PositivityReport};
pub use linalg::{CMat, CVec, C64};
pub use moments::{compute_moments, Atom, AtomicMeasure, MomentIndex, MomentTable};
pub use operators::OperatorSystem;
pub use pipeline::{Family, Pipeline, Solution, SolveOptions};
pub use resolvent::{ContractionParameter, IndexSplit};
pub use spectral::{verify_solution, SolutionMeasure, VerificationReport};
