//! Norm minimization over products of normed spaces.

// Negated comparisons are the NaN-rejecting checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle;
pub mod certificate;
pub mod cli;
pub mod error;
pub mod ground;
pub mod lp;
mod parallel;
pub mod problem;
pub mod render;
pub mod product;
pub mod psi;
pub mod solution_set;
pub mod solver;
pub mod vector;

pub use certificate::{Certificate, CertificateReport, Recovery, Theorem};
pub use error::{Error, Result};
pub use ground::{AlignmentSet, GroundNorm};
pub use problem::{ProblemInstance, SolveBound, StrictnessClass};
pub use product::{ProductNorm, ProductVector};
pub use psi::{PsiGenerator, SimplexPoint, ValidationReport};
pub use solution_set::{SampleBox, SolutionSetDescription, SolutionSetKind};
pub use solver::{SolveResult, SolverConfig, StepRule};
pub use vector::Vector;
