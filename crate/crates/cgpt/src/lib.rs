//! Contracted generalized polarization tensors (CGPTs) of concentric
//! multilayer conductivity structures, and the design of GPT-vanishing
//! (near-cloaking) coatings.
//!
//! A piecewise-homogeneous inclusion made of `N` concentric coatings around
//! a core perturbs a background potential; the perturbation is encoded, mode
//! by mode, in the tensors `M_n`. This crate evaluates those tensors through
//! four mutually independent routes (transfer product, subset polynomials,
//! dense matrix formula, direct transmission solve), differentiates them,
//! and solves the inverse problem: choose the coating contrasts so that
//! `M_1 = ... = M_N = 0`, which makes the far-field perturbation decay like
//! `|x|^{-N-1}` instead of `|x|^{-1}`.
//!
//! Quick tour:
//!
//! ```
//! use cgpt::{LayerStructure, ContrastVector, tensor, solver};
//!
//! // tensor of a coated disk
//! let s = LayerStructure::disk(vec![2.0, 1.0]).unwrap();
//! let eta = ContrastVector::new(vec![0.5, -0.5]).unwrap();
//! let m1 = tensor::cgpt(&s, &eta, 1).unwrap();
//! assert!((m1 - 2.0 * std::f64::consts::PI * 1.6).abs() < 1e-12);
//!
//! // design a 4-coating near-cloak over an insulating core
//! let s = LayerStructure::disk(cgpt::structure::equidistant_radii(2.0, 1.0, 4).unwrap()).unwrap();
//! let report = solver::solve_vanishing(
//!     &s,
//!     solver::FixedCore::Eta(-1.0),
//!     &solver::SolverConfig::default(),
//! ).unwrap();
//! assert!(report.converged && report.cross_check.verified);
//! ```

pub mod error;
pub mod farfield;
pub mod jacobian;
pub mod proportional;
pub mod solver;
pub mod structure;
pub mod tensor;
pub mod vandermonde;

pub use error::{CgptError, Result};
pub use solver::{FixedCore, SolveReport, SolverConfig};
pub use structure::{ContrastVector, Dimension, LayerStructure};
pub use tensor::{CgptVector, FieldCoefficients, Route};
