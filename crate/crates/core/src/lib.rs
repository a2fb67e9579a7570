//! Pluripotential solutions of the parabolic complex Monge-Ampère flow
//!
//! ```text
//!     dt ∧ (dd^c u)^n = e^{∂_t u + F(t, z, u)} g(z) dt ∧ dV
//! ```
//!
//! on the unit ball of ℂ^n (n = 1, 2), computed with a monotone
//! finite-difference scheme and checked against the explicit barriers,
//! time-regularity constants and structural transforms that control the
//! Perron envelope of subsolutions.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, scenario
//! parsing and the command line live in the `pluriflow` crate.
//!
//! Module map:
//!
//! * [`domain`]: the ball as a masked Cartesian lattice with Shortley-Weller
//!   boundary hits, plus the time lattice.
//! * [`potentials`]: grid functions and the slice-level checks (discrete
//!   plurisubharmonicity, time Lipschitz/semi-concavity estimators, the
//!   approximate sub-mean inequality and the L1 slice bound).
//! * [`ma_ops`]: the `Δ_A` family, the dictionary minimum approximating
//!   `det(∂∂̄u)^{1/n}`, and the nonlinear Dirichlet solver.
//! * [`flow`]: problem data, the constants ledger, barriers, implicit time
//!   stepping and the residual/comparison/boundary reports.
//! * [`transforms`]: time scaling, semi-concavity averaging, Walsh
//!   translation and Möbius averaging.
#![no_std]

extern crate alloc;

mod error;
pub mod hermitian;

pub mod domain;
pub mod flow;
pub mod ma_ops;
pub mod potentials;
pub mod transforms;

pub use error::{Error, Result};

pub use domain::{BallDomain, BoundaryHit, NodeKind, SpaceGrid, TimeGrid};
pub use flow::{
    BoundaryReport, ComparisonReport, ConstantsLedger, Density, FSpec, FlowProblem, FlowSolution,
    SubsolutionReport, SupersolutionReport,
};
pub use hermitian::Hermitian;
pub use ma_ops::{HermitianDictionary, MaField, MaOperator};
pub use potentials::{BoundaryData, GridFunction, Slice};
