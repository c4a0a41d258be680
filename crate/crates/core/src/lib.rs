//! Quantum-classical Liouville dynamics.
//!
//! The crate evaluates quasi-Lie brackets of operator-valued phase-space
//! fields, builds adiabatic frames for a small model catalog, and propagates
//! surface-hopping trajectories over canonical, Langevin, Nosé–Hoover,
//! Nosé–Hoover-chain and classical-spin baths. Ensembles of trajectories are
//! reduced to time series of observable means with block standard errors.
//!
//! The most common types are re-exported at the crate root.

pub mod adiabatic;
pub mod baths;
pub mod bracket;
pub mod ensemble;
pub mod error;
pub mod fields;
pub mod linalg;
pub mod models;
pub mod rng;
pub mod sampling;
pub mod spin;
pub mod sstp;

pub use adiabatic::{build_frame, build_spin_frame, AdiabaticFrame, SpinFrame};
pub use baths::LangevinParams;
pub use bracket::{
    jacobi_residual, poisson_bracket, quasi_lie_bracket, BracketResult, FnField, OperatorField, PolyField,
    StructureKind, StructureMatrix,
};
pub use ensemble::{
    estimate, run_ensemble, EnsembleEstimate, EnsembleSpec, EstimateAccumulator, Propagator, TrajectoryRecord,
};
pub use error::{Error, Result};
pub use fields::{parse_field, Observable};
pub use linalg::{CMatrix, C64};
pub use models::{Model, NhcExtension, NoseExtension, SpinBathModel, Thermostat, TwoLevelHarmonic, TwoLevelQuartic};
pub use sampling::{InitialCondition, PairSampling};
pub use spin::SpinState;
pub use sstp::{FrustratedPolicy, StepConfig, TrajectoryState};
