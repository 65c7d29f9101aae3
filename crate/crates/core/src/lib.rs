//! Periodic steady states, Floquet decompositions, and limit-cycle
//! symmetry/orthogonality measures for autonomous ODE oscillators.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`ode`] — adaptive Dormand–Prince 5(4) integration with dense output,
//!    variational (tangent) integration, and a finite-difference flow
//!    Jacobian used as an independent cross-check.
//! 2. [`pss`] — transient settling onto the limit cycle, period detection on
//!    a Poincaré section, and Newton shooting for the periodic orbit.
//! 3. [`floquet`] — monodromy matrix, multipliers/exponents, and the mode and
//!    dual-mode trajectories along the cycle.
//! 4. [`measures`] — the steady-state symmetry measure Λ and the Floquet
//!    orthogonality measure Υ with its pairwise angle table.
//!
//! [`sweep`] and [`search`] drive the pipeline over parameter grids (with CSV
//! friendly tables and Pearson correlation of the dB measures) and run a
//! derivative-free Λ-minimization to locate symmetry points.

pub mod error;
pub mod floquet;
pub mod measures;
pub mod models;
pub mod ode;
pub mod pipeline;
pub mod pss;
pub mod search;
pub mod sweep;

mod linalg;

pub use error::Error;
pub use floquet::FloquetDecomposition;
pub use measures::MeasurePair;
pub use models::Model;
pub use ode::{Tolerances, Trajectory, VectorField};
pub use pipeline::{Analysis, PipelineConfig};
pub use pss::PeriodicOrbit;
pub use search::SearchResult;
pub use sweep::SweepTable;

/// Result alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
