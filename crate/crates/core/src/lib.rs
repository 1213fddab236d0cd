//! Geometry of flat surfaces with distributed edge dislocations and their
//! continuum limit.
//!
//! The crate builds dislocated surfaces out of n² flat building blocks,
//! each a pair of glued hexagons carrying one small defect segment (a
//! cone/anti-cone dipole), measures their intrinsic geodesic geometry, and
//! compares them quantitatively with an annular-sector continuum limit
//! whose connection carries torsion. The comparison runs
//! through explicit cell maps, Lᵖ error integrals, net-distortion bounds,
//! and convergence-rate fits.
//!
//! Modules, bottom-up:
//! - [`geom`]: chart-tagged planar primitives and predicates.
//! - [`sector`]: the continuum sector — analytic distances, parallel
//!   transport, torsion, Burgers integrals.
//! - [`block`]: one building block — construction, exact geodesic distance,
//!   holonomy of chart-transition loops.
//! - [`surface`]: the n×n assembly with inter-block gluings and the corner
//!   net.
//! - [`mesh`]: Steiner-refined geodesic meshes and Dijkstra distances, the
//!   numeric oracle for every exact distance here.
//! - [`transfer`]: the sector-to-surface cell maps, pullbacks, Lᵖ errors,
//!   and per-cell distortion.
//! - [`converge`]: sweep orchestration, rate fits, CSV/JSON reports.

pub mod block;
pub mod converge;
pub mod error;
pub(crate) mod exec;
pub mod geom;
pub mod mesh;
pub mod sector;
pub mod surface;
pub mod transfer;

pub use error::{Error, Result};
