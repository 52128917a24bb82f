//! Distance from bipartite unitary gates to the set of local product
//! unitaries, and maximally entangled state pairs connected by a gate.
//!
//! The crate is organized bottom-up:
//!
//! - [`linalg`]: realignment, vectorization, partial traces, polar factors.
//! - [`gates`]: gate families and seeded ensembles.
//! - [`measures`]: operator Schmidt decomposition, distance bounds,
//!   entangling power, entropies.
//! - [`kd`]: the alternating polar-projection solver and closed forms.
//! - [`ubb`]: the Bell-to-Bell map and its monitors.
//! - [`experiments`]: the pipelines behind the `gatedist` CLI.

pub mod error;
pub mod experiments;
pub mod gates;
pub mod io;
pub mod kd;
pub mod linalg;
pub mod measures;
pub mod ubb;

pub use error::{Error, Result};
pub use gates::{CanonicalParams, Family, GateFamilySpec};
pub use kd::{kd_alternating, KdOptions, KdResult};
pub use linalg::{BipartiteGate, ComplexMatrix, C64};
pub use measures::{BoundsReport, SchmidtData};
pub use ubb::{UbbOptions, UbbTrace};
