//! Laplacian spectra and network coherence of noisy consensus on
//! self-similar fractal graphs.
//!
//! Coherence is computed by several independent routes (dense eigensolve,
//! exact generation recursions, Lyapunov solves and stochastic simulation)
//! so each can check the others.

pub mod consensus;
pub mod error;
pub mod generators;
pub mod graph;
pub mod metrics;
pub mod report;
pub mod scaling;
pub mod spectral;
pub mod tree_recursion;
pub mod truncpoly;
pub mod verify;
pub mod vicsek;

pub use consensus::{LtiConsensusSystem, Order, SimConfig, SimEstimate};
pub use error::{Error, Result};
pub use generators::{Caps, Family, FamilySpec};
pub use graph::{Graph, Laplacian};
pub use report::{CoherenceReport, OrderSelection, Route};
pub use spectral::SpectrumSummary;
