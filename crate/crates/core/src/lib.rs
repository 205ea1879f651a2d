//! Spectral-Galerkin laboratory for `-Δu = f(u)` with homogeneous Neumann
//! boundary conditions on intervals and rectangles.
//!
//! The energy `J(u) = ½∫|∇u|² - ∫F(u)` is discretized in the cosine eigenbasis.
//! Critical points come from constant roots, mountain passes of truncated
//! problems, a Lyapunov-Schmidt reduction and multistart search; a degree
//! ledger checks whether the solutions found account for the global degree.

pub mod config;
pub mod energy;
pub mod exec;
pub mod field;
pub mod ledger;
pub mod nonlinearity;
pub mod pipeline;
pub mod reduction;
pub mod report;
pub mod solvers;
pub mod spectrum;

pub use config::RunConfig;
pub use energy::{EnergyFunctional, HessianSpectrum};
pub use exec::Execution;
pub use field::SpectralField;
pub use nonlinearity::{NonlinearityConfig, NonlinearitySpec, TruncationKind};
pub use pipeline::{run_pipeline, PipelineError, RunReport};
pub use spectrum::{build_spectrum, Domain, DomainKind, Spectrum};
