//! Critical point search: constants, descent, mountain pass, Newton
//! refinement, multistart exploration and the homotopy a priori bound.

mod homotopy;
mod minimize;
mod mountain_pass;
mod multistart;
pub(crate) use multistart::multistart_budgeted;
mod newton;

pub use homotopy::{default_search_radius, homotopy_bound, HomotopyBound, HomotopyStage};
pub use minimize::{minimize, minimize_traced, MinimizeTrace};
pub use mountain_pass::{mountain_pass, mountain_pass_with_diagnostics, MountainPassDiagnostics};
pub use multistart::{dedup_records, multistart, multistart_from, random_starts, sort_records};
pub use newton::refine_critical;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::EnergyFunctional;
use crate::exec::Execution;
use crate::field::SpectralField;
use crate::nonlinearity::{NonlinearityError, TruncationKind};
use crate::spectrum::SpectrumError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("no convergence after {iters} iterations (residual {residual:.3e})")]
    MaxItersExceeded { iters: usize, residual: f64 },
    #[error("iterate norm {norm:.3e} exceeded the a priori bound {bound:.3e}")]
    DivergingIterates { norm: f64, bound: f64 },
    #[error("Newton refinement stalled at residual {residual:.3e}")]
    Stalled { residual: f64 },
    #[error("mountain pass collapsed onto an endpoint: {0}")]
    PathCollapse(String),
    #[error("non-finite iterate")]
    NonFinite,
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Nonlinearity(#[from] NonlinearityError),
}

fn default_grad_tol() -> f64 {
    1e-9
}
fn default_max_iters() -> usize {
    500
}
fn default_path_nodes() -> usize {
    41
}
fn default_path_sweeps() -> usize {
    3000
}
fn default_path_bump() -> f64 {
    0.5
}
fn default_mp_offset() -> f64 {
    5.0
}
fn default_dedup_radius() -> f64 {
    1e-4
}
fn default_multistart_budget() -> usize {
    200
}
fn default_batch_size() -> usize {
    50
}
fn default_seed() -> u64 {
    7
}
fn default_degeneracy_tol() -> f64 {
    1e-7
}
fn default_safety_factor() -> f64 {
    2.0
}
fn default_lambda_grid() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 1.0]
}
fn default_homotopy_budget() -> usize {
    60
}
fn default_max_step() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// H1 residual accepted as a critical point.
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_path_nodes")]
    pub path_nodes: usize,
    /// Sweep cap for the string relaxation of the mountain pass path.
    #[serde(default = "default_path_sweeps")]
    pub path_sweeps: usize,
    /// Initial path displacement along the first nonconstant mode.
    #[serde(default = "default_path_bump")]
    pub path_bump: f64,
    /// Distance of the low-energy endpoint from a one-sided truncation anchor.
    #[serde(default = "default_mp_offset")]
    pub mp_offset: f64,
    #[serde(default = "default_dedup_radius")]
    pub dedup_radius: f64,
    #[serde(default = "default_multistart_budget")]
    pub multistart_budget: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_seed")]
    pub rng_seed: u64,
    #[serde(default = "default_degeneracy_tol")]
    pub degeneracy_tol: f64,
    /// Norm beyond which iterates are declared divergent.
    #[serde(default)]
    pub divergence_bound: Option<f64>,
    #[serde(default = "default_safety_factor")]
    pub safety_factor: f64,
    #[serde(default = "default_lambda_grid")]
    pub lambda_grid: Vec<f64>,
    #[serde(default = "default_homotopy_budget")]
    pub homotopy_budget: usize,
    /// Radius of the ball random starts are drawn from, when no bound is known yet.
    #[serde(default)]
    pub search_radius: Option<f64>,
    /// Largest H1 step a Newton or descent iteration may take.
    #[serde(default = "default_max_step")]
    pub max_step: f64,
    #[serde(default)]
    pub execution: Execution,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grad_tol: default_grad_tol(),
            max_iters: default_max_iters(),
            path_nodes: default_path_nodes(),
            path_sweeps: default_path_sweeps(),
            path_bump: default_path_bump(),
            mp_offset: default_mp_offset(),
            dedup_radius: default_dedup_radius(),
            multistart_budget: default_multistart_budget(),
            batch_size: default_batch_size(),
            rng_seed: default_seed(),
            degeneracy_tol: default_degeneracy_tol(),
            divergence_bound: None,
            safety_factor: default_safety_factor(),
            lambda_grid: default_lambda_grid(),
            homotopy_budget: default_homotopy_budget(),
            search_radius: None,
            max_step: default_max_step(),
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid solver config: {0}")]
pub struct InvalidSolverConfig(pub String);

impl SolverConfig {
    pub fn validate(&self) -> Result<(), InvalidSolverConfig> {
        let positive = [
            ("grad_tol", self.grad_tol),
            ("dedup_radius", self.dedup_radius),
            ("degeneracy_tol", self.degeneracy_tol),
            ("safety_factor", self.safety_factor),
            ("max_step", self.max_step),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(InvalidSolverConfig(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.path_nodes < 5 {
            return Err(InvalidSolverConfig(format!(
                "path_nodes must be >= 5, got {}",
                self.path_nodes
            )));
        }
        if self.batch_size == 0 {
            return Err(InvalidSolverConfig("batch_size must be positive".into()));
        }
        if self.lambda_grid.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(InvalidSolverConfig(
                "lambda_grid entries must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn divergence_limit(&self) -> f64 {
        self.divergence_bound.unwrap_or(1e8)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Constant,
    MpType,
    ReductionMax,
    Minimizer,
    Other,
}

/// Which stage produced a record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum Provenance {
    Constant { value: f64 },
    MountainPass { truncation: Option<TruncationKind> },
    Reduction,
    Multistart { batch: usize },
    Minimize,
    Homotopy { lambda: f64 },
}

impl Provenance {
    pub fn truncation(&self) -> Option<TruncationKind> {
        match self {
            Provenance::MountainPass { truncation } => *truncation,
            _ => None,
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Constant { value } => write!(f, "constant({value})"),
            Provenance::MountainPass { truncation: None } => write!(f, "mountain_pass"),
            Provenance::MountainPass {
                truncation: Some(kind),
            } => match kind {
                TruncationKind::Below { alpha } => write!(f, "mountain_pass(below {alpha})"),
                TruncationKind::Above { alpha } => write!(f, "mountain_pass(above {alpha})"),
                TruncationKind::Interval { alpha, beta } => {
                    write!(f, "mountain_pass(interval {alpha} {beta})")
                }
                TruncationKind::Homotopy { lambda } => {
                    write!(f, "mountain_pass(homotopy {lambda})")
                }
            },
            Provenance::Reduction => write!(f, "reduction_max"),
            Provenance::Multistart { batch } => write!(f, "multistart({batch})"),
            Provenance::Minimize => write!(f, "minimize"),
            Provenance::Homotopy { lambda } => write!(f, "homotopy({lambda})"),
        }
    }
}

/// A converged critical point and everything measured about it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPointRecord {
    pub u: SpectralField,
    pub energy: f64,
    pub residual: f64,
    /// Ascending eigenvalues of the H1 Hessian.
    pub hessian_eigs: Vec<f64>,
    pub morse_index: usize,
    pub degenerate: bool,
    pub classification: Classification,
    pub provenance: Provenance,
    /// (min u, max u) over the quadrature grid.
    pub range: (f64, f64),
    pub h1_norm: f64,
    pub iterations: usize,
    /// Principal Hessian eigenpair simple and sign-definite, when checked.
    #[serde(default)]
    pub principal_simple_sign_definite: Option<bool>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl CriticalPointRecord {
    /// Measures `u` under `energy`.
    pub fn measure(
        energy: &EnergyFunctional<'_>,
        u: SpectralField,
        classification: Classification,
        provenance: Provenance,
        degeneracy_tol: f64,
    ) -> Self {
        let spectrum = energy.spectrum();
        let hs = energy.hessian_spectrum(&u);
        Self {
            energy: energy.value(&u),
            residual: energy.residual(&u),
            morse_index: hs.morse_index(degeneracy_tol),
            degenerate: hs.min_abs() < degeneracy_tol,
            hessian_eigs: hs.eigenvalues.iter().copied().collect(),
            classification,
            provenance,
            range: spectrum.range(&u),
            h1_norm: spectrum.h1_norm(&u),
            iterations: 0,
            principal_simple_sign_definite: None,
            warnings: Vec::new(),
            u,
        }
    }

    pub fn is_constant(&self, tol: f64) -> bool {
        self.range.1 - self.range.0 <= tol
    }
}

/// One record per prescribed zero of `f`; constants solve the problem exactly.
pub fn find_constants(
    energy: &EnergyFunctional<'_>,
    cfg: &SolverConfig,
) -> Vec<CriticalPointRecord> {
    energy
        .nonlinearity()
        .zeros()
        .iter()
        .map(|z| {
            CriticalPointRecord::measure(
                energy,
                energy.spectrum().constant_field(z.t),
                Classification::Constant,
                Provenance::Constant { value: z.t },
                cfg.degeneracy_tol,
            )
        })
        .collect()
}

pub(crate) fn check_bound(
    energy: &EnergyFunctional<'_>,
    u: &SpectralField,
    cfg: &SolverConfig,
) -> Result<(), SolverError> {
    if !u.is_finite() {
        return Err(SolverError::NonFinite);
    }
    let norm = energy.spectrum().h1_norm(u);
    let bound = cfg.divergence_limit();
    if norm > bound {
        return Err(SolverError::DivergingIterates { norm, bound });
    }
    Ok(())
}
