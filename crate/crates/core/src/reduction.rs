//! Lyapunov-Schmidt reduction onto the low modes.
//!
//! With `X` spanned by the eigenfunctions below `f'(inf)` and `Y` its
//! complement, `y -> J(x + y)` is strongly convex on `Y` whenever
//! `sup f' < lambda_min(Y)`. Its unique minimizer `psi(x)` defines the reduced
//! functional `J~(x) = J(x + psi(x))` on the `k`-dimensional space `X`, whose
//! critical points are exactly the critical points of `J`.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::EnergyFunctional;
use crate::exec;
use crate::field::SpectralField;
use crate::solvers::{
    refine_critical, Classification, CriticalPointRecord, Provenance, SolverConfig, SolverError,
};
use crate::spectrum::{SpectrumError, Splitting};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReductionError {
    #[error(
        "reduction inapplicable: gamma = {gamma} is not below lambda_min(Y) = {lambda_min_y:?}"
    )]
    Inapplicable {
        gamma: f64,
        lambda_min_y: Option<f64>,
    },
    #[error("monotonicity on Y violated: observed modulus {observed:.6e} < {modulus:.6e}")]
    ModulusViolated { observed: f64, modulus: f64 },
    #[error("inner minimization over Y did not converge in {iters} iterations (residual {residual:.3e})")]
    InnerNotConverged { iters: usize, residual: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

fn default_inner_tol() -> f64 {
    1e-12
}
fn default_newton_switch() -> f64 {
    1e-4
}
fn default_max_inner_iters() -> usize {
    5000
}
fn default_max_grid_seeds() -> usize {
    4096
}
fn default_ascent_tol() -> f64 {
    1e-10
}
fn default_max_ascent_iters() -> usize {
    500
}
fn default_random_seeds() -> usize {
    256
}
fn default_max_ascents() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionConfig {
    /// H1 norm of the Y-part of the gradient accepted by the inner solve.
    #[serde(default = "default_inner_tol")]
    pub inner_tol: f64,
    /// Inner residual below which Newton replaces gradient steps.
    #[serde(default = "default_newton_switch")]
    pub newton_switch: f64,
    #[serde(default = "default_max_inner_iters")]
    pub max_inner_iters: usize,
    /// Half-width of the seeding grid in X coefficients; defaults to the homotopy radius.
    #[serde(default)]
    pub grid_radius: Option<f64>,
    #[serde(default = "default_max_grid_seeds")]
    pub max_grid_seeds: usize,
    #[serde(default = "default_ascent_tol")]
    pub ascent_tol: f64,
    #[serde(default = "default_max_ascent_iters")]
    pub max_ascent_iters: usize,
    /// Random seeds used instead of a grid when `k > 4`.
    #[serde(default = "default_random_seeds")]
    pub random_seeds: usize,
    /// Grid local maxima ascended from, best first.
    #[serde(default = "default_max_ascents")]
    pub max_ascents: usize,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self {
            inner_tol: default_inner_tol(),
            newton_switch: default_newton_switch(),
            max_inner_iters: default_max_inner_iters(),
            grid_radius: None,
            max_grid_seeds: default_max_grid_seeds(),
            ascent_tol: default_ascent_tol(),
            max_ascent_iters: default_max_ascent_iters(),
            random_seeds: default_random_seeds(),
            max_ascents: default_max_ascents(),
        }
    }
}

/// `psi(x)` together with the reduced value and the X-gradient there.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedPoint {
    pub y: SpectralField,
    pub value: f64,
    /// `dJ~/dx_i` in X coefficients.
    pub coefficient_gradient: DVector<f64>,
    pub inner_iters: usize,
}

pub struct ReductionContext<'a> {
    energy: &'a EnergyFunctional<'a>,
    split: Splitting,
    modulus: f64,
    lipschitz: f64,
    lambda_min_y: f64,
    cfg: ReductionConfig,
}

impl<'a> ReductionContext<'a> {
    /// Splits at `f'(+inf)` and certifies strong convexity on `Y`.
    pub fn new(
        energy: &'a EnergyFunctional<'a>,
        cfg: ReductionConfig,
    ) -> Result<Self, ReductionError> {
        let spectrum = energy.spectrum();
        let f = energy.nonlinearity();
        let split = spectrum.split(f.slope_plus_inf())?;
        let gamma = f.gamma();
        let lambda_min_y = match split.lambda_min_y(spectrum) {
            Some(l) if gamma < l => l,
            other => {
                return Err(ReductionError::Inapplicable {
                    gamma,
                    lambda_min_y: other,
                })
            }
        };
        // Bounds of (lambda_j - s) / (1 + lambda_j) over Y for s in [inf f', sup f'].
        let ratio = |l: f64, s: f64| (l - s) / (1.0 + l);
        let ys = split.y_indices.iter().map(|&j| spectrum.eigenvalue(j));
        let modulus = ys
            .clone()
            .map(|l| ratio(l, gamma))
            .fold(f64::INFINITY, f64::min);
        let lipschitz = ys
            .map(|l| ratio(l, f.slope_floor()))
            .fold(f64::NEG_INFINITY, f64::max)
            .max(modulus);
        Ok(Self {
            energy,
            split,
            modulus,
            lipschitz,
            lambda_min_y,
            cfg,
        })
    }

    pub fn energy(&self) -> &'a EnergyFunctional<'a> {
        self.energy
    }

    pub fn split(&self) -> &Splitting {
        &self.split
    }

    pub fn k(&self) -> usize {
        self.split.k
    }

    /// Strong monotonicity constant of the gradient on `Y`.
    pub fn modulus(&self) -> f64 {
        self.modulus
    }

    /// Lipschitz constant of the gradient on `Y`.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn lambda_min_y(&self) -> f64 {
        self.lambda_min_y
    }

    pub fn config(&self) -> &ReductionConfig {
        &self.cfg
    }

    /// Full field with X coefficients `xi` (in `x_indices` order).
    pub fn embed(&self, xi: &[f64]) -> SpectralField {
        let mut c = DVector::zeros(self.energy.dim());
        for (&j, &v) in self.split.x_indices.iter().zip(xi) {
            c[j] = v;
        }
        SpectralField::new(c)
    }

    /// X coefficients of `u`.
    pub fn coordinates(&self, u: &SpectralField) -> Vec<f64> {
        self.split
            .x_indices
            .iter()
            .map(|&j| u.coeffs()[j])
            .collect()
    }

    fn y_residual(&self, g: &DVector<f64>, w: &DVector<f64>) -> f64 {
        self.split
            .y_indices
            .iter()
            .map(|&j| g[j] * g[j] / w[j])
            .sum::<f64>()
            .sqrt()
    }

    /// `psi(x)`: the minimizer of `J(x + .)` over `Y`.
    pub fn psi(&self, x: &SpectralField) -> Result<SpectralField, ReductionError> {
        self.solve(x, None).map(|p| p.y)
    }

    /// Reduced value, `psi` and X-gradient at `x`, warm-started from `guess`.
    pub fn solve(
        &self,
        x: &SpectralField,
        guess: Option<&SpectralField>,
    ) -> Result<ReducedPoint, ReductionError> {
        let w = self.energy.spectrum().h1_weights();
        let x = self.split.project_x(x);
        let mut y = match guess {
            Some(g) => self.split.project_y(g),
            None => SpectralField::zeros(x.len()),
        };
        let tau = 2.0 / (self.modulus + self.lipschitz);
        let ys = &self.split.y_indices;
        let mut u = &x + &y;
        let mut g = self.energy.coefficient_gradient(&u);
        let mut res = self.y_residual(&g, &w);
        let mut iters = 0;
        let mut force_gradient = false;
        while res > self.cfg.inner_tol {
            if iters >= self.cfg.max_inner_iters {
                return Err(ReductionError::InnerNotConverged {
                    iters,
                    residual: res,
                });
            }
            iters += 1;
            let mut step = DVector::zeros(x.len());
            let mut newton_ok = false;
            if res < self.cfg.newton_switch && !force_gradient {
                let a = self.energy.second_derivative(&u);
                let ayy = DMatrix::from_fn(ys.len(), ys.len(), |r, c| a[(ys[r], ys[c])]);
                let gy = DVector::from_iterator(ys.len(), ys.iter().map(|&j| g[j]));
                if let Some(ch) = Cholesky::new(ayy) {
                    let d = ch.solve(&gy);
                    for (r, &j) in ys.iter().enumerate() {
                        step[j] = -d[r];
                    }
                    newton_ok = true;
                }
            }
            if !newton_ok {
                for &j in ys {
                    step[j] = -tau * g[j] / w[j];
                }
            }
            let y_new = SpectralField::new(y.coeffs() + &step);
            let u_new = &x + &y_new;
            let g_new = self.energy.coefficient_gradient(&u_new);
            let res_new = self.y_residual(&g_new, &w);
            let dot: f64 = ys.iter().map(|&j| (g_new[j] - g[j]) * step[j]).sum();
            let len2: f64 = ys.iter().map(|&j| w[j] * step[j] * step[j]).sum();
            if dot < self.modulus * len2 - 1e-10 {
                return Err(ReductionError::ModulusViolated {
                    observed: dot / len2,
                    modulus: self.modulus,
                });
            }
            if newton_ok && res_new >= res {
                // Rounding floor reached: the Newton step no longer helps.
                if res <= 1e3 * self.cfg.inner_tol {
                    break;
                }
                force_gradient = true;
                continue;
            }
            force_gradient = false;
            y = y_new;
            u = u_new;
            g = g_new;
            res = res_new;
        }
        let coefficient_gradient =
            DVector::from_iterator(self.split.k, self.split.x_indices.iter().map(|&j| g[j]));
        Ok(ReducedPoint {
            value: self.energy.value(&u),
            y,
            coefficient_gradient,
            inner_iters: iters,
        })
    }

    /// `J~(x) = J(x + psi(x))`.
    pub fn reduced_value(&self, x: &SpectralField) -> Result<f64, ReductionError> {
        self.solve(x, None).map(|p| p.value)
    }

    /// H1 gradient of `J~`: the X-part of `grad J(x + psi(x))`.
    pub fn reduced_gradient(&self, x: &SpectralField) -> Result<SpectralField, ReductionError> {
        let p = self.solve(x, None)?;
        let w = self.energy.spectrum().h1_weights();
        let mut c = DVector::zeros(x.len());
        for (i, &j) in self.split.x_indices.iter().enumerate() {
            c[j] = p.coefficient_gradient[i] / w[j];
        }
        Ok(SpectralField::new(c))
    }

    /// `||psi(P_X u) - P_Y u||_{H1}`; vanishes (up to tolerance) at critical points of `J`.
    pub fn correspondence_defect(&self, u: &SpectralField) -> Result<f64, ReductionError> {
        let y = self.psi(&self.split.project_x(u))?;
        Ok(self
            .energy
            .spectrum()
            .h1_distance(&y, &self.split.project_y(u)))
    }

    fn x_norm(&self, grad: &DVector<f64>) -> f64 {
        let spectrum = self.energy.spectrum();
        self.split
            .x_indices
            .iter()
            .zip(grad.iter())
            .map(|(&j, g)| g * g / (1.0 + spectrum.eigenvalue(j)))
            .sum::<f64>()
            .sqrt()
    }

    /// BFGS ascent of `J~` from `start`, returning the final X coordinates and point.
    fn ascend(&self, start: &[f64]) -> Result<(Vec<f64>, ReducedPoint), ReductionError> {
        let k = self.split.k;
        let spectrum = self.energy.spectrum();
        let metric: Vec<f64> = self
            .split
            .x_indices
            .iter()
            .map(|&j| 1.0 + spectrum.eigenvalue(j))
            .collect();
        let mut xi = DVector::from_column_slice(start);
        let mut p = self.solve(&self.embed(xi.as_slice()), None)?;
        // Inverse Hessian of -J~, started from the inverse H1 metric.
        let mut h = DMatrix::from_fn(k, k, |r, c| if r == c { 1.0 / metric[r] } else { 0.0 });
        for _ in 0..self.cfg.max_ascent_iters {
            if self.x_norm(&p.coefficient_gradient) <= self.cfg.ascent_tol {
                break;
            }
            let g = -&p.coefficient_gradient;
            let mut d = -(&h * &g);
            if g.dot(&d) >= 0.0 {
                h = DMatrix::from_fn(k, k, |r, c| if r == c { 1.0 / metric[r] } else { 0.0 });
                d = -(&h * &g);
            }
            let len = d
                .iter()
                .zip(&metric)
                .map(|(v, m)| m * v * v)
                .sum::<f64>()
                .sqrt();
            if len > 2.0 {
                d *= 2.0 / len;
            }
            let slope = g.dot(&d);
            let mut t = 1.0;
            let mut next = None;
            while t > 1e-12 {
                let trial = &xi + &d * t;
                let q = self.solve(&self.embed(trial.as_slice()), Some(&p.y))?;
                if -q.value <= -p.value + 1e-4 * t * slope {
                    next = Some((trial, q));
                    break;
                }
                t *= 0.5;
            }
            let Some((xi_new, q)) = next else { break };
            let s = &xi_new - &xi;
            let yv = -&q.coefficient_gradient - &g;
            let sy = s.dot(&yv);
            if sy > 1e-14 * s.norm() * yv.norm() {
                let rho = 1.0 / sy;
                let eye = DMatrix::<f64>::identity(k, k);
                let left = &eye - &s * yv.transpose() * rho;
                let right = &eye - &yv * s.transpose() * rho;
                h = &left * &h * &right + &s * s.transpose() * rho;
            }
            xi = xi_new;
            p = q;
        }
        Ok((xi.as_slice().to_vec(), p))
    }
}

/// Result of maximizing the reduced functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionOutcome {
    pub record: CriticalPointRecord,
    /// X coordinates of the maximizer.
    pub x: Vec<f64>,
    pub reduced_value: f64,
    pub grid_points: usize,
    pub grid_radius: f64,
    /// Largest reduced value on the seeding grid (or random seeds).
    pub seed_max: f64,
    /// Largest reduced value on the boundary of the seeding box.
    pub boundary_max: f64,
    pub ascents: usize,
    #[serde(default)]
    pub warnings: Vec<String>,
}

fn seed_grid(k: usize, per_axis: usize, radius: f64) -> Vec<Vec<f64>> {
    let total = per_axis.pow(k as u32);
    let coord = |i: usize| {
        if per_axis == 1 {
            0.0
        } else {
            -radius + 2.0 * radius * i as f64 / (per_axis - 1) as f64
        }
    };
    (0..total)
        .map(|mut flat| {
            (0..k)
                .map(|_| {
                    let i = flat % per_axis;
                    flat /= per_axis;
                    coord(i)
                })
                .collect()
        })
        .collect()
}

/// Global maximizer of `J~` over `X`, lifted to `u = x + psi(x)`.
///
/// Seeds come from a regular grid over `[-R, R]^k` in X coefficients (random
/// points in the same box when `k > 4`) plus the X-parts of the constant
/// solutions; BFGS ascent runs from the best grid local maxima and a Newton
/// polish on the full problem finishes.
pub fn maximize_reduced(
    ctx: &ReductionContext<'_>,
    solver: &SolverConfig,
    radius: f64,
) -> Result<ReductionOutcome, ReductionError> {
    let energy = ctx.energy;
    let spectrum = energy.spectrum();
    let k = ctx.k();
    let r = ctx.cfg.grid_radius.unwrap_or(radius).max(1.0);
    let mut warnings = Vec::new();

    let (seeds, per_axis) = if k <= 4 {
        let mut per_axis = 2 * r.ceil() as usize + 1;
        if per_axis.saturating_pow(k as u32) > ctx.cfg.max_grid_seeds {
            per_axis = (ctx.cfg.max_grid_seeds as f64).powf(1.0 / k as f64).floor() as usize;
            per_axis = per_axis.max(3) - (1 - per_axis.max(3) % 2);
            warnings.push(format!(
                "seeding grid coarsened to {per_axis} points per axis (cap {})",
                ctx.cfg.max_grid_seeds
            ));
        }
        (seed_grid(k, per_axis, r), Some(per_axis))
    } else {
        warnings.push(format!("k = {k} > 4: random seeding instead of a grid"));
        let mut rng = ChaCha8Rng::seed_from_u64(solver.rng_seed);
        let seeds = (0..ctx.cfg.random_seeds)
            .map(|_| (0..k).map(|_| rng.gen_range(-r..=r)).collect())
            .collect();
        (seeds, None)
    };

    let values: Vec<Result<f64, ReductionError>> = exec::map(solver.execution, &seeds, |xi| {
        ctx.reduced_value(&ctx.embed(xi))
    });
    let values: Vec<f64> = values.into_iter().collect::<Result<_, _>>()?;
    let seed_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let on_boundary = |xi: &[f64]| xi.iter().any(|v| (v.abs() - r).abs() < 1e-12);
    let boundary_max = seeds
        .iter()
        .zip(&values)
        .filter(|(xi, _)| on_boundary(xi))
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);

    let mut candidates: Vec<usize> = match per_axis {
        Some(p) => (0..seeds.len())
            .filter(|&i| {
                let mut stride = 1;
                (0..k).all(|_| {
                    let pos = (i / stride) % p;
                    let ok = (pos == 0 || values[i - stride] <= values[i])
                        && (pos + 1 == p || values[i + stride] <= values[i]);
                    stride *= p;
                    ok
                })
            })
            .collect(),
        None => (0..seeds.len()).collect(),
    };
    candidates.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    candidates.truncate(ctx.cfg.max_ascents);
    let mut starts: Vec<Vec<f64>> = candidates.iter().map(|&i| seeds[i].clone()).collect();
    for z in energy.nonlinearity().zeros() {
        starts.push(ctx.coordinates(&spectrum.constant_field(z.t)));
    }

    let ascents: Vec<Result<(Vec<f64>, ReducedPoint), ReductionError>> =
        exec::map(solver.execution, &starts, |s| ctx.ascend(s));
    let mut best: Option<(Vec<f64>, ReducedPoint)> = None;
    for a in ascents {
        let (xi, p) = a?;
        if best.as_ref().is_none_or(|(_, b)| p.value > b.value) {
            best = Some((xi, p));
        }
    }
    let (xi, p) = best.expect("at least one ascent start");

    let lifted = &ctx.embed(&xi) + &p.y;
    let (u, iters) = refine_critical(energy, &lifted, solver)?;
    let mut record = CriticalPointRecord::measure(
        energy,
        u,
        Classification::ReductionMax,
        Provenance::Reduction,
        solver.degeneracy_tol,
    );
    record.iterations = iters;
    if record.degenerate {
        record.warnings.push(
            "reduction maximizer is degenerate; degree taken from its critical groups".into(),
        );
    } else if record.morse_index != k {
        record.warnings.push(format!(
            "reduction maximizer has Morse index {} instead of k = {k}",
            record.morse_index
        ));
    }
    if boundary_max >= p.value {
        warnings.push(format!(
            "reduced functional on the seeding boundary ({boundary_max:.6e}) is not below the maximum ({:.6e})",
            p.value
        ));
    }
    Ok(ReductionOutcome {
        x: ctx.coordinates(&record.u),
        reduced_value: p.value,
        grid_points: seeds.len(),
        grid_radius: r,
        seed_max,
        boundary_max,
        ascents: starts.len(),
        warnings,
        record,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    /// `lambda_j < f'(alpha)`: the constant is a strict local maximum along it.
    Low,
    /// `f'(alpha) < lambda_j < f'(inf)`: a strict local minimum along it.
    Middle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionScan {
    pub index: usize,
    pub eigenvalue: f64,
    pub block: Block,
    pub delta_plus: f64,
    pub delta_minus: f64,
    pub second_difference: f64,
    /// `lambda_j - f'(alpha)`, the diagonal of the reduced Hessian at the constant.
    pub expected_curvature: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxMinReport {
    pub alpha: f64,
    pub slope: f64,
    /// Number of eigenvalues below `f'(alpha)`.
    pub ell: usize,
    pub epsilon: f64,
    pub directions: Vec<DirectionScan>,
    pub passed: bool,
}

/// Samples `J~` around the constant `alpha` along every X direction.
pub fn local_max_min_at_constant(
    ctx: &ReductionContext<'_>,
    alpha: f64,
    epsilon: f64,
) -> Result<MaxMinReport, ReductionError> {
    let energy = ctx.energy;
    let spectrum = energy.spectrum();
    let (value, slope) = energy.nonlinearity().value_and_derivative(alpha);
    if value.abs() > 1e-10 {
        return Err(ReductionError::Precondition(format!(
            "f({alpha}) = {value} is not zero"
        )));
    }
    spectrum.check_nonresonant(slope)?;
    let ell = spectrum.count_below(slope);
    if ell > ctx.k() {
        return Err(ReductionError::Precondition(format!(
            "f'({alpha}) = {slope} lies above f'(inf): {ell} eigenvalues below it, k = {}",
            ctx.k()
        )));
    }
    let base_x = ctx.coordinates(&spectrum.constant_field(alpha));
    let base = ctx.reduced_value(&ctx.embed(&base_x))?;
    let mut directions = Vec::with_capacity(ctx.k());
    for (i, &j) in ctx.split.x_indices.iter().enumerate() {
        let shifted = |s: f64| {
            let mut xi = base_x.clone();
            xi[i] += s;
            ctx.reduced_value(&ctx.embed(&xi))
        };
        let delta_plus = shifted(epsilon)? - base;
        let delta_minus = shifted(-epsilon)? - base;
        let lambda = spectrum.eigenvalue(j);
        let block = if lambda < slope {
            Block::Low
        } else {
            Block::Middle
        };
        let expected_curvature = lambda - slope;
        let second_difference = (delta_plus + delta_minus) / (epsilon * epsilon);
        let signs = match block {
            Block::Low => delta_plus < 0.0 && delta_minus < 0.0,
            Block::Middle => delta_plus > 0.0 && delta_minus > 0.0,
        };
        let close =
            (second_difference - expected_curvature).abs() <= 0.1 * expected_curvature.abs();
        directions.push(DirectionScan {
            index: j,
            eigenvalue: lambda,
            block,
            delta_plus,
            delta_minus,
            second_difference,
            expected_curvature,
            passed: signs && close,
        });
    }
    Ok(MaxMinReport {
        alpha,
        slope,
        ell,
        epsilon,
        passed: directions.iter().all(|d| d.passed),
        directions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::{NonlinearityConfig, NonlinearitySpec};
    use crate::spectrum::{build_spectrum, Domain, Spectrum};
    use std::f64::consts::PI;

    fn setup(n: usize, cfg: NonlinearityConfig) -> (Spectrum, NonlinearitySpec) {
        (
            build_spectrum(&Domain::interval(PI), n).unwrap(),
            NonlinearitySpec::build(&cfg).unwrap(),
        )
    }

    #[test]
    fn ref5_modulus() {
        let (s, f) = setup(8, NonlinearityConfig::ref5());
        let j = EnergyFunctional::new(&s, f);
        let ctx = ReductionContext::new(&j, ReductionConfig::default()).unwrap();
        assert_eq!(ctx.k(), 2);
        assert!((ctx.modulus() - 0.3).abs() < 1e-12);
        assert!((ctx.lipschitz() - 1.4).abs() < 1e-12);
    }

    #[test]
    fn psi_vanishes_at_constants() {
        let (s, f) = setup(8, NonlinearityConfig::ref5());
        let j = EnergyFunctional::new(&s, f);
        let ctx = ReductionContext::new(&j, ReductionConfig::default()).unwrap();
        for t in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            let y = ctx.psi(&s.constant_field(t)).unwrap();
            assert!(s.h1_norm(&y) < 1e-12);
        }
    }

    #[test]
    fn linear_psi_is_zero() {
        let (s, f) = setup(8, NonlinearityConfig::linear(2.5));
        let j = EnergyFunctional::new(&s, f);
        let ctx = ReductionContext::new(&j, ReductionConfig::default()).unwrap();
        let x = ctx.embed(&[0.7, -1.3]);
        assert!(s.h1_norm(&ctx.psi(&x).unwrap()) < 1e-12);
    }

    #[test]
    fn inapplicable_when_gamma_too_large() {
        let (s, f) = setup(
            8,
            NonlinearityConfig {
                knots: vec![[0.0, 5.0]],
                shape_points: vec![],
                slope_minus_inf: 2.5,
                slope_plus_inf: 2.5,
                blend_margin: 1.0,
            },
        );
        let j = EnergyFunctional::new(&s, f);
        let err = ReductionContext::new(&j, ReductionConfig::default())
            .err()
            .unwrap();
        assert!(matches!(err, ReductionError::Inapplicable { .. }));
    }

    #[test]
    fn reduced_gradient_matches_finite_differences() {
        let (s, f) = setup(8, NonlinearityConfig::ref5());
        let j = EnergyFunctional::new(&s, f);
        let ctx = ReductionContext::new(&j, ReductionConfig::default()).unwrap();
        let xi = [0.4, 1.1];
        let p = ctx.solve(&ctx.embed(&xi), None).unwrap();
        let h = 1e-5;
        for i in 0..2 {
            let mut a = xi;
            let mut b = xi;
            a[i] += h;
            b[i] -= h;
            let fd = (ctx.reduced_value(&ctx.embed(&a)).unwrap()
                - ctx.reduced_value(&ctx.embed(&b)).unwrap())
                / (2.0 * h);
            let g = p.coefficient_gradient[i];
            assert!((fd - g).abs() <= 1e-5 * g.abs().max(1.0), "{fd} vs {g}");
        }
    }

    #[test]
    fn reduced_value_below_plain_value() {
        let (s, f) = setup(8, NonlinearityConfig::ref5());
        let j = EnergyFunctional::new(&s, f);
        let ctx = ReductionContext::new(&j, ReductionConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x = ctx.embed(&[rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)]);
            assert!(ctx.reduced_value(&x).unwrap() <= j.value(&x) + 1e-12);
        }
    }

    #[test]
    fn linear_maximizer_is_zero() {
        let (s, f) = setup(8, NonlinearityConfig::linear(0.5));
        let j = EnergyFunctional::new(&s, f);
        let ctx = ReductionContext::new(&j, ReductionConfig::default()).unwrap();
        assert_eq!(ctx.k(), 1);
        let out = maximize_reduced(&ctx, &SolverConfig::default(), 3.0).unwrap();
        assert!(out.record.h1_norm < 1e-10);
        assert_eq!(out.record.morse_index, 1);
    }

    #[test]
    fn max_min_at_minimum_type_constant() {
        let (s, f) = setup(8, NonlinearityConfig::ref5());
        let j = EnergyFunctional::new(&s, f);
        let ctx = ReductionContext::new(&j, ReductionConfig::default()).unwrap();
        let r = local_max_min_at_constant(&ctx, -1.0, 1e-3).unwrap();
        assert_eq!(r.ell, 0);
        assert!(r.directions.iter().all(|d| d.block == Block::Middle));
        assert!(r.passed, "{r:?}");
        let r = local_max_min_at_constant(&ctx, 0.0, 1e-3).unwrap();
        assert_eq!(r.ell, 2);
        assert!(r.directions.iter().all(|d| d.block == Block::Low));
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn linear_max_min_pattern() {
        let (s, f) = setup(8, NonlinearityConfig::linear(2.5));
        let j = EnergyFunctional::new(&s, f);
        let ctx = ReductionContext::new(&j, ReductionConfig::default()).unwrap();
        let r = local_max_min_at_constant(&ctx, 0.0, 1e-2).unwrap();
        for d in &r.directions {
            assert!((d.second_difference - (d.eigenvalue - 2.5)).abs() < 1e-6);
        }
    }
}
