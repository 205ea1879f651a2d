use nalgebra::{DVector, SymmetricEigen};

use super::{check_bound, SolverConfig, SolverError};
use crate::energy::{residual_from_coefficient_gradient, EnergyFunctional};
use crate::field::SpectralField;

/// Newton's method on `grad J = 0` with a Levenberg-Marquardt trust region.
///
/// Works in H1-scaled coordinates `z_j = sqrt(1 + lambda_j) c_j`, where the
/// Hessian is symmetric. The full Newton step is tried first; when it fails
/// to reduce the residual (typically near indefinite or singular Hessians) the
/// damping `mu` grows until it does. Converges to critical points of any
/// Morse index. Returns the point and the iteration count.
pub fn refine_critical(
    energy: &EnergyFunctional<'_>,
    start: &SpectralField,
    cfg: &SolverConfig,
) -> Result<(SpectralField, usize), SolverError> {
    let weights = energy.spectrum().h1_weights();
    let sqrt_w = weights.map(f64::sqrt);
    let mut u = start.clone();
    check_bound(energy, &u, cfg)?;
    let mut g = energy.coefficient_gradient(&u);
    let mut res = residual_from_coefficient_gradient(&g, &weights);
    let mut mu = 0.0_f64;

    for iter in 0..cfg.max_iters {
        if res <= cfg.grad_tol {
            return Ok((u, iter));
        }
        let a = energy.second_derivative(&u);
        let n = a.nrows();
        let sym = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            0.5 * (a[(i, j)] + a[(j, i)]) / (sqrt_w[i] * sqrt_w[j])
        });
        let eig = SymmetricEigen::new(sym);
        let gz = g.component_div(&sqrt_w);
        let proj = eig.eigenvectors.tr_mul(&gz);
        let scale = eig
            .eigenvalues
            .iter()
            .fold(0.0_f64, |m, l| m.max(l * l))
            .max(1e-300);

        let mut accepted = false;
        for _ in 0..40 {
            let coeffs = DVector::from_iterator(
                n,
                eig.eigenvalues
                    .iter()
                    .zip(proj.iter())
                    .map(|(&l, &p)| -l * p / (l * l + mu)),
            );
            let mut dz = &eig.eigenvectors * coeffs;
            let len = dz.norm();
            if !len.is_finite() {
                mu = (mu * 10.0).max(1e-10 * scale);
                continue;
            }
            if len > cfg.max_step {
                dz *= cfg.max_step / len;
            }
            let trial = SpectralField::new(u.coeffs() + dz.component_div(&sqrt_w));
            check_bound(energy, &trial, cfg)?;
            let g_trial = energy.coefficient_gradient(&trial);
            let res_trial = residual_from_coefficient_gradient(&g_trial, &weights);
            if res_trial < res {
                u = trial;
                g = g_trial;
                res = res_trial;
                mu = if mu < 1e-12 * scale { 0.0 } else { mu / 10.0 };
                accepted = true;
                break;
            }
            mu = (mu * 10.0).max(1e-10 * scale);
        }
        if !accepted {
            if res <= cfg.grad_tol {
                return Ok((u, iter));
            }
            return Err(SolverError::Stalled { residual: res });
        }
    }
    if res <= cfg.grad_tol {
        Ok((u, cfg.max_iters))
    } else {
        Err(SolverError::MaxItersExceeded {
            iters: cfg.max_iters,
            residual: res,
        })
    }
}
