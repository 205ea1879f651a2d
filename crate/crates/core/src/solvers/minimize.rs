use nalgebra::{Cholesky, DVector};

use super::{
    check_bound, Classification, CriticalPointRecord, Provenance, SolverConfig, SolverError,
};
use crate::energy::{residual_from_coefficient_gradient, EnergyFunctional};
use crate::field::SpectralField;

const ARMIJO: f64 = 1e-4;

/// Energies visited by [`minimize_traced`], one entry per accepted iterate.
#[derive(Debug, Clone, Default)]
pub struct MinimizeTrace {
    pub energies: Vec<f64>,
    pub residuals: Vec<f64>,
}

/// Local minimization by damped Newton (when the Hessian is positive
/// definite) or H1 steepest descent, both with Armijo backtracking.
pub fn minimize(
    energy: &EnergyFunctional<'_>,
    start: &SpectralField,
    cfg: &SolverConfig,
) -> Result<CriticalPointRecord, SolverError> {
    minimize_traced(energy, start, cfg).map(|(r, _)| r)
}

pub fn minimize_traced(
    energy: &EnergyFunctional<'_>,
    start: &SpectralField,
    cfg: &SolverConfig,
) -> Result<(CriticalPointRecord, MinimizeTrace), SolverError> {
    let weights = energy.spectrum().h1_weights();
    let mut u = start.clone();
    check_bound(energy, &u, cfg)?;
    let mut e = energy.value(&u);
    let mut trace = MinimizeTrace::default();
    let mut iters = 0;

    loop {
        let g = energy.coefficient_gradient(&u);
        let res = residual_from_coefficient_gradient(&g, &weights);
        trace.energies.push(e);
        trace.residuals.push(res);
        if res <= cfg.grad_tol {
            break;
        }
        if iters >= cfg.max_iters {
            return Err(SolverError::MaxItersExceeded {
                iters,
                residual: res,
            });
        }
        iters += 1;

        let newton = Cholesky::new(energy.second_derivative(&u)).map(|c| -c.solve(&g));
        let steepest: DVector<f64> = -g.component_div(&weights);
        let mut accepted = false;
        for (is_newton, dir) in newton
            .into_iter()
            .map(|d| (true, d))
            .chain(std::iter::once((false, steepest)))
        {
            let mut d = dir;
            let len = d
                .iter()
                .zip(weights.iter())
                .map(|(x, w)| w * x * x)
                .sum::<f64>()
                .sqrt();
            if len > cfg.max_step {
                d *= cfg.max_step / len;
            }
            let slope = g.dot(&d);
            if slope.partial_cmp(&0.0) != Some(std::cmp::Ordering::Less) {
                continue;
            }
            let mut t = 1.0;
            while t > 1e-12 {
                let trial = SpectralField::new(u.coeffs() + &d * t);
                check_bound(energy, &trial, cfg)?;
                let e_trial = energy.value(&trial);
                let armijo = e_trial <= e + ARMIJO * t * slope;
                // Near convergence energy differences drop below rounding; a
                // full Newton step is then judged by the residual instead.
                let polish = is_newton
                    && t == 1.0
                    && e_trial <= e + 8.0 * f64::EPSILON * e.abs().max(1.0)
                    && energy.residual(&trial) < res;
                if armijo || polish {
                    u = trial;
                    e = e_trial.min(e);
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if accepted {
                break;
            }
        }
        if !accepted {
            return Err(SolverError::Stalled { residual: res });
        }
    }

    let mut record = CriticalPointRecord::measure(
        energy,
        u,
        Classification::Minimizer,
        Provenance::Minimize,
        cfg.degeneracy_tol,
    );
    record.iterations = iters;
    if record.hessian_eigs[0] < -cfg.degeneracy_tol {
        record.classification = Classification::Other;
        record
            .warnings
            .push("descent stopped at a point whose Hessian is not positive semidefinite".into());
    }
    Ok((record, trace))
}
