//! Path minimax for mountain-pass critical points.
//!
//! Phase one relaxes a discrete path between the two endpoints: each interior
//! node in the upper half of the energy range descends the H1 gradient
//! component normal to the path, and nodes are redistributed at equal
//! arclength after every sweep (string method). Phase two takes the
//! highest node and climbs: it descends the gradient component orthogonal to
//! the path tangent and ascends along it until the residual is small, after
//! which Newton refinement finishes the job.

use nalgebra::DVector;

use super::{
    refine_critical, Classification, CriticalPointRecord, Provenance, SolverConfig, SolverError,
};
use crate::energy::EnergyFunctional;
use crate::exec;
use crate::field::SpectralField;
use crate::ledger::{hess_kato_check, ClassifierConfig, HessKatoReport};

const CLIMB_SWITCH_TOL: f64 = 1e-5;
const CLIMB_MAX_ITERS: usize = 20_000;
const PATH_STEADY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct MountainPassDiagnostics {
    pub sweeps: usize,
    pub climb_iters: usize,
    pub newton_iters: usize,
    pub path_max_energy: f64,
    pub hess_kato: HessKatoReport,
}

fn h1_norm(v: &DVector<f64>, w: &DVector<f64>) -> f64 {
    v.iter()
        .zip(w.iter())
        .map(|(x, w)| w * x * x)
        .sum::<f64>()
        .sqrt()
}

fn h1_dot(a: &DVector<f64>, b: &DVector<f64>, w: &DVector<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .zip(w.iter())
        .map(|((x, y), w)| w * x * y)
        .sum()
}

/// Redistributes interior nodes at equal H1 arclength along the polyline.
fn reparametrize(path: &mut [DVector<f64>], w: &DVector<f64>) {
    let p = path.len();
    let mut cum = vec![0.0; p];
    for i in 1..p {
        cum[i] = cum[i - 1] + h1_norm(&(&path[i] - &path[i - 1]), w);
    }
    let total = cum[p - 1];
    if total <= 0.0 {
        return;
    }
    let old = path.to_vec();
    let mut seg = 0;
    for (i, node) in path.iter_mut().enumerate().take(p - 1).skip(1) {
        let target = total * i as f64 / (p - 1) as f64;
        while seg < p - 2 && cum[seg + 1] < target {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let s = if len > 0.0 {
            (target - cum[seg]) / len
        } else {
            0.0
        };
        *node = &old[seg] * (1.0 - s) + &old[seg + 1] * s;
    }
}

/// Finds a critical point of mountain-pass type between `end_a` and `end_b`.
pub fn mountain_pass(
    energy: &EnergyFunctional<'_>,
    end_a: &SpectralField,
    end_b: &SpectralField,
    cfg: &SolverConfig,
    classifier: &ClassifierConfig,
) -> Result<CriticalPointRecord, SolverError> {
    mountain_pass_with_diagnostics(energy, end_a, end_b, cfg, classifier).map(|(r, _)| r)
}

pub fn mountain_pass_with_diagnostics(
    energy: &EnergyFunctional<'_>,
    end_a: &SpectralField,
    end_b: &SpectralField,
    cfg: &SolverConfig,
    classifier: &ClassifierConfig,
) -> Result<(CriticalPointRecord, MountainPassDiagnostics), SolverError> {
    let spectrum = energy.spectrum();
    let w = spectrum.h1_weights();
    let n = energy.dim();
    let nodes = cfg.path_nodes;
    let f = energy.nonlinearity();
    let lipschitz = 1.0_f64.max(f.gamma().abs()).max(-f.slope_floor());
    let tau = 0.5 / lipschitz;

    let (ea, eb) = (energy.value(end_a), energy.value(end_b));
    let floor = ea.max(eb);
    let bump = if n >= 2 {
        SpectralField::basis_vector(n, 1).into_coeffs() * cfg.path_bump
    } else {
        DVector::zeros(n)
    };
    let mut path: Vec<DVector<f64>> = (0..nodes)
        .map(|i| {
            let s = i as f64 / (nodes - 1) as f64;
            end_a.coeffs() * (1.0 - s)
                + end_b.coeffs() * s
                + &bump * (std::f64::consts::PI * s).sin()
        })
        .collect();

    let hgrad = |c: &DVector<f64>| -> DVector<f64> {
        energy
            .coefficient_gradient(&SpectralField::new(c.clone()))
            .component_div(&w)
    };

    let mut sweeps = 0;
    for _ in 0..cfg.path_sweeps {
        sweeps += 1;
        let interior: Vec<usize> = (1..nodes - 1).collect();
        let evaluated = exec::map(cfg.execution, &interior, |&i| {
            let g = hgrad(&path[i]);
            let mut t = &path[i + 1] - &path[i - 1];
            let len = h1_norm(&t, &w);
            if len > 0.0 {
                t /= len;
            }
            let along = h1_dot(&g, &t, &w);
            (
                energy.value(&SpectralField::new(path[i].clone())),
                (g - t * along) * tau,
            )
        });
        // Only the upper part of the path can carry the minimax level. Nodes
        // well below it stay put, which keeps the path anchored when an
        // endpoint is not itself critical.
        let top = evaluated.iter().map(|(e, _)| *e).fold(floor, f64::max);
        let frozen_below = floor + 0.5 * (top - floor);
        let before = path.clone();
        for (node, (e, step)) in path[1..nodes - 1].iter_mut().zip(&evaluated) {
            if *e >= frozen_below {
                *node -= step;
            }
        }
        reparametrize(&mut path, &w);
        let moved = path
            .iter()
            .zip(&before)
            .map(|(a, b)| h1_norm(&(a - b), &w))
            .fold(0.0, f64::max);
        if !moved.is_finite() {
            return Err(SolverError::NonFinite);
        }
        if moved < PATH_STEADY_TOL * tau {
            break;
        }
    }

    let energies = exec::map(cfg.execution, &path, |c| {
        energy.value(&SpectralField::new(c.clone()))
    });
    let imax = (1..nodes - 1)
        .max_by(|&i, &j| energies[i].total_cmp(&energies[j]))
        .unwrap();
    let path_max_energy = energies[imax];
    if path_max_energy <= floor + 1e-12 {
        return Err(SolverError::PathCollapse(format!(
            "relaxed path peaks at its endpoints (interior max {path_max_energy:.6e} <= {floor:.6e})"
        )));
    }

    let mut u = path[imax].clone();
    let mut tangent = &path[imax + 1] - &path[imax - 1];
    tangent /= h1_norm(&tangent, &w);
    let mut climb_iters = 0;
    while climb_iters < CLIMB_MAX_ITERS {
        let g = hgrad(&u);
        if h1_norm(&g, &w) < CLIMB_SWITCH_TOL {
            break;
        }
        if climb_iters % 25 == 0 {
            let hs = energy.hessian_spectrum(&SpectralField::new(u.clone()));
            let best = (0..n)
                .filter(|&i| hs.eigenvalues[i] < 0.0)
                .max_by(|&i, &j| {
                    let ci = h1_dot(&hs.eigenvectors.column(i).into_owned(), &tangent, &w).abs();
                    let cj = h1_dot(&hs.eigenvectors.column(j).into_owned(), &tangent, &w).abs();
                    ci.total_cmp(&cj)
                });
            if let Some(i) = best {
                let v = hs.eigenvectors.column(i).into_owned();
                let sign = h1_dot(&v, &tangent, &w).signum();
                tangent = v * sign;
            }
        }
        let along = h1_dot(&g, &tangent, &w);
        u -= (&g - &tangent * (2.0 * along)) * tau;
        climb_iters += 1;
        if !u.iter().all(|c| c.is_finite()) {
            return Err(SolverError::NonFinite);
        }
    }

    let (u, newton_iters) = refine_critical(energy, &SpectralField::new(u), cfg)?;
    let mut record = CriticalPointRecord::measure(
        energy,
        u,
        Classification::Other,
        Provenance::MountainPass {
            truncation: f.truncation(),
        },
        cfg.degeneracy_tol,
    );
    record.iterations = sweeps + climb_iters + newton_iters;
    if record.energy < floor - 1e-12 {
        return Err(SolverError::PathCollapse(format!(
            "critical level {:.6e} below endpoint level {floor:.6e}",
            record.energy
        )));
    }
    for end in [end_a, end_b] {
        if spectrum.h1_distance(&record.u, end) <= cfg.dedup_radius {
            return Err(SolverError::PathCollapse(
                "maximal node converged to an endpoint".into(),
            ));
        }
    }

    let hs = energy.hessian_spectrum(&record.u);
    let hess_kato = hess_kato_check(spectrum, &hs, classifier);
    record.principal_simple_sign_definite = Some(hess_kato.passed);
    if record.morse_index == 1 && hess_kato.passed && !record.degenerate {
        record.classification = Classification::MpType;
    } else {
        record.warnings.push(format!(
            "mountain pass point has Morse index {} (principal eigenpair simple and sign-definite: {})",
            record.morse_index, hess_kato.passed
        ));
    }
    Ok((
        record,
        MountainPassDiagnostics {
            sweeps,
            climb_iters,
            newton_iters,
            path_max_energy,
            hess_kato,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::{NonlinearityConfig, NonlinearitySpec};
    use crate::spectrum::{build_spectrum, Domain};
    use std::f64::consts::PI;

    #[test]
    fn reparametrize_equalizes_spacing() {
        let w = DVector::from_element(2, 1.0);
        let mut path: Vec<DVector<f64>> = [0.0, 0.1, 0.15, 0.9, 1.0]
            .iter()
            .map(|&x| DVector::from_vec(vec![x, 0.0]))
            .collect();
        reparametrize(&mut path, &w);
        for (i, p) in path.iter().enumerate() {
            assert!((p[0] - 0.25 * i as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn quadratic_saddle_is_found_at_origin() {
        // f(t) = t on [0, pi/sqrt 2] with two modes: J = (u_1^2 - u_0^2) / 2.
        let s = build_spectrum(&Domain::interval(PI / 2f64.sqrt()), 2).unwrap();
        let j = EnergyFunctional::new(
            &s,
            NonlinearitySpec::build(&NonlinearityConfig::linear(1.0)).unwrap(),
        );
        let u = SpectralField::from_slice(&[0.7, -0.4]);
        assert!((j.value(&u) - 0.5 * (0.16 - 0.49)).abs() < 1e-13);
        let a = SpectralField::from_slice(&[-2.0, 0.0]);
        let b = SpectralField::from_slice(&[2.0, 0.0]);
        let r = mountain_pass(
            &j,
            &a,
            &b,
            &SolverConfig::default(),
            &ClassifierConfig::default(),
        )
        .unwrap();
        assert!(s.h1_norm(&r.u) < 1e-9);
        assert_eq!(r.morse_index, 1);
        assert_eq!(r.classification, Classification::MpType);
    }

    #[test]
    fn strictly_convex_collapses() {
        let s = build_spectrum(&Domain::interval(PI), 8).unwrap();
        let j = EnergyFunctional::new(
            &s,
            NonlinearitySpec::build(&NonlinearityConfig::linear(-1.0)).unwrap(),
        );
        let a = s.constant_field(-1.0);
        let b = s.constant_field(1.0);
        let err = mountain_pass(
            &j,
            &a,
            &b,
            &SolverConfig::default(),
            &ClassifierConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, SolverError::PathCollapse(_)), "{err:?}");
    }
}
