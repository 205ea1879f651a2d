use serde::{Deserialize, Serialize};

use super::multistart::multistart_budgeted;
use super::{
    dedup_records, multistart_from, Classification, CriticalPointRecord, Provenance, SolverConfig,
    SolverError,
};
use crate::energy::EnergyFunctional;
use crate::field::SpectralField;
use crate::nonlinearity::{NonlinearitySpec, TruncationKind};
use crate::spectrum::Spectrum;

/// Solutions found for one homotopy parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomotopyStage {
    pub lambda: f64,
    pub solutions: usize,
    pub max_norm: f64,
    /// H1 norms of the solutions, ascending.
    pub norms: Vec<f64>,
}

/// A priori radius for the solution set of every `h(lambda, .)` problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomotopyBound {
    /// `max_norm * safety_factor`.
    pub radius: f64,
    pub max_norm: f64,
    pub safety_factor: f64,
    pub stages: Vec<HomotopyStage>,
}

/// Ball radius that comfortably contains every constant solution and the
/// nonconstant ones near them: twice the H1 norm of the constant `extent`.
pub fn default_search_radius(spec: &NonlinearitySpec, spectrum: &Spectrum) -> f64 {
    2.0 * spec.extent() * spectrum.domain().measure().sqrt()
}

/// Sign changes of `f` on a fine scan of `[-extent, extent]`, refined by bisection.
fn scalar_zeros(f: &NonlinearitySpec) -> Vec<f64> {
    let e = f.extent() + 1.0;
    let n = 4000;
    let t = |i: usize| -e + 2.0 * e * i as f64 / n as f64;
    let mut roots = Vec::new();
    for i in 0..n {
        let (a, b) = (t(i), t(i + 1));
        let (fa, fb) = (f.value(a), f.value(b));
        if fa == 0.0 {
            roots.push(a);
        } else if fa * fb < 0.0 {
            let (mut lo, mut hi) = (a, b);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if f.value(mid) * fa > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
    }
    roots
}

/// Runs a multistart search along `h(lambda, t) = lambda f'(inf) t + (1 - lambda) f(t)`
/// for every `lambda` on the grid and bounds the norms of everything found.
///
/// Each stage is seeded with the constant solutions of `h(lambda, .)`, the
/// previous stage's solutions (continuation) and `homotopy_budget` random starts.
pub fn homotopy_bound(
    spec: &NonlinearitySpec,
    spectrum: &Spectrum,
    lambda_grid: &[f64],
    cfg: &SolverConfig,
) -> Result<HomotopyBound, SolverError> {
    let slope = spec.symmetric_slope()?;
    spectrum.check_nonresonant(slope)?;
    let search = cfg
        .search_radius
        .unwrap_or_else(|| default_search_radius(spec, spectrum));
    let mut stage_cfg = cfg.clone();
    if stage_cfg.divergence_bound.is_none() {
        stage_cfg.divergence_bound = Some(search * cfg.safety_factor);
    }

    let mut stages = Vec::with_capacity(lambda_grid.len());
    let mut previous: Vec<SpectralField> = Vec::new();
    for (batch, &lambda) in lambda_grid.iter().enumerate() {
        let h = spec.truncate(TruncationKind::Homotopy { lambda })?;
        let energy = EnergyFunctional::new(spectrum, h);
        let provenance = Provenance::Homotopy { lambda };
        let mut seeds: Vec<SpectralField> = scalar_zeros(energy.nonlinearity())
            .into_iter()
            .map(|t| spectrum.constant_field(t))
            .collect();
        seeds.append(&mut previous);
        let mut found = multistart_from(&energy, &seeds, &stage_cfg, provenance.clone());
        found.extend(
            multistart_budgeted(&energy, &stage_cfg, search, batch, cfg.homotopy_budget)
                .into_iter()
                .map(|mut r: CriticalPointRecord| {
                    r.provenance = provenance.clone();
                    r
                }),
        );
        let found = dedup_records(found, spectrum, cfg.dedup_radius);
        let mut norms: Vec<f64> = found.iter().map(|r| r.h1_norm).collect();
        norms.sort_by(f64::total_cmp);
        stages.push(HomotopyStage {
            lambda,
            solutions: found.len(),
            max_norm: norms.last().copied().unwrap_or(0.0),
            norms,
        });
        previous = found
            .into_iter()
            .filter(|r| r.classification != Classification::Constant)
            .map(|r| r.u)
            .collect();
    }
    let max_norm = stages.iter().map(|s| s.max_norm).fold(0.0, f64::max);
    Ok(HomotopyBound {
        radius: max_norm * cfg.safety_factor,
        max_norm,
        safety_factor: cfg.safety_factor,
        stages,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::NonlinearityConfig;
    use crate::spectrum::{build_spectrum, Domain};
    use std::f64::consts::PI;

    fn quick() -> SolverConfig {
        SolverConfig {
            homotopy_budget: 10,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn linear_problem_has_zero_radius() {
        let s = build_spectrum(&Domain::interval(PI), 8).unwrap();
        let f = NonlinearitySpec::build(&NonlinearityConfig::linear(2.5)).unwrap();
        let b = homotopy_bound(&f, &s, &[0.0, 0.5, 1.0], &quick()).unwrap();
        assert!(b.radius < 1e-12);
        for st in &b.stages {
            assert_eq!(st.solutions, 1);
        }
    }

    #[test]
    fn resonant_slope_is_rejected() {
        let s = build_spectrum(&Domain::interval(PI), 8).unwrap();
        let f = NonlinearitySpec::build(&NonlinearityConfig::linear(4.0)).unwrap();
        let err = homotopy_bound(&f, &s, &[1.0], &quick()).unwrap_err();
        assert!(matches!(err, SolverError::Spectrum(_)));
    }

    #[test]
    fn scalar_zeros_of_ref5() {
        let f = NonlinearitySpec::build(&NonlinearityConfig::ref5()).unwrap();
        let z = scalar_zeros(&f);
        assert_eq!(z.len(), 5);
        for (a, b) in z.iter().zip([-2.0, -1.0, 0.0, 1.0, 2.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
