use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    minimize, refine_critical, Classification, CriticalPointRecord, Provenance, SolverConfig,
};
use crate::energy::EnergyFunctional;
use crate::exec;
use crate::field::SpectralField;
use crate::spectrum::Spectrum;

/// Random points of the H1 ball of radius `radius`, weighted towards low modes.
pub fn random_starts(
    spectrum: &Spectrum,
    count: usize,
    radius: f64,
    rng: &mut impl Rng,
) -> Vec<SpectralField> {
    let w = spectrum.h1_weights();
    let n = spectrum.len();
    (0..count)
        .map(|_| {
            let z = DVector::from_fn(n, |j, _| rng.gen_range(-1.0..1.0) / w[j]);
            let norm = z.norm();
            let r = radius * rng.gen::<f64>().sqrt();
            let scale = if norm > 0.0 { r / norm } else { 0.0 };
            SpectralField::new(DVector::from_fn(n, |j, _| z[j] * scale / w[j].sqrt()))
        })
        .collect()
}

/// Orders records by energy, then coefficients lexicographically.
pub fn sort_records(records: &mut [CriticalPointRecord]) {
    records.sort_by(|a, b| {
        a.energy
            .total_cmp(&b.energy)
            .then_with(|| a.u.lex_cmp(&b.u))
    });
}

/// Sorts and drops every record within `radius` (H1) of an earlier one.
pub fn dedup_records(
    mut records: Vec<CriticalPointRecord>,
    spectrum: &Spectrum,
    radius: f64,
) -> Vec<CriticalPointRecord> {
    sort_records(&mut records);
    let mut kept: Vec<CriticalPointRecord> = Vec::new();
    for r in records {
        if kept
            .iter()
            .all(|k| spectrum.h1_distance(&k.u, &r.u) > radius)
        {
            kept.push(r);
        }
    }
    kept
}

fn classify(record: &mut CriticalPointRecord) {
    record.classification = if record.is_constant(1e-8) {
        Classification::Constant
    } else if record.morse_index == 0 && !record.degenerate {
        Classification::Minimizer
    } else {
        Classification::Other
    };
}

/// Refines every start by Newton (any index) and by descent (minima only),
/// keeping converged, deduplicated results.
pub fn multistart_from(
    energy: &EnergyFunctional<'_>,
    starts: &[SpectralField],
    cfg: &SolverConfig,
    provenance: Provenance,
) -> Vec<CriticalPointRecord> {
    let found: Vec<Vec<CriticalPointRecord>> = exec::map(cfg.execution, starts, |start| {
        let mut out = Vec::with_capacity(2);
        if let Ok((u, iters)) = refine_critical(energy, start, cfg) {
            let mut r = CriticalPointRecord::measure(
                energy,
                u,
                Classification::Other,
                provenance.clone(),
                cfg.degeneracy_tol,
            );
            r.iterations = iters;
            classify(&mut r);
            out.push(r);
        }
        if let Ok(mut r) = minimize(energy, start, cfg) {
            r.provenance = provenance.clone();
            classify(&mut r);
            out.push(r);
        }
        out
    });
    let all: Vec<CriticalPointRecord> = found
        .into_iter()
        .flatten()
        .filter(|r| r.residual <= cfg.grad_tol)
        .collect();
    dedup_records(all, energy.spectrum(), cfg.dedup_radius)
}

/// `multistart_budget` random starts in the ball of radius `radius`.
///
/// `batch` selects an independent random stream so successive batches draw
/// fresh starts.
pub fn multistart(
    energy: &EnergyFunctional<'_>,
    cfg: &SolverConfig,
    radius: f64,
    batch: usize,
) -> Vec<CriticalPointRecord> {
    multistart_budgeted(energy, cfg, radius, batch, cfg.multistart_budget)
}

pub(crate) fn multistart_budgeted(
    energy: &EnergyFunctional<'_>,
    cfg: &SolverConfig,
    radius: f64,
    batch: usize,
    budget: usize,
) -> Vec<CriticalPointRecord> {
    if budget == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream(batch as u64);
    let starts = random_starts(energy.spectrum(), budget, radius, &mut rng);
    let mut cfg = cfg.clone();
    if cfg.divergence_bound.is_none() {
        cfg.divergence_bound = Some(radius.max(1.0) * cfg.safety_factor);
    }
    multistart_from(energy, &starts, &cfg, Provenance::Multistart { batch })
}
