//! Morse data, local degrees and the global degree count.
//!
//! Every admitted record carries a local Leray-Schauder degree:
//! `(-1)^index` when nondegenerate, `-1` for verified mountain-pass points and
//! `(-1)^k` for the reduction maximizer. The ledger compares their sum with the
//! degree `(-1)^k` of the asymptotic linearization on the ball of radius `R`;
//! a nonzero deficiency certifies solutions that have not been found yet.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{EnergyFunctional, HessianSpectrum};
use crate::field::SpectralField;
use crate::nonlinearity::{NonlinearitySpec, TruncationKind};
use crate::solvers::{Classification, CriticalPointRecord};
use crate::spectrum::Spectrum;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LedgerError {
    #[error("degenerate record with no known critical-group signature")]
    UnclassifiedDegenerate,
    #[error("range [{min:.6}, {max:.6}] leaves the region [{lo}, {hi}] where the truncation agrees with f (margin {margin})")]
    RangeEscape {
        min: f64,
        max: f64,
        lo: f64,
        hi: f64,
        margin: f64,
    },
    #[error("residual {residual:.3e} under the original functional exceeds {limit:.3e}")]
    TransferResidual { residual: f64, limit: f64 },
}

fn default_simplicity_tol() -> f64 {
    1e-6
}
fn default_qual_tol() -> f64 {
    1e-8
}
fn default_range_margin() -> f64 {
    1e-3
}
fn default_constant_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    /// Relative gap separating the principal Hessian eigenvalue from the next.
    #[serde(default = "default_simplicity_tol")]
    pub simplicity_tol: f64,
    /// Threshold for strict signs on the grid.
    #[serde(default = "default_qual_tol")]
    pub qual_tol: f64,
    /// Distance the range must keep from a truncation anchor.
    #[serde(default = "default_range_margin")]
    pub range_margin: f64,
    /// Oscillation `max u - min u` below which a field counts as constant.
    #[serde(default = "default_constant_tol")]
    pub constant_tol: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            simplicity_tol: default_simplicity_tol(),
            qual_tol: default_qual_tol(),
            range_margin: default_range_margin(),
            constant_tol: default_constant_tol(),
        }
    }
}

/// Simplicity and sign of the principal Hessian eigenpair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessKatoReport {
    /// The smallest eigenvalue is negative.
    pub applicable: bool,
    pub principal: f64,
    /// Gap to the second eigenvalue, relative to `max(1, |principal|)`.
    pub relative_gap: f64,
    pub simple: bool,
    pub sign_definite: bool,
    pub passed: bool,
}

pub fn hess_kato_check(
    spectrum: &Spectrum,
    hs: &HessianSpectrum,
    cfg: &ClassifierConfig,
) -> HessKatoReport {
    let eigs = &hs.eigenvalues;
    let principal = eigs[0];
    let relative_gap = if eigs.len() > 1 {
        (eigs[1] - principal) / principal.abs().max(1.0)
    } else {
        f64::INFINITY
    };
    let simple = relative_gap >= cfg.simplicity_tol;
    let values = spectrum.evaluate(&hs.eigenfunction(0));
    let scale = values.amax();
    let sign_definite = scale > 0.0
        && (values.iter().all(|&v| v > cfg.qual_tol * scale)
            || values.iter().all(|&v| v < -cfg.qual_tol * scale));
    let applicable = principal < 0.0;
    HessKatoReport {
        applicable,
        principal,
        relative_gap,
        simple,
        sign_definite,
        passed: applicable && simple && sign_definite,
    }
}

/// Local degree of an isolated critical point.
pub fn local_degree(record: &CriticalPointRecord, k: usize) -> Result<i32, LedgerError> {
    let parity = |n: usize| if n.is_multiple_of(2) { 1 } else { -1 };
    match record.classification {
        Classification::MpType if record.principal_simple_sign_definite == Some(true) => Ok(-1),
        Classification::ReductionMax => Ok(parity(k)),
        _ if !record.degenerate => Ok(parity(record.morse_index)),
        _ => Err(LedgerError::UnclassifiedDegenerate),
    }
}

/// Maximum-principle consequences and truncation ordering for one record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualitativeReport {
    pub constant: bool,
    /// `f(max u)`; positive for every nonconstant solution.
    pub f_at_max: f64,
    /// `f(min u)`; negative for every nonconstant solution.
    pub f_at_min: f64,
    pub max_principle: bool,
    /// Ordering relative to the truncation anchors, when the record has one.
    pub ordering: Option<String>,
    pub ordering_holds: bool,
    pub passed: bool,
}

pub fn qualitative_classify(
    record: &CriticalPointRecord,
    spec: &NonlinearitySpec,
    cfg: &ClassifierConfig,
) -> QualitativeReport {
    let (lo, hi) = record.range;
    let constant = record.is_constant(cfg.constant_tol);
    let f_at_max = spec.value(hi);
    let f_at_min = spec.value(lo);
    let max_principle = constant || (f_at_max > cfg.qual_tol && f_at_min < -cfg.qual_tol);
    let (ordering, ordering_holds) = match record.provenance.truncation() {
        Some(TruncationKind::Below { alpha }) => (Some(format!("max u < {alpha}")), hi < alpha),
        Some(TruncationKind::Above { alpha }) => (Some(format!("min u > {alpha}")), lo > alpha),
        Some(TruncationKind::Interval { alpha, beta }) => (
            Some(format!("{alpha} < min u <= max u < {beta}")),
            alpha < lo && hi < beta,
        ),
        _ => (None, true),
    };
    let ordering_holds = constant || ordering_holds;
    QualitativeReport {
        constant,
        f_at_max,
        f_at_min,
        max_principle,
        ordering,
        ordering_holds,
        passed: max_principle && ordering_holds,
    }
}

/// Re-measures a record found for a truncated nonlinearity under the original
/// functional. Valid only while its range stays inside the region where the
/// two nonlinearities coincide, so the critical groups carry over.
pub fn transfer_to_original(
    record: &CriticalPointRecord,
    original: &EnergyFunctional<'_>,
    truncated: &NonlinearitySpec,
    cfg: &ClassifierConfig,
    grad_tol: f64,
    degeneracy_tol: f64,
) -> Result<CriticalPointRecord, LedgerError> {
    let (min, max) = record.range;
    let (lo, hi) = truncated
        .agrees_on()
        .unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let margin = cfg.range_margin;
    let inside_lo = lo == f64::NEG_INFINITY || min >= lo + margin;
    let inside_hi = hi == f64::INFINITY || max <= hi - margin;
    let constant_anchor = record.is_constant(cfg.constant_tol) && min >= lo && max <= hi;
    if !(constant_anchor || (inside_lo && inside_hi)) {
        return Err(LedgerError::RangeEscape {
            min,
            max,
            lo,
            hi,
            margin,
        });
    }
    let mut out = CriticalPointRecord::measure(
        original,
        record.u.clone(),
        record.classification,
        record.provenance.clone(),
        degeneracy_tol,
    );
    out.iterations = record.iterations;
    out.warnings = record.warnings.clone();
    if record.principal_simple_sign_definite.is_some() {
        let hk = hess_kato_check(original.spectrum(), &original.hessian_spectrum(&out.u), cfg);
        out.principal_simple_sign_definite = Some(hk.passed);
    }
    let limit = 10.0 * grad_tol;
    if out.residual > limit {
        return Err(LedgerError::TransferResidual {
            residual: out.residual,
            limit,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub id: usize,
    pub record: CriticalPointRecord,
    pub degree: Option<i32>,
    pub qualitative: QualitativeReport,
    pub inside_ball: bool,
    /// Later stages that converged to the same point.
    #[serde(default)]
    pub also_found_by: Vec<String>,
    #[serde(default)]
    pub flags: Vec<String>,
}

/// A record refused by the ledger and why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub provenance: String,
    pub reason: String,
    pub range: (f64, f64),
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Admission {
    Added(usize),
    Duplicate(usize),
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeLedger {
    pub k: usize,
    /// Radius of the ball on which the global degree is `(-1)^k`.
    pub radius: f64,
    pub global_degree: i32,
    pub dedup_radius: f64,
    pub entries: Vec<LedgerEntry>,
    pub rejected: Vec<Rejection>,
}

/// Neighbourhood worth searching for a missing solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestedRegion {
    pub center: SpectralField,
    pub radius: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerReport {
    pub k: usize,
    pub radius: f64,
    pub global_degree: i32,
    pub degree_sum: i32,
    pub deficiency: i32,
    pub counted: usize,
    pub nonconstant: usize,
    /// Entries without a degree or outside the ball, with the reason.
    pub excluded: Vec<(usize, String)>,
    pub balanced: bool,
    /// Some record lacks a degree, so the count is incomplete.
    pub partial: bool,
    pub conclusion: String,
    pub suggested_regions: Vec<SuggestedRegion>,
}

impl DegreeLedger {
    pub fn new(k: usize, radius: f64, dedup_radius: f64) -> Self {
        Self {
            k,
            radius,
            global_degree: if k.is_multiple_of(2) { 1 } else { -1 },
            dedup_radius,
            entries: Vec::new(),
            rejected: Vec::new(),
        }
    }

    /// Admits a record already measured under the original functional.
    ///
    /// Records failing the qualitative checks are rejected; records within
    /// `dedup_radius` of an existing entry are merged into it.
    pub fn admit(
        &mut self,
        record: CriticalPointRecord,
        spectrum: &Spectrum,
        spec: &NonlinearitySpec,
        cfg: &ClassifierConfig,
    ) -> Admission {
        let qualitative = qualitative_classify(&record, spec, cfg);
        if !qualitative.passed {
            self.rejected.push(Rejection {
                provenance: record.provenance.to_string(),
                reason: format!("qualitative checks failed: {qualitative:?}"),
                range: record.range,
                energy: record.energy,
            });
            return Admission::Rejected;
        }
        if let Some(e) = self
            .entries
            .iter_mut()
            .find(|e| spectrum.h1_distance(&e.record.u, &record.u) <= self.dedup_radius)
        {
            e.also_found_by.push(record.provenance.to_string());
            return Admission::Duplicate(e.id);
        }
        let mut flags = Vec::new();
        let degree = match local_degree(&record, self.k) {
            Ok(d) => Some(d),
            Err(err) => {
                flags.push(err.to_string());
                None
            }
        };
        if record.classification == Classification::ReductionMax
            && !record.degenerate
            && record.morse_index != self.k
        {
            flags.push(format!(
                "reduction maximizer has Morse index {} instead of {}",
                record.morse_index, self.k
            ));
        }
        let inside_ball =
            record.h1_norm < self.radius || self.radius == 0.0 && record.h1_norm == 0.0;
        if !inside_ball {
            flags.push(format!(
                "H1 norm {:.6} outside the degree ball of radius {:.6}",
                record.h1_norm, self.radius
            ));
        }
        let id = self.entries.len();
        self.entries.push(LedgerEntry {
            id,
            record,
            degree,
            qualitative,
            inside_ball,
            also_found_by: Vec::new(),
            flags,
        });
        Admission::Added(id)
    }

    pub fn reconcile(&self, spectrum: &Spectrum) -> LedgerReport {
        let mut degree_sum = 0;
        let mut counted = 0;
        let mut excluded = Vec::new();
        for e in &self.entries {
            match (e.degree, e.inside_ball) {
                (Some(d), true) => {
                    degree_sum += d;
                    counted += 1;
                }
                (None, _) => excluded.push((e.id, "no local degree".to_string())),
                (Some(_), false) => excluded.push((e.id, "outside the degree ball".to_string())),
            }
        }
        let partial = self.entries.iter().any(|e| e.degree.is_none());
        let deficiency = self.global_degree - degree_sum;
        let nonconstant = self
            .entries
            .iter()
            .filter(|e| !e.qualitative.constant)
            .count();
        let conclusion = if deficiency == 0 {
            "balanced: the local degrees add up to the global degree".to_string()
        } else {
            format!(
                "deficiency {deficiency}: at least one undiscovered solution in the ball of radius {:.4}",
                self.radius
            )
        };
        let suggested_regions = if deficiency == 0 {
            Vec::new()
        } else {
            self.suggest_regions(spectrum)
        };
        LedgerReport {
            k: self.k,
            radius: self.radius,
            global_degree: self.global_degree,
            degree_sum,
            deficiency,
            counted,
            nonconstant,
            excluded,
            balanced: deficiency == 0,
            partial,
            conclusion,
            suggested_regions,
        }
    }

    /// Mirror images of nonconstant entries that are not in the ledger yet.
    /// Domain reflections map solutions to solutions, so each one is a
    /// candidate basin for a missing critical point.
    fn suggest_regions(&self, spectrum: &Spectrum) -> Vec<SuggestedRegion> {
        let mut out: Vec<SuggestedRegion> = Vec::new();
        for e in self.entries.iter().filter(|e| !e.qualitative.constant) {
            for image in spectrum.reflections(&e.record.u) {
                let known = self
                    .entries
                    .iter()
                    .any(|o| spectrum.h1_distance(&o.record.u, &image) <= self.dedup_radius)
                    || out
                        .iter()
                        .any(|r| spectrum.h1_distance(&r.center, &image) <= self.dedup_radius);
                if !known {
                    out.push(SuggestedRegion {
                        radius: 0.05 * (1.0 + e.record.h1_norm),
                        reason: format!("reflection of entry {} ({})", e.id, e.record.provenance),
                        center: image,
                    });
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::NonlinearityConfig;
    use crate::solvers::{find_constants, Provenance, SolverConfig};
    use crate::spectrum::{build_spectrum, Domain};
    use nalgebra::{DMatrix, DVector};
    use std::f64::consts::PI;

    fn ref5(n: usize) -> (Spectrum, NonlinearitySpec) {
        (
            build_spectrum(&Domain::interval(PI), n).unwrap(),
            NonlinearitySpec::build(&NonlinearityConfig::ref5()).unwrap(),
        )
    }

    #[test]
    fn constant_degrees() {
        let (s, f) = ref5(16);
        let j = EnergyFunctional::new(&s, f);
        let recs = find_constants(&j, &SolverConfig::default());
        let degrees: Vec<i32> = recs.iter().map(|r| local_degree(r, 2).unwrap()).collect();
        assert_eq!(degrees, vec![1, 1, 1, 1, 1]);
        assert_eq!(recs[1].morse_index, 0);
        assert_eq!(recs[2].morse_index, 2);
    }

    #[test]
    fn crossing_constant_passes_hess_kato() {
        let (s, f) = ref5(8);
        let j = EnergyFunctional::new(&s, f);
        let hs = j.hessian_spectrum(&s.constant_field(0.0));
        let r = hess_kato_check(&s, &hs, &ClassifierConfig::default());
        assert!(r.applicable && r.simple && r.sign_definite && r.passed);
        assert!((r.principal + 2.5).abs() < 1e-12);
    }

    #[test]
    fn positive_definite_is_not_applicable() {
        let (s, f) = ref5(8);
        let j = EnergyFunctional::new(&s, f);
        let hs = j.hessian_spectrum(&s.constant_field(1.0));
        let r = hess_kato_check(&s, &hs, &ClassifierConfig::default());
        assert!(!r.applicable && !r.passed);
    }

    #[test]
    fn square_double_eigenvalue_is_not_simple() {
        // Second derivative diag(lambda_j - a) with a = 1.5 on the unit-pi square:
        // modes (1,0) and (0,1) share the eigenvalue, and a shift pushes that
        // pair below the constant mode.
        let s = build_spectrum(&Domain::rectangle(PI, PI), 6).unwrap();
        let lam = s.eigenvalues();
        let mut a = DMatrix::from_diagonal(&DVector::from_iterator(6, lam.iter().map(|l| l - 1.5)));
        a[(1, 1)] -= 3.0;
        a[(2, 2)] -= 3.0;
        let hs = HessianSpectrum::from_second_derivative(&a, &s.h1_weights());
        assert!((hs.eigenvalues[0] - hs.eigenvalues[1]).abs() < 1e-12);
        let r = hess_kato_check(&s, &hs, &ClassifierConfig::default());
        assert!(r.applicable);
        assert!(!r.simple);
        assert!(!r.passed);
    }

    #[test]
    fn degenerate_unclassified_has_no_degree() {
        let (s, f) = ref5(8);
        let j = EnergyFunctional::new(&s, f);
        let mut r = find_constants(&j, &SolverConfig::default()).remove(0);
        r.degenerate = true;
        assert_eq!(
            local_degree(&r, 2),
            Err(LedgerError::UnclassifiedDegenerate)
        );
        r.classification = Classification::ReductionMax;
        assert_eq!(local_degree(&r, 2), Ok(1));
        r.classification = Classification::MpType;
        r.principal_simple_sign_definite = Some(true);
        assert_eq!(local_degree(&r, 2), Ok(-1));
    }

    #[test]
    fn range_escape() {
        let (s, f) = ref5(8);
        let j = EnergyFunctional::new(&s, f.clone());
        let g = f
            .truncate(TruncationKind::Interval {
                alpha: -1.0,
                beta: 1.0,
            })
            .unwrap();
        let jg = j.with_nonlinearity(g.clone());
        let mut u = s.constant_field(0.5);
        u.coeffs_mut()[1] = 0.8;
        let r = CriticalPointRecord::measure(
            &jg,
            u,
            Classification::Other,
            Provenance::MountainPass {
                truncation: g.truncation(),
            },
            1e-7,
        );
        assert!(r.range.1 > 1.0);
        let err =
            transfer_to_original(&r, &j, &g, &ClassifierConfig::default(), 1e-9, 1e-7).unwrap_err();
        assert!(matches!(err, LedgerError::RangeEscape { .. }));
    }

    #[test]
    fn constant_transfer_is_identity() {
        let (s, f) = ref5(8);
        let j = EnergyFunctional::new(&s, f.clone());
        let g = f.truncate(TruncationKind::Below { alpha: -1.0 }).unwrap();
        let jg = j.with_nonlinearity(g.clone());
        let r = CriticalPointRecord::measure(
            &jg,
            s.constant_field(-2.0),
            Classification::Constant,
            Provenance::Constant { value: -2.0 },
            1e-7,
        );
        let t = transfer_to_original(&r, &j, &g, &ClassifierConfig::default(), 1e-9, 1e-7).unwrap();
        // Primitives differ by a constant between the two, Hessians agree.
        assert_eq!(t.energy, j.value(&s.constant_field(-2.0)));
        assert_eq!(t.residual, r.residual);
        assert_eq!(t.hessian_eigs, r.hessian_eigs);
    }

    #[test]
    fn reconcile_constants_only() {
        let (s, f) = ref5(16);
        let j = EnergyFunctional::new(&s, f.clone());
        let mut ledger = DegreeLedger::new(2, 100.0, 1e-4);
        for r in find_constants(&j, &SolverConfig::default()) {
            ledger.admit(r, &s, &f, &ClassifierConfig::default());
        }
        let rep = ledger.reconcile(&s);
        assert_eq!(rep.degree_sum, 5);
        assert_eq!(rep.deficiency, -4);
        assert!(!rep.balanced);
        assert!(rep.suggested_regions.is_empty());
    }

    #[test]
    fn reconcile_with_three_mountain_passes() {
        let (s, f) = ref5(16);
        let j = EnergyFunctional::new(&s, f.clone());
        let mut ledger = DegreeLedger::new(2, 100.0, 1e-4);
        for r in find_constants(&j, &SolverConfig::default()) {
            ledger.admit(r, &s, &f, &ClassifierConfig::default());
        }
        for i in 0..3 {
            let mut r = find_constants(&j, &SolverConfig::default()).remove(0);
            r.u = s.constant_field(10.0 + i as f64);
            r.range = (-0.5 - 0.01 * i as f64, 0.5 + 0.01 * i as f64);
            r.classification = Classification::MpType;
            r.principal_simple_sign_definite = Some(true);
            r.h1_norm = 1.0;
            ledger.admit(r, &s, &f, &ClassifierConfig::default());
        }
        let rep = ledger.reconcile(&s);
        assert_eq!(rep.degree_sum, 2);
        assert_eq!(rep.deficiency, -1);
    }

    #[test]
    fn duplicates_merge() {
        let (s, f) = ref5(8);
        let j = EnergyFunctional::new(&s, f.clone());
        let mut ledger = DegreeLedger::new(2, 100.0, 1e-4);
        let r = find_constants(&j, &SolverConfig::default()).remove(1);
        assert_eq!(
            ledger.admit(r.clone(), &s, &f, &ClassifierConfig::default()),
            Admission::Added(0)
        );
        assert_eq!(
            ledger.admit(r, &s, &f, &ClassifierConfig::default()),
            Admission::Duplicate(0)
        );
        assert_eq!(ledger.entries[0].also_found_by.len(), 1);
    }
}
