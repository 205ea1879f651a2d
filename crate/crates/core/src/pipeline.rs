//! The nine-stage experiment: spectrum, constants, truncated mountain passes,
//! homotopy bound, reduction, degree ledger, deficiency-driven search and
//! report emission.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig, SCHEMA_VERSION};
use crate::energy::EnergyFunctional;
use crate::ledger::{transfer_to_original, DegreeLedger, LedgerReport};
use crate::nonlinearity::{
    check_hypotheses, HypothesisReport, NonlinearitySpec, TruncationKind, ZeroKind,
};
use crate::reduction::{maximize_reduced, ReductionContext, ReductionError, ReductionOutcome};
use crate::solvers::{
    default_search_radius, find_constants, homotopy_bound, mountain_pass, multistart_budgeted,
    multistart_from, CriticalPointRecord, HomotopyBound, Provenance,
};
use crate::spectrum::{build_spectrum, Spectrum};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const STAGE_NAMES: [&str; 9] = [
    "spectrum",
    "constants",
    "one-sided truncations",
    "interval truncations",
    "homotopy bound",
    "reduction",
    "ledger",
    "deficiency search",
    "report",
];

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("stage {stage} ({name}) failed: {message}")]
    Stage {
        stage: u8,
        name: &'static str,
        message: String,
        /// Everything computed before the failure.
        report: Box<RunReport>,
    },
    #[error("cannot write report: {0}")]
    Output(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum StageStatus {
    Completed,
    Skipped {
        reason: String,
    },
    /// Taken from an earlier report instead of being recomputed.
    Reused,
    Failed {
        error: String,
    },
    NotRequested,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageOutcome {
    pub stage: u8,
    pub name: String,
    #[serde(flatten)]
    pub status: StageStatus,
    pub seconds: f64,
    /// Records produced by the stage, measured under the original functional.
    #[serde(default)]
    pub records: Vec<CriticalPointRecord>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub eigenvalues: Vec<f64>,
    pub k: usize,
    pub x_indices: Vec<usize>,
    pub y_indices: Vec<usize>,
    pub lambda_min_y: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSummary {
    pub region_seeds: usize,
    pub random_starts: usize,
    pub batches: usize,
    pub added: usize,
    pub resolved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub artifact_version: String,
    pub schema_version: u32,
    pub config: RunConfig,
    pub hypotheses: Option<HypothesisReport>,
    pub spectrum: Option<SpectrumSummary>,
    pub stages: Vec<StageOutcome>,
    /// Radius of the ball used for the degree count and random search.
    pub radius: Option<f64>,
    pub homotopy: Option<HomotopyBound>,
    pub reduction: Option<ReductionOutcome>,
    pub ledger: Option<DegreeLedger>,
    /// Reconciliation right after stage 7.
    pub initial_reconciliation: Option<LedgerReport>,
    /// Reconciliation after the deficiency search.
    pub reconciliation: Option<LedgerReport>,
    pub search: Option<SearchSummary>,
    pub warnings: Vec<String>,
    pub errors: Vec<String>,
    pub total_seconds: f64,
}

impl RunReport {
    fn new(config: &RunConfig) -> Self {
        Self {
            artifact_version: ARTIFACT_VERSION.to_string(),
            schema_version: SCHEMA_VERSION,
            config: config.clone(),
            hypotheses: None,
            spectrum: None,
            stages: Vec::new(),
            radius: None,
            homotopy: None,
            reduction: None,
            ledger: None,
            initial_reconciliation: None,
            reconciliation: None,
            search: None,
            warnings: Vec::new(),
            errors: Vec::new(),
            total_seconds: 0.0,
        }
    }

    pub fn stage(&self, stage: u8) -> Option<&StageOutcome> {
        self.stages.iter().find(|s| s.stage == stage)
    }

    /// Records of stages 2 to 6, in stage order.
    pub fn solution_records(&self) -> Vec<&CriticalPointRecord> {
        self.stages
            .iter()
            .filter(|s| (2..=6).contains(&s.stage))
            .flat_map(|s| s.records.iter())
            .collect()
    }

    /// Deficiency after the last reconciliation.
    pub fn deficiency(&self) -> Option<i32> {
        self.reconciliation
            .as_ref()
            .or(self.initial_reconciliation.as_ref())
            .map(|r| r.deficiency)
    }

    /// Copy with every timing zeroed, for comparing runs.
    pub fn without_timings(&self) -> Self {
        let mut out = self.clone();
        out.total_seconds = 0.0;
        for s in &mut out.stages {
            s.seconds = 0.0;
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

type StageResult = Result<(Vec<CriticalPointRecord>, Vec<String>), String>;

struct Runner<'a> {
    config: &'a RunConfig,
    prior: Option<&'a RunReport>,
    report: RunReport,
    started: Instant,
}

impl Runner<'_> {
    /// Runs, reuses or skips one stage and records the outcome.
    fn stage(
        &mut self,
        stage: u8,
        body: impl FnOnce(&mut RunReport) -> StageResult,
    ) -> Result<(), PipelineError> {
        let name = STAGE_NAMES[stage as usize - 1];
        if !self.config.runs(stage) {
            let reused = self
                .prior
                .and_then(|p| p.stage(stage))
                .filter(|s| matches!(s.status, StageStatus::Completed | StageStatus::Reused));
            let outcome = match reused {
                Some(s) => StageOutcome {
                    status: StageStatus::Reused,
                    seconds: 0.0,
                    ..s.clone()
                },
                None => StageOutcome {
                    stage,
                    name: name.to_string(),
                    status: StageStatus::NotRequested,
                    seconds: 0.0,
                    records: Vec::new(),
                    warnings: Vec::new(),
                },
            };
            self.report.stages.push(outcome);
            return Ok(());
        }
        let t0 = Instant::now();
        log::info!("stage {stage}: {name}");
        let result = body(&mut self.report);
        let seconds = t0.elapsed().as_secs_f64();
        match result {
            Ok((records, warnings)) => {
                self.report
                    .warnings
                    .extend(warnings.iter().map(|w| format!("stage {stage}: {w}")));
                self.report.stages.push(StageOutcome {
                    stage,
                    name: name.to_string(),
                    status: StageStatus::Completed,
                    seconds,
                    records,
                    warnings,
                });
                Ok(())
            }
            Err(message) => {
                self.report.errors.push(format!("stage {stage}: {message}"));
                self.report.stages.push(StageOutcome {
                    stage,
                    name: name.to_string(),
                    status: StageStatus::Failed {
                        error: message.clone(),
                    },
                    seconds,
                    records: Vec::new(),
                    warnings: Vec::new(),
                });
                self.report.total_seconds = self.started.elapsed().as_secs_f64();
                Err(PipelineError::Stage {
                    stage,
                    name,
                    message,
                    report: Box::new(self.report.clone()),
                })
            }
        }
    }

    fn skip(&mut self, stage: u8, reason: String) {
        self.report
            .warnings
            .push(format!("stage {stage} skipped: {reason}"));
        self.report.stages.push(StageOutcome {
            stage,
            name: STAGE_NAMES[stage as usize - 1].to_string(),
            status: StageStatus::Skipped { reason },
            seconds: 0.0,
            records: Vec::new(),
            warnings: Vec::new(),
        });
    }

    fn records(&self, stage: u8) -> Vec<CriticalPointRecord> {
        self.report
            .stage(stage)
            .map(|s| s.records.clone())
            .unwrap_or_default()
    }
}

/// Mountain pass of the truncated problem between two constants, transferred
/// back to the original functional.
fn truncated_pass(
    original: &EnergyFunctional<'_>,
    kind: TruncationKind,
    ends: (f64, f64),
    config: &RunConfig,
) -> Result<CriticalPointRecord, String> {
    let spectrum = original.spectrum();
    let truncated = original
        .nonlinearity()
        .truncate(kind)
        .map_err(|e| e.to_string())?;
    let energy = original.with_nonlinearity(truncated.clone());
    let record = mountain_pass(
        &energy,
        &spectrum.constant_field(ends.0),
        &spectrum.constant_field(ends.1),
        &config.solver,
        &config.ledger.classifier,
    )
    .map_err(|e| format!("mountain pass for {kind:?}: {e}"))?;
    transfer_to_original(
        &record,
        original,
        &truncated,
        &config.ledger.classifier,
        config.solver.grad_tol,
        config.solver.degeneracy_tol,
    )
    .map_err(|e| format!("transfer of mountain pass for {kind:?}: {e}"))
}

fn minimum_zeros(hypotheses: &HypothesisReport) -> Vec<f64> {
    hypotheses
        .zeros
        .iter()
        .filter(|z| z.kind == ZeroKind::MinimumType)
        .map(|z| z.t)
        .collect()
}

/// Runs the stages selected by `config`.
pub fn run_pipeline(config: &RunConfig) -> Result<RunReport, PipelineError> {
    run_pipeline_with(config, None)
}

/// Like [`run_pipeline`], but stages that are not selected are taken from
/// `prior` when it has them.
pub fn run_pipeline_with(
    config: &RunConfig,
    prior: Option<&RunReport>,
) -> Result<RunReport, PipelineError> {
    config.validate()?;
    let spec = NonlinearitySpec::build(&config.nonlinearity)
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let mut runner = Runner {
        config,
        prior,
        report: RunReport::new(config),
        started: Instant::now(),
    };

    let mut spectrum: Option<Spectrum> = None;
    runner.stage(1, |report| {
        let s = build_spectrum(&config.domain.domain(), config.domain.modes)
            .map_err(|e| e.to_string())?;
        let hyp = check_hypotheses(&spec, &s);
        let warnings = hyp.diagnostics.clone();
        report.hypotheses = Some(hyp);
        let slope = spec.slope_plus_inf();
        let k = s.count_below(slope);
        let split = s.split(slope).map_err(|e| format!("ResonantSlope: {e}"))?;
        s.check_nonresonant(spec.slope_minus_inf())
            .map_err(|e| format!("ResonantSlope: {e}"))?;
        report.spectrum = Some(SpectrumSummary {
            eigenvalues: s.eigenvalues(),
            k,
            lambda_min_y: split.lambda_min_y(&s),
            x_indices: split.x_indices,
            y_indices: split.y_indices,
        });
        spectrum = Some(s);
        Ok((Vec::new(), warnings))
    })?;
    let spectrum = spectrum.expect("stage 1 sets the spectrum");
    let energy = EnergyFunctional::new(&spectrum, spec.clone());
    let hypotheses = runner
        .report
        .hypotheses
        .clone()
        .expect("stage 1 sets hypotheses");
    let k = runner.report.spectrum.as_ref().map(|s| s.k).unwrap_or(0);

    runner.stage(2, |_| {
        Ok((find_constants(&energy, &config.solver), Vec::new()))
    })?;

    let minima = minimum_zeros(&hypotheses);
    runner.stage(3, |_| {
        let (Some(&first), Some(&last)) = (minima.first(), minima.last()) else {
            return Ok((
                Vec::new(),
                vec!["no minimum-type zero; nothing to truncate".into()],
            ));
        };
        let offset = config.solver.mp_offset;
        let below = truncated_pass(
            &energy,
            TruncationKind::Below { alpha: first },
            (first, first - offset),
            config,
        )?;
        let above = truncated_pass(
            &energy,
            TruncationKind::Above { alpha: last },
            (last, last + offset),
            config,
        )?;
        Ok((vec![below, above], Vec::new()))
    })?;

    runner.stage(4, |_| {
        let mut out = Vec::new();
        for pair in minima.windows(2) {
            let (alpha, beta) = (pair[0], pair[1]);
            out.push(truncated_pass(
                &energy,
                TruncationKind::Interval { alpha, beta },
                (alpha, beta),
                config,
            )?);
        }
        let warnings = if out.is_empty() {
            vec!["fewer than two minimum-type zeros; no interval truncation".into()]
        } else {
            Vec::new()
        };
        Ok((out, warnings))
    })?;

    let search_radius = config
        .solver
        .search_radius
        .unwrap_or_else(|| default_search_radius(&spec, &spectrum));
    runner.stage(5, |report| {
        let mut warnings = Vec::new();
        match spec.symmetric_slope() {
            Ok(_) => {
                let bound =
                    homotopy_bound(&spec, &spectrum, &config.solver.lambda_grid, &config.solver)
                        .map_err(|e| e.to_string())?;
                report.radius = Some(bound.radius);
                report.homotopy = Some(bound);
            }
            Err(e) => {
                warnings.push(format!(
                    "{e}; using the search radius {search_radius:.4} instead"
                ));
                report.radius = Some(search_radius);
            }
        }
        Ok((Vec::new(), warnings))
    })?;
    if runner.report.radius.is_none() {
        runner.report.radius = prior
            .filter(|_| !config.runs(5))
            .and_then(|p| p.radius)
            .or(Some(search_radius));
        if let Some(p) = prior.filter(|_| !config.runs(5)) {
            runner.report.homotopy = p.homotopy.clone();
        }
    }
    let radius = runner.report.radius.expect("radius is set");
    // The degree ball must contain everything the search can reach.
    let ball = radius.max(search_radius);

    if config.runs(6) && !hypotheses.reduction_applies {
        let err = ReductionError::Inapplicable {
            gamma: hypotheses.gamma,
            lambda_min_y: hypotheses.lambda_min_y,
        };
        runner.skip(6, err.to_string());
    } else {
        runner.stage(6, |report| {
            let ctx = ReductionContext::new(&energy, config.reduction.clone())
                .map_err(|e| e.to_string())?;
            let outcome =
                maximize_reduced(&ctx, &config.solver, radius).map_err(|e| e.to_string())?;
            let warnings = outcome.warnings.clone();
            let record = outcome.record.clone();
            report.reduction = Some(outcome);
            Ok((vec![record], warnings))
        })?;
        if !config.runs(6) {
            runner.report.reduction = prior.and_then(|p| p.reduction.clone());
        }
    }

    let found: Vec<CriticalPointRecord> = (2..=6).flat_map(|s| runner.records(s)).collect();
    let mut ledger: Option<DegreeLedger> = None;
    runner.stage(7, |report| {
        let mut l = DegreeLedger::new(k, ball, config.solver.dedup_radius);
        for r in found {
            l.admit(r, &spectrum, &spec, &config.ledger.classifier);
        }
        let rec = l.reconcile(&spectrum);
        let warnings = if rec.partial {
            vec!["some records have no local degree; the count is partial".into()]
        } else {
            Vec::new()
        };
        report.initial_reconciliation = Some(rec.clone());
        report.reconciliation = Some(rec);
        ledger = Some(l.clone());
        report.ledger = Some(l);
        Ok((Vec::new(), warnings))
    })?;

    if let Some(p) = prior.filter(|_| !config.runs(7)) {
        ledger = p.ledger.clone();
        runner.report.ledger = p.ledger.clone();
        runner.report.initial_reconciliation = p.initial_reconciliation.clone();
        runner.report.reconciliation = p.reconciliation.clone();
    }

    let initial_deficiency = runner.report.reconciliation.as_ref().map(|r| r.deficiency);
    match (ledger.as_mut(), initial_deficiency) {
        (Some(l), Some(d)) if d != 0 => {
            runner.stage(8, |report| {
                let (summary, added) = deficiency_search(l, &energy, config, ball);
                report.reconciliation = Some(l.reconcile(&spectrum));
                report.ledger = Some(l.clone());
                report.search = Some(summary);
                Ok((added, Vec::new()))
            })?;
        }
        (Some(_), Some(_)) if config.runs(8) => runner.skip(8, "deficiency is already zero".into()),
        _ if config.runs(8) => runner.skip(8, "no ledger to reconcile".into()),
        _ => runner.stage(8, |_| Ok((Vec::new(), Vec::new())))?,
    }

    runner.stage(9, |report| {
        if let Some(dir) = &config.output.dir {
            crate::report::write_artifacts(report, dir).map_err(|e| e.to_string())?;
        }
        Ok((Vec::new(), Vec::new()))
    })?;

    runner.report.total_seconds = runner.started.elapsed().as_secs_f64();
    Ok(runner.report)
}

/// Seeds from the ledger's suggested regions, then random batches until the
/// budget is spent or the deficiency vanishes. Returns the search summary
/// and the records that were added.
fn deficiency_search(
    ledger: &mut DegreeLedger,
    energy: &EnergyFunctional<'_>,
    config: &RunConfig,
    radius: f64,
) -> (SearchSummary, Vec<CriticalPointRecord>) {
    let spectrum = energy.spectrum();
    let spec = energy.nonlinearity();
    let classifier = &config.ledger.classifier;
    let mut added = Vec::new();
    let mut admit_all = |ledger: &mut DegreeLedger, records: Vec<CriticalPointRecord>| {
        for r in records {
            if let crate::ledger::Admission::Added(id) = ledger.admit(r, spectrum, spec, classifier)
            {
                added.push(ledger.entries[id].record.clone());
            }
        }
        ledger.reconcile(spectrum).deficiency == 0
    };

    let seeds: Vec<_> = ledger
        .reconcile(spectrum)
        .suggested_regions
        .into_iter()
        .map(|r| r.center)
        .collect();
    let region_seeds = seeds.len();
    let mut resolved = admit_all(
        ledger,
        multistart_from(
            energy,
            &seeds,
            &config.solver,
            Provenance::Multistart { batch: 0 },
        ),
    );

    let budget = config.ledger.stage8_budget;
    let batch_size = config.solver.batch_size;
    let mut used = 0;
    let mut batches = 0;
    while !resolved && used < budget {
        let n = batch_size.min(budget - used);
        batches += 1;
        let records = multistart_budgeted(energy, &config.solver, radius, batches, n);
        used += n;
        resolved = admit_all(ledger, records);
    }
    (
        SearchSummary {
            region_seeds,
            random_starts: used,
            batches,
            added: added.len(),
            resolved,
        },
        added,
    )
}

/// Reads a report written by an earlier run.
pub fn load_report(path: &Path) -> Result<RunReport, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        PipelineError::Config(ConfigError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })?;
    RunReport::from_json(&text).map_err(|e| PipelineError::Config(ConfigError::Parse(e)))
}
