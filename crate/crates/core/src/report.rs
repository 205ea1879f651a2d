//! Report artifacts: pretty JSON, a one-row-per-record CSV summary and a
//! standalone SVG plot of the solution profiles.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::pipeline::RunReport;
use crate::solvers::CriticalPointRecord;
use crate::spectrum::{build_spectrum, DomainKind, Spectrum};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot rebuild the spectrum: {0}")]
    Spectrum(#[from] crate::spectrum::SpectrumError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub id: usize,
    pub provenance: String,
    pub energy: f64,
    pub index: usize,
    /// Empty when the record has no local degree.
    pub degree: Option<i32>,
    pub min_u: f64,
    pub max_u: f64,
    pub residual: f64,
}

/// Ledger entries when there is a ledger, otherwise every stage record.
pub fn summary_rows(report: &RunReport) -> Vec<SummaryRow> {
    let row = |id, r: &CriticalPointRecord, degree| SummaryRow {
        id,
        provenance: r.provenance.to_string(),
        energy: r.energy,
        index: r.morse_index,
        degree,
        min_u: r.range.0,
        max_u: r.range.1,
        residual: r.residual,
    };
    match &report.ledger {
        Some(l) => l
            .entries
            .iter()
            .map(|e| row(e.id, &e.record, e.degree))
            .collect(),
        None => report
            .solution_records()
            .into_iter()
            .enumerate()
            .map(|(i, r)| row(i, r, None))
            .collect(),
    }
}

pub fn summary_csv(report: &RunReport) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in summary_rows(report) {
        w.serialize(row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Records drawn in the profile plot, with their legend labels.
fn plotted(report: &RunReport) -> Vec<(String, &CriticalPointRecord)> {
    match &report.ledger {
        Some(l) => l
            .entries
            .iter()
            .map(|e| (format!("#{} {}", e.id, e.record.provenance), &e.record))
            .collect(),
        None => report
            .solution_records()
            .into_iter()
            .enumerate()
            .map(|(i, r)| (format!("#{i} {}", r.provenance), r))
            .collect(),
    }
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// SVG with one polyline per record. Rectangles are sampled along the
/// diagonal from the origin to the opposite corner.
pub fn profiles_svg(report: &RunReport, spectrum: &Spectrum) -> String {
    const W: f64 = 800.0;
    const H: f64 = 480.0;
    const LEFT: f64 = 60.0;
    const RIGHT: f64 = 260.0;
    const TOP: f64 = 30.0;
    const BOTTOM: f64 = 50.0;
    const SAMPLES: usize = 201;

    let domain = spectrum.domain();
    let diagonal = domain.kind == DomainKind::Rectangle;
    let span = if diagonal {
        domain.lengths.iter().map(|l| l * l).sum::<f64>().sqrt()
    } else {
        domain.lengths[0]
    };
    let records = plotted(report);
    let curves: Vec<Vec<(f64, f64)>> = records
        .iter()
        .map(|(_, r)| {
            (0..SAMPLES)
                .map(|i| {
                    let s = i as f64 / (SAMPLES - 1) as f64;
                    let point: Vec<f64> = domain.lengths.iter().map(|l| s * l).collect();
                    (s * span, spectrum.value_at(&r.u, &point))
                })
                .collect()
        })
        .collect();
    let (mut lo, mut hi) = curves
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(_, v)| {
            (a.min(v), b.max(v))
        });
    if !lo.is_finite() {
        (lo, hi) = (-1.0, 1.0);
    }
    if hi - lo < 1e-9 {
        lo -= 1.0;
        hi += 1.0;
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let px = |x: f64| LEFT + (W - LEFT - RIGHT) * x / span;
    let py = |v: f64| TOP + (H - TOP - BOTTOM) * (hi - v) / (hi - lo);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
    for i in 0..=4 {
        let v = lo + (hi - lo) * i as f64 / 4.0;
        let y = py(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.1}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.1}" y="{:.2}" text-anchor="end">{v:.2}</text>"##,
            W - RIGHT,
            LEFT - 6.0,
            y + 4.0
        );
        let x = span * i as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.1}" text-anchor="middle">{x:.3}</text>"#,
            px(x),
            H - BOTTOM + 18.0
        );
    }
    let axis = if diagonal {
        "distance along the diagonal"
    } else {
        "x"
    };
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{axis}</text>"#,
        LEFT + 0.5 * (W - LEFT - RIGHT),
        H - 10.0
    );
    let _ = writeln!(svg, r#"<text x="{LEFT}" y="18">u</text>"#);
    for (i, ((label, _), curve)) in records.iter().zip(&curves).enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = curve
            .iter()
            .map(|&(x, v)| format!("{:.2},{:.2}", px(x), py(v)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        let ly = TOP + 10.0 + 16.0 * i as f64;
        let lx = W - RIGHT + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{colour}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 18.0,
            lx + 24.0,
            ly + 4.0,
            escape(label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn write(path: PathBuf, contents: &str) -> Result<(), ReportError> {
    std::fs::write(&path, contents).map_err(|source| ReportError::Io { path, source })
}

/// Writes the JSON report, CSV summary and SVG plot into `dir`.
pub fn write_artifacts(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    std::fs::create_dir_all(dir).map_err(|source| ReportError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let out = &report.config.output;
    let spectrum = build_spectrum(&report.config.domain.domain(), report.config.domain.modes)?;
    let paths = vec![
        dir.join(&out.report),
        dir.join(&out.summary),
        dir.join(&out.plot),
    ];
    write(paths[0].clone(), &report.to_json())?;
    write(paths[1].clone(), &summary_csv(report)?)?;
    write(paths[2].clone(), &profiles_svg(report, &spectrum))?;
    Ok(paths)
}
