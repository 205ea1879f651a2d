use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use neumann_core::config::{parse_stages, RunConfig};
use neumann_core::pipeline::{load_report, run_pipeline_with, PipelineError, RunReport};
use neumann_core::report::{profiles_svg, summary_csv, write_artifacts};
use neumann_core::spectrum::build_spectrum;

const EXIT_CONFIG: u8 = 1;
const EXIT_STAGE: u8 = 2;
const EXIT_DEFICIENCY: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "neumann",
    version,
    about = "Critical points of -Δu = f(u) with Neumann boundary conditions"
)]
struct Cli {
    /// Run configuration (JSON); the five-zero reference instance when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory receiving report.json, summary.csv and profiles.svg.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides solver.rng_seed.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,
    /// Overrides domain.modes.
    #[arg(long, global = true, value_name = "INT")]
    modes: Option<usize>,
    /// Machine-readable output on stdout instead of the text summary.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Stages to run, e.g. `2-5,7`; overrides the subcommand's default set.
    #[arg(long, global = true, value_name = "LIST")]
    stage: Option<String>,
    /// Exit with status 3 when the degree deficiency stays nonzero.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the eigenvalues and the splitting at f'(+inf).
    Spectrum,
    /// Check the hypotheses on f against the spectrum.
    Check,
    /// Constants, truncated mountain passes and the homotopy bound (stages 2 to 5).
    Solve,
    /// Maximize the reduced functional (stage 6).
    Reduce {
        /// Earlier report supplying the homotopy radius.
        #[arg(long, value_name = "PATH")]
        report: Option<PathBuf>,
    },
    /// Degree ledger and deficiency search (stages 7 and 8).
    Ledger {
        /// Earlier report whose solutions are reconciled; stages 2 to 6 run when omitted.
        #[arg(long, value_name = "PATH")]
        report: Option<PathBuf>,
    },
    /// The full pipeline.
    Run,
    /// Draw solution profiles from a report as SVG.
    Plot {
        #[arg(long, value_name = "PATH")]
        report: PathBuf,
    },
}

enum Failure {
    Config(String),
    Stage(String, Box<RunReport>),
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_path(path).map_err(|e| Failure::Config(e.to_string()))?,
        None => RunConfig::ref5(),
    };
    if let Some(seed) = cli.seed {
        cfg.solver.rng_seed = seed;
    }
    if let Some(modes) = cli.modes {
        cfg.domain.modes = modes;
    }
    // Artifacts are written here rather than by stage 9.
    cfg.output.dir = None;
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(cfg)
}

fn pipeline_error(err: PipelineError) -> Failure {
    match err {
        PipelineError::Stage {
            report,
            message,
            stage,
            ..
        } => Failure::Stage(format!("stage {stage} failed: {message}"), report),
        other => Failure::Config(other.to_string()),
    }
}

fn text_summary(report: &RunReport) -> String {
    let mut out = String::new();
    for s in &report.stages {
        let status = serde_json::to_value(&s.status)
            .ok()
            .and_then(|v| v.get("status").and_then(|x| x.as_str()).map(str::to_string))
            .unwrap_or_default();
        out.push_str(&format!(
            "stage {} {:<22} {:<13} {:>8.3}s  {} record(s)\n",
            s.stage,
            s.name,
            status,
            s.seconds,
            s.records.len()
        ));
    }
    if let Some(r) = report.radius {
        out.push_str(&format!("radius R = {r:.6}\n"));
    }
    if let Some(l) = &report.ledger {
        out.push_str("ledger:\n");
        for e in &l.entries {
            let degree = e.degree.map_or("-".to_string(), |d| format!("{d:+}"));
            out.push_str(&format!(
                "  #{:<2} {:<34} J = {:>12.6}  index {}  degree {:>2}  range [{:.4}, {:.4}]\n",
                e.id,
                e.record.provenance.to_string(),
                e.record.energy,
                e.record.morse_index,
                degree,
                e.record.range.0,
                e.record.range.1
            ));
        }
    }
    if let Some(r) = &report.reconciliation {
        out.push_str(&format!(
            "degree sum {} vs global degree {}: {}\n",
            r.degree_sum, r.global_degree, r.conclusion
        ));
    }
    for w in &report.warnings {
        out.push_str(&format!("warning: {w}\n"));
    }
    for e in &report.errors {
        out.push_str(&format!("error: {e}\n"));
    }
    out
}

fn emit(cli: &Cli, report: &RunReport) -> Result<(), Failure> {
    match cli.format {
        Some(Format::Json) => println!("{}", report.to_json()),
        Some(Format::Csv) => print!(
            "{}",
            summary_csv(report).map_err(|e| Failure::Config(e.to_string()))?
        ),
        None => print!("{}", text_summary(report)),
    }
    if let Some(dir) = &cli.out {
        let paths = write_artifacts(report, dir).map_err(|e| Failure::Config(e.to_string()))?;
        for p in paths {
            log::info!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn read_report(path: &Path) -> Result<RunReport, Failure> {
    load_report(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn pipeline(
    cli: &Cli,
    default_stages: &[u8],
    prior: Option<&RunReport>,
) -> Result<RunReport, Failure> {
    let mut cfg = load_config(cli)?;
    cfg.stages = match &cli.stage {
        Some(list) => parse_stages(list).map_err(|e| Failure::Config(e.to_string()))?,
        None => default_stages.to_vec(),
    };
    let report = run_pipeline_with(&cfg, prior).map_err(pipeline_error)?;
    emit(cli, &report)?;
    Ok(report)
}

fn spectrum(cli: &Cli) -> Result<(), Failure> {
    let cfg = load_config(cli)?;
    let s = build_spectrum(&cfg.domain.domain(), cfg.domain.modes)
        .map_err(|e| Failure::Config(e.to_string()))?;
    let slope = cfg.nonlinearity.slope_plus_inf;
    let k = s.count_below(slope);
    match cli.format {
        Some(Format::Json) => {
            let value = serde_json::json!({
                "eigenvalues": s.eigenvalues(),
                "modes": s.pairs().iter().map(|p| p.mode.clone()).collect::<Vec<_>>(),
                "slope": slope,
                "k": k,
            });
            println!("{}", serde_json::to_string_pretty(&value).expect("json"));
        }
        Some(Format::Csv) => {
            println!("index,eigenvalue,mode");
            for p in s.pairs() {
                let mode: Vec<String> = p.mode.iter().map(usize::to_string).collect();
                println!("{},{},{}", p.index, p.eigenvalue, mode.join(" "));
            }
        }
        None => {
            for p in s.pairs() {
                println!("{:>3}  {:<24}  {:?}", p.index, p.eigenvalue, p.mode);
            }
            println!("{k} eigenvalue(s) below f'(+inf) = {slope}");
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<Option<RunReport>, Failure> {
    match &cli.command {
        Command::Spectrum => spectrum(cli).map(|_| None),
        Command::Check => pipeline(cli, &[1], None).map(Some),
        Command::Solve => pipeline(cli, &[2, 3, 4, 5], None).map(Some),
        Command::Reduce { report } => {
            let prior = report.as_deref().map(read_report).transpose()?;
            pipeline(cli, &[6], prior.as_ref()).map(Some)
        }
        Command::Ledger { report } => {
            let prior = report.as_deref().map(read_report).transpose()?;
            let stages: &[u8] = if prior.is_some() {
                &[7, 8]
            } else {
                &[2, 3, 4, 5, 6, 7, 8]
            };
            pipeline(cli, stages, prior.as_ref()).map(Some)
        }
        Command::Run => pipeline(cli, &[1, 2, 3, 4, 5, 6, 7, 8, 9], None).map(Some),
        Command::Plot { report } => {
            let report = read_report(report)?;
            let cfg = &report.config.domain;
            let s = build_spectrum(&cfg.domain(), cfg.modes)
                .map_err(|e| Failure::Config(e.to_string()))?;
            let svg = profiles_svg(&report, &s);
            match &cli.out {
                Some(dir) => {
                    std::fs::create_dir_all(dir).map_err(|e| Failure::Config(e.to_string()))?;
                    let path = dir.join(&report.config.output.plot);
                    std::fs::write(&path, svg)
                        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
                }
                None => print!("{svg}"),
            }
            Ok(None)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(Some(report)) if cli.strict && report.deficiency().is_some_and(|d| d != 0) => {
            eprintln!(
                "unresolved degree deficiency {}",
                report.deficiency().unwrap_or(0)
            );
            ExitCode::from(EXIT_DEFICIENCY)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(Failure::Config(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Stage(message, report)) => {
            let _ = emit(&cli, &report);
            eprintln!("error: {message}");
            ExitCode::from(EXIT_STAGE)
        }
    }
}
