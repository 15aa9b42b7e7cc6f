//! `sqt`: simulate, reconstruct, study and render single-qubit tomography runs.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.
//! Failures print a single JSON object `{"error": {...}}` on stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use sqt_core::io::{parse_noise, parse_style, read_scan, to_json, RecordFile};
use sqt_core::measurement::{CatalogName, PvmCatalog};
use sqt_core::reconstruction::Estimator;
use sqt_core::scan::{compare_estimators, run_scan, DEFAULT_FLAG_THRESHOLD};
use sqt_core::study::{self, StateSelection, StudyMode};
use sqt_core::viz::{render_vfv, RenderWarning, VfvStyle};
use sqt_core::{Error, NoiseSpec, ScanConfig, ScanResult, StudyConfig};

#[derive(Parser)]
#[command(
    name = "sqt",
    version,
    about = "Single-qubit state tomography experiments"
)]
struct Cli {
    /// Worker threads for scans and studies (default: all cores).
    #[arg(long, global = true, env = "SQT_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate and reconstruct a Fibonacci lattice of states.
    Scan(ScanArgs),
    /// Reconstruct states from a record file.
    Reconstruct(ReconstructArgs),
    /// Monte Carlo study of reconstruction error or estimator agreement.
    Study(StudyArgs),
    /// Render a scan as a vector field visualisation (SVG).
    Render(RenderArgs),
    /// Flag rows where MLE and LR reconstructions disagree.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CatalogArg {
    Tetrahedral,
    Pauli,
}

impl CatalogArg {
    fn catalog(self) -> Result<PvmCatalog, Error> {
        PvmCatalog::by_name(match self {
            CatalogArg::Tetrahedral => CatalogName::Tetrahedral,
            CatalogArg::Pauli => CatalogName::Pauli,
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Mle,
    Lr,
    Both,
}

impl EstimatorArg {
    fn estimators(self) -> Vec<Estimator> {
        match self {
            EstimatorArg::Mle => vec![Estimator::Mle],
            EstimatorArg::Lr => vec![Estimator::Lr],
            EstimatorArg::Both => vec![Estimator::Mle, Estimator::Lr],
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Error,
    Agreement,
}

#[derive(Args)]
struct Simulation {
    /// Shots per measurement basis.
    #[arg(long, default_value_t = 20_000)]
    shots: u64,
    #[arg(long, value_enum, default_value = "tetrahedral")]
    catalog: CatalogArg,
    /// Noise model as inline JSON or a path to a JSON file.
    #[arg(long)]
    noise: Option<String>,
    /// Master seed for all sampling.
    #[arg(long, env = "SQT_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "both")]
    estimator: EstimatorArg,
}

impl Simulation {
    fn noise(&self) -> Result<NoiseSpec, Error> {
        self.noise
            .as_deref()
            .map_or(Ok(NoiseSpec::default()), parse_noise)
    }
}

#[derive(Args)]
struct ScanArgs {
    /// Number of lattice states.
    #[arg(long, default_value_t = 200)]
    states: usize,
    /// Idle time before measurement, in units of dt (needs t1 and t2).
    #[arg(long, default_value_t = 0.0)]
    delay: f64,
    #[command(flatten)]
    sim: Simulation,
    /// Output JSON (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Record file.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    estimator: EstimatorArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StudyArgs {
    #[arg(long, value_enum, default_value = "error")]
    mode: ModeArg,
    #[arg(long, default_value_t = 2_000)]
    trials: usize,
    /// Number of lattice states.
    #[arg(long, default_value_t = 20)]
    states: usize,
    /// Quantile reported per state.
    #[arg(long, default_value_t = 0.99)]
    percentile: f64,
    #[command(flatten)]
    sim: Simulation,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    /// Scan JSON.
    #[arg(long = "in")]
    input: PathBuf,
    /// Style as inline JSON, a JSON file, or `defaults`.
    #[arg(long, default_value = "defaults")]
    style: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Scan JSON carrying both estimators.
    #[arg(long = "in")]
    input: PathBuf,
    /// Flag rows whose Bloch-vector norms differ by more than this.
    #[arg(long, default_value_t = DEFAULT_FLAG_THRESHOLD)]
    threshold: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also render the flagged rows as SVG.
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long, default_value = "defaults")]
    style: String,
}

/// A fully validated command, ready to run.
enum Job {
    Scan(ScanConfig, Option<PathBuf>),
    Reconstruct(RecordFile, Vec<Estimator>, Option<PathBuf>),
    Study(StudyConfig, Option<PathBuf>),
    Render(ScanResult, VfvStyle, Option<PathBuf>),
    Compare {
        scan: ScanResult,
        threshold: f64,
        out: Option<PathBuf>,
        svg: Option<(PathBuf, VfvStyle)>,
    },
}

fn read_text(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))
}

fn prepare(command: Command) -> Result<Job, Error> {
    Ok(match command {
        Command::Scan(a) => {
            let config = ScanConfig {
                n_states: a.states,
                shots: a.sim.shots,
                catalog: a.sim.catalog.catalog()?,
                noise: a.sim.noise()?,
                delay_t: a.delay,
                estimators: a.sim.estimator.estimators(),
                master_seed: a.sim.seed,
            };
            config.validate()?;
            Job::Scan(config, a.out)
        }
        Command::Reconstruct(a) => {
            let file = RecordFile::from_json(&read_text(&a.input)?)?;
            Job::Reconstruct(file, a.estimator.estimators(), a.out)
        }
        Command::Study(a) => {
            let config = StudyConfig {
                mode: match a.mode {
                    ModeArg::Error => StudyMode::Error,
                    ModeArg::Agreement => StudyMode::Agreement,
                },
                trials: a.trials,
                shots: a.sim.shots,
                states: StateSelection::Lattice(a.states),
                estimators: a.sim.estimator.estimators(),
                percentile: a.percentile,
                catalog: a.sim.catalog.catalog()?,
                noise: a.sim.noise()?,
                master_seed: a.sim.seed,
            };
            config.validate()?;
            for w in config.warnings() {
                warn(&w);
            }
            Job::Study(config, a.out)
        }
        Command::Render(a) => {
            let style = parse_style(&a.style)?;
            Job::Render(read_scan(&read_text(&a.input)?)?, style, a.out)
        }
        Command::Compare(a) => {
            if a.threshold.is_nan() || a.threshold < 0.0 {
                return Err(Error::InvalidConfig("threshold must be nonnegative".into()));
            }
            let svg = match a.svg {
                Some(path) => Some((path, parse_style(&a.style)?)),
                None => None,
            };
            Job::Compare {
                scan: read_scan(&read_text(&a.input)?)?,
                threshold: a.threshold,
                out: a.out,
                svg,
            }
        }
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn warn(message: &str) {
    eprintln!("{}", json!({ "warning": message }));
}

fn report_render_warnings(warnings: &[RenderWarning]) {
    for w in warnings {
        match w {
            RenderWarning::DegenerateDirection { row } => {
                warn(&format!("row {row}: reconstruction too short for an arrow"))
            }
            RenderWarning::MissingState { row } => warn(&format!(
                "row {row}: no programmed state, marker placed at the reconstruction"
            )),
        }
    }
}

fn execute(job: Job) -> Result<(), Error> {
    match job {
        Job::Scan(config, out) => emit(out.as_deref(), &to_json(&run_scan(&config)?)?),
        Job::Reconstruct(file, estimators, out) => {
            emit(out.as_deref(), &to_json(&file.reconstruct(&estimators)?)?)
        }
        Job::Study(config, out) => emit(out.as_deref(), &to_json(&study::run(&config)?)?),
        Job::Render(scan, style, out) => {
            let doc = render_vfv(&scan, &style)?;
            report_render_warnings(&doc.warnings);
            emit(out.as_deref(), &doc.svg)
        }
        Job::Compare {
            scan,
            threshold,
            out,
            svg,
        } => {
            let report = compare_estimators(&scan, threshold)?;
            if let Some((path, style)) = svg {
                let flagged: Vec<_> = scan
                    .rows
                    .iter()
                    .filter(|r| report.flagged.iter().any(|f| f.index == r.index))
                    .cloned()
                    .collect();
                if flagged.is_empty() {
                    warn("no rows flagged; SVG not written");
                } else {
                    let subset = ScanResult::new(
                        scan.config.clone(),
                        scan.catalog.clone(),
                        scan.primary_estimator,
                        flagged,
                    );
                    let doc = render_vfv(&subset, &style)?;
                    report_render_warnings(&doc.warnings);
                    std::fs::write(path, doc.svg)?;
                }
            }
            emit(out.as_deref(), &to_json(&report)?)
        }
    }
}

fn fail(code: u8, kind: &str, message: &str, index: Option<usize>) -> ExitCode {
    let mut err = json!({ "kind": kind, "message": message });
    if let Some(i) = index {
        err["record_index"] = json!(i);
    }
    eprintln!("{}", json!({ "error": err }));
    ExitCode::from(code)
}

fn fail_with(code: u8, e: &Error) -> ExitCode {
    let index = match e {
        Error::Schema { index, .. } => *index,
        _ => None,
    };
    fail(code, e.kind(), &e.to_string(), index)
}

/// Errors caused by the inputs rather than by the run itself.
fn is_validation(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidConfig(_)
            | Error::InvalidInput(_)
            | Error::InvalidNoise(_)
            | Error::NegativeDelay(_)
            | Error::NonSpanningBases
            | Error::MissingEstimator { .. }
            | Error::Schema { .. }
    )
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(2, "usage", e.to_string().trim_end(), None),
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return fail(2, "usage", "--threads must be at least 1", None);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            return fail(1, "threads", &e.to_string(), None);
        }
    }
    let job = match prepare(cli.command) {
        Ok(job) => job,
        Err(e) => return fail_with(2, &e),
    };
    match execute(job) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail_with(if is_validation(&e) { 2 } else { 1 }, &e),
    }
}
