//! Monte Carlo calibration of reconstruction error.
//!
//! For every state, `trials` independent sample -> reconstruct cycles are
//! run and a statistic is collected per trial: the Euclidean error
//! `|a_out - a_in|` (error mode) or the norm discrepancy
//! `| |a_LR| - |a_MLE| |` on shared records (agreement mode). The reported
//! quantile is the order statistic of rank `ceil(percentile * n)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::{to_bloch, StateAngles};
use crate::error::{Error, Result};
use crate::measurement::{tetrahedral_catalog, MeasurementRecord, NoiseSpec, PvmCatalog};
use crate::reconstruction::{
    reconstruct, Estimator, ReconstructionInput, ReconstructionResult, SolverOptions,
};
use crate::scan::{fibonacci_sphere, simulate_records, ScanConfig};
use crate::stats::order_statistic;

pub const STUDY_SCHEMA_VERSION: &str = "sqt.study/1";

/// Histogram layout: 200 bins of width 5e-4 over `[0, 0.1)`, plus overflow.
pub const HISTOGRAM_BINS: usize = 200;
pub const HISTOGRAM_MAX: f64 = 0.1;

/// Below this many trials the 99th-percentile order statistic is unreliable.
pub const MIN_RELIABLE_TRIALS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyMode {
    Error,
    Agreement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateSelection {
    /// Fibonacci lattice of the given size.
    Lattice(usize),
    Explicit(Vec<StateAngles>),
}

impl StateSelection {
    pub fn states(&self) -> Vec<StateAngles> {
        match self {
            StateSelection::Lattice(n) => fibonacci_sphere(*n),
            StateSelection::Explicit(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub mode: StudyMode,
    pub trials: usize,
    pub shots: u64,
    pub states: StateSelection,
    pub estimators: Vec<Estimator>,
    pub percentile: f64,
    pub catalog: PvmCatalog,
    pub noise: NoiseSpec,
    pub master_seed: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            mode: StudyMode::Error,
            trials: 2_000,
            shots: 20_000,
            states: StateSelection::Lattice(20),
            estimators: vec![Estimator::Mle, Estimator::Lr],
            percentile: 0.99,
            catalog: tetrahedral_catalog(),
            noise: NoiseSpec::default(),
            master_seed: 0,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.shots == 0 {
            return Err(Error::InvalidConfig("shots must be at least 1".into()));
        }
        if !(self.percentile > 0.0 && self.percentile < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "percentile {} must lie in (0, 1)",
                self.percentile
            )));
        }
        if self.states.states().is_empty() {
            return Err(Error::InvalidConfig(
                "at least one state is required".into(),
            ));
        }
        match self.mode {
            StudyMode::Error if self.estimators.is_empty() => Err(Error::InvalidConfig(
                "at least one estimator is required".into(),
            )),
            StudyMode::Agreement
                if !(self.estimators.contains(&Estimator::Mle)
                    && self.estimators.contains(&Estimator::Lr)) =>
            {
                Err(Error::InvalidConfig(
                    "agreement mode needs both mle and lr".into(),
                ))
            }
            _ => self.noise.validate(),
        }
    }

    /// Non-fatal issues worth reporting before a run.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.trials < MIN_RELIABLE_TRIALS {
            out.push(format!(
                "{} trials is below {MIN_RELIABLE_TRIALS}; the {} quantile is unreliable",
                self.trials, self.percentile
            ));
        }
        out
    }

    fn simulation(&self) -> ScanConfig {
        ScanConfig {
            n_states: 1,
            shots: self.shots,
            catalog: self.catalog.clone(),
            noise: self.noise,
            delay_t: 0.0,
            estimators: self.estimators.clone(),
            master_seed: self.master_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub counts: Vec<u64>,
    pub overflow: u64,
}

impl Histogram {
    pub fn new() -> Self {
        Self {
            bin_width: HISTOGRAM_MAX / HISTOGRAM_BINS as f64,
            counts: vec![0; HISTOGRAM_BINS],
            overflow: 0,
        }
    }

    pub fn add(&mut self, value: f64) {
        let bin = (value / self.bin_width).floor();
        if bin >= 0.0 && (bin as usize) < self.counts.len() {
            self.counts[bin as usize] += 1;
        } else {
            self.overflow += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.overflow
    }
}

impl Default for Histogram {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateStudy {
    pub state: StateAngles,
    /// Empirical quantile at `config.percentile` (the 99th percentile by default).
    /// `None` when every trial failed.
    pub p99: Option<f64>,
    pub histogram: Histogram,
    /// Trials dropped because a solver failed.
    pub excluded: usize,
}

/// One statistic tracked over all states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySeries {
    /// `mle`, `lr`, or `lr-mle` for the agreement statistic.
    pub label: String,
    pub per_state: Vec<StateStudy>,
    /// Largest per-state quantile; `None` when no state has one.
    pub global_max_p99: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub schema_version: String,
    pub config: StudyConfig,
    pub series: Vec<StudySeries>,
}

impl StudyResult {
    pub fn series(&self, label: &str) -> Option<&StudySeries> {
        self.series.iter().find(|s| s.label == label)
    }
}

/// Records and reconstructions of one trial; every estimator sees the same
/// records.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub records: Vec<MeasurementRecord>,
    pub results: Vec<ReconstructionResult>,
}

pub fn run_trial(
    config: &StudyConfig,
    state_index: usize,
    state: StateAngles,
    trial: usize,
) -> Result<TrialOutcome> {
    let sim = config.simulation();
    let records = simulate_records(state_index, state, &sim, trial)?;
    let input = ReconstructionInput::from_records(&records, &config.catalog)?;
    let opts = SolverOptions::default();
    let results = config
        .estimators
        .iter()
        .map(|&e| reconstruct(e, &input, &opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialOutcome { records, results })
}

fn estimate_of(outcome: &TrialOutcome, estimator: Estimator) -> crate::bloch::BlochVector {
    outcome
        .results
        .iter()
        .find(|r| r.estimator == estimator)
        .expect("estimator was requested")
        .estimate
}

fn labels(config: &StudyConfig) -> Vec<String> {
    match config.mode {
        StudyMode::Error => config
            .estimators
            .iter()
            .map(|e| e.as_str().to_string())
            .collect(),
        StudyMode::Agreement => vec!["lr-mle".to_string()],
    }
}

fn statistics(config: &StudyConfig, state: StateAngles, outcome: &TrialOutcome) -> Vec<f64> {
    match config.mode {
        StudyMode::Error => {
            let a_in = to_bloch(state);
            config
                .estimators
                .iter()
                .map(|&e| estimate_of(outcome, e).distance(a_in))
                .collect()
        }
        StudyMode::Agreement => {
            let mle = estimate_of(outcome, Estimator::Mle).norm();
            let lr = estimate_of(outcome, Estimator::Lr).norm();
            vec![(lr - mle).abs()]
        }
    }
}

fn run_study(config: &StudyConfig) -> Result<StudyResult> {
    config.validate()?;
    let states = config.states.states();
    let labels = labels(config);

    let jobs: Vec<(usize, usize)> = (0..states.len())
        .flat_map(|s| (0..config.trials).map(move |t| (s, t)))
        .collect();
    let values: Vec<Option<Vec<f64>>> = jobs
        .par_iter()
        .map(|&(s, t)| {
            run_trial(config, s, states[s], t)
                .ok()
                .map(|outcome| statistics(config, states[s], &outcome))
        })
        .collect();

    let mut series: Vec<StudySeries> = labels
        .into_iter()
        .map(|label| StudySeries {
            label,
            per_state: Vec::with_capacity(states.len()),
            global_max_p99: None,
        })
        .collect();

    for (si, &state) in states.iter().enumerate() {
        let chunk = &values[si * config.trials..(si + 1) * config.trials];
        let excluded = chunk.iter().filter(|v| v.is_none()).count();
        for (k, s) in series.iter_mut().enumerate() {
            let samples: Vec<f64> = chunk.iter().flatten().map(|v| v[k]).collect();
            let mut histogram = Histogram::new();
            for &v in &samples {
                histogram.add(v);
            }
            let quantile =
                (!samples.is_empty()).then(|| order_statistic(&samples, config.percentile));
            if let Some(q) = quantile {
                s.global_max_p99 = Some(s.global_max_p99.map_or(q, |m: f64| m.max(q)));
            }
            s.per_state.push(StateStudy {
                state,
                p99: quantile,
                histogram,
                excluded,
            });
        }
    }

    Ok(StudyResult {
        schema_version: STUDY_SCHEMA_VERSION.to_string(),
        config: config.clone(),
        series,
    })
}

/// Quantile of `|a_out - a_in|` per state and estimator.
pub fn run_error_study(config: &StudyConfig) -> Result<StudyResult> {
    let mut cfg = config.clone();
    cfg.mode = StudyMode::Error;
    run_study(&cfg)
}

/// Quantile of `| |a_LR| - |a_MLE| |` per state, both estimators reading the
/// same records in every trial.
pub fn run_agreement_study(config: &StudyConfig) -> Result<StudyResult> {
    let mut cfg = config.clone();
    cfg.mode = StudyMode::Agreement;
    run_study(&cfg)
}

pub fn run(config: &StudyConfig) -> Result<StudyResult> {
    run_study(config)
}
