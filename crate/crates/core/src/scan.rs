//! Full-sphere tomography scans.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::{fidelity, purity, to_bloch, BlochVector, StateAngles};
use crate::error::{Error, Result};
use crate::measurement::{
    apply_delay, sample_record, tetrahedral_catalog, MeasurementRecord, NoiseSpec, PvmCatalog,
};
use crate::reconstruction::{
    reconstruct, Estimator, ReconstructionInput, ReconstructionResult, SolverOptions,
};
use crate::seed::{derive_seed, RecordKey};
use crate::stats::{mean, order_statistic, std_dev};

pub const SCAN_SCHEMA_VERSION: &str = "sqt.scan/1";
pub const DEFAULT_FLAG_THRESHOLD: f64 = 0.02;

/// Fibonacci lattice of `n` near-equidistant states.
///
/// `z_i = 1 - (2i + 1)/n`, `phi_i = 2 pi i (1 - 1/golden) mod 2 pi`.
pub fn fibonacci_sphere(n: usize) -> Vec<StateAngles> {
    let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
    let turn = 1.0 - 1.0 / golden;
    (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let phi = (2.0 * PI * i as f64 * turn).rem_euclid(2.0 * PI);
            StateAngles::new(z.clamp(-1.0, 1.0).acos(), phi)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub n_states: usize,
    pub shots: u64,
    pub catalog: PvmCatalog,
    pub noise: NoiseSpec,
    /// Idle time between preparation and measurement, in dt units.
    pub delay_t: f64,
    pub estimators: Vec<Estimator>,
    pub master_seed: u64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            n_states: 200,
            shots: 20_000,
            catalog: tetrahedral_catalog(),
            noise: NoiseSpec::default(),
            delay_t: 0.0,
            estimators: vec![Estimator::Mle, Estimator::Lr],
            master_seed: 0,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 {
            return Err(Error::InvalidConfig("n_states must be at least 1".into()));
        }
        if self.shots == 0 {
            return Err(Error::InvalidConfig("shots must be at least 1".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one estimator is required".into(),
            ));
        }
        if self.delay_t.is_nan() || self.delay_t < 0.0 {
            return Err(Error::NegativeDelay(self.delay_t));
        }
        self.noise.validate()?;
        if self.delay_t > 0.0 && self.noise.t1.is_none() {
            return Err(Error::InvalidNoise(
                "a nonzero delay requires t1 and t2".into(),
            ));
        }
        Ok(())
    }
}

/// MLE when it was requested, otherwise LR.
pub fn primary_estimator(estimators: &[Estimator]) -> Estimator {
    if estimators.contains(&Estimator::Mle) {
        Estimator::Mle
    } else {
        Estimator::Lr
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowError {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub index: usize,
    pub state: Option<StateAngles>,
    pub a_in: Option<BlochVector>,
    pub records: Vec<MeasurementRecord>,
    pub result_mle: Option<ReconstructionResult>,
    pub result_lr: Option<ReconstructionResult>,
    /// Purity of the primary estimate.
    pub purity: Option<f64>,
    /// Fidelity to the programmed state, when known.
    pub fidelity: Option<f64>,
    /// `|a_out - a_in|` for the primary estimate, when `a_in` is known.
    pub distance: Option<f64>,
    pub error: Option<RowError>,
}

impl ScanRow {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    pub fn result(&self, estimator: Estimator) -> Option<&ReconstructionResult> {
        match estimator {
            Estimator::Mle => self.result_mle.as_ref(),
            Estimator::Lr => self.result_lr.as_ref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub rows: usize,
    /// Failed rows, excluded from every statistic below.
    pub excluded: usize,
    pub mean_purity: Option<f64>,
    pub std_purity: Option<f64>,
    pub mean_fidelity: Option<f64>,
    pub p99_distance: Option<f64>,
}

impl ScanSummary {
    pub fn from_rows(rows: &[ScanRow]) -> Self {
        let ok: Vec<&ScanRow> = rows.iter().filter(|r| r.is_ok()).collect();
        let purities: Vec<f64> = ok.iter().filter_map(|r| r.purity).collect();
        let fidelities: Vec<f64> = ok.iter().filter_map(|r| r.fidelity).collect();
        let distances: Vec<f64> = ok.iter().filter_map(|r| r.distance).collect();
        Self {
            rows: rows.len(),
            excluded: rows.len() - ok.len(),
            mean_purity: (!purities.is_empty()).then(|| mean(&purities)),
            std_purity: (!purities.is_empty()).then(|| std_dev(&purities)),
            mean_fidelity: (!fidelities.is_empty()).then(|| mean(&fidelities)),
            p99_distance: (!distances.is_empty()).then(|| order_statistic(&distances, 0.99)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub schema_version: String,
    /// Absent when the rows were reconstructed from external records.
    pub config: Option<ScanConfig>,
    pub catalog: PvmCatalog,
    pub primary_estimator: Estimator,
    pub rows: Vec<ScanRow>,
    pub summary: ScanSummary,
}

impl ScanResult {
    pub fn new(
        config: Option<ScanConfig>,
        catalog: PvmCatalog,
        primary: Estimator,
        rows: Vec<ScanRow>,
    ) -> Self {
        let summary = ScanSummary::from_rows(&rows);
        Self {
            schema_version: SCAN_SCHEMA_VERSION.to_string(),
            config,
            catalog,
            primary_estimator: primary,
            rows,
            summary,
        }
    }

    pub fn successful_rows(&self) -> impl Iterator<Item = &ScanRow> {
        self.rows.iter().filter(|r| r.is_ok())
    }
}

/// Reconstructs one prepared state from its records and fills in the
/// metrics. Solver failures are recorded on the row instead of propagated.
pub fn reconstruct_row(
    index: usize,
    state: Option<StateAngles>,
    records: Vec<MeasurementRecord>,
    catalog: &PvmCatalog,
    estimators: &[Estimator],
    opts: &SolverOptions,
) -> ScanRow {
    let a_in = state.map(to_bloch);
    let mut row = ScanRow {
        index,
        state,
        a_in,
        records,
        result_mle: None,
        result_lr: None,
        purity: None,
        fidelity: None,
        distance: None,
        error: None,
    };
    if let Err(e) = fill_results(&mut row, catalog, estimators, opts) {
        row.error = Some(RowError {
            kind: e.kind().to_string(),
            message: e.to_string(),
        });
    }
    row
}

fn fill_results(
    row: &mut ScanRow,
    catalog: &PvmCatalog,
    estimators: &[Estimator],
    opts: &SolverOptions,
) -> Result<()> {
    let input = ReconstructionInput::from_records(&row.records, catalog)?;
    for &est in estimators {
        let result = reconstruct(est, &input, opts)?;
        match est {
            Estimator::Mle => row.result_mle = Some(result),
            Estimator::Lr => row.result_lr = Some(result),
        }
    }
    let primary = row
        .result(primary_estimator(estimators))
        .expect("primary estimator was run")
        .estimate;
    row.purity = Some(purity(primary));
    if let Some(a_in) = row.a_in {
        row.fidelity = Some(fidelity(a_in, primary)?);
        row.distance = Some(primary.distance(a_in));
    }
    Ok(())
}

/// Samples one record per catalog basis for state `index`.
pub fn simulate_records(
    index: usize,
    state: StateAngles,
    config: &ScanConfig,
    trial: usize,
) -> Result<Vec<MeasurementRecord>> {
    let a_prepared = apply_delay(to_bloch(state), config.delay_t, &config.noise)?;
    config
        .catalog
        .bases
        .iter()
        .enumerate()
        .map(|(bi, basis)| {
            let seed = derive_seed(config.master_seed, RecordKey::new(index, bi, trial));
            let mut rec = sample_record(a_prepared, basis, config.shots, &config.noise, seed)?;
            rec.state_id = index;
            rec.state = Some(state);
            Ok(rec)
        })
        .collect()
}

/// Runs sample -> reconstruct for every lattice state.
///
/// Rows are processed in parallel; each row's records depend only on
/// `(master_seed, state index, basis index)`, so the output is identical to
/// a serial run.
pub fn run_scan(config: &ScanConfig) -> Result<ScanResult> {
    config.validate()?;
    let opts = SolverOptions::default();
    let states = fibonacci_sphere(config.n_states);
    let rows: Vec<ScanRow> = states
        .par_iter()
        .enumerate()
        .map(|(i, &s)| match simulate_records(i, s, config, 0) {
            Ok(records) => reconstruct_row(
                i,
                Some(s),
                records,
                &config.catalog,
                &config.estimators,
                &opts,
            ),
            Err(e) => ScanRow {
                index: i,
                state: Some(s),
                a_in: Some(to_bloch(s)),
                records: Vec::new(),
                result_mle: None,
                result_lr: None,
                purity: None,
                fidelity: None,
                distance: None,
                error: Some(RowError {
                    kind: e.kind().to_string(),
                    message: e.to_string(),
                }),
            },
        })
        .collect();
    Ok(ScanResult::new(
        Some(config.clone()),
        config.catalog.clone(),
        primary_estimator(&config.estimators),
        rows,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedRow {
    pub index: usize,
    pub state: Option<StateAngles>,
    pub mle_norm: f64,
    pub lr_norm: f64,
    /// `| |a_LR| - |a_MLE| |`.
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub schema_version: String,
    pub threshold: f64,
    /// Successful rows that were compared.
    pub compared: usize,
    pub flagged_fraction: f64,
    pub flagged: Vec<FlaggedRow>,
}

pub const COMPARISON_SCHEMA_VERSION: &str = "sqt.compare/1";

/// Flags rows whose MLE and LR estimate norms differ by more than `threshold`.
pub fn compare_estimators(scan: &ScanResult, threshold: f64) -> Result<ComparisonReport> {
    let mut compared = 0;
    let mut flagged = Vec::new();
    for row in scan.successful_rows() {
        let mle = row.result_mle.as_ref().ok_or(Error::MissingEstimator {
            row: row.index,
            estimator: "mle",
        })?;
        let lr = row.result_lr.as_ref().ok_or(Error::MissingEstimator {
            row: row.index,
            estimator: "lr",
        })?;
        compared += 1;
        let (mle_norm, lr_norm) = (mle.estimate.norm(), lr.estimate.norm());
        let difference = (lr_norm - mle_norm).abs();
        if difference > threshold {
            flagged.push(FlaggedRow {
                index: row.index,
                state: row.state,
                mle_norm,
                lr_norm,
                difference,
            });
        }
    }
    let flagged_fraction = if compared == 0 {
        0.0
    } else {
        flagged.len() as f64 / compared as f64
    };
    Ok(ComparisonReport {
        schema_version: COMPARISON_SCHEMA_VERSION.to_string(),
        threshold,
        compared,
        flagged_fraction,
        flagged,
    })
}
