//! Single-qubit state tomography.
//!
//! The crate simulates tomography experiments on one qubit (ideal, noisy,
//! delayed and corrupted regimes), reconstructs Bloch vectors from shot
//! counts with a maximum-likelihood and a linear-regression estimator, runs
//! Monte Carlo error studies, and renders Robinson-projected vector field
//! visualisations as SVG.
//!
//! Everything is expressed in the Bloch encoding `rho = (I + a.sigma) / 2`;
//! no 2x2 complex matrix is ever built.

pub mod bloch;
pub mod error;
pub mod io;
pub mod measurement;
pub mod projection;
pub mod reconstruction;
pub mod scan;
pub mod seed;
pub mod study;
pub mod viz;

mod linalg;
mod stats;

pub use bloch::{BlochVector, MeasurementAngles, StateAngles};
pub use error::{Error, Result};
pub use measurement::{MeasurementRecord, NoiseSpec, PvmBasis, PvmCatalog};
pub use reconstruction::{Estimator, ReconstructionInput, ReconstructionResult, SolverOptions};
pub use scan::{ScanConfig, ScanResult, ScanRow};
pub use study::{StudyConfig, StudyResult};
