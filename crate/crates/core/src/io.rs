//! JSON file formats.
//!
//! Every artifact carries a `schema_version`. Data files serialize floats
//! with the shortest representation that parses back to the same bits;
//! SVG output uses fixed four-decimal formatting instead (see `viz`).

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{MeasurementRecord, NoiseSpec, PvmCatalog};
use crate::reconstruction::{Estimator, SolverOptions};
use crate::scan::{primary_estimator, reconstruct_row, ScanResult, ScanRow};
use crate::viz::VfvStyle;

pub const RECORDS_SCHEMA_VERSION: &str = "sqt.records/1";

/// Measurement records collected elsewhere (simulator or hardware).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordFile {
    pub schema_version: String,
    /// Bases with explicit `(alpha, beta)` angles in radians.
    pub catalog: PvmCatalog,
    pub records: Vec<MeasurementRecord>,
    /// Free-form metadata such as device name and collection date.
    #[serde(default)]
    pub provenance: BTreeMap<String, serde_json::Value>,
}

fn schema_err(index: Option<usize>, message: impl Into<String>) -> Error {
    Error::Schema {
        index,
        message: message.into(),
    }
}

impl RecordFile {
    pub fn new(catalog: PvmCatalog, records: Vec<MeasurementRecord>) -> Self {
        Self {
            schema_version: RECORDS_SCHEMA_VERSION.to_string(),
            catalog,
            records,
            provenance: BTreeMap::new(),
        }
    }

    /// Checks the version, the catalog and every record, reporting the first
    /// offending record by index.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != RECORDS_SCHEMA_VERSION {
            return Err(schema_err(
                None,
                format!(
                    "unrecognized schema_version '{}' (expected '{RECORDS_SCHEMA_VERSION}')",
                    self.schema_version
                ),
            ));
        }
        PvmCatalog::new(self.catalog.name, self.catalog.bases.clone())
            .map_err(|e| schema_err(None, format!("catalog: {e}")))?;
        for (i, r) in self.records.iter().enumerate() {
            if self.catalog.basis(&r.basis_id).is_none() {
                return Err(schema_err(
                    Some(i),
                    format!("unknown basis_id '{}'", r.basis_id),
                ));
            }
            if r.shots == 0 {
                return Err(schema_err(Some(i), "shots must be at least 1"));
            }
            if r.count > r.shots {
                return Err(schema_err(
                    Some(i),
                    format!("count {} exceeds shots {}", r.count, r.shots),
                ));
            }
        }
        for (i, r) in self.records.iter().enumerate() {
            let first = self
                .records
                .iter()
                .find(|o| o.state_id == r.state_id)
                .expect("r itself");
            if first.state != r.state {
                return Err(schema_err(
                    Some(i),
                    format!(
                        "state disagrees with earlier records of state_id {}",
                        r.state_id
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text).map_err(|e| schema_err(None, e.to_string()))?;
        file.validate()?;
        Ok(file)
    }

    /// Records grouped by `state_id`, in order of first appearance.
    pub fn groups(&self) -> Vec<Vec<MeasurementRecord>> {
        let mut order: Vec<usize> = Vec::new();
        let mut groups: BTreeMap<usize, Vec<MeasurementRecord>> = BTreeMap::new();
        for r in &self.records {
            groups
                .entry(r.state_id)
                .or_insert_with(|| {
                    order.push(r.state_id);
                    Vec::new()
                })
                .push(r.clone());
        }
        order
            .into_iter()
            .map(|id| groups.remove(&id).expect("group exists"))
            .collect()
    }

    /// Reconstructs every prepared state in the file.
    pub fn reconstruct(&self, estimators: &[Estimator]) -> Result<ScanResult> {
        if estimators.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one estimator is required".into(),
            ));
        }
        let opts = SolverOptions::default();
        let rows: Vec<ScanRow> = self
            .groups()
            .into_iter()
            .map(|records| {
                let index = records[0].state_id;
                let state = records[0].state;
                reconstruct_row(index, state, records, &self.catalog, estimators, &opts)
            })
            .collect();
        Ok(ScanResult::new(
            None,
            self.catalog.clone(),
            primary_estimator(estimators),
            rows,
        ))
    }
}

impl From<&ScanResult> for RecordFile {
    fn from(scan: &ScanResult) -> Self {
        let records = scan
            .rows
            .iter()
            .flat_map(|r| r.records.iter().cloned())
            .collect();
        RecordFile::new(scan.catalog.clone(), records)
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    from_json(&std::fs::read_to_string(path)?)
}

/// Parses a scan file and checks its schema version.
pub fn read_scan(text: &str) -> Result<ScanResult> {
    let scan: ScanResult =
        serde_json::from_str(text).map_err(|e| schema_err(None, e.to_string()))?;
    if scan.schema_version != crate::scan::SCAN_SCHEMA_VERSION {
        return Err(schema_err(
            None,
            format!("unrecognized schema_version '{}'", scan.schema_version),
        ));
    }
    Ok(scan)
}

/// Accepts either inline JSON (starting with `{`) or a path to a JSON file.
fn inline_or_file<T: DeserializeOwned>(arg: &str) -> Result<T> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg)?
    };
    serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(e.to_string()))
}

pub fn parse_noise(arg: &str) -> Result<NoiseSpec> {
    let spec: NoiseSpec = inline_or_file(arg)?;
    spec.validate()?;
    Ok(spec)
}

/// `defaults` (or an empty string) selects [`VfvStyle::default`].
pub fn parse_style(arg: &str) -> Result<VfvStyle> {
    if arg.is_empty() || arg == "defaults" {
        return Ok(VfvStyle::default());
    }
    let style: VfvStyle = inline_or_file(arg)?;
    style.validate()?;
    Ok(style)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::StateAngles;
    use crate::measurement::tetrahedral_catalog;

    fn record(state_id: usize, basis: &str, shots: u64, count: u64) -> MeasurementRecord {
        MeasurementRecord {
            state_id,
            state: None,
            basis_id: basis.to_string(),
            shots,
            count,
            seed: None,
        }
    }

    fn file(records: Vec<MeasurementRecord>) -> RecordFile {
        RecordFile::new(tetrahedral_catalog(), records)
    }

    #[test]
    fn rejects_count_above_shots() {
        let f = file(vec![record(0, "t0", 10, 5), record(0, "t1", 10, 11)]);
        let err = f.validate().unwrap_err();
        assert!(matches!(err, Error::Schema { index: Some(1), .. }));
        assert_eq!(err.to_string(), "record 1: count 11 exceeds shots 10");
    }

    #[test]
    fn rejects_unknown_basis() {
        let f = file(vec![
            record(0, "t0", 10, 5),
            record(0, "t1", 10, 5),
            record(0, "q9", 10, 1),
        ]);
        let err = f.validate().unwrap_err();
        assert!(matches!(err, Error::Schema { index: Some(2), .. }));
        assert!(err.to_string().contains("'q9'"));
    }

    #[test]
    fn rejects_unknown_schema_version() {
        let mut f = file(vec![record(0, "t0", 10, 5)]);
        f.schema_version = "sqt.records/99".into();
        let err = f.validate().unwrap_err();
        assert!(matches!(err, Error::Schema { index: None, .. }));
        assert!(err.to_string().contains("sqt.records/99"));
    }

    #[test]
    fn rejects_inconsistent_states() {
        let mut a = record(0, "t0", 10, 5);
        a.state = Some(StateAngles::new(0.1, 0.2));
        let mut b = record(0, "t1", 10, 5);
        b.state = Some(StateAngles::new(0.3, 0.2));
        assert!(matches!(
            file(vec![a, b]).validate(),
            Err(Error::Schema { index: Some(1), .. })
        ));
    }

    #[test]
    fn malformed_json_is_a_schema_error() {
        assert!(matches!(
            RecordFile::from_json("{\"schema_version\": 3}"),
            Err(Error::Schema { .. })
        ));
    }

    #[test]
    fn groups_preserve_first_appearance() {
        let f = file(vec![
            record(5, "t0", 10, 5),
            record(2, "t0", 10, 5),
            record(5, "t1", 10, 5),
        ]);
        let g = f.groups();
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].len(), 2);
        assert_eq!(g[0][0].state_id, 5);
        assert_eq!(g[1][0].state_id, 2);
    }

    #[test]
    fn noise_and_style_arguments() {
        let n = parse_noise(r#"{"depolarizing_p": 0.03}"#).unwrap();
        assert_eq!(n.depolarizing_p, 0.03);
        assert!(parse_noise(r#"{"depolarizing_p": 3}"#).is_err());
        assert!(parse_noise(r#"{"bogus": 1}"#).is_err());
        assert_eq!(parse_style("defaults").unwrap(), VfvStyle::default());
        let s = parse_style(r#"{"marker_radius": 4}"#).unwrap();
        assert_eq!(s.marker_radius, 4.0);
    }
}
