//! Measurement catalogs, noise channels and shot sampling.
//!
//! A synthetic record is produced by the pipeline
//! idle delay -> depolarizing shrink -> basis over-rotation -> readout flips
//! -> binomial draw. [`apply_delay`] is applied by the caller (it needs the
//! delay time); [`sample_record`] performs the remaining steps.

use std::f64::consts::PI;

use rand::distr::Distribution;
use rand_distr::Binomial;
use serde::{Deserialize, Serialize};

use crate::bloch::{
    born_probability, measurement_axis, BlochVector, MeasurementAngles, StateAngles,
};
use crate::error::{Error, Result};
use crate::linalg::Sym3;
use crate::seed::rng_from_seed;

/// One two-outcome projective measurement along `axis`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "BasisDescriptor", into = "BasisDescriptor")]
pub struct PvmBasis {
    pub id: String,
    pub angles: MeasurementAngles,
    pub axis: BlochVector,
}

impl PvmBasis {
    pub fn new(id: impl Into<String>, angles: MeasurementAngles) -> Self {
        Self {
            id: id.into(),
            angles,
            axis: measurement_axis(angles),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct BasisDescriptor {
    id: String,
    alpha: f64,
    beta: f64,
}

impl From<BasisDescriptor> for PvmBasis {
    fn from(d: BasisDescriptor) -> Self {
        PvmBasis::new(d.id, MeasurementAngles::new(d.alpha, d.beta))
    }
}

impl From<PvmBasis> for BasisDescriptor {
    fn from(b: PvmBasis) -> Self {
        BasisDescriptor {
            id: b.id,
            alpha: b.angles.alpha,
            beta: b.angles.beta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CatalogName {
    Tetrahedral,
    Pauli,
    Custom,
}

impl std::fmt::Display for CatalogName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CatalogName::Tetrahedral => "tetrahedral",
            CatalogName::Pauli => "pauli",
            CatalogName::Custom => "custom",
        })
    }
}

impl std::str::FromStr for CatalogName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tetrahedral" => Ok(CatalogName::Tetrahedral),
            "pauli" => Ok(CatalogName::Pauli),
            "custom" => Ok(CatalogName::Custom),
            other => Err(Error::InvalidConfig(format!("unknown catalog '{other}'"))),
        }
    }
}

/// An ordered set of measurement bases whose axes span `R^3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvmCatalog {
    pub name: CatalogName,
    pub bases: Vec<PvmBasis>,
}

/// Below this Gram determinant the axes are treated as coplanar.
pub(crate) const MIN_GRAM_DETERMINANT: f64 = 1e-10;

impl PvmCatalog {
    /// Builds a catalog, rejecting duplicate ids and non-spanning axes.
    pub fn new(name: CatalogName, bases: Vec<PvmBasis>) -> Result<Self> {
        for (i, b) in bases.iter().enumerate() {
            if bases[..i].iter().any(|o| o.id == b.id) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate basis id '{}'",
                    b.id
                )));
            }
        }
        let catalog = Self { name, bases };
        if catalog.gram().determinant() <= MIN_GRAM_DETERMINANT {
            return Err(Error::NonSpanningBases);
        }
        Ok(catalog)
    }

    pub fn by_name(name: CatalogName) -> Result<Self> {
        match name {
            CatalogName::Tetrahedral => Ok(tetrahedral_catalog()),
            CatalogName::Pauli => Ok(pauli_catalog()),
            CatalogName::Custom => Err(Error::InvalidConfig(
                "a custom catalog needs explicit angles".into(),
            )),
        }
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn basis(&self, id: &str) -> Option<(usize, &PvmBasis)> {
        self.bases.iter().enumerate().find(|(_, b)| b.id == id)
    }

    pub(crate) fn gram(&self) -> Sym3 {
        let mut g = Sym3::zero();
        for b in &self.bases {
            g.add_outer(b.axis, 1.0);
        }
        g
    }
}

/// The four tetrahedral PVMs: `T_0 = |0>` and three axes at `acos(-1/3)`
/// from the pole, spaced by `2 pi / 3` in azimuth.
pub fn tetrahedral_catalog() -> PvmCatalog {
    let alpha = (-1.0f64 / 3.0).acos();
    let angles = [
        (0.0, 0.0),
        (alpha, 0.0),
        (alpha, 2.0 * PI / 3.0),
        (alpha, -2.0 * PI / 3.0),
    ];
    PvmCatalog {
        name: CatalogName::Tetrahedral,
        bases: angles
            .iter()
            .enumerate()
            .map(|(k, &(a, b))| PvmBasis::new(format!("t{k}"), MeasurementAngles::new(a, b)))
            .collect(),
    }
}

/// Pauli PVMs along z, x and y.
pub fn pauli_catalog() -> PvmCatalog {
    let h = PI / 2.0;
    PvmCatalog {
        name: CatalogName::Pauli,
        bases: vec![
            PvmBasis::new("z", MeasurementAngles::new(0.0, 0.0)),
            PvmBasis::new("x", MeasurementAngles::new(h, 0.0)),
            PvmBasis::new("y", MeasurementAngles::new(h, h)),
        ],
    }
}

/// Parameters of the synthetic noise channels.
///
/// `readout_flip_10` is the probability that a `+u` outcome is reported as
/// `-u`; `readout_flip_01` is the reverse. `t1`/`t2` are in hardware `dt`
/// units and only needed for a nonzero delay.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    pub readout_flip_01: f64,
    pub readout_flip_10: f64,
    pub depolarizing_p: f64,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub rot_error_scale: f64,
}

impl NoiseSpec {
    pub fn ideal() -> Self {
        Self::default()
    }

    pub fn depolarizing(p: f64) -> Self {
        Self {
            depolarizing_p: p,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("readout_flip_01", self.readout_flip_01),
            ("readout_flip_10", self.readout_flip_10),
            ("depolarizing_p", self.depolarizing_p),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidNoise(format!(
                    "{name} = {p} is not a probability"
                )));
            }
        }
        if !self.rot_error_scale.is_finite() {
            return Err(Error::InvalidNoise("rot_error_scale must be finite".into()));
        }
        match (self.t1, self.t2) {
            (None, None) => Ok(()),
            (Some(t1), Some(t2)) => {
                if !(t1 > 0.0 && t2 > 0.0) {
                    return Err(Error::InvalidNoise("t1 and t2 must be positive".into()));
                }
                if t2 > 2.0 * t1 {
                    return Err(Error::InvalidNoise(format!(
                        "t2 = {t2} exceeds 2*t1 = {}",
                        2.0 * t1
                    )));
                }
                Ok(())
            }
            _ => Err(Error::InvalidNoise(
                "t1 and t2 must be given together".into(),
            )),
        }
    }
}

/// Idle relaxation toward `|0>` for `t` dt units:
/// `(x e^{-t/t2}, y e^{-t/t2}, 1 + (z - 1) e^{-t/t1})`.
pub fn apply_delay(a: BlochVector, t: f64, spec: &NoiseSpec) -> Result<BlochVector> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeDelay(t));
    }
    if t == 0.0 {
        return Ok(a);
    }
    let (Some(t1), Some(t2)) = (spec.t1, spec.t2) else {
        return Err(Error::InvalidNoise(
            "a nonzero delay requires t1 and t2".into(),
        ));
    };
    let transverse = (-t / t2).exp();
    let longitudinal = (-t / t1).exp();
    Ok(BlochVector::new(
        a.x * transverse,
        a.y * transverse,
        1.0 + (a.z - 1.0) * longitudinal,
    ))
}

/// Depolarizing shrink `a -> (1 - p) a`.
pub fn apply_channel_noise(a: BlochVector, spec: &NoiseSpec) -> BlochVector {
    a * (1.0 - spec.depolarizing_p)
}

/// Effective measurement axis under a systematic over-rotation.
///
/// The basis change `R_y(-alpha) R_z(-beta)` is followed by an extra
/// `R_y(-s alpha)` with `s = rot_error_scale`, so the axis actually measured
/// is the nominal one tilted by `s alpha` within its own meridian plane.
pub fn corrupt_basis_rotation(basis: &PvmBasis, spec: &NoiseSpec) -> BlochVector {
    if spec.rot_error_scale == 0.0 {
        return basis.axis;
    }
    let MeasurementAngles { alpha, beta } = basis.angles;
    let u = measurement_axis(MeasurementAngles::new(
        alpha * (1.0 + spec.rot_error_scale),
        beta,
    ));
    u * (1.0 / u.norm())
}

/// Probability of reporting `+u` after the classical confusion matrix.
pub fn apply_readout(p: f64, spec: &NoiseSpec) -> f64 {
    (p * (1.0 - spec.readout_flip_10) + (1.0 - p) * spec.readout_flip_01).clamp(0.0, 1.0)
}

/// Shot counts for one (state, basis) circuit.
///
/// `count` is the number of `+u` outcomes out of `shots`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    /// Groups the records that belong to the same prepared state.
    pub state_id: usize,
    /// Programmed state, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateAngles>,
    pub basis_id: String,
    pub shots: u64,
    pub count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl MeasurementRecord {
    pub fn empirical_probability(&self) -> f64 {
        self.count as f64 / self.shots as f64
    }
}

/// Draws `shots` outcomes of `basis` on `a_prepared`.
///
/// Applies depolarizing noise, basis over-rotation and readout flips from
/// `spec`, then samples an exact binomial with a xoshiro256++ stream seeded
/// by `seed`. The delay channel is not applied here.
pub fn sample_record(
    a_prepared: BlochVector,
    basis: &PvmBasis,
    shots: u64,
    spec: &NoiseSpec,
    seed: u64,
) -> Result<MeasurementRecord> {
    if shots == 0 {
        return Err(Error::InvalidConfig("shots must be at least 1".into()));
    }
    let a = apply_channel_noise(a_prepared, spec);
    let u = corrupt_basis_rotation(basis, spec);
    let p = apply_readout(born_probability(a, u)?, spec);
    let binomial = Binomial::new(shots, p)
        .map_err(|e| Error::InvalidConfig(format!("binomial({shots}, {p}): {e}")))?;
    let count = binomial.sample(&mut rng_from_seed(seed));
    Ok(MeasurementRecord {
        state_id: 0,
        state: None,
        basis_id: basis.id.clone(),
        shots,
        count,
        seed: Some(seed),
    })
}
