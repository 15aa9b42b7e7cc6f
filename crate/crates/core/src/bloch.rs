//! Bloch-ball algebra shared by every other module.
//!
//! A single-qubit density matrix is carried as its Bloch vector `a` with
//! `rho = (I + a.sigma) / 2`. Projectors, purity and fidelity all reduce to
//! operations on `R^3`.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical slack on the physicality constraint `|a| <= 1`.
pub const NORM_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const ZERO: BlochVector = BlochVector {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Self) -> Self {
        Self::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    /// `v / |v|`, or `None` when the norm is below `min_norm`.
    pub fn direction(self, min_norm: f64) -> Option<Self> {
        let n = self.norm();
        (n >= min_norm).then(|| self * (1.0 / n))
    }

    /// Whether the vector lies in the closed unit ball up to [`NORM_SLACK`].
    pub fn is_physical(self) -> bool {
        self.norm() <= 1.0 + NORM_SLACK
    }

    pub fn is_pure(self) -> bool {
        (self.norm() - 1.0).abs() <= NORM_SLACK
    }

    /// Euclidean projection onto the closed unit ball (radial scaling).
    pub fn project_to_ball(self) -> Self {
        let n = self.norm();
        if n > 1.0 {
            self * (1.0 / n)
        } else {
            self
        }
    }

    /// Great-circle angle between the directions of two nonzero vectors.
    pub fn angle_to(self, other: Self) -> f64 {
        // atan2 form stays accurate for nearly parallel vectors.
        self.cross(other).norm().atan2(self.dot(other))
    }

    fn check_physical(self) -> Result<()> {
        if self.is_physical() {
            Ok(())
        } else {
            Err(Error::UnphysicalState { norm: self.norm() })
        }
    }
}

impl Add for BlochVector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for BlochVector {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for BlochVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for BlochVector {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Polar angles of a prepared pure state, in radians.
///
/// `theta` lies in `[0, pi]` and `phi` is kept in `[-pi, pi)` so that it can
/// be used directly as a map longitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateAngles {
    pub theta: f64,
    pub phi: f64,
}

impl StateAngles {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self {
            theta,
            phi: normalize_longitude(phi),
        }
    }

    /// Recovers polar angles from the direction of `a`.
    ///
    /// The azimuth is meaningless at the poles; `atan2` returns 0 there.
    pub fn from_bloch(a: BlochVector) -> Self {
        let rho = a.x.hypot(a.y);
        Self::new(rho.atan2(a.z), a.y.atan2(a.x))
    }

    pub fn to_bloch(self) -> BlochVector {
        to_bloch(self)
    }
}

/// Wraps an angle into `[-pi, pi)`.
pub fn normalize_longitude(phi: f64) -> f64 {
    if (-PI..PI).contains(&phi) {
        return phi;
    }
    let wrapped = (phi + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can return exactly 2*pi after rounding.
    if wrapped >= PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

/// Circuit angles `(alpha, beta)` whose basis change emulates a PVM along
/// `u = (sin a cos b, sin a sin b, cos a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementAngles {
    pub alpha: f64,
    pub beta: f64,
}

impl MeasurementAngles {
    pub fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta }
    }

    pub fn to_axis(self) -> BlochVector {
        measurement_axis(self)
    }
}

fn spherical(polar: f64, azimuth: f64) -> BlochVector {
    let (sp, cp) = polar.sin_cos();
    let (sa, ca) = azimuth.sin_cos();
    BlochVector::new(sp * ca, sp * sa, cp)
}

pub fn to_bloch(s: StateAngles) -> BlochVector {
    spherical(s.theta, s.phi)
}

pub fn measurement_axis(m: MeasurementAngles) -> BlochVector {
    spherical(m.alpha, m.beta)
}

/// Probability of the `+u` outcome of the PVM `{P_u, P_-u}` on state `a`.
pub fn born_probability(a: BlochVector, u: BlochVector) -> Result<f64> {
    a.check_physical()?;
    // 0.5 + 0.5*d (rather than (1 + d)/2) makes p(u) + p(-u) == 1 exactly.
    Ok((0.5 + 0.5 * a.dot(u)).clamp(0.0, 1.0))
}

/// `tr(rho^2) = (1 + |a|^2) / 2`.
pub fn purity(a: BlochVector) -> f64 {
    0.5 * (1.0 + a.norm_squared())
}

/// Uhlmann fidelity against a pure reference state, `sqrt((1 + a_in.a_out)/2)`.
pub fn fidelity(a_in: BlochVector, a_out: BlochVector) -> Result<f64> {
    let n = a_in.norm();
    if (n - 1.0).abs() > NORM_SLACK {
        return Err(Error::NonUnitVector { norm: n });
    }
    a_out.check_physical()?;
    Ok((0.5 * (1.0 + a_in.dot(a_out))).clamp(0.0, 1.0).sqrt())
}
