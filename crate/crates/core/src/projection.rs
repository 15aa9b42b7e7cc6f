//! Robinson projection of the Bloch sphere.
//!
//! States are placed on a globe with `latitude = 90 - theta` and
//! `longitude = phi` (degrees), then mapped with the Robinson table: 19 rows
//! at 5 degree steps, linearly interpolated, unit radius.

use serde::{Deserialize, Serialize};

use crate::bloch::{BlochVector, StateAngles};

/// Horizontal scale factors `X(lat)` for latitudes 0, 5, ..., 90.
pub const ROBINSON_X: [f64; 19] = [
    1.0000, 0.9986, 0.9954, 0.9900, 0.9822, 0.9730, 0.9600, 0.9427, 0.9216, 0.8962, 0.8679, 0.8350,
    0.7986, 0.7597, 0.7186, 0.6732, 0.6213, 0.5722, 0.5322,
];

/// Vertical positions `Y(lat)` for latitudes 0, 5, ..., 90.
pub const ROBINSON_Y: [f64; 19] = [
    0.0000, 0.0620, 0.1240, 0.1860, 0.2480, 0.3100, 0.3720, 0.4340, 0.4958, 0.5571, 0.6176, 0.6769,
    0.7346, 0.7903, 0.8435, 0.8936, 0.9394, 0.9761, 1.0000,
];

pub const X_SCALE: f64 = 0.8487;
pub const Y_SCALE: f64 = 1.3523;
const STEP_DEG: f64 = 5.0;

/// Largest `|x|` of a projected point (equator at +-180 degrees).
pub fn max_abs_x() -> f64 {
    X_SCALE * std::f64::consts::PI
}

/// Largest `|y|` of a projected point (the poles).
pub fn max_abs_y() -> f64 {
    Y_SCALE
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    /// Degrees in `[-90, 90]`.
    pub latitude: f64,
    /// Degrees in `[-180, 180)`.
    pub longitude: f64,
}

impl GeoPoint {
    pub fn new(latitude: f64, longitude: f64) -> Self {
        Self {
            latitude,
            longitude,
        }
    }

    pub fn from_state(s: StateAngles) -> Self {
        Self::new(90.0 - s.theta.to_degrees(), s.phi.to_degrees())
    }

    /// Globe position of the direction of `v`. `v` must be nonzero.
    pub fn from_direction(v: BlochVector) -> Self {
        Self::from_state(StateAngles::from_bloch(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

/// `(X, Y)` at `|lat|` degrees by linear interpolation between table rows.
pub fn robinson_coefficients(abs_lat: f64) -> (f64, f64) {
    let lat = abs_lat.clamp(0.0, 90.0);
    let pos = lat / STEP_DEG;
    let i = (pos.floor() as usize).min(ROBINSON_X.len() - 1);
    if i == ROBINSON_X.len() - 1 {
        return (ROBINSON_X[i], ROBINSON_Y[i]);
    }
    let f = pos - i as f64;
    if f == 0.0 {
        return (ROBINSON_X[i], ROBINSON_Y[i]);
    }
    (
        ROBINSON_X[i] + (ROBINSON_X[i + 1] - ROBINSON_X[i]) * f,
        ROBINSON_Y[i] + (ROBINSON_Y[i + 1] - ROBINSON_Y[i]) * f,
    )
}

pub fn robinson_project(g: GeoPoint) -> PlanePoint {
    let (xc, yc) = robinson_coefficients(g.latitude.abs());
    let y = Y_SCALE * yc;
    PlanePoint {
        x: X_SCALE * xc * g.longitude.to_radians(),
        y: if g.latitude < 0.0 { -y } else { y },
    }
}
