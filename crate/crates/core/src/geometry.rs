//! Frames, the NED-to-body rotation, and the line-of-sight geometry between
//! an aircraft and a ground radar.
//!
//! Positions are metres in a local North-East-Down frame. Attitude is a
//! ZYX Euler triple (roll, pitch, yaw) in radians. The body frame has x out
//! the nose, y out the right wing and z out the belly.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3, Vector6};
use serde::Serialize;

use crate::error::{Error, Result};

/// Horizontal body-frame distance (m) below which the RCS azimuth is
/// treated as undefined.
pub const NADIR_EPSILON: f64 = 1e-9;

/// Wraps an angle to `(-π, π]`. Values already in range are returned
/// untouched so that small finite-difference steps are not disturbed.
pub fn wrap_angle(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let wrapped = angle.rem_euclid(2.0 * PI);
    if wrapped > PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

/// Aircraft pose: NED position and ZYX Euler angles.
///
/// The six-vector ordering used throughout the crate is
/// `(p_n, p_e, p_d, roll, pitch, yaw)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AircraftState {
    position: [f64; 3],
    attitude: [f64; 3],
}

impl AircraftState {
    pub fn new(position: Vector3<f64>, roll: f64, pitch: f64, yaw: f64) -> Result<Self> {
        if !position.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("aircraft position"));
        }
        if !(roll.is_finite() && pitch.is_finite() && yaw.is_finite()) {
            return Err(Error::NonFinite("aircraft attitude"));
        }
        Ok(Self {
            position: [position.x, position.y, position.z],
            attitude: [wrap_angle(roll), wrap_angle(pitch), wrap_angle(yaw)],
        })
    }

    pub fn from_vector(x: &Vector6<f64>) -> Result<Self> {
        Self::new(Vector3::new(x[0], x[1], x[2]), x[3], x[4], x[5])
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        let [n, e, d] = self.position;
        let [r, p, y] = self.attitude;
        Vector6::new(n, e, d, r, p, y)
    }

    /// Returns `self + delta` (angles re-wrapped).
    pub fn perturbed(&self, delta: &Vector6<f64>) -> Result<Self> {
        Self::from_vector(&(self.to_vector() + delta))
    }

    pub fn position(&self) -> Vector3<f64> {
        Vector3::from(self.position)
    }

    pub fn roll(&self) -> f64 {
        self.attitude[0]
    }

    pub fn pitch(&self) -> f64 {
        self.attitude[1]
    }

    pub fn yaw(&self) -> f64 {
        self.attitude[2]
    }
}

/// Ground radar: NED position, lumped radar constant and false-alarm rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadarSite {
    position: [f64; 3],
    c_r: f64,
    p_fa: f64,
}

impl RadarSite {
    pub fn new(position: Vector3<f64>, c_r: f64, p_fa: f64) -> Result<Self> {
        if !position.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("radar position"));
        }
        if !(c_r.is_finite() && c_r > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "radar constant must be positive, got {c_r}"
            )));
        }
        if !(p_fa > 0.0 && p_fa < 1.0) {
            return Err(Error::InvalidPfa(p_fa));
        }
        Ok(Self {
            position: [position.x, position.y, position.z],
            c_r,
            p_fa,
        })
    }

    pub fn position(&self) -> Vector3<f64> {
        Vector3::from(self.position)
    }

    /// Lumped radar constant (J·m²/K).
    pub fn c_r(&self) -> f64 {
        self.c_r
    }

    pub fn p_fa(&self) -> f64 {
        self.p_fa
    }
}

/// Radar position expressed in the aircraft body frame (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BodyVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BodyVector {
    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    /// Distance from the body z axis.
    pub fn horizontal_norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl From<Vector3<f64>> for BodyVector {
    fn from(v: Vector3<f64>) -> Self {
        Self {
            x: v.x,
            y: v.y,
            z: v.z,
        }
    }
}

/// RCS azimuth `lambda` in `(-π, π]` and elevation `phi` in `[-π/2, π/2]`,
/// positive toward the belly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AspectAngles {
    pub lambda: f64,
    pub phi: f64,
}

/// Direction cosine matrix used to express NED vectors in the body frame.
///
/// ZYX Euler matrix with row 3 `[-sθ, cθ·sφ, cφ·cθ]`. All downstream
/// analytic partials are written against this matrix.
pub fn dcm_ned_to_body(state: &AircraftState) -> Matrix3<f64> {
    let (sphi, cphi) = state.roll().sin_cos();
    let (stheta, ctheta) = state.pitch().sin_cos();
    let (spsi, cpsi) = state.yaw().sin_cos();
    Matrix3::new(
        cpsi * ctheta,
        -cphi * spsi + cpsi * sphi * stheta,
        sphi * spsi + cphi * cpsi * stheta,
        ctheta * spsi,
        cphi * cpsi + sphi * spsi * stheta,
        -cpsi * sphi + cphi * spsi * stheta,
        -stheta,
        ctheta * sphi,
        cphi * ctheta,
    )
}

pub fn radar_in_body(state: &AircraftState, radar: &RadarSite) -> BodyVector {
    (dcm_ned_to_body(state) * (radar.position() - state.position())).into()
}

/// Azimuth and elevation of the radar line of sight in the body frame.
pub fn aspect_angles(b: &BodyVector) -> Result<AspectAngles> {
    if !(b.x.is_finite() && b.y.is_finite() && b.z.is_finite()) {
        return Err(Error::NonFinite("body vector"));
    }
    let horizontal = b.horizontal_norm();
    if horizontal < NADIR_EPSILON {
        return Err(Error::NadirSingularity);
    }
    Ok(AspectAngles {
        lambda: b.y.atan2(b.x),
        phi: b.z.atan2(horizontal),
    })
}

/// Euclidean distance between aircraft and radar (m).
pub fn range(state: &AircraftState, radar: &RadarSite) -> f64 {
    (state.position() - radar.position()).norm()
}
