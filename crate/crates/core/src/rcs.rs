//! Radar cross section models as functions of the body-frame aspect angles.

use std::f64::consts::PI;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::AspectAngles;

/// Constant, ellipsoid and simple-spikeball RCS models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RcsModel {
    /// Aspect-independent area `c_c` (m²).
    Constant { c_c: f64 },
    /// Ellipsoid with forward `a`, side `b` and up `c` axis lengths (m).
    Ellipsoid { a: f64, b: f64, c: f64 },
    /// `|a_s·sin(n·λ/2)| + b_s`, independent of elevation.
    SimpleSpikeball { a_s: f64, b_s: f64, n: u32 },
}

impl RcsModel {
    pub fn constant(c_c: f64) -> Result<Self> {
        if !(c_c.is_finite() && c_c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "constant RCS must be positive, got {c_c}"
            )));
        }
        Ok(Self::Constant { c_c })
    }

    pub fn ellipsoid(a: f64, b: f64, c: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("c", c)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "ellipsoid axis {name} must be positive, got {v}"
                )));
            }
        }
        Ok(Self::Ellipsoid { a, b, c })
    }

    /// Odd lobe counts are accepted here but logged; configuration files
    /// require an even count.
    pub fn spikeball(a_s: f64, b_s: f64, n: u32) -> Result<Self> {
        if !(a_s.is_finite() && a_s >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "spikeball lobe amplitude must be non-negative, got {a_s}"
            )));
        }
        if !(b_s.is_finite() && b_s > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "spikeball minimum RCS must be positive, got {b_s}"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("spikeball lobe count must be >= 1".into()));
        }
        if n % 2 == 1 {
            log::warn!("spikeball lobe count {n} is odd");
        }
        Ok(Self::SimpleSpikeball { a_s, b_s, n })
    }

    /// Default model parameters.
    pub fn default_constant() -> Self {
        Self::Constant { c_c: 0.2 }
    }

    pub fn default_ellipsoid() -> Self {
        Self::Ellipsoid {
            a: 0.25,
            b: 0.15,
            c: 0.17,
        }
    }

    pub fn default_spikeball() -> Self {
        Self::SimpleSpikeball {
            a_s: 0.2,
            b_s: 0.15,
            n: 4,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Constant { .. } => "constant",
            Self::Ellipsoid { .. } => "ellipsoid",
            Self::SimpleSpikeball { .. } => "spikeball",
        }
    }

    /// Whether the value varies with the aspect angles.
    pub fn depends_on_aspect(&self) -> bool {
        !matches!(self, Self::Constant { .. })
    }

    /// RCS in m² for the given aspect.
    pub fn value(&self, angles: &AspectAngles) -> Result<f64> {
        match *self {
            Self::Constant { c_c } => Ok(c_c),
            Self::Ellipsoid { a, b, c } => {
                let d = ellipsoid_denominator(a, b, c, angles);
                if !(d > 0.0) {
                    return Err(Error::DegenerateModel(format!(
                        "ellipsoid denominator is {d} at λ={}, φ={}",
                        angles.lambda, angles.phi
                    )));
                }
                let abc = a * b * c;
                Ok(PI * abc * abc / (d * d))
            }
            Self::SimpleSpikeball { a_s, b_s, n } => {
                Ok((a_s * (0.5 * f64::from(n) * angles.lambda).sin()).abs() + b_s)
            }
        }
    }
}

impl fmt::Display for RcsModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `(a·sλ·cφ)² + (b·sλ·sφ)² + (c·cλ)²`
pub(crate) fn ellipsoid_denominator(a: f64, b: f64, c: f64, angles: &AspectAngles) -> f64 {
    let (sl, cl) = angles.lambda.sin_cos();
    let (sp, cp) = angles.phi.sin_cos();
    (a * sl * cp).powi(2) + (b * sl * sp).powi(2) + (c * cl).powi(2)
}

pub fn rcs_value(model: &RcsModel, angles: &AspectAngles) -> Result<f64> {
    model.value(angles)
}
