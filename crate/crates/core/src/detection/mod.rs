//! Signal-to-noise ratio and single-pulse probability of detection.
//!
//! Detection probability uses North's closed-form approximation
//! `P_D = ½·erfc(√(-ln P_fa) - √(S + ½))` with `S = c_r·σ_r / (k·R⁴)`.

mod erfc;

pub use erfc::erfc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{self, AircraftState, AspectAngles, RadarSite};
use crate::rcs::RcsModel;

/// Boltzmann's constant as used by the radar constant `c_r` (J/K).
pub const BOLTZMANN: f64 = 1.38e-23;

/// `S = c_r·σ_r / (k·R⁴)`
pub fn snr(radar: &RadarSite, sigma_r: f64, range_m: f64) -> Result<f64> {
    if !(range_m > 0.0) {
        return Err(Error::ZeroRange);
    }
    Ok(radar.c_r() * sigma_r / (BOLTZMANN * range_m.powi(4)))
}

fn check_pfa(p_fa: f64) -> Result<()> {
    if p_fa > 0.0 && p_fa < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidPfa(p_fa))
    }
}

fn check_snr(snr: f64) -> Result<()> {
    if snr >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidSnr(snr))
    }
}

/// Argument of erfc: `W = √(-ln P_fa) - √(S + ½)`.
pub fn w_statistic(snr: f64, p_fa: f64) -> Result<f64> {
    check_pfa(p_fa)?;
    check_snr(snr)?;
    Ok((-p_fa.ln()).sqrt() - (snr + 0.5).sqrt())
}

pub fn probability_of_detection(snr: f64, p_fa: f64) -> Result<f64> {
    Ok(0.5 * erfc(w_statistic(snr, p_fa)?))
}

/// One evaluation of the detection chain at a pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionPoint {
    pub range_m: f64,
    /// `None` only for aspect-independent RCS at the nadir singularity.
    pub angles: Option<AspectAngles>,
    pub sigma_r: f64,
    pub snr: f64,
    pub w: f64,
    pub p_d: f64,
}

pub fn evaluate_point(
    state: &AircraftState,
    radar: &RadarSite,
    model: &RcsModel,
) -> Result<DetectionPoint> {
    let range_m = geometry::range(state, radar);
    if !(range_m > 0.0) {
        return Err(Error::ZeroRange);
    }
    let body = geometry::radar_in_body(state, radar);
    let angles = match geometry::aspect_angles(&body) {
        Ok(a) => Some(a),
        Err(Error::NadirSingularity) if !model.depends_on_aspect() => None,
        Err(e) => return Err(e),
    };
    let sigma_r = match angles {
        Some(a) => model.value(&a)?,
        None => match *model {
            RcsModel::Constant { c_c } => c_c,
            _ => unreachable!("aspect-dependent model without aspect angles"),
        },
    };
    let s = snr(radar, sigma_r, range_m)?;
    let w = w_statistic(s, radar.p_fa())?;
    let p_d = probability_of_detection(s, radar.p_fa())?;
    Ok(DetectionPoint {
        range_m,
        angles,
        sigma_r,
        snr: s,
        w,
        p_d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Vector3;

    fn table_radar() -> RadarSite {
        RadarSite::new(Vector3::zeros(), 167.4, 1.7e-4).unwrap()
    }

    #[test]
    fn snr_table_values() {
        let r = table_radar();
        let s = snr(&r, 0.2, 650000.0).unwrap();
        assert_relative_eq!(s, 167.4 * 0.2 / (1.38e-23 * 650000f64.powi(4)), max_relative = 1e-15);
        assert_relative_eq!(snr(&r, 0.4, 650000.0).unwrap(), 2.0 * s, max_relative = 1e-15);
        assert_relative_eq!(snr(&r, 0.2, 1300000.0).unwrap(), s / 16.0, max_relative = 1e-15);
    }

    #[test]
    fn snr_rejects_zero_range() {
        assert_eq!(snr(&table_radar(), 0.2, 0.0), Err(Error::ZeroRange));
        assert_eq!(snr(&table_radar(), 0.2, -1.0), Err(Error::ZeroRange));
    }

    #[test]
    fn half_probability_where_w_vanishes() {
        let p_fa = 1.7e-4;
        let s = -f64::ln(p_fa) - 0.5;
        // mpmath: -ln(1.7e-4) - 0.5 = 8.17971212091401233984...
        assert_relative_eq!(s, 8.179_712_120_914_012, max_relative = 1e-14);
        assert_eq!(w_statistic(s, p_fa).unwrap(), 0.0);
        assert_eq!(probability_of_detection(s, p_fa).unwrap(), 0.5);
    }

    #[test]
    fn zero_snr() {
        // mpmath: 0.5*erfc(sqrt(-ln 1.7e-4) - sqrt(0.5)) = 7.7152159152614297e-4
        let p = probability_of_detection(0.0, 1.7e-4).unwrap();
        assert_relative_eq!(p, 7.715_215_915_261_43e-4, max_relative = 1e-12);
    }

    #[test]
    fn saturates_for_large_snr() {
        assert_eq!(probability_of_detection(1e6, 1.7e-4).unwrap(), 1.0);
        assert!(probability_of_detection(1e300, 1.7e-4).unwrap() == 1.0);
    }

    #[test]
    fn invalid_inputs() {
        assert_eq!(probability_of_detection(1.0, 0.0), Err(Error::InvalidPfa(0.0)));
        assert_eq!(probability_of_detection(1.0, 1.5), Err(Error::InvalidPfa(1.5)));
        assert_eq!(probability_of_detection(-1.0, 0.1), Err(Error::InvalidSnr(-1.0)));
    }

    #[test]
    fn evaluate_point_matches_hand_chain() {
        let radar = table_radar();
        let model = RcsModel::default_ellipsoid();
        let state = AircraftState::new(Vector3::new(2.0e5, 6.1e5, -3000.0), 0.1, -0.05, 0.3).unwrap();
        let point = evaluate_point(&state, &radar, &model).unwrap();

        let r = geometry::range(&state, &radar);
        let angles = geometry::aspect_angles(&geometry::radar_in_body(&state, &radar)).unwrap();
        let sigma = model.value(&angles).unwrap();
        let s = snr(&radar, sigma, r).unwrap();
        let p = probability_of_detection(s, radar.p_fa()).unwrap();
        assert_eq!(point.range_m, r);
        assert_eq!(point.angles, Some(angles));
        assert_eq!(point.sigma_r, sigma);
        assert_eq!(point.snr, s);
        assert_eq!(point.p_d, p);
    }

    #[test]
    fn evaluate_point_errors() {
        let radar = table_radar();
        let at_radar = AircraftState::new(Vector3::zeros(), 0.0, 0.0, 0.0).unwrap();
        assert_eq!(
            evaluate_point(&at_radar, &radar, &RcsModel::default_constant()),
            Err(Error::ZeroRange)
        );
        let overhead = AircraftState::new(Vector3::new(0.0, 0.0, -3000.0), 0.0, 0.0, 0.0).unwrap();
        assert_eq!(
            evaluate_point(&overhead, &radar, &RcsModel::default_spikeball()),
            Err(Error::NadirSingularity)
        );
        let p = evaluate_point(&overhead, &radar, &RcsModel::default_constant()).unwrap();
        assert!(p.angles.is_none());
        assert_eq!(p.sigma_r, 0.2);
    }
}
