//! Analytic partial derivatives of the detection chain and first-order
//! propagation of pose covariance to detection-probability variance.
//!
//! The row Jacobian of `P_D` with respect to the pose
//! `x = (p_n, p_e, p_d, roll, pitch, yaw)` is assembled from five blocks:
//!
//! ```text
//! A_P = ∂P_D/∂S · ( ∂S/∂R · ∂R/∂x  +  ∂S/∂σ · ∂σ/∂(λ,φ) · ∂(λ,φ)/∂p_b · ∂p_b/∂x )
//! ```
//!
//! and the variance follows from `C_PD = A_P · C_xx · A_Pᵀ`.

use std::f64::consts::PI;

use nalgebra::{Matrix2x3, Matrix3x6, Matrix6, RowVector2, RowVector6, SymmetricEigen};
use serde::Serialize;

use crate::detection::{self, BOLTZMANN};
use crate::error::{Error, Result};
use crate::geometry::{self, AircraftState, AspectAngles, BodyVector, RadarSite, NADIR_EPSILON};
use crate::rcs::{ellipsoid_denominator, RcsModel};

/// `|sin(n·λ/2)|` below which the spikeball sits on a lobe corner.
pub const RCS_CORNER_EPSILON: f64 = 1e-9;
/// `|cos θ|` below which the Euler parameterisation is degenerate.
pub const GIMBAL_LOCK_EPSILON: f64 = 1e-6;
/// Ratio of horizontal to total body-frame distance below which the line of
/// sight is flagged as near nadir.
pub const NEAR_NADIR_RATIO: f64 = 1e-6;

const SYMMETRY_TOLERANCE: f64 = 1e-12;
const PSD_TOLERANCE: f64 = 1e-10;
const NEGATIVE_VARIANCE_FLOOR: f64 = -1e-18;

/// Neighbourhoods in which the linearisation is unreliable.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ValidityFlags {
    pub near_nadir: bool,
    pub near_gimbal_lock: bool,
    pub near_rcs_corner: bool,
}

impl ValidityFlags {
    pub fn any(&self) -> bool {
        self.near_nadir || self.near_gimbal_lock || self.near_rcs_corner
    }
}

/// `∂P_D/∂x` as a 1×6 row, with validity flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdJacobian {
    pub partials: RowVector6<f64>,
    pub flags: ValidityFlags,
}

impl PdJacobian {
    /// First-order change in `P_D` for a pose perturbation.
    pub fn delta_pd(&self, delta_x: &nalgebra::Vector6<f64>) -> f64 {
        (self.partials * delta_x)[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PdVariance {
    pub c_pd: f64,
    pub sigma_pd: f64,
}

/// Symmetric positive-semidefinite 6×6 pose covariance, ordered
/// `(p_n, p_e, p_d, roll, pitch, yaw)`; units m², m·rad and rad².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseCovariance(Matrix6<f64>);

impl PoseCovariance {
    pub fn new(matrix: Matrix6<f64>) -> Result<Self> {
        if !matrix.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidCovariance("non-finite entry".into()));
        }
        let scale = matrix.amax();
        let asym = (matrix - matrix.transpose()).amax();
        if asym > SYMMETRY_TOLERANCE * scale {
            return Err(Error::InvalidCovariance(format!(
                "asymmetry {asym:e} exceeds tolerance for scale {scale:e}"
            )));
        }
        let trace = matrix.trace();
        if trace < 0.0 {
            return Err(Error::InvalidCovariance(format!("negative trace {trace}")));
        }
        let symmetric = (matrix + matrix.transpose()) * 0.5;
        let min_eig = SymmetricEigen::new(symmetric).eigenvalues.min();
        if min_eig < -PSD_TOLERANCE * trace {
            return Err(Error::InvalidCovariance(format!(
                "not positive semidefinite (smallest eigenvalue {min_eig:e})"
            )));
        }
        Ok(Self(matrix))
    }

    /// `σ_pa²·I₃ ⊕ σ_ang²·I₃` with `sigma_ang` in radians.
    pub fn block_diagonal(sigma_pa: f64, sigma_ang: f64) -> Result<Self> {
        if !(sigma_pa >= 0.0 && sigma_ang >= 0.0) {
            return Err(Error::InvalidCovariance(format!(
                "standard deviations must be non-negative, got {sigma_pa} and {sigma_ang}"
            )));
        }
        let (vp, va) = (sigma_pa * sigma_pa, sigma_ang * sigma_ang);
        Self::new(Matrix6::from_diagonal(&nalgebra::Vector6::new(vp, vp, vp, va, va, va)))
    }

    pub fn matrix(&self) -> &Matrix6<f64> {
        &self.0
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.0 * factor)
    }
}

/// `∂P_D/∂S = exp(-W²) / (2√π·√(S + ½))`
pub fn d_pd_d_snr(snr: f64, p_fa: f64) -> Result<f64> {
    let w = detection::w_statistic(snr, p_fa)?;
    Ok((-w * w).exp() / (2.0 * PI.sqrt() * (snr + 0.5).sqrt()))
}

/// `∂S/∂R = -4·c_r·σ_r / (k·R⁵)`
pub fn d_snr_d_range(radar: &RadarSite, sigma_r: f64, range_m: f64) -> Result<f64> {
    if !(range_m > 0.0) {
        return Err(Error::ZeroRange);
    }
    Ok(-4.0 * radar.c_r() * sigma_r / (BOLTZMANN * range_m.powi(5)))
}

/// `∂R/∂x = [(p_a - p_r)ᵀ/R, 0₁ₓ₃]`
pub fn d_range_d_state(state: &AircraftState, radar: &RadarSite) -> Result<RowVector6<f64>> {
    let offset = state.position() - radar.position();
    let r = offset.norm();
    if !(r > 0.0) {
        return Err(Error::ZeroRange);
    }
    let u = offset / r;
    Ok(RowVector6::new(u.x, u.y, u.z, 0.0, 0.0, 0.0))
}

/// `∂S/∂σ_r = c_r / (k·R⁴)`
pub fn d_snr_d_sigma(radar: &RadarSite, range_m: f64) -> Result<f64> {
    if !(range_m > 0.0) {
        return Err(Error::ZeroRange);
    }
    Ok(radar.c_r() / (BOLTZMANN * range_m.powi(4)))
}

/// `∂p_b/∂x` (3×6): `-R_nb` for position, then the attitude partials.
///
/// The attitude entries are closed forms in the offset `q = p_a - p_r`.
/// With `p_r - p_a` every entry flips sign relative to the derivative of
/// `radar_in_body`.
pub fn d_body_d_state(state: &AircraftState, radar: &RadarSite) -> Matrix3x6<f64> {
    let dcm = geometry::dcm_ned_to_body(state);
    let q = state.position() - radar.position();
    let (qn, qe, qd) = (q.x, q.y, q.z);
    let (sphi, cphi) = state.roll().sin_cos();
    let (sth, cth) = state.pitch().sin_cos();
    let (spsi, cpsi) = state.yaw().sin_cos();

    let a11 = -(cphi * spsi - cpsi * sphi * sth) * qd - (sphi * spsi + cphi * cpsi * sth) * qe;
    let a12 = cpsi * sth * qn - cpsi * cth * sphi * qe - cphi * cpsi * cth * qd;
    let a13 = (cphi * cpsi + sphi * spsi * sth) * qe - (cpsi * sphi - cphi * spsi * sth) * qd
        + cth * spsi * qn;
    // cos(ψ) in the leading factor; the printed `C{psi_a}` lost its backslash.
    let a21 = (cphi * cpsi + sphi * spsi * sth) * qd + (cpsi * sphi - cphi * spsi * sth) * qe;
    let a22 = spsi * sth * qn - cphi * cth * spsi * qd - cth * sphi * spsi * qe;
    let a23 = (cphi * spsi - cpsi * sphi * sth) * qe - (sphi * spsi + cphi * cpsi * sth) * qd
        - cpsi * cth * qn;
    let a31 = cth * sphi * qd - cphi * cth * qe;
    let a32 = cth * qn + cphi * sth * qd + sphi * sth * qe;
    let a33 = 0.0;

    let mut j = Matrix3x6::zeros();
    j.fixed_view_mut::<3, 3>(0, 0).copy_from(&(-dcm));
    j.fixed_view_mut::<3, 3>(0, 3).copy_from(&nalgebra::Matrix3::new(
        a11, a12, a13, a21, a22, a23, a31, a32, a33,
    ));
    j
}

/// Rows `∂λ/∂p_b` and `∂φ/∂p_b`.
pub fn d_angles_d_body(b: &BodyVector) -> Result<Matrix2x3<f64>> {
    let h2 = b.x * b.x + b.y * b.y;
    let h = h2.sqrt();
    if h < NADIR_EPSILON {
        return Err(Error::NadirSingularity);
    }
    let r2 = h2 + b.z * b.z;
    let alpha = r2 * h;
    Ok(Matrix2x3::new(
        -b.y / h2,
        b.x / h2,
        0.0,
        -b.x * b.z / alpha,
        -b.y * b.z / alpha,
        h / r2,
    ))
}

/// `(∂σ/∂λ, ∂σ/∂φ)` and whether the point sits on a spikeball corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RcsPartials {
    pub gradient: RowVector2<f64>,
    pub near_corner: bool,
}

/// `sign` with `sign(0) = 0`.
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn d_rcs_d_angles(model: &RcsModel, angles: &AspectAngles) -> Result<RcsPartials> {
    match *model {
        RcsModel::Constant { .. } => Ok(RcsPartials {
            gradient: RowVector2::zeros(),
            near_corner: false,
        }),
        RcsModel::Ellipsoid { a, b, c } => {
            let d = ellipsoid_denominator(a, b, c, angles);
            if !(d > 0.0) {
                return Err(Error::DegenerateModel(format!("ellipsoid denominator is {d}")));
            }
            let abc2 = (a * b * c).powi(2);
            let d3 = d * d * d;
            let (sl, _) = angles.lambda.sin_cos();
            let (sp, cp) = angles.phi.sin_cos();
            // κ = ∂D/∂λ / sin(2λ)
            let kappa = a * a * cp * cp + b * b * sp * sp - c * c;
            let d_lambda = -2.0 * PI * abc2 * (2.0 * angles.lambda).sin() * kappa / d3;
            let d_phi = -2.0 * PI * abc2 * (b * b - a * a) * sl * sl * (2.0 * angles.phi).sin() / d3;
            Ok(RcsPartials {
                gradient: RowVector2::new(d_lambda, d_phi),
                near_corner: false,
            })
        }
        RcsModel::SimpleSpikeball { a_s, n, .. } => {
            let half_n = 0.5 * f64::from(n);
            let (s, c) = (half_n * angles.lambda).sin_cos();
            let d_lambda = half_n * a_s * c * sign(a_s * s);
            Ok(RcsPartials {
                gradient: RowVector2::new(d_lambda, 0.0),
                near_corner: s.abs() < RCS_CORNER_EPSILON,
            })
        }
    }
}

/// Assembles `A_P` at `state` from the five partial blocks.
pub fn assemble_a_p(state: &AircraftState, radar: &RadarSite, model: &RcsModel) -> Result<PdJacobian> {
    let point = detection::evaluate_point(state, radar, model)?;
    let body = geometry::radar_in_body(state, radar);

    let mut flags = ValidityFlags {
        near_nadir: body.horizontal_norm() < NEAR_NADIR_RATIO * body.as_vector().norm(),
        near_gimbal_lock: state.pitch().cos().abs() < GIMBAL_LOCK_EPSILON,
        near_rcs_corner: false,
    };

    let dpd_ds = d_pd_d_snr(point.snr, radar.p_fa())?;
    let ds_dr = d_snr_d_range(radar, point.sigma_r, point.range_m)?;
    let dr_dx = d_range_d_state(state, radar)?;
    let ds_dsigma = d_snr_d_sigma(radar, point.range_m)?;

    let dsigma_dx = match point.angles {
        Some(angles) if model.depends_on_aspect() => {
            let rcs = d_rcs_d_angles(model, &angles)?;
            flags.near_rcs_corner = rcs.near_corner;
            rcs.gradient * d_angles_d_body(&body)? * d_body_d_state(state, radar)
        }
        _ => RowVector6::zeros(),
    };

    Ok(PdJacobian {
        partials: dpd_ds * (ds_dr * dr_dx + ds_dsigma * dsigma_dx),
        flags,
    })
}

/// `C_PD = A_P·C_xx·A_Pᵀ`, `σ_pd = √C_PD`.
pub fn propagate_variance(a_p: &PdJacobian, c_xx: &PoseCovariance) -> Result<PdVariance> {
    let c_pd = (a_p.partials * c_xx.matrix() * a_p.partials.transpose())[0];
    if c_pd.is_nan() {
        return Err(Error::NonFinite("propagated variance"));
    }
    if c_pd < NEGATIVE_VARIANCE_FLOOR {
        return Err(Error::NegativeVariance(c_pd));
    }
    let c_pd = c_pd.max(0.0);
    Ok(PdVariance {
        c_pd,
        sigma_pd: c_pd.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{Vector3, Vector6};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn radar() -> RadarSite {
        RadarSite::new(Vector3::zeros(), 167.4, 1.7e-4).unwrap()
    }

    fn state(p: [f64; 3], a: [f64; 3]) -> AircraftState {
        AircraftState::new(Vector3::from(p), a[0], a[1], a[2]).unwrap()
    }

    #[test]
    fn dpd_dsnr_at_w_zero() {
        let p_fa = 1.7e-4;
        let s = -f64::ln(p_fa) - 0.5;
        let expected = 1.0 / (2.0 * PI.sqrt() * (s + 0.5).sqrt());
        assert_eq!(d_pd_d_snr(s, p_fa).unwrap(), expected);
        assert_eq!(d_pd_d_snr(1e8, p_fa).unwrap(), 0.0);
    }

    #[test]
    fn dpd_dsnr_matches_central_difference() {
        let (s, p_fa) = (8.1797, 1.7e-4);
        let h = 1e-6 * s;
        let fd = (detection::probability_of_detection(s + h, p_fa).unwrap()
            - detection::probability_of_detection(s - h, p_fa).unwrap())
            / (2.0 * h);
        assert_relative_eq!(d_pd_d_snr(s, p_fa).unwrap(), fd, max_relative = 1e-8);
    }

    #[test]
    fn dsnr_drange_identities() {
        let r = radar();
        for (sigma, range) in [(0.2, 650000.0), (0.05, 1.0e4), (1.3, 2.2e6)] {
            let s = detection::snr(&r, sigma, range).unwrap();
            assert_relative_eq!(d_snr_d_range(&r, sigma, range).unwrap(), -4.0 * s / range, max_relative = 1e-14);
        }
        assert_eq!(d_snr_d_range(&r, 0.0, 650000.0).unwrap(), 0.0);
        assert_eq!(d_snr_d_range(&r, 0.2, 0.0), Err(Error::ZeroRange));
        let h = 1e-6 * 650000.0;
        let fd = (detection::snr(&r, 0.2, 650000.0 + h).unwrap()
            - detection::snr(&r, 0.2, 650000.0 - h).unwrap())
            / (2.0 * h);
        assert_relative_eq!(d_snr_d_range(&r, 0.2, 650000.0).unwrap(), fd, max_relative = 1e-9);
    }

    #[test]
    fn dsnr_dsigma_identities() {
        let r = radar();
        let s = detection::snr(&r, 0.2, 650000.0).unwrap();
        let g = d_snr_d_sigma(&r, 650000.0).unwrap();
        assert_relative_eq!(g, s / 0.2, max_relative = 1e-14);
        assert_relative_eq!(d_snr_d_sigma(&r, 1300000.0).unwrap(), g / 16.0, max_relative = 1e-14);
        let h = 1e-6 * 0.2;
        let fd = (detection::snr(&r, 0.2 + h, 650000.0).unwrap()
            - detection::snr(&r, 0.2 - h, 650000.0).unwrap())
            / (2.0 * h);
        assert_relative_eq!(g, fd, max_relative = 1e-9);
        assert_eq!(d_snr_d_sigma(&r, 0.0), Err(Error::ZeroRange));
    }

    #[test]
    fn drange_dstate_examples() {
        let g = d_range_d_state(&state([5.0, 0.0, 0.0], [0.3, 0.2, 0.1]), &radar()).unwrap();
        assert_eq!(g, RowVector6::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0));
        let g = d_range_d_state(&state([3.0, -7.0, 11.0], [0.0; 3]), &radar()).unwrap();
        assert_relative_eq!(g.fixed_columns::<3>(0).norm(), 1.0, max_relative = 1e-15);
        assert_eq!(d_range_d_state(&state([0.0; 3], [0.0; 3]), &radar()), Err(Error::ZeroRange));
    }

    #[test]
    fn dbody_dstate_structure() {
        let j = d_body_d_state(&state([100.0, 200.0, -50.0], [0.0; 3]), &radar());
        assert_eq!(j.fixed_view::<3, 3>(0, 0).into_owned(), -nalgebra::Matrix3::identity());
        let j = d_body_d_state(&state([1.0e5, -3.0e5, -2000.0], [0.4, -0.3, 2.0]), &radar());
        assert_eq!(j[(2, 5)], 0.0);
    }

    #[test]
    fn dangles_dbody_examples() {
        let j = d_angles_d_body(&BodyVector { x: 1.0, y: 0.0, z: 0.0 }).unwrap();
        assert_eq!(j.row(0).into_owned(), nalgebra::RowVector3::new(0.0, 1.0, 0.0));
        assert_eq!(j.row(1).into_owned(), nalgebra::RowVector3::new(0.0, 0.0, 1.0));
        let j = d_angles_d_body(&BodyVector { x: -3.0, y: 2.0, z: 9.0 }).unwrap();
        assert_eq!(j[(0, 2)], 0.0);
        assert_eq!(
            d_angles_d_body(&BodyVector { x: 0.0, y: 0.0, z: 1.0 }),
            Err(Error::NadirSingularity)
        );
    }

    #[test]
    fn drcs_dangles_examples() {
        let c = d_rcs_d_angles(&RcsModel::default_constant(), &AspectAngles { lambda: 0.3, phi: 0.1 }).unwrap();
        assert_eq!(c.gradient, RowVector2::zeros());

        let e = d_rcs_d_angles(&RcsModel::default_ellipsoid(), &AspectAngles { lambda: FRAC_PI_2, phi: 0.0 }).unwrap();
        assert!(e.gradient[0].abs() < 1e-15);

        let s = d_rcs_d_angles(&RcsModel::default_spikeball(), &AspectAngles { lambda: FRAC_PI_4, phi: 0.0 }).unwrap();
        assert!(s.gradient[0].abs() < 1e-15);
        assert!(!s.near_corner);
    }

    #[test]
    fn spikeball_corner_is_flagged() {
        let m = RcsModel::default_spikeball();
        let exact = d_rcs_d_angles(&m, &AspectAngles { lambda: 0.0, phi: 0.0 }).unwrap();
        assert!(exact.near_corner);
        assert_eq!(exact.gradient[0], 0.0);
        // sin(2·(-π/2)) is -1.2e-16 in floating point: still flagged, and the
        // one-sided slope is kept.
        let rounded = d_rcs_d_angles(&m, &AspectAngles { lambda: -FRAC_PI_2, phi: 0.0 }).unwrap();
        assert!(rounded.near_corner);
        assert_relative_eq!(rounded.gradient[0].abs(), 0.4, max_relative = 1e-12);
    }

    #[test]
    fn ellipsoid_partials_match_central_difference() {
        let m = RcsModel::default_ellipsoid();
        let h = 1e-6;
        for (l, p) in [(0.3, 0.1), (-2.0, 0.7), (1.2, -0.4), (2.9, 1.1), (-0.8, -1.3)] {
            let g = d_rcs_d_angles(&m, &AspectAngles { lambda: l, phi: p }).unwrap().gradient;
            let f = |l: f64, p: f64| m.value(&AspectAngles { lambda: l, phi: p }).unwrap();
            let fl = (f(l + h, p) - f(l - h, p)) / (2.0 * h);
            let fp = (f(l, p + h) - f(l, p - h)) / (2.0 * h);
            assert_relative_eq!(g[0], fl, max_relative = 1e-7);
            assert_relative_eq!(g[1], fp, max_relative = 1e-7);
        }
    }

    #[test]
    fn constant_model_has_no_attitude_sensitivity() {
        let j = assemble_a_p(
            &state([2.0e5, 6.0e5, -3000.0], [0.2, -0.1, 0.7]),
            &radar(),
            &RcsModel::default_constant(),
        )
        .unwrap();
        for i in 3..6 {
            assert_eq!(j.partials[i], 0.0);
        }
        assert!(j.partials[0] != 0.0);
    }

    #[test]
    fn constant_model_tolerates_nadir() {
        let j = assemble_a_p(&state([0.0, 0.0, -3000.0], [0.0; 3]), &radar(), &RcsModel::default_constant()).unwrap();
        assert!(j.flags.near_nadir);
        assert!(assemble_a_p(&state([0.0, 0.0, -3000.0], [0.0; 3]), &radar(), &RcsModel::default_ellipsoid()).is_err());
    }

    #[test]
    fn gimbal_lock_is_flagged_not_rejected() {
        let j = assemble_a_p(
            &state([2.0e5, 6.0e5, -3000.0], [0.1, FRAC_PI_2, 0.3]),
            &radar(),
            &RcsModel::default_ellipsoid(),
        )
        .unwrap();
        assert!(j.flags.near_gimbal_lock);
        assert!(j.partials.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn assembled_jacobian_is_the_block_product() {
        let r = radar();
        let s = state([3.1e5, -5.2e5, -4000.0], [0.05, -0.12, 1.9]);
        for model in [RcsModel::default_ellipsoid(), RcsModel::default_spikeball()] {
            let j = assemble_a_p(&s, &r, &model).unwrap();
            let p = detection::evaluate_point(&s, &r, &model).unwrap();
            let body = geometry::radar_in_body(&s, &r);
            let manual = d_pd_d_snr(p.snr, r.p_fa()).unwrap()
                * (d_snr_d_range(&r, p.sigma_r, p.range_m).unwrap() * d_range_d_state(&s, &r).unwrap()
                    + d_snr_d_sigma(&r, p.range_m).unwrap()
                        * (d_rcs_d_angles(&model, &p.angles.unwrap()).unwrap().gradient
                            * d_angles_d_body(&body).unwrap()
                            * d_body_d_state(&s, &r)));
            assert_eq!(j.partials, manual);
        }
    }

    #[test]
    fn variance_examples() {
        let zero = PdJacobian {
            partials: RowVector6::zeros(),
            flags: ValidityFlags::default(),
        };
        let c = PoseCovariance::block_diagonal(10.0, 0.01).unwrap();
        assert_eq!(propagate_variance(&zero, &c).unwrap().c_pd, 0.0);

        let a = PdJacobian {
            partials: RowVector6::new(1e-6, -2e-6, 3e-7, 0.5, -0.25, 1.5),
            flags: ValidityFlags::default(),
        };
        let diag = Vector6::new(100.0, 4.0, 9.0, 1e-4, 2e-4, 3e-4);
        let c = PoseCovariance::new(Matrix6::from_diagonal(&diag)).unwrap();
        let expected: f64 = (0..6).map(|i| a.partials[i].powi(2) * diag[i]).sum();
        let v = propagate_variance(&a, &c).unwrap();
        assert_relative_eq!(v.c_pd, expected, max_relative = 1e-14);
        assert_eq!(v.sigma_pd, v.c_pd.sqrt());
    }

    #[test]
    fn covariance_validation() {
        let mut m = Matrix6::identity();
        m[(0, 1)] = 0.5;
        assert!(matches!(PoseCovariance::new(m), Err(Error::InvalidCovariance(_))));
        let m = Matrix6::from_diagonal(&Vector6::new(1.0, 1.0, 1.0, 1.0, 1.0, -1.0));
        assert!(matches!(PoseCovariance::new(m), Err(Error::InvalidCovariance(_))));
        let mut m = Matrix6::identity();
        m[(3, 3)] = f64::NAN;
        assert!(PoseCovariance::new(m).is_err());
        assert!(PoseCovariance::block_diagonal(-1.0, 0.0).is_err());
        assert!(PoseCovariance::new(Matrix6::zeros()).is_ok());
        // rank-deficient but PSD
        let v = Vector6::new(1.0, 2.0, 3.0, 0.1, 0.2, 0.3);
        assert!(PoseCovariance::new(v * v.transpose()).is_ok());
    }
}
