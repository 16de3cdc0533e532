//! Finite-difference oracles for each analytic block and the assembled
//! gradient, plus covariance propagation properties.

use std::f64::consts::PI;

use nalgebra::{Matrix6, Vector3};
use proptest::prelude::*;

use radar_pd::detection;
use radar_pd::geometry::{self, wrap_angle, AircraftState, AspectAngles, BodyVector, RadarSite};
use radar_pd::jacobians::{self, PoseCovariance};
use radar_pd::rcs::RcsModel;

fn radar() -> RadarSite {
    RadarSite::new(Vector3::zeros(), 167.4, 1.7e-4).unwrap()
}

/// Ranges 10–1000 km, line of sight within ±30°, roll/pitch within ±60°.
fn pose() -> impl Strategy<Value = AircraftState> {
    (
        1e4..1e6f64,
        0.0..2.0 * PI,
        -0.5..0.5f64,
        -1.0..1.0f64,
        -1.0..1.0f64,
        -PI..PI,
    )
        .prop_map(|(r, az, el, roll, pitch, yaw)| {
            let p = Vector3::new(el.cos() * az.cos(), el.cos() * az.sin(), -el.sin()) * r;
            AircraftState::new(p, roll, pitch, yaw).unwrap()
        })
}

fn shifted(s: &AircraftState, k: usize, d: f64) -> AircraftState {
    let mut x = s.to_vector();
    x[k] += d;
    AircraftState::from_vector(&x).unwrap()
}

fn rel(a: f64, f: f64, floor: f64) -> f64 {
    (a - f).abs() / f.abs().max(floor)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn body_jacobian_matches_fd(s in pose()) {
        let r = radar();
        let a = jacobians::d_body_d_state(&s, &r);
        for k in 0..6 {
            // radar_in_body is linear in position, so a metre step costs no truncation
            let h = if k < 3 { 1.0 } else { 1e-6 };
            let f = (geometry::radar_in_body(&shifted(&s, k, h), &r).as_vector()
                - geometry::radar_in_body(&shifted(&s, k, -h), &r).as_vector())
                / (2.0 * h);
            let scale = f.amax();
            let rounding = 4.0 * f64::EPSILON * geometry::range(&s, &r) / h;
            for i in 0..3 {
                let bound = 1e-7 * f[i].abs().max(1e-2 * scale) + rounding;
                prop_assert!((a[(i, k)] - f[i]).abs() <= bound, "entry ({i},{k}): {} vs {}", a[(i, k)], f[i]);
            }
        }
    }

    #[test]
    fn angle_jacobian_matches_fd(s in pose()) {
        let b = geometry::radar_in_body(&s, &radar());
        let a = jacobians::d_angles_d_body(&b).unwrap();
        // λ curvature scales with the horizontal norm, not |b|
        let h = 1e-6 * b.x.hypot(b.y);
        for j in 0..3 {
            let at = |d: f64| {
                let mut v = b.as_vector();
                v[j] += d;
                geometry::aspect_angles(&BodyVector::from(v)).unwrap()
            };
            let (p, m) = (at(h), at(-h));
            let f = [wrap_angle(p.lambda - m.lambda) / (2.0 * h), (p.phi - m.phi) / (2.0 * h)];
            let scale = f[0].abs().max(f[1].abs());
            // central-difference rounding on angles of magnitude <= π
            let rounding = 4.0 * f64::EPSILON * PI / h;
            for i in 0..2 {
                let bound = 1e-8 * f[i].abs().max(1e-2 * scale) + rounding;
                prop_assert!((a[(i, j)] - f[i]).abs() <= bound, "({i},{j}): {} vs {}", a[(i, j)], f[i]);
            }
        }
    }

    #[test]
    fn ellipsoid_rcs_partials_match_fd(lambda in -3.1..3.1f64, phi in -1.4..1.4f64) {
        let m = RcsModel::default_ellipsoid();
        let g = jacobians::d_rcs_d_angles(&m, &AspectAngles { lambda, phi }).unwrap().gradient;
        let v = |l: f64, p: f64| m.value(&AspectAngles { lambda: l, phi: p }).unwrap();
        let h = 1e-6;
        let f = [(v(lambda + h, phi) - v(lambda - h, phi)) / (2.0 * h), (v(lambda, phi + h) - v(lambda, phi - h)) / (2.0 * h)];
        let scale = f[0].abs().max(f[1].abs());
        for i in 0..2 {
            prop_assert!(rel(g[i], f[i], (1e-2 * scale).max(1e-3)) < 1e-7, "{i}: {} vs {}", g[i], f[i]);
        }
    }

    #[test]
    fn spikeball_rcs_partials_match_fd_off_corner(lambda in -3.1..3.1f64, phi in -1.4..1.4f64) {
        prop_assume!((2.0 * lambda).sin().abs() > 1e-4);
        let m = RcsModel::default_spikeball();
        let g = jacobians::d_rcs_d_angles(&m, &AspectAngles { lambda, phi }).unwrap();
        prop_assert!(!g.near_corner);
        let v = |l: f64| m.value(&AspectAngles { lambda: l, phi }).unwrap();
        let h = 1e-7;
        let f = (v(lambda + h) - v(lambda - h)) / (2.0 * h);
        prop_assert!((g.gradient[0] - f).abs() < 1e-7);
        prop_assert_eq!(g.gradient[1], 0.0);
    }

    #[test]
    fn range_gradient_matches_fd(s in pose()) {
        let r = radar();
        let a = jacobians::d_range_d_state(&s, &r).unwrap();
        let range = geometry::range(&s, &r);
        for k in 0..6 {
            let h = if k < 3 { 1e-5 * range } else { 1e-6 };
            let f = (geometry::range(&shifted(&s, k, h), &r) - geometry::range(&shifted(&s, k, -h), &r)) / (2.0 * h);
            prop_assert!((a[k] - f).abs() < 1e-9, "{k}: {} vs {f}", a[k]);
        }
    }

    #[test]
    fn snr_partials_match_fd(sigma in 0.01..1.0f64, range in 1e4..1e6f64) {
        let r = radar();
        let h = 1e-6 * range;
        let f = (detection::snr(&r, sigma, range + h).unwrap() - detection::snr(&r, sigma, range - h).unwrap()) / (2.0 * h);
        prop_assert!(rel(jacobians::d_snr_d_range(&r, sigma, range).unwrap(), f, 0.0) < 1e-9);
        let h = 1e-6 * sigma;
        let f = (detection::snr(&r, sigma + h, range).unwrap() - detection::snr(&r, sigma - h, range).unwrap()) / (2.0 * h);
        prop_assert!(rel(jacobians::d_snr_d_sigma(&r, range).unwrap(), f, 0.0) < 1e-9);
    }

    #[test]
    fn pd_snr_partial_matches_fd(s in 0.0..200.0f64) {
        let p_fa = 1.7e-4;
        let h = 1e-6 * s.max(1e-3);
        let lo = (s - h).max(0.0);
        let f = (detection::probability_of_detection(s + h, p_fa).unwrap()
            - detection::probability_of_detection(lo, p_fa).unwrap())
            / (s + h - lo);
        let a = jacobians::d_pd_d_snr(s, p_fa).unwrap();
        prop_assert!((a - f).abs() <= (1e-6 * f.abs()).max(1e-8), "{a} vs {f}");
    }

    #[test]
    fn assembled_gradient_matches_fd(s in pose()) {
        let r = radar();
        let b = geometry::radar_in_body(&s, &r);
        for model in [RcsModel::default_constant(), RcsModel::default_ellipsoid(), RcsModel::default_spikeball()] {
            if matches!(model, RcsModel::SimpleSpikeball { .. }) && (2.0 * b.y.atan2(b.x)).sin().abs() < 1e-4 {
                continue;
            }
            let j = jacobians::assemble_a_p(&s, &r, &model).unwrap();
            for k in 0..6 {
                let h = if k < 3 { 1e-2 } else { 1e-6 };
                let pd = |d: f64| detection::evaluate_point(&shifted(&s, k, d), &r, &model).unwrap().p_d;
                let f = (pd(h) - pd(-h)) / (2.0 * h);
                let a = j.partials[k];
                prop_assert!((a - f).abs() <= (1e-6 * f.abs()).max(1e-8), "{} entry {k}: {a} vs {f}", model.name());
            }
        }
    }

    #[test]
    fn variance_scales_quadratically(s in pose(), factor in 0.0..10.0f64) {
        let r = radar();
        let j = jacobians::assemble_a_p(&s, &r, &RcsModel::default_ellipsoid()).unwrap();
        let base = jacobians::propagate_variance(&j, &PoseCovariance::block_diagonal(10.0, 0.01).unwrap()).unwrap();
        let scaled = jacobians::propagate_variance(
            &j,
            &PoseCovariance::block_diagonal(10.0 * factor, 0.01 * factor).unwrap(),
        ).unwrap();
        prop_assert!((scaled.sigma_pd - factor * base.sigma_pd).abs() <= 1e-12 * (1.0 + factor * base.sigma_pd));
    }

    #[test]
    fn variance_is_nonnegative_for_random_psd(s in pose(), entries in proptest::collection::vec(-1.0..1.0f64, 36)) {
        let l = Matrix6::from_row_slice(&entries);
        let c = PoseCovariance::new(l * l.transpose()).unwrap();
        let j = jacobians::assemble_a_p(&s, &radar(), &RcsModel::default_spikeball()).unwrap();
        let v = jacobians::propagate_variance(&j, &c).unwrap();
        prop_assert!(v.c_pd >= 0.0);
        prop_assert_eq!(v.sigma_pd, v.c_pd.sqrt());
    }
}

#[test]
fn table_point_gradient_drives_the_sensitivity() {
    // At 20° the ellipsoid A_P, propagated through each level's covariance,
    // gives 3σ values that grow with the level.
    let r = radar();
    let theta = 20f64.to_radians();
    let s = AircraftState::new(Vector3::new(650e3 * theta.sin(), 650e3 * theta.cos(), -3000.0), 0.0, 0.0, 0.0).unwrap();
    let j = jacobians::assemble_a_p(&s, &r, &RcsModel::default_ellipsoid()).unwrap();
    let three_sigma: Vec<f64> = [(0.1, 0.1), (10.0, 1.0), (100.0, 2.0)]
        .iter()
        .map(|&(pa, ang)| {
            let c = PoseCovariance::block_diagonal(pa, f64::to_radians(ang)).unwrap();
            3.0 * jacobians::propagate_variance(&j, &c).unwrap().sigma_pd
        })
        .collect();
    assert!(three_sigma[0] < three_sigma[1] && three_sigma[1] < three_sigma[2]);
    assert!(three_sigma[2] > 1e-3);
}
