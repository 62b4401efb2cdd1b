mod common;

use common::{mat3, nominal_j, rng, rotation, spin, vec3};
use rand::Rng;
use so3l1::controllers::Gains;
use so3l1::disturbances::theta_truth;
use so3l1::l1::{
    adaptation_update, l1_moments, lowpass_step, p_matrix, proj_gamma, theta_tilde, tilde_errors,
    AdaptationState, L1Params, L1State, RefIntegrator, ReferenceState, TildeErrors,
};
use so3l1::rigid_body::{
    rk4_attitude_step, rk4_step, AttitudeIntegrator, PlantParams, RigidBodyState, GRAVITY,
};
use so3l1::so3::{c_matrix, Mat3, Vec3};
use so3l1::trajectories::AttitudeSetpoint;

#[test]
fn tilde_attitude_error_kinematics() {
    let mut r = rng(31);
    for _ in 0..200 {
        let (r0, rh0) = (rotation(&mut r), rotation(&mut r));
        let (w, wh) = (vec3(&mut r, 2.0), vec3(&mut r, 2.0));
        let at = |h: f64| {
            let reference = ReferenceState {
                r_hat: spin(&rh0, &wh, h),
                omega_hat: wh,
            };
            tilde_errors(&spin(&r0, &w, h), &w, &reference)
        };
        let now = at(0.0);
        let h = 1e-5;
        let (plus, minus) = (at(h), at(-h));
        let de_r = (plus.e_r - minus.e_r) / (2.0 * h);
        let dpsi = (plus.psi - minus.psi) / (2.0 * h);
        let q = r0.relative_to(&rh0);
        assert!((de_r - c_matrix(&q) * now.e_omega).amax() < 1e-8);
        assert!((dpsi - now.e_r.dot(&now.e_omega)).abs() < 1e-8);
    }
}

/// Random closed-loop configuration with inertia mismatch and an external
/// moment; returns `(J e_Omega~' by central difference, model right-hand side)`.
fn tilde_rate_pair(seed: u64, h: f64) -> (Vec3, Vec3) {
    let mut r = rng(seed);
    let j = nominal_j();
    let j_inv = j.try_inverse().unwrap();
    let dj = mat3(&mut r, 1e-3);
    let j_bar = j + Mat3::identity() * 3e-3 + (dj + dj.transpose()) * 0.5;
    let p = PlantParams::new(1.129, j, j_bar, GRAVITY).unwrap();
    let g = Gains::defaults(&j).unwrap();
    let params = L1Params::defaults();
    let theta_e = vec3(&mut r, 0.5);

    let mut s = RigidBodyState::at_rest(rotation(&mut r));
    s.omega = vec3(&mut r, 2.0);
    let mut st = L1State::new(rotation(&mut r), vec3(&mut r, 2.0));
    st.adapt.theta_hat = vec3(&mut r, 1.0);
    st.adapt.filter_state = vec3(&mut r, 1.0);
    let sp = AttitudeSetpoint {
        r_d: rotation(&mut r),
        omega_d: vec3(&mut r, 1.0),
        domega_d: vec3(&mut r, 1.0),
    };

    let mom = l1_moments(&st, &s, &sp, &g, &j, &j_inv, &params, h);
    let theta = theta_truth(&mom.mu, &s.r, &s.omega, &sp, &j, &j_bar, &theta_e).unwrap();
    let th_tilde = theta_tilde(&st.adapt.theta_hat, &theta, &s.r, &st.reference.r_hat);
    let tilde = mom.tilde;
    let pm = p_matrix(&s.r, &st.reference.r_hat, &j).unwrap();
    let rhs = -tilde.e_r * g.k_r_tilde - tilde.e_omega * g.k_omega_tilde + pm * th_tilde;

    let e_at = |step: f64| {
        let next = rk4_step(
            &s,
            0.0,
            &mom.m,
            |_, _| theta_e,
            0.0,
            step,
            &p,
            AttitudeIntegrator::LieRk4,
        )
        .unwrap();
        let (rh, wh) = rk4_attitude_step(
            &st.reference.r_hat,
            &st.reference.omega_hat,
            &mom.m_hat,
            &j,
            &j_inv,
            step,
        )
        .unwrap();
        let reference = ReferenceState {
            r_hat: rh,
            omega_hat: wh,
        };
        tilde_errors(&next.r, &next.omega, &reference).e_omega
    };
    let fd = j * (e_at(h) - e_at(-h)) / (2.0 * h);
    (fd, rhs)
}

#[test]
fn closed_loop_tilde_rate_dynamics() {
    for seed in 0..25 {
        // The applied moment includes one filter step of length h, so each
        // difference is compared with its own right-hand side.
        let (fd1, rhs1) = tilde_rate_pair(seed, 1e-3);
        let (fd2, rhs2) = tilde_rate_pair(seed, 5e-4);
        let (e1, e2) = ((fd1 - rhs1).norm(), (fd2 - rhs2).norm());
        assert!(
            e2 < 1e-4 * (1.0 + rhs2.norm()),
            "seed {seed}: {e2:e}, rhs {rhs2}"
        );
        assert!(
            e2 <= 0.6 * e1 || e2 < 1e-10,
            "seed {seed}: no convergence {e1:e} -> {e2:e}"
        );
    }
}

#[test]
fn projection_inequality_holds_for_random_triples() {
    let mut r = rng(41);
    let a = mat3(&mut r, 1.0);
    let gamma = (a * a.transpose() + Mat3::identity()) * 1e5;
    let params = L1Params::new(gamma, 2.0, 10.0, 0.1, RefIntegrator::Rk4).unwrap();
    let gamma_inv = params.gamma_inv();
    let outer = params.theta_bound();
    let mut boundary_layer_hits = 0;
    for _ in 0..100_000 {
        let unit = |r: &mut rand_chacha::ChaCha8Rng| vec3(r, 1.0).normalize();
        let theta = unit(&mut r) * r.random_range(0.0..params.theta_max);
        let theta_hat = unit(&mut r) * r.random_range(0.0..outer);
        let y = vec3(&mut r, 100.0);
        let proj = proj_gamma(&theta_hat, &y, &params);
        let lhs = (theta_hat - theta).dot(&(gamma_inv * proj - y));
        assert!(lhs <= 1e-9 * (1.0 + y.norm() * outer), "{lhs}");
        boundary_layer_hits += (theta_hat.norm() > params.theta_max) as usize;
    }
    assert!(boundary_layer_hits > 1000);
}

#[test]
fn estimate_never_leaves_the_boundary_layer() {
    let j = nominal_j();
    let j_inv = j.try_inverse().unwrap();
    let params = L1Params::defaults();
    let mut r = rng(51);
    let mut a = AdaptationState::default();
    for _ in 0..20_000 {
        let tilde = TildeErrors {
            e_r: vec3(&mut r, 1.0),
            e_omega: vec3(&mut r, 50.0) + Vec3::new(-40.0, 0.0, 0.0),
            psi: 0.0,
        };
        a = adaptation_update(&a, &tilde, &Mat3::identity(), &j_inv, 0.05, 5e-5, &params);
        assert!(a.theta_hat.norm() <= params.theta_max * (1.0 + params.eps_proj));
    }
    // The persistent push saturates the estimate.
    assert!(a.theta_hat.norm() > params.theta_max);
}

#[test]
fn interior_update_is_plain_gradient() {
    let params = L1Params::defaults();
    let y = Vec3::new(1e-3, -2e-3, 5e-4);
    assert_eq!(
        proj_gamma(&Vec3::new(1.0, 2.0, 3.0), &y, &params),
        params.gamma() * y
    );
}

#[test]
fn outward_push_on_boundary_is_stopped() {
    let params = L1Params::defaults();
    let theta_hat = Vec3::new(1.0, 1.0, 0.0).normalize() * params.theta_bound();
    let y = theta_hat * 0.3 + Vec3::new(0.0, 0.0, 1.0);
    let p = proj_gamma(&theta_hat, &y, &params);
    assert!(p.dot(&theta_hat).abs() < 1e-6 * p.norm());
    assert!(p.z > 0.0);
}

#[test]
fn filter_has_unit_dc_gain() {
    let u = Vec3::new(1.7, -0.3, 4.0);
    let mut x = Vec3::zeros();
    for _ in 0..200_000 {
        x = lowpass_step(&x, &u, 2.0, 1e-3).0;
    }
    assert!((x - u).amax() < 1e-9);
    let mut x = Vec3::zeros();
    for _ in 0..500 {
        x = lowpass_step(&x, &Vec3::new(1.0, 1.0, 1.0), 2.0, 1e-3).0;
    }
    assert!((x.x - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
}

#[test]
fn p_matrix_has_unit_determinant() {
    let mut r = rng(61);
    let j = nominal_j();
    for _ in 0..1000 {
        let (a, b) = (rotation(&mut r), rotation(&mut r));
        assert!((p_matrix(&a, &b, &j).unwrap().determinant() - 1.0).abs() < 1e-10);
        assert!((p_matrix(&a, &a, &j).unwrap() - Mat3::identity()).amax() < 1e-12);
        assert!(
            (p_matrix(&a, &b, &(Mat3::identity() * 0.3)).unwrap() - Mat3::identity()).amax()
                < 1e-12
        );
    }
}
