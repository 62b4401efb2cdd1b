mod common;

use common::{mat3, rng, rotation, vec3};
use proptest::prelude::*;
use so3l1::error::Error;
use so3l1::so3::{attitude_errors, c_matrix, hat, psi, vee, Mat3, RotationMatrix, Vec3};

const TOL: f64 = 1e-10;

#[test]
fn trace_of_hat_times_matrix() {
    let mut r = rng(1);
    for _ in 0..10_000 {
        let x = vec3(&mut r, 5.0);
        let a = mat3(&mut r, 5.0);
        let lhs = (hat(&x) * a).trace();
        let skew = a - a.transpose();
        let rhs = -x.dot(&vee(&skew).unwrap());
        assert!((lhs - rhs).abs() < TOL, "{lhs} vs {rhs}");
    }
}

#[test]
fn hat_is_equivariant_under_rotation() {
    let mut r = rng(2);
    for _ in 0..10_000 {
        let x = vec3(&mut r, 5.0);
        let rot = rotation(&mut r);
        let m = rot.matrix();
        let lhs = m * hat(&x) * m.transpose();
        let rhs = hat(&(m * x));
        assert!((lhs - rhs).amax() < TOL);
    }
}

#[test]
fn hat_sandwich_identity() {
    let mut r = rng(3);
    for _ in 0..10_000 {
        let x = vec3(&mut r, 5.0);
        let a = mat3(&mut r, 5.0);
        let lhs = hat(&x) * a + a.transpose() * hat(&x);
        let rhs = hat(&((Mat3::identity() * a.trace() - a) * x));
        assert!((lhs - rhs).amax() < TOL);
    }
}

#[test]
fn psi_stays_in_range() {
    let mut r = rng(4);
    for _ in 0..100_000 {
        let a = rotation(&mut r);
        let b = rotation(&mut r);
        let p = psi(&a, &b);
        assert!((0.0..=2.0).contains(&p));
    }
}

#[test]
fn c_matrix_norm_is_at_most_one() {
    let mut r = rng(5);
    for _ in 0..20_000 {
        let q = rotation(&mut r);
        let n = c_matrix(q.matrix()).singular_values().max();
        assert!(n <= 1.0 + 1e-12, "{n}");
    }
}

#[test]
fn psi_is_one_minus_cosine_of_relative_angle() {
    let mut r = rng(6);
    for _ in 0..1000 {
        let a = rotation(&mut r);
        let axis = vec3(&mut r, 1.0).normalize();
        let angle: f64 = rand::Rng::random_range(&mut r, 0.0..std::f64::consts::PI);
        let b = a * RotationMatrix::exp(&(axis * angle));
        assert!((psi(&b, &a) - (1.0 - angle.cos())).abs() < 1e-12);
    }
}

#[test]
fn vee_rejects_symmetric_input() {
    assert!(matches!(
        vee(&Mat3::identity()),
        Err(Error::NonSkewInput(_))
    ));
}

proptest! {
    #[test]
    fn vee_inverts_hat(x in -1e3..1e3f64, y in -1e3..1e3f64, z in -1e3..1e3f64) {
        let v = Vec3::new(x, y, z);
        prop_assert_eq!(vee(&hat(&v)).unwrap(), v);
    }

    #[test]
    fn hat_gives_cross_product(a in prop::array::uniform3(-10.0..10.0f64), b in prop::array::uniform3(-10.0..10.0f64)) {
        let (a, b) = (Vec3::from(a), Vec3::from(b));
        prop_assert!((hat(&a) * b - a.cross(&b)).amax() < 1e-12);
        prop_assert!((hat(&a) + hat(&a).transpose()).amax() == 0.0);
    }

    #[test]
    fn attitude_error_norm_matches_psi(w in prop::array::uniform3(-3.0..3.0f64)) {
        // |e_R|^2 = Psi (2 - Psi)
        let rd = RotationMatrix::identity();
        let r = RotationMatrix::exp(&Vec3::from(w));
        let (e_r, _) = attitude_errors(&r, &Vec3::zeros(), &rd, &Vec3::zeros());
        let p = psi(&r, &rd);
        prop_assert!((e_r.norm_squared() - p * (2.0 - p)).abs() < 1e-12);
    }
}
