#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use so3l1::so3::{Mat3, RotationMatrix, Vec3};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn vec3(rng: &mut ChaCha8Rng, scale: f64) -> Vec3 {
    Vec3::new(
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
    )
}

pub fn mat3(rng: &mut ChaCha8Rng, scale: f64) -> Mat3 {
    Mat3::from_fn(|_, _| rng.random_range(-scale..scale))
}

/// Uniformly distributed rotation from a random unit quaternion.
pub fn rotation(rng: &mut ChaCha8Rng) -> RotationMatrix {
    let q = nalgebra::UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(
        normal(rng),
        normal(rng),
        normal(rng),
        normal(rng),
    ));
    RotationMatrix::new(*q.to_rotation_matrix().matrix()).unwrap()
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random_range(1e-12..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn nominal_j() -> Mat3 {
    Mat3::from_diagonal(&Vec3::new(6.968e-3, 6.211e-3, 10.34e-3))
}

/// `R'` over `h` for a body rotating at constant body rate `w`.
pub fn spin(r: &RotationMatrix, w: &Vec3, h: f64) -> RotationMatrix {
    *r * RotationMatrix::exp(&(w * h))
}
