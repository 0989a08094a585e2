#![allow(dead_code)]

use prabhakar::mlf::PrabhakarParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// ρ ∈ [0.5, 2], μ ∈ (1, 2], γ ∈ [0.5, 2], ω ∈ [−1, 1], s ∈ [0.1, 2].
pub fn kernel_case(rng: &mut ChaCha8Rng) -> (PrabhakarParams, f64) {
    let rho = rng.gen_range(0.5..=2.0);
    let mu = 2.0 - rng.gen_range(0.0..1.0);
    let gamma = rng.gen_range(0.5..=2.0);
    let omega = rng.gen_range(-1.0..=1.0);
    let s = rng.gen_range(0.1..=2.0);
    (PrabhakarParams::new(rho, mu, omega, gamma).unwrap(), s)
}

/// Tanh-sinh quadrature, independent of the crate's own integrators.
pub fn tanh_sinh(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    quadrature::double_exponential::integrate(f, a, b, tol).integral
}

pub fn rel_err(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs()
}
