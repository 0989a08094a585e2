mod common;

use common::{rel_err, rng, tanh_sinh};
use prabhakar::mlf::{kernel_antiderivative, kernel_eval, PrabhakarParams};
use prabhakar::operators::*;
use rand::Rng;

fn random_params(r: &mut rand_chacha::ChaCha8Rng) -> PrabhakarParams {
    PrabhakarParams::new(r.gen_range(0.5..2.0), r.gen_range(0.2..2.0), r.gen_range(-1.0..1.0), r.gen_range(0.0..2.0))
        .unwrap()
}

fn slope(ns: &[usize], errors: &[f64]) -> f64 {
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / xs.len() as f64, ys.iter().sum::<f64>() / ys.len() as f64);
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    -cov / var
}

#[test]
fn constant_integrand_is_integrated_exactly() {
    let mut r = rng(5);
    for _ in 0..20 {
        let p = random_params(&mut r);
        let x = r.gen_range(0.2..2.0);
        let exact = kernel_antiderivative(&p, x).unwrap();
        for n in [4, 64, 512] {
            let v = prabhakar_integral(&p, &|_: f64| 1.0, 0.0, x, &QuadratureConfig::with_n(n).unwrap()).unwrap();
            assert!(rel_err(v, exact) < 1e-13, "{p:?} n={n}");
        }
    }
}

#[test]
fn smooth_integrand_converges_at_second_order() {
    let mut r = rng(6);
    let ns = [16, 32, 64, 128];
    for _ in 0..20 {
        let p = random_params(&mut r);
        let (a, x) = (0.3, 1.3);
        let f = |u: f64| (2.0 * u).cos() + u;
        // Singularity subtracted: f(x) A(x−a) + ∫ K(v) (f(x−v) − f(x)) dv.
        let exact = f(x) * kernel_antiderivative(&p, x - a).unwrap()
            + tanh_sinh(
                |v| {
                    if v > 0.0 {
                        kernel_eval(&p, v).unwrap() * (f(x - v) - f(x))
                    } else {
                        0.0
                    }
                },
                0.0,
                x - a,
                1e-14,
            );
        let errors: Vec<f64> = ns
            .iter()
            .map(|&n| {
                let v = prabhakar_integral(&p, &f, a, x, &QuadratureConfig::with_n(n).unwrap()).unwrap();
                (v - exact).abs()
            })
            .collect();
        let s = slope(&ns, &errors);
        assert!((1.8..2.3).contains(&s), "{p:?}: slope {s}, errors {errors:?}");
    }
}

#[test]
fn rl_integral_of_sine_matches_quadrature() {
    let exact = tanh_sinh(|u: f64| (1.0 - u).sqrt() * u.sin() / libm::tgamma(1.5), 0.0, 1.0, 1e-14);
    let v = rl_integral(1.5, &|u: f64| u.sin(), 0.0, 1.0, &QuadratureConfig::with_n(256).unwrap()).unwrap();
    assert!((v - exact).abs() < 1e-5, "{v} vs {exact}");
}

type TestFn = Box<dyn Fn(f64) -> f64 + Sync>;

fn documented_cases() -> Vec<(PrabhakarParams, TestFn)> {
    let fractional = PrabhakarParams::new(1.0, 1.5, 0.5, 0.5).unwrap();
    let classical = PrabhakarParams::new(1.0, 1.5, 0.0, 0.0).unwrap();
    vec![(fractional, Box::new(|_| 1.0)), (classical, Box::new(|u| u * u)), (fractional, Box::new(|u: f64| u.sin()))]
}

#[test]
fn left_inverse_error_decays() {
    let iv = Interval::new(0.0, 1.0).unwrap();
    for (p, g) in documented_cases() {
        let errors: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| verify_left_inverse(&p, &g, &iv, &QuadratureConfig::with_n(n).unwrap()).unwrap())
            .collect();
        assert!(errors[2] < 1e-3, "{errors:?}");
        for w in errors.windows(2) {
            assert!(w[1] <= 1.1 * w[0], "{errors:?}");
        }
    }
}

#[test]
fn round_trip_error_decays() {
    let iv = Interval::new(0.0, 1.0).unwrap();
    let cases = [
        (PrabhakarParams::new(1.0, 1.5, 0.5, 0.5).unwrap(), Box::new(|_: f64| 1.0) as Box<dyn Fn(f64) -> f64 + Sync>),
        (PrabhakarParams::new(1.0, 1.5, 0.0, 0.0).unwrap(), Box::new(|u: f64| u.sin())),
    ];
    for (p, g) in cases {
        let errors: Vec<f64> = [8, 16, 32]
            .iter()
            .map(|&n| verify_round_trip(&p, &g, &iv, &QuadratureConfig::with_n(n).unwrap()).unwrap())
            .collect();
        assert!(errors[2] < 1e-3, "{errors:?}");
        for w in errors.windows(2) {
            assert!(w[1] <= 1.1 * w[0], "{errors:?}");
        }
    }
}

#[test]
fn homogeneous_kernel_is_annihilated() {
    let mut r = rng(8);
    for _ in 0..5 {
        let p = PrabhakarParams::new(
            r.gen_range(0.5..2.0),
            r.gen_range(1.1..1.9),
            r.gen_range(-1.0..1.0),
            r.gen_range(0.5..2.0),
        )
        .unwrap();
        let f = |u: f64| kernel_eval(&p, u).unwrap();
        let d = |n: usize| {
            let cfg = QuadratureConfig::with_n(n).unwrap();
            PrabhakarDerivative::new(p, cfg).unwrap().apply_with_step(&f, 0.0, 0.5, 1.0 / (4 * n) as f64).unwrap()
        };
        let (coarse, fine) = (d(32), d(64));
        assert!(coarse.abs() <= 50.0 * (coarse - fine).abs(), "{p:?}: {coarse} {fine}");
        assert!(fine.abs() < 1e-3);
    }
}

#[test]
fn laplace_identity() {
    let mut r = rng(9);
    for _ in 0..50 {
        let rho = r.gen_range(0.5..2.0);
        let mu = r.gen_range(0.2..2.0);
        let gamma = r.gen_range(0.0..2.0);
        let s: f64 = r.gen_range(0.5..5.0);
        let omega = r.gen_range(-0.5..0.5) * s.powf(rho);
        let c = laplace_check(&PrabhakarParams::new(rho, mu, omega, gamma).unwrap(), s).unwrap();
        assert!(c.relative_error() < 1e-6, "{rho} {mu} {omega} {gamma} {s}: {c:?}");
    }
}
