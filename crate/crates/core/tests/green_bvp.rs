mod common;

use common::rng;
use prabhakar::bvp::*;
use prabhakar::exec::Exec;
use prabhakar::expr::Expression;
use prabhakar::green::*;
use prabhakar::mlf::PrabhakarParams;
use prabhakar::operators::Interval;
use rand::Rng;
use std::f64::consts::PI;

fn green(rho: f64, mu: f64, omega: f64, gamma: f64, a: f64, b: f64) -> GreenFunction {
    GreenFunction::new(PrabhakarParams::new(rho, mu, omega, gamma).unwrap(), Interval::new(a, b).unwrap()).unwrap()
}

#[test]
fn classical_green_matches_dirichlet_kernel_on_random_intervals() {
    let mut r = rng(21);
    for _ in 0..10 {
        let a = r.gen_range(-3.0..3.0);
        let b = a + r.gen_range(0.2..4.0);
        let g = green(1.0, 2.0, 0.0, 0.0, a, b);
        let ev = g.evaluator().unwrap();
        for _ in 0..20 {
            let (t, u) = (r.gen_range(a..b), r.gen_range(a..b));
            let exact = (t - a) * (b - u) / (b - a) - if u <= t { t - u } else { 0.0 };
            assert!((ev.eval(t, u).unwrap() - exact).abs() < 1e-13 * (b - a));
        }
        let report = verify_green_properties(&g, 32, 1e-12).unwrap();
        assert!(report.passed());
        assert!((report.numeric_max - (b - a) / 4.0).abs() < 1e-10);
    }
}

#[test]
fn fractional_lattice_is_nonnegative_away_from_the_extreme_corner() {
    for (rho, mu, gamma, omega) in
        [(0.5, 1.25, 2.0, 1.0), (1.0, 1.5, 1.0, 1.0), (1.0, 1.25, 2.0, 1.0), (2.0, 1.5, 2.0, 1.0)]
    {
        let report = verify_green_properties(&green(rho, mu, omega, gamma, 0.0, 1.0), 64, 1e-9).unwrap();
        assert!(report.passed(), "{rho} {mu} {gamma} {omega}: {report:?}");
    }
}

#[test]
fn sign_change_is_reported_as_data() {
    // G dips below zero for this steep, weakly singular kernel.
    let report = verify_green_properties(&green(2.0, 1.25, 1.0, 2.0, 0.0, 1.0), 64, 1e-9).unwrap();
    assert!(report.min_value < -1e-3);
    assert!(!report.violations.is_empty());
    assert!(report.violations.iter().all(|v| v.value < -1e-9 || v.t != v.u));
    assert!(report.violations_csv().lines().count() == report.violations.len() + 1);
}

#[test]
fn assembly_is_identical_in_both_modes() {
    let g = green(0.7, 1.4, 0.8, 1.2, 0.0, 2.0);
    let q = Expression::parse("1 + sin(t)", &["t"]).unwrap();
    let seq = assemble_operator_with(&g, &q, 40, Exec::Sequential).unwrap();
    let par = assemble_operator_with(&g, &q, 40, Exec::Parallel).unwrap();
    assert_eq!(seq, par);
}

#[test]
fn eigenvalue_scales_with_the_interval() {
    let g = green(1.0, 2.0, 0.0, 0.0, 0.0, 2.0);
    let problem = HybridBvp::parse(g, "1", "1", &[], None).unwrap();
    let report = solve_case1(&problem, &SolverOptions::new(128, 5000, 1e-13).unwrap()).unwrap();
    let exact = PI * PI / 4.0;
    assert!((report.lambda_star.unwrap() - exact).abs() < 1e-3 * exact);
    assert!((report.bound - 2.0).abs() < 1e-12);
    let csv = report.y.to_csv("y");
    assert!(csv.starts_with("t,y\n0,0\n"));
    assert!(csv.trim_end().ends_with("2,0"));
}

#[test]
fn report_serializes_with_documented_fields() {
    let problem = HybridBvp::parse(green(1.0, 2.0, 0.0, 0.0, 0.0, 1.0), "1", "1", &["0.1*y"], None).unwrap();
    let report = solve_case2(&problem, &SolverOptions::new(32, 5000, 1e-13).unwrap()).unwrap();
    let json = serde_json::to_value(&report).unwrap();
    for key in ["y", "mode", "lambda_star", "iterations", "residual", "q_l1", "bound", "inequality_holds", "K_measured"]
    {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert_eq!(json["mode"], "eigen");
}
