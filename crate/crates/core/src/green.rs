//! Green's function of the two-point problem with `y(a) = y(b) = 0`:
//!
//! ```text
//! G(t, u) = K(t−a) K(b−u) / K(b−a) − [u ≤ t] K(t−u),   K(s) = s^{μ−1} E^γ_{ρ,μ}(ω s^ρ)
//! ```
//!
//! with `K(0) = 0` since `μ > 1`. Also the closed-form maximum of the diagonal
//! `G(u, u)` and the Lyapunov thresholds derived from it.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Exec;
use crate::mlf::{Kernel, MittagLeffler, MlfError, PrabhakarParams, SeriesConfig};
use crate::operators::Interval;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GreenError {
    #[error(transparent)]
    Mlf(#[from] MlfError),
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGreen")]
pub struct GreenFunction {
    params: PrabhakarParams,
    interval: Interval,
}

#[derive(Deserialize)]
struct RawGreen {
    params: PrabhakarParams,
    interval: Interval,
}

impl TryFrom<RawGreen> for GreenFunction {
    type Error = GreenError;

    fn try_from(raw: RawGreen) -> Result<Self, Self::Error> {
        GreenFunction::new(raw.params, raw.interval)
    }
}

impl GreenFunction {
    /// Requires `1 < μ ≤ 2`, `ω ≥ 0`, `γ ≥ 0`.
    pub fn new(params: PrabhakarParams, interval: Interval) -> Result<Self, GreenError> {
        let mu = params.mu();
        if !(mu > 1.0 && mu <= 2.0) {
            return Err(GreenError::Domain(format!("mu must lie in (1, 2], got {mu}")));
        }
        if params.omega() < 0.0 {
            return Err(GreenError::Domain(format!("omega must be non-negative, got {}", params.omega())));
        }
        if params.gamma() < 0.0 {
            return Err(GreenError::Domain(format!("gamma must be non-negative, got {}", params.gamma())));
        }
        Ok(Self { params, interval })
    }

    pub fn params(&self) -> &PrabhakarParams {
        &self.params
    }

    pub fn interval(&self) -> &Interval {
        &self.interval
    }

    /// `γ = 0` or `ω = 0`: the kernel no longer depends on the
    /// Mittag-Leffler argument.
    pub fn reduction_mode(&self) -> bool {
        self.params.gamma() == 0.0 || self.params.omega() == 0.0
    }

    /// A reusable evaluator. Holds a coefficient cache, so build one per thread.
    pub fn evaluator(&self) -> Result<GreenEvaluator, GreenError> {
        let kernel = Kernel::new(self.params, SeriesConfig::default())?;
        let full = kernel.eval(self.interval.width())?;
        Ok(GreenEvaluator { green: *self, kernel, full })
    }
}

#[derive(Debug)]
pub struct GreenEvaluator {
    green: GreenFunction,
    kernel: Kernel,
    full: f64,
}

impl GreenEvaluator {
    fn k(&self, s: f64) -> Result<f64, GreenError> {
        if s <= 0.0 {
            Ok(0.0)
        } else {
            Ok(self.kernel.eval(s)?)
        }
    }

    pub fn eval(&self, t: f64, u: f64) -> Result<f64, GreenError> {
        let iv = self.green.interval;
        if !iv.contains(t) || !iv.contains(u) {
            return Err(GreenError::Domain(format!("({t}, {u}) lies outside [{}, {}]^2", iv.a(), iv.b())));
        }
        // Ratio first so that t = b cancels exactly.
        let first = self.k(t - iv.a())? / self.full * self.k(iv.b() - u)?;
        if u <= t {
            Ok(first - self.k(t - u)?)
        } else {
            Ok(first)
        }
    }

    /// `G(u, u)`.
    pub fn diagonal(&self, u: f64) -> Result<f64, GreenError> {
        self.eval(u, u)
    }
}

pub fn green_eval(g: &GreenFunction, t: f64, u: f64) -> Result<f64, GreenError> {
    g.evaluator()?.eval(t, u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagonalMax {
    pub u_star: f64,
    pub value: f64,
}

/// `((b−a)/4)^{μ−1} E(ω((b−a)/2)^ρ)² / E(ω(b−a)^ρ)` at `u = (a+b)/2`.
pub fn diagonal_max_closed_form(g: &GreenFunction) -> Result<DiagonalMax, GreenError> {
    let p = g.params();
    let width = g.interval().width();
    let e = MittagLeffler::new(p.rho(), p.mu(), p.gamma(), SeriesConfig::default())?;
    let half = e.value(p.omega() * (0.5 * width).powf(p.rho()))?;
    let full = e.value(p.omega() * width.powf(p.rho()))?;
    Ok(DiagonalMax { u_star: g.interval().midpoint(), value: (0.25 * width).powf(p.mu() - 1.0) * half * half / full })
}

/// `1 / (‖p‖ · max G(u, u))`.
pub fn lyapunov_bound_case1(g: &GreenFunction, p_norm: f64) -> Result<f64, GreenError> {
    if !(p_norm > 0.0) || !p_norm.is_finite() {
        return Err(GreenError::Domain(format!("p_norm must be positive, got {p_norm}")));
    }
    Ok(1.0 / (p_norm * diagonal_max_closed_form(g)?.value))
}

pub fn lyapunov_bound_case2(g: &GreenFunction, p_norm: f64, k: f64) -> Result<f64, GreenError> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(GreenError::Domain(format!("K must be positive, got {k}")));
    }
    Ok(lyapunov_bound_case1(g, p_norm)? / k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t: f64,
    pub u: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreenPropertyReport {
    pub grid_n: usize,
    pub tolerance: f64,
    pub reduction_mode: bool,
    pub min_value: f64,
    /// Largest `max_t G(t, u) − G(u, u)` over the lattice columns.
    pub worst_diagonal_gap: f64,
    pub argmax_location: f64,
    pub closed_form_max: f64,
    pub numeric_max: f64,
    /// The refined diagonal maximum lies within one cell of the midpoint and
    /// within tolerance of the closed form.
    pub diagonal_max_matches: bool,
    /// Lattice points where `G < −tolerance` or where a column exceeds its
    /// diagonal entry by more than the tolerance.
    pub violations: Vec<Violation>,
}

impl GreenPropertyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.diagonal_max_matches
    }

    pub fn violations_csv(&self) -> String {
        let mut out = String::from("t,u,value\n");
        for v in &self.violations {
            let _ = writeln!(out, "{},{},{}", v.t, v.u, v.value);
        }
        out
    }
}

pub fn verify_green_properties(
    g: &GreenFunction,
    grid_n: usize,
    tolerance: f64,
) -> Result<GreenPropertyReport, GreenError> {
    verify_green_properties_with(g, grid_n, tolerance, Exec::default())
}

/// Lattice values `G(t_i, u_j)` on the uniform `(n+1)²` grid, row `i` per `t_i`.
pub fn green_lattice(g: &GreenFunction, n: usize, exec: Exec) -> Result<Vec<Vec<f64>>, GreenError> {
    let iv = *g.interval();
    exec.try_map(n + 1, |i| {
        let ev = g.evaluator()?;
        let t = iv.node(i, n);
        (0..=n).map(|j| ev.eval(t, iv.node(j, n))).collect()
    })
}

pub fn verify_green_properties_with(
    g: &GreenFunction,
    grid_n: usize,
    tolerance: f64,
    exec: Exec,
) -> Result<GreenPropertyReport, GreenError> {
    if grid_n < 16 {
        return Err(GreenError::Domain(format!("grid_n must be at least 16, got {grid_n}")));
    }
    if !(tolerance >= 0.0) {
        return Err(GreenError::Domain(format!("tolerance must be non-negative, got {tolerance}")));
    }
    let iv = *g.interval();
    let n = grid_n;
    let lattice = green_lattice(g, n, exec)?;

    let mut violations = Vec::new();
    let mut min_value = f64::INFINITY;
    for (i, row) in lattice.iter().enumerate() {
        for (j, &value) in row.iter().enumerate() {
            min_value = min_value.min(value);
            if value < -tolerance {
                violations.push(Violation { t: iv.node(i, n), u: iv.node(j, n), value });
            }
        }
    }

    let mut worst_gap = f64::NEG_INFINITY;
    for j in 0..=n {
        let diagonal = lattice[j][j];
        for (i, row) in lattice.iter().enumerate() {
            let gap = row[j] - diagonal;
            worst_gap = worst_gap.max(gap);
            if gap > tolerance {
                violations.push(Violation { t: iv.node(i, n), u: iv.node(j, n), value: row[j] });
            }
        }
    }

    let best = (0..=n).max_by(|&x, &y| lattice[x][x].total_cmp(&lattice[y][y])).unwrap_or(0);
    let ev = g.evaluator()?;
    let lo = iv.node(best.saturating_sub(1), n);
    let hi = iv.node((best + 1).min(n), n);
    let (argmax, numeric_max) = golden_max(|u| ev.diagonal(u), lo, hi, 1e-12 * iv.width())?;
    let (argmax, numeric_max) = if numeric_max >= lattice[best][best] {
        (argmax, numeric_max)
    } else {
        (iv.node(best, n), lattice[best][best])
    };
    let closed = diagonal_max_closed_form(g)?;
    let cell = iv.width() / n as f64;
    let diagonal_max_matches =
        (argmax - closed.u_star).abs() <= cell && (numeric_max - closed.value).abs() <= tolerance;

    Ok(GreenPropertyReport {
        grid_n,
        tolerance,
        reduction_mode: g.reduction_mode(),
        min_value,
        worst_diagonal_gap: worst_gap,
        argmax_location: argmax,
        closed_form_max: closed.value,
        numeric_max,
        diagonal_max_matches,
        violations,
    })
}

/// Golden-section search for a maximum of a unimodal `f` on `[lo, hi]`.
fn golden_max(
    f: impl Fn(f64) -> Result<f64, GreenError>,
    mut lo: f64,
    mut hi: f64,
    width_tol: f64,
) -> Result<(f64, f64), GreenError> {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > width_tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn green(rho: f64, mu: f64, omega: f64, gamma: f64, a: f64, b: f64) -> GreenFunction {
        GreenFunction::new(PrabhakarParams::new(rho, mu, omega, gamma).unwrap(), Interval::new(a, b).unwrap()).unwrap()
    }

    fn classical(a: f64, b: f64) -> GreenFunction {
        green(1.0, 2.0, 0.0, 0.0, a, b)
    }

    #[test]
    fn validation() {
        let iv = Interval::new(0.0, 1.0).unwrap();
        for (mu, omega, gamma) in [(1.0, 1.0, 1.0), (2.1, 1.0, 1.0), (1.5, -1.0, 1.0), (1.5, 1.0, -0.5)] {
            let p = PrabhakarParams::new(1.0, mu, omega, gamma).unwrap();
            assert!(GreenFunction::new(p, iv).is_err(), "{mu} {omega} {gamma}");
        }
        assert!(classical(0.0, 1.0).reduction_mode());
        assert!(!green(1.0, 1.5, 1.0, 1.0, 0.0, 1.0).reduction_mode());
        assert!(matches!(green_eval(&classical(0.0, 1.0), 1.5, 0.5), Err(GreenError::Domain(_))));
    }

    #[test]
    fn classical_green_function() {
        let g = classical(0.0, 1.0);
        let ev = g.evaluator().unwrap();
        assert_relative_eq!(ev.eval(0.5, 0.5).unwrap(), 0.25, max_relative = 1e-15);
        for (t, u) in [(0.3, 0.7), (0.7, 0.3), (0.2, 0.2), (0.9, 0.1)] {
            let exact = t * (1.0 - u) - if u <= t { t - u } else { 0.0 };
            assert!((ev.eval(t, u).unwrap() - exact).abs() < 1e-15, "{t} {u}");
        }
    }

    #[test]
    fn boundary_rows_vanish() {
        let g = green(0.5, 1.25, 1.0, 2.0, -1.0, 2.0);
        let ev = g.evaluator().unwrap();
        for k in 0..=10 {
            let u = -1.0 + 0.3 * f64::from(k);
            assert_eq!(ev.eval(-1.0, u).unwrap(), 0.0);
            assert_eq!(ev.eval(2.0, u).unwrap(), 0.0);
            assert!(ev.eval(u, 2.0).unwrap().abs() == 0.0);
        }
    }

    #[test]
    fn closed_form_examples() {
        let m = diagonal_max_closed_form(&classical(0.0, 1.0)).unwrap();
        assert_eq!(m.u_star, 0.5);
        assert_relative_eq!(m.value, 0.25, max_relative = 1e-15);

        let g = green(1.0, 1.5, 0.0, 0.0, 0.0, 1.0);
        let v = diagonal_max_closed_form(&g).unwrap().value;
        assert_relative_eq!(v, 0.5 / libm::tgamma(1.5), max_relative = 1e-14);
        assert_relative_eq!(v, 0.564190, epsilon = 1e-6);

        let g = green(0.7, 1.6, 0.4, 1.3, 0.0, 1.5);
        let shifted = green(0.7, 1.6, 0.4, 1.3, 3.25, 4.75);
        assert_eq!(diagonal_max_closed_form(&g).unwrap().value, diagonal_max_closed_form(&shifted).unwrap().value);
    }

    #[test]
    fn bound_examples() {
        let g = classical(0.0, 1.0);
        assert_eq!(lyapunov_bound_case1(&g, 1.0).unwrap(), 4.0);
        assert_eq!(lyapunov_bound_case2(&g, 1.0, 1.0).unwrap(), 4.0);
        assert_eq!(lyapunov_bound_case2(&g, 1.0, 2.0).unwrap(), 2.0);
        let g15 = green(1.0, 1.5, 0.0, 0.0, 0.0, 1.0);
        let b = lyapunov_bound_case1(&g15, 2.0).unwrap();
        // (1/2) · 4^{1/2} · Γ(1.5)
        assert_relative_eq!(b, libm::tgamma(1.5), max_relative = 1e-14);
        assert_relative_eq!(b, 0.886227, epsilon = 1e-6);
        assert!(lyapunov_bound_case1(&g, 0.0).is_err());
        assert!(lyapunov_bound_case2(&g, 1.0, -1.0).is_err());
        let g = green(2.0, 1.3, 0.6, 0.9, 0.0, 2.0);
        let b1 = lyapunov_bound_case1(&g, 1.7).unwrap();
        assert_relative_eq!(lyapunov_bound_case2(&g, 1.7, 3.0).unwrap() * 3.0, b1, max_relative = 1e-15);
    }

    #[test]
    fn classical_bound_for_random_intervals() {
        let mut x = 0.37_f64;
        for _ in 0..10 {
            x = (x * 7.13 + 0.29).fract();
            let a = 10.0 * x - 5.0;
            let b = a + 0.1 + 3.0 * (x * 3.7).fract();
            let g = classical(a, b);
            assert_eq!(lyapunov_bound_case1(&g, 1.0).unwrap(), 4.0 / (b - a));
        }
    }

    #[test]
    fn classical_properties_hold() {
        let report = verify_green_properties(&classical(0.0, 1.0), 64, 1e-12).unwrap();
        assert!(report.violations.is_empty(), "{:?}", report.violations);
        assert!(report.diagonal_max_matches);
        assert!((report.numeric_max - 0.25).abs() < 1e-10);
        assert!(report.reduction_mode);
        assert!(report.min_value >= -1e-15);
    }

    #[test]
    fn fractional_properties_hold() {
        let g = green(1.0, 1.5, 1.0, 1.0, 0.0, 1.0);
        let report = verify_green_properties(&g, 64, 1e-9).unwrap();
        assert!(report.passed(), "{report:?}");
        assert!((report.numeric_max - report.closed_form_max).abs() < 1e-9);
    }

    #[test]
    fn tolerance_edge_cases() {
        let g = green(1.0, 1.5, 1.0, 1.0, 0.0, 1.0);
        let report = verify_green_properties(&g, 16, f64::INFINITY).unwrap();
        assert!(report.violations.is_empty());
        assert!(verify_green_properties(&g, 8, 1e-9).is_err());
        assert!(verify_green_properties(&g, 16, f64::NAN).is_err());
    }

    #[test]
    fn violation_csv_and_json() {
        let report = GreenPropertyReport {
            grid_n: 16,
            tolerance: 0.0,
            reduction_mode: false,
            min_value: -0.5,
            worst_diagonal_gap: 0.0,
            argmax_location: 0.5,
            closed_form_max: 0.25,
            numeric_max: 0.25,
            diagonal_max_matches: true,
            violations: vec![Violation { t: 0.1, u: 0.25, value: -0.5 }],
        };
        assert_eq!(report.violations_csv(), "t,u,value\n0.1,0.25,-0.5\n");
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["violations"][0]["u"], 0.25);
        assert!(!report.passed());
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let g = green(0.5, 1.25, 0.5, 2.0, 0.0, 1.0);
        let seq = verify_green_properties_with(&g, 24, 1e-9, Exec::Sequential).unwrap();
        let par = verify_green_properties_with(&g, 24, 1e-9, Exec::Parallel).unwrap();
        assert_eq!(seq, par);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn branches_agree_on_the_diagonal(
            rho in 0.3..3.0f64, mu in 1.05..2.0f64, omega in 0.0..2.0f64, gamma in 0.0..3.0f64,
            s in 0.0..1.0f64,
        ) {
            let g = green(rho, mu, omega, gamma, 0.0, 1.0);
            let ev = g.evaluator().unwrap();
            let k = Kernel::new(*g.params(), SeriesConfig::default()).unwrap();
            let upper = if s > 0.0 { k.eval(s).unwrap() } else { 0.0 };
            let lower = if s < 1.0 { k.eval(1.0 - s).unwrap() } else { 0.0 };
            let direct = upper * lower / k.eval(1.0).unwrap();
            let on_diag = ev.eval(s, s).unwrap();
            prop_assert!((on_diag - direct).abs() <= 1e-12 * direct.abs().max(1e-300));
        }

        #[test]
        fn diagonal_is_symmetric(
            rho in 0.3..3.0f64, mu in 1.05..2.0f64, omega in 0.0..2.0f64, gamma in 0.0..3.0f64,
            a in -2.0..2.0f64, w in 0.2..3.0f64, s in 0.0..1.0f64,
        ) {
            let g = green(rho, mu, omega, gamma, a, a + w);
            let ev = g.evaluator().unwrap();
            let u = a + s * w;
            let mirror = (2.0 * a + w - u).clamp(a, a + w);
            let (x, y) = (ev.diagonal(u).unwrap(), ev.diagonal(mirror).unwrap());
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(y.abs()) + 1e-300, "{} vs {}", x, y);
        }

        #[test]
        fn bound_and_max_are_reciprocal(
            rho in 0.3..3.0f64, mu in 1.05..2.0f64, omega in 0.0..2.0f64, gamma in 0.0..3.0f64,
        ) {
            let g = green(rho, mu, omega, gamma, 0.0, 1.0);
            let product = lyapunov_bound_case1(&g, 1.0).unwrap() * diagonal_max_closed_form(&g).unwrap().value;
            prop_assert!((product - 1.0).abs() <= f64::EPSILON);
        }
    }
}
