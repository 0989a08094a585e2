use std::path::Path;

use prabhakar::bvp::{solve, BvpError, HybridBvp, InitialGuess, SolutionReport, SolverOptions};
use prabhakar::exec::Exec;
use prabhakar::expr::{ExprError, Expression};
use prabhakar::green::{verify_green_properties, GreenError, GreenFunction};
use prabhakar::mlf::{MittagLeffler, MlfError, PrabhakarParams, SeriesConfig};
use prabhakar::operators::{
    laplace_check, verify_left_inverse, verify_round_trip, Fallible, Interval, OperatorError, PrabhakarDerivative,
    PrabhakarIntegral, QuadratureConfig,
};
use serde::Serialize;
use thiserror::Error;

use crate::args::*;
use crate::output::{to_json, Field, Table};

pub mod exit {
    pub const OK: i32 = 0;
    /// Violations found, inequality fails, or a check misses its tolerance.
    pub const FAILED: i32 = 1;
    pub const USAGE: i32 = 2;
    /// Expression parse/evaluation errors and series truncation.
    pub const EXPRESSION: i32 = 3;
    pub const TRIVIAL: i32 = 4;
    pub const NO_CONVERGENCE: i32 = 5;
}

#[derive(Debug, Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Expression(String),
    #[error("{0}")]
    Truncation(String),
    #[error("{0}")]
    NoConvergence(String),
    #[error("{0}")]
    Trivial(String),
    #[error("{0}")]
    Io(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) => exit::USAGE,
            AppError::Expression(_) | AppError::Truncation(_) => exit::EXPRESSION,
            AppError::NoConvergence(_) => exit::NO_CONVERGENCE,
            AppError::Trivial(_) => exit::TRIVIAL,
            AppError::Io(_) => exit::FAILED,
        }
    }
}

impl From<MlfError> for AppError {
    fn from(e: MlfError) -> Self {
        match e {
            MlfError::Domain(_) => AppError::Usage(e.to_string()),
            MlfError::Truncation { .. } => AppError::Truncation(e.to_string()),
        }
    }
}

fn expression_error(which: &str, source: &str, e: &ExprError) -> AppError {
    let at = e.position().map(|p| format!("\n  {source}\n  {}^", " ".repeat(p))).unwrap_or_default();
    AppError::Expression(format!("{which}: {e}{at}"))
}

impl From<OperatorError> for AppError {
    fn from(e: OperatorError) -> Self {
        match e {
            OperatorError::Mlf(m) => m.into(),
            OperatorError::Domain(_) | OperatorError::Unsupported(_) => AppError::Usage(e.to_string()),
            OperatorError::Function { .. } => AppError::Expression(e.to_string()),
            OperatorError::Convergence(_) => AppError::NoConvergence(e.to_string()),
        }
    }
}

impl From<GreenError> for AppError {
    fn from(e: GreenError) -> Self {
        match e {
            GreenError::Mlf(m) => m.into(),
            GreenError::Domain(_) => AppError::Usage(e.to_string()),
        }
    }
}

impl From<BvpError> for AppError {
    fn from(e: BvpError) -> Self {
        match e {
            BvpError::Green(g) => g.into(),
            BvpError::Grid(o) => o.into(),
            BvpError::Expr { .. } | BvpError::PVanishes { .. } => AppError::Expression(e.to_string()),
            BvpError::Domain(_) => AppError::Usage(e.to_string()),
            BvpError::Precondition(_) => AppError::Trivial(e.to_string()),
            BvpError::NonConvergence { .. } => AppError::NoConvergence(e.to_string()),
        }
    }
}

/// What a command produced: text for the main output and the exit status.
pub struct Outcome {
    pub text: String,
    pub code: i32,
}

fn write_file(path: &Path, text: &str) -> Result<(), AppError> {
    std::fs::write(path, text).map_err(|e| AppError::Io(format!("{}: {e}", path.display())))
}

fn params(k: &KernelArgs) -> Result<PrabhakarParams, AppError> {
    Ok(PrabhakarParams::new(k.rho, k.mu, k.omega, k.gamma)?)
}

fn reduction(p: &PrabhakarParams) -> bool {
    p.gamma() == 0.0 || p.omega() == 0.0
}

fn interval(i: &IntervalArgs) -> Result<Interval, AppError> {
    Ok(Interval::new(i.a, i.b)?)
}

fn quadrature(q: &QuadratureArgs) -> Result<QuadratureConfig, AppError> {
    Ok(QuadratureConfig::new(q.n, q.grading)?)
}

fn function_of_u(which: &str, source: &str) -> Result<Expression, AppError> {
    Expression::parse(source, &["u"]).map_err(|e| expression_error(which, source, &e))
}

/// `lo:hi:n` with `n ≥ 1` evenly spaced points.
fn parse_range(spec: &str) -> Result<Vec<f64>, AppError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || AppError::Usage(format!("expected lo:hi:n, got `{spec}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n == 0 {
        return Err(AppError::Usage(format!("empty range `{spec}`")));
    }
    if !lo.is_finite() || !hi.is_finite() {
        return Err(bad());
    }
    Ok(if n == 1 { vec![lo] } else { (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect() })
}

/// `v1,v2,...` or `lo:hi:n`.
fn parse_values(name: &str, spec: &str) -> Result<Vec<f64>, AppError> {
    if spec.contains(':') {
        return parse_range(spec);
    }
    let values = spec
        .split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| AppError::Usage(format!("--{name}: `{s}` is not a number")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(AppError::Usage(format!("--{name}: no values")));
    }
    Ok(values)
}

pub fn mlf(a: &MlfArgs) -> Result<(Table, Format), AppError> {
    let cfg = SeriesConfig::new(a.rel_tol, a.max_terms)?;
    let series = MittagLeffler::new(a.rho, a.mu, a.gamma, cfg)?;
    match &a.sweep {
        Some(spec) => {
            let zs = parse_range(spec)?;
            let rows = zs
                .iter()
                .map(|&z| {
                    let e = series.eval(z)?;
                    Ok(vec![Field::Num(z), Field::Num(e.value), Field::Int(e.terms as u64)])
                })
                .collect::<Result<Vec<_>, AppError>>()?;
            Ok((Table { columns: vec!["z", "value", "terms"], rows }, Format::Csv))
        }
        None => {
            let z = a.z.expect("clap requires --z without --sweep");
            let e = series.eval(z)?;
            Ok((
                Table::single(vec![
                    ("rho", Field::Num(a.rho)),
                    ("mu", Field::Num(a.mu)),
                    ("gamma", Field::Num(a.gamma)),
                    ("z", Field::Num(z)),
                    ("value", Field::Num(e.value)),
                    ("terms", Field::Int(e.terms as u64)),
                ]),
                Format::Table,
            ))
        }
    }
}

pub fn integral(a: &IntegralArgs) -> Result<Table, AppError> {
    let p = params(&a.kernel)?;
    let f = function_of_u("f", &a.f)?;
    let op = PrabhakarIntegral::new(p, quadrature(&a.quad)?)?;
    let value = op.apply(&Fallible(|u: f64| f.eval(&[u])), a.a, a.x)?;
    Ok(Table::single(vec![
        ("a", Field::Num(a.a)),
        ("x", Field::Num(a.x)),
        ("n", Field::Int(a.quad.n as u64)),
        ("value", Field::Num(value)),
        ("reduction_mode", Field::Bool(reduction(&p))),
    ]))
}

pub fn derivative(a: &DerivativeArgs) -> Result<Table, AppError> {
    let p = params(&a.kernel)?;
    let f = function_of_u("f", &a.f)?;
    let cfg = quadrature(&a.quad)?;
    let op = PrabhakarDerivative::new(p, cfg)?;
    let h = a.step.unwrap_or((a.x - a.a) / (4 * cfg.n) as f64);
    let value = op.apply_with_step(&Fallible(|u: f64| f.eval(&[u])), a.a, a.x, h)?;
    Ok(Table::single(vec![
        ("a", Field::Num(a.a)),
        ("x", Field::Num(a.x)),
        ("n", Field::Int(a.quad.n as u64)),
        ("step", Field::Num(h)),
        ("value", Field::Num(value)),
        ("reduction_mode", Field::Bool(reduction(&p))),
    ]))
}

pub fn laplace(a: &LaplaceArgs) -> Result<(Table, i32), AppError> {
    let p = params(&a.kernel)?;
    if !(a.tol > 0.0) {
        return Err(AppError::Usage(format!("--tol must be positive, got {}", a.tol)));
    }
    let c = laplace_check(&p, a.s)?;
    let agrees = c.relative_error() <= a.tol;
    Ok((
        Table::single(vec![
            ("s", Field::Num(a.s)),
            ("numeric", Field::Num(c.numeric)),
            ("closed_form", Field::Num(c.closed_form)),
            ("relative_error", Field::Num(c.relative_error())),
            ("agrees", Field::Bool(agrees)),
            ("reduction_mode", Field::Bool(reduction(&p))),
        ]),
        if agrees { exit::OK } else { exit::FAILED },
    ))
}

pub fn green_verify(a: &GreenArgs) -> Result<Outcome, AppError> {
    let g = GreenFunction::new(params(&a.kernel)?, interval(&a.interval)?)?;
    let report = verify_green_properties(&g, a.grid, a.tol)?;
    let json = to_json(&report);
    if let Some(path) = &a.json {
        write_file(path, &json)?;
    }
    if let Some(path) = &a.csv {
        write_file(path, &report.violations_csv())?;
    }
    let summary = Table::single(vec![
        ("grid_n", Field::Int(report.grid_n as u64)),
        ("tolerance", Field::Num(report.tolerance)),
        ("reduction_mode", Field::Bool(report.reduction_mode)),
        ("min_value", Field::Num(report.min_value)),
        ("worst_diagonal_gap", Field::Num(report.worst_diagonal_gap)),
        ("argmax_location", Field::Num(report.argmax_location)),
        ("closed_form_max", Field::Num(report.closed_form_max)),
        ("numeric_max", Field::Num(report.numeric_max)),
        ("diagonal_max_matches", Field::Bool(report.diagonal_max_matches)),
        ("violations", Field::Int(report.violations.len() as u64)),
    ]);
    let text = match a.out.format.unwrap_or(Format::Json) {
        Format::Json => json,
        other => summary.render(other),
    };
    Ok(Outcome { text, code: if report.passed() { exit::OK } else { exit::FAILED } })
}

fn green_for_problem(k: &KernelArgs, i: &IntervalArgs) -> Result<GreenFunction, AppError> {
    let p = params(k)?;
    if p.mu() == 2.0 && p.gamma() != 0.0 {
        return Err(AppError::Usage(
            "mu = 2 is an integer order; the derivative is only defined there with gamma = 0".into(),
        ));
    }
    Ok(GreenFunction::new(p, interval(i)?)?)
}

fn solver_options(s: &SolverArgs, exec: Exec) -> Result<SolverOptions, AppError> {
    let mut opts = SolverOptions::new(s.grid, s.max_iter, s.tol)?;
    opts.exec = exec;
    Ok(opts)
}

fn report_summary(r: &SolutionReport) -> Vec<(&'static str, Field)> {
    vec![
        ("mode", Field::Str(format!("{:?}", r.mode).to_lowercase())),
        ("nontrivial", Field::Bool(r.nontrivial)),
        ("lambda_star", Field::OptNum(r.lambda_star)),
        ("iterations", Field::Int(r.iterations as u64)),
        ("residual", Field::Num(r.residual)),
        ("q_l1", Field::Num(r.q_l1)),
        ("p_norm", Field::Num(r.p_norm)),
        ("K_used", Field::OptNum(r.k_used)),
        ("K_measured", Field::OptNum(r.k_measured)),
        ("bound", Field::Num(r.bound)),
        ("margin", Field::Num(r.q_l1 - r.bound)),
        ("inequality_holds", Field::Bool(r.inequality_holds)),
        ("reduction_mode", Field::Bool(r.reduction_mode)),
        ("spectral_fallback", Field::Bool(r.spectral_fallback)),
    ]
}

pub fn solve_cmd(a: &SolveArgs) -> Result<Outcome, AppError> {
    let g = green_for_problem(&a.kernel, &a.interval)?;
    let hs: Vec<&str> = a.h.iter().map(String::as_str).collect();
    let problem = HybridBvp::parse(g, &a.q, &a.p, &hs, a.k).map_err(|e| match &e {
        BvpError::Expr { which, source } => {
            let text = match which.as_str() {
                "q" => a.q.as_str(),
                "p" => a.p.as_str(),
                h => hs.get(h.trim_start_matches('h').parse::<usize>().unwrap_or(1) - 1).copied().unwrap_or(""),
            };
            expression_error(which, text, source)
        }
        _ => e.into(),
    })?;
    let mut opts = solver_options(&a.solver, Exec::default())?;
    opts.damping = a.damping;
    opts.initial = match a.initial {
        Initial::Bump => InitialGuess::Bump,
        Initial::Zero => InitialGuess::Zero,
    };
    opts.validate()?;
    let report = solve(&problem, &opts)?;
    let json = to_json(&report);
    if let Some(path) = &a.json {
        write_file(path, &json)?;
    }
    if let Some(path) = &a.csv {
        write_file(path, &report.y.to_csv("y"))?;
    }
    let text = match a.out.format.unwrap_or(Format::Json) {
        Format::Json => json,
        other => Table::single(report_summary(&report)).render(other),
    };
    let code = if !report.nontrivial {
        exit::TRIVIAL
    } else if report.inequality_holds {
        exit::OK
    } else {
        exit::FAILED
    };
    Ok(Outcome { text, code })
}

#[derive(Serialize)]
struct SweepFailure {
    rho: f64,
    mu: f64,
    gamma: f64,
    omega: f64,
    a: f64,
    b: f64,
    grid: usize,
    status: String,
    report: Option<SolutionReport>,
}

/// One sweep point: `(ρ, μ, γ, ω)` with γ forced to 0 at μ = 2.
pub fn sweep_points(rho: &[f64], mu: &[f64], gamma: &[f64], omega: &[f64]) -> Vec<[f64; 4]> {
    let mut points = Vec::new();
    for &r in rho {
        for &m in mu {
            for &g in gamma {
                for &w in omega {
                    points.push([r, m, if m == 2.0 { 0.0 } else { g }, w]);
                }
            }
        }
    }
    points
}

pub fn sweep(a: &SweepArgs) -> Result<Outcome, AppError> {
    let points = sweep_points(
        &parse_values("rho", &a.rho)?,
        &parse_values("mu", &a.mu)?,
        &parse_values("gamma", &a.gamma)?,
        &parse_values("omega", &a.omega)?,
    );
    let iv = interval(&a.interval)?;
    let opts = solver_options(&a.solver, Exec::Sequential)?;
    let results = Exec::default().map(points.len(), |i| {
        let [rho, mu, gamma, omega] = points[i];
        let run = || -> Result<SolutionReport, AppError> {
            let p = PrabhakarParams::new(rho, mu, omega, gamma)?;
            let problem = HybridBvp::parse(GreenFunction::new(p, iv)?, "1", "1", &[], None)?;
            Ok(solve(&problem, &opts)?)
        };
        run()
    });

    let mut rows = Vec::with_capacity(points.len());
    let mut failures = Vec::new();
    for (point, result) in points.iter().zip(results) {
        let [rho, mu, gamma, omega] = *point;
        let mut row = vec![Field::Num(rho), Field::Num(mu), Field::Num(gamma), Field::Num(omega)];
        let (holds, status, report) = match result {
            Ok(r) => {
                let status = if !r.nontrivial {
                    "trivial"
                } else if r.spectral_fallback {
                    "fallback"
                } else {
                    "ok"
                };
                row.extend([
                    Field::OptNum(r.lambda_star),
                    Field::Num(r.q_l1),
                    Field::Num(r.bound),
                    Field::Num(r.q_l1 - r.bound),
                ]);
                (r.nontrivial && r.inequality_holds, status.to_string(), Some(r))
            }
            Err(e) => {
                row.extend([Field::OptNum(None), Field::OptNum(None), Field::OptNum(None), Field::OptNum(None)]);
                (false, format!("error: {e}"), None)
            }
        };
        row.push(Field::Bool(holds));
        row.push(Field::Str(status.clone()));
        rows.push(row);
        if !holds {
            failures.push(SweepFailure {
                rho,
                mu,
                gamma,
                omega,
                a: iv.a(),
                b: iv.b(),
                grid: a.solver.grid,
                status,
                report,
            });
        }
    }
    if let (Some(path), false) = (&a.repro, failures.is_empty()) {
        write_file(path, &to_json(&failures))?;
    }
    let table = Table {
        columns: vec!["rho", "mu", "gamma", "omega", "lambda_star", "q_l1", "bound", "margin", "holds", "status"],
        rows,
    };
    Ok(Outcome {
        text: table.render(a.out.format.unwrap_or(Format::Csv)),
        code: if failures.is_empty() { exit::OK } else { exit::FAILED },
    })
}

pub fn verify_ops(a: &VerifyArgs) -> Result<(Table, i32), AppError> {
    let p = params(&a.kernel)?;
    let iv = interval(&a.interval)?;
    let cfg = quadrature(&a.quad)?;
    let g = function_of_u("g", &a.g)?;
    let gf = Fallible(|u: f64| g.eval(&[u]));
    let left = verify_left_inverse(&p, &gf, &iv, &cfg)?;
    let mut pairs = vec![("n", Field::Int(cfg.n as u64)), ("left_inverse_error", Field::Num(left))];
    let mut worst = left;
    if a.round_trip {
        let rt = verify_round_trip(&p, &gf, &iv, &cfg)?;
        pairs.push(("round_trip_error", Field::Num(rt)));
        worst = worst.max(rt);
    }
    pairs.push(("reduction_mode", Field::Bool(reduction(&p))));
    let code = match a.tol {
        Some(tol) if !(tol > 0.0) => return Err(AppError::Usage(format!("--tol must be positive, got {tol}"))),
        Some(tol) if worst > tol => exit::FAILED,
        _ => exit::OK,
    };
    Ok((Table::single(pairs), code))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_and_lists() {
        assert_eq!(parse_range("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_range("-2:5:1").unwrap(), vec![-2.0]);
        assert!(matches!(parse_range("0:1:0"), Err(AppError::Usage(_))));
        assert!(parse_range("0:1").is_err());
        assert!(parse_range("a:1:2").is_err());
        assert_eq!(parse_values("mu", "1.25, 1.5,2").unwrap(), vec![1.25, 1.5, 2.0]);
        assert_eq!(parse_values("mu", "1:2:2").unwrap(), vec![1.0, 2.0]);
        assert!(parse_values("mu", "1,x").is_err());
        assert!(parse_values("mu", ",").is_err());
    }

    #[test]
    fn sweep_box_drops_gamma_at_integer_order() {
        let points = sweep_points(&[1.0], &[1.5, 2.0], &[0.5, 1.0], &[0.1]);
        assert_eq!(points.len(), 4);
        assert_eq!(points[1], [1.0, 1.5, 1.0, 0.1]);
        assert_eq!(points[2], [1.0, 2.0, 0.0, 0.1]);
        assert_eq!(points[3], [1.0, 2.0, 0.0, 0.1]);
    }

    #[test]
    fn error_kinds_map_to_exit_codes() {
        assert_eq!(AppError::from(MlfError::Domain("x".into())).exit_code(), exit::USAGE);
        assert_eq!(AppError::from(BvpError::Precondition("x".into())).exit_code(), exit::TRIVIAL);
        assert_eq!(AppError::from(BvpError::PVanishes { t: 0.0, y: 0.0 }).exit_code(), exit::EXPRESSION);
        let stalled = BvpError::NonConvergence { iterations: 1, last_change: 1.0, history: vec![], last: None };
        assert_eq!(AppError::from(stalled).exit_code(), exit::NO_CONVERGENCE);
        assert_eq!(AppError::from(OperatorError::Convergence("x".into())).exit_code(), exit::NO_CONVERGENCE);
    }
}
