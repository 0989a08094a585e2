//! Discrete form of the integral equations
//!
//! ```text
//! y(t) = p(t, y(t)) ∫_a^b G(t, u) [q(u) y(u) − Σ_i h_i(u, y(u))] du
//! ```
//!
//! on a uniform grid with trapezoid weights. Nontrivial solutions are found
//! either by rescaling `q` with the principal eigenvalue of the discrete
//! operator (eigen mode) or by damped Picard iteration.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Exec;
use crate::expr::{ExprError, Expression};
use crate::green::{lyapunov_bound_case1, lyapunov_bound_case2, GreenError, GreenFunction};
use crate::operators::{GridFunction, Interval, OperatorError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BvpError {
    #[error(transparent)]
    Green(#[from] GreenError),
    #[error(transparent)]
    Grid(#[from] OperatorError),
    #[error("expression {which}: {source}")]
    Expr {
        which: String,
        #[source]
        source: ExprError,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("p vanishes at (t, y) = ({t}, {y})")]
    PVanishes { t: f64, y: f64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("no convergence after {iterations} iterations (last change {last_change:e})")]
    NonConvergence { iterations: usize, last_change: f64, history: Vec<f64>, last: Option<Vec<f64>> },
}

fn expr_err(which: &str) -> impl FnOnce(ExprError) -> BvpError + '_ {
    move |source| BvpError::Expr { which: which.to_string(), source }
}

type LinearMap<'a> = Box<dyn Fn(&DVector<f64>) -> DVector<f64> + 'a>;

/// Nontriviality threshold on `‖y‖_∞`.
pub const TRIVIAL_THRESHOLD: f64 = 1e-6;
/// Iterations before the nontriviality threshold is applied.
pub const TRIVIAL_AFTER: usize = 10;
/// Grid points with `|q| < QUIET_Q · max|q|` are left out of the K measurement.
pub const QUIET_Q: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct HybridBvp {
    pub green: GreenFunction,
    /// `q(t)`.
    pub q: Expression,
    /// `p(t, y)`.
    pub p: Expression,
    /// `h_i(t, y)`; empty for the unperturbed problem.
    pub h_list: Vec<Expression>,
    pub k: Option<f64>,
}

impl HybridBvp {
    pub fn parse(green: GreenFunction, q: &str, p: &str, h_list: &[&str], k: Option<f64>) -> Result<Self, BvpError> {
        if let Some(k) = k {
            if !(k > 0.0) || !k.is_finite() {
                return Err(BvpError::Domain(format!("K must be positive, got {k}")));
            }
        }
        Ok(Self {
            green,
            q: Expression::parse(q, &["t"]).map_err(expr_err("q"))?,
            p: Expression::parse(p, &["t", "y"]).map_err(expr_err("p"))?,
            h_list: h_list
                .iter()
                .enumerate()
                .map(|(i, h)| Expression::parse(h, &["t", "y"]).map_err(expr_err(&format!("h{}", i + 1))))
                .collect::<Result<_, _>>()?,
            k,
        })
    }

    fn q_at(&self, t: f64) -> Result<f64, BvpError> {
        self.q.eval(&[t]).map_err(expr_err("q"))
    }

    fn p_at(&self, t: f64, y: f64) -> Result<f64, BvpError> {
        let v = self.p.eval(&[t, y]).map_err(expr_err("p"))?;
        if v == 0.0 {
            return Err(BvpError::PVanishes { t, y });
        }
        Ok(v)
    }

    fn h_sum(&self, t: f64, y: f64) -> Result<f64, BvpError> {
        let mut sum = 0.0;
        for (i, h) in self.h_list.iter().enumerate() {
            sum += h.eval(&[t, y]).map_err(expr_err(&format!("h{}", i + 1)))?;
        }
        Ok(sum)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialGuess {
    /// `sin(π(t−a)/(b−a))`.
    Bump,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub grid_n: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// Picard damping θ in `y ← (1−θ) y + θ T(y)`.
    pub damping: f64,
    pub initial: InitialGuess,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            grid_n: 128,
            max_iter: 2000,
            tol: 1e-12,
            damping: 0.5,
            initial: InitialGuess::Bump,
            exec: Exec::default(),
        }
    }
}

impl SolverOptions {
    pub fn new(grid_n: usize, max_iter: usize, tol: f64) -> Result<Self, BvpError> {
        let opts = Self { grid_n, max_iter, tol, ..Self::default() };
        opts.validate()?;
        Ok(opts)
    }

    pub fn validate(&self) -> Result<(), BvpError> {
        if self.grid_n < 8 {
            return Err(BvpError::Domain(format!("grid_n must be at least 8, got {}", self.grid_n)));
        }
        if self.max_iter == 0 {
            return Err(BvpError::Domain("max_iter must be positive".into()));
        }
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(BvpError::Domain(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(BvpError::Domain(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        Ok(())
    }
}

fn grid_nodes(iv: &Interval, n: usize) -> Vec<f64> {
    (0..=n).map(|i| iv.node(i, n)).collect()
}

fn trapezoid_weights(iv: &Interval, n: usize) -> Vec<f64> {
    let h = iv.width() / n as f64;
    (0..=n).map(|j| if j == 0 || j == n { 0.5 * h } else { h }).collect()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// `M[i][j] = w_j G(t_i, u_j) c_j` with the first and last rows zero.
pub fn assemble_weighted(g: &GreenFunction, c: &[f64], exec: Exec) -> Result<DMatrix<f64>, BvpError> {
    let n = c.len() - 1;
    let iv = *g.interval();
    let nodes = grid_nodes(&iv, n);
    let w = trapezoid_weights(&iv, n);
    let rows = exec.try_map(n + 1, |i| -> Result<Vec<f64>, BvpError> {
        if i == 0 || i == n {
            return Ok(vec![0.0; n + 1]);
        }
        let ev = g.evaluator()?;
        (0..=n).map(|j| Ok(w[j] * ev.eval(nodes[i], nodes[j])? * c[j])).collect()
    })?;
    Ok(DMatrix::from_fn(n + 1, n + 1, |i, j| rows[i][j]))
}

pub fn sample_q(q: &Expression, iv: &Interval, grid_n: usize) -> Result<Vec<f64>, BvpError> {
    grid_nodes(iv, grid_n).into_iter().map(|t| q.eval(&[t]).map_err(expr_err("q"))).collect()
}

/// The discrete operator `(M y)_i ≈ ∫ G(t_i, u) q(u) y(u) du`.
pub fn assemble_operator(g: &GreenFunction, q: &Expression, grid_n: usize) -> Result<DMatrix<f64>, BvpError> {
    assemble_operator_with(g, q, grid_n, Exec::default())
}

pub fn assemble_operator_with(
    g: &GreenFunction,
    q: &Expression,
    grid_n: usize,
    exec: Exec,
) -> Result<DMatrix<f64>, BvpError> {
    if grid_n < 8 {
        return Err(BvpError::Domain(format!("grid_n must be at least 8, got {grid_n}")));
    }
    assemble_weighted(g, &sample_q(q, g.interval(), grid_n)?, exec)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub nu: f64,
    /// Non-negative eigenvector with sup-norm 1; zero when degenerate.
    pub y: GridFunction,
    pub iterations: usize,
    /// The operator annihilated every iterate (`q ≡ 0` on the grid).
    pub degenerate: bool,
}

fn bump(iv: &Interval, n: usize) -> Vec<f64> {
    grid_nodes(iv, n).into_iter().map(|t| (std::f64::consts::PI * (t - iv.a()) / iv.width()).sin()).collect()
}

/// Power iteration for the dominant eigenvalue of `apply`, stopping when the
/// Rayleigh quotient changes by less than `tol` relative.
fn power_iteration(
    iv: &Interval,
    n: usize,
    max_iter: usize,
    tol: f64,
    apply: impl Fn(&DVector<f64>) -> DVector<f64>,
) -> Result<Eigenpair, BvpError> {
    let mut x = DVector::from_vec(bump(iv, n));
    let mut nu_prev = f64::NAN;
    let mut history = Vec::new();
    for it in 1..=max_iter {
        let y = apply(&x);
        let norm = y.amax();
        if norm == 0.0 {
            return Ok(Eigenpair {
                nu: 0.0,
                y: GridFunction::new(*iv, vec![0.0; n + 1])?,
                iterations: it,
                degenerate: true,
            });
        }
        let nu = x.dot(&y) / x.dot(&x);
        if !nu.is_finite() {
            return Err(BvpError::NonConvergence {
                iterations: it,
                last_change: f64::NAN,
                history,
                last: Some(x.as_slice().to_vec()),
            });
        }
        x = y / norm;
        let change = (nu - nu_prev).abs();
        history.push(change);
        if change <= tol * nu.abs() {
            if x.sum() < 0.0 {
                x.neg_mut();
            }
            return Ok(Eigenpair {
                nu,
                y: GridFunction::new(*iv, x.as_slice().to_vec())?,
                iterations: it,
                degenerate: false,
            });
        }
        nu_prev = nu;
    }
    Err(BvpError::NonConvergence {
        iterations: max_iter,
        last_change: history.last().copied().unwrap_or(f64::NAN),
        history,
        last: Some(x.as_slice().to_vec()),
    })
}

/// The largest positive real eigenvalue of `a` and its eigenvector, by
/// shifted inverse iteration from the full spectrum.
fn real_eigenpair(a: &DMatrix<f64>, iv: &Interval, max_iter: usize, tol: f64) -> Result<Eigenpair, BvpError> {
    let n = a.nrows() - 1;
    let nu0 = a
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.re > 0.0 && z.im.abs() <= 1e-8 * z.norm())
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if !nu0.is_finite() {
        return Err(BvpError::Precondition("the discrete operator has no positive real eigenvalue".into()));
    }
    let shift = nu0 * (1.0 + 1e-10);
    let lu = (a - DMatrix::identity(n + 1, n + 1) * shift).lu();
    let mut x = DVector::from_vec(bump(iv, n));
    let mut iterations = 0;
    for it in 1..=max_iter.max(2) {
        iterations = it;
        let Some(z) = lu.solve(&x) else { break };
        let z = &z / z.amax();
        let change = (&z - &x).amax().min((&z + &x).amax());
        x = z;
        if change <= tol {
            break;
        }
    }
    let ax = a * &x;
    let nu = x.dot(&ax) / x.dot(&x);
    // One application of `a` puts exact zeros on the boundary rows.
    let mut y = ax / nu;
    let peak = y.iter().copied().fold(0.0_f64, |m, v| if v.abs() > m.abs() { v } else { m });
    y /= peak;
    // Clear negative zeros on the boundary rows.
    y.apply(|v| *v += 0.0);
    Ok(Eigenpair { nu, y: GridFunction::new(*iv, y.as_slice().to_vec())?, iterations, degenerate: false })
}

pub fn principal_eigenvalue(
    g: &GreenFunction,
    q: &Expression,
    grid_n: usize,
    max_iter: usize,
    tol: f64,
) -> Result<Eigenpair, BvpError> {
    let opts = SolverOptions { grid_n, max_iter, tol, ..SolverOptions::default() };
    opts.validate()?;
    let qs = sample_q(q, g.interval(), grid_n)?;
    check_nonnegative(&qs, g.interval())?;
    let m = assemble_weighted(g, &qs, opts.exec)?;
    power_iteration(g.interval(), grid_n, max_iter, tol, |x| &m * x)
}

fn check_nonnegative(qs: &[f64], iv: &Interval) -> Result<(), BvpError> {
    let n = qs.len() - 1;
    if let Some(j) = qs.iter().position(|&v| v < 0.0) {
        return Err(BvpError::Precondition(format!(
            "q must be non-negative on the grid; q({}) = {}",
            iv.node(j, n),
            qs[j]
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    Eigen,
    Picard,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionReport {
    pub y: GridFunction,
    pub mode: SolveMode,
    /// Factor applied to `q` in eigen mode.
    pub lambda_star: Option<f64>,
    pub iterations: usize,
    /// `‖y − T(y)‖_∞` for the discrete fixed-point map `T`.
    pub residual: f64,
    pub nontrivial: bool,
    /// `q` on the grid as used by the solver (after any eigen rescaling).
    pub q_used: GridFunction,
    pub q_l1: f64,
    /// `sup |p(t_i, y_i)|` along the computed solution.
    pub p_norm: f64,
    /// K entering the bound; `None` for the unperturbed problem.
    #[serde(rename = "K_used")]
    pub k_used: Option<f64>,
    pub bound: f64,
    pub inequality_holds: bool,
    #[serde(rename = "K_measured")]
    pub k_measured: Option<f64>,
    pub reduction_mode: bool,
    /// Power iteration failed (a complex dominant pair); the largest positive
    /// real eigenvalue was used instead.
    pub spectral_fallback: bool,
}

/// Re-derive `∫|q|` from the stored grid and compare with the stored bound.
pub fn verify_lyapunov(report: &SolutionReport) -> Result<bool, BvpError> {
    if !report.nontrivial {
        return Err(BvpError::Precondition("the report carries only the trivial solution".into()));
    }
    let abs_q = GridFunction::new(report.q_used.interval, report.q_used.values.iter().map(|v| v.abs()).collect())?;
    Ok(abs_q.trapezoid() > report.bound)
}

/// `p ≡ 1`, judged on the grid nodes over a spread of `y` values.
fn p_is_one(problem: &HybridBvp, nodes: &[f64]) -> Result<bool, BvpError> {
    const PROBE_Y: [f64; 6] = [-2.0, -1.0, 0.0, 0.5, 1.0, 3.0];
    for &t in nodes {
        for y in PROBE_Y {
            if problem.p_at(t, y)? != 1.0 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Coefficients `c_j` with `Σ h_i(u_j, y) = c_j y` for all probed `y`, if the
/// perturbation is linear in `y`.
fn linear_h(problem: &HybridBvp, nodes: &[f64]) -> Result<Option<Vec<f64>>, BvpError> {
    const PROBE_Y: [f64; 4] = [-2.0, 0.5, 1.5, 3.0];
    let mut coeffs = Vec::with_capacity(nodes.len());
    for &t in nodes {
        if problem.h_sum(t, 0.0)? != 0.0 {
            return Ok(None);
        }
        let c = problem.h_sum(t, 1.0)?;
        for y in PROBE_Y {
            let v = problem.h_sum(t, y)?;
            if (v - c * y).abs() > 1e-12 * (c * y).abs().max(f64::MIN_POSITIVE) {
                return Ok(None);
            }
        }
        coeffs.push(c);
    }
    Ok(Some(coeffs))
}

struct Discrete<'a> {
    problem: &'a HybridBvp,
    opts: &'a SolverOptions,
    iv: Interval,
    nodes: Vec<f64>,
    qs: Vec<f64>,
}

impl<'a> Discrete<'a> {
    fn new(problem: &'a HybridBvp, opts: &'a SolverOptions) -> Result<Self, BvpError> {
        opts.validate()?;
        let iv = *problem.green.interval();
        let nodes = grid_nodes(&iv, opts.grid_n);
        let qs = nodes.iter().map(|&t| problem.q_at(t)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { problem, opts, iv, nodes, qs })
    }

    fn grid(&self, values: Vec<f64>) -> Result<GridFunction, BvpError> {
        Ok(GridFunction::new(self.iv, values)?)
    }

    fn q_l1(&self, scale: f64) -> f64 {
        let n = self.qs.len() - 1;
        let h = self.iv.width() / n as f64;
        let inner: f64 = self.qs[1..n].iter().map(|v| v.abs()).sum();
        scale * h * (inner + 0.5 * (self.qs[0].abs() + self.qs[n].abs()))
    }

    fn p_norm(&self, y: &[f64]) -> Result<f64, BvpError> {
        let mut norm = 0.0_f64;
        for (&t, &yi) in self.nodes.iter().zip(y) {
            norm = norm.max(self.problem.p_at(t, yi)?.abs());
        }
        Ok(norm)
    }

    /// `max |q y − Σh| / (|q| ‖y‖)` over grid points where `q` is not negligible.
    fn measure_k(&self, q_scale: f64, y: &[f64]) -> Result<f64, BvpError> {
        let y_norm = sup(y);
        let q_max = sup(&self.qs) * q_scale.abs();
        let mut k = f64::NEG_INFINITY;
        for ((&t, &q), &yi) in self.nodes.iter().zip(&self.qs).zip(y) {
            let q = q * q_scale;
            if q.abs() < QUIET_Q * q_max || q == 0.0 {
                continue;
            }
            let defect = q * yi - self.problem.h_sum(t, yi)?;
            k = k.max(defect.abs() / (q.abs() * y_norm));
        }
        if !k.is_finite() {
            return Err(BvpError::Precondition("|q| is negligible at every grid point; K cannot be measured".into()));
        }
        Ok(k)
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        y: Vec<f64>,
        mode: SolveMode,
        lambda_star: Option<f64>,
        iterations: usize,
        residual: f64,
        case2: bool,
        spectral_fallback: bool,
    ) -> Result<SolutionReport, BvpError> {
        let green = &self.problem.green;
        let nontrivial = sup(&y) >= TRIVIAL_THRESHOLD;
        let scale = lambda_star.unwrap_or(1.0);
        let q_used: Vec<f64> = self.qs.iter().map(|q| q * scale).collect();
        let q_l1 = self.q_l1(scale);
        let p_norm = if nontrivial { self.p_norm(&y)? } else { 1.0 };
        let (k_used, k_measured, bound) = if case2 {
            let measured = if nontrivial { Some(self.measure_k(scale, &y)?) } else { None };
            let k = match (self.problem.k, measured) {
                (Some(a), Some(b)) => a.max(b),
                (Some(a), None) => a,
                (None, Some(b)) => b,
                (None, None) => 1.0,
            };
            (Some(k), measured, lyapunov_bound_case2(green, p_norm, k)?)
        } else {
            (None, None, lyapunov_bound_case1(green, p_norm)?)
        };
        Ok(SolutionReport {
            y: self.grid(y)?,
            mode,
            lambda_star,
            iterations,
            residual,
            nontrivial,
            q_used: self.grid(q_used)?,
            q_l1,
            p_norm,
            k_used,
            bound,
            inequality_holds: q_l1 > bound,
            k_measured,
            reduction_mode: green.reduction_mode(),
            spectral_fallback,
        })
    }

    /// Eigen mode: `(I + M_c) y = λ M_q y`, with `M_c` absent when `c ≡ 0`.
    fn eigen(&self, c: Option<&[f64]>, case2: bool) -> Result<SolutionReport, BvpError> {
        let green = &self.problem.green;
        let n = self.opts.grid_n;
        let mq = assemble_weighted(green, &self.qs, self.opts.exec)?;
        let mc = match c {
            Some(c) if c.iter().any(|&v| v != 0.0) => Some(assemble_weighted(green, c, self.opts.exec)?),
            _ => None,
        };
        let op: LinearMap = match &mc {
            None => Box::new(|x: &DVector<f64>| &mq * x),
            Some(mc) => {
                let lu = (DMatrix::identity(n + 1, n + 1) + mc).lu();
                let mq = &mq;
                Box::new(move |x: &DVector<f64>| {
                    lu.solve(&(mq * x)).unwrap_or_else(|| DVector::from_element(n + 1, f64::NAN))
                })
            }
        };
        let (pair, fallback) = match power_iteration(&self.iv, n, self.opts.max_iter, self.opts.tol, &op) {
            Ok(pair) => (pair, false),
            Err(BvpError::NonConvergence { .. }) => {
                let dense = DMatrix::from_columns(
                    &(0..=n)
                        .map(|j| op(&DVector::from_fn(n + 1, |i, _| if i == j { 1.0 } else { 0.0 })))
                        .collect::<Vec<_>>(),
                );
                (real_eigenpair(&dense, &self.iv, self.opts.max_iter, self.opts.tol)?, true)
            }
            Err(e) => return Err(e),
        };
        if pair.degenerate || !(pair.nu > 0.0) {
            return self.finish(vec![0.0; n + 1], SolveMode::Eigen, None, pair.iterations, 0.0, case2, fallback);
        }
        let lambda = 1.0 / pair.nu;
        let y = DVector::from_column_slice(&pair.y.values);
        let mut image = (&mq * &y) * lambda;
        if let Some(mc) = &mc {
            image -= mc * &y;
        }
        let residual = (&y - image).amax();
        self.finish(pair.y.values, SolveMode::Eigen, Some(lambda), pair.iterations, residual, case2, fallback)
    }

    /// Damped fixed-point iteration on `y = p(t, y) · Σ_j w_j G_ij r_j(y)`.
    fn picard(&self, case2: bool) -> Result<SolutionReport, BvpError> {
        let n = self.opts.grid_n;
        let ones = vec![1.0; n + 1];
        let gw = assemble_weighted(&self.problem.green, &ones, self.opts.exec)?;
        let theta = self.opts.damping;
        let map = |y: &[f64]| -> Result<Vec<f64>, BvpError> {
            let mut r = Vec::with_capacity(n + 1);
            for ((&t, &q), &yi) in self.nodes.iter().zip(&self.qs).zip(y) {
                let h = if case2 { self.problem.h_sum(t, yi)? } else { 0.0 };
                r.push(q * yi - h);
            }
            let image = &gw * DVector::from_vec(r);
            self.nodes
                .iter()
                .zip(y)
                .zip(image.iter())
                .map(|((&t, &yi), &v)| Ok(self.problem.p_at(t, yi)? * v))
                .collect()
        };
        let mut y = match self.opts.initial {
            InitialGuess::Bump => bump(&self.iv, n),
            InitialGuess::Zero => vec![0.0; n + 1],
        };
        let mut history = Vec::new();
        for it in 1..=self.opts.max_iter {
            let ty = map(&y)?;
            let next: Vec<f64> = y.iter().zip(&ty).map(|(a, b)| (1.0 - theta) * a + theta * b).collect();
            let change = next.iter().zip(&y).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            history.push(change);
            y = next;
            let norm = sup(&y);
            if !norm.is_finite() {
                break;
            }
            if it >= TRIVIAL_AFTER && norm < TRIVIAL_THRESHOLD {
                return self.finish(vec![0.0; n + 1], SolveMode::Picard, None, it, norm, case2, false);
            }
            if change <= self.opts.tol * norm {
                let ty = map(&y)?;
                let residual = y.iter().zip(&ty).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
                return self.finish(y, SolveMode::Picard, None, it, residual, case2, false);
            }
        }
        Err(BvpError::NonConvergence {
            iterations: history.len(),
            last_change: history.last().copied().unwrap_or(f64::NAN),
            history,
            last: Some(y),
        })
    }
}

/// The unperturbed problem. Uses eigen mode when `p ≡ 1` and `q ≥ 0` on the
/// grid, damped Picard iteration otherwise.
pub fn solve_case1(problem: &HybridBvp, opts: &SolverOptions) -> Result<SolutionReport, BvpError> {
    if !problem.h_list.is_empty() {
        return Err(BvpError::Precondition("perturbation terms given; use the perturbed solver".into()));
    }
    let d = Discrete::new(problem, opts)?;
    if p_is_one(problem, &d.nodes)? && d.qs.iter().all(|&q| q >= 0.0) {
        d.eigen(None, false)
    } else {
        d.picard(false)
    }
}

/// The perturbed problem with `h_1, …, h_n`. Eigen mode applies when `p ≡ 1`,
/// `q ≥ 0` and every `h_i` is linear in `y`.
pub fn solve_case2(problem: &HybridBvp, opts: &SolverOptions) -> Result<SolutionReport, BvpError> {
    if problem.h_list.is_empty() {
        return Err(BvpError::Precondition("no perturbation terms given".into()));
    }
    let d = Discrete::new(problem, opts)?;
    if p_is_one(problem, &d.nodes)? && d.qs.iter().all(|&q| q >= 0.0) {
        if let Some(c) = linear_h(problem, &d.nodes)? {
            return d.eigen(Some(&c), true);
        }
    }
    d.picard(true)
}

/// Dispatch on the presence of perturbation terms.
pub fn solve(problem: &HybridBvp, opts: &SolverOptions) -> Result<SolutionReport, BvpError> {
    if problem.h_list.is_empty() {
        solve_case1(problem, opts)
    } else {
        solve_case2(problem, opts)
    }
}
