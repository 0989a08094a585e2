//! Prabhakar fractional integral and derivative on `[a, x]`.
//!
//! The integral
//!
//! ```text
//! (E f)(x) = ∫_a^x (x−u)^{μ−1} E^γ_{ρ,μ}(ω(x−u)^ρ) f(u) du
//! ```
//!
//! is discretised by a product midpoint rule: in `v = x − u` the mesh
//! `v_j = L (j/n)^grading` is graded toward the kernel singularity at `v = 0`,
//! `f` is frozen at each cell midpoint, and the kernel is integrated exactly
//! over each cell through its closed-form antiderivative.
//!
//! The derivative of order `μ ∈ (m−1, m)` is the m-th derivative of the
//! integral of order `m−μ` with parameter `−γ`, taken by an m-th central
//! difference. With `γ = 0` and integer `μ` it is the classical derivative.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Exec;
use crate::mlf::{Kernel, MlfError, PrabhakarParams, SeriesConfig};
use crate::quad;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error(transparent)]
    Mlf(#[from] MlfError),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported parameters: {0}")]
    Unsupported(String),
    #[error("function evaluation failed at u = {at}: {message}")]
    Function { at: f64, message: String },
    #[error("no convergence: {0}")]
    Convergence(String),
}

/// Closed interval `[a, b]` with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInterval")]
pub struct Interval {
    a: f64,
    b: f64,
}

#[derive(Deserialize)]
struct RawInterval {
    a: f64,
    b: f64,
}

impl TryFrom<RawInterval> for Interval {
    type Error = OperatorError;

    fn try_from(raw: RawInterval) -> Result<Self, Self::Error> {
        Interval::new(raw.a, raw.b)
    }
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self, OperatorError> {
        if !a.is_finite() || !b.is_finite() || !(a < b) {
            return Err(OperatorError::Domain(format!("interval needs finite a < b, got [{a}, {b}]")));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.a && t <= self.b
    }

    /// Node `i` of the uniform grid with `n` cells; the last node is exactly `b`.
    pub fn node(&self, i: usize, n: usize) -> f64 {
        if i == n {
            self.b
        } else {
            self.a + self.width() * i as f64 / n as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Number of cells.
    pub n: usize,
    /// Mesh grading exponent toward the singular endpoint; 1 is uniform.
    pub grading: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { n: 128, grading: 2.0 }
    }
}

impl QuadratureConfig {
    pub fn new(n: usize, grading: f64) -> Result<Self, OperatorError> {
        let cfg = Self { n, grading };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_n(n: usize) -> Result<Self, OperatorError> {
        Self::new(n, Self::default().grading)
    }

    pub fn validate(&self) -> Result<(), OperatorError> {
        if self.n < 4 {
            return Err(OperatorError::Domain(format!("need at least 4 cells, got {}", self.n)));
        }
        if !(1.0..=4.0).contains(&self.grading) {
            return Err(OperatorError::Domain(format!("grading must lie in [1, 4], got {}", self.grading)));
        }
        Ok(())
    }
}

/// Values sampled at the uniform nodes `t_i = a + i (b−a)/n`, `i = 0..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub interval: Interval,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(interval: Interval, values: Vec<f64>) -> Result<Self, OperatorError> {
        if values.len() < 5 {
            return Err(OperatorError::Domain(format!("a grid function needs at least 5 nodes, got {}", values.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(OperatorError::Domain(format!("non-finite value {} at node {i}", values[i])));
        }
        Ok(Self { interval, values })
    }

    pub fn from_fn(interval: Interval, n: usize, f: impl Fn(f64) -> f64) -> Result<Self, OperatorError> {
        Self::new(interval, (0..=n).map(|i| f(interval.node(i, n))).collect())
    }

    pub fn cells(&self) -> usize {
        self.values.len() - 1
    }

    pub fn step(&self) -> f64 {
        self.interval.width() / self.cells() as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.interval.node(i, self.cells())
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |i| self.node(i))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Two-column CSV `t,<value_name>` with shortest round-trip floats.
    pub fn to_csv(&self, value_name: &str) -> String {
        let mut out = format!("t,{value_name}\n");
        for (t, v) in self.nodes().zip(&self.values) {
            out.push_str(&format!("{t},{v}\n"));
        }
        out
    }

    /// Composite trapezoid rule.
    pub fn trapezoid(&self) -> f64 {
        let n = self.cells();
        let inner: f64 = self.values[1..n].iter().sum();
        self.step() * (inner + 0.5 * (self.values[0] + self.values[n]))
    }
}

/// A real function of one variable that may fail.
pub trait Integrand {
    fn at(&self, u: f64) -> Result<f64, OperatorError>;
}

impl<F: Fn(f64) -> f64> Integrand for F {
    fn at(&self, u: f64) -> Result<f64, OperatorError> {
        let v = self(u);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(OperatorError::Function { at: u, message: format!("non-finite value {v}") })
        }
    }
}

/// Adapter for closures returning `Result`.
pub struct Fallible<F>(pub F);

impl<F, E> Integrand for Fallible<F>
where
    F: Fn(f64) -> Result<f64, E>,
    E: std::fmt::Display,
{
    fn at(&self, u: f64) -> Result<f64, OperatorError> {
        (self.0)(u).map_err(|e| OperatorError::Function { at: u, message: e.to_string() })
    }
}

/// The Prabhakar integral for fixed parameters. Holds a coefficient cache and
/// is therefore per-thread.
#[derive(Debug)]
pub struct PrabhakarIntegral {
    kernel: Kernel,
    cfg: QuadratureConfig,
}

impl PrabhakarIntegral {
    pub fn new(p: PrabhakarParams, cfg: QuadratureConfig) -> Result<Self, OperatorError> {
        cfg.validate()?;
        if !(p.mu() > 0.0) {
            return Err(OperatorError::Domain(format!("integral order mu must be positive, got {}", p.mu())));
        }
        Ok(Self { kernel: Kernel::new(p, SeriesConfig::default())?, cfg })
    }

    pub fn config(&self) -> &QuadratureConfig {
        &self.cfg
    }

    pub fn apply<F: Integrand + ?Sized>(&self, f: &F, a: f64, x: f64) -> Result<f64, OperatorError> {
        if !a.is_finite() || !x.is_finite() || x < a {
            return Err(OperatorError::Domain(format!("integral needs finite x >= a, got a={a}, x={x}")));
        }
        let span = x - a;
        if span == 0.0 {
            return Ok(0.0);
        }
        let n = self.cfg.n;
        let mut prev_v = 0.0;
        let mut prev_moment = 0.0;
        let mut sum = 0.0;
        for j in 1..=n {
            let v = if j == n { span } else { span * (j as f64 / n as f64).powf(self.cfg.grading) };
            let moment = self.kernel.antiderivative(v)?;
            sum += (moment - prev_moment) * f.at(x - 0.5 * (prev_v + v))?;
            prev_v = v;
            prev_moment = moment;
        }
        Ok(sum)
    }
}

pub fn prabhakar_integral<F: Integrand + ?Sized>(
    p: &PrabhakarParams,
    f: &F,
    a: f64,
    x: f64,
    cfg: &QuadratureConfig,
) -> Result<f64, OperatorError> {
    PrabhakarIntegral::new(*p, *cfg)?.apply(f, a, x)
}

/// Riemann–Liouville integral of order `mu`: the Prabhakar integral with γ = 0.
pub fn rl_integral<F: Integrand + ?Sized>(
    mu: f64,
    f: &F,
    a: f64,
    x: f64,
    cfg: &QuadratureConfig,
) -> Result<f64, OperatorError> {
    prabhakar_integral(&PrabhakarParams::new(1.0, mu, 0.0, 0.0)?, f, a, x, cfg)
}

fn binomial(m: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * f64::from(m - j) / f64::from(j + 1))
}

/// The Prabhakar derivative for fixed parameters; per-thread like
/// [`PrabhakarIntegral`].
#[derive(Debug)]
pub struct PrabhakarDerivative {
    order: u32,
    /// Integral of order `m − μ` with parameter `−γ`; `None` for the classical case.
    inner: Option<PrabhakarIntegral>,
    cfg: QuadratureConfig,
}

impl PrabhakarDerivative {
    pub fn new(p: PrabhakarParams, cfg: QuadratureConfig) -> Result<Self, OperatorError> {
        cfg.validate()?;
        let mu = p.mu();
        if !(mu > 0.0) {
            return Err(OperatorError::Domain(format!("derivative order mu must be positive, got {mu}")));
        }
        if mu.fract() == 0.0 {
            if p.gamma() != 0.0 {
                return Err(OperatorError::Unsupported(format!(
                    "integer order mu = {mu} is only defined here with gamma = 0 (got gamma = {})",
                    p.gamma()
                )));
            }
            return Ok(Self { order: mu as u32, inner: None, cfg });
        }
        let m = mu.ceil();
        let inner_cfg = QuadratureConfig { n: 4 * cfg.n, grading: cfg.grading };
        Ok(Self {
            order: m as u32,
            inner: Some(PrabhakarIntegral::new(p.with_mu_gamma(m - mu, -p.gamma())?, inner_cfg)?),
            cfg,
        })
    }

    /// The integer `m` with `m − 1 < μ ≤ m`.
    pub fn order(&self) -> u32 {
        self.order
    }

    /// Default finite-difference step `(x − a)/(4n)`.
    pub fn apply<F: Integrand + ?Sized>(&self, f: &F, a: f64, x: f64) -> Result<f64, OperatorError> {
        self.apply_with_step(f, a, x, (x - a) / (4 * self.cfg.n) as f64)
    }

    pub fn apply_with_step<F: Integrand + ?Sized>(&self, f: &F, a: f64, x: f64, h: f64) -> Result<f64, OperatorError> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(OperatorError::Domain(format!("finite-difference step must be positive, got {h} (is x > a?)")));
        }
        let m = self.order;
        let half_width = 0.5 * f64::from(m) * h;
        if x - half_width < a {
            return Err(OperatorError::Domain(format!(
                "stencil [{}, {}] leaves [a, inf) with a = {a}",
                x - half_width,
                x + half_width
            )));
        }
        let mut sum = 0.0;
        for k in 0..=m {
            let s = x + (f64::from(k) - 0.5 * f64::from(m)) * h;
            let g = match &self.inner {
                Some(inner) => inner.apply(f, a, s.max(a))?,
                None => f.at(s)?,
            };
            let sign = if (m - k).is_multiple_of(2) { 1.0 } else { -1.0 };
            sum += sign * binomial(m, k) * g;
        }
        Ok(sum / h.powi(m as i32))
    }
}

pub fn prabhakar_derivative<F: Integrand + ?Sized>(
    p: &PrabhakarParams,
    f: &F,
    a: f64,
    x: f64,
    cfg: &QuadratureConfig,
) -> Result<f64, OperatorError> {
    PrabhakarDerivative::new(*p, *cfg)?.apply(f, a, x)
}

/// Number of interior points at which the identities are checked.
pub const VERIFY_SAMPLES: usize = 9;

/// Finite-difference step used by the verifiers: `(b − a)/(4n)`.
pub fn verification_step(interval: &Interval, cfg: &QuadratureConfig) -> f64 {
    interval.width() / (4 * cfg.n) as f64
}

/// Interior sample points, kept one stencil width `m·h` away from both ends.
pub fn verification_points(
    p: &PrabhakarParams,
    interval: &Interval,
    cfg: &QuadratureConfig,
) -> Result<Vec<f64>, OperatorError> {
    let m = PrabhakarDerivative::new(*p, *cfg)?.order();
    let margin = f64::from(m) * verification_step(interval, cfg);
    let (lo, hi) = (interval.a() + margin, interval.b() - margin);
    Ok((0..VERIFY_SAMPLES).map(|i| lo + (hi - lo) * i as f64 / (VERIFY_SAMPLES - 1) as f64).collect())
}

/// `max |D(E g) − g|` over the interior samples.
pub fn verify_left_inverse<G: Integrand + Sync + ?Sized>(
    p: &PrabhakarParams,
    g: &G,
    interval: &Interval,
    cfg: &QuadratureConfig,
) -> Result<f64, OperatorError> {
    verify_left_inverse_with(p, g, interval, cfg, Exec::default())
}

pub fn verify_left_inverse_with<G: Integrand + Sync + ?Sized>(
    p: &PrabhakarParams,
    g: &G,
    interval: &Interval,
    cfg: &QuadratureConfig,
    exec: Exec,
) -> Result<f64, OperatorError> {
    let points = verification_points(p, interval, cfg)?;
    let h = verification_step(interval, cfg);
    let a = interval.a();
    let errors = exec.try_map(points.len(), |i| {
        let x = points[i];
        let integral = PrabhakarIntegral::new(*p, *cfg)?;
        let derivative = PrabhakarDerivative::new(*p, *cfg)?;
        let eg = Fallible(|u: f64| integral.apply(g, a, u));
        let deg = derivative.apply_with_step(&eg, a, x, h)?;
        Ok::<_, OperatorError>((deg - g.at(x)?).abs())
    })?;
    Ok(errors.into_iter().fold(0.0, f64::max))
}

/// `max |E(D(E g)) − E g|` over the interior samples. Near `a` the inner
/// difference step shrinks to `(u − a)/m` so the stencil stays inside.
pub fn verify_round_trip<G: Integrand + Sync + ?Sized>(
    p: &PrabhakarParams,
    g: &G,
    interval: &Interval,
    cfg: &QuadratureConfig,
) -> Result<f64, OperatorError> {
    verify_round_trip_with(p, g, interval, cfg, Exec::default())
}

pub fn verify_round_trip_with<G: Integrand + Sync + ?Sized>(
    p: &PrabhakarParams,
    g: &G,
    interval: &Interval,
    cfg: &QuadratureConfig,
    exec: Exec,
) -> Result<f64, OperatorError> {
    let points = verification_points(p, interval, cfg)?;
    let h = verification_step(interval, cfg);
    let a = interval.a();
    let errors = exec.try_map(points.len(), |i| {
        let x = points[i];
        let integral = PrabhakarIntegral::new(*p, *cfg)?;
        let derivative = PrabhakarDerivative::new(*p, *cfg)?;
        let m = f64::from(derivative.order());
        let eg = Fallible(|u: f64| integral.apply(g, a, u));
        let deg = Fallible(|u: f64| derivative.apply_with_step(&eg, a, u, h.min((u - a) / m)));
        let round_trip = integral.apply(&deg, a, x)?;
        Ok::<_, OperatorError>((round_trip - eg.at(x)?).abs())
    })?;
    Ok(errors.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaplaceCheck {
    pub numeric: f64,
    pub closed_form: f64,
}

impl LaplaceCheck {
    pub fn relative_error(&self) -> f64 {
        ((self.numeric - self.closed_form) / self.closed_form).abs()
    }
}

/// Tail contributions below this fraction of the running total end the search.
const LAPLACE_TAIL_TOL: f64 = 1e-12;
const LAPLACE_MAX_DOUBLINGS: usize = 60;
/// Dyadic pieces between the origin and the first upper limit.
const LAPLACE_DYADIC_PIECES: i32 = 60;

/// Numerical Laplace transform of the kernel at `s` next to the closed form
/// `s^{−μ}(1 − ω s^{−ρ})^{−γ}`.
pub fn laplace_check(p: &PrabhakarParams, s: f64) -> Result<LaplaceCheck, OperatorError> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(OperatorError::Domain(format!("s must be positive, got {s}")));
    }
    if !(p.mu() > 0.0) {
        return Err(OperatorError::Domain(format!("kernel is not integrable at 0 for mu = {}", p.mu())));
    }
    let ratio = p.omega() * s.powf(-p.rho());
    if ratio.abs() >= 1.0 {
        return Err(OperatorError::Domain(format!("|omega s^-rho| = {} must be below 1", ratio.abs())));
    }
    let closed_form = s.powf(-p.mu()) * (1.0 - ratio).powf(-p.gamma());

    let kernel = Kernel::new(*p, SeriesConfig::default())?;
    let integrand = |x: f64| -> Result<f64, OperatorError> { Ok((-s * x).exp() * kernel.eval(x)?) };
    let piece = |lo: f64, hi: f64| quad::integrate(integrand, lo, hi, 1e-300, 1e-14, 40);

    let mut upper = 10.0 * 1.0_f64.max(1.0 / s);
    // [0, ε]: e^{−sx} ≈ 1, so the kernel antiderivative is the contribution.
    let eps = upper * 2f64.powi(-LAPLACE_DYADIC_PIECES);
    let mut total = kernel.antiderivative(eps)?;
    for k in (0..LAPLACE_DYADIC_PIECES).rev() {
        total += piece(upper * 2f64.powi(-k - 1), upper * 2f64.powi(-k))?;
    }
    for _ in 0..LAPLACE_MAX_DOUBLINGS {
        let tail = piece(upper, 2.0 * upper)?;
        total += tail;
        if tail.abs() <= LAPLACE_TAIL_TOL * total.abs() {
            return Ok(LaplaceCheck { numeric: total, closed_form });
        }
        upper *= 2.0;
    }
    Err(OperatorError::Convergence(format!("Laplace tail still above {LAPLACE_TAIL_TOL} relative at x = {upper}")))
}
