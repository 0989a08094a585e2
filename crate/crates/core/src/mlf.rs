//! Three-parameter (Prabhakar) Mittag-Leffler function and the Prabhakar kernel.
//!
//! ```text
//! E^γ_{ρ,μ}(z) = Σ_{k≥0} (γ)_k z^k / (Γ(ρk + μ) k!)
//! ```
//!
//! Every term is formed in log space,
//! `exp(log|(γ)_k| + k·log|z| − logΓ(ρk+μ) − logΓ(k+1))`, with the sign carried
//! separately, so that neither the Pochhammer symbol nor the gamma functions
//! overflow for large `k`. Terms where `ρk + μ` is a non-positive integer are
//! exactly zero (the reciprocal gamma function vanishes there), which is what
//! makes the differentiation rule valid for orders `μ − n ≤ 0`.
//!
//! The Prabhakar kernel is `e(s) = s^{μ−1} E^γ_{ρ,μ}(ω s^ρ)`; its antiderivative
//! and derivatives stay inside the same family:
//!
//! ```text
//! d/ds [s^μ E^γ_{ρ,μ+1}(ω s^ρ)]         = s^{μ−1} E^γ_{ρ,μ}(ω s^ρ)
//! (d/ds)^n [s^{μ−1} E^γ_{ρ,μ}(ω s^ρ)]   = s^{μ−n−1} E^γ_{ρ,μ−n}(ω s^ρ)
//! ```

use std::cell::RefCell;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MlfError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error(
        "series did not converge after {terms} terms (partial sum {partial_sum:e}, last term magnitude {last_term:e})"
    )]
    Truncation { terms: usize, partial_sum: f64, last_term: f64 },
}

/// The quadruple (ρ, μ, ω, γ) shared by the kernel, the operators and the
/// Green's function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct PrabhakarParams {
    rho: f64,
    mu: f64,
    omega: f64,
    gamma: f64,
}

#[derive(Deserialize)]
struct RawParams {
    rho: f64,
    mu: f64,
    omega: f64,
    gamma: f64,
}

impl TryFrom<RawParams> for PrabhakarParams {
    type Error = MlfError;

    fn try_from(raw: RawParams) -> Result<Self, Self::Error> {
        PrabhakarParams::new(raw.rho, raw.mu, raw.omega, raw.gamma)
    }
}

impl PrabhakarParams {
    pub fn new(rho: f64, mu: f64, omega: f64, gamma: f64) -> Result<Self, MlfError> {
        for (name, v) in [("rho", rho), ("mu", mu), ("omega", omega), ("gamma", gamma)] {
            if !v.is_finite() {
                return Err(MlfError::Domain(format!("{name} must be finite, got {v}")));
            }
        }
        if rho <= 0.0 {
            return Err(MlfError::Domain(format!("rho must be positive, got {rho}")));
        }
        Ok(Self { rho, mu, omega, gamma })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Same ρ and ω with a different order and Pochhammer parameter.
    pub fn with_mu_gamma(&self, mu: f64, gamma: f64) -> Result<Self, MlfError> {
        Self::new(self.rho, mu, self.omega, gamma)
    }
}

/// Truncation controls for the power series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesConfig {
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-15, max_terms: 2000 }
    }
}

impl SeriesConfig {
    pub fn new(rel_tol: f64, max_terms: usize) -> Result<Self, MlfError> {
        let cfg = Self { rel_tol, max_terms };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), MlfError> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(MlfError::Domain(format!("rel_tol must lie in (0, 1), got {}", self.rel_tol)));
        }
        if self.max_terms < 8 {
            return Err(MlfError::Domain(format!("max_terms must be at least 8, got {}", self.max_terms)));
        }
        Ok(())
    }
}

/// `log|(γ)_k|` together with the sign of `(γ)_k`. A vanishing product has
/// `sign == 0` and `log_abs == -inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PochhammerLog {
    pub log_abs: f64,
    pub sign: i8,
}

impl PochhammerLog {
    pub const ONE: Self = Self { log_abs: 0.0, sign: 1 };
    pub const ZERO: Self = Self { log_abs: f64::NEG_INFINITY, sign: 0 };

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// Multiply by the next factor `x`.
    fn times(self, x: f64) -> Self {
        if self.is_zero() || x == 0.0 {
            return Self::ZERO;
        }
        Self { log_abs: self.log_abs + x.abs().ln(), sign: if x < 0.0 { -self.sign } else { self.sign } }
    }
}

/// Rising factorial `(γ)_k = γ(γ+1)…(γ+k−1)` in log-magnitude/sign form.
pub fn pochhammer_log(gamma: f64, k: usize) -> PochhammerLog {
    (0..k).fold(PochhammerLog::ONE, |acc, j| acc.times(gamma + j as f64))
}

/// `ln|Γ(x)|` and the sign of `Γ(x)`; `None` at the poles `x ∈ {0, −1, −2, …}`.
pub fn ln_gamma_signed(x: f64) -> Option<(f64, f64)> {
    if x <= 0.0 && x == x.floor() {
        return None;
    }
    let (lg, sign) = libm::lgamma_r(x);
    Some((lg, if sign < 0 { -1.0 } else { 1.0 }))
}

#[derive(Debug, Clone, Copy)]
enum Coefficient {
    /// `sign · exp(log_abs)` is `(γ)_k / (Γ(ρk+μ) k!)`.
    Term { log_abs: f64, sign: f64 },
    /// Reciprocal-gamma zero at this index; later terms may be nonzero.
    Pole,
    /// Pochhammer factor vanished; this and every later term is zero.
    End,
}

#[derive(Debug)]
struct CoefficientTable {
    coefs: Vec<Coefficient>,
    pochhammer: PochhammerLog,
}

/// Result of one series evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    /// Number of series terms visited before the stopping rule fired.
    pub terms: usize,
}

/// `E^γ_{ρ,μ}` with the coefficient logs cached across evaluations.
///
/// The cache grows lazily and lives behind a `RefCell`, so a value is cheap to
/// build and meant to be owned by one thread; build one per worker.
#[derive(Debug)]
pub struct MittagLeffler {
    rho: f64,
    mu: f64,
    gamma: f64,
    cfg: SeriesConfig,
    table: RefCell<CoefficientTable>,
}

impl MittagLeffler {
    pub fn new(rho: f64, mu: f64, gamma: f64, cfg: SeriesConfig) -> Result<Self, MlfError> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(MlfError::Domain(format!("rho must be positive, got {rho}")));
        }
        if !mu.is_finite() || !gamma.is_finite() {
            return Err(MlfError::Domain(format!("mu and gamma must be finite, got mu={mu}, gamma={gamma}")));
        }
        cfg.validate()?;
        Ok(Self {
            rho,
            mu,
            gamma,
            cfg,
            table: RefCell::new(CoefficientTable { coefs: Vec::new(), pochhammer: PochhammerLog::ONE }),
        })
    }

    fn coefficient(&self, k: usize) -> Coefficient {
        let mut table = self.table.borrow_mut();
        while table.coefs.len() <= k {
            let j = table.coefs.len();
            if j > 0 {
                let factor = self.gamma + (j - 1) as f64;
                table.pochhammer = table.pochhammer.times(factor);
            }
            let coef = if table.pochhammer.is_zero() {
                Coefficient::End
            } else {
                match ln_gamma_signed(self.rho * j as f64 + self.mu) {
                    None => Coefficient::Pole,
                    Some((lg, gsign)) => Coefficient::Term {
                        log_abs: table.pochhammer.log_abs - lg - libm::lgamma(j as f64 + 1.0),
                        sign: f64::from(table.pochhammer.sign) * gsign,
                    },
                }
            };
            table.coefs.push(coef);
        }
        table.coefs[k]
    }

    pub fn eval(&self, z: f64) -> Result<Evaluation, MlfError> {
        if !z.is_finite() {
            return Err(MlfError::Domain(format!("argument must be finite, got {z}")));
        }
        if z == 0.0 {
            let value = match self.coefficient(0) {
                Coefficient::Term { log_abs, sign } => sign * log_abs.exp(),
                Coefficient::Pole | Coefficient::End => 0.0,
            };
            return Ok(Evaluation { value, terms: 1 });
        }

        let log_z = z.abs().ln();
        let alternating = z < 0.0;
        let mut sum = 0.0_f64;
        let mut compensation = 0.0_f64;
        let mut small_run = 0;
        let mut last_term = 0.0_f64;

        for k in 0..self.cfg.max_terms {
            let (log_abs, sign) = match self.coefficient(k) {
                Coefficient::End => return Ok(Evaluation { value: sum + compensation, terms: k }),
                Coefficient::Pole => continue,
                Coefficient::Term { log_abs, sign } => (log_abs, sign),
            };
            let mut term = sign * (log_abs + k as f64 * log_z).exp();
            if alternating && k % 2 == 1 {
                term = -term;
            }
            // Neumaier compensated summation.
            let t = sum + term;
            if sum.abs() >= term.abs() {
                compensation += (sum - t) + term;
            } else {
                compensation += (term - t) + sum;
            }
            sum = t;
            last_term = term.abs();

            if !sum.is_finite() {
                return Err(MlfError::Truncation { terms: k + 1, partial_sum: sum, last_term });
            }
            if last_term <= self.cfg.rel_tol * (sum + compensation).abs() {
                small_run += 1;
                if small_run >= 2 {
                    return Ok(Evaluation { value: sum + compensation, terms: k + 1 });
                }
            } else {
                small_run = 0;
            }
        }
        Err(MlfError::Truncation { terms: self.cfg.max_terms, partial_sum: sum + compensation, last_term })
    }

    pub fn value(&self, z: f64) -> Result<f64, MlfError> {
        self.eval(z).map(|e| e.value)
    }
}

/// One-shot evaluation of `E^γ_{ρ,μ}(z)`.
pub fn mlf_eval(rho: f64, mu: f64, gamma: f64, z: f64, cfg: SeriesConfig) -> Result<f64, MlfError> {
    MittagLeffler::new(rho, mu, gamma, cfg)?.value(z)
}

/// `s^{power} · series(ω s^ρ)` with the power formed in log space.
fn scaled(series: &MittagLeffler, power: f64, rho: f64, omega: f64, s: f64) -> Result<f64, MlfError> {
    let ln_s = s.ln();
    let e = series.value(omega * (rho * ln_s).exp())?;
    if e == 0.0 {
        return Ok(0.0);
    }
    Ok(e.signum() * (power * ln_s + e.abs().ln()).exp())
}

/// The Prabhakar kernel `s^{μ−1} E^γ_{ρ,μ}(ω s^ρ)` with its antiderivative
/// and derivatives. Caches series coefficients; not `Sync`.
#[derive(Debug)]
pub struct Kernel {
    params: PrabhakarParams,
    cfg: SeriesConfig,
    base: MittagLeffler,
    integrated: MittagLeffler,
}

impl Kernel {
    pub fn new(params: PrabhakarParams, cfg: SeriesConfig) -> Result<Self, MlfError> {
        let (rho, mu, gamma) = (params.rho, params.mu, params.gamma);
        Ok(Self {
            params,
            cfg,
            base: MittagLeffler::new(rho, mu, gamma, cfg)?,
            integrated: MittagLeffler::new(rho, mu + 1.0, gamma, cfg)?,
        })
    }

    pub fn params(&self) -> &PrabhakarParams {
        &self.params
    }

    pub fn eval(&self, s: f64) -> Result<f64, MlfError> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(MlfError::Domain(format!("kernel argument must be positive and finite, got {s}")));
        }
        let p = &self.params;
        scaled(&self.base, p.mu - 1.0, p.rho, p.omega, s)
    }

    /// `∫_0^s kernel = s^μ E^γ_{ρ,μ+1}(ω s^ρ)`.
    pub fn antiderivative(&self, s: f64) -> Result<f64, MlfError> {
        let p = &self.params;
        if !(p.mu > 0.0) {
            return Err(MlfError::Domain(format!("antiderivative requires mu > 0, got {}", p.mu)));
        }
        if !(s >= 0.0) || !s.is_finite() {
            return Err(MlfError::Domain(format!("antiderivative argument must be non-negative and finite, got {s}")));
        }
        if s == 0.0 {
            return Ok(0.0);
        }
        scaled(&self.integrated, p.mu, p.rho, p.omega, s)
    }

    /// n-th derivative `s^{μ−n−1} E^γ_{ρ,μ−n}(ω s^ρ)`.
    pub fn derivative(&self, n: u32, s: f64) -> Result<f64, MlfError> {
        if n == 0 {
            return self.eval(s);
        }
        if !(s > 0.0) || !s.is_finite() {
            return Err(MlfError::Domain(format!("kernel argument must be positive and finite, got {s}")));
        }
        let p = &self.params;
        let order = p.mu - f64::from(n);
        let series = MittagLeffler::new(p.rho, order, p.gamma, self.cfg)?;
        scaled(&series, order - 1.0, p.rho, p.omega, s)
    }
}

pub fn kernel_eval(p: &PrabhakarParams, s: f64) -> Result<f64, MlfError> {
    Kernel::new(*p, SeriesConfig::default())?.eval(s)
}

pub fn kernel_antiderivative(p: &PrabhakarParams, s: f64) -> Result<f64, MlfError> {
    Kernel::new(*p, SeriesConfig::default())?.antiderivative(s)
}

pub fn kernel_derivative(p: &PrabhakarParams, n: u32, s: f64) -> Result<f64, MlfError> {
    Kernel::new(*p, SeriesConfig::default())?.derivative(n, s)
}
