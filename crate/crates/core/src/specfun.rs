//! Modified Bessel functions of half-integer order and the normalized radial
//! kernels built from them.
//!
//! Everything here is expressed through the normalized function
//!
//! ```text
//! Λ_ν(t) = Γ(ν+1) I_ν(t) / (t/2)^ν = Σ_k (t²/4)^k / (k! (ν+1)_k)
//! ```
//!
//! which is entire, equal to 1 at the origin and strictly increasing on
//! `[0, ∞)`. The ball-mean coefficient is `a(t) = Λ_{m/2}(t)` and the radial
//! solution is `U(x) = Λ_{(m-2)/2}(λ|x|)`.
//!
//! Small and moderate arguments are summed as a power series of positive
//! terms (no cancellation). Past [`SERIES_SWITCH`] the exponentially scaled
//! Hankel expansion is used; for half-integer orders that expansion terminates
//! and is evaluated through the exact `sinh`/`cosh` closed forms instead.

use std::f64::consts::PI;

use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Arguments at or below this value are evaluated by the power series.
pub const SERIES_SWITCH: f64 = 25.0;

/// Beyond this argument `bessel_i` returns an exponentially scaled value.
pub const SCALING_THRESHOLD: f64 = 700.0;

/// Relative error estimate above which the Poisson-integral quadrature fails.
pub const POISSON_REL_TOL: f64 = 1e-12;

const MAX_SERIES_TERMS: usize = 10_000;

/// Dimension `m` and screening constant `λ` of `∇²u − λ²u = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct KernelParams {
    m: usize,
    lambda: f64,
}

#[derive(Deserialize)]
struct RawParams {
    m: usize,
    lambda: f64,
}

impl TryFrom<RawParams> for KernelParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        KernelParams::new(raw.m, raw.lambda)
    }
}

impl KernelParams {
    pub fn new(m: usize, lambda: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::Argument(format!("dimension must be at least 2, got {m}")));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Argument(format!("lambda must be positive and finite, got {lambda}")));
        }
        Ok(Self { m, lambda })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Order of the Bessel function inside `a`: `m/2`.
    pub fn ball_order(&self) -> f64 {
        self.m as f64 / 2.0
    }

    /// Order of the Bessel function inside `U`: `(m-2)/2`.
    pub fn kernel_order(&self) -> f64 {
        (self.m as f64 - 2.0) / 2.0
    }
}

/// Which evaluation branch produced a kernel value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Series,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub argument: f64,
    pub value: f64,
    pub regime: Regime,
}

/// `I_ν(z)` stored as `scaled · e^{exponent}`.
///
/// `exponent` is 0 (and `scaled` is the plain value) up to
/// [`SCALING_THRESHOLD`]; past it `scaled = e^{-z} I_ν(z)` and `exponent = z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselI {
    pub scaled: f64,
    pub exponent: f64,
}

impl BesselI {
    /// The plain value; `+inf` when it is not representable.
    pub fn value(&self) -> f64 {
        if self.exponent == 0.0 {
            self.scaled
        } else {
            self.scaled * self.exponent.exp()
        }
    }

    pub fn ln(&self) -> f64 {
        self.scaled.ln() + self.exponent
    }
}

/// Volume of the unit ball in `ℝᵐ`, `ω_m = π^{m/2} / Γ(m/2 + 1)`.
///
/// Uses `ω_m = (2π/m) ω_{m-2}` so that `ω_2 = π` and `ω_3 = 4π/3` come out
/// exactly as their textbook expressions.
pub fn unit_ball_volume(m: usize) -> f64 {
    let mut omega = if m.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut k = 2 + m % 2;
    while k <= m {
        omega *= 2.0 * PI / k as f64;
        k += 2;
    }
    omega
}

pub fn ball_volume(m: usize, r: f64) -> f64 {
    unit_ball_volume(m) * r.powi(m as i32)
}

/// `|∂B_r| = m ω_m r^{m-1}`.
pub fn sphere_area(m: usize, r: f64) -> f64 {
    m as f64 * unit_ball_volume(m) * r.powi(m as i32 - 1)
}

fn is_half_integer_grid(x: f64) -> bool {
    x.is_finite() && x >= 0.0 && (2.0 * x).fract() == 0.0
}

/// `Γ(x)` for positive `x` with `2x` an integer, by exact recurrence.
pub fn gamma_half_integer(x: f64) -> f64 {
    debug_assert!(is_half_integer_grid(x) && x > 0.0);
    let (mut acc, mut y) = if ((2.0 * x) as u64).is_multiple_of(2) { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    while y < x - 0.25 {
        acc *= y;
        y += 1.0;
    }
    acc
}

pub fn ln_gamma_half_integer(x: f64) -> f64 {
    debug_assert!(is_half_integer_grid(x) && x > 0.0);
    let (mut acc, mut y) = if ((2.0 * x) as u64).is_multiple_of(2) { (0.0, 1.0) } else { (0.5 * PI.ln(), 0.5) };
    while y < x - 0.25 {
        acc += y.ln();
        y += 1.0;
    }
    acc
}

fn switch_point(nu: f64) -> f64 {
    SERIES_SWITCH.max(nu * nu)
}

/// `Λ_ν(t)` by direct summation.
fn series(nu: f64, t: f64) -> f64 {
    let q = 0.25 * t * t;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..MAX_SERIES_TERMS {
        let k = k as f64;
        term *= q / (k * (nu + k));
        sum += term;
        if term <= 0.25 * f64::EPSILON * sum {
            break;
        }
    }
    sum
}

/// `Λ_ν(t) − 1`, summed without forming the leading 1.
fn series_excess(nu: f64, t: f64) -> f64 {
    let q = 0.25 * t * t;
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..MAX_SERIES_TERMS {
        let k = k as f64;
        term *= q / (k * (nu + k));
        sum += term;
        if term <= 0.25 * f64::EPSILON * sum {
            break;
        }
    }
    sum
}

/// `e^{-z} I_ν(z)` for large `z`.
fn scaled_large(nu: f64, z: f64) -> f64 {
    if (2.0 * nu) as u64 % 2 == 1 {
        scaled_half_integer(nu, z)
    } else {
        scaled_hankel(nu, z)
    }
}

/// Closed forms `I_{±1/2}` followed by the upward recurrence
/// `I_{ν+1} = I_{ν-1} − (2ν/z) I_ν`, all carried with the factor `e^{-z}`.
fn scaled_half_integer(nu: f64, z: f64) -> f64 {
    let e2 = (-2.0 * z).exp_m1();
    let norm = (2.0 * PI * z).sqrt();
    let mut prev = (2.0 + e2) / norm; // e^{-z} I_{-1/2}
    let mut cur = -e2 / norm; // e^{-z} I_{1/2}
    let mut order = 0.5;
    while order < nu - 0.25 {
        let next = prev - (2.0 * order / z) * cur;
        prev = cur;
        cur = next;
        order += 1.0;
    }
    cur
}

/// Hankel expansion `I_ν(z) ~ e^z/√(2πz) Σ (−1)^k a_k(ν) z^{-k}`, truncated
/// at the smallest term. The exponentially small companion series is dropped.
fn scaled_hankel(nu: f64, z: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0_f64;
    let mut sum = 1.0;
    for k in 1..200 {
        let k = k as f64;
        let odd = 2.0 * k - 1.0;
        let next = -term * (mu - odd * odd) / (8.0 * k * z);
        if next == 0.0 || next.abs() >= term.abs() {
            break;
        }
        sum += next;
        term = next;
        if term.abs() <= 0.25 * f64::EPSILON * sum.abs() {
            break;
        }
    }
    sum / (2.0 * PI * z).sqrt()
}

fn ln_asymptotic(nu: f64, t: f64) -> f64 {
    ln_gamma_half_integer(nu + 1.0) + nu * (2.0 / t).ln() + t + scaled_large(nu, t).ln()
}

/// `Λ_ν(t)` for `t ≥ 0`, no validation.
pub(crate) fn normalized(nu: f64, t: f64) -> KernelValue {
    if t == 0.0 {
        return KernelValue { argument: t, value: 1.0, regime: Regime::Series };
    }
    if t <= switch_point(nu) {
        KernelValue { argument: t, value: series(nu, t), regime: Regime::Series }
    } else {
        KernelValue { argument: t, value: ln_asymptotic(nu, t).exp(), regime: Regime::Asymptotic }
    }
}

/// `ln Λ_ν(t)`, finite even where `Λ_ν(t)` itself overflows.
pub fn ln_normalized(nu: f64, t: f64) -> f64 {
    if t <= switch_point(nu) {
        series(nu, t).ln()
    } else {
        ln_asymptotic(nu, t)
    }
}

fn check_argument(name: &str, x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::OutOfDomain(format!("{name} must be nonnegative, got {x}")));
    }
    Ok(())
}

/// Modified Bessel function of the first kind for orders `ν ∈ {0, 1/2, 1, …}`.
pub fn bessel_i(nu: f64, z: f64) -> Result<BesselI> {
    if !is_half_integer_grid(nu) {
        return Err(Error::Argument(format!("order {nu} is not a nonnegative multiple of 1/2")));
    }
    check_argument("z", z)?;
    if z == 0.0 {
        let v = if nu == 0.0 { 1.0 } else { 0.0 };
        return Ok(BesselI { scaled: v, exponent: 0.0 });
    }
    if z <= switch_point(nu) {
        let prefactor = (nu * (0.5 * z).ln() - ln_gamma_half_integer(nu + 1.0)).exp();
        return Ok(BesselI { scaled: prefactor * series(nu, z), exponent: 0.0 });
    }
    let scaled = scaled_large(nu, z);
    if z <= SCALING_THRESHOLD {
        Ok(BesselI { scaled: scaled * z.exp(), exponent: 0.0 })
    } else {
        Ok(BesselI { scaled, exponent: z })
    }
}

/// Ball-mean coefficient `a(t) = Γ(m/2+1) I_{m/2}(t) / (t/2)^{m/2}`.
pub fn eval_a(params: &KernelParams, t: f64) -> Result<KernelValue> {
    check_argument("t", t)?;
    Ok(normalized(params.ball_order(), t))
}

/// Radial solution `U` at distance `x_norm` from its center.
pub fn eval_u(params: &KernelParams, x_norm: f64) -> Result<KernelValue> {
    check_argument("x_norm", x_norm)?;
    Ok(normalized(params.kernel_order(), params.lambda * x_norm))
}

/// `U` from the Poisson integral
/// `c_m ∫_0^1 (1−s²)^{(m−3)/2} cosh(λ|x|s) ds`, independent of the series.
///
/// The substitution `s = sin θ` turns the weight into `cos^{m−2} θ`, which is
/// smooth for every `m ≥ 2`, so plain Gauss–Legendre converges spectrally.
/// The error estimate is the difference against the half-size rule.
pub fn eval_u_poisson(params: &KernelParams, x_norm: f64, quad_points: usize) -> Result<f64> {
    check_argument("x_norm", x_norm)?;
    if quad_points < 8 {
        return Err(Error::Argument(format!("at least 8 quadrature points required, got {quad_points}")));
    }
    let m = params.m as f64;
    let t = params.lambda * x_norm;
    let constant = 2.0 * gamma_half_integer(m / 2.0) / (PI.sqrt() * gamma_half_integer((m - 1.0) / 2.0));
    let integrand = |theta: f64| theta.cos().powi(params.m as i32 - 2) * (t * theta.sin()).cosh();
    let integrate = |n: usize| {
        let rule = GaussLegendre::new(n.try_into().expect("n > 0"));
        constant * rule.integrate(0.0, 0.5 * PI, integrand)
    };
    let fine = integrate(quad_points);
    let coarse = integrate(quad_points / 2);
    let estimate = (fine - coarse).abs();
    if !fine.is_finite() || estimate > POISSON_REL_TOL * fine.abs() {
        return Err(Error::Accuracy(format!(
            "Poisson integral at λ|x| = {t} with {quad_points} points: error estimate {estimate:e}"
        )));
    }
    Ok(fine)
}

/// Coefficient `c` with `(1/|∂B_r|) ∫_{∂B_r(x)} u = c · u(x)` for every solution.
///
/// Combining the ball mean-value formula with the sphere/ball identity gives
/// `c = λr I_{(m−2)/2}(λr) a(λr) / (m I_{m/2}(λr))`, and substituting the
/// definition of `a` collapses this to `Λ_{(m−2)/2}(λr)`, i.e. `U` at radius `r`.
pub fn sphere_mean_coeff(params: &KernelParams, r: f64) -> Result<f64> {
    if r.is_nan() || r <= 0.0 {
        return Err(Error::OutOfDomain(format!("radius must be positive, got {r}")));
    }
    Ok(eval_u(params, r)?.value)
}

/// `U(r) − a(λr)`, computed without cancellation for small `λr`.
///
/// Term by term, `1/(m/2)_k − 1/(m/2+1)_k = k / ((m/2)_k (m/2 + k))`, so the
/// difference is itself a series of positive terms.
pub fn kernel_gap(params: &KernelParams, r: f64) -> Result<f64> {
    check_argument("r", r)?;
    let t = params.lambda * r;
    let nu = params.kernel_order();
    if t > SERIES_SWITCH {
        return Ok(normalized(nu, t).value - normalized(params.ball_order(), t).value);
    }
    let half_m = params.m as f64 / 2.0;
    let q = 0.25 * t * t;
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..MAX_SERIES_TERMS {
        let k = k as f64;
        term *= q / (k * (nu + k));
        let gap_term = term * k / (half_m + k);
        sum += gap_term;
        if gap_term <= 0.25 * f64::EPSILON * sum {
            break;
        }
    }
    Ok(sum)
}

/// `a(t) − 1` without cancellation (relevant in the harmonic limit `λ → 0`).
pub fn a_minus_one(params: &KernelParams, t: f64) -> Result<f64> {
    check_argument("t", t)?;
    let nu = params.ball_order();
    if t > SERIES_SWITCH {
        return Ok(normalized(nu, t).value - 1.0);
    }
    Ok(series_excess(nu, t))
}
