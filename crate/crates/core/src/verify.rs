//! Numerical checks of the mean-value identities.
//!
//! Each check returns a [`MeanValueReport`] carrying both sides of the
//! identity, the residual, the tolerance it was judged against and enough
//! provenance to re-run it.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domains::{norm, Domain, DomainSpec};
use crate::quadrature::{boundary_flux, mc, BallRule, MeanEstimate, Method, DEFAULT_SPHERE_SEED};
use crate::solutions::{Battery, Solution, SolutionKind};
use crate::specfun::{
    a_minus_one, bessel_i, eval_a, eval_u, kernel_gap, sphere_area, KernelParams,
};
use crate::{Error, Result};

/// Relative tolerance for deterministic product rules.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_LEVEL: u32 = 4;
/// Multiple of the standard error accepted for randomized rules.
pub const SIGMA_MULTIPLE: f64 = 4.0;
/// Relative agreement required between `a(t) − 1` and its leading term.
pub const HARMONIC_LIMIT_TOLERANCE: f64 = 0.1;
/// `λr` at which the harmonic limit is probed.
pub const HARMONIC_LIMIT_ARGUMENT: f64 = 1e-4;
pub const DEFAULT_CASES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Identity {
    BallMvp,
    SphereBall,
    Flux,
    Inequality7,
    HarmonicLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub params: KernelParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solution: Option<SolutionKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanValueReport {
    pub identity: Identity,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub provenance: Provenance,
}

/// Quadrature level and the seed of the randomized sphere rule (`m ≥ 4`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureSettings {
    pub level: u32,
    pub seed: u64,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self { level: DEFAULT_LEVEL, seed: DEFAULT_SPHERE_SEED }
    }
}

impl QuadratureSettings {
    pub fn with_level(level: u32) -> Self {
        Self { level, ..Self::default() }
    }
}

fn ball_provenance(s: &Solution, x: &[f64], r: f64, settings: QuadratureSettings) -> Result<Provenance> {
    Ok(Provenance {
        params: *s.params(),
        domain: Some(Domain::ball(x.to_vec(), r)?.to_spec()),
        solution: Some(s.kind().clone()),
        level: Some(settings.level),
        seed: (s.params().m() >= 4).then_some(settings.seed),
    })
}

/// Randomized rules only track the direction-sampling error; the radial rule
/// is still deterministic, so the deterministic tolerance stays as a floor.
fn tolerance_for(estimates: &[(MeanEstimate, f64)]) -> f64 {
    let sigma: f64 = estimates
        .iter()
        .filter(|(e, _)| e.method == Method::MonteCarlo)
        .map(|(e, scale)| (e.std_error / scale).powi(2))
        .sum::<f64>()
        .sqrt();
    DEFAULT_TOLERANCE.max(SIGMA_MULTIPLE * sigma)
}

fn report(identity: Identity, lhs: f64, rhs: f64, residual: f64, tolerance: f64, provenance: Provenance) -> MeanValueReport {
    MeanValueReport { identity, lhs, rhs, residual, tolerance, passed: residual.abs() <= tolerance, provenance }
}

/// `a(λr) u(x)` against the ball mean of `u`; residual `rhs/lhs − 1`.
pub fn check_ball_mvp(s: &Solution, x: &[f64], r: f64, settings: QuadratureSettings) -> Result<MeanValueReport> {
    let params = s.params();
    let rule = BallRule::new(params.m(), settings.level, settings.seed)?;
    let lhs = eval_a(params, params.lambda() * r)?.value * s.eval(x)?;
    let mean = rule.ball_mean(|y| s.value_at(y), x, r)?;
    let tolerance = tolerance_for(&[(mean, mean.value.abs())]);
    Ok(report(Identity::BallMvp, lhs, mean.value, mean.value / lhs - 1.0, tolerance, ball_provenance(s, x, r, settings)?))
}

/// `m I_{m/2}(λr) ⨍_{∂B_r} u` against `λr I_{(m−2)/2}(λr) ⨍_{B_r} u`;
/// residual `lhs/rhs − 1`.
///
/// The identity holds between mean values. With raw integrals the two sides
/// differ by the factor `|∂B_r| / |B_r| = m/r`.
///
/// The Bessel factors are taken in their scaled form (common factor
/// `e^{−λr}`) so the check stays finite past the overflow threshold.
pub fn check_sphere_ball(s: &Solution, x: &[f64], r: f64, settings: QuadratureSettings) -> Result<MeanValueReport> {
    let params = s.params();
    s.eval(x)?;
    let (m, t) = (params.m(), params.lambda() * r);
    let rule = BallRule::new(m, settings.level, settings.seed)?;
    let surface = rule.sphere_mean(|y| s.value_at(y), x, r)?;
    let volume = rule.ball_mean(|y| s.value_at(y), x, r)?;
    let outer = bessel_i(params.ball_order(), t)?;
    let inner = bessel_i(params.kernel_order(), t)?;
    let lhs = m as f64 * outer.scaled * surface.value;
    let rhs = t * inner.scaled * volume.value;
    let tolerance = tolerance_for(&[(surface, surface.value.abs()), (volume, volume.value.abs())]);
    Ok(report(Identity::SphereBall, lhs, rhs, lhs / rhs - 1.0, tolerance, ball_provenance(s, x, r, settings)?))
}

/// Mean flux over `∂B_r(x0)` against `(λ² r / m) a(λr) u(x0)`;
/// residual `rhs/lhs − 1`.
pub fn check_flux(s: &Solution, x0: &[f64], r: f64, settings: QuadratureSettings) -> Result<MeanValueReport> {
    let params = s.params();
    let (m, lambda) = (params.m(), params.lambda());
    let lhs = lambda * lambda * r / m as f64 * eval_a(params, lambda * r)?.value * s.eval(x0)?;
    let ball = Domain::ball(x0.to_vec(), r)?;
    let flux = boundary_flux(s, &ball, settings.level)?;
    let rhs = flux.value / sphere_area(m, r);
    let tolerance = tolerance_for(&[(flux, flux.value.abs())]);
    let provenance = Provenance { seed: (m >= 4).then_some(DEFAULT_SPHERE_SEED), ..ball_provenance(s, x0, r, settings)? };
    Ok(report(Identity::Flux, lhs, rhs, rhs / lhs - 1.0, tolerance, provenance))
}

/// `U(r) > a(λr)` at every radius of the grid. The residual `U(r) − a(λr)` is
/// summed from its own positive series near the origin, so it stays strictly
/// positive even where both sides round to 1; the tolerance field is 0 and a
/// report passes iff its residual is positive.
pub fn check_inequality7(params: &KernelParams, r_grid: &[f64]) -> Result<Vec<MeanValueReport>> {
    r_grid
        .iter()
        .map(|&r| {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::OutOfDomain(format!("radius must be positive, got {r}")));
            }
            let lhs = eval_u(params, r)?.value;
            let rhs = eval_a(params, params.lambda() * r)?.value;
            let residual = kernel_gap(params, r)?;
            Ok(MeanValueReport {
                identity: Identity::Inequality7,
                lhs,
                rhs,
                residual,
                tolerance: 0.0,
                passed: residual > 0.0,
                provenance: Provenance { params: *params, domain: None, solution: None, level: None, seed: None },
            })
        })
        .collect()
}

/// `a(λr) − 1` against `(λr)² / (2(m+2))` at `λ = 10⁻⁴ / r`; residual is
/// the relative mismatch, accepted within 10%.
pub fn check_harmonic_limit(r: f64, m: usize) -> Result<MeanValueReport> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::OutOfDomain(format!("radius must be positive, got {r}")));
    }
    let params = KernelParams::new(m, HARMONIC_LIMIT_ARGUMENT / r)?;
    let t = HARMONIC_LIMIT_ARGUMENT;
    let lhs = a_minus_one(&params, t)?;
    let rhs = t * t / (2.0 * (m as f64 + 2.0));
    let provenance = Provenance { params, domain: None, solution: None, level: None, seed: None };
    Ok(report(Identity::HarmonicLimit, lhs, rhs, lhs / rhs - 1.0, HARMONIC_LIMIT_TOLERANCE, provenance))
}

/// `a(0) − 1 = 0` exactly; the absolute residual must vanish.
pub fn check_harmonic_origin(params: &KernelParams) -> Result<MeanValueReport> {
    let lhs = eval_a(params, 0.0)?.value - 1.0;
    let provenance = Provenance { params: *params, domain: None, solution: None, level: None, seed: None };
    Ok(report(Identity::HarmonicLimit, lhs, 0.0, lhs, 0.0, provenance))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Mvp,
    SphereBall,
    Flux,
    Ineq7,
    HarmonicLimit,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 6] = ["mvp", "sphere-ball", "flux", "ineq7", "harmonic-limit", "all"];
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "mvp" => Suite::Mvp,
            "sphere-ball" => Suite::SphereBall,
            "flux" => Suite::Flux,
            "ineq7" => Suite::Ineq7,
            "harmonic-limit" => Suite::HarmonicLimit,
            "all" => Suite::All,
            other => {
                return Err(Error::Argument(format!("unknown suite {other:?}, expected one of {}", Self::NAMES.join(", "))))
            }
        })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = [Suite::Mvp, Suite::SphereBall, Suite::Flux, Suite::Ineq7, Suite::HarmonicLimit, Suite::All]
            .iter()
            .position(|s| s == self)
            .expect("listed");
        f.write_str(Self::NAMES[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteConfig {
    pub seed: u64,
    pub level: u32,
    pub cases: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { seed: 0, level: DEFAULT_LEVEL, cases: DEFAULT_CASES }
    }
}

/// A ball `B_r(x)` inside the unit reference ball, paired with a battery id.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCase {
    pub member: usize,
    pub x: Vec<f64>,
    pub r: f64,
}

/// Random balls `B_r(x) ⊂ B_1(0)`, `|x| < 0.9`, `r ∈ (0.05, 1 − |x|)`,
/// cycling through `members` battery entries.
pub fn sweep_cases(m: usize, members: usize, cases: usize, seed: u64) -> Vec<SweepCase> {
    let mut rng = mc::stream(seed, mc::StreamTag::Sweep, m as u64);
    (0..cases)
        .map(|k| {
            let mut x: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
            let n = norm(&x).max(f64::MIN_POSITIVE);
            let radius = 0.9 * rng.random::<f64>().powf(1.0 / m as f64);
            x.iter_mut().for_each(|v| *v *= radius / n);
            let room = 1.0 - norm(&x);
            let r = 0.05 + (room - 0.05) * rng.random::<f64>();
            SweepCase { member: k % members, x, r }
        })
        .collect()
}

/// Battery used by the sweeps: the standard battery anchored at the origin
/// of the unit reference ball.
pub fn reference_battery(params: KernelParams) -> Result<Battery> {
    let m = params.m();
    let reference = Domain::ball(vec![0.0; m], 1.0)?;
    Battery::standard(params, &vec![0.0; m], reference.bounding_box())
}

/// Log-spaced radii `r ∈ [1e-3, 30/λ]`.
pub fn inequality7_grid(params: &KernelParams, points: usize) -> Vec<f64> {
    let (lo, hi) = (1e-3_f64.ln(), (30.0 / params.lambda()).ln());
    (0..points).map(|i| (lo + (hi - lo) * i as f64 / (points - 1).max(1) as f64).exp()).collect()
}

fn sweep<F>(params: KernelParams, config: SuiteConfig, check: F) -> Result<Vec<MeanValueReport>>
where
    F: Fn(&Solution, &[f64], f64, QuadratureSettings) -> Result<MeanValueReport> + Sync,
{
    let battery = reference_battery(params)?;
    let settings = QuadratureSettings { level: config.level, seed: config.seed };
    sweep_cases(params.m(), battery.len(), config.cases, config.seed)
        .par_iter()
        .map(|case| check(&battery.members()[case.member].solution, &case.x, case.r, settings))
        .collect()
}

/// Runs one suite (or all of them) for the given kernel parameters.
pub fn run_suite(suite: Suite, params: KernelParams, config: SuiteConfig) -> Result<Vec<MeanValueReport>> {
    let mut reports = Vec::new();
    let wanted = |s: Suite| suite == s || suite == Suite::All;
    if wanted(Suite::Mvp) {
        reports.extend(sweep(params, config, check_ball_mvp)?);
    }
    if wanted(Suite::SphereBall) {
        reports.extend(sweep(params, config, check_sphere_ball)?);
    }
    if wanted(Suite::Flux) {
        reports.extend(sweep(params, config, check_flux)?);
    }
    if wanted(Suite::Ineq7) {
        reports.extend(check_inequality7(&params, &inequality7_grid(&params, 200))?);
    }
    if wanted(Suite::HarmonicLimit) {
        for r in [0.1, 1.0, 10.0] {
            reports.push(check_harmonic_limit(r, params.m())?);
        }
        reports.push(check_harmonic_origin(&params)?);
    }
    Ok(reports)
}
