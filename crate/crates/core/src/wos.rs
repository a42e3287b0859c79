//! Walk on spheres for the Dirichlet problem `∇²u − λ²u = 0` in `D`,
//! `u = g` on `∂D`.
//!
//! From the current point `p` the walk jumps to a uniform point on the
//! largest certified sphere `∂B_ρ(p) ⊂ D`. The sphere mean of a solution is
//! `U(ρ) u(p)`, so each jump multiplies the walk's weight by `1/U(ρ) ≤ 1`.
//! Walks stop inside the `epsilon_shell` layer and score `weight · g`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domains::{norm, Domain, Shape};
use crate::quadrature::mc::{self, RunningStats, StreamTag};
use crate::specfun::{normalized, KernelParams};
use crate::{Error, Result};

pub const DEFAULT_MAX_STEPS: u64 = 10_000;
pub const DEFAULT_WALKS: u64 = 100_000;
/// Default shell width as a fraction of the bounding radius.
pub const DEFAULT_SHELL_FRACTION: f64 = 1e-3;
/// Fraction of truncated walks above which an estimate is flagged.
pub const TRUNCATION_FLAG: f64 = 1e-3;
const WALKS_PER_TASK: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WosConfig {
    pub epsilon_shell: f64,
    pub max_steps: u64,
    pub walks: u64,
    pub seed: u64,
}

impl WosConfig {
    /// Defaults for `d`: shell `1e-3 ×` bounding radius, `10⁴` steps, `10⁵` walks.
    pub fn for_domain(d: &Domain, seed: u64) -> Self {
        Self {
            epsilon_shell: DEFAULT_SHELL_FRACTION * d.bounding_box().bounding_radius(),
            max_steps: DEFAULT_MAX_STEPS,
            walks: DEFAULT_WALKS,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon_shell.is_finite() && self.epsilon_shell > 0.0) {
            return Err(Error::Argument(format!("epsilon_shell must be positive, got {}", self.epsilon_shell)));
        }
        if self.max_steps == 0 || self.walks == 0 {
            return Err(Error::Argument("max_steps and walks must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WosEstimate {
    pub value: f64,
    pub std_error: f64,
    pub mean_steps: f64,
    pub truncated_walks: u64,
    pub walks: u64,
    /// Truncated fraction exceeded the threshold.
    pub flagged: bool,
}

/// Per-jump weight `1 / U(ρ)`, in `(0, 1]` and equal to 1 only at `ρ = 0`.
pub fn survival_weight(params: &KernelParams, rho: f64) -> Result<f64> {
    if rho.is_nan() || rho < 0.0 {
        return Err(Error::OutOfDomain(format!("radius must be nonnegative, got {rho}")));
    }
    Ok(1.0 / normalized(params.kernel_order(), params.lambda() * rho).value)
}

struct Walk {
    score: f64,
    steps: u64,
    truncated: bool,
}

fn walk<G>(d: &Domain, g: &G, x: &[f64], params: &KernelParams, cfg: &WosConfig, index: u64) -> Walk
where
    G: Fn(&[f64]) -> f64,
{
    let mut rng = mc::stream(cfg.seed, StreamTag::Walk, index);
    let m = x.len();
    let mut p = x.to_vec();
    let mut dir = vec![0.0; m];
    let mut weight = 1.0;
    for steps in 0..cfg.max_steps {
        let rho = d.interior_clearance(&p);
        if rho < cfg.epsilon_shell {
            return Walk { score: weight * g(&exit_point(d, &p)), steps, truncated: false };
        }
        weight /= normalized(params.kernel_order(), params.lambda() * rho).value;
        debug_assert!(weight > 0.0 && weight <= 1.0);
        loop {
            dir.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
            let n = norm(&dir);
            if n > 1e-12 {
                for (pi, di) in p.iter_mut().zip(&dir) {
                    *pi += rho * di / n;
                }
                break;
            }
        }
    }
    Walk { score: weight * g(&p), steps: cfg.max_steps, truncated: true }
}

/// Nearest boundary point for balls; the current point otherwise.
fn exit_point(d: &Domain, p: &[f64]) -> Vec<f64> {
    match d.shape() {
        Shape::Ball { center, radius } => {
            let offset: Vec<f64> = p.iter().zip(center).map(|(a, c)| a - c).collect();
            let n = norm(&offset);
            if n == 0.0 {
                return p.to_vec();
            }
            center.iter().zip(&offset).map(|(c, o)| c + radius * o / n).collect()
        }
        _ => p.to_vec(),
    }
}

/// Estimates `u(x)` for boundary data `g`. Each walk draws from its own
/// stream keyed by `(seed, walk index)` and results are reduced in walk
/// order, so the estimate does not depend on the number of workers.
pub fn solve_dirichlet<G>(d: &Domain, g: G, x: &[f64], params: &KernelParams, cfg: &WosConfig) -> Result<WosEstimate>
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    if params.m() != d.dim() {
        return Err(Error::Argument("kernel and domain differ in dimension".into()));
    }
    if !d.contains(x)? {
        return Err(Error::Precondition(format!("start point {x:?} is not inside the domain")));
    }
    let tasks = cfg.walks.div_ceil(WALKS_PER_TASK);
    let partial: Vec<(RunningStats, u64, u64)> = (0..tasks)
        .into_par_iter()
        .map(|t| {
            let mut stats = RunningStats::default();
            let (mut steps, mut truncated) = (0, 0);
            for index in t * WALKS_PER_TASK..((t + 1) * WALKS_PER_TASK).min(cfg.walks) {
                let w = walk(d, &g, x, params, cfg, index);
                stats.push(w.score);
                steps += w.steps;
                truncated += u64::from(w.truncated);
            }
            (stats, steps, truncated)
        })
        .collect();
    let mut stats = RunningStats::default();
    let (mut steps, mut truncated) = (0u64, 0u64);
    for (s, n, tr) in &partial {
        stats.merge(s);
        steps += n;
        truncated += tr;
    }
    if !stats.mean().is_finite() {
        return Err(Error::NonFinite { location: x.to_vec() });
    }
    Ok(WosEstimate {
        value: stats.mean(),
        std_error: stats.std_error(),
        mean_steps: steps as f64 / cfg.walks as f64,
        truncated_walks: truncated,
        walks: cfg.walks,
        flagged: truncated as f64 > TRUNCATION_FLAG * cfg.walks as f64,
    })
}
