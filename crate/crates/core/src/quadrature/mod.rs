//! Volume and surface means.
//!
//! Balls and spheres use product rules: Gauss–Legendre in the radius tensored
//! with a set of unit directions. Directions are equispaced on the circle for
//! `m = 2`, a Gauss(cos θ) × equispaced(φ) product for `m = 3`, and seeded
//! random antithetic pairs for `m ≥ 4`, in which case the spread across
//! direction pairs yields a standard error. General domains use seeded
//! hit-or-miss Monte Carlo (see [`mc`]).

pub mod mc;

use std::f64::consts::PI;

use gauss_quad::legendre::GaussLegendre;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::domains::{norm, BoundingBox, Domain, Shape};
use crate::solutions::Solution;
use crate::specfun::sphere_area;
use crate::{Error, Result};
use mc::{RunningStats, StreamTag};

pub const MAX_LEVEL: u32 = 6;
pub const RADIAL_NODES_PER_LEVEL: usize = 16;
/// Direction pairs per level for the randomized rule (`m ≥ 4`).
pub const RANDOM_PAIRS_PER_LEVEL: usize = 512;
/// Seed for the randomized sphere rule when the caller gives none.
pub const DEFAULT_SPHERE_SEED: u64 = 0x5eed_0f5e;
pub const MIN_DOMAIN_SAMPLES: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ProductRule,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
    pub method: Method,
}

impl MeanEstimate {
    fn scaled(self, factor: f64) -> Self {
        Self { value: self.value * factor, std_error: self.std_error * factor.abs(), ..self }
    }
}

/// Unit directions with weights summing to one.
#[derive(Debug, Clone)]
pub struct SphereRule {
    dim: usize,
    directions: Vec<f64>,
    weights: Vec<f64>,
    /// Directions are stored as antithetic pairs `(ω, −ω)` drawn at random.
    paired: bool,
}

fn check_level(level: u32) -> Result<()> {
    if !(1..=MAX_LEVEL).contains(&level) {
        return Err(Error::Argument(format!("quadrature level must be in 1..={MAX_LEVEL}, got {level}")));
    }
    Ok(())
}

fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    GaussLegendre::new(n.try_into().expect("positive node count")).as_node_weight_pairs().to_vec()
}

impl SphereRule {
    pub fn new(m: usize, level: u32, seed: u64) -> Result<Self> {
        check_level(level)?;
        if m < 2 {
            return Err(Error::Argument(format!("sphere rules need m ≥ 2, got {m}")));
        }
        let level = level as usize;
        let rule = match m {
            2 => {
                let n = 2 * RADIAL_NODES_PER_LEVEL * level;
                let directions = (0..n)
                    .flat_map(|k| {
                        let phi = 2.0 * PI * k as f64 / n as f64;
                        [phi.cos(), phi.sin()]
                    })
                    .collect();
                Self { dim: 2, directions, weights: vec![1.0 / n as f64; n], paired: false }
            }
            3 => {
                let nz = RADIAL_NODES_PER_LEVEL / 2 * level;
                let nphi = RADIAL_NODES_PER_LEVEL * level;
                let mut directions = Vec::with_capacity(3 * nz * nphi);
                let mut weights = Vec::with_capacity(nz * nphi);
                for (z, w) in gauss_legendre(nz) {
                    let s = (1.0 - z * z).sqrt();
                    for k in 0..nphi {
                        let phi = 2.0 * PI * (k as f64 + 0.5) / nphi as f64;
                        directions.extend([s * phi.cos(), s * phi.sin(), z]);
                        weights.push(0.5 * w / nphi as f64);
                    }
                }
                Self { dim: 3, directions, weights, paired: false }
            }
            _ => {
                let pairs = RANDOM_PAIRS_PER_LEVEL * level;
                let mut rng = mc::stream(seed, StreamTag::SphereNodes, m as u64);
                let mut directions = Vec::with_capacity(2 * m * pairs);
                let mut v = vec![0.0; m];
                for _ in 0..pairs {
                    loop {
                        v.iter_mut().for_each(|x| *x = rng.sample::<f64, _>(StandardNormal));
                        let n = norm(&v);
                        if n > 1e-12 {
                            v.iter_mut().for_each(|x| *x /= n);
                            break;
                        }
                    }
                    directions.extend(v.iter().copied());
                    directions.extend(v.iter().map(|x| -x));
                }
                Self { dim: m, directions, weights: vec![0.5 / pairs as f64; 2 * pairs], paired: true }
            }
        };
        Ok(rule)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn is_deterministic(&self) -> bool {
        !self.paired
    }

    pub fn direction(&self, k: usize) -> &[f64] {
        &self.directions[k * self.dim..(k + 1) * self.dim]
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k]
    }

    /// Weighted average of per-direction values, with a standard error for
    /// the randomized rule.
    fn combine(&self, values: &[f64], evaluations: u64) -> MeanEstimate {
        if !self.paired {
            let value = values.iter().zip(&self.weights).map(|(v, w)| v * w).sum();
            return MeanEstimate { value, std_error: 0.0, samples: evaluations, method: Method::ProductRule };
        }
        let mut stats = RunningStats::default();
        for pair in values.chunks_exact(2) {
            stats.push(0.5 * (pair[0] + pair[1]));
        }
        MeanEstimate { value: stats.mean(), std_error: stats.std_error(), samples: evaluations, method: Method::MonteCarlo }
    }

    /// Mean of `f` over the sphere `∂B_r(center)`.
    pub fn sphere_mean<F>(&self, f: F, center: &[f64], r: f64) -> Result<MeanEstimate>
    where
        F: Fn(&[f64]) -> f64,
    {
        check_ball(self.dim, center, r)?;
        let mut y = vec![0.0; self.dim];
        let mut values = Vec::with_capacity(self.len());
        for k in 0..self.len() {
            for (yi, (ci, wi)) in y.iter_mut().zip(center.iter().zip(self.direction(k))) {
                *yi = ci + r * wi;
            }
            values.push(finite(f(&y), &y)?);
        }
        Ok(self.combine(&values, self.len() as u64))
    }
}

fn finite(v: f64, at: &[f64]) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { location: at.to_vec() })
    }
}

fn check_ball(m: usize, center: &[f64], r: f64) -> Result<()> {
    if center.len() != m {
        return Err(Error::Argument(format!("center has dimension {}, rule has {m}", center.len())));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::OutOfDomain(format!("radius must be positive, got {r}")));
    }
    Ok(())
}

/// Product rule for means over balls.
#[derive(Debug, Clone)]
pub struct BallRule {
    sphere: SphereRule,
    /// `(s, W)` on `[0, 1]` with `W` absorbing the `m s^{m−1}` volume weight.
    radial: Vec<(f64, f64)>,
}

impl BallRule {
    pub fn new(m: usize, level: u32, seed: u64) -> Result<Self> {
        let sphere = SphereRule::new(m, level, seed)?;
        let radial = gauss_legendre(RADIAL_NODES_PER_LEVEL * level as usize)
            .into_iter()
            .map(|(x, w)| {
                let s = 0.5 * (x + 1.0);
                (s, 0.5 * w * m as f64 * s.powi(m as i32 - 1))
            })
            .collect();
        Ok(Self { sphere, radial })
    }

    pub fn sphere(&self) -> &SphereRule {
        &self.sphere
    }

    pub fn dim(&self) -> usize {
        self.sphere.dim
    }

    pub fn is_deterministic(&self) -> bool {
        self.sphere.is_deterministic()
    }

    /// `(1/|B_r|) ∫_{B_r(center)} f`.
    pub fn ball_mean<F>(&self, f: F, center: &[f64], r: f64) -> Result<MeanEstimate>
    where
        F: Fn(&[f64]) -> f64,
    {
        self.ellipsoid_mean(f, center, &vec![r; self.dim()])
    }

    /// Mean of `f` over the axis-aligned ellipsoid `{center + A y : |y| < 1}`,
    /// `A = diag(semi_axes)`.
    pub fn ellipsoid_mean<F>(&self, f: F, center: &[f64], semi_axes: &[f64]) -> Result<MeanEstimate>
    where
        F: Fn(&[f64]) -> f64,
    {
        let m = self.dim();
        for &a in semi_axes {
            check_ball(m, center, a)?;
        }
        let mut y = vec![0.0; m];
        let mut values = Vec::with_capacity(self.sphere.len());
        for k in 0..self.sphere.len() {
            let omega = self.sphere.direction(k);
            let mut radial_integral = 0.0;
            for &(s, w) in &self.radial {
                for i in 0..m {
                    y[i] = center[i] + semi_axes[i] * s * omega[i];
                }
                radial_integral += w * finite(f(&y), &y)?;
            }
            values.push(radial_integral);
        }
        Ok(self.sphere.combine(&values, (self.sphere.len() * self.radial.len()) as u64))
    }

    pub fn sphere_mean<F>(&self, f: F, center: &[f64], r: f64) -> Result<MeanEstimate>
    where
        F: Fn(&[f64]) -> f64,
    {
        self.sphere.sphere_mean(f, center, r)
    }
}

/// `(1/|B_r|) ∫_{B_r(center)} f` with the level-`level` product rule.
pub fn ball_mean<F>(f: F, center: &[f64], r: f64, level: u32) -> Result<MeanEstimate>
where
    F: Fn(&[f64]) -> f64,
{
    BallRule::new(center.len(), level, DEFAULT_SPHERE_SEED)?.ball_mean(f, center, r)
}

/// `(1/|∂B_r|) ∫_{∂B_r(center)} f dS`.
pub fn sphere_mean<F>(f: F, center: &[f64], r: f64, level: u32) -> Result<MeanEstimate>
where
    F: Fn(&[f64]) -> f64,
{
    SphereRule::new(center.len(), level, DEFAULT_SPHERE_SEED)?.sphere_mean(f, center, r)
}

/// Monte Carlo volume mean of several functions at once over `d`.
///
/// `f` writes one value per output for each accepted point.
pub fn domain_means<F>(d: &Domain, rng_seed: u64, samples: u64, outputs: usize, f: F) -> Result<Vec<MeanEstimate>>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    if samples < MIN_DOMAIN_SAMPLES {
        return Err(Error::Argument(format!("domain means need at least {MIN_DOMAIN_SAMPLES} samples, got {samples}")));
    }
    let stats = mc::sample_box(d.bounding_box(), rng_seed, StreamTag::DomainMean, samples, outputs, |p, out| {
        if d.is_inside(p) {
            f(p, out);
            true
        } else {
            false
        }
    });
    if stats.first().is_some_and(|s| s.count() == 0) {
        return Err(Error::Degenerate(format!("no accepted points among {samples} proposals")));
    }
    Ok(stats
        .iter()
        .map(|s| MeanEstimate { value: s.mean(), std_error: s.std_error(), samples: s.count(), method: Method::MonteCarlo })
        .collect())
}

/// Monte Carlo `M(f, D)`: uniform proposals in the bounding box, filtered by
/// membership.
pub fn domain_mean<F>(f: F, d: &Domain, rng_seed: u64, samples: u64) -> Result<MeanEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let estimates = domain_means(d, rng_seed, samples, 1, |p, out| out[0] = f(p))?;
    Ok(estimates[0])
}

/// Hit-or-miss estimate of `∫_region f` (an integral, not a mean).
pub fn region_integral<F, R>(f: F, region: R, bbox: &BoundingBox, rng_seed: u64, samples: u64) -> Result<MeanEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
    R: Fn(&[f64]) -> bool + Sync,
{
    if samples < MIN_DOMAIN_SAMPLES {
        return Err(Error::Argument(format!("region integrals need at least {MIN_DOMAIN_SAMPLES} samples, got {samples}")));
    }
    let stats = mc::sample_box(bbox, rng_seed, StreamTag::Region, samples, 1, |p, out| {
        out[0] = if region(p) { f(p) } else { 0.0 };
        true
    });
    let s = &stats[0];
    Ok(MeanEstimate { value: s.mean(), std_error: s.std_error(), samples, method: Method::MonteCarlo }
        .scaled(bbox.volume()))
}

/// `∫_{∂B} ∂u/∂n dS` over the boundary of a ball domain.
pub fn boundary_flux(u: &Solution, d: &Domain, level: u32) -> Result<MeanEstimate> {
    let Shape::Ball { center, radius } = d.shape() else {
        return Err(Error::Capability("boundary flux is only implemented for ball domains".into()));
    };
    if u.params().m() != d.dim() {
        return Err(Error::Argument("solution and domain differ in dimension".into()));
    }
    let normal_derivative = |y: &[f64]| {
        let mut g = vec![0.0; y.len()];
        u.gradient_into(y, &mut g);
        g.iter().zip(y.iter().zip(center)).map(|(gi, (yi, ci))| gi * (yi - ci)).sum::<f64>() / radius
    };
    let mean = sphere_mean(normal_derivative, center, *radius, level)?;
    Ok(mean.scaled(sphere_area(d.dim(), *radius)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solutions::Solution;
    use crate::specfun::{ball_volume, eval_a, KernelParams};
    use approx::assert_relative_eq;

    fn p(m: usize, lambda: f64) -> KernelParams {
        KernelParams::new(m, lambda).unwrap()
    }

    #[test]
    fn constants_are_exact() {
        for m in 2..=5 {
            let c = vec![0.2; m];
            let b = ball_mean(|_| 1.0, &c, 0.7, 2).unwrap();
            assert_relative_eq!(b.value, 1.0, max_relative = 1e-14);
            assert_eq!(b.std_error, 0.0);
            let s = sphere_mean(|_| 1.0, &c, 0.7, 2).unwrap();
            assert_relative_eq!(s.value, 1.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn odd_coordinate_vanishes() {
        for m in [2, 3] {
            let b = ball_mean(|y| y[0], &vec![0.0; m], 1.0, 3).unwrap();
            assert!(b.value.abs() <= 1e-14, "{}", b.value);
        }
        // antithetic pairs cancel odd integrands exactly
        let b = ball_mean(|y| y[0], &[0.0; 4], 1.0, 1).unwrap();
        assert!(b.value.abs() <= 1e-14);
    }

    #[test]
    fn kernel_ball_mean_is_a() {
        let params = p(3, 1.0);
        let u = Solution::shifted_kernel(params, vec![0.0; 3]).unwrap();
        let b = ball_mean(|y| u.value_at(y), &[0.0; 3], 1.0, 4).unwrap();
        assert_relative_eq!(b.value, 3.0 / std::f64::consts::E, max_relative = 1e-12);
        assert_eq!(b.method, Method::ProductRule);
    }

    #[test]
    fn plane_wave_sphere_mean_matches_polar_integral() {
        // sphere mean of e^{y·ω} over ∂B_1(x) in 3D: e^{x·ω} (1/2)∫_{-1}^{1} e^{z} dz = e^{x·ω} sinh 1
        let params = p(3, 1.0);
        let w = Solution::plane_wave(params, vec![0.0, 0.6, 0.8]).unwrap();
        let x = [0.3, -0.2, 0.5];
        let s = sphere_mean(|y| w.value_at(y), &x, 1.0, 4).unwrap();
        let polar = 0.5 * gauss_legendre(40).iter().map(|(z, wz)| wz * z.exp()).sum::<f64>();
        assert_relative_eq!(polar, 1.0_f64.sinh(), max_relative = 1e-14);
        assert_relative_eq!(s.value, polar * w.value_at(&x), max_relative = 1e-12);
        let u = Solution::shifted_kernel(params, vec![0.0; 3]).unwrap();
        let su = sphere_mean(|y| u.value_at(y), &[0.0; 3], 1.0, 4).unwrap();
        assert_relative_eq!(su.value, 1.0_f64.sinh(), max_relative = 1e-12);
    }

    #[test]
    fn level_doubling_is_stable() {
        for m in [2, 3] {
            let params = p(m, 1.3);
            let w = Solution::plane_wave(params, {
                let mut d = vec![0.0; m];
                d[m - 1] = 1.0;
                d
            })
            .unwrap();
            let c = vec![0.1; m];
            let lo = ball_mean(|y| w.value_at(y), &c, 0.8, 3).unwrap().value;
            let hi = ball_mean(|y| w.value_at(y), &c, 0.8, 6).unwrap().value;
            assert!((lo / hi - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn randomized_rule_reports_error() {
        let params = p(4, 1.0);
        let w = Solution::plane_wave(params, vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        let b = ball_mean(|y| w.value_at(y), &[0.0; 4], 1.0, 2).unwrap();
        assert_eq!(b.method, Method::MonteCarlo);
        assert!(b.std_error > 0.0);
        let exact = eval_a(&params, 1.0).unwrap().value;
        assert!((b.value - exact).abs() <= 4.0 * b.std_error);
    }

    #[test]
    fn errors() {
        assert!(matches!(ball_mean(|_| 1.0, &[0.0, 0.0], 1.0, 0), Err(Error::Argument(_))));
        assert!(matches!(ball_mean(|_| 1.0, &[0.0, 0.0], 1.0, 7), Err(Error::Argument(_))));
        assert!(matches!(ball_mean(|_| 1.0, &[0.0, 0.0], 0.0, 1), Err(Error::OutOfDomain(_))));
        match ball_mean(|y| if y[0] > 0.5 { f64::NAN } else { 1.0 }, &[0.0, 0.0], 1.0, 1) {
            Err(Error::NonFinite { location }) => assert!(location[0] > 0.5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn domain_mean_examples() {
        let d = Domain::ball(vec![0.0; 3], 1.0).unwrap();
        let one = domain_mean(|_| 1.0, &d, 1, 1000).unwrap();
        assert_eq!((one.value, one.std_error), (1.0, 0.0));
        let params = p(3, 1.0);
        let u = Solution::shifted_kernel(params, vec![0.0; 3]).unwrap();
        let mc = domain_mean(|y| u.value_at(y), &d, 5, 1_000_000).unwrap();
        let det = ball_mean(|y| u.value_at(y), &[0.0; 3], 1.0, 4).unwrap();
        assert!((mc.value - det.value).abs() <= 4.0 * mc.std_error, "{mc:?} {det:?}");
        assert!(matches!(domain_mean(|_| 1.0, &d, 1, 99), Err(Error::Argument(_))));
        assert_eq!(domain_mean(|y| y[0], &d, 9, 20_000).unwrap(), domain_mean(|y| y[0], &d, 9, 20_000).unwrap());
    }

    #[test]
    fn region_integral_examples() {
        let big = Domain::ball(vec![0.0, 0.0], 2.0).unwrap();
        let regions = big.certificate_regions(&[0.0, 0.0], 1.0).unwrap();
        let area = region_integral(|_| 1.0, |q| regions.in_g_i(q), regions.bounding_box(), 3, 400_000).unwrap();
        assert!((area.value - 3.0 * PI).abs() <= 4.0 * area.std_error, "{area:?}");
        let empty = region_integral(|_| 1.0, |_| false, regions.bounding_box(), 3, 1000).unwrap();
        assert_eq!((empty.value, empty.std_error), (0.0, 0.0));
    }

    #[test]
    fn region_integrals_are_additive() {
        // ∫_D U = ∫_{G_i} U + ∫_{D ∩ B_r} U when B_r ⊂ D
        let params = p(2, 1.0);
        let u = Solution::shifted_kernel(params, vec![0.0, 0.0]).unwrap();
        let d = Domain::aligned_box(vec![-1.5, -1.2], vec![1.4, 1.6]).unwrap();
        let regions = d.certificate_regions(&[0.0, 0.0], 1.0).unwrap();
        let bb = regions.bounding_box().clone();
        let n = 400_000;
        let whole = region_integral(|y| u.value_at(y), |q| d.is_inside(q), &bb, 1, n).unwrap();
        let gi = region_integral(|y| u.value_at(y), |q| regions.in_g_i(q), &bb, 2, n).unwrap();
        let core = region_integral(|y| u.value_at(y), |q| q[0].hypot(q[1]) < 1.0, &bb, 3, n).unwrap();
        let sigma = (whole.std_error.powi(2) + gi.std_error.powi(2) + core.std_error.powi(2)).sqrt();
        assert!((whole.value - gi.value - core.value).abs() <= 4.0 * sigma);
    }

    #[test]
    fn flux_matches_divergence_identity() {
        let params = p(3, 1.0);
        let u = Solution::shifted_kernel(params, vec![0.0; 3]).unwrap();
        let d = Domain::ball(vec![0.0; 3], 1.0).unwrap();
        let flux = boundary_flux(&u, &d, 4).unwrap().value;
        let expected = ball_volume(3, 1.0) * eval_a(&params, 1.0).unwrap().value;
        assert_relative_eq!(flux, expected, max_relative = 1e-12);
        let bx = Domain::aligned_box(vec![0.0; 3], vec![1.0; 3]).unwrap();
        assert!(matches!(boundary_flux(&u, &bx, 2), Err(Error::Capability(_))));
    }
}
