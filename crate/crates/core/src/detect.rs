//! Ball detection from the volume mean-value property.
//!
//! If every positive solution `u` satisfies `u(x₀) a(λr) = M(u, D)` with
//! `|D| = |B_r|`, then `D = B_r(x₀)`. The detector checks that equality on a
//! finite battery and, independently, evaluates the quantity the uniqueness
//! argument turns on: `δ = ∫_{G_i} U − ∫_{G_e} U` with `U` centered at `x₀`,
//! `G_i = D \ closure(B_r)` and `G_e = B_r \ closure(D)`. Since `U` is
//! radially increasing, `δ > 0` whenever `D` differs from the ball.
//!
//! A `ball` verdict is evidence from finitely many test functions, never
//! a proof.

use rayon::join;
use serde::{Deserialize, Serialize};

use crate::domains::{dist, Domain, Shape};
use crate::quadrature::mc::{self, StreamTag};
use crate::quadrature::{domain_means, BallRule, MeanEstimate};
use crate::solutions::{Battery, BatteryEntry};
use crate::specfun::{ball_volume, bessel_i, eval_a, normalized, sphere_area, unit_ball_volume, KernelParams};
use crate::verify::DEFAULT_LEVEL;
use crate::{Error, Result};

/// Lower bound of the default ratio tolerance.
pub const MIN_TOLERANCE: f64 = 1e-6;
pub const SIGMA_MULTIPLE: f64 = 4.0;
pub const DEFAULT_SAMPLES: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Ball,
    NotBall,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateCase {
    /// No sampled point of `B_r` fell outside `D`.
    Subset,
    Overlap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub delta: f64,
    pub std_error: f64,
    pub case: CertificateCase,
    /// `∫_{G_i} U − |G_i| U(r)`, reported in the subset case: positive for
    /// any domain strictly containing the ball because `U > U(r)` on `G_i`.
    pub subset_margin: Option<f64>,
    pub subset_margin_std_error: Option<f64>,
    pub g_i_volume: f64,
    pub g_e_volume: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub id: String,
    pub ratio: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallVerdict {
    pub verdict: Verdict,
    pub r_star: f64,
    /// Radius the ratios and certificate were judged at: `r_star` unless a
    /// smaller radius was supplied.
    pub radius: f64,
    pub volume: f64,
    pub volume_std_error: f64,
    pub ratios: Vec<Ratio>,
    pub reference: f64,
    pub certificate: Certificate,
    pub complement_hint: bool,
    pub tolerance_used: f64,
    pub battery: Vec<BatteryEntry>,
    pub seed: u64,
    pub samples: u64,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectConfig {
    pub seed: u64,
    pub samples: u64,
    /// Ratio tolerance; defaults to `max(1e-6, 4 · max std_error)`.
    pub tolerance: Option<f64>,
    /// Supplied radius `r ≤ r_star`; only the subset case is then exercised.
    pub radius: Option<f64>,
    /// Product-rule level for ball domains.
    pub level: u32,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self { seed: 0, samples: DEFAULT_SAMPLES, tolerance: None, radius: None, level: DEFAULT_LEVEL }
    }
}

/// Volume-matched radius `(|D| / ω_m)^{1/m}`.
pub fn matched_radius(m: usize, volume: f64) -> f64 {
    (volume / unit_ball_volume(m)).powf(1.0 / m as f64)
}

/// One Monte Carlo pass over the joint bounding box of `D` and `B_r(x0)`.
pub fn certificate(d: &Domain, x0: &[f64], params: &KernelParams, r: f64, seed: u64, samples: u64) -> Result<Certificate> {
    if params.m() != d.dim() {
        return Err(Error::Argument("kernel and domain differ in dimension".into()));
    }
    if samples == 0 {
        return Err(Error::Argument("certificate needs at least one sample".into()));
    }
    let regions = d.certificate_regions(x0, r)?;
    let u_r = kernel_value(params, r);
    let bbox = regions.bounding_box();
    // outputs: U(1_Gi − 1_Ge), 1_Gi (U − U(r)), 1_Gi, 1_Ge, (U − U(r))(1_Gi − 1_Ge)
    let stats = mc::sample_box(bbox, seed, StreamTag::Certificate, samples, 5, |y, out| {
        out.iter_mut().for_each(|v| *v = 0.0);
        let inside = d.is_inside(y);
        let rho = dist(y, x0);
        if inside && rho > r {
            let u = kernel_value(params, rho);
            out[0] = u;
            out[1] = u - u_r;
            out[2] = 1.0;
            out[4] = u - u_r;
        } else if !inside && rho < r {
            let u = kernel_value(params, rho);
            out[0] = -u;
            out[3] = 1.0;
            out[4] = u_r - u;
        }
        true
    });
    let v = bbox.volume();
    let subset = stats[3].mean() == 0.0;
    // with |D| in closed form, U(r)(|G_i| − |G_e|) = U(r)(|D| − |B_r|) is exact and only the
    // remainder, which vanishes on the sphere, is sampled
    let (delta, std_error) = match d.exact_volume() {
        Some(vd) => {
            // r_star comes from |D| through a root, so |D| − |B_r| is rounding noise at r_star
            let gap = vd - ball_volume(params.m(), r);
            let gap = if gap.abs() <= 64.0 * f64::EPSILON * vd { 0.0 } else { gap };
            (v * stats[4].mean() + u_r * gap, v * stats[4].std_error())
        }
        None => (v * stats[0].mean(), v * stats[0].std_error()),
    };
    Ok(Certificate {
        delta,
        std_error,
        case: if subset { CertificateCase::Subset } else { CertificateCase::Overlap },
        subset_margin: subset.then(|| v * stats[1].mean()),
        subset_margin_std_error: subset.then(|| v * stats[1].std_error()),
        g_i_volume: v * stats[2].mean(),
        g_e_volume: v * stats[3].mean(),
    })
}

fn kernel_value(params: &KernelParams, rho: f64) -> f64 {
    normalized(params.kernel_order(), params.lambda() * rho).value
}

/// Mean of every battery member over `d` divided by its value at `x0`.
fn ratios(d: &Domain, x0: &[f64], battery: &Battery, cfg: &DetectConfig) -> Result<Vec<Ratio>> {
    let members = battery.members();
    let means: Vec<MeanEstimate> = match d.shape() {
        Shape::Ball { center, radius } => {
            let rule = BallRule::new(d.dim(), cfg.level, cfg.seed)?;
            members
                .iter()
                .map(|b| rule.ball_mean(|y| b.solution.value_at(y), center, *radius))
                .collect::<Result<_>>()?
        }
        _ => domain_means(d, cfg.seed, cfg.samples, members.len(), |y, out| {
            for (o, b) in out.iter_mut().zip(members) {
                *o = b.solution.value_at(y);
            }
        })?,
    };
    members
        .iter()
        .zip(means)
        .map(|(b, mean)| {
            let at = b.solution.eval(x0)?;
            Ok(Ratio { id: b.id.clone(), ratio: mean.value / at, std_error: mean.std_error / at })
        })
        .collect()
}

/// Decides whether `d` is the ball `B_{r*}(x0)` with `|B_{r*}| = |D|`.
pub fn detect_ball(d: &Domain, x0: &[f64], params: &KernelParams, battery: &Battery, cfg: &DetectConfig) -> Result<BallVerdict> {
    let m = d.dim();
    if params.m() != m || battery.members().iter().any(|b| b.solution.params() != params) {
        return Err(Error::Argument("domain, kernel and battery must share dimension and parameters".into()));
    }
    if !d.contains(x0)? {
        return Err(Error::Precondition(format!("candidate center {x0:?} is not inside the domain")));
    }
    let volume = d.volume(cfg.seed, cfg.samples)?;
    if volume.estimate <= 0.0 {
        return Err(Error::Degenerate("domain volume estimate is zero".into()));
    }
    let r_star = matched_radius(m, volume.estimate);
    let radius = match cfg.radius {
        Some(r) if !(r.is_finite() && r > 0.0) => {
            return Err(Error::OutOfDomain(format!("radius must be positive, got {r}")));
        }
        Some(r) if r > r_star * (1.0 + 1e-12) => {
            return Err(Error::Argument(format!("radius {r} exceeds the volume-matched radius {r_star}")));
        }
        Some(r) => r,
        None => r_star,
    };
    let reference = eval_a(params, params.lambda() * radius)?.value;

    let (ratios, certificate) = join(
        || ratios(d, x0, battery, cfg),
        || certificate(d, x0, params, radius, cfg.seed, cfg.samples),
    );
    let (ratios, certificate) = (ratios?, certificate?);

    let noisiest = ratios.iter().map(|r| r.std_error).fold(0.0, f64::max);
    let tolerance = cfg.tolerance.unwrap_or(MIN_TOLERANCE.max(SIGMA_MULTIPLE * noisiest));
    let deviation = |r: &Ratio| (r.ratio - reference).abs();
    let ratio_rejects = ratios.iter().any(|r| deviation(r) > tolerance + SIGMA_MULTIPLE * r.std_error);
    let ratios_agree = ratios.iter().all(|r| deviation(r) <= tolerance);
    let certificate_rejects = certificate.delta > SIGMA_MULTIPLE * certificate.std_error && certificate.delta > 0.0;
    let certificate_vanishes = certificate.delta.abs() <= SIGMA_MULTIPLE * certificate.std_error;

    let complement_hint = d.complement_connected_hint();
    let mut notes = vec!["a ball verdict rests on a finite battery of solutions and is evidence, not proof".to_string()];
    let mut verdict = if ratio_rejects || certificate_rejects {
        Verdict::NotBall
    } else if ratios_agree && certificate_vanishes {
        Verdict::Ball
    } else {
        Verdict::Inconclusive
    };
    if verdict == Verdict::Ball && !complement_hint {
        verdict = Verdict::Inconclusive;
        notes.push("complement connectivity could not be established; ball verdict downgraded".into());
    }
    if d.is_disconnected_union() {
        notes.push("domain is a disconnected union; the characterization is only established for connected domains".into());
    }
    if cfg.radius.is_some() {
        notes.push(format!("radius {radius} supplied; only the subset case is exercised"));
    }

    Ok(BallVerdict {
        verdict,
        r_star,
        radius,
        volume: volume.estimate,
        volume_std_error: volume.std_error,
        ratios,
        reference,
        certificate,
        complement_hint,
        tolerance_used: tolerance,
        battery: battery.describe(),
        seed: cfg.seed,
        samples: cfg.samples,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureEntry {
    pub id: String,
    /// `m I_{m/2}(λr) ⨍_{∂D} u dS`
    pub lhs: f64,
    /// `λr I_{(m−2)/2}(λr) ⨍_D u`
    pub rhs: f64,
    /// `lhs / rhs − 1`
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureReport {
    pub exploratory: bool,
    pub r_star: f64,
    pub surface_area: f64,
    pub level: u32,
    pub seed: u64,
    pub entries: Vec<ConjectureEntry>,
}

/// Evaluates the sphere/ball mean identity with `B_r(x)` replaced by `d` at
/// the volume-matched radius. Records data only; no verdict is drawn.
///
/// An ellipsoid `{c + A ω}` is parametrized over the unit sphere, with
/// surface element `det A · |A⁻¹ ω| dσ(ω)`.
pub fn explore_sphere_ball_conjecture(
    d: &Domain,
    battery: &Battery,
    params: &KernelParams,
    seed: u64,
    level: u32,
) -> Result<ConjectureReport> {
    let m = d.dim();
    let (center, semi_axes) = match d.shape() {
        Shape::Ball { center, radius } => (center.clone(), vec![*radius; m]),
        Shape::Ellipsoid { center, semi_axes } => (center.clone(), semi_axes.clone()),
        _ => return Err(Error::Capability("conjecture exploration needs a ball or ellipsoid boundary".into())),
    };
    if params.m() != m {
        return Err(Error::Argument("kernel and domain differ in dimension".into()));
    }
    let det: f64 = semi_axes.iter().product();
    let r_star = matched_radius(m, det * unit_ball_volume(m));
    let t = params.lambda() * r_star;
    let (outer, inner) = (bessel_i(params.ball_order(), t)?, bessel_i(params.kernel_order(), t)?);
    let rule = BallRule::new(m, level, seed)?;
    let stretch = |w: &[f64]| w.iter().zip(&semi_axes).map(|(wi, a)| (wi / a).powi(2)).sum::<f64>().sqrt();
    let origin = vec![0.0; m];
    let area_density = rule.sphere().sphere_mean(stretch, &origin, 1.0)?.value;
    let mut entries = Vec::with_capacity(battery.len());
    for b in battery.members() {
        let u = &b.solution;
        let weighted = rule.sphere().sphere_mean(
            |w| {
                let q: Vec<f64> = (0..m).map(|i| center[i] + semi_axes[i] * w[i]).collect();
                u.value_at(&q) * stretch(w)
            },
            &origin,
            1.0,
        )?;
        let boundary_mean = weighted.value / area_density;
        let interior_mean = rule.ellipsoid_mean(|y| u.value_at(y), &center, &semi_axes)?.value;
        let lhs = m as f64 * outer.scaled * boundary_mean;
        let rhs = t * inner.scaled * interior_mean;
        entries.push(ConjectureEntry { id: b.id.clone(), lhs, rhs, residual: lhs / rhs - 1.0 });
    }
    Ok(ConjectureReport {
        exploratory: true,
        r_star,
        surface_area: sphere_area(m, 1.0) * det * area_density,
        level,
        seed,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(m: usize) -> KernelParams {
        KernelParams::new(m, 1.0).unwrap()
    }

    fn standard(d: &Domain, x0: &[f64], params: KernelParams) -> Battery {
        Battery::standard(params, x0, d.bounding_box()).unwrap()
    }

    #[test]
    fn unit_ball_is_a_ball() {
        let d = Domain::ball(vec![0.0; 3], 1.0).unwrap();
        let battery = standard(&d, &[0.0; 3], p(3));
        let v = detect_ball(&d, &[0.0; 3], &p(3), &battery, &DetectConfig { samples: 20_000, ..Default::default() }).unwrap();
        assert_eq!(v.verdict, Verdict::Ball);
        assert_relative_eq!(v.reference, 3.0 / std::f64::consts::E, max_relative = 1e-14);
        assert!(v.ratios.iter().all(|r| (r.ratio - v.reference).abs() <= 1e-6));
        assert_eq!(v.certificate.delta, 0.0);
        assert_eq!((v.certificate.g_i_volume, v.certificate.g_e_volume), (0.0, 0.0));
    }

    #[test]
    fn scale_correct_for_larger_ball() {
        let d = Domain::ball(vec![0.0; 2], 2.0).unwrap();
        let battery = standard(&d, &[0.0; 2], p(2));
        let v = detect_ball(&d, &[0.0; 2], &p(2), &battery, &DetectConfig { samples: 20_000, ..Default::default() }).unwrap();
        assert_relative_eq!(v.r_star, 2.0, max_relative = 1e-14);
        assert_eq!(v.verdict, Verdict::Ball);
    }

    #[test]
    fn off_center_candidate_is_rejected() {
        let d = Domain::ball(vec![0.0; 2], 1.0).unwrap();
        let battery = standard(&d, &[0.3, 0.0], p(2));
        let v = detect_ball(&d, &[0.3, 0.0], &p(2), &battery, &DetectConfig { samples: 200_000, ..Default::default() }).unwrap();
        assert_eq!(v.verdict, Verdict::NotBall);
        assert!(v.certificate.delta > 4.0 * v.certificate.std_error);
    }

    #[test]
    fn ellipse_is_not_a_ball() {
        let d = Domain::ellipsoid(vec![0.0; 2], vec![1.2, 1.0 / 1.2]).unwrap();
        let battery = standard(&d, &[0.0; 2], p(2));
        let v = detect_ball(&d, &[0.0; 2], &p(2), &battery, &DetectConfig { seed: 3, samples: 400_000, ..Default::default() }).unwrap();
        assert_eq!(v.verdict, Verdict::NotBall);
        assert_relative_eq!(v.r_star, 1.0, max_relative = 1e-12);
        assert_eq!(v.certificate.case, CertificateCase::Overlap);
        assert!(v.certificate.delta > 4.0 * v.certificate.std_error);
        let kernel = v.ratios.iter().find(|r| r.id == "kernel0").unwrap();
        assert!(kernel.ratio > v.reference);
    }

    #[test]
    fn outside_candidate_is_a_precondition_error() {
        let d = Domain::ball(vec![0.0; 2], 1.0).unwrap();
        let battery = standard(&d, &[0.0; 2], p(2));
        let err = detect_ball(&d, &[2.0, 0.0], &p(2), &battery, &DetectConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn certificate_cases() {
        let params = p(2);
        let exact = Domain::ball(vec![0.5, 0.5], 1.0).unwrap();
        let c = certificate(&exact, &[0.5, 0.5], &params, 1.0, 1, 50_000).unwrap();
        assert_eq!((c.delta, c.std_error), (0.0, 0.0));

        let big = Domain::ball(vec![0.0; 2], 2.0).unwrap();
        let c = certificate(&big, &[0.0; 2], &params, 1.0, 1, 200_000).unwrap();
        assert_eq!(c.case, CertificateCase::Subset);
        assert!(c.subset_margin.unwrap() > 4.0 * c.subset_margin_std_error.unwrap());
        assert!((c.g_i_volume - 3.0 * std::f64::consts::PI).abs() < 0.05);

        let side = std::f64::consts::PI.sqrt();
        let bx = Domain::aligned_box(vec![-side / 2.0; 2], vec![side / 2.0; 2]).unwrap();
        let c = certificate(&bx, &[0.0; 2], &params, 1.0, 1, 200_000).unwrap();
        assert_eq!(c.case, CertificateCase::Overlap);
        assert!(c.delta > 4.0 * c.std_error);
    }

    #[test]
    fn supplied_radius_exercises_subset_case() {
        let d = Domain::ball(vec![0.0; 2], 2.0).unwrap();
        let battery = Battery::kernel_only(p(2), &[0.0; 2]).unwrap();
        let cfg = DetectConfig { radius: Some(1.0), samples: 100_000, ..Default::default() };
        let v = detect_ball(&d, &[0.0; 2], &p(2), &battery, &cfg).unwrap();
        assert_eq!(v.certificate.case, CertificateCase::Subset);
        assert_eq!(v.verdict, Verdict::NotBall);
        let too_big = DetectConfig { radius: Some(3.0), ..cfg };
        assert!(detect_ball(&d, &[0.0; 2], &p(2), &battery, &too_big).is_err());
    }

    #[test]
    fn interior_hole_downgrades_to_inconclusive() {
        // a ball with a tiny cavity far from the center: ratios cannot resolve
        // it at this tolerance, but connectivity of the complement fails
        let outer = Domain::ball(vec![0.0; 2], 1.0).unwrap();
        let hole = Domain::ball(vec![0.5, 0.0], 1e-4).unwrap();
        let d = Domain::difference(outer, hole).unwrap();
        let battery = Battery::kernel_only(p(2), &[0.0; 2]).unwrap();
        let cfg = DetectConfig { samples: 20_000, tolerance: Some(1e-3), ..Default::default() };
        let v = detect_ball(&d, &[0.0; 2], &p(2), &battery, &cfg).unwrap();
        assert!(!v.complement_hint);
        assert_ne!(v.verdict, Verdict::Ball);
    }

    #[test]
    fn conjecture_on_ball_reduces_to_identity() {
        let d = Domain::ball(vec![0.1, -0.2, 0.3], 0.8).unwrap();
        let battery = standard(&d, &[0.1, -0.2, 0.3], p(3));
        let report = explore_sphere_ball_conjecture(&d, &battery, &p(3), 0, 4).unwrap();
        assert!(report.exploratory);
        for e in &report.entries {
            assert!(e.residual.abs() <= 1e-8, "{e:?}");
        }
    }

    #[test]
    fn conjecture_on_ellipse_records_residual() {
        let d = Domain::ellipsoid(vec![0.0; 2], vec![1.2, 1.0 / 1.2]).unwrap();
        let battery = Battery::kernel_only(p(2), &[0.0; 2]).unwrap();
        let report = explore_sphere_ball_conjecture(&d, &battery, &p(2), 0, 4).unwrap();
        assert!(report.entries[0].residual.abs() > 1e-6);
        let bx = Domain::aligned_box(vec![0.0; 2], vec![1.0; 2]).unwrap();
        assert!(matches!(explore_sphere_ball_conjecture(&bx, &battery, &p(2), 0, 4), Err(Error::Capability(_))));
    }

    #[test]
    fn ellipse_perimeter_from_parametrization() {
        // with u ≡ 1 (λ → 0 limit is not available, so use the surface weight
        // directly): the boundary integral of 1 is the perimeter
        let (a, b) = (1.2_f64, 1.0 / 1.2);
        let rule = BallRule::new(2, 4, 0).unwrap();
        let mean = rule
            .sphere()
            .sphere_mean(|w| ((w[0] / a).powi(2) + (w[1] / b).powi(2)).sqrt(), &[0.0, 0.0], 1.0)
            .unwrap();
        let perimeter = sphere_area(2, 1.0) * a * b * mean.value;
        // Ramanujan's second approximation, accurate to ~1e-10 at this eccentricity
        let h = ((a - b) / (a + b)).powi(2);
        let ramanujan = std::f64::consts::PI * (a + b) * (1.0 + 3.0 * h / (10.0 + (4.0 - 3.0 * h).sqrt()));
        assert_relative_eq!(perimeter, ramanujan, max_relative = 1e-9);
    }
}
