//! Bounded CSG domains in `ℝᵐ`.
//!
//! Primitives are balls, axis-aligned boxes and axis-aligned ellipsoids;
//! they combine through unions and differences. Every query works on
//! coordinate slices so the Monte Carlo loops do not allocate.
//!
//! Distances come in two flavours. [`Domain::distance_lb`] is an interior
//! clearance: a radius `ρ` with `B_ρ(p) ⊂ D`. The exterior counterpart bounds
//! the distance from an outside point to `D` from below. Both are exact for
//! balls and boxes and conservative where noted.

use serde::{Deserialize, Serialize};

use crate::quadrature::mc::{self, StreamTag};
use crate::specfun::{ball_volume, unit_ball_volume};
use crate::{Error, Result};

/// A point of `ℝᵐ` with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Argument(format!("point needs finite coordinates, got {coords:?}")));
        }
        Ok(Self(coords))
    }

    pub fn origin(m: usize) -> Self {
        Self(vec![0.0; m])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoundingBox {
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    pub fn hull(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| a.min(*b)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| a.max(*b)).collect(),
        }
    }

    pub fn overlaps(&self, other: &BoundingBox) -> bool {
        (0..self.dim()).all(|i| self.lo[i] < other.hi[i] && other.lo[i] < self.hi[i])
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    /// Half the diagonal.
    pub fn bounding_radius(&self) -> f64 {
        0.5 * dist(&self.lo, &self.hi)
    }

    /// All `2^m` corners.
    pub fn corners(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        let m = self.dim();
        (0..1usize << m).map(move |mask| {
            (0..m).map(|i| if mask >> i & 1 == 1 { self.hi[i] } else { self.lo[i] }).collect()
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ellipsoid { center: Vec<f64>, semi_axes: Vec<f64> },
    Union(Vec<Domain>),
    Difference { outer: Box<Domain>, hole: Box<Domain> },
}

/// A bounded open set with nonempty interior.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    shape: Shape,
    dim: usize,
    bbox: BoundingBox,
    exact_volume: Option<f64>,
}

fn check_coords(what: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() || v.iter().any(|c| !c.is_finite()) {
        return Err(Error::Argument(format!("{what} needs finite coordinates, got {v:?}")));
    }
    Ok(())
}

fn check_positive(what: &str, x: f64) -> Result<()> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::Argument(format!("{what} must be positive and finite, got {x}")));
    }
    Ok(())
}

impl Domain {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        check_coords("ball center", &center)?;
        check_positive("ball radius", radius)?;
        let dim = center.len();
        let bbox = BoundingBox {
            lo: center.iter().map(|c| c - radius).collect(),
            hi: center.iter().map(|c| c + radius).collect(),
        };
        Ok(Self { exact_volume: Some(ball_volume(dim, radius)), shape: Shape::Ball { center, radius }, dim, bbox })
    }

    pub fn aligned_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_coords("box corner", &lo)?;
        check_coords("box corner", &hi)?;
        if lo.len() != hi.len() {
            return Err(Error::Argument("box corners differ in dimension".into()));
        }
        if lo.iter().zip(&hi).any(|(l, h)| l >= h) {
            return Err(Error::Argument(format!("box needs lo < hi componentwise, got {lo:?} / {hi:?}")));
        }
        let bbox = BoundingBox { lo: lo.clone(), hi: hi.clone() };
        Ok(Self { exact_volume: Some(bbox.volume()), dim: lo.len(), bbox, shape: Shape::Box { lo, hi } })
    }

    pub fn ellipsoid(center: Vec<f64>, semi_axes: Vec<f64>) -> Result<Self> {
        check_coords("ellipsoid center", &center)?;
        if center.len() != semi_axes.len() {
            return Err(Error::Argument("ellipsoid center and semi-axes differ in dimension".into()));
        }
        for &a in &semi_axes {
            check_positive("ellipsoid semi-axis", a)?;
        }
        let dim = center.len();
        let bbox = BoundingBox {
            lo: center.iter().zip(&semi_axes).map(|(c, a)| c - a).collect(),
            hi: center.iter().zip(&semi_axes).map(|(c, a)| c + a).collect(),
        };
        let volume = unit_ball_volume(dim) * semi_axes.iter().product::<f64>();
        Ok(Self { exact_volume: Some(volume), shape: Shape::Ellipsoid { center, semi_axes }, dim, bbox })
    }

    pub fn union(parts: Vec<Domain>) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::Argument("union needs at least one part".into()))?;
        let dim = first.dim;
        if parts.iter().any(|p| p.dim != dim) {
            return Err(Error::Argument("union parts differ in dimension".into()));
        }
        let bbox = parts[1..].iter().fold(first.bbox.clone(), |acc, p| acc.hull(&p.bbox));
        let disjoint = (0..parts.len()).all(|i| (i + 1..parts.len()).all(|j| certainly_disjoint(&parts[i], &parts[j])));
        let exact_volume = if disjoint { parts.iter().map(|p| p.exact_volume).sum() } else { None };
        Ok(Self { shape: Shape::Union(parts), dim, bbox, exact_volume })
    }

    pub fn difference(outer: Domain, hole: Domain) -> Result<Self> {
        if outer.dim != hole.dim {
            return Err(Error::Argument("difference operands differ in dimension".into()));
        }
        let exact_volume = match (outer.exact_volume, hole.exact_volume) {
            (Some(vo), Some(vh)) if certainly_within(&hole, &outer) => Some(vo - vh),
            (Some(vo), _) if certainly_disjoint(&outer, &hole) => Some(vo),
            _ => None,
        };
        Ok(Self {
            dim: outer.dim,
            bbox: outer.bbox.clone(),
            exact_volume,
            shape: Shape::Difference { outer: Box::new(outer), hole: Box::new(hole) },
        })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bounding_box(&self) -> &BoundingBox {
        &self.bbox
    }

    /// Closed-form volume, when the structure allows one.
    pub fn exact_volume(&self) -> Option<f64> {
        self.exact_volume
    }

    pub fn is_convex_primitive(&self) -> bool {
        matches!(self.shape, Shape::Ball { .. } | Shape::Box { .. } | Shape::Ellipsoid { .. })
    }

    fn check_dim(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::Argument(format!("point has dimension {}, domain has {}", p.len(), self.dim)));
        }
        Ok(())
    }

    pub fn contains(&self, p: &[f64]) -> Result<bool> {
        self.check_dim(p)?;
        Ok(self.is_inside(p))
    }

    /// Membership without the dimension check. Points on the boundary may go
    /// either way.
    pub fn is_inside(&self, p: &[f64]) -> bool {
        match &self.shape {
            Shape::Ball { center, radius } => {
                p.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum::<f64>() < radius * radius
            }
            Shape::Box { lo, hi } => p.iter().zip(lo.iter().zip(hi)).all(|(x, (l, h))| l < x && x < h),
            Shape::Ellipsoid { center, semi_axes } => scaled_norm_sq(p, center, semi_axes) < 1.0,
            Shape::Union(parts) => parts.iter().any(|d| d.is_inside(p)),
            Shape::Difference { outer, hole } => outer.is_inside(p) && !hole.is_inside(p),
        }
    }

    /// Radius `ρ ≥ 0` with `B_ρ(p) ⊂ D`.
    pub fn distance_lb(&self, p: &[f64]) -> Result<f64> {
        self.check_dim(p)?;
        if !self.is_inside(p) {
            return Err(Error::Precondition(format!("point {p:?} is not inside the domain")));
        }
        Ok(self.interior_clearance(p))
    }

    /// Interior clearance for a point assumed inside; 0 when it is not.
    pub fn interior_clearance(&self, p: &[f64]) -> f64 {
        let d = match &self.shape {
            Shape::Ball { center, radius } => radius - dist(p, center),
            Shape::Box { lo, hi } => {
                p.iter().zip(lo.iter().zip(hi)).map(|(x, (l, h))| (x - l).min(h - x)).fold(f64::INFINITY, f64::min)
            }
            Shape::Ellipsoid { center, semi_axes } => {
                // p lies on the scaled copy sE and E = sE + (1−s)E ⊇ sE + B_{(1−s)a_min}.
                let s = scaled_norm_sq(p, center, semi_axes).sqrt();
                let a_min = semi_axes.iter().copied().fold(f64::INFINITY, f64::min);
                let a_max = semi_axes.iter().copied().fold(0.0, f64::max);
                if a_max == a_min {
                    a_min - dist(p, center)
                } else {
                    (1.0 - s) * a_min
                }
            }
            Shape::Union(parts) => {
                parts.iter().filter(|d| d.is_inside(p)).map(|d| d.interior_clearance(p)).fold(0.0, f64::max)
            }
            Shape::Difference { outer, hole } => outer.interior_clearance(p).min(hole.exterior_clearance(p)),
        };
        d.max(0.0)
    }

    /// Lower bound on the distance from an outside point to the domain.
    ///
    /// Exact for balls, boxes and ellipsoids (the latter by a monotone Newton
    /// solve for the closest point), exact for unions of exact parts, and a
    /// lower bound for differences whose hole clearance is itself a bound.
    pub fn exterior_clearance(&self, p: &[f64]) -> f64 {
        let d = match &self.shape {
            Shape::Ball { center, radius } => dist(p, center) - radius,
            Shape::Box { lo, hi } => p
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(x, (l, h))| {
                    let e = (l - x).max(x - h).max(0.0);
                    e * e
                })
                .sum::<f64>()
                .sqrt(),
            Shape::Ellipsoid { center, semi_axes } => ellipsoid_exterior_distance(p, center, semi_axes),
            Shape::Union(parts) => parts.iter().map(|d| d.exterior_clearance(p)).fold(f64::INFINITY, f64::min),
            Shape::Difference { outer, hole } => {
                if outer.is_inside(p) {
                    hole.interior_clearance(p)
                } else {
                    outer.exterior_clearance(p)
                }
            }
        };
        d.max(0.0)
    }

    /// `|D|` with its standard error: exact when available, hit-or-miss Monte
    /// Carlo over the bounding box otherwise.
    pub fn volume(&self, rng_seed: u64, samples: u64) -> Result<VolumeEstimate> {
        if samples == 0 {
            return Err(Error::Argument("volume estimate needs at least one sample".into()));
        }
        if let Some(v) = self.exact_volume {
            return Ok(VolumeEstimate { estimate: v, std_error: 0.0, exact: true });
        }
        let stats = mc::sample_box(&self.bbox, rng_seed, StreamTag::Volume, samples, 1, |p, out| {
            out[0] = if self.is_inside(p) { 1.0 } else { 0.0 };
            true
        });
        let v = self.bbox.volume();
        Ok(VolumeEstimate { estimate: v * stats[0].mean(), std_error: v * stats[0].std_error(), exact: false })
    }

    /// The dilated set `D_r`: points within distance `r` of `closure(D)`.
    pub fn dilate(&self, r: f64) -> Result<Dilation<'_>> {
        check_positive("dilation radius", r)?;
        Ok(Dilation { base: self, r })
    }

    /// `G_i = D \ closure(B_r(center))` and `G_e = B_r(center) \ closure(D)`.
    pub fn certificate_regions(&self, center: &[f64], r: f64) -> Result<CertificateRegions<'_>> {
        check_positive("certificate radius", r)?;
        if !self.contains(center)? {
            return Err(Error::Precondition(format!("center {center:?} is not inside the domain")));
        }
        let ball_box = BoundingBox {
            lo: center.iter().map(|c| c - r).collect(),
            hi: center.iter().map(|c| c + r).collect(),
        };
        Ok(CertificateRegions { domain: self, center: center.to_vec(), radius: r, bbox: self.bbox.hull(&ball_box) })
    }

    /// Conservative syntactic hint that `ℝᵐ \ D` is connected.
    ///
    /// True for convex primitives, for unions of at most two convex
    /// primitives (overlapping ones form a star-shaped set), and for unions
    /// of convex primitives with pairwise disjoint bounding boxes. A
    /// difference is hinted connected only when the hole is certified to
    /// reach outside the outer set; an interior hole yields `false`.
    pub fn complement_connected_hint(&self) -> bool {
        match &self.shape {
            Shape::Ball { .. } | Shape::Box { .. } | Shape::Ellipsoid { .. } => true,
            Shape::Union(parts) => {
                let convex = parts.iter().all(Domain::is_convex_primitive);
                let separated = (0..parts.len())
                    .all(|i| (i + 1..parts.len()).all(|j| !parts[i].bbox.overlaps(&parts[j].bbox)));
                convex && (parts.len() <= 2 || separated)
            }
            Shape::Difference { outer, hole } => {
                if certainly_within(hole, outer) || !outer.is_convex_primitive() || !hole.is_convex_primitive() {
                    return false;
                }
                hole.representative_points().iter().any(|q| outer.exterior_clearance(q) > 0.0)
            }
        }
    }

    /// Center and near-extreme axis points of a convex primitive.
    fn representative_points(&self) -> Vec<Vec<f64>> {
        let (center, extent): (Vec<f64>, Vec<f64>) = match &self.shape {
            Shape::Ball { center, radius } => (center.clone(), vec![*radius; self.dim]),
            Shape::Ellipsoid { center, semi_axes } => (center.clone(), semi_axes.clone()),
            Shape::Box { .. } => {
                let c = self.bbox.center();
                let e = self.bbox.hi.iter().zip(&self.bbox.lo).map(|(h, l)| 0.5 * (h - l)).collect();
                (c, e)
            }
            _ => return vec![self.bbox.center()],
        };
        let mut points = vec![center.clone()];
        for i in 0..self.dim {
            for sign in [-1.0, 1.0] {
                let mut q = center.clone();
                q[i] += sign * 0.99 * extent[i];
                points.push(q);
            }
        }
        points
    }

    /// The same set shifted by `offset`.
    pub fn translated(&self, offset: &[f64]) -> Domain {
        let shift = |v: &[f64]| v.iter().zip(offset).map(|(a, b)| a + b).collect::<Vec<f64>>();
        let shape = match &self.shape {
            Shape::Ball { center, radius } => Shape::Ball { center: shift(center), radius: *radius },
            Shape::Box { lo, hi } => Shape::Box { lo: shift(lo), hi: shift(hi) },
            Shape::Ellipsoid { center, semi_axes } => {
                Shape::Ellipsoid { center: shift(center), semi_axes: semi_axes.clone() }
            }
            Shape::Union(parts) => Shape::Union(parts.iter().map(|d| d.translated(offset)).collect()),
            Shape::Difference { outer, hole } => {
                Shape::Difference { outer: Box::new(outer.translated(offset)), hole: Box::new(hole.translated(offset)) }
            }
        };
        Domain {
            shape,
            dim: self.dim,
            bbox: BoundingBox { lo: shift(&self.bbox.lo), hi: shift(&self.bbox.hi) },
            exact_volume: self.exact_volume,
        }
    }

    /// Whether the domain is a union of pieces known to be pairwise disjoint.
    pub fn is_disconnected_union(&self) -> bool {
        match &self.shape {
            Shape::Union(parts) if parts.len() > 1 => {
                (0..parts.len()).all(|i| (i + 1..parts.len()).all(|j| certainly_disjoint(&parts[i], &parts[j])))
            }
            _ => false,
        }
    }
}

fn scaled_norm_sq(p: &[f64], center: &[f64], semi_axes: &[f64]) -> f64 {
    p.iter().zip(center).zip(semi_axes).map(|((x, c), a)| ((x - c) / a).powi(2)).sum()
}

/// Euclidean distance from `p` to the ellipsoid, 0 inside.
///
/// The closest point is `y_i = a_i² q_i / (a_i² + t)` where `t ≥ 0` solves
/// `Σ (a_i q_i / (a_i² + t))² = 1`. The left side is convex and decreasing in
/// `t`, so Newton from `t = 0` increases monotonically to the root.
fn ellipsoid_exterior_distance(p: &[f64], center: &[f64], semi_axes: &[f64]) -> f64 {
    let q: Vec<f64> = p.iter().zip(center).map(|(x, c)| x - c).collect();
    if scaled_norm_sq(p, center, semi_axes) <= 1.0 {
        return 0.0;
    }
    let mut t = 0.0_f64;
    for _ in 0..200 {
        let mut f = -1.0;
        let mut df = 0.0;
        for (qi, ai) in q.iter().zip(semi_axes) {
            let a2 = ai * ai;
            let r = ai * qi / (a2 + t);
            f += r * r;
            df -= 2.0 * r * r / (a2 + t);
        }
        if f <= 0.0 || df == 0.0 {
            break;
        }
        let step = f / df;
        t -= step;
        if step.abs() <= 1e-15 * t.abs().max(1e-300) {
            break;
        }
    }
    q.iter()
        .zip(semi_axes)
        .map(|(qi, ai)| {
            let a2 = ai * ai;
            let d = qi - a2 * qi / (a2 + t);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Sufficient test for `hole ⊂ outer`.
fn certainly_within(hole: &Domain, outer: &Domain) -> bool {
    match (&hole.shape, &outer.shape) {
        (Shape::Ball { center: ch, radius: rh }, Shape::Ball { center: co, radius: ro }) => dist(ch, co) + rh <= *ro,
        (_, Shape::Box { lo, hi }) => (0..hole.dim).all(|i| lo[i] <= hole.bbox.lo[i] && hole.bbox.hi[i] <= hi[i]),
        _ if outer.is_convex_primitive() => {
            // The hole sits in its bounding box, the convex hull of its corners.
            hole.bbox.corners().all(|c| match &outer.shape {
                Shape::Ball { center, radius } => dist(&c, center) <= *radius,
                Shape::Ellipsoid { center, semi_axes } => scaled_norm_sq(&c, center, semi_axes) <= 1.0,
                _ => false,
            })
        }
        _ => false,
    }
}

/// Sufficient test for `a ∩ b = ∅`.
fn certainly_disjoint(a: &Domain, b: &Domain) -> bool {
    if let (Shape::Ball { center: ca, radius: ra }, Shape::Ball { center: cb, radius: rb }) = (&a.shape, &b.shape) {
        return dist(ca, cb) >= ra + rb;
    }
    !a.bbox.overlaps(&b.bbox)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub exact: bool,
}

/// Membership predicate for the dilated copy `D_r`.
#[derive(Debug, Clone, Copy)]
pub struct Dilation<'a> {
    base: &'a Domain,
    r: f64,
}

impl Dilation<'_> {
    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn contains(&self, p: &[f64]) -> Result<bool> {
        self.base.check_dim(p)?;
        Ok(self.base.is_inside(p) || self.base.exterior_clearance(p) < self.r)
    }
}

/// The sets `G_i` and `G_e` compared by the ball certificate.
#[derive(Debug, Clone)]
pub struct CertificateRegions<'a> {
    domain: &'a Domain,
    center: Vec<f64>,
    radius: f64,
    bbox: BoundingBox,
}

impl CertificateRegions<'_> {
    /// Joint bounding box of the domain and the ball.
    pub fn bounding_box(&self) -> &BoundingBox {
        &self.bbox
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn in_g_i(&self, p: &[f64]) -> bool {
        dist(p, &self.center) > self.radius && self.domain.is_inside(p)
    }

    pub fn in_g_e(&self, p: &[f64]) -> bool {
        dist(p, &self.center) < self.radius && !self.domain.is_inside(p)
    }
}

/// JSON form of a domain, tagged by `"type"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ellipsoid { center: Vec<f64>, semi_axes: Vec<f64> },
    Union { parts: Vec<DomainSpec> },
    Difference { outer: Box<DomainSpec>, hole: Box<DomainSpec> },
}

impl TryFrom<&DomainSpec> for Domain {
    type Error = Error;

    fn try_from(spec: &DomainSpec) -> Result<Domain> {
        match spec {
            DomainSpec::Ball { center, radius } => Domain::ball(center.clone(), *radius),
            DomainSpec::Box { lo, hi } => Domain::aligned_box(lo.clone(), hi.clone()),
            DomainSpec::Ellipsoid { center, semi_axes } => Domain::ellipsoid(center.clone(), semi_axes.clone()),
            DomainSpec::Union { parts } => {
                Domain::union(parts.iter().map(Domain::try_from).collect::<Result<Vec<_>>>()?)
            }
            DomainSpec::Difference { outer, hole } => {
                Domain::difference(Domain::try_from(outer.as_ref())?, Domain::try_from(hole.as_ref())?)
            }
        }
    }
}

impl From<&Domain> for DomainSpec {
    fn from(d: &Domain) -> DomainSpec {
        match &d.shape {
            Shape::Ball { center, radius } => DomainSpec::Ball { center: center.clone(), radius: *radius },
            Shape::Box { lo, hi } => DomainSpec::Box { lo: lo.clone(), hi: hi.clone() },
            Shape::Ellipsoid { center, semi_axes } => {
                DomainSpec::Ellipsoid { center: center.clone(), semi_axes: semi_axes.clone() }
            }
            Shape::Union(parts) => DomainSpec::Union { parts: parts.iter().map(DomainSpec::from).collect() },
            Shape::Difference { outer, hole } => DomainSpec::Difference {
                outer: Box::new(DomainSpec::from(outer.as_ref())),
                hole: Box::new(DomainSpec::from(hole.as_ref())),
            },
        }
    }
}

impl Domain {
    pub fn from_json(text: &str) -> Result<Domain> {
        let spec: DomainSpec =
            serde_json::from_str(text).map_err(|e| Error::Argument(format!("malformed domain JSON: {e}")))?;
        Domain::try_from(&spec)
    }

    pub fn to_spec(&self) -> DomainSpec {
        DomainSpec::from(self)
    }
}
