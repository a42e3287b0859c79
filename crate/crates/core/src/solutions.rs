//! Positive entire solutions of `∇²u − λ²u = 0`.
//!
//! These are the test functions of the ball detector and the verification
//! suite: the radial kernel `U` shifted to a center, plane waves
//! `e^{λ ω·x}` with `|ω| = 1`, and positive combinations of both.

use serde::{Deserialize, Serialize};

use crate::domains::{dist, BoundingBox};
use crate::specfun::{ln_normalized, normalized, KernelParams};
use crate::{Error, Result};

/// Largest value a battery member may take over the domain's bounding box.
pub const MAX_MEMBER_VALUE: f64 = 1e6;

/// JSON-facing description of a solution, tagged by `"kind"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SolutionKind {
    ShiftedKernel { center: Vec<f64> },
    PlaneWave { direction: Vec<f64> },
    Combination { terms: Vec<Term> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub weight: f64,
    pub solution: SolutionKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    params: KernelParams,
    kind: SolutionKind,
}

fn validate(kind: &SolutionKind, m: usize) -> Result<()> {
    match kind {
        SolutionKind::ShiftedKernel { center } => {
            if center.len() != m || center.iter().any(|c| !c.is_finite()) {
                return Err(Error::Argument(format!("kernel center must have {m} finite coordinates")));
            }
        }
        SolutionKind::PlaneWave { direction } => {
            if direction.len() != m || direction.iter().any(|c| !c.is_finite()) {
                return Err(Error::Argument(format!("plane-wave direction must have {m} finite coordinates")));
            }
            let n = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (n - 1.0).abs() > 1e-12 {
                return Err(Error::Argument(format!("plane-wave direction must be a unit vector, norm is {n}")));
            }
        }
        SolutionKind::Combination { terms } => {
            if terms.is_empty() {
                return Err(Error::Argument("combination needs at least one term".into()));
            }
            for t in terms {
                if !(t.weight.is_finite() && t.weight > 0.0) {
                    return Err(Error::Argument(format!("combination weights must be positive, got {}", t.weight)));
                }
                validate(&t.solution, m)?;
            }
        }
    }
    Ok(())
}

impl Solution {
    pub fn new(params: KernelParams, kind: SolutionKind) -> Result<Self> {
        validate(&kind, params.m())?;
        Ok(Self { params, kind })
    }

    pub fn shifted_kernel(params: KernelParams, center: Vec<f64>) -> Result<Self> {
        Self::new(params, SolutionKind::ShiftedKernel { center })
    }

    pub fn plane_wave(params: KernelParams, direction: Vec<f64>) -> Result<Self> {
        Self::new(params, SolutionKind::PlaneWave { direction })
    }

    pub fn combination(params: KernelParams, terms: Vec<(f64, Solution)>) -> Result<Self> {
        if terms.iter().any(|(_, s)| s.params != params) {
            return Err(Error::Argument("combined solutions must share kernel parameters".into()));
        }
        let terms = terms.into_iter().map(|(weight, s)| Term { weight, solution: s.kind }).collect();
        Self::new(params, SolutionKind::Combination { terms })
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn kind(&self) -> &SolutionKind {
        &self.kind
    }

    fn check_dim(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.params.m() {
            return Err(Error::Argument(format!("point has dimension {}, solution has {}", p.len(), self.params.m())));
        }
        Ok(())
    }

    pub fn eval(&self, p: &[f64]) -> Result<f64> {
        self.check_dim(p)?;
        Ok(self.value_at(p))
    }

    /// Value without the dimension check.
    pub fn value_at(&self, p: &[f64]) -> f64 {
        value(&self.params, &self.kind, p)
    }

    pub fn gradient(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(p)?;
        let mut g = vec![0.0; p.len()];
        self.gradient_into(p, &mut g);
        Ok(g)
    }

    /// Writes the gradient into `out` (overwriting it).
    pub fn gradient_into(&self, p: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|g| *g = 0.0);
        accumulate_gradient(&self.params, &self.kind, p, 1.0, out);
    }

    /// Centered second-difference estimate of `∇²u − λ²u` at `p`.
    pub fn residual(&self, p: &[f64], h: f64) -> Result<f64> {
        self.check_dim(p)?;
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::Argument(format!("step must be positive, got {h}")));
        }
        let center = self.value_at(p);
        let mut q = p.to_vec();
        let mut laplacian = 0.0;
        for i in 0..p.len() {
            q[i] = p[i] + h;
            let plus = self.value_at(&q);
            q[i] = p[i] - h;
            let minus = self.value_at(&q);
            q[i] = p[i];
            laplacian += (plus - 2.0 * center + minus) / (h * h);
        }
        let lambda = self.params.lambda();
        Ok(laplacian - lambda * lambda * center)
    }

    /// `ln max_{bbox} u`, attained at a corner since every member is convex
    /// along lines through its own geometry (radially increasing kernels,
    /// monotone plane waves); for combinations a bound by the sum of maxima.
    pub fn ln_max_over(&self, bbox: &BoundingBox) -> f64 {
        ln_max(&self.params, &self.kind, bbox)
    }
}

fn value(params: &KernelParams, kind: &SolutionKind, p: &[f64]) -> f64 {
    match kind {
        SolutionKind::ShiftedKernel { center } => normalized(params.kernel_order(), params.lambda() * dist(p, center)).value,
        SolutionKind::PlaneWave { direction } => {
            (params.lambda() * p.iter().zip(direction).map(|(x, w)| x * w).sum::<f64>()).exp()
        }
        SolutionKind::Combination { terms } => terms.iter().map(|t| t.weight * value(params, &t.solution, p)).sum(),
    }
}

/// Adds `scale · ∇u(p)` to `out`.
///
/// For the kernel, differentiating `Λ_ν(t) = Γ(ν+1) 2^ν t^{−ν} I_ν(t)` with
/// `[t^{−ν} I_ν]' = t^{−ν} I_{ν+1}` gives `Λ_ν'(t) = t Λ_{ν+1}(t) / (2(ν+1))`.
/// With `ν = (m−2)/2` and `t = λρ` this is `dU/dρ = λ² ρ a(λρ) / m`, hence
/// `∇U = (λ² a(λρ) / m) (p − c)`, smooth through the center.
fn accumulate_gradient(params: &KernelParams, kind: &SolutionKind, p: &[f64], scale: f64, out: &mut [f64]) {
    let lambda = params.lambda();
    match kind {
        SolutionKind::ShiftedKernel { center } => {
            let a = normalized(params.ball_order(), lambda * dist(p, center)).value;
            let factor = scale * lambda * lambda * a / params.m() as f64;
            for (o, (x, c)) in out.iter_mut().zip(p.iter().zip(center)) {
                *o += factor * (x - c);
            }
        }
        SolutionKind::PlaneWave { direction } => {
            let v = (lambda * p.iter().zip(direction).map(|(x, w)| x * w).sum::<f64>()).exp();
            for (o, w) in out.iter_mut().zip(direction) {
                *o += scale * lambda * w * v;
            }
        }
        SolutionKind::Combination { terms } => {
            for t in terms {
                accumulate_gradient(params, &t.solution, p, scale * t.weight, out);
            }
        }
    }
}

fn ln_max(params: &KernelParams, kind: &SolutionKind, bbox: &BoundingBox) -> f64 {
    match kind {
        SolutionKind::ShiftedKernel { center } => {
            let far = bbox.corners().map(|c| dist(&c, center)).fold(0.0, f64::max);
            ln_normalized(params.kernel_order(), params.lambda() * far)
        }
        SolutionKind::PlaneWave { direction } => {
            let top: f64 = direction
                .iter()
                .zip(bbox.lo.iter().zip(&bbox.hi))
                .map(|(w, (l, h))| (w * l).max(w * h))
                .sum();
            params.lambda() * top
        }
        SolutionKind::Combination { terms } => {
            let parts: Vec<f64> = terms.iter().map(|t| t.weight.ln() + ln_max(params, &t.solution, bbox)).collect();
            let top = parts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            top + parts.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatteryMember {
    pub id: String,
    pub solution: Solution,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BatteryEntry {
    pub id: String,
    pub solution: SolutionKind,
}

/// A finite family of positive solutions with stable string ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Battery {
    members: Vec<BatteryMember>,
}

impl Battery {
    pub fn new(members: Vec<BatteryMember>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Argument("battery must not be empty".into()));
        }
        let m = members[0].solution.params().m();
        if members.iter().any(|b| b.solution.params().m() != m) {
            return Err(Error::Argument("battery members differ in dimension".into()));
        }
        Ok(Self { members })
    }

    /// `U` centered at `x0` alone: the single function the characterization
    /// argument needs.
    pub fn kernel_only(params: KernelParams, x0: &[f64]) -> Result<Self> {
        Self::new(vec![BatteryMember { id: "kernel0".into(), solution: Solution::shifted_kernel(params, x0.to_vec())? }])
    }

    /// The default battery: `U` at `x0`, `U` at `2m` axis-shifted centers
    /// outside `bbox`, and the `2m` plane waves `±e_i`.
    ///
    /// Members whose maximum over `bbox` exceeds [`MAX_MEMBER_VALUE`] are
    /// wrapped in a single-term combination that scales them down; ratios of
    /// means to point values are unaffected.
    pub fn standard(params: KernelParams, x0: &[f64], bbox: &BoundingBox) -> Result<Self> {
        let m = params.m();
        if x0.len() != m || bbox.dim() != m {
            return Err(Error::Argument("battery anchor and bounding box must match the kernel dimension".into()));
        }
        let margin = 0.5 * bbox.lo.iter().zip(&bbox.hi).map(|(l, h)| h - l).fold(0.0, f64::max);
        let mut members = vec![BatteryMember { id: "kernel0".into(), solution: Solution::shifted_kernel(params, x0.to_vec())? }];
        for (sign, tag) in [(1.0, '+'), (-1.0, '-')] {
            for i in 0..m {
                let mut c = x0.to_vec();
                c[i] = if sign > 0.0 { bbox.hi[i] + margin } else { bbox.lo[i] - margin };
                members.push(BatteryMember { id: format!("kernel{tag}{}", i + 1), solution: Solution::shifted_kernel(params, c)? });
            }
        }
        for (sign, tag) in [(1.0, '+'), (-1.0, '-')] {
            for i in 0..m {
                let mut w = vec![0.0; m];
                w[i] = sign;
                members.push(BatteryMember { id: format!("plane{tag}{}", i + 1), solution: Solution::plane_wave(params, w)? });
            }
        }
        let ln_cap = MAX_MEMBER_VALUE.ln();
        for member in &mut members {
            let ln_max = member.solution.ln_max_over(bbox);
            if ln_max > ln_cap {
                let weight = (ln_cap - ln_max).exp();
                member.solution = Solution::combination(params, vec![(weight, member.solution.clone())])?;
            }
        }
        Self::new(members)
    }

    pub fn members(&self) -> &[BatteryMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Solution> {
        self.members.iter().find(|b| b.id == id).map(|b| &b.solution)
    }

    pub fn describe(&self) -> Vec<BatteryEntry> {
        self.members.iter().map(|b| BatteryEntry { id: b.id.clone(), solution: b.solution.kind().clone() }).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn p(m: usize, lambda: f64) -> KernelParams {
        KernelParams::new(m, lambda).unwrap()
    }

    #[test]
    fn eval_examples() {
        let k = Solution::shifted_kernel(p(3, 1.0), vec![0.0; 3]).unwrap();
        assert_eq!(k.eval(&[0.0; 3]).unwrap(), 1.0);
        let w = Solution::plane_wave(p(3, 1.0), vec![1.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(w.eval(&[1.0, 0.0, 0.0]).unwrap(), E, max_relative = 1e-15);
        let c = Solution::combination(p(3, 1.0), vec![(2.0, k.clone()), (1.0, w)]).unwrap();
        assert_eq!(c.eval(&[0.0; 3]).unwrap(), 3.0);
        assert!(matches!(k.eval(&[0.0; 2]), Err(Error::Argument(_))));
    }

    #[test]
    fn construction_errors() {
        assert!(Solution::plane_wave(p(2, 1.0), vec![1.0, 1.0]).is_err());
        assert!(Solution::shifted_kernel(p(2, 1.0), vec![0.0]).is_err());
        let k = Solution::shifted_kernel(p(2, 1.0), vec![0.0, 0.0]).unwrap();
        assert!(Solution::combination(p(2, 1.0), vec![(-1.0, k.clone())]).is_err());
        assert!(Solution::combination(p(2, 1.0), vec![]).is_err());
        assert!(Solution::combination(p(2, 2.0), vec![(1.0, k)]).is_err());
    }

    #[test]
    fn gradient_examples() {
        let k = Solution::shifted_kernel(p(3, 1.0), vec![0.0; 3]).unwrap();
        assert_eq!(k.gradient(&[0.0; 3]).unwrap(), vec![0.0; 3]);
        let g = k.gradient(&[1.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(g[0], 1.0_f64.cosh() - 1.0_f64.sinh(), max_relative = 1e-14);
        assert_eq!(&g[1..], &[0.0, 0.0]);
        let w = Solution::plane_wave(p(2, 2.0), vec![1.0, 0.0]).unwrap();
        let x = [0.3, -0.7];
        let gw = w.gradient(&x).unwrap();
        assert_relative_eq!(gw[0], 2.0 * (0.6_f64).exp(), max_relative = 1e-15);
        assert_eq!(gw[1], 0.0);
    }

    #[test]
    fn residual_examples() {
        let w = Solution::plane_wave(p(3, 1.5), vec![0.0, 0.6, 0.8]).unwrap();
        let x = [0.2, 0.1, -0.4];
        assert!(w.residual(&x, 1e-3).unwrap().abs() <= 1e-5 * w.value_at(&x));
        let k = Solution::shifted_kernel(p(3, 1.0), vec![1.0, 0.0, 0.0]).unwrap();
        let y = [1.0, 0.6, 0.8];
        assert!(k.residual(&y, 1e-3).unwrap().abs() <= 1e-5 * k.value_at(&y));
        let w = Solution::plane_wave(p(3, 1.0), vec![1.0, 0.0, 0.0]).unwrap();
        let c = Solution::combination(p(3, 1.0), vec![(0.5, k), (2.0, w)]).unwrap();
        assert!(c.residual(&y, 1e-3).unwrap().abs() <= 1e-5 * c.value_at(&y));
        assert!(c.residual(&y, 0.0).is_err());
    }

    #[test]
    fn standard_battery_layout() {
        let params = p(3, 1.0);
        let bbox = BoundingBox { lo: vec![-1.0; 3], hi: vec![1.0; 3] };
        let b = Battery::standard(params, &[0.0; 3], &bbox).unwrap();
        assert_eq!(b.len(), 1 + 4 * 3);
        assert!(b.get("kernel0").is_some() && b.get("plane-3").is_some() && b.get("kernel+2").is_some());
        let SolutionKind::ShiftedKernel { center } = b.get("kernel+1").unwrap().kind() else { panic!() };
        assert!(center[0] > bbox.hi[0]);
        let json = serde_json::to_string(&b.describe()).unwrap();
        let back: Vec<BatteryEntry> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, b.describe());
    }

    #[test]
    fn battery_rescales_large_members() {
        let params = p(2, 20.0);
        let bbox = BoundingBox { lo: vec![-1.0; 2], hi: vec![1.0; 2] };
        let b = Battery::standard(params, &[0.0; 2], &bbox).unwrap();
        for member in b.members() {
            let top = bbox.corners().map(|c| member.solution.value_at(&c)).fold(0.0, f64::max);
            assert!(top <= MAX_MEMBER_VALUE * (1.0 + 1e-9), "{} {}", member.id, top);
        }
    }

    proptest! {
        #[test]
        fn battery_is_positive_and_solves_the_equation(
            m in 2usize..=4, lambda in 0.2..3.0f64,
            x in prop::collection::vec(-1.0..1.0f64, 4),
        ) {
            let params = p(m, lambda);
            let bbox = BoundingBox { lo: vec![-1.0; m], hi: vec![1.0; m] };
            let battery = Battery::standard(params, &vec![0.0; m], &bbox).unwrap();
            let x = &x[..m];
            for member in battery.members() {
                let v = member.solution.value_at(x);
                prop_assert!(v > 0.0);
                let r = member.solution.residual(x, 1e-3).unwrap();
                prop_assert!(r.abs() <= 1e-5 * v, "{}: residual {} value {}", member.id, r, v);
            }
        }

        #[test]
        fn gradient_matches_central_differences(
            m in 2usize..=5, lambda in 0.2..3.0f64,
            x in prop::collection::vec(-1.0..1.0f64, 5),
        ) {
            let params = p(m, lambda);
            let bbox = BoundingBox { lo: vec![-1.0; m], hi: vec![1.0; m] };
            let battery = Battery::standard(params, &vec![0.5; m], &bbox).unwrap();
            let x = &x[..m];
            let h = 1e-6;
            for member in battery.members() {
                let SolutionKind::ShiftedKernel { center } = member.solution.kind() else { continue };
                if dist(x, center) < 0.05 { continue; }
                let g = member.solution.gradient(x).unwrap();
                let scale = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                let mut q = x.to_vec();
                for i in 0..m {
                    q[i] = x[i] + h;
                    let up = member.solution.value_at(&q);
                    q[i] = x[i] - h;
                    let down = member.solution.value_at(&q);
                    q[i] = x[i];
                    let fd = (up - down) / (2.0 * h);
                    prop_assert!((fd - g[i]).abs() <= 1e-6 * scale.max(1e-3), "{} axis {}: {} vs {}", member.id, i, fd, g[i]);
                }
            }
        }
    }
}
