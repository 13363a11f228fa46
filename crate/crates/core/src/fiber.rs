//! Fibers on which invertible operators act: a closed ball of `ℝⁿ` (or all of `ℝⁿ`),
//! the unit sphere, and projective space.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use crate::fundamental::Constants;
use crate::linalg::{self, Matrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FiberKind {
    /// `{x : |x| ≤ radius}`; `radius = ∞` is the whole space.
    Ball {
        radius: f64,
    },
    Sphere,
    Projective,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberSpace {
    pub kind: FiberKind,
    pub dim: usize,
}

impl FiberSpace {
    pub fn euclidean(dim: usize) -> Self {
        FiberSpace { kind: FiberKind::Ball { radius: f64::INFINITY }, dim }
    }

    pub fn ball(dim: usize, radius: f64) -> Self {
        FiberSpace { kind: FiberKind::Ball { radius }, dim }
    }

    pub fn sphere(dim: usize) -> Self {
        FiberSpace { kind: FiberKind::Sphere, dim }
    }

    pub fn projective(dim: usize) -> Self {
        FiberSpace { kind: FiberKind::Projective, dim }
    }

    pub fn is_compact(&self) -> bool {
        !matches!(self.kind, FiberKind::Ball { .. })
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FiberKind::Ball { radius } if radius.is_infinite() => "euclidean",
            FiberKind::Ball { .. } => "ball",
            FiberKind::Sphere => "sphere",
            FiberKind::Projective => "projective",
        }
    }

    /// Fiber metric: Euclidean on balls, chordal on the sphere, and
    /// `min(|x - y|, |x + y|)` on projective space.
    pub fn metric(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.kind {
            FiberKind::Ball { .. } | FiberKind::Sphere => linalg::distance(x, y),
            FiberKind::Projective => {
                let plus = libm::sqrt(x.iter().zip(y).map(|(a, b)| (a + b) * (a + b)).sum());
                linalg::distance(x, y).min(plus)
            }
        }
    }

    /// Maps an ambient vector to the fiber's representative: normalization on the
    /// sphere, normalization plus sign choice (first nonzero coordinate positive) on
    /// projective space, identity on balls.
    pub fn canonicalize(&self, mut x: Vec<f64>) -> Vec<f64> {
        match self.kind {
            FiberKind::Ball { .. } => x,
            FiberKind::Sphere => {
                linalg::normalize_in_place(&mut x);
                x
            }
            FiberKind::Projective => {
                linalg::normalize_in_place(&mut x);
                if let Some(&lead) = x.iter().find(|v| **v != 0.0) {
                    if lead < 0.0 {
                        x.iter_mut().for_each(|v| *v = -*v);
                    }
                }
                x
            }
        }
    }

    /// The induced action of `a` on the fiber. Ball images may leave the ball; see
    /// [`Self::contains`].
    pub fn act(&self, a: &Matrix, x: &[f64]) -> Vec<f64> {
        self.canonicalize(a.mul_vec(x))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self.kind {
            FiberKind::Ball { radius } => linalg::norm(x) <= radius * (1.0 + 1e-12),
            _ => true,
        }
    }

    /// Unit vector at angle `theta` (planar sphere and projective fibers).
    pub fn from_angle(&self, theta: f64) -> Vec<f64> {
        self.canonicalize(alloc::vec![libm::cos(theta), libm::sin(theta)])
    }

    /// Angular coordinate of a planar point: in `[0, 2π)` on the sphere, `[0, π)` on
    /// projective space.
    pub fn angle_of(&self, x: &[f64]) -> f64 {
        let period = if self.kind == FiberKind::Projective { PI } else { TAU };
        let mut theta = libm::atan2(x[1], x[0]);
        theta -= period * libm::floor(theta / period);
        if theta >= period {
            theta = 0.0;
        }
        theta
    }

    /// Lipschitz bound for the action of any operator in a family with `‖A‖ ≤ norm`
    /// and `‖A⁻¹‖ ≤ inverse_norm`.
    pub fn action_lipschitz(&self, norm: f64, inverse_norm: f64) -> f64 {
        if self.is_compact() {
            2.0 * norm * inverse_norm
        } else {
            norm
        }
    }

    /// Constant `C` with `d(g(t)·x, g(t)·y) ≤ C·d(x, y)` for `t ∈ [0, 1]`:
    /// the Lipschitz constant on balls, `2·C·D` on compact fibers.
    pub fn lip_period(&self, c: &Constants) -> f64 {
        self.action_lipschitz(c.lipschitz, c.bound)
    }

    /// Same as [`Self::lip_period`] but for `t ∈ [0, 2]`.
    pub fn lip_two_periods(&self, c: &Constants) -> f64 {
        self.action_lipschitz(c.two_period, c.bound)
    }

    /// Comparison function `c` with `d(x, y) ≤ c(x)(|s - r| + d(g(s)·x, g(r)·y))`
    /// for `r, s ∈ [-2, 2]`: `max{B·D·|x|, D}` on balls and the constant
    /// `2·D·max{B, D}` on compact fibers.
    pub fn comparison(&self, c: &Constants, x: &[f64]) -> f64 {
        if self.is_compact() {
            2.0 * c.bound * c.inverse_lipschitz.max(c.bound)
        } else {
            c.comparison(linalg::norm(x))
        }
    }
}

/// The phase space of a discrete map: a fiber, or the product `S¹ × fiber` with
/// points stored flat as `[s, x₁, …, xₙ]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseSpace {
    Fiber(FiberSpace),
    Suspension(FiberSpace),
}

impl PhaseSpace {
    pub fn fiber(&self) -> &FiberSpace {
        match self {
            PhaseSpace::Fiber(f) | PhaseSpace::Suspension(f) => f,
        }
    }

    pub fn is_suspension(&self) -> bool {
        matches!(self, PhaseSpace::Suspension(_))
    }

    /// Length of a stored point.
    pub fn point_len(&self) -> usize {
        self.fiber().dim + usize::from(self.is_suspension())
    }

    pub fn fiber_part<'a>(&self, p: &'a [f64]) -> &'a [f64] {
        if self.is_suspension() {
            &p[1..]
        } else {
            p
        }
    }

    pub fn metric(&self, p: &[f64], q: &[f64]) -> f64 {
        match self {
            PhaseSpace::Fiber(f) => f.metric(p, q),
            PhaseSpace::Suspension(f) => circle_distance(p[0], q[0]) + f.metric(&p[1..], &q[1..]),
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.point_len() && self.fiber().contains(self.fiber_part(p))
    }

    pub fn epsilon(&self, eps: &EpsilonField, p: &[f64]) -> f64 {
        eps.eval(self.fiber_part(p))
    }
}

/// Wrap-aware distance on `S¹ = ℝ/ℤ` between canonical representatives.
pub fn circle_distance(s: f64, r: f64) -> f64 {
    let d = (s - r).abs();
    d.min(1.0 - d)
}

/// `s mod 1` in `[0, 1)`.
pub fn wrap_unit(s: f64) -> f64 {
    let w = s - libm::floor(s);
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Positive continuous function of a point, depending on the fiber coordinate only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonField {
    Constant(f64),
    /// `offset + slope·|x|` with `offset > 0`, `slope ≥ 0`.
    Affine {
        offset: f64,
        slope: f64,
    },
}

impl EpsilonField {
    pub fn constant(value: f64) -> Option<Self> {
        (value.is_finite() && value > 0.0).then_some(EpsilonField::Constant(value))
    }

    pub fn affine(offset: f64, slope: f64) -> Option<Self> {
        (offset.is_finite() && offset > 0.0 && slope.is_finite() && slope >= 0.0)
            .then_some(EpsilonField::Affine { offset, slope })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            EpsilonField::Constant(e) => e,
            EpsilonField::Affine { offset, slope } => offset + slope * linalg::norm(x),
        }
    }

    /// The field plus a constant.
    pub fn inflated(&self, by: f64) -> Self {
        match *self {
            EpsilonField::Constant(e) => EpsilonField::Constant(e + by),
            EpsilonField::Affine { offset, slope } => EpsilonField::Affine { offset: offset + by, slope },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projective_metric_identifies_antipodes() {
        let p = FiberSpace::projective(2);
        assert_eq!(p.metric(&[1.0, 0.0], &[-1.0, 0.0]), 0.0);
        assert_eq!(p.canonicalize(alloc::vec![-2.0, 0.0]), alloc::vec![1.0, 0.0]);
        assert_eq!(p.canonicalize(alloc::vec![0.0, -3.0]), alloc::vec![0.0, 1.0]);
        let s = FiberSpace::sphere(2);
        assert_eq!(s.metric(&[1.0, 0.0], &[-1.0, 0.0]), 2.0);
    }

    #[test]
    fn identity_acts_trivially() {
        let i = Matrix::identity(3);
        let x = [0.6, 0.0, 0.8];
        for fiber in [FiberSpace::ball(3, 1.0), FiberSpace::sphere(3), FiberSpace::projective(3)] {
            let y = fiber.act(&i, &x);
            assert!(linalg::distance(&y, &x) < 1e-15);
        }
    }

    #[test]
    fn angles() {
        let p = FiberSpace::projective(2);
        assert!((p.angle_of(&[-1.0, -1.0]) - PI / 4.0).abs() < 1e-15);
        let s = FiberSpace::sphere(2);
        assert!((s.angle_of(&[0.0, -1.0]) - 1.5 * PI).abs() < 1e-15);
        assert_eq!(p.angle_of(&[0.0, 1.0]), PI / 2.0);
    }

    #[test]
    fn circle_helpers() {
        assert!((circle_distance(0.1, 0.9) - 0.2).abs() < 1e-15);
        assert_eq!(wrap_unit(2.25), 0.25);
        assert_eq!(wrap_unit(-0.25), 0.75);
    }

    #[test]
    fn epsilon_fields() {
        assert!(EpsilonField::constant(0.0).is_none());
        assert!(EpsilonField::affine(0.1, -1.0).is_none());
        let e = EpsilonField::affine(0.1, 0.1).unwrap();
        assert!((e.eval(&[3.0, 4.0]) - 0.6).abs() < 1e-15);
        assert_eq!(e.inflated(0.2), EpsilonField::Affine { offset: 0.30000000000000004, slope: 0.1 });
    }
}
