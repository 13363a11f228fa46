//! The suspension flow `φᵗ(s̄, x) = (s̄ + t, g(t + s)g(s)⁻¹x)` on `S¹ × F`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fiber::{circle_distance, wrap_unit, FiberSpace};
use crate::fundamental::FundamentalSolution;
use crate::linalg::{self, Matrix};

/// A point of `S¹ × F`, stored by its canonical base representative `s ∈ [0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewPoint {
    pub s: f64,
    pub x: Vec<f64>,
}

impl SkewPoint {
    /// Builds a point from any real base coordinate, reducing it mod 1.
    pub fn new(s: f64, x: Vec<f64>) -> Self {
        SkewPoint { s: wrap_unit(s), x }
    }
}

/// `t = tau + n` with `s + tau ∈ [0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSplit {
    pub tau: f64,
    pub n: u64,
}

/// Splits a nonnegative time relative to the base point `s`: `n = ⌊s + t⌋`, `tau = t - n`.
pub fn decompose_time(s: f64, t: f64) -> Result<TimeSplit> {
    if !(0.0..1.0).contains(&s) || !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(alloc::format!(
            "decompose_time needs s in [0,1) and finite t >= 0 (got s = {s}, t = {t})"
        )));
    }
    let n = libm::floor(s + t);
    let mut tau = t - n;
    // Guard the rounding case where s + tau lands on 1.
    if s + tau >= 1.0 {
        tau = libm::nextafter(1.0 - s, 0.0);
    }
    debug_assert!(tau > -1.0 && tau < 1.0);
    Ok(TimeSplit { tau, n: n as u64 })
}

/// Writes `(r̄, y)` as `(s̄, g(s)x)` with `s = r mod 1`, returning `(s, x)`.
pub fn canonical_rep(fs: &FundamentalSolution, r: f64, y: &[f64]) -> Result<(f64, Vec<f64>)> {
    let s = wrap_unit(r);
    if s == 0.0 {
        return Ok((0.0, y.to_vec()));
    }
    Ok((s, fs.inverse_g(s)?.mul_vec(y)))
}

/// [`canonical_rep`] for a fiber with its induced action.
pub fn canonical_rep_in(fs: &FundamentalSolution, fiber: &FiberSpace, r: f64, y: &[f64]) -> Result<(f64, Vec<f64>)> {
    let s = wrap_unit(r);
    if s == 0.0 {
        return Ok((0.0, y.to_vec()));
    }
    Ok((s, fiber.act(&fs.inverse_g(s)?, y)))
}

/// Transport operator `g(s + t)g(s)⁻¹` evaluated through the time split for `t ≥ 0`.
pub fn transport(fs: &FundamentalSolution, s: f64, t: f64) -> Result<Matrix> {
    let left = if t >= 0.0 {
        let split = decompose_time(s, t)?;
        fs.evaluate_g(s + split.tau).mul(&fs.monodromy().pow(split.n))
    } else {
        fs.evaluate_g(s + t)
    };
    Ok(left.mul(&fs.inverse_g(s)?))
}

/// The flow on `S¹ × ℝⁿ`.
pub fn phi(fs: &FundamentalSolution, t: f64, p: &SkewPoint) -> Result<SkewPoint> {
    phi_in(fs, &FiberSpace::euclidean(fs.dimension()), t, p)
}

/// The flow with the fiber coordinate moved by the fiber's induced action.
pub fn phi_in(fs: &FundamentalSolution, fiber: &FiberSpace, t: f64, p: &SkewPoint) -> Result<SkewPoint> {
    if t == 0.0 {
        return Ok(p.clone());
    }
    let a = transport(fs, p.s, t)?;
    Ok(SkewPoint::new(p.s + t, fiber.act(&a, &p.x)))
}

/// `min{|s - r|, 1 - |s - r|} + |x - y|`.
pub fn skew_metric(p: &SkewPoint, q: &SkewPoint) -> f64 {
    circle_distance(p.s, q.s) + linalg::distance(&p.x, &q.x)
}

/// The product metric with the fiber's own metric in the second factor.
pub fn skew_metric_in(fiber: &FiberSpace, p: &SkewPoint, q: &SkewPoint) -> f64 {
    circle_distance(p.s, q.s) + fiber.metric(&p.x, &q.x)
}

/// Finite sample of `S¹ ×_g E`: fibers `g(sᵢ)E` over `sᵢ = i/M`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuspensionSet {
    pub base_grid: Vec<f64>,
    pub fibers: Vec<Vec<Vec<f64>>>,
}

impl SuspensionSet {
    pub fn points(&self) -> impl Iterator<Item = SkewPoint> + '_ {
        self.base_grid
            .iter()
            .zip(&self.fibers)
            .flat_map(|(s, fiber)| fiber.iter().map(move |x| SkewPoint { s: *s, x: x.clone() }))
    }

    pub fn len(&self) -> usize {
        self.fibers.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn suspend_set(fs: &FundamentalSolution, set: &[Vec<f64>], base_resolution: usize) -> Result<SuspensionSet> {
    suspend_set_in(fs, &FiberSpace::euclidean(fs.dimension()), set, base_resolution)
}

pub fn suspend_set_in(
    fs: &FundamentalSolution,
    fiber: &FiberSpace,
    set: &[Vec<f64>],
    base_resolution: usize,
) -> Result<SuspensionSet> {
    if set.is_empty() || base_resolution < 2 {
        return Err(Error::InvalidArgument(alloc::format!(
            "suspend_set needs a nonempty set and base resolution >= 2 (got {} points, M = {base_resolution})",
            set.len()
        )));
    }
    let base_grid: Vec<f64> = (0..base_resolution).map(|i| i as f64 / base_resolution as f64).collect();
    let fibers = base_grid
        .iter()
        .map(|&s| {
            let g = fs.evaluate_g(s);
            set.iter().map(|e| fiber.act(&g, e)).collect()
        })
        .collect();
    Ok(SuspensionSet { base_grid, fibers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fundamental::integrate_fundamental;
    use crate::system::{Builtin, PeriodicSystem};
    use alloc::vec;

    fn solve(b: Builtin) -> FundamentalSolution {
        integrate_fundamental(&PeriodicSystem::builtin(b), 1024).unwrap()
    }

    #[test]
    fn time_splits() {
        assert_eq!(decompose_time(0.0, 2.0).unwrap(), TimeSplit { tau: 0.0, n: 2 });
        let split = decompose_time(0.5, 0.7).unwrap();
        assert_eq!(split.n, 1);
        assert!((split.tau + 0.3).abs() < 1e-15);
        assert!((0.5 + split.tau - 0.2).abs() < 1e-15);
        let split = decompose_time(0.9, 0.05).unwrap();
        assert_eq!(split, TimeSplit { tau: 0.05, n: 0 });
        assert!(decompose_time(1.0, 0.5).is_err());
        assert!(decompose_time(0.5, -0.5).is_err());
    }

    #[test]
    fn canonical_representatives() {
        let fs = solve(Builtin::Zero);
        let (s, x) = canonical_rep(&fs, 0.7, &[1.0, 2.0]).unwrap();
        assert_eq!(s, 0.7);
        assert!(linalg::distance(&x, &[1.0, 2.0]) < 1e-14);

        let fs = solve(Builtin::Hyperbolic { lambda: 1.0 });
        let (s, x) = canonical_rep(&fs, 2.25, &[1.0, 1.0]).unwrap();
        assert_eq!(s, 0.25);
        let e = libm::exp(0.25);
        assert!(linalg::distance(&x, &[1.0 / e, e]) < 1e-10);
        assert_eq!(canonical_rep(&fs, 0.0, &[3.0, 4.0]).unwrap(), (0.0, vec![3.0, 4.0]));
    }

    #[test]
    fn flow_examples() {
        let fs = solve(Builtin::Zero);
        let p = SkewPoint::new(0.4, vec![1.0, -1.0]);
        assert_eq!(phi(&fs, 0.0, &p).unwrap(), p);
        let q = phi(&fs, 1.3, &p).unwrap();
        assert!((q.s - 0.7).abs() < 1e-14);
        assert!(linalg::distance(&q.x, &p.x) < 1e-14);

        let fs = solve(Builtin::Rotation { omega: core::f64::consts::TAU });
        let q = phi(&fs, 1.0, &SkewPoint::new(0.0, vec![1.0, 0.0])).unwrap();
        assert_eq!(q.s, 0.0);
        assert!(linalg::distance(&q.x, &[1.0, 0.0]) < 1e-8);
    }

    #[test]
    fn negative_times_invert_the_flow() {
        let fs = solve(Builtin::Mathieu { a: 1.0, q: 0.2 });
        let p = SkewPoint::new(0.3, vec![0.5, -0.2]);
        let q = phi(&fs, 1.7, &p).unwrap();
        let back = phi(&fs, -1.7, &q).unwrap();
        assert!(skew_metric(&back, &p) < 1e-9);
    }

    #[test]
    fn metric_examples() {
        let p = SkewPoint::new(0.1, vec![1.0, 2.0]);
        assert_eq!(skew_metric(&p, &p), 0.0);
        let q = SkewPoint::new(0.9, vec![1.0, 2.0]);
        assert!((skew_metric(&p, &q) - 0.2).abs() < 1e-15);
        let r = SkewPoint::new(0.1, vec![1.0, 5.0]);
        assert_eq!(skew_metric(&p, &r), 3.0);
    }

    #[test]
    fn suspension_sets() {
        let fs = solve(Builtin::Hyperbolic { lambda: 1.0 });
        let sus = suspend_set(&fs, &[vec![0.0, 0.0]], 8).unwrap();
        assert!(sus.points().all(|p| p.x == vec![0.0, 0.0]));
        let sus = suspend_set(&fs, &[vec![1.0, 0.0]], 8).unwrap();
        assert_eq!(sus.len(), 8);
        for p in sus.points() {
            assert!(linalg::distance(&p.x, &[libm::exp(p.s), 0.0]) < 1e-10);
        }
        let fs = solve(Builtin::Zero);
        let sus = suspend_set(&fs, &[vec![0.3, 0.1]], 4).unwrap();
        assert!(sus.fibers.iter().all(|f| linalg::distance(&f[0], &[0.3, 0.1]) < 1e-15));
        assert!(suspend_set(&fs, &[], 4).is_err());
        assert!(suspend_set(&fs, &[vec![0.0, 0.0]], 1).is_err());
    }
}
