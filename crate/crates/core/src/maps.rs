//! Discrete-time maps on a [`PhaseSpace`].

use alloc::vec::Vec;

use crate::fiber::{FiberSpace, PhaseSpace};
use crate::fundamental::FundamentalSolution;
use crate::linalg::Matrix;
use crate::skew::{phi_in, SkewPoint};

pub trait DiscreteMap {
    fn space(&self) -> PhaseSpace;

    /// Image of `p`, or `None` when it leaves the phase space.
    fn apply(&self, p: &[f64]) -> Option<Vec<f64>>;

    fn iterate(&self, p: &[f64], k: usize) -> Option<Vec<f64>> {
        let mut q = p.to_vec();
        for _ in 0..k {
            q = self.apply(&q)?;
        }
        Some(q)
    }
}

impl<M: DiscreteMap + ?Sized> DiscreteMap for &M {
    fn space(&self) -> PhaseSpace {
        (**self).space()
    }

    fn apply(&self, p: &[f64]) -> Option<Vec<f64>> {
        (**self).apply(p)
    }
}

/// The induced action of a fixed matrix on a fiber.
#[derive(Debug, Clone)]
pub struct LinearAction {
    pub fiber: FiberSpace,
    pub matrix: Matrix,
}

impl LinearAction {
    pub fn new(fiber: FiberSpace, matrix: Matrix) -> Self {
        LinearAction { fiber, matrix }
    }

    /// The monodromy action `x ↦ g·x`.
    pub fn monodromy(fs: &FundamentalSolution, fiber: FiberSpace) -> Self {
        LinearAction::new(fiber, fs.monodromy().clone())
    }

    /// The inverse monodromy action `x ↦ g⁻¹·x`.
    pub fn inverse_monodromy(fs: &FundamentalSolution, fiber: FiberSpace) -> Self {
        LinearAction::new(fiber, fs.monodromy_inverse().clone())
    }
}

impl DiscreteMap for LinearAction {
    fn space(&self) -> PhaseSpace {
        PhaseSpace::Fiber(self.fiber)
    }

    fn apply(&self, p: &[f64]) -> Option<Vec<f64>> {
        let q = self.fiber.act(&self.matrix, p);
        self.fiber.contains(&q).then_some(q)
    }
}

/// The time-`t` map of the suspension flow on `S¹ × fiber`.
///
/// For integer `t` the base coordinate is returned unchanged and the fiber moves by
/// `g(s)·gᵗ·g(s)⁻¹`. A failed inversion of `g(s)` is reported as `None`.
#[derive(Debug, Clone, Copy)]
pub struct SuspensionMap<'a> {
    pub fs: &'a FundamentalSolution,
    pub fiber: FiberSpace,
    pub time: f64,
}

impl<'a> SuspensionMap<'a> {
    pub fn time_one(fs: &'a FundamentalSolution, fiber: FiberSpace) -> Self {
        SuspensionMap { fs, fiber, time: 1.0 }
    }

    pub fn new(fs: &'a FundamentalSolution, fiber: FiberSpace, time: f64) -> Self {
        SuspensionMap { fs, fiber, time }
    }
}

impl DiscreteMap for SuspensionMap<'_> {
    fn space(&self) -> PhaseSpace {
        PhaseSpace::Suspension(self.fiber)
    }

    fn apply(&self, p: &[f64]) -> Option<Vec<f64>> {
        let s = p[0];
        let mut out = Vec::with_capacity(p.len());
        if self.time >= 0.0 && self.time == libm::floor(self.time) {
            let g_s = self.fs.evaluate_g(s);
            let a = g_s.mul(&self.fs.monodromy().pow(self.time as u64)).mul(&self.fs.inverse_g(s).ok()?);
            out.push(s);
            out.extend(self.fiber.act(&a, &p[1..]));
        } else {
            let q = phi_in(self.fs, &self.fiber, self.time, &SkewPoint::new(s, p[1..].to_vec())).ok()?;
            out.push(q.s);
            out.extend(q.x);
        }
        self.fiber.contains(&out[1..]).then_some(out)
    }
}

/// A map given by a closure.
pub struct FnMap<F> {
    pub space: PhaseSpace,
    pub f: F,
}

impl<F: Fn(&[f64]) -> Option<Vec<f64>>> FnMap<F> {
    pub fn new(space: PhaseSpace, f: F) -> Self {
        FnMap { space, f }
    }
}

impl<F: Fn(&[f64]) -> Option<Vec<f64>>> DiscreteMap for FnMap<F> {
    fn space(&self) -> PhaseSpace {
        self.space
    }

    fn apply(&self, p: &[f64]) -> Option<Vec<f64>> {
        let q = (self.f)(p)?;
        self.space.contains(&q).then_some(q)
    }
}
