//! Constructive transfer of chains between the discrete system `(F, g)` and the
//! suspension flow on `S¹ × F`.
//!
//! Chains are lifted by spreading the base coordinate evenly over the steps and then
//! flowing by `u`; suspension chains of the time-one map are projected by choosing,
//! per step, whether the base coordinate wrapped forward, backward, or not at all.
//! Every constructed residual is recomputed and checked against its bound.

use alloc::vec::Vec;

use crate::chains::{ChainWitness, SpaceTag};
use crate::error::{Error, Result};
use crate::fiber::{circle_distance, EpsilonField, FiberSpace};
use crate::fundamental::FundamentalSolution;
use crate::linalg::Matrix;
use crate::skew::{canonical_rep_in, phi_in, skew_metric_in, SkewPoint};

/// Factor applied to every grid minimum to absorb the between-grid excursion.
pub const GRID_SAFETY: f64 = 0.9;

/// Minimum of `f` over `{i/M : 0 ≤ i ≤ M}`.
pub fn min_over_grid<F: FnMut(f64) -> f64>(f: F, grid_size: usize) -> Result<f64> {
    min_over_range(f, 0.0, 1.0, grid_size)
}

/// Minimum of `f` over `M` equal subintervals of `[a, b]`, endpoints included.
pub fn min_over_range<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, grid_size: usize) -> Result<f64> {
    if grid_size < 16 {
        return Err(Error::InvalidArgument(alloc::format!("grid size must be at least 16 (got {grid_size})")));
    }
    let mut best = f64::INFINITY;
    for i in 0..=grid_size {
        let t = a + (b - a) * i as f64 / grid_size as f64;
        let v = f(t);
        if !v.is_finite() {
            return Err(Error::Evaluation { at: t });
        }
        best = best.min(v);
    }
    Ok(best)
}

/// Cached `g(r)` on the grid of `[0, 2]` for lifting.
///
/// `δ(z) = 0.9 · min_r ε(g(r)z) / L`, where `L` bounds the Lipschitz constant of the
/// action of `g(r)`, `r ∈ [0, 2]`. The final residual of a lifted chain is the action
/// of `g(u + (i + 1)s/k)` with argument up to 2 applied to a discrete residual.
#[derive(Debug, Clone)]
pub struct LiftDelta {
    fiber: FiberSpace,
    epsilon: EpsilonField,
    lipschitz: f64,
    grid: Vec<Matrix>,
}

impl LiftDelta {
    pub fn new(fs: &FundamentalSolution, fiber: FiberSpace, epsilon: EpsilonField, grid_size: usize) -> Result<Self> {
        if grid_size < 16 {
            return Err(Error::InvalidArgument(alloc::format!("grid size must be at least 16 (got {grid_size})")));
        }
        let grid = (0..=2 * grid_size).map(|i| fs.evaluate_g(i as f64 / grid_size as f64)).collect();
        Ok(LiftDelta { fiber, epsilon, lipschitz: fiber.lip_two_periods(fs.constants()), grid })
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn eval(&self, z: &[f64]) -> Result<f64> {
        let mut best = f64::INFINITY;
        for (i, g) in self.grid.iter().enumerate() {
            let v = self.epsilon.eval(&self.fiber.act(g, z));
            if !v.is_finite() {
                return Err(Error::Evaluation { at: i as f64 / (self.grid.len() - 1) as f64 * 2.0 });
            }
            best = best.min(v);
        }
        Ok(GRID_SAFETY * best / self.lipschitz)
    }
}

pub fn delta_for_lift(
    fs: &FundamentalSolution,
    fiber: FiberSpace,
    epsilon: &EpsilonField,
    z: &[f64],
    grid_size: usize,
) -> Result<f64> {
    LiftDelta::new(fs, fiber, *epsilon, grid_size)?.eval(z)
}

/// Lifts a discrete chain `x = x₀ … x_k = y` of the monodromy action to a chain of
/// the suspension flow from `(ū, g(u)x)` to `(v̄, g(v)y)`.
///
/// The input must satisfy `d(x_{i+1}, gⁿⁱxᵢ) < δ(gⁿⁱxᵢ)` with `δ` from
/// [`LiftDelta`]. With `s = v - u` (or `1 + v - u` when `v < u`) and `r = s/k`, the
/// intermediate points are `(ir, g(ir)xᵢ)` and times `nᵢ + r`; when `v < u` the last
/// point is `(s, g(s)g⁻¹y)` reached with time `n_{k-1} - 1 + r`. All points are then
/// moved by `φᵘ`.
pub fn lift_chain(
    fs: &FundamentalSolution,
    fiber: FiberSpace,
    chain: &ChainWitness,
    u: f64,
    v: f64,
    epsilon: &EpsilonField,
    grid_size: usize,
) -> Result<ChainWitness> {
    let delta = LiftDelta::new(fs, fiber, *epsilon, grid_size)?;
    lift_chain_with(fs, &delta, chain, u, v)
}

pub fn lift_chain_with(
    fs: &FundamentalSolution,
    delta: &LiftDelta,
    chain: &ChainWitness,
    u: f64,
    v: f64,
) -> Result<ChainWitness> {
    let fiber = delta.fiber;
    if chain.tag != SpaceTag::Discrete || chain.steps() == 0 || chain.points.len() != chain.steps() + 1 {
        return Err(Error::InvalidArgument("lift_chain needs a nonempty discrete chain".into()));
    }
    if !(0.0..1.0).contains(&u) || !(0.0..1.0).contains(&v) {
        return Err(Error::InvalidArgument(alloc::format!("u and v must lie in [0,1) (got {u}, {v})")));
    }
    let k = chain.steps();
    let mut n = Vec::with_capacity(k);
    for (i, &t) in chain.times.iter().enumerate() {
        if t != libm::floor(t) || !(t > chain.t_min) {
            return Err(Error::InvalidArgument(alloc::format!(
                "step {i} time {t} must be an integer above t_min = {}",
                chain.t_min
            )));
        }
        n.push(t as u64);
    }
    for i in 0..k {
        let image = fiber.act(&fs.monodromy().pow(n[i]), &chain.points[i]);
        let residual = fiber.metric(&chain.points[i + 1], &image);
        let bound = delta.eval(&image)?;
        if !(residual < bound) {
            return Err(Error::Precondition { step: i, residual, bound });
        }
    }

    let wraps = v < u;
    let s = if wraps { 1.0 + v - u } else { v - u };
    let r = s / k as f64;
    let mut times: Vec<f64> = n.iter().map(|&m| m as f64 + r).collect();
    if wraps {
        times[k - 1] -= 1.0;
        if !(times[k - 1] > chain.t_min) {
            return Err(Error::InvalidArgument(alloc::format!(
                "wrapped last step time {} does not exceed t_min = {}",
                times[k - 1],
                chain.t_min
            )));
        }
    }
    let mut eta: Vec<SkewPoint> = (0..=k)
        .map(|i| {
            let base = if i == k { s } else { i as f64 * r };
            SkewPoint { s: base, x: fiber.act(&fs.evaluate_g(base), &chain.points[i]) }
        })
        .collect();
    if wraps {
        let g_s = fs.evaluate_g(s).mul(fs.monodromy_inverse());
        eta[k].x = fiber.act(&g_s, &chain.points[k]);
    }
    let xi: Vec<SkewPoint> = eta.iter().map(|p| phi_in(fs, &fiber, u, p)).collect::<Result<_>>()?;

    let mut residuals = Vec::with_capacity(k);
    let mut bounds = Vec::with_capacity(k);
    for i in 0..k {
        let image = phi_in(fs, &fiber, times[i], &xi[i])?;
        residuals.push(skew_metric_in(&fiber, &xi[i + 1], &image));
        bounds.push(delta.epsilon.eval(&image.x));
    }
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(k + 1);
    for p in xi {
        let mut flat = Vec::with_capacity(p.x.len() + 1);
        flat.push(p.s);
        flat.extend(p.x);
        points.push(flat);
    }
    let witness = ChainWitness { tag: SpaceTag::Suspension, points, times, t_min: chain.t_min, residuals, bounds };
    if let Some(step) = witness.first_violation() {
        return Err(Error::Construction { step, residual: witness.residuals[step], bound: witness.bounds[step] });
    }
    Ok(witness)
}

/// Cached `g(t)⁻¹` on the grid of `[-1, 2]` for projecting.
///
/// `δ(r̄, y) = 0.9 · ½ · min_t ε(g(t)⁻¹y) / c(g(t)⁻¹y)`. The base-wrapping cases of a
/// projected step compare through `g(sᵢ)`, `g(1 + sᵢ)` or `g(sᵢ - 1)`, so the minimum
/// runs over `[-1, 2]`.
#[derive(Debug, Clone)]
pub struct ProjectDelta {
    fiber: FiberSpace,
    epsilon: EpsilonField,
    constants: crate::fundamental::Constants,
    grid: Vec<Matrix>,
}

impl ProjectDelta {
    pub fn new(fs: &FundamentalSolution, fiber: FiberSpace, epsilon: EpsilonField, grid_size: usize) -> Result<Self> {
        if grid_size < 16 {
            return Err(Error::InvalidArgument(alloc::format!("grid size must be at least 16 (got {grid_size})")));
        }
        let grid =
            (0..=3 * grid_size).map(|i| fs.inverse_g(-1.0 + i as f64 / grid_size as f64)).collect::<Result<_>>()?;
        Ok(ProjectDelta { fiber, epsilon, constants: *fs.constants(), grid })
    }

    pub fn eval(&self, y: &[f64]) -> Result<f64> {
        let mut best = f64::INFINITY;
        for (i, h) in self.grid.iter().enumerate() {
            let z = self.fiber.act(h, y);
            let v = self.epsilon.eval(&z) / self.fiber.comparison(&self.constants, &z);
            if !v.is_finite() {
                return Err(Error::Evaluation { at: -1.0 + 3.0 * i as f64 / (self.grid.len() - 1) as f64 });
            }
            best = best.min(v);
        }
        Ok(GRID_SAFETY * 0.5 * best)
    }
}

pub fn delta_for_project(
    fs: &FundamentalSolution,
    fiber: FiberSpace,
    epsilon: &EpsilonField,
    y: &[f64],
    grid_size: usize,
) -> Result<f64> {
    ProjectDelta::new(fs, fiber, *epsilon, grid_size)?.eval(y)
}

/// Which base-coordinate relation selected the discrete time of a projected step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WrapCase {
    /// `|s_{i+1} - sᵢ| < δ`: `nᵢ = mᵢ`.
    Same,
    /// `(1 + sᵢ) - s_{i+1} < δ`: `nᵢ = mᵢ - 1`.
    Backward,
    /// `s_{i+1} - (sᵢ - 1) < δ`: `nᵢ = mᵢ + 1`.
    Forward,
}

/// Result of [`project_chain`]: the discrete chain and the case used at each step.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub chain: ChainWitness,
    pub cases: Vec<WrapCase>,
}

/// Projects a closed chain of the time-one suspension map through `(s̄, g(s)x)` to a
/// closed chain of the monodromy action through `x`.
///
/// Requires integer times `mᵢ > 2·n_min` and residuals below `δ` from
/// [`ProjectDelta`]. The endpoints of the result are both the canonical fiber
/// coordinate of the first chain point.
pub fn project_chain(
    fs: &FundamentalSolution,
    fiber: FiberSpace,
    chain: &ChainWitness,
    epsilon: &EpsilonField,
    n_min: u64,
    grid_size: usize,
) -> Result<Projection> {
    let delta = ProjectDelta::new(fs, fiber, *epsilon, grid_size)?;
    project_chain_with(fs, &delta, chain, n_min)
}

pub fn project_chain_with(
    fs: &FundamentalSolution,
    delta: &ProjectDelta,
    chain: &ChainWitness,
    n_min: u64,
) -> Result<Projection> {
    let fiber = delta.fiber;
    if chain.tag != SpaceTag::Suspension || chain.steps() == 0 || chain.points.len() != chain.steps() + 1 {
        return Err(Error::InvalidArgument("project_chain needs a nonempty suspension chain".into()));
    }
    if chain.start() != chain.end() {
        return Err(Error::InvalidArgument("project_chain needs a chain from a point to itself".into()));
    }
    let k = chain.steps();
    let mut m = Vec::with_capacity(k);
    for (i, &t) in chain.times.iter().enumerate() {
        if t != libm::floor(t) || !(t > 2.0 * n_min as f64) {
            return Err(Error::InvalidArgument(alloc::format!(
                "step {i} time {t} must be an integer above 2·n_min = {}",
                2 * n_min
            )));
        }
        m.push(t as u64);
    }
    let xi: Vec<SkewPoint> = chain.points.iter().map(|p| SkewPoint::new(p[0], p[1..].to_vec())).collect();
    let mut xs: Vec<Vec<f64>> = Vec::with_capacity(k + 1);
    for p in &xi[..k] {
        xs.push(canonical_rep_in(fs, &fiber, p.s, &p.x)?.1);
    }
    xs.push(xs[0].clone());

    let mut ns = Vec::with_capacity(k);
    let mut cases = Vec::with_capacity(k);
    for i in 0..k {
        let image = phi_in(fs, &fiber, m[i] as f64, &xi[i])?;
        let image = SkewPoint { s: xi[i].s, x: image.x };
        let d = delta.eval(&image.x)?;
        let residual = skew_metric_in(&fiber, &xi[i + 1], &image);
        if !(residual < d) {
            return Err(Error::Precondition { step: i, residual, bound: d });
        }
        let (si, sj) = (xi[i].s, xi[i + 1].s);
        debug_assert!(circle_distance(si, sj) < d);
        let case = if (sj - si).abs() < d {
            WrapCase::Same
        } else if (1.0 + si) - sj < d {
            WrapCase::Backward
        } else if sj - (si - 1.0) < d {
            WrapCase::Forward
        } else {
            return Err(Error::CaseSelection { step: i });
        };
        let n = match case {
            WrapCase::Same => m[i],
            WrapCase::Backward => m[i] - 1,
            WrapCase::Forward => m[i] + 1,
        };
        if n <= n_min {
            return Err(Error::CaseSelection { step: i });
        }
        ns.push(n);
        cases.push(case);
    }

    let mut residuals = Vec::with_capacity(k);
    let mut bounds = Vec::with_capacity(k);
    for i in 0..k {
        let image = fiber.act(&fs.monodromy().pow(ns[i]), &xs[i]);
        residuals.push(fiber.metric(&xs[i + 1], &image));
        bounds.push(delta.epsilon.eval(&image));
    }
    let out = ChainWitness {
        tag: SpaceTag::Discrete,
        points: xs,
        times: ns.iter().map(|&n| n as f64).collect(),
        t_min: n_min as f64,
        residuals,
        bounds,
    };
    // The proof gives `≤ ε`; equality is accepted here, the strict check is the witness's own.
    if let Some(step) = (0..k).find(|&i| !(out.residuals[i] <= out.bounds[i]) || !(out.times[i] > out.t_min)) {
        return Err(Error::Construction { step, residual: out.residuals[step], bound: out.bounds[step] });
    }
    Ok(Projection { chain: out, cases })
}
