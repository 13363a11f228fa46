//! Chains for the `lift-demo` and `project-demo` commands.

use rand::Rng;
use skewflow_core::correspondence::{lift_chain_with, project_chain_with, LiftDelta, ProjectDelta, WrapCase};
use skewflow_core::fiber::wrap_unit;
use skewflow_core::verify::random_fiber_point;
use skewflow_core::{
    ChainWitness, DiscreteMap, EpsilonField, Error, FiberKind, FiberSpace, FundamentalSolution, LinearAction, SpaceTag,
    SuspensionMap,
};

const GRID: usize = 64;
/// Longest orbit searched for a near return.
const RETURN_SEARCH: u64 = 1 << 16;
/// Iterates applied to a random point before looking for returns.
const SETTLE: usize = 200;

pub struct LiftDemo {
    pub input: ChainWitness,
    pub lifted: ChainWitness,
    pub u: f64,
    pub v: f64,
    /// Distances of the lifted endpoints from `(ū, g(u)x)` and `(v̄, g(v)y)`.
    pub endpoint_errors: [f64; 2],
}

pub struct ProjectDemo {
    pub input: ChainWitness,
    pub projected: ChainWitness,
    pub cases: Vec<WrapCase>,
}

fn random_direction<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = skewflow_core::linalg::norm(&v);
        if n > 1e-3 && n <= 1.0 {
            return v.iter().map(|c| c / n).collect();
        }
    }
}

/// A start point whose first `steps` iterates under `g` stay in the fiber.
fn start_point<R: Rng>(rng: &mut R, fs: &FundamentalSolution, fiber: &FiberSpace, steps: usize) -> Vec<f64> {
    let x = random_fiber_point(rng, fiber);
    match fiber.kind {
        FiberKind::Ball { radius } if radius.is_finite() => {
            let growth = fs.monodromy().norm2().max(1.0);
            let shrink = growth.powi(steps as i32).recip();
            x.iter().map(|c| c * shrink).collect()
        }
        _ => x,
    }
}

/// Perturbs an orbit of `g` by at most half of the lifting `δ` per step and lifts it.
pub fn lift_demo<R: Rng>(
    rng: &mut R,
    fs: &FundamentalSolution,
    fiber: FiberSpace,
    epsilon: EpsilonField,
    steps: usize,
) -> Result<LiftDemo, Error> {
    let delta = LiftDelta::new(fs, fiber, epsilon, GRID)?;
    let g = LinearAction::monodromy(fs, fiber);
    let space = g.space();
    let mut points = vec![start_point(rng, fs, &fiber, steps)];
    let mut residuals = Vec::with_capacity(steps);
    let mut bounds = Vec::with_capacity(steps);
    for i in 0..steps {
        let image = g.apply(&points[i]).ok_or(Error::Escaped { step: i })?;
        let d = delta.eval(&image)?;
        let r = 0.5 * d * rng.gen::<f64>();
        let moved: Vec<f64> = image.iter().zip(random_direction(rng, fiber.dim)).map(|(a, b)| a + r * b).collect();
        let moved = fiber.canonicalize(moved);
        let next = if fiber.contains(&moved) && space.metric(&moved, &image) < d { moved } else { image.clone() };
        residuals.push(space.metric(&next, &image));
        bounds.push(d);
        points.push(next);
    }
    let input =
        ChainWitness { tag: SpaceTag::Discrete, points, times: vec![1.0; steps], t_min: 0.0, residuals, bounds };
    let (u, v) = (rng.gen::<f64>(), rng.gen::<f64>());
    let lifted = lift_chain_with(fs, &delta, &input, u, v)?;
    let expect = |s: f64, x: &[f64]| {
        let mut p = vec![s];
        p.extend(fiber.act(&fs.evaluate_g(s), x));
        p
    };
    let susp = SuspensionMap::time_one(fs, fiber).space();
    let endpoint_errors =
        [susp.metric(lifted.start(), &expect(u, input.start())), susp.metric(lifted.end(), &expect(v, input.end()))];
    Ok(LiftDemo { input, lifted, u, v, endpoint_errors })
}

/// Closed chain `ξ₀ → ξ₁ → ξ₀` of the suspension flow through a near return of `g`,
/// placed across the seam of the base circle so that both wrap cases occur, then
/// projected.
pub fn project_demo<R: Rng>(
    rng: &mut R,
    fs: &FundamentalSolution,
    fiber: FiberSpace,
    epsilon: EpsilonField,
    n_min: u64,
    attempts: usize,
) -> Result<ProjectDemo, Error> {
    let delta = ProjectDelta::new(fs, fiber, epsilon, GRID)?;
    let g = LinearAction::monodromy(fs, fiber);
    let lip = fiber.lip_period(fs.constants());
    let first = 2 * (2 * n_min + 1);
    let mut candidates = Vec::with_capacity(attempts + 1);
    for _ in 0..attempts {
        let mut x = start_point(rng, fs, &fiber, 0);
        if fiber.is_compact() {
            for _ in 0..SETTLE {
                x = g.apply(&x).expect("compact fibers are invariant");
            }
        }
        candidates.push(x);
    }
    if !fiber.is_compact() {
        candidates.push(vec![0.0; fiber.dim]);
    }
    for x in candidates {
        let d0 = delta.eval(&x)?;
        let mut y = x.clone();
        let mut found = None;
        for q in 1..=RETURN_SEARCH {
            let Some(next) = g.apply(&y) else { break };
            y = next;
            if q >= first && fiber.metric(&y, &x) < 0.25 * d0 / lip {
                found = Some(q);
                break;
            }
        }
        let Some(q) = found else { continue };
        if let Some(demo) = close_across_seam(fs, &delta, fiber, &x, q, d0, n_min)? {
            return Ok(demo);
        }
    }
    Err(Error::InvalidArgument("no near return found for a closed demo chain".into()))
}

fn close_across_seam(
    fs: &FundamentalSolution,
    delta: &ProjectDelta,
    fiber: FiberSpace,
    x: &[f64],
    q: u64,
    d0: f64,
    n_min: u64,
) -> Result<Option<ProjectDemo>, Error> {
    let (m1, m2) = (q / 2, q - q / 2);
    let space = SuspensionMap::time_one(fs, fiber).space();
    let mut tau = 0.25 * d0;
    for attempt in 0..48 {
        if attempt == 47 {
            tau = 0.0;
        }
        let s0 = wrap_unit(1.0 - 0.5 * tau);
        let mut xi0 = vec![s0];
        xi0.extend(fiber.act(&fs.evaluate_g(s0), x));
        let flow = |t: f64, p: &[f64]| SuspensionMap::new(fs, fiber, t).apply(p);
        let (Some(xi1), Some(direct)) = (flow(m1 as f64 + tau, &xi0), flow(m1 as f64, &xi0)) else {
            return Ok(None);
        };
        let Some(image) = flow(m2 as f64, &xi1) else { return Ok(None) };
        let residuals = vec![space.metric(&xi1, &direct), space.metric(&xi0, &image)];
        let bounds = vec![delta.eval(&direct[1..])?, delta.eval(&image[1..])?];
        if residuals.iter().zip(&bounds).any(|(r, b)| r >= b) {
            tau *= 0.5;
            continue;
        }
        let input = ChainWitness {
            tag: SpaceTag::Suspension,
            points: vec![xi0.clone(), xi1, xi0],
            times: vec![m1 as f64, m2 as f64],
            t_min: 2.0 * n_min as f64,
            residuals,
            bounds,
        };
        let p = project_chain_with(fs, delta, &input, n_min)?;
        return Ok(Some(ProjectDemo { input, projected: p.chain, cases: p.cases }));
    }
    Ok(None)
}
