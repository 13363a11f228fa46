#![allow(clippy::needless_range_loop)]
#![allow(dead_code)]

use std::f64::consts::TAU;
use std::sync::OnceLock;

use skewflow_core::{integrate_fundamental, Builtin, FundamentalSolution, PeriodicSystem};

pub const BUILTINS: [Builtin; 4] = [
    Builtin::Zero,
    Builtin::Rotation { omega: TAU * 0.3 },
    Builtin::Hyperbolic { lambda: 1.0 },
    Builtin::Mathieu { a: 1.0, q: 0.2 },
];

/// Fundamental solutions of [`BUILTINS`] at N = 1024, computed once per test binary.
pub fn solutions() -> &'static [FundamentalSolution] {
    static CELL: OnceLock<Vec<FundamentalSolution>> = OnceLock::new();
    CELL.get_or_init(|| {
        BUILTINS.iter().map(|b| integrate_fundamental(&PeriodicSystem::builtin(*b), 1024).unwrap()).collect()
    })
}

pub fn solve(b: Builtin, n: usize) -> FundamentalSolution {
    integrate_fundamental(&PeriodicSystem::builtin(b), n).unwrap()
}

pub type M2 = [[f64; 2]; 2];

/// Coefficient matrices written out by hand.
pub fn coefficient(b: Builtin, t: f64) -> M2 {
    match b {
        Builtin::Zero => [[0.0, 0.0], [0.0, 0.0]],
        Builtin::Rotation { omega } => [[0.0, -omega], [omega, 0.0]],
        Builtin::Hyperbolic { lambda } => [[lambda, 0.0], [0.0, -lambda]],
        Builtin::Mathieu { a, q } => [[0.0, 1.0], [-(a + 2.0 * q * (TAU * t).cos()), 0.0]],
    }
}

pub fn mul(a: &M2, b: &M2) -> M2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn axpy(a: &M2, h: f64, b: &M2) -> M2 {
    [[a[0][0] + h * b[0][0], a[0][1] + h * b[0][1]], [a[1][0] + h * b[1][0], a[1][1] + h * b[1][1]]]
}

/// Direct RK4 integration of `g' = X(t)g` from 0 to `t_end` with step `1/per_unit`,
/// independent of the library integrator.
pub fn reference_g(b: Builtin, t_end: f64, per_unit: usize) -> M2 {
    let steps = (t_end.abs() * per_unit as f64).ceil().max(1.0) as usize;
    let h = t_end / steps as f64;
    let mut g = [[1.0, 0.0], [0.0, 1.0]];
    for i in 0..steps {
        let t = i as f64 * h;
        let k1 = mul(&coefficient(b, t), &g);
        let k2 = mul(&coefficient(b, t + 0.5 * h), &axpy(&g, 0.5 * h, &k1));
        let k3 = mul(&coefficient(b, t + 0.5 * h), &axpy(&g, 0.5 * h, &k2));
        let k4 = mul(&coefficient(b, t + h), &axpy(&g, h, &k3));
        for r in 0..2 {
            for c in 0..2 {
                g[r][c] += h / 6.0 * (k1[r][c] + 2.0 * k2[r][c] + 2.0 * k3[r][c] + k4[r][c]);
            }
        }
    }
    g
}

/// Largest entry difference between a library matrix and a 2×2 array.
pub fn max_diff(a: &skewflow_core::Matrix, b: &M2) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            d = d.max((a.row(i)[j] - b[i][j]).abs());
        }
    }
    d
}

pub fn apply(a: &M2, x: &[f64]) -> Vec<f64> {
    vec![a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]]
}

pub fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

pub mod chains {
    use rand::Rng;
    use skewflow_core::chains::{ChainWitness, SpaceTag};
    use skewflow_core::correspondence::{LiftDelta, ProjectDelta, WrapCase};
    use skewflow_core::fiber::circle_distance;
    use skewflow_core::{Builtin, FiberSpace, FundamentalSolution};

    fn norm(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn offset<R: Rng>(rng: &mut R, radius: f64) -> Vec<f64> {
        let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let r = radius * rng.gen::<f64>();
        vec![r * a.cos(), r * a.sin()]
    }

    pub fn unit_ball_point<R: Rng>(rng: &mut R) -> Vec<f64> {
        let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let r = rng.gen::<f64>().sqrt();
        vec![r * a.cos(), r * a.sin()]
    }

    /// Perturbed orbit `x_{i+1} = gⁿⁱxᵢ + pᵢ` in `ℝ²` with `|pᵢ| < δ(gⁿⁱxᵢ)/2` and
    /// `nᵢ ∈ {t_min + 1, …, t_min + 3}`.
    pub fn discrete_chain<R: Rng>(
        fs: &FundamentalSolution,
        delta: &LiftDelta,
        rng: &mut R,
        steps: usize,
        t_min: u64,
    ) -> ChainWitness {
        let fiber = FiberSpace::euclidean(2);
        let mut points = vec![unit_ball_point(rng)];
        let (mut times, mut residuals, mut bounds) = (vec![], vec![], vec![]);
        for _ in 0..steps {
            let n = t_min + rng.gen_range(1..=3);
            let image = fiber.act(&fs.monodromy().pow(n), points.last().unwrap());
            let d = delta.eval(&image).unwrap();
            let p = offset(rng, 0.5 * d);
            let next: Vec<f64> = image.iter().zip(&p).map(|(a, b)| a + b).collect();
            residuals.push(super::dist(&next, &image));
            bounds.push(d);
            times.push(n as f64);
            points.push(next);
        }
        ChainWitness { tag: SpaceTag::Discrete, points, times, t_min: t_min as f64, residuals, bounds }
    }

    /// A closed chain of the time-one suspension map on `S¹ × ℝ²` together with the
    /// discrete times and wrap cases it was built from.
    pub struct ClosedChain {
        pub chain: ChainWitness,
        pub discrete_times: Vec<u64>,
        pub cases: Vec<WrapCase>,
    }

    /// Period `p` and base point with `gᵖx = x` for the builtin.
    fn periodic_point<R: Rng>(b: Builtin, rng: &mut R) -> (u64, Vec<f64>) {
        match b {
            Builtin::Zero => (1, unit_ball_point(rng)),
            Builtin::Rotation { omega } => {
                let turns = omega / std::f64::consts::TAU;
                let p = (1..=64).find(|&p| ((p as f64 * turns) - (p as f64 * turns).round()).abs() < 1e-12);
                match p {
                    Some(p) => (p, unit_ball_point(rng)),
                    None => (1, vec![0.0, 0.0]),
                }
            }
            _ => (1, vec![0.0, 0.0]),
        }
    }

    /// Builds a closed suspension chain with times `mᵢ > 2·n_min` whose base
    /// coordinates cross the seam `forward_wraps` times in each direction.
    ///
    /// The fiber points follow `x_{i+1} = gⁿⁱxᵢ + pᵢ` where `nᵢ = mᵢ`, `mᵢ + 1` or
    /// `mᵢ - 1` according to the intended case. Retries with smaller offsets until
    /// every step is below `δ`.
    pub fn closed_suspension_chain<R: Rng>(
        b: Builtin,
        fs: &FundamentalSolution,
        delta: &ProjectDelta,
        rng: &mut R,
        n_min: u64,
        same_steps: usize,
        forward_wraps: usize,
    ) -> ClosedChain {
        let fiber = FiberSpace::euclidean(2);
        let (period, x0) = periodic_point(b, rng);
        let mut cases = Vec::new();
        for _ in 0..forward_wraps {
            cases.push(WrapCase::Forward);
            cases.push(WrapCase::Backward);
        }
        for _ in 0..same_steps {
            let at = rng.gen_range(0..=cases.len());
            cases.insert(at, WrapCase::Same);
        }
        let k = cases.len();
        let mut scale = 0.25;
        loop {
            // Discrete times: m > 2·n_min for the suspension times derived from them.
            let mut n: Vec<u64> = (0..k).map(|_| 2 * n_min + 2 + rng.gen_range(0..4)).collect();
            let total: u64 = n.iter().sum();
            n[k - 1] += (period - total % period) % period;
            let m: Vec<u64> = n
                .iter()
                .zip(&cases)
                .map(|(&n, c)| match c {
                    WrapCase::Same => n,
                    WrapCase::Backward => n + 1,
                    WrapCase::Forward => n - 1,
                })
                .collect();

            let d0 = delta.eval(&x0).unwrap();
            let growth = n.iter().map(|&n| fs.monodromy().pow(n).norm2()).fold(1.0, f64::max);
            let x_scale = 1.0 + norm(&x0) * growth;
            let step = scale * d0 / x_scale;
            // At least one Forward step precedes any Backward one, so start just below 1.
            let mut s = vec![1.0 - step];
            let mut x = vec![x0.clone()];
            for (i, c) in cases.iter().enumerate() {
                let si = s[i];
                let next_s = match c {
                    WrapCase::Same => si,
                    WrapCase::Forward => si + 2.0 * step - 1.0,
                    WrapCase::Backward => si - 2.0 * step + 1.0,
                };
                let image = fiber.act(&fs.monodromy().pow(n[i]), &x[i]);
                let next_x = if i + 1 == k {
                    x0.clone()
                } else {
                    let p = offset(rng, step / growth.powi(k as i32));
                    image.iter().zip(&p).map(|(a, b)| a + b).collect()
                };
                s.push(next_s);
                x.push(next_x);
            }
            s[k] = s[0];
            let xi: Vec<Vec<f64>> = s
                .iter()
                .zip(&x)
                .map(|(&s, x)| {
                    let mut p = vec![s];
                    p.extend(fiber.act(&fs.evaluate_g(s), x));
                    p
                })
                .collect();
            let mut points = xi.clone();
            points[k] = points[0].clone();
            let mut residuals = Vec::new();
            let mut bounds = Vec::new();
            for i in 0..k {
                let image = fiber.act(&fs.evaluate_g(s[i]).mul(&fs.monodromy().pow(m[i])), &x[i]);
                let r = circle_distance(points[i + 1][0], s[i]) + super::dist(&points[i + 1][1..], &image);
                residuals.push(r);
                bounds.push(delta.eval(&image).unwrap());
            }
            if residuals.iter().zip(&bounds).all(|(r, b)| r < b) {
                let chain = ChainWitness {
                    tag: SpaceTag::Suspension,
                    points,
                    times: m.iter().map(|&m| m as f64).collect(),
                    t_min: 2.0 * n_min as f64,
                    residuals,
                    bounds,
                };
                return ClosedChain { chain, discrete_times: n, cases };
            }
            scale *= 0.5;
            assert!(scale > 1e-12, "could not build a chain below δ");
        }
    }
}
