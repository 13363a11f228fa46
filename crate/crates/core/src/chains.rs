//! Chain witnesses, sampled limit sets, recurrence certificates and the brute-force
//! chain-closure oracle.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fiber::{EpsilonField, PhaseSpace};
use crate::maps::DiscreteMap;

/// Default tolerance for merging nearby orbit points.
pub const MERGE_TOLERANCE: f64 = 1e-9;

/// Largest point set accepted by [`brute_force_chain_closure`].
pub const ORACLE_MAX_POINTS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceTag {
    Discrete,
    Suspension,
}

/// An explicit `(ε, t)`-chain.
///
/// Points are `p₀ … p_k` and times `t₀ … t_{k-1}`; step `i` compares `p_{i+1}` with
/// the time-`tᵢ` image of `pᵢ`. Suspension points are stored as `[s, x₁, …, xₙ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainWitness {
    pub tag: SpaceTag,
    pub points: Vec<Vec<f64>>,
    pub times: Vec<f64>,
    pub t_min: f64,
    pub residuals: Vec<f64>,
    pub bounds: Vec<f64>,
}

impl ChainWitness {
    /// Number of steps `k`.
    pub fn steps(&self) -> usize {
        self.times.len()
    }

    pub fn start(&self) -> &[f64] {
        &self.points[0]
    }

    pub fn end(&self) -> &[f64] {
        self.points.last().expect("a chain has at least one point")
    }

    /// First step whose residual is not strictly below its bound or whose time does
    /// not exceed `t_min`.
    pub fn first_violation(&self) -> Option<usize> {
        (0..self.steps()).find(|&i| {
            let (r, b) = (self.residuals[i], self.bounds[i]);
            !(r.is_finite() && r < b) || !(self.times[i] > self.t_min)
        })
    }

    pub fn is_valid(&self) -> bool {
        self.points.len() == self.steps() + 1
            && self.residuals.len() == self.steps()
            && self.bounds.len() == self.steps()
            && self.steps() > 0
            && self.first_violation().is_none()
    }

    /// Chain for a discrete map with integer times, residuals computed exactly and
    /// bounds `ε(image) + inflate`.
    pub fn for_map<M: DiscreteMap>(
        map: &M,
        points: Vec<Vec<f64>>,
        times: &[usize],
        epsilon: &EpsilonField,
        t_min: f64,
        inflate: f64,
    ) -> Result<Self> {
        if points.len() != times.len() + 1 {
            return Err(Error::InvalidArgument(alloc::format!(
                "a chain with {} times needs {} points (got {})",
                times.len(),
                times.len() + 1,
                points.len()
            )));
        }
        let space = map.space();
        let mut residuals = Vec::with_capacity(times.len());
        let mut bounds = Vec::with_capacity(times.len());
        for (i, &t) in times.iter().enumerate() {
            let image = map.iterate(&points[i], t).ok_or(Error::Escaped { step: i })?;
            residuals.push(space.metric(&points[i + 1], &image));
            bounds.push(space.epsilon(epsilon, &image) + inflate);
        }
        let tag = if space.is_suspension() { SpaceTag::Suspension } else { SpaceTag::Discrete };
        Ok(ChainWitness { tag, points, times: times.iter().map(|&t| t as f64).collect(), t_min, residuals, bounds })
    }
}

fn orbit<M: DiscreteMap>(map: &M, x: &[f64], n: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(x.to_vec());
    for step in 1..=n {
        let next = map.apply(&out[step - 1]).ok_or(Error::Escaped { step })?;
        out.push(next);
    }
    Ok(out)
}

/// Keeps points at distance at least `tol` from every point already kept.
pub fn thin_points(space: &PhaseSpace, points: impl IntoIterator<Item = Vec<f64>>, tol: f64) -> Vec<Vec<f64>> {
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for p in points {
        if kept.iter().all(|q| space.metric(&p, q) >= tol) {
            kept.push(p);
        }
    }
    kept
}

/// Orbit tail `{σᵏ(x) : burn_in < k ≤ iterations}` merged at `merge_tol`; a sampled
/// stand-in for the ω-limit set.
pub fn omega_limit_sample<M: DiscreteMap>(
    map: &M,
    x: &[f64],
    iterations: usize,
    burn_in: usize,
    merge_tol: f64,
) -> Result<Vec<Vec<f64>>> {
    if iterations <= burn_in {
        return Err(Error::InvalidArgument(alloc::format!(
            "iterations ({iterations}) must exceed burn-in ({burn_in})"
        )));
    }
    let orbit = orbit(map, x, iterations)?;
    Ok(thin_points(&map.space(), orbit.into_iter().skip(burn_in + 1), merge_tol))
}

/// Smallest `1 ≤ k ≤ horizon` with `d(σᵏ(x), x) < tol`. `None` means recurrence was
/// not observed, which is not a proof of non-recurrence.
pub fn is_recurrent_sample<M: DiscreteMap>(map: &M, x: &[f64], tol: f64, horizon: usize) -> Result<Option<usize>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(alloc::format!("tolerance must be positive (got {tol})")));
    }
    let space = map.space();
    let mut y = x.to_vec();
    for k in 1..=horizon {
        y = map.apply(&y).ok_or(Error::Escaped { step: k })?;
        if space.metric(&y, x) < tol {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

/// Component (by index into `components`) containing the whole orbit tail after
/// `iterations / 2` burn-in steps. `None` when the tail is split between components,
/// leaves every component, or escapes.
pub fn stable_set_sample<M: DiscreteMap>(
    map: &M,
    cover: &crate::cover::BoxCover,
    components: &crate::graph::ChainComponents,
    x: &[f64],
    iterations: usize,
) -> Result<Option<usize>> {
    let orbit = match orbit(map, x, iterations) {
        Ok(o) => o,
        Err(Error::Escaped { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let mut candidates: Option<Vec<usize>> = None;
    for p in orbit.iter().skip(iterations / 2) {
        let mut here: Vec<usize> =
            cover.boxes_containing(p).iter().filter_map(|&b| components.component_of(b)).collect();
        here.sort_unstable();
        here.dedup();
        candidates = Some(match candidates {
            None => here,
            Some(prev) => prev.into_iter().filter(|c| here.contains(c)).collect(),
        });
        if candidates.as_ref().is_some_and(Vec::is_empty) {
            return Ok(None);
        }
    }
    Ok(match candidates {
        Some(c) if c.len() == 1 => Some(c[0]),
        _ => None,
    })
}

/// Transitive closure of an `(ε, t)`-chain relation on a finite point set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reachability {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl Reachability {
    fn new(n: usize) -> Self {
        let words = n.div_ceil(64);
        Reachability { n, words, bits: vec![0; n * words] }
    }

    fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn reaches(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    /// Whether point `i` is chain-equivalent to itself.
    pub fn is_recurrent(&self, i: usize) -> bool {
        self.reaches(i, i)
    }

    fn close(&mut self) {
        let w = self.words;
        for k in 0..self.n {
            let row_k: Vec<u64> = self.bits[k * w..(k + 1) * w].to_vec();
            for i in 0..self.n {
                if self.reaches(i, k) {
                    for (dst, src) in self.bits[i * w..(i + 1) * w].iter_mut().zip(&row_k) {
                        *dst |= src;
                    }
                }
            }
        }
    }
}

/// Default largest iterate used by the oracle: `3⌈t_min⌉ + 10`.
pub fn default_k_max(t_min: f64) -> usize {
    3 * libm::ceil(t_min.max(0.0)) as usize + 10
}

/// Exact closure of `p → q` iff `d(q, σᵏ(p)) < ε(σᵏ(p))` for an integer
/// `t_min < k ≤ k_max`. Orbits that escape stop contributing.
pub fn brute_force_chain_closure<M: DiscreteMap>(
    points: &[Vec<f64>],
    map: &M,
    epsilon: &EpsilonField,
    t_min: f64,
    k_max: Option<usize>,
) -> Result<Reachability> {
    if points.len() > ORACLE_MAX_POINTS {
        return Err(Error::InvalidArgument(alloc::format!(
            "the chain oracle accepts at most {ORACLE_MAX_POINTS} points (got {})",
            points.len()
        )));
    }
    let k_max = k_max.unwrap_or_else(|| default_k_max(t_min));
    let space = map.space();
    let mut rel = Reachability::new(points.len());
    for (i, p) in points.iter().enumerate() {
        let mut y = p.clone();
        for k in 1..=k_max {
            let Some(next) = map.apply(&y) else { break };
            y = next;
            if (k as f64) <= t_min {
                continue;
            }
            let eps = space.epsilon(epsilon, &y);
            for (j, q) in points.iter().enumerate() {
                if space.metric(q, &y) < eps {
                    rel.set(i, j);
                }
            }
        }
    }
    rel.close();
    Ok(rel)
}
