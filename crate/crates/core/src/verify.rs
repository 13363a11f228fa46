//! Numerical checks of the correspondence between the monodromy system on `F` and
//! the suspension flow on `S¹ × F`.
//!
//! The chain-recurrent set of `g` is represented by a thin point set: orbit tails
//! (forward under `g`, backward under `g⁻¹`) of the sample points of each component
//! box, kept where they stay inside that component. Suspending these points over a
//! base grid is compared box by box with the components of the time-one map.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chains::{is_recurrent_sample, stable_set_sample, ChainWitness, SpaceTag};
use crate::correspondence::{lift_chain_with, project_chain_with, LiftDelta, ProjectDelta};
use crate::cover::{build_box_cover, build_suspension_cover, BoxCover, SampleScheme};
use crate::error::{Error, Result};
use crate::fiber::{circle_distance, wrap_unit, EpsilonField, FiberKind, FiberSpace};
use crate::fundamental::FundamentalSolution;
use crate::graph::{box_path, build_transition_graph, chain_components, ChainComponents, TransitionGraph};
use crate::linalg;
use crate::maps::{DiscreteMap, LinearAction, SuspensionMap};
use crate::skew::{canonical_rep_in, phi_in, SkewPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TheoremId {
    PropRecurrence,
    PropLift,
    ThmChain,
    CorBijection,
    PropStable,
}

impl TheoremId {
    pub const ALL: [TheoremId; 5] = [
        TheoremId::PropRecurrence,
        TheoremId::PropLift,
        TheoremId::ThmChain,
        TheoremId::CorBijection,
        TheoremId::PropStable,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TheoremId::PropRecurrence => "prop-recurrence",
            TheoremId::PropLift => "prop-lift",
            TheoremId::ThmChain => "thm-chain",
            TheoremId::CorBijection => "cor-bijection",
            TheoremId::PropStable => "prop-stable",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        TheoremId::ALL.into_iter().find(|t| t.name() == name)
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    /// Fiber cells per axis.
    pub resolution: usize,
    /// Base arcs of the suspension cover.
    pub base_resolution: usize,
    pub epsilon: EpsilonField,
    pub scheme: SampleScheme,
    /// Allowed symmetric difference as a fraction of the union of box sets.
    pub slack: f64,
    /// Random points (or chains) per check.
    pub samples: usize,
    /// Grid size for the δ minima.
    pub grid_size: usize,
    pub recurrence_tol: f64,
    pub horizon: usize,
    /// Threshold `n` of the chains used in the checks.
    pub n_min: u64,
    /// Orbit length for limit-set and stable-set sampling.
    pub iterations: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            resolution: 64,
            base_resolution: 16,
            epsilon: EpsilonField::Constant(1e-2),
            scheme: SampleScheme::default(),
            slack: 0.02,
            samples: 50,
            grid_size: 64,
            recurrence_tol: 1e-9,
            horizon: 100,
            n_min: 1,
            iterations: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// One-sided evidence was not found; not a failure.
    NotObserved,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRecord {
    pub name: String,
    pub inputs: String,
    pub residual: f64,
    pub bound: f64,
    pub status: CheckStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub theorem: TheoremId,
    pub system: String,
    pub fiber: String,
    pub seed: u64,
    pub checks: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail).count()
    }

    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.failures() == 0
    }

    pub fn summary_line(&self) -> String {
        alloc::format!(
            "THEOREM {} {} checks={} failures={} seed={}",
            self.theorem,
            if self.passed() { "PASS" } else { "FAIL" },
            self.checks.len(),
            self.failures(),
            self.seed
        )
    }

    fn record(&mut self, name: &str, inputs: String, residual: f64, bound: f64, status: CheckStatus) {
        self.checks.push(CheckRecord { name: name.to_string(), inputs, residual, bound, status });
    }

    fn check(&mut self, name: &str, inputs: String, residual: f64, bound: f64, ok: bool) {
        let status = if ok { CheckStatus::Pass } else { CheckStatus::Fail };
        self.record(name, inputs, residual, bound, status);
    }
}

/// Longest orbit searched for a near return when closing a chain.
const RETURN_SEARCH: u64 = 1 << 18;

/// Graphs, components and representative points shared by all checks.
pub struct Analysis<'a> {
    pub fs: &'a FundamentalSolution,
    pub fiber: FiberSpace,
    pub config: VerifyConfig,
    pub fiber_cover: BoxCover,
    pub fiber_graph: TransitionGraph,
    pub fiber_components: ChainComponents,
    pub suspension_cover: BoxCover,
    pub suspension_graph: TransitionGraph,
    pub suspension_components: ChainComponents,
    /// Representative points of each component of `g`.
    pub representatives: Vec<Vec<Vec<f64>>>,
}

/// A finite ball radius for sampling and covering: `R`, or 1 for the whole space.
fn covered_fiber(fiber: FiberSpace) -> FiberSpace {
    match fiber.kind {
        FiberKind::Ball { radius } if radius.is_infinite() => FiberSpace::ball(fiber.dim, 1.0),
        _ => fiber,
    }
}

fn fmt_point(p: &[f64]) -> String {
    let mut s = String::from("(");
    for (i, v) in p.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        s.push_str(&alloc::format!("{v:.6}"));
    }
    s.push(')');
    s
}

fn flat(s: f64, x: &[f64]) -> Vec<f64> {
    let mut p = Vec::with_capacity(x.len() + 1);
    p.push(s);
    p.extend_from_slice(x);
    p
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
}

/// Uniform direction scaled to a length in `[0, radius)`.
fn random_offset<R: Rng>(rng: &mut R, dim: usize, radius: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| gaussian(rng)).collect();
    linalg::normalize_in_place(&mut v);
    let r = radius * rng.gen::<f64>();
    v.iter_mut().for_each(|c| *c *= r);
    v
}

/// Random point of a fiber (of the unit ball when the fiber is all of `ℝⁿ`).
pub fn random_fiber_point<R: Rng>(rng: &mut R, fiber: &FiberSpace) -> Vec<f64> {
    match covered_fiber(*fiber).kind {
        FiberKind::Ball { radius } => {
            let mut v: Vec<f64> = (0..fiber.dim).map(|_| gaussian(rng)).collect();
            linalg::normalize_in_place(&mut v);
            let r = radius * libm::pow(rng.gen::<f64>(), 1.0 / fiber.dim as f64);
            v.iter().map(|c| c * r).collect()
        }
        _ => {
            let v: Vec<f64> = (0..fiber.dim).map(|_| gaussian(rng)).collect();
            fiber.canonicalize(v)
        }
    }
}

impl<'a> Analysis<'a> {
    pub fn new(fs: &'a FundamentalSolution, fiber: FiberSpace, config: VerifyConfig) -> Result<Self> {
        if fiber.dim != fs.dimension() {
            return Err(Error::InvalidArgument(alloc::format!(
                "fiber dimension {} does not match system dimension {}",
                fiber.dim,
                fs.dimension()
            )));
        }
        if !(config.slack >= 0.0) || config.samples == 0 || config.iterations < 2 || config.n_min == 0 {
            return Err(Error::InvalidArgument("verification settings must be positive".into()));
        }
        let fiber = covered_fiber(fiber);
        let fiber_cover = build_box_cover(fiber, config.resolution)?;
        let g = LinearAction::monodromy(fs, fiber);
        let fiber_graph = build_transition_graph(&fiber_cover, &g, config.epsilon, config.scheme)?;
        let fiber_components = chain_components(&fiber_graph);
        let suspension_cover = build_suspension_cover(fiber, config.base_resolution, config.resolution)?;
        let phi1 = SuspensionMap::time_one(fs, fiber);
        let suspension_graph = build_transition_graph(&suspension_cover, &phi1, config.epsilon, config.scheme)?;
        let suspension_components = chain_components(&suspension_graph);
        let mut analysis = Analysis {
            fs,
            fiber,
            config,
            fiber_cover,
            fiber_graph,
            fiber_components,
            suspension_cover,
            suspension_graph,
            suspension_components,
            representatives: Vec::new(),
        };
        analysis.representatives = analysis.compute_representatives();
        Ok(analysis)
    }

    fn g_map(&self) -> LinearAction {
        LinearAction::monodromy(self.fs, self.fiber)
    }

    fn phi1_map(&self) -> SuspensionMap<'a> {
        SuspensionMap::time_one(self.fs, self.fiber)
    }

    fn compute_representatives(&self) -> Vec<Vec<Vec<f64>>> {
        let maps = [self.g_map(), LinearAction::inverse_monodromy(self.fs, self.fiber)];
        let q = self.fiber_cover.diameter() / 4.0;
        let n = self.config.iterations;
        let mut out = Vec::with_capacity(self.fiber_components.len());
        for (j, comp) in self.fiber_components.components.iter().enumerate() {
            let mut keys: BTreeSet<Vec<i64>> = BTreeSet::new();
            let mut points = Vec::new();
            let mut keep = |y: &[f64], points: &mut Vec<Vec<f64>>| {
                let in_comp = self
                    .fiber_cover
                    .boxes_containing(y)
                    .iter()
                    .any(|&b| self.fiber_components.component_of(b) == Some(j));
                if in_comp {
                    let key: Vec<i64> = y.iter().map(|c| libm::floor(c / q) as i64).collect();
                    if keys.insert(key) {
                        points.push(y.to_vec());
                    }
                }
            };
            for &b in comp {
                for p in self.fiber_cover.samples(b, &self.config.scheme) {
                    if !self.fiber.contains(&p) {
                        continue;
                    }
                    for map in &maps {
                        let mut y = p.clone();
                        for k in 1..=n {
                            let Some(next) = map.apply(&y) else { break };
                            let fixed = self.fiber.metric(&next, &y) < 1e-15;
                            y = next;
                            if fixed {
                                keep(&y, &mut points);
                                break;
                            }
                            if k > n / 2 {
                                keep(&y, &mut points);
                            }
                        }
                    }
                }
            }
            if points.is_empty() {
                // No orbit tail stays in the component: fall back to its box samples.
                for &b in comp {
                    for p in self.fiber_cover.samples(b, &self.config.scheme) {
                        if self.fiber.contains(&p) {
                            keep(&p, &mut points);
                        }
                    }
                }
            }
            out.push(points);
        }
        out
    }

    /// Base samples `i/(2M)` used to suspend point sets.
    fn suspension_bases(&self) -> Vec<f64> {
        let m = 2 * self.config.base_resolution;
        (0..m).map(|i| i as f64 / m as f64).collect()
    }

    /// Indicator of the suspension boxes containing `(s, g(s)·e)` for the base
    /// samples `s` and the given fiber points `e`.
    pub fn suspended_boxes(&self, set: &[Vec<f64>]) -> Vec<bool> {
        let mut mask = vec![false; self.suspension_cover.count()];
        for s in self.suspension_bases() {
            let g = self.fs.evaluate_g(s);
            for e in set {
                for b in self.suspension_cover.boxes_containing(&flat(s, &self.fiber.act(&g, e))) {
                    mask[b] = true;
                }
            }
        }
        mask
    }

    /// `incidence[j][l]`: the suspension of component `j` of `g` meets component `l`
    /// of the time-one map.
    pub fn incidence(&self) -> Vec<Vec<bool>> {
        self.representatives
            .iter()
            .map(|reps| {
                let mask = self.suspended_boxes(reps);
                self.suspension_components.components.iter().map(|c| c.iter().any(|&b| mask[b])).collect()
            })
            .collect()
    }

    /// The component bijection, when the incidence matrix is a permutation.
    pub fn matching(&self) -> Option<Vec<usize>> {
        permutation(&self.incidence(), self.suspension_components.len())
    }

    fn rng(&self, theorem: TheoremId) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.config.scheme.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(theorem as u64 + 1)))
    }

    fn report(&self, theorem: TheoremId) -> VerificationReport {
        VerificationReport {
            theorem,
            system: self.fs.system().label(),
            fiber: self.fiber.name().to_string(),
            seed: self.config.scheme.seed,
            checks: Vec::new(),
        }
    }

    pub fn verify(&self, theorem: TheoremId) -> VerificationReport {
        match theorem {
            TheoremId::PropRecurrence => self.check_recurrence(),
            TheoremId::PropLift => self.check_lift(),
            TheoremId::ThmChain => self.check_chain_sets(),
            TheoremId::CorBijection => self.check_bijection(),
            TheoremId::PropStable => self.check_stable(),
        }
    }

    fn check_recurrence(&self) -> VerificationReport {
        let mut report = self.report(TheoremId::PropRecurrence);
        let mut rng = self.rng(TheoremId::PropRecurrence);
        let cfg = &self.config;
        let g = self.g_map();
        let phi1 = self.phi1_map();
        let consts = self.fs.constants();
        let lip = self.fiber.lip_period(consts);
        let mut xs: Vec<Vec<f64>> = (0..cfg.samples).map(|_| random_fiber_point(&mut rng, &self.fiber)).collect();
        for reps in &self.representatives {
            let stride = reps.len().div_ceil(8).max(1);
            xs.extend(reps.iter().step_by(stride).cloned());
        }
        let bases: Vec<f64> = (0..8).map(|i| i as f64 / 8.0).collect();
        for x in &xs {
            match is_recurrent_sample(&g, x, cfg.recurrence_tol, cfg.horizon) {
                Ok(Some(k)) => {
                    let gk = g.iterate(x, k).expect("certified orbit stays in the fiber");
                    for &s in &bases {
                        let p = flat(s, &self.fiber.act(&self.fs.evaluate_g(s), x));
                        let inputs = alloc::format!("x = {} s = {s} k = {k}", fmt_point(x));
                        match phi1.iterate(&p, k) {
                            Some(q) => {
                                let d = self.suspension_cover.space().metric(&q, &p);
                                let bound = lip * cfg.recurrence_tol;
                                report.check("suspension-return", inputs, d, bound, d < bound && q[0] == p[0]);
                            }
                            None => report.check("suspension-return", inputs, f64::INFINITY, 0.0, false),
                        }
                    }
                    let _ = gk;
                }
                Ok(None) => report.record(
                    "discrete-recurrence",
                    alloc::format!("x = {}", fmt_point(x)),
                    f64::NAN,
                    cfg.recurrence_tol,
                    CheckStatus::NotObserved,
                ),
                Err(_) => report.record(
                    "discrete-recurrence",
                    alloc::format!("x = {} escaped", fmt_point(x)),
                    f64::NAN,
                    cfg.recurrence_tol,
                    CheckStatus::NotObserved,
                ),
            }
        }
        // Converse: φ-recurrent suspension points project to g-recurrent points.
        for x in &xs {
            let s = rng.gen::<f64>();
            let p = flat(s, &self.fiber.act(&self.fs.evaluate_g(s), x));
            let inputs = alloc::format!("(s, y) = ({s:.6}, {})", fmt_point(&p[1..]));
            match is_recurrent_sample(&phi1, &p, cfg.recurrence_tol, cfg.horizon) {
                Ok(Some(k)) => {
                    let proj = match canonical_rep_in(self.fs, &self.fiber, p[0], &p[1..]) {
                        Ok((_, x)) => x,
                        Err(_) => {
                            report.check("projected-return", inputs, f64::INFINITY, 0.0, false);
                            continue;
                        }
                    };
                    match g.iterate(&proj, k) {
                        Some(gk) => {
                            let c = self.fiber.comparison(consts, &proj).max(self.fiber.comparison(consts, &gk));
                            let d = self.fiber.metric(&gk, &proj);
                            let bound = c * cfg.recurrence_tol;
                            report.check("projected-return", alloc::format!("{inputs} k = {k}"), d, bound, d < bound);
                        }
                        None => report.check("projected-return", inputs, f64::INFINITY, 0.0, false),
                    }
                }
                _ => report.record(
                    "suspension-recurrence",
                    inputs,
                    f64::NAN,
                    cfg.recurrence_tol,
                    CheckStatus::NotObserved,
                ),
            }
        }
        report
    }

    fn check_lift(&self) -> VerificationReport {
        let mut report = self.report(TheoremId::PropLift);
        let mut rng = self.rng(TheoremId::PropLift);
        let cfg = &self.config;
        let delta = match LiftDelta::new(self.fs, self.fiber, cfg.epsilon, cfg.grid_size) {
            Ok(d) => d,
            Err(e) => {
                report.check("lift-delta", e.to_string(), f64::NAN, f64::NAN, false);
                return report;
            }
        };
        let comps: Vec<usize> =
            (0..self.representatives.len()).filter(|&j| !self.representatives[j].is_empty()).collect();
        if comps.is_empty() {
            report.check("components", "no chain-recurrent points found".into(), 0.0, 1.0, false);
            return report;
        }
        for trial in 0..cfg.samples {
            let j = comps[trial % comps.len()];
            let reps = &self.representatives[j];
            let x0 = reps[rng.gen_range(0..reps.len())].clone();
            let chain = match self.random_discrete_chain(&mut rng, &delta, x0) {
                Some(c) => c,
                None => {
                    report.record(
                        "discrete-chain",
                        alloc::format!("component {j}"),
                        f64::NAN,
                        f64::NAN,
                        CheckStatus::NotObserved,
                    );
                    continue;
                }
            };
            let u = rng.gen::<f64>();
            let v = rng.gen::<f64>();
            let inputs = alloc::format!("component {j} steps {} u = {u:.6} v = {v:.6}", chain.steps());
            match lift_chain_with(self.fs, &delta, &chain, u, v) {
                Ok(w) => {
                    let worst = (0..w.steps()).map(|i| w.residuals[i] / w.bounds[i]).fold(0.0, f64::max);
                    report.check("lifted-steps", inputs.clone(), worst, 1.0, w.is_valid());
                    let start = self.fiber.act(&self.fs.evaluate_g(u), chain.start());
                    let end = self.fiber.act(&self.fs.evaluate_g(v), chain.end());
                    let e0 = circle_distance(w.start()[0], u) + self.fiber.metric(&w.start()[1..], &start);
                    let e1 = circle_distance(w.end()[0], v) + self.fiber.metric(&w.end()[1..], &end);
                    let err = e0.max(e1);
                    report.check("lifted-endpoints", inputs, err, 1e-9, err <= 1e-9);
                }
                Err(e) => report.check("lifted-steps", alloc::format!("{inputs}: {e}"), f64::NAN, 1.0, false),
            }
        }
        report
    }

    /// A perturbed orbit `x₀, …, x_k` with times `n_min + 1` or `n_min + 2` and jumps
    /// below half of `δ`.
    fn random_discrete_chain(&self, rng: &mut ChaCha8Rng, delta: &LiftDelta, x0: Vec<f64>) -> Option<ChainWitness> {
        let k = rng.gen_range(1..=3);
        let mut points = vec![x0];
        let mut times = Vec::new();
        let mut residuals = Vec::new();
        let mut bounds = Vec::new();
        for _ in 0..k {
            let n = self.config.n_min + rng.gen_range(1..=2);
            let image = self.fiber.act(&self.fs.monodromy().pow(n), points.last().unwrap());
            if !self.fiber.contains(&image) {
                return None;
            }
            let d = delta.eval(&image).ok()?;
            let offset = random_offset(rng, self.fiber.dim, 0.5 * d);
            let mut next = self.fiber.canonicalize(image.iter().zip(&offset).map(|(a, b)| a + b).collect());
            if !self.fiber.contains(&next) {
                next = image.clone();
            }
            let r = self.fiber.metric(&next, &image);
            if !(r < d) {
                next = image.clone();
            }
            residuals.push(self.fiber.metric(&next, &image));
            bounds.push(d);
            times.push(n as f64);
            points.push(next);
        }
        Some(ChainWitness {
            tag: SpaceTag::Discrete,
            points,
            times,
            t_min: self.config.n_min as f64,
            residuals,
            bounds,
        })
    }

    fn check_chain_sets(&self) -> VerificationReport {
        let mut report = self.report(TheoremId::ThmChain);
        let cfg = &self.config;
        let all_reps: Vec<Vec<f64>> = self.representatives.iter().flatten().cloned().collect();
        let suspended = self.suspended_boxes(&all_reps);
        let recurrent = self.suspension_components.recurrent_mask();
        let union = suspended.iter().zip(&recurrent).filter(|(a, b)| **a || **b).count();
        let diff = suspended.iter().zip(&recurrent).filter(|(a, b)| **a != **b).count();
        let bound = cfg.slack * union as f64;
        report.check(
            "recurrent-set",
            alloc::format!(
                "suspended {} boxes, time-one recurrent {} boxes, union {union}",
                suspended.iter().filter(|b| **b).count(),
                recurrent.iter().filter(|b| **b).count()
            ),
            diff as f64,
            bound,
            union > 0 && diff as f64 <= bound,
        );

        // Sampled invariance of each time-one component under the flow for time 0.1.
        let flow = SuspensionMap::new(self.fs, self.fiber, 0.1);
        let diam = self.suspension_cover.diameter();
        for (l, comp) in self.suspension_components.components.iter().enumerate() {
            let mut misses = 0usize;
            for &b in comp {
                let space = self.suspension_cover.space();
                let c = self.suspension_cover.center(b);
                let c = if space.contains(&c) {
                    c
                } else {
                    match self.suspension_cover.samples(b, &cfg.scheme).into_iter().find(|p| space.contains(p)) {
                        Some(p) => p,
                        None => continue,
                    }
                };
                let hit = flow.apply(&c).is_some_and(|q| {
                    self.suspension_cover
                        .boxes_meeting_ball(&q, diam)
                        .iter()
                        .any(|&m| self.suspension_components.component_of(m) == Some(l))
                });
                misses += usize::from(!hit);
            }
            report.check(
                "flow-invariance",
                alloc::format!("component {l} with {} boxes", comp.len()),
                misses as f64,
                0.0,
                misses == 0,
            );
        }

        // Box cycles of the time-one graph project into a component of g.
        let matching = self.matching();
        let fdiam = self.fiber_cover.diameter();
        for (l, comp) in self.suspension_components.components.iter().enumerate() {
            let Some(cycle) = box_path(&self.suspension_graph, comp[0], comp[0]) else {
                report.check("projected-box-cycle", alloc::format!("component {l}"), f64::NAN, 0.0, false);
                continue;
            };
            let target = matching.as_ref().and_then(|m| m.iter().position(|&x| x == l));
            let mut misses = 0usize;
            for &b in &cycle {
                let c = self.suspension_cover.center(b);
                let Ok((_, x)) = canonical_rep_in(self.fs, &self.fiber, c[0], &c[1..]) else {
                    misses += 1;
                    continue;
                };
                let hit = self.fiber_cover.boxes_meeting_ball(&x, fdiam).iter().any(|&m| {
                    let comp = self.fiber_components.component_of(m);
                    comp.is_some() && (target.is_none() || comp == target)
                });
                misses += usize::from(!hit);
            }
            report.check(
                "projected-box-cycle",
                alloc::format!("component {l} cycle of {} boxes", cycle.len() - 1),
                misses as f64,
                0.0,
                misses == 0,
            );
        }
        self.check_projected_chains(&mut report);
        report
    }

    /// Closed time-one chains `ξ₀ → φ^{m₁}(ξ₀) → ξ₀` through suspended representatives
    /// with a near return `g^{m₁+m₂}x ≈ x`, projected back to the fiber.
    fn check_projected_chains(&self, report: &mut VerificationReport) {
        let cfg = &self.config;
        let delta = match ProjectDelta::new(self.fs, self.fiber, cfg.epsilon, cfg.grid_size) {
            Ok(d) => d,
            Err(e) => {
                report.check("projected-chain", e.to_string(), f64::NAN, f64::NAN, false);
                return;
            }
        };
        let mut rng = self.rng(TheoremId::ThmChain);
        let g = self.fs.monodromy();
        for (j, reps) in self.representatives.iter().enumerate() {
            let stride = reps.len().div_ceil(4).max(1);
            for x in reps.iter().step_by(stride) {
                let s = rng.gen::<f64>();
                let xi0 = flat(s, &self.fiber.act(&self.fs.evaluate_g(s), x));
                let Ok(d0) = delta.eval(&xi0[1..]) else { continue };
                // First return `q` inside a quarter of δ, split into two admissible steps.
                let gs = self.fs.evaluate_g(s);
                let first = 2 * (2 * cfg.n_min + 1);
                let mut y = x.clone();
                let mut found = None;
                for q in 1..=RETURN_SEARCH {
                    y = self.fiber.act(g, &y);
                    if !self.fiber.contains(&y) {
                        break;
                    }
                    if q >= first && self.fiber.metric(&self.fiber.act(&gs, &y), &xi0[1..]) < 0.25 * d0 {
                        found = Some(q);
                        break;
                    }
                }
                let inputs = alloc::format!("component {j} x = {} s = {s:.6}", fmt_point(x));
                let Some(q) = found else {
                    report.record("projected-chain", inputs, f64::NAN, d0, CheckStatus::NotObserved);
                    continue;
                };
                let (m1, m2) = (q / 2, q - q / 2);
                let step = |p: &[f64], m: u64| SuspensionMap::new(self.fs, self.fiber, m as f64).apply(p);
                let Some(xi1) = step(&xi0, m1) else { continue };
                let Some(image) = step(&xi1, m2) else { continue };
                let space = self.suspension_cover.space();
                let residuals = vec![0.0, space.metric(&xi0, &image)];
                let bounds = vec![delta.eval(&xi1[1..]).unwrap_or(0.0), delta.eval(&image[1..]).unwrap_or(0.0)];
                let chain = ChainWitness {
                    tag: SpaceTag::Suspension,
                    points: vec![xi0.clone(), xi1, xi0],
                    times: vec![m1 as f64, m2 as f64],
                    t_min: 2.0 * cfg.n_min as f64,
                    residuals,
                    bounds,
                };
                let inputs = alloc::format!("{inputs} m = ({m1}, {m2})");
                match project_chain_with(self.fs, &delta, &chain, cfg.n_min) {
                    Ok(p) => {
                        let w = &p.chain;
                        let worst = (0..w.steps()).map(|i| w.residuals[i] / w.bounds[i]).fold(0.0, f64::max);
                        let ok = worst <= 1.0 && w.times.iter().all(|&n| n > cfg.n_min as f64) && w.start() == w.end();
                        report.check("projected-chain", inputs, worst, 1.0, ok);
                    }
                    Err(e) => report.check("projected-chain", alloc::format!("{inputs}: {e}"), f64::NAN, 1.0, false),
                }
            }
        }
    }

    fn check_bijection(&self) -> VerificationReport {
        let mut report = self.report(TheoremId::CorBijection);
        let a = self.fiber_components.len();
        let b = self.suspension_components.len();
        report.check(
            "component-count",
            alloc::format!("{a} components for g, {b} for the time-one map"),
            a.abs_diff(b) as f64,
            0.0,
            a == b && a > 0,
        );
        let incidence = self.incidence();
        for (j, row) in incidence.iter().enumerate() {
            let hits = row.iter().filter(|h| **h).count();
            report.check(
                "incidence-row",
                alloc::format!("component {j} of g meets {:?}", (0..b).filter(|&l| row[l]).collect::<Vec<_>>()),
                hits as f64,
                1.0,
                hits == 1,
            );
        }
        let ok = permutation(&incidence, b).is_some();
        report.check("permutation", alloc::format!("{a}x{b} incidence"), f64::from(u8::from(!ok)), 0.0, ok);
        report
    }

    fn check_stable(&self) -> VerificationReport {
        let mut report = self.report(TheoremId::PropStable);
        let mut rng = self.rng(TheoremId::PropStable);
        let cfg = &self.config;
        let Some(matching) = self.matching() else {
            report.check("bijection", "incidence matrix is not a permutation".into(), 1.0, 0.0, false);
            return report;
        };
        let g = self.g_map();
        let phi1 = self.phi1_map();
        let n = cfg.iterations;
        let mut observed = 0usize;
        for _ in 0..cfg.samples {
            let x = random_fiber_point(&mut rng, &self.fiber);
            let s = rng.gen::<f64>();
            let p = flat(s, &self.fiber.act(&self.fs.evaluate_g(s), &x));
            let lhs = stable_set_sample(&g, &self.fiber_cover, &self.fiber_components, &x, n);
            let rhs = stable_set_sample(&phi1, &self.suspension_cover, &self.suspension_components, &p, n);
            let inputs = alloc::format!("x = {} s = {s:.6}", fmt_point(&x));
            match (lhs, rhs) {
                (Ok(Some(c)), Ok(Some(d))) => {
                    observed += 1;
                    report.check("stable-sets", alloc::format!("{inputs}: {c} -> {d}"), 0.0, 0.0, matching[c] == d);
                }
                (Ok(None), Ok(None)) => report.record("stable-sets", inputs, f64::NAN, 0.0, CheckStatus::NotObserved),
                (l, r) => report.check("stable-sets", alloc::format!("{inputs}: {l:?} vs {r:?}"), 1.0, 0.0, false),
            }
        }
        // Representative points lie in the stable set of their own component.
        for (j, reps) in self.representatives.iter().enumerate() {
            if let Some(x) = reps.first() {
                let lhs = stable_set_sample(&g, &self.fiber_cover, &self.fiber_components, x, n);
                let p = flat(0.5, &self.fiber.act(&self.fs.evaluate_g(0.5), x));
                let rhs = stable_set_sample(&phi1, &self.suspension_cover, &self.suspension_components, &p, n);
                // A representative of a repelling component may drift off it under
                // forward iteration; only consistency of the two sides is required.
                let inputs = alloc::format!("component {j} point {}", fmt_point(x));
                match (lhs, rhs) {
                    (Ok(Some(c)), Ok(Some(d))) => {
                        observed += 1;
                        report.check(
                            "representative",
                            alloc::format!("{inputs}: {c} -> {d}"),
                            0.0,
                            0.0,
                            matching[c] == d,
                        );
                    }
                    (Ok(None), Ok(None)) => {
                        report.record("representative", inputs, f64::NAN, 0.0, CheckStatus::NotObserved)
                    }
                    (l, r) => {
                        report.check("representative", alloc::format!("{inputs}: {l:?} vs {r:?}"), 1.0, 0.0, false)
                    }
                }
            }
        }
        if observed == 0 {
            report.check("stable-sets", "no stable-set membership observed".into(), 0.0, 0.0, false);
        }
        report
    }
}

/// Column index of the single `true` in each row, when the matrix is a permutation.
fn permutation(incidence: &[Vec<bool>], cols: usize) -> Option<Vec<usize>> {
    if incidence.len() != cols {
        return None;
    }
    let mut seen = vec![false; cols];
    let mut out = Vec::with_capacity(cols);
    for row in incidence {
        let hits: Vec<usize> = (0..cols).filter(|&l| row[l]).collect();
        if hits.len() != 1 || seen[hits[0]] {
            return None;
        }
        seen[hits[0]] = true;
        out.push(hits[0]);
    }
    Some(out)
}

pub fn verify_theorem(
    fs: &FundamentalSolution,
    fiber: FiberSpace,
    theorem: TheoremId,
    config: &VerifyConfig,
) -> Result<VerificationReport> {
    Ok(Analysis::new(fs, fiber, config.clone())?.verify(theorem))
}

/// Sampled check that a base-grid point set lies on the section through `x`:
/// `(s, g(s)x)` over the base grid reproduces `g(s)x` via the flow from `(0, x)`.
pub fn section_residual(fs: &FundamentalSolution, fiber: &FiberSpace, x: &[f64], s: f64) -> Result<f64> {
    let p = fiber.act(&fs.evaluate_g(wrap_unit(s)), x);
    let q = phi_in(fs, fiber, s, &SkewPoint { s: 0.0, x: x.to_vec() })?;
    Ok(fiber.metric(&p, &q.x))
}
