//! Box covers of fibers and of `S¹ × fiber`.
//!
//! Balls are covered by the cube `[-R, R]ⁿ`, planar spheres and projective lines by
//! angular cells, and higher-dimensional spheres and projective spaces by the
//! gnomonic charts of the faces of `[-1, 1]ⁿ`. Product covers index boxes as
//! `base_index · fiber_count + fiber_index`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI, SQRT_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fiber::{circle_distance, wrap_unit, FiberKind, FiberSpace, PhaseSpace};

/// Largest accepted number of boxes.
pub const MAX_BOXES: u128 = 10_000_000;

const RADIUS_SLACK: f64 = 1.0 + 1e-9;

const PRIMES: [u32; 17] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59];

/// Which points of a box are fed to the map when building a transition graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleScheme {
    /// Center plus `per_box - 1` shifted Halton points.
    pub per_box: usize,
    /// Also sample every vertex of the box.
    pub corners: bool,
    pub seed: u64,
}

impl Default for SampleScheme {
    fn default() -> Self {
        SampleScheme { per_box: 5, corners: true, seed: 42 }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum FiberCells {
    Cube { dim: usize, radius: f64, res: usize },
    Angle { res: usize, period: f64 },
    Charts { dim: usize, res: usize, faces: usize },
}

fn lower_cell(offset: f64, width: f64, res: usize) -> usize {
    let k = libm::ceil(offset / width) - 1.0;
    k.clamp(0.0, (res - 1) as f64) as usize
}

fn checked_pow(base: usize, exp: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u128);
    }
    acc
}

impl FiberCells {
    fn new(fiber: &FiberSpace, res: usize) -> Result<Self> {
        if res < 2 {
            return Err(Error::InvalidArgument(alloc::format!("resolution must be at least 2 (got {res})")));
        }
        if fiber.dim == 0 {
            return Err(Error::InvalidArgument("fiber dimension must be positive".into()));
        }
        let cells = match fiber.kind {
            FiberKind::Ball { radius } => {
                if !(radius.is_finite() && radius > 0.0) {
                    return Err(Error::InvalidArgument(alloc::format!(
                        "box covers need a finite positive ball radius (got {radius})"
                    )));
                }
                FiberCells::Cube { dim: fiber.dim, radius, res }
            }
            FiberKind::Sphere | FiberKind::Projective if fiber.dim == 1 => {
                return Err(Error::InvalidArgument("sphere and projective fibers need dimension >= 2".into()))
            }
            FiberKind::Sphere if fiber.dim == 2 => FiberCells::Angle { res, period: TAU },
            FiberKind::Projective if fiber.dim == 2 => FiberCells::Angle { res, period: PI },
            FiberKind::Sphere => FiberCells::Charts { dim: fiber.dim, res, faces: 2 * fiber.dim },
            FiberKind::Projective => FiberCells::Charts { dim: fiber.dim, res, faces: fiber.dim },
        };
        Ok(cells)
    }

    fn count_u128(&self) -> u128 {
        match *self {
            FiberCells::Cube { dim, res, .. } => checked_pow(res, dim),
            FiberCells::Angle { res, .. } => res as u128,
            FiberCells::Charts { dim, res, faces } => (faces as u128).saturating_mul(checked_pow(res, dim - 1)),
        }
    }

    fn param_dim(&self) -> usize {
        match *self {
            FiberCells::Cube { dim, .. } => dim,
            FiberCells::Angle { .. } => 1,
            FiberCells::Charts { dim, .. } => dim - 1,
        }
    }

    /// Per-axis indices of a linear cell index (last axis fastest).
    fn split_index(mut idx: usize, res: usize, axes: usize) -> Vec<usize> {
        let mut out = vec![0; axes];
        for slot in out.iter_mut().rev() {
            *slot = idx % res;
            idx /= res;
        }
        out
    }

    fn join_index(indices: &[usize], res: usize) -> usize {
        indices.iter().fold(0, |acc, &k| acc * res + k)
    }

    /// Point of cell `cell` at local parameters `u ∈ [0, 1]^param_dim`.
    fn point(&self, fiber: &FiberSpace, cell: usize, u: &[f64]) -> Vec<f64> {
        match *self {
            FiberCells::Cube { dim, radius, res } => {
                let w = 2.0 * radius / res as f64;
                Self::split_index(cell, res, dim).iter().zip(u).map(|(&k, &t)| -radius + (k as f64 + t) * w).collect()
            }
            FiberCells::Angle { res, period } => fiber.from_angle((cell as f64 + u[0]) * period / res as f64),
            FiberCells::Charts { dim, res, .. } => {
                let per_face = res.pow(dim as u32 - 1);
                let (axis, sign) = self.face(cell / per_face);
                let local = Self::split_index(cell % per_face, res, dim - 1);
                let w = 2.0 / res as f64;
                let mut coords = local.iter().zip(u).map(|(&k, &t)| -1.0 + (k as f64 + t) * w);
                let x = (0..dim).map(|j| if j == axis { sign } else { coords.next().unwrap() }).collect();
                fiber.canonicalize(x)
            }
        }
    }

    fn face(&self, f: usize) -> (usize, f64) {
        match *self {
            FiberCells::Charts { faces, dim, .. } if faces == 2 * dim => {
                (f / 2, if f.is_multiple_of(2) { 1.0 } else { -1.0 })
            }
            _ => (f, 1.0),
        }
    }

    fn locate(&self, fiber: &FiberSpace, x: &[f64]) -> Option<usize> {
        if x.len() != fiber.dim || !fiber.contains(x) {
            return None;
        }
        match *self {
            FiberCells::Cube { radius, res, .. } => {
                let w = 2.0 * radius / res as f64;
                let idx: Vec<usize> = x.iter().map(|&v| lower_cell(v + radius, w, res)).collect();
                Some(Self::join_index(&idx, res))
            }
            FiberCells::Angle { res, period } => {
                let theta = fiber.angle_of(x);
                Some(lower_cell(theta, period / res as f64, res))
            }
            FiberCells::Charts { dim, res, faces } => {
                let mut axis = 0;
                for j in 1..dim {
                    if x[j].abs() > x[axis].abs() {
                        axis = j;
                    }
                }
                let lead = x[axis];
                if lead == 0.0 {
                    return None;
                }
                let face = if faces == 2 * dim { 2 * axis + usize::from(lead < 0.0) } else { axis };
                let w = 2.0 / res as f64;
                // Projective charts use the positive face; dividing by the signed lead flips antipodes onto it.
                let scale = if faces == 2 * dim { lead.abs() } else { lead };
                let local: Vec<usize> =
                    (0..dim).filter(|&j| j != axis).map(|j| lower_cell(x[j] / scale + 1.0, w, res)).collect();
                Some(face * res.pow(dim as u32 - 1) + Self::join_index(&local, res))
            }
        }
    }

    fn corners(&self, fiber: &FiberSpace, cell: usize) -> Vec<Vec<f64>> {
        let d = self.param_dim();
        (0..1usize << d)
            .map(|mask| {
                let u: Vec<f64> = (0..d).map(|j| ((mask >> j) & 1) as f64).collect();
                self.point(fiber, cell, &u)
            })
            .collect()
    }

    fn center(&self, fiber: &FiberSpace, cell: usize) -> Vec<f64> {
        self.point(fiber, cell, &vec![0.5; self.param_dim()])
    }

    /// Upper bound on the fiber distance from the cell center to any cell point.
    fn radius(&self, fiber: &FiberSpace, cell: usize) -> f64 {
        match *self {
            FiberCells::Cube { dim, radius, res } => radius / res as f64 * libm::sqrt(dim as f64) * RADIUS_SLACK,
            FiberCells::Angle { res, period } => 2.0 * libm::sin(period / res as f64 / 4.0) * RADIUS_SLACK,
            FiberCells::Charts { .. } => {
                // Gnomonic cells are geodesically convex, so the farthest point is a vertex.
                let c = self.center(fiber, cell);
                let r = self.corners(fiber, cell).iter().map(|v| fiber.metric(&c, v)).fold(0.0, f64::max);
                r * RADIUS_SLACK
            }
        }
    }

    fn diameter(&self, fiber: &FiberSpace) -> f64 {
        match *self {
            FiberCells::Charts { dim, res, .. } => {
                (0..res.pow(dim as u32 - 1)).map(|cell| 2.0 * self.radius(fiber, cell)).fold(0.0, f64::max)
            }
            _ => 2.0 * self.radius(fiber, 0),
        }
    }

    fn meeting(&self, fiber: &FiberSpace, x: &[f64], rho: f64, out: &mut Vec<usize>) {
        match *self {
            FiberCells::Cube { dim, radius, res } => {
                let w = 2.0 * radius / res as f64;
                let mut ranges = Vec::with_capacity(dim);
                for &v in x {
                    let lo = libm::ceil((v - rho + radius) / w) - 1.0;
                    let hi = libm::floor((v + rho + radius) / w);
                    let lo = lo.max(0.0);
                    let hi = hi.min((res - 1) as f64);
                    if lo > hi {
                        return;
                    }
                    ranges.push((lo as usize, hi as usize));
                }
                let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
                loop {
                    let gap2: f64 = idx
                        .iter()
                        .zip(x)
                        .map(|(&k, &v)| {
                            let lo = -radius + k as f64 * w;
                            let gap = (lo - v).max(v - lo - w).max(0.0);
                            gap * gap
                        })
                        .sum();
                    if libm::sqrt(gap2) <= rho {
                        out.push(Self::join_index(&idx, res));
                    }
                    let mut axis = dim;
                    loop {
                        if axis == 0 {
                            return;
                        }
                        axis -= 1;
                        if idx[axis] < ranges[axis].1 {
                            idx[axis] += 1;
                            break;
                        }
                        idx[axis] = ranges[axis].0;
                    }
                }
            }
            FiberCells::Angle { res, period } => {
                let cap = if period == PI { SQRT_2 } else { 2.0 };
                if rho >= cap {
                    out.extend(0..res);
                    return;
                }
                let alpha = 2.0 * libm::asin(rho / 2.0);
                if period == PI && alpha >= FRAC_PI_2 {
                    out.extend(0..res);
                    return;
                }
                let w = period / res as f64;
                let theta = fiber.angle_of(x);
                let lo = libm::ceil((theta - alpha) / w) as i64 - 1;
                let hi = libm::floor((theta + alpha) / w) as i64;
                if hi - lo + 1 >= res as i64 {
                    out.extend(0..res);
                    return;
                }
                let start = out.len();
                out.extend((lo..=hi).map(|k| k.rem_euclid(res as i64) as usize));
                out[start..].sort_unstable();
            }
            FiberCells::Charts { .. } => {
                let count = self.count_u128() as usize;
                for cell in 0..count {
                    let c = self.center(fiber, cell);
                    if fiber.metric(&c, x) <= rho + self.radius(fiber, cell) {
                        out.push(cell);
                    }
                }
            }
        }
    }
}

fn halton(mut index: u64, base: u32) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while index > 0 {
        f /= b;
        r += f * (index % base as u64) as f64;
        index /= base as u64;
    }
    r
}

/// A box cover of a fiber or of `S¹ × fiber`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxCover {
    space: PhaseSpace,
    cells: FiberCells,
    base_resolution: usize,
    fiber_count: usize,
    diameter: f64,
}

pub fn build_box_cover(fiber: FiberSpace, resolution: usize) -> Result<BoxCover> {
    let cells = FiberCells::new(&fiber, resolution)?;
    BoxCover::assemble(PhaseSpace::Fiber(fiber), cells, 1)
}

/// Product cover of `S¹ × fiber` with `base_resolution` arcs of width `1/M`.
pub fn build_suspension_cover(fiber: FiberSpace, base_resolution: usize, resolution: usize) -> Result<BoxCover> {
    if base_resolution < 2 {
        return Err(Error::InvalidArgument(alloc::format!(
            "base resolution must be at least 2 (got {base_resolution})"
        )));
    }
    let cells = FiberCells::new(&fiber, resolution)?;
    BoxCover::assemble(PhaseSpace::Suspension(fiber), cells, base_resolution)
}

impl BoxCover {
    fn assemble(space: PhaseSpace, cells: FiberCells, base_resolution: usize) -> Result<BoxCover> {
        let boxes = cells.count_u128().saturating_mul(base_resolution as u128);
        if boxes > MAX_BOXES {
            return Err(Error::ResolutionOverflow { boxes });
        }
        let fiber_count = cells.count_u128() as usize;
        let mut diameter = cells.diameter(space.fiber());
        if space.is_suspension() {
            diameter += 1.0 / base_resolution as f64;
        }
        Ok(BoxCover { space, cells, base_resolution, fiber_count, diameter })
    }

    pub fn space(&self) -> PhaseSpace {
        self.space
    }

    pub fn count(&self) -> usize {
        self.fiber_count * self.base_resolution
    }

    pub fn fiber_count(&self) -> usize {
        self.fiber_count
    }

    /// Number of base arcs; 1 for fiber covers.
    pub fn base_resolution(&self) -> usize {
        self.base_resolution
    }

    /// `(base_index, fiber_index)` of a box.
    pub fn split(&self, id: usize) -> (usize, usize) {
        (id / self.fiber_count, id % self.fiber_count)
    }

    /// Largest box diameter in the phase-space metric.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Dimension of the local parameter cube of a box.
    pub fn param_dim(&self) -> usize {
        self.cells.param_dim() + usize::from(self.space.is_suspension())
    }

    /// Point of box `id` at local parameters `u ∈ [0, 1]^param_dim`.
    pub fn point(&self, id: usize, u: &[f64]) -> Vec<f64> {
        let fiber = self.space.fiber();
        let (b, f) = self.split(id);
        if self.space.is_suspension() {
            let mut p = Vec::with_capacity(self.space.point_len());
            p.push(wrap_unit((b as f64 + u[0]) / self.base_resolution as f64));
            p.extend(self.cells.point(fiber, f, &u[1..]));
            p
        } else {
            self.cells.point(fiber, f, u)
        }
    }

    pub fn center(&self, id: usize) -> Vec<f64> {
        self.point(id, &vec![0.5; self.param_dim()])
    }

    /// Upper bound on the distance from the center of `id` to its points.
    pub fn radius(&self, id: usize) -> f64 {
        let (_, f) = self.split(id);
        let r = self.cells.radius(self.space.fiber(), f);
        if self.space.is_suspension() {
            r + 0.5 / self.base_resolution as f64
        } else {
            r
        }
    }

    /// The box containing `p`, choosing the lexicographically smallest on shared
    /// boundaries; `None` outside the covered region.
    pub fn locate(&self, p: &[f64]) -> Option<usize> {
        if p.len() != self.space.point_len() {
            return None;
        }
        let fiber = self.space.fiber();
        if self.space.is_suspension() {
            let s = wrap_unit(p[0]);
            let b = lower_cell(s, 1.0 / self.base_resolution as f64, self.base_resolution);
            Some(b * self.fiber_count + self.cells.locate(fiber, &p[1..])?)
        } else {
            self.cells.locate(fiber, p)
        }
    }

    /// Every box whose closed region meets the closed ball of radius `rho` about `p`,
    /// sorted ascending.
    pub fn boxes_meeting_ball(&self, p: &[f64], rho: f64) -> Vec<usize> {
        let fiber = self.space.fiber();
        let mut out = Vec::new();
        if !self.space.is_suspension() {
            self.cells.meeting(fiber, p, rho, &mut out);
            out.dedup();
            return out;
        }
        // The product metric is a sum, so the ball splits into fiber balls of the leftover radius.
        let m = self.base_resolution;
        let s = wrap_unit(p[0]);
        let width = 1.0 / m as f64;
        let lo = libm::ceil((s - rho) * m as f64) as i64 - 1;
        let hi = libm::floor((s + rho) * m as f64) as i64;
        let mut bases: Vec<usize> = if hi - lo + 1 >= m as i64 {
            (0..m).collect()
        } else {
            (lo..=hi).map(|k| k.rem_euclid(m as i64) as usize).collect()
        };
        bases.sort_unstable();
        bases.dedup();
        let mut fiber_cells = Vec::new();
        for b in bases {
            let a = b as f64 * width;
            let gap = if s >= a && s <= a + width {
                0.0
            } else {
                circle_distance(s, a).min(circle_distance(s, wrap_unit(a + width)))
            };
            if gap > rho {
                continue;
            }
            fiber_cells.clear();
            self.cells.meeting(fiber, &p[1..], rho - gap, &mut fiber_cells);
            fiber_cells.dedup();
            out.extend(fiber_cells.iter().map(|f| b * self.fiber_count + f));
        }
        out
    }

    /// Every box whose closed region contains `p`, up to a `1e-12` boundary tolerance.
    pub fn boxes_containing(&self, p: &[f64]) -> Vec<usize> {
        self.boxes_meeting_ball(p, 1e-12)
    }

    /// Sample points of box `id`: vertices (if requested), the center, then
    /// Halton points under a seed-derived random shift.
    pub fn samples(&self, id: usize, scheme: &SampleScheme) -> Vec<Vec<f64>> {
        let d = self.param_dim();
        let mut out = Vec::new();
        if scheme.corners {
            for mask in 0..1usize << d {
                let u: Vec<f64> = (0..d).map(|j| ((mask >> j) & 1) as f64).collect();
                out.push(self.point(id, &u));
            }
        }
        if scheme.per_box == 0 {
            return out;
        }
        out.push(self.center(id));
        let shift = self.halton_shift(scheme.seed);
        for i in 1..scheme.per_box {
            let u: Vec<f64> = (0..d)
                .map(|j| {
                    let v = halton(i as u64, PRIMES[j % PRIMES.len()]) + shift[j];
                    v - libm::floor(v)
                })
                .collect();
            out.push(self.point(id, &u));
        }
        out
    }

    fn halton_shift(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.param_dim()).map(|_| rng.gen::<f64>()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;

    #[test]
    fn interval_cover() {
        let cover = build_box_cover(FiberSpace::ball(1, 1.0), 4).unwrap();
        assert_eq!(cover.count(), 4);
        assert!((cover.diameter() - 0.5).abs() < 1e-8);
        assert_eq!(cover.center(0), vec![-0.75]);
        assert_eq!(cover.locate(&[-1.0]), Some(0));
        assert_eq!(cover.locate(&[-0.5]), Some(0));
        assert_eq!(cover.locate(&[0.0]), Some(1));
        assert_eq!(cover.locate(&[1.0]), Some(3));
        assert_eq!(cover.locate(&[1.5]), None);
        assert_eq!(cover.boxes_containing(&[0.0]), vec![1, 2]);
        assert_eq!(cover.boxes_meeting_ball(&[0.1], 0.05), vec![2]);
        assert_eq!(cover.boxes_meeting_ball(&[0.1], 0.7), vec![0, 1, 2, 3]);
    }

    #[test]
    fn projective_angles() {
        let fiber = FiberSpace::projective(2);
        let cover = build_box_cover(fiber, 8).unwrap();
        assert_eq!(cover.count(), 8);
        let w = PI / 8.0;
        assert_eq!(cover.locate(&[1.0, 0.0]), Some(0));
        assert_eq!(cover.locate(&[-1.0, 0.0]), Some(0));
        let x = fiber.from_angle(2.5 * w);
        assert_eq!(cover.locate(&x), Some(2));
        // Wraps across the seam at angle 0 = π.
        assert_eq!(cover.boxes_meeting_ball(&fiber.from_angle(0.1 * w), 0.2), vec![0, 7]);
        let c = cover.center(3);
        assert!((fiber.angle_of(&c) - 3.5 * w).abs() < 1e-12);
        assert!(cover.diameter() >= 2.0 * libm::sin(w / 2.0));
    }

    #[test]
    fn product_count_and_ids() {
        let cover = build_suspension_cover(FiberSpace::ball(1, 1.0), 8, 4).unwrap();
        assert_eq!(cover.count(), 32);
        assert_eq!(cover.split(13), (3, 1));
        assert_eq!(cover.locate(&[0.4, -0.2]), Some(3 * 4 + 1));
        let meet = cover.boxes_meeting_ball(&[0.01, 0.1], 0.03);
        assert_eq!(meet, vec![2, 7 * 4 + 2]);
    }

    #[test]
    fn resolution_guard() {
        let err = build_box_cover(FiberSpace::ball(3, 1.0), 1000).unwrap_err();
        assert_eq!(err, Error::ResolutionOverflow { boxes: 1_000_000_000 });
        assert!(build_box_cover(FiberSpace::ball(1, 1.0), 1).is_err());
        assert!(build_box_cover(FiberSpace::euclidean(2), 8).is_err());
    }

    #[test]
    fn samples_lie_in_their_box() {
        let cover = build_suspension_cover(FiberSpace::sphere(2), 4, 6).unwrap();
        let scheme = SampleScheme { per_box: 7, corners: true, seed: 3 };
        for id in 0..cover.count() {
            let pts = cover.samples(id, &scheme);
            assert_eq!(pts.len(), 4 + 7);
            let c = cover.center(id);
            for p in &pts {
                assert!(cover.space().metric(p, &c) <= cover.radius(id));
                assert!(cover.boxes_containing(p).contains(&id));
            }
        }
        assert_eq!(cover.samples(5, &scheme), cover.samples(5, &scheme));
    }

    #[test]
    fn chart_cover_of_the_two_sphere() {
        let fiber = FiberSpace::sphere(3);
        let cover = build_box_cover(fiber, 3).unwrap();
        assert_eq!(cover.count(), 6 * 9);
        let x = [0.0, 0.0, -1.0];
        let id = cover.locate(&x).unwrap();
        assert_eq!(cover.split(id).1 / 9, 5);
        let c = cover.center(id);
        assert!(linalg::distance(&c, &x) < 1e-15);

        let p = FiberSpace::projective(3);
        let pc = build_box_cover(p, 3).unwrap();
        assert_eq!(pc.count(), 27);
        assert_eq!(pc.locate(&[0.0, -0.6, 0.8]), pc.locate(&[0.0, 0.6, -0.8]));
    }
}
