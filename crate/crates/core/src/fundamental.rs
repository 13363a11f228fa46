//! Fundamental solution `g' = X(t) g`, `g(0) = I` on a uniform grid of `[0, 1]`,
//! the monodromy `g = g(1)` and the quantitative constants built from it.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::system::PeriodicSystem;

/// Multiplicative margin applied to every grid maximum.
pub const SAFETY_FACTOR: f64 = 1.05;

/// Default grid size.
pub const DEFAULT_STEPS: usize = 1024;

/// Bounds derived from the fundamental solution.
///
/// * `lipschitz` (C): bounds `‖g(t)‖` for `t ∈ [0, 1]`.
/// * `inverse_lipschitz` (B): Lipschitz constant of `t ↦ g(t)⁻¹` on `[-2, 2]`.
/// * `bound` (D): bounds `‖g(r)‖` and `‖g(r)⁻¹‖` for `r ∈ [-2, 2]`.
/// * `two_period`: bounds `‖g(t)‖` for `t ∈ [0, 2]`; used when a suspension chain is
///   transported by a further flow time `u ∈ [0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub lipschitz: f64,
    pub inverse_lipschitz: f64,
    pub bound: f64,
    pub two_period: f64,
}

impl Constants {
    /// `c(x) = max{B·D·|x|, D}` as a function of `|x|`.
    pub fn comparison(&self, norm_x: f64) -> f64 {
        (self.inverse_lipschitz * self.bound * norm_x).max(self.bound)
    }
}

#[derive(Debug, Clone)]
pub struct FundamentalSolution {
    system: PeriodicSystem,
    steps: usize,
    samples: Vec<Matrix>,
    monodromy_inverse: Matrix,
    constants: Constants,
}

fn rk4_step(system: &PeriodicSystem, t: f64, h: f64, g: &Matrix) -> Matrix {
    let x0 = system.coefficient_at(t);
    let xm = system.coefficient_at(t + 0.5 * h);
    let x1 = system.coefficient_at(t + h);
    let k1 = x0.mul(g);
    let k2 = xm.mul(&g.add_scaled(0.5 * h, &k1));
    let k3 = xm.mul(&g.add_scaled(0.5 * h, &k2));
    let k4 = x1.mul(&g.add_scaled(h, &k3));
    let incr = k1.add_scaled(2.0, &k2).add_scaled(2.0, &k3).add(&k4);
    g.add_scaled(h / 6.0, &incr)
}

/// Integrates `g' = X(t) g` with `steps` classical RK4 steps over `[0, 1]`.
///
/// `system` must have period 1 (see [`PeriodicSystem::normalize_period`]) and `steps`
/// must be a power of two no smaller than 16.
pub fn integrate_fundamental(system: &PeriodicSystem, steps: usize) -> Result<FundamentalSolution> {
    if system.period() != 1.0 {
        return Err(Error::InvalidArgument(format!("system period is {}, normalize it to 1 first", system.period())));
    }
    if steps < 16 || !steps.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("step count must be a power of two >= 16, got {steps}")));
    }
    let n = system.dimension();
    let h = 1.0 / steps as f64;
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(Matrix::identity(n));
    for i in 0..steps {
        let next = rk4_step(system, i as f64 * h, h, &samples[i]);
        if !next.is_finite() {
            return Err(Error::IntegrationFailure { time: (i + 1) as f64 * h });
        }
        samples.push(next);
    }
    let monodromy_inverse = samples[steps].inverse()?;
    let mut fs = FundamentalSolution {
        system: system.clone(),
        steps,
        samples,
        monodromy_inverse,
        constants: Constants { lipschitz: 1.0, inverse_lipschitz: 1.0, bound: 1.0, two_period: 1.0 },
    };
    fs.constants = estimate_constants(&fs)?;
    Ok(fs)
}

/// Grid maxima of the relevant operator norms, each scaled by [`SAFETY_FACTOR`] and
/// clamped below by 1.
pub fn estimate_constants(fs: &FundamentalSolution) -> Result<Constants> {
    let n_steps = fs.steps as i64;
    let lipschitz = fs.samples.iter().map(Matrix::norm2).fold(0.0, f64::max);

    let mut bound = 0.0f64;
    let mut inverse_lipschitz = 0.0f64;
    let mut two_period = 0.0f64;
    let mut previous_inverse: Option<Matrix> = None;
    for j in -2 * n_steps..=2 * n_steps {
        let r = j as f64 / fs.steps as f64;
        let g = fs.evaluate_g(r);
        let g_inv = g.inverse()?;
        let g_norm = g.norm2();
        bound = bound.max(g_norm).max(g_inv.norm2());
        if j >= 0 {
            two_period = two_period.max(g_norm);
        }
        if let Some(prev) = &previous_inverse {
            inverse_lipschitz = inverse_lipschitz.max(g_inv.sub(prev).norm2() * fs.steps as f64);
        }
        previous_inverse = Some(g_inv);
    }
    let certify = |v: f64| (SAFETY_FACTOR * v).max(1.0);
    Ok(Constants {
        lipschitz: certify(lipschitz),
        inverse_lipschitz: certify(inverse_lipschitz),
        bound: certify(bound),
        two_period: certify(two_period),
    })
}

impl FundamentalSolution {
    pub fn system(&self) -> &PeriodicSystem {
        &self.system
    }

    pub fn dimension(&self) -> usize {
        self.system.dimension()
    }

    pub fn step_count(&self) -> usize {
        self.steps
    }

    /// Grid time `i / N`.
    pub fn grid_time(&self, i: usize) -> f64 {
        i as f64 / self.steps as f64
    }

    /// `g(tᵢ)` for `i = 0..=N`.
    pub fn samples(&self) -> &[Matrix] {
        &self.samples
    }

    /// `g = g(1)`.
    pub fn monodromy(&self) -> &Matrix {
        &self.samples[self.steps]
    }

    pub fn monodromy_inverse(&self) -> &Matrix {
        &self.monodromy_inverse
    }

    pub fn constants(&self) -> &Constants {
        &self.constants
    }

    /// `g(τ)` for `τ ∈ [0, 1)`: the grid sample, or one RK4 sub-step from the grid
    /// node below.
    fn within_period(&self, tau: f64) -> Matrix {
        let scaled = tau * self.steps as f64;
        let i = (libm::floor(scaled) as usize).min(self.steps);
        let t_i = self.grid_time(i);
        let h = tau - t_i;
        if h == 0.0 {
            self.samples[i].clone()
        } else {
            rk4_step(&self.system, t_i, h, &self.samples[i])
        }
    }

    /// `g(t)` for any real `t`, using `g(τ + m) = g(τ) gᵐ` with `τ ∈ [0, 1)`.
    pub fn evaluate_g(&self, t: f64) -> Matrix {
        let m = libm::floor(t);
        let tau = t - m;
        let base = self.within_period(tau);
        let m = m as i64;
        match m {
            0 => base,
            m if m > 0 => base.mul(&self.monodromy().pow(m as u64)),
            m => base.mul(&self.monodromy_inverse.pow(m.unsigned_abs())),
        }
    }

    /// `g(s)⁻¹` by direct inversion.
    pub fn inverse_g(&self, s: f64) -> Result<Matrix> {
        Ok(self.evaluate_g(s).inverse()?)
    }

    /// Integrates the shifted system `h' = X(t + s) h`, `h(0) = I`, up to time `-s`.
    ///
    /// `h(-s)` equals `g(s)⁻¹` in exact arithmetic.
    pub fn shifted_inverse(&self, s: f64) -> Matrix {
        let n = self.dimension();
        let count = ((s.abs() * self.steps as f64) as usize).max(16);
        let h = -s / count as f64;
        let mut acc = Matrix::identity(n);
        for i in 0..count {
            acc = rk4_step(&self.system, s + i as f64 * h, h, &acc);
        }
        acc
    }

    /// Max-entry discrepancy between [`Self::inverse_g`] and [`Self::shifted_inverse`].
    pub fn inverse_discrepancy(&self, s: f64) -> Result<f64> {
        Ok(self.inverse_g(s)?.sub(&self.shifted_inverse(s)).max_abs())
    }

    /// `x(t) = g(t) x`.
    pub fn solve_ivp(&self, x: &[f64], t: f64) -> Vec<f64> {
        self.evaluate_g(t).mul_vec(x)
    }

    /// Eigenvalues of the monodromy, by descending modulus, then real part, then
    /// imaginary part.
    pub fn floquet_multipliers(&self) -> Result<Vec<Complex64>> {
        let mut ev = self.monodromy().eigenvalues()?;
        ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(b.re.total_cmp(&a.re)).then(b.im.total_cmp(&a.im)));
        Ok(ev)
    }
}
