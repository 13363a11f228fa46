//! Periodic coefficient curves `t ↦ X(t)` for the linear system `x' = X(t) x`.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Named example systems. All have period 1 and dimension 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Builtin {
    /// `X = 0`, so the fundamental solution is the identity.
    Zero,
    /// `X = [[0, -ω], [ω, 0]]`; the monodromy is rotation by `ω`.
    Rotation { omega: f64 },
    /// `X = diag(λ, -λ)`.
    Hyperbolic { lambda: f64 },
    /// `x'' + (a + 2q cos 2πt) x = 0` written as a first order system.
    Mathieu { a: f64, q: f64 },
}

impl Builtin {
    pub fn name(&self) -> &'static str {
        match self {
            Builtin::Zero => "zero",
            Builtin::Rotation { .. } => "rotation",
            Builtin::Hyperbolic { .. } => "hyperbolic",
            Builtin::Mathieu { .. } => "mathieu",
        }
    }

    fn eval(&self, t: f64) -> Matrix {
        let entries = match *self {
            Builtin::Zero => [0.0, 0.0, 0.0, 0.0],
            Builtin::Rotation { omega } => [0.0, -omega, omega, 0.0],
            Builtin::Hyperbolic { lambda } => [lambda, 0.0, 0.0, -lambda],
            Builtin::Mathieu { a, q } => [0.0, 1.0, -(a + 2.0 * q * libm::cos(TAU * t)), 0.0],
        };
        Matrix::from_row_major(2, entries.to_vec()).expect("2x2 builtin")
    }

    fn parameters(&self) -> Vec<f64> {
        match *self {
            Builtin::Zero => Vec::new(),
            Builtin::Rotation { omega } => alloc::vec![omega],
            Builtin::Hyperbolic { lambda } => alloc::vec![lambda],
            Builtin::Mathieu { a, q } => alloc::vec![a, q],
        }
    }
}

impl core::fmt::Display for Builtin {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())?;
        let params = self.parameters();
        if !params.is_empty() {
            f.write_str("(")?;
            for (i, p) in params.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{p}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Constant(Matrix),
    /// `A₀ + Σₖ Aₖ cos(2πkt/T) + Bₖ sin(2πkt/T)`, `k = 1..`, with `T` the system period.
    Trig {
        a0: Matrix,
        cos: Vec<Matrix>,
        sin: Vec<Matrix>,
    },
    Builtin(Builtin),
    /// `factor · inner(factor · t)`; `inner_period` is the period `inner` was defined with.
    Rescaled {
        factor: f64,
        inner: Box<Coefficient>,
        inner_period: f64,
    },
}

impl Coefficient {
    fn eval(&self, t: f64, period: f64) -> Matrix {
        match self {
            Coefficient::Constant(m) => m.clone(),
            Coefficient::Trig { a0, cos, sin } => {
                let mut acc = a0.clone();
                for (k, (ak, bk)) in cos.iter().zip(sin).enumerate() {
                    let phase = TAU * (k + 1) as f64 * t / period;
                    acc = acc.add_scaled(libm::cos(phase), ak).add_scaled(libm::sin(phase), bk);
                }
                acc
            }
            Coefficient::Builtin(b) => b.eval(t),
            Coefficient::Rescaled { factor, inner, inner_period } => {
                inner.eval(factor * t, *inner_period).scale(*factor)
            }
        }
    }
}

/// A `T`-periodic linear system `x' = X(t) x` on `ℝⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSystem {
    dimension: usize,
    period: f64,
    coefficient: Coefficient,
}

impl PeriodicSystem {
    pub fn constant(matrix: Matrix, period: f64) -> Result<Self> {
        Self::new(matrix.dim(), period, Coefficient::Constant(matrix))
    }

    /// Truncated trigonometric series; `cos[k-1]`, `sin[k-1]` multiply the `k`-th harmonic.
    pub fn trig(a0: Matrix, cos: Vec<Matrix>, sin: Vec<Matrix>, period: f64) -> Result<Self> {
        if cos.len() != sin.len() {
            return Err(Error::InvalidSystem(format!("{} cosine terms but {} sine terms", cos.len(), sin.len())));
        }
        Self::new(a0.dim(), period, Coefficient::Trig { a0, cos, sin })
    }

    pub fn builtin(builtin: Builtin) -> Self {
        PeriodicSystem { dimension: 2, period: 1.0, coefficient: Coefficient::Builtin(builtin) }
    }

    pub fn new(dimension: usize, period: f64, coefficient: Coefficient) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidSystem("dimension must be positive".into()));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidSystem(format!("period must be positive, got {period}")));
        }
        let system = PeriodicSystem { dimension, period, coefficient };
        system.check_matrices()?;
        // sup-norm finiteness, asserted at sample points of one period
        for i in 0..=64 {
            let t = period * i as f64 / 64.0;
            if !system.coefficient_at(t).is_finite() {
                return Err(Error::InvalidSystem(format!("coefficient is not finite at t = {t}")));
            }
        }
        Ok(system)
    }

    fn check_matrices(&self) -> Result<()> {
        let n = self.dimension;
        let check = |m: &Matrix, what: &str| {
            if m.dim() != n {
                Err(Error::InvalidSystem(format!("{what} is {}x{0}, expected {n}x{n}", m.dim())))
            } else {
                Ok(())
            }
        };
        match &self.coefficient {
            Coefficient::Constant(m) => check(m, "constant coefficient"),
            Coefficient::Trig { a0, cos, sin } => {
                check(a0, "A0")?;
                for (k, m) in cos.iter().enumerate() {
                    check(m, &format!("A{}", k + 1))?;
                }
                for (k, m) in sin.iter().enumerate() {
                    check(m, &format!("B{}", k + 1))?;
                }
                Ok(())
            }
            Coefficient::Builtin(_) | Coefficient::Rescaled { .. } => {
                if n == 2 || !matches!(self.coefficient, Coefficient::Builtin(_)) {
                    Ok(())
                } else {
                    Err(Error::InvalidSystem("builtins are two-dimensional".into()))
                }
            }
        }
    }

    #[inline]
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    #[inline]
    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn coefficient(&self) -> &Coefficient {
        &self.coefficient
    }

    /// `X(t)`.
    pub fn coefficient_at(&self, t: f64) -> Matrix {
        self.coefficient.eval(t, self.period)
    }

    /// Largest induced 2-norm of `X(t)` over `samples + 1` equally spaced times of one period.
    pub fn coefficient_bound(&self, samples: usize) -> f64 {
        let samples = samples.max(1);
        (0..=samples).map(|i| self.coefficient_at(self.period * i as f64 / samples as f64).norm2()).fold(0.0, f64::max)
    }

    /// Equivalent period-1 system with coefficient `t ↦ T·X(T·t)`.
    ///
    /// Its fundamental solution `h` satisfies `h(t) = g(T·t)`, so `h(1) = g(T)`.
    pub fn normalize_period(&self) -> PeriodicSystem {
        let scale = self.period;
        if scale == 1.0 {
            return self.clone();
        }
        let coefficient = match &self.coefficient {
            Coefficient::Constant(m) => Coefficient::Constant(m.scale(scale)),
            Coefficient::Trig { a0, cos, sin } => Coefficient::Trig {
                a0: a0.scale(scale),
                cos: cos.iter().map(|m| m.scale(scale)).collect(),
                sin: sin.iter().map(|m| m.scale(scale)).collect(),
            },
            Coefficient::Rescaled { factor, inner, inner_period } => {
                Coefficient::Rescaled { factor: factor * scale, inner: inner.clone(), inner_period: *inner_period }
            }
            other => Coefficient::Rescaled { factor: scale, inner: Box::new(other.clone()), inner_period: self.period },
        };
        PeriodicSystem { dimension: self.dimension, period: 1.0, coefficient }
    }

    /// Short label used in reports.
    pub fn label(&self) -> alloc::string::String {
        match &self.coefficient {
            Coefficient::Builtin(b) => format!("{b}"),
            Coefficient::Constant(_) => format!("constant(n={}, T={})", self.dimension, self.period),
            Coefficient::Trig { cos, .. } => {
                format!("trig(n={}, K={}, T={})", self.dimension, cos.len(), self.period)
            }
            Coefficient::Rescaled { inner, .. } => match inner.as_ref() {
                Coefficient::Builtin(b) => format!("{b} (rescaled)"),
                _ => format!("rescaled(n={})", self.dimension),
            },
        }
    }
}
