//! Dense square matrices over `f64` and the handful of factorizations the
//! rest of the crate needs: Gauss-Jordan inversion, induced 2-norm by power
//! iteration and real-Schur eigenvalues (Hessenberg reduction + shifted QR).

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;

/// Inverses whose 1-norm condition estimate exceeds this are rejected.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Relative tolerance of the power iteration used by [`Matrix::norm2`].
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Iteration cap of the power iteration used by [`Matrix::norm2`].
pub const NORM_MAX_ITERATIONS: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub enum LinalgError {
    /// Pivot vanished or the condition estimate exceeded [`CONDITION_LIMIT`].
    Singular {
        condition: f64,
    },
    /// Shifted QR failed to deflate within the iteration budget.
    EigenNoConvergence,
    DimensionMismatch {
        expected: usize,
        found: usize,
    },
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::Singular { condition } => {
                write!(f, "matrix is numerically singular (condition estimate {condition:e})")
            }
            LinalgError::EigenNoConvergence => f.write_str("eigenvalue iteration did not converge"),
            LinalgError::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
        }
    }
}

impl core::error::Error for LinalgError {}

/// Row-major dense `n x n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from a row-major buffer of length `n * n`.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != n * n {
            return Err(LinalgError::DimensionMismatch { expected: n * n, found: data.len() });
        }
        Ok(Matrix { n, data })
    }

    /// Builds a matrix from rows; every row must have as many entries as there are rows.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self, LinalgError> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(LinalgError::DimensionMismatch { expected: n, found: row.len() });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { n, data })
    }

    /// Planar rotation by `angle` radians.
    pub fn rotation(angle: f64) -> Self {
        let (s, c) = (libm::sin(angle), libm::cos(angle));
        Matrix { n: 2, data: vec![c, -s, s, c] }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn mul(&self, rhs: &Matrix) -> Matrix {
        debug_assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(self.n, x.len());
        (0..self.n).map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j];
            }
        }
        out
    }

    pub fn add(&self, rhs: &Matrix) -> Matrix {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Matrix) -> Matrix {
        self.zip_with(rhs, |a, b| a - b)
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        Matrix { n: self.n, data: self.data.iter().map(|v| v * factor).collect() }
    }

    /// `self + factor * rhs`
    pub fn add_scaled(&self, factor: f64, rhs: &Matrix) -> Matrix {
        self.zip_with(rhs, |a, b| a + factor * b)
    }

    fn zip_with(&self, rhs: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
        debug_assert_eq!(self.n, rhs.n);
        Matrix { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn norm1(&self) -> f64 {
        (0..self.n).map(|j| (0..self.n).map(|i| self.data[i * self.n + j].abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Induced 2-norm, computed by power iteration on `AᵀA`.
    pub fn norm2(&self) -> f64 {
        let n = self.n;
        if n == 0 || self.max_abs() == 0.0 {
            return 0.0;
        }
        let gram = self.transpose().mul(self);
        // slightly uneven start so no symmetric eigenvector is orthogonal to it by construction
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
        normalize_in_place(&mut v);
        let mut lambda = 0.0f64;
        for _ in 0..NORM_MAX_ITERATIONS {
            let mut w = gram.mul_vec(&v);
            let next = norm(&w);
            if next == 0.0 {
                break;
            }
            w.iter_mut().for_each(|c| *c /= next);
            v = w;
            let done = (next - lambda).abs() <= NORM_TOLERANCE * next;
            lambda = next;
            if done {
                break;
            }
        }
        libm::sqrt(lambda)
    }

    /// Gauss-Jordan inverse with partial pivoting.
    ///
    /// Fails when a pivot vanishes or when `‖A‖₁‖A⁻¹‖₁` exceeds [`CONDITION_LIMIT`].
    pub fn inverse(&self) -> Result<Matrix, LinalgError> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut inv = Matrix::identity(n).data;
        for col in 0..n {
            let pivot_row =
                (col..n).max_by(|&r, &s| a[r * n + col].abs().total_cmp(&a[s * n + col].abs())).unwrap_or(col);
            let pivot = a[pivot_row * n + col];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(LinalgError::Singular { condition: f64::INFINITY });
            }
            if pivot_row != col {
                for j in 0..n {
                    a.swap(pivot_row * n + j, col * n + j);
                    inv.swap(pivot_row * n + j, col * n + j);
                }
            }
            let scale = 1.0 / pivot;
            for j in 0..n {
                a[col * n + j] *= scale;
                inv[col * n + j] *= scale;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a[r * n + col];
                if factor == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a[r * n + j] -= factor * a[col * n + j];
                    inv[r * n + j] -= factor * inv[col * n + j];
                }
            }
        }
        let inv = Matrix { n, data: inv };
        let condition = self.norm1() * inv.norm1();
        if !(condition <= CONDITION_LIMIT) {
            return Err(LinalgError::Singular { condition });
        }
        Ok(inv)
    }

    /// Integer power by repeated squaring; `p = 0` gives the identity.
    pub fn pow(&self, mut p: u64) -> Matrix {
        let mut base = self.clone();
        let mut acc = Matrix::identity(self.n);
        while p > 0 {
            if p & 1 == 1 {
                acc = acc.mul(&base);
            }
            p >>= 1;
            if p > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// All eigenvalues (unordered), via Hessenberg reduction and Francis double-shift QR.
    pub fn eigenvalues(&self) -> Result<Vec<Complex64>, LinalgError> {
        let n = self.n;
        if n == 0 {
            return Ok(Vec::new());
        }
        // 1-based working copy keeps the classical indexing of the algorithm readable.
        let mut a = vec![vec![0.0; n + 1]; n + 1];
        for i in 0..n {
            for j in 0..n {
                a[i + 1][j + 1] = self.data[i * n + j];
            }
        }
        reduce_hessenberg(&mut a, n);
        for i in 1..=n {
            for j in 1..i.saturating_sub(1) {
                a[i][j] = 0.0;
            }
        }
        let (wr, wi) = hessenberg_qr(&mut a, n)?;
        Ok((1..=n).map(|i| Complex64::new(wr[i], wi[i])).collect())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Euclidean norm.
pub fn norm(x: &[f64]) -> f64 {
    libm::sqrt(x.iter().map(|v| v * v).sum())
}

/// Euclidean distance.
pub fn distance(x: &[f64], y: &[f64]) -> f64 {
    libm::sqrt(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum())
}

pub fn normalize_in_place(x: &mut [f64]) {
    let len = norm(x);
    if len > 0.0 {
        x.iter_mut().for_each(|c| *c /= len);
    }
}

fn reduce_hessenberg(a: &mut [Vec<f64>], n: usize) {
    for m in 2..n {
        let mut x = 0.0f64;
        let mut i = m;
        for j in m..=n {
            if a[j][m - 1].abs() > x.abs() {
                x = a[j][m - 1];
                i = j;
            }
        }
        if i != m {
            for j in (m - 1)..=n {
                let t = a[i][j];
                a[i][j] = a[m][j];
                a[m][j] = t;
            }
            for row in a.iter_mut().take(n + 1).skip(1) {
                row.swap(i, m);
            }
        }
        if x != 0.0 {
            for i in (m + 1)..=n {
                let mut y = a[i][m - 1];
                if y != 0.0 {
                    y /= x;
                    a[i][m - 1] = y;
                    for j in m..=n {
                        a[i][j] -= y * a[m][j];
                    }
                    for j in 1..=n {
                        a[j][m] += y * a[j][i];
                    }
                }
            }
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

#[allow(clippy::many_single_char_names)]
fn hessenberg_qr(a: &mut [Vec<f64>], n: usize) -> Result<(Vec<f64>, Vec<f64>), LinalgError> {
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];
    let mut anorm = 0.0;
    for i in 1..=n {
        for j in i.saturating_sub(1).max(1)..=n {
            anorm += a[i][j].abs();
        }
    }
    let mut nn = n;
    let mut t = 0.0;
    while nn >= 1 {
        let mut its = 0;
        loop {
            let mut l = 1;
            for ll in (2..=nn).rev() {
                let mut s = a[ll - 1][ll - 1].abs() + a[ll][ll].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[ll][ll - 1].abs() + s == s {
                    a[ll][ll - 1] = 0.0;
                    l = ll;
                    break;
                }
            }
            let mut x = a[nn][nn];
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = a[nn - 1][nn - 1];
            let mut w = a[nn][nn - 1] * a[nn - 1][nn];
            if l == nn - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let mut z = libm::sqrt(q.abs());
                x += t;
                if q >= 0.0 {
                    z = p + sign(z, p);
                    wr[nn - 1] = x + z;
                    wr[nn] = x + z;
                    if z != 0.0 {
                        wr[nn] = x - w / z;
                    }
                    wi[nn - 1] = 0.0;
                    wi[nn] = 0.0;
                } else {
                    wr[nn - 1] = x + p;
                    wr[nn] = x + p;
                    wi[nn - 1] = -z;
                    wi[nn] = z;
                }
                nn = nn.saturating_sub(2);
                break;
            }
            if its == 60 {
                return Err(LinalgError::EigenNoConvergence);
            }
            if its == 10 || its == 20 {
                t += x;
                for i in 1..=nn {
                    a[i][i] -= x;
                }
                let s = a[nn][nn - 1].abs() + a[nn - 1][nn - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            let (mut p, mut q, mut r);
            let mut m = nn - 2;
            loop {
                let z = a[m][m];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - z - rr - ss;
                r = a[m + 2][m + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nn {
                a[i][i - 2] = 0.0;
                if i != m + 2 {
                    a[i][i - 3] = 0.0;
                }
            }
            let mut k = m;
            while k < nn {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = 0.0;
                    if k != nn - 1 {
                        r = a[k + 2][k - 1];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign(libm::sqrt(p * p + q * q + r * r), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[k][k - 1] = -a[k][k - 1];
                        }
                    } else {
                        a[k][k - 1] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        let mut pp = a[k][j] + q * a[k + 1][j];
                        if k != nn - 1 {
                            pp += r * a[k + 2][j];
                            a[k + 2][j] -= pp * z;
                        }
                        a[k + 1][j] -= pp * y;
                        a[k][j] -= pp * x;
                    }
                    let mmin = if nn < k + 3 { nn } else { k + 3 };
                    for i in l..=mmin {
                        let mut pp = x * a[i][k] + y * a[i][k + 1];
                        if k != nn - 1 {
                            pp += z * a[i][k + 2];
                            a[i][k + 2] -= pp * r;
                        }
                        a[i][k + 1] -= pp * q;
                        a[i][k] -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    Ok((wr, wi))
}
