//! Dense linear algebra, activations and the deterministic random source
//! shared by every model in the crate.
//!
//! Everything is `f64`. The matrix type is deliberately small: row-major
//! storage, a handful of products, and a one-sided Jacobi SVD used for the
//! least-squares solve behind the extreme learning machine.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Exponent arguments beyond this magnitude already saturate `exp` to
/// 0 or a value whose reciprocal rounds to 1 in double precision.
const SIGMOID_CLAMP: f64 = 500.0;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ShapeError {
    #[error("cannot multiply {left_rows}x{left_cols} by {right_rows}x{right_cols}")]
    Product {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("{what}: expected length {expected}, got {actual}")]
    Length {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("matrix of {rows}x{cols} needs {expected} values, got {actual}")]
    Storage {
        rows: usize,
        cols: usize,
        expected: usize,
        actual: usize,
    },
    #[error("matrix dimensions must be positive, got {rows}x{cols}")]
    Empty { rows: usize, cols: usize },
}

/// Checks a slice length against an expectation.
pub(crate) fn expect_len(what: &'static str, expected: usize, actual: usize) -> Result<(), ShapeError> {
    if expected == actual {
        Ok(())
    } else {
        Err(ShapeError::Length { what, expected, actual })
    }
}

/// Row-major dense matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, ShapeError> {
        if rows == 0 || cols == 0 {
            return Err(ShapeError::Empty { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(ShapeError::Storage { rows, cols, expected: rows * cols, actual: data.len() });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ShapeError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            expect_len("matrix row", cols, row.len())?;
            data.extend_from_slice(row);
        }
        Matrix::from_vec(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, ShapeError> {
        if self.cols != other.rows {
            return Err(ShapeError::Product {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self · x` for a column vector `x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, ShapeError> {
        expect_len("matvec operand", self.cols, x.len())?;
        Ok((0..self.rows).map(|r| dot(self.row(r), x)).collect())
    }

    /// Adds `self · x` into `out` without allocating.
    pub(crate) fn matvec_acc(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            *o += dot(self.row(r), x);
        }
    }

    /// Adds `selfᵀ · y` into `out`.
    pub(crate) fn matvec_t_acc(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (r, &yr) in y.iter().enumerate() {
            for (o, &w) in out.iter_mut().zip(self.row(r)) {
                *o += w * yr;
            }
        }
    }

    /// Adds the outer product `u vᵀ` into `self`.
    pub(crate) fn add_outer(&mut self, u: &[f64], v: &[f64]) {
        debug_assert_eq!(u.len(), self.rows);
        debug_assert_eq!(v.len(), self.cols);
        let cols = self.cols;
        for (r, &ur) in u.iter().enumerate() {
            for (m, &vc) in self.data[r * cols..(r + 1) * cols].iter_mut().zip(v) {
                *m += ur * vc;
            }
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            if r > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

/// Free-function form of [`Matrix::matmul`].
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix, ShapeError> {
    a.matmul(b)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Logistic function `1 / (1 + exp(-alpha * y))` with the exponent clamped.
#[inline]
pub fn sigmoid_alpha(y: f64, alpha: f64) -> f64 {
    debug_assert!(alpha > 0.0);
    let z = (alpha * y).clamp(-SIGMOID_CLAMP, SIGMOID_CLAMP);
    1.0 / (1.0 + (-z).exp())
}

/// Logistic function with unit slope, the only slope the models use.
#[inline]
pub fn sigmoid(y: f64) -> f64 {
    sigmoid_alpha(y, 1.0)
}

#[inline]
pub fn tanh_act(y: f64) -> f64 {
    y.tanh()
}

/// Deterministic generator: xoshiro256** seeded through SplitMix64.
///
/// Both algorithms are fixed here (not delegated to a crate) so that a given
/// seed yields the same stream on every platform and across releases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeededRng {
    seed: u64,
    state: [u64; 4],
}

fn splitmix64(x: &mut u64) -> u64 {
    *x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let state = [splitmix64(&mut sm), splitmix64(&mut sm), splitmix64(&mut sm), splitmix64(&mut sm)];
        SeededRng { seed, state }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        debug_assert!(lo < hi);
        let v = lo + (hi - lo) * self.next_f64();
        // lo + (hi - lo) * u can round up to hi when the interval is tiny.
        if v >= hi {
            lo
        } else {
            v
        }
    }

    /// Standard normal draw (Box-Muller, one value per call).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn fill_uniform(&mut self, out: &mut [f64], lo: f64, hi: f64) {
        for v in out {
            *v = self.uniform(lo, hi);
        }
    }
}

/// Matrix of i.i.d. uniform entries on `[lo, hi)`, filled row by row.
pub fn uniform_matrix(rng: &mut SeededRng, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    rng.fill_uniform(m.as_mut_slice(), lo, hi);
    m
}

/// Thin singular value decomposition `A = U diag(s) Vᵀ`.
///
/// For an `m x n` input, `u` is `m x n`, `s` has `n` entries and `v` is
/// `n x n`. Columns belonging to zero singular values are left as zero in `u`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v: Matrix,
}

/// One-sided (Hestenes) Jacobi SVD. Accurate to working precision for the
/// small, possibly rank-deficient matrices used in this crate.
pub fn svd(a: &Matrix) -> Svd {
    let (m, n) = a.shape();
    // Work on columns: store Aᵀ so each column of A is a contiguous row.
    let mut work = a.transpose();
    let mut v = Matrix::identity(n);
    let tol = f64::EPSILON;

    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let cp = work.row(p);
                    let cq = work.row(q);
                    (dot(cp, cp), dot(cq, cq), dot(cp, cq))
                };
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_rows(&mut work, p, q, c, s);
                rotate_rows(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut singular_values = vec![0.0; n];
    let mut u = Matrix::zeros(m, n);
    for j in 0..n {
        let norm = dot(work.row(j), work.row(j)).sqrt();
        singular_values[j] = norm;
        if norm > 0.0 {
            for i in 0..m {
                u[(i, j)] = work[(j, i)] / norm;
            }
        }
    }
    // v holds Vᵀ row-wise after the rotations; transpose to get V.
    Svd { u, singular_values, v: v.transpose() }
}

fn rotate_rows(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let cols = m.cols;
    for k in 0..cols {
        let a = m.data[p * cols + k];
        let b = m.data[q * cols + k];
        m.data[p * cols + k] = c * a - s * b;
        m.data[q * cols + k] = s * a + c * b;
    }
}

/// Minimum-norm least-squares solution of `A x ≈ b` via the pseudo-inverse.
///
/// Singular values below `max(m, n) · ε · σ_max` are treated as zero.
pub fn lstsq(a: &Matrix, b: &[f64]) -> Result<Vec<f64>, ShapeError> {
    expect_len("least-squares right-hand side", a.rows(), b.len())?;
    let decomposition = svd(a);
    let n = a.cols();
    let sigma_max = decomposition.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = a.rows().max(n) as f64 * f64::EPSILON * sigma_max;
    let mut x = vec![0.0; n];
    for j in 0..n {
        let sigma = decomposition.singular_values[j];
        if sigma <= cutoff || sigma == 0.0 {
            continue;
        }
        let coeff = dot(&decomposition.u.column(j), b) / sigma;
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += coeff * decomposition.v[(i, j)];
        }
    }
    Ok(x)
}
