//! Dense linear algebra kernels.
//!
//! Everything here is sequential with a fixed reduction order, so identical
//! inputs always produce bit-identical outputs. Matrices are row-major `f64`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{GwError, Result};

/// Largest magnitude passed to `exp` by [`DenseMatrix::exp_map`].
pub const EXP_CLAMP: f64 = 700.0;

const SYMMETRY_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;
const POWER_MAX_ITER: usize = 10_000;
const POWER_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Wraps row-major `data`. Fails if the length does not match or any entry
    /// is not finite.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(GwError::Input(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(GwError::Input(format!("entry ({}, {}) is not finite", pos / cols.max(1), pos % cols.max(1))));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows; all rows must have equal length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(GwError::Input(format!("row {i} has {} entries, expected {cols}", r.len())));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 1.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { 0.0 })
    }

    /// Outer product `a bᵀ`.
    pub fn outer(a: &[f64], b: &[f64]) -> Self {
        Self::from_fn(a.len(), b.len(), |i, j| a[i] * b[j])
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

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols;
        &mut self.data[i * c..(i + 1) * c]
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        let c = self.cols;
        self.data[i * c + j] = v;
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    fn zip_with(&self, other: &Self, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_shape(other, op)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub(crate) fn check_same_shape(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(GwError::Shape { op, lhs: self.shape(), rhs: other.shape() });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    /// Matrix product. The inner reduction runs over `k` in increasing order
    /// for every output entry, so results are reproducible bit for bit.
    pub fn gemm(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(GwError::Shape { op: "gemm", lhs: self.shape(), rhs: other.shape() });
        }
        let (n, m) = (self.rows, other.cols);
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            let out_row = &mut out[i * m..(i + 1) * m];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(Self { rows: n, cols: m, data: out })
    }

    /// Entrywise product.
    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "hadamard", |a, b| a * b)
    }

    /// Entrywise `exp(a / scale)`. Arguments are clamped to
    /// `[-EXP_CLAMP, EXP_CLAMP]`; the returned flag is true when any clamp fired.
    pub fn exp_map(&self, scale: f64) -> Result<(Self, bool)> {
        if scale == 0.0 || !scale.is_finite() {
            return Err(GwError::Parameter(format!("exp_map scale must be finite and nonzero, got {scale}")));
        }
        let mut saturated = false;
        let data = self
            .data
            .iter()
            .map(|&v| {
                let arg = v / scale;
                let clamped = arg.clamp(-EXP_CLAMP, EXP_CLAMP);
                if clamped != arg {
                    saturated = true;
                }
                libm::exp(clamped)
            })
            .collect();
        Ok((Self { rows: self.rows, cols: self.cols, data }, saturated))
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, &v) in sums.iter_mut().zip(self.row(i)) {
                *s += v;
            }
        }
        sums
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Frobenius inner product `⟨A, B⟩ = Σ aᵢⱼ bᵢⱼ`.
    pub fn dot(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other, "dot")?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Largest `|aᵢⱼ − aⱼᵢ|`, or infinity for non-square input.
    pub fn asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn sym_eig(&self) -> Result<SymEigDecomposition> {
        sym_eig(self)
    }

    pub fn expm_neg_sym(&self) -> Result<Self> {
        expm_neg_sym(self)
    }

    pub fn spectral_norm(&self) -> f64 {
        spectral_norm(self)
    }
}

/// Eigen-decomposition `A = Q diag(λ) Qᵀ` of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEigDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in eigenvalue order.
    pub eigenvectors: DenseMatrix,
}

impl SymEigDecomposition {
    /// `Q diag(f(λ)) Qᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        let q = &self.eigenvectors;
        let n = q.rows();
        let fl: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut out = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for (k, &w) in fl.iter().enumerate() {
                    acc += q.get(i, k) * w * q.get(j, k);
                }
                out.set(i, j, acc);
                out.set(j, i, acc);
            }
        }
        out
    }
}

fn check_symmetric(a: &DenseMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(GwError::Input(format!("expected a square matrix, got {}x{}", a.rows(), a.cols())));
    }
    let tol = SYMMETRY_TOL * a.max_abs().max(1.0);
    let asym = a.asymmetry();
    if asym > tol {
        return Err(GwError::Input(format!("matrix is not symmetric (max |a_ij - a_ji| = {asym:e})")));
    }
    Ok(())
}

/// Cyclic Jacobi eigensolver.
///
/// Each sweep visits every `(p, q)` pair with `p < q` in row order and zeroes
/// `a_pq` with one plane rotation. Stops once the off-diagonal Frobenius mass
/// drops below `1e-15 · ‖A‖_F`.
pub fn sym_eig(a: &DenseMatrix) -> Result<SymEigDecomposition> {
    check_symmetric(a)?;
    let n = a.rows();
    // Work on the exactly symmetrized copy.
    let mut m = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (a.get(i, j) + a.get(j, i)));
    let mut v = DenseMatrix::identity(n);
    let total = m.frobenius_norm();
    let threshold = 1e-15 * total;

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += m.get(i, j) * m.get(i, j);
                }
            }
        }
        if libm::sqrt(off) <= threshold {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let tau = (m.get(q, q) - m.get(p, p)) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + libm::sqrt(1.0 + tau * tau))
                } else {
                    -1.0 / (-tau + libm::sqrt(1.0 + tau * tau))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = t * c;
                // A <- A J
                for k in 0..n {
                    let akp = m.get(k, p);
                    let akq = m.get(k, q);
                    m.set(k, p, c * akp - s * akq);
                    m.set(k, q, s * akp + c * akq);
                }
                // A <- Jᵀ A
                for k in 0..n {
                    let apk = m.get(p, k);
                    let aqk = m.get(q, k);
                    m.set(p, k, c * apk - s * aqk);
                    m.set(q, k, s * apk + c * aqk);
                }
                m.set(p, q, 0.0);
                m.set(q, p, 0.0);
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m.get(x, x).total_cmp(&m.get(y, y)).then(x.cmp(&y)));
    let eigenvalues = order.iter().map(|&k| m.get(k, k)).collect();
    let eigenvectors = DenseMatrix::from_fn(n, n, |i, j| v.get(i, order[j]));
    Ok(SymEigDecomposition { eigenvalues, eigenvectors })
}

/// `exp(−A)` for symmetric `A`, via the spectral decomposition.
pub fn expm_neg_sym(a: &DenseMatrix) -> Result<DenseMatrix> {
    let eig = sym_eig(a)?;
    Ok(eig.reconstruct_with(|l| libm::exp(-l)))
}

/// Largest singular value by power iteration on `AᵀA` from the all-ones vector.
pub fn spectral_norm(a: &DenseMatrix) -> f64 {
    if a.rows() == 0 || a.cols() == 0 || a.max_abs() == 0.0 {
        return 0.0;
    }
    let (n, m) = a.shape();
    let mut x = vec![1.0 / libm::sqrt(m as f64); m];
    let mut lambda = 0.0;
    for _ in 0..POWER_MAX_ITER {
        // y = A x, z = Aᵀ y
        let y: Vec<f64> = (0..n).map(|i| a.row(i).iter().zip(&x).map(|(p, q)| p * q).sum()).collect();
        let mut z = vec![0.0; m];
        for (i, &yi) in y.iter().enumerate() {
            for (zj, &aij) in z.iter_mut().zip(a.row(i)) {
                *zj += aij * yi;
            }
        }
        let norm = libm::sqrt(z.iter().map(|v| v * v).sum());
        if norm == 0.0 {
            return 0.0;
        }
        // Rayleigh quotient xᵀAᵀAx = ‖Ax‖² with ‖x‖ = 1.
        let next: f64 = y.iter().map(|v| v * v).sum();
        for (xj, zj) in x.iter_mut().zip(&z) {
            *xj = zj / norm;
        }
        let done = (next - lambda).abs() <= POWER_REL_TOL * next;
        lambda = next;
        if done {
            break;
        }
    }
    libm::sqrt(lambda)
}
