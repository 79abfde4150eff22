//! Minimal dense and sparse linear algebra: row-major dense matrices with an
//! SPD Cholesky solve, compressed-row sparse matrices, and Jacobi-preconditioned
//! conjugate gradients.
//!
//! Symmetric sparse matrices are stored with both triangles so products need no
//! transpose logic. All types are immutable once built; the solves only read
//! shared state and can run concurrently.

use crate::{Error, Result};

/// Default relative-residual tolerance for [`cg_solve`].
pub const CG_TOL: f64 = 1e-10;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Dense { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Build from a slice of rows; all rows must have the same length.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Dense { rows: r, cols: c, data }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            y[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        y
    }

    /// y = A^T x without forming the transpose.
    pub fn tr_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "tr_matvec dimension mismatch");
        let mut y = vec![0.0; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for (yj, a) in y.iter_mut().zip(row) {
                *yj += a * xi;
            }
        }
        y
    }
}

/// Solve A x = b for symmetric positive definite A by Cholesky factorization.
///
/// Fails with [`Error::NotSpd`] on a non-positive pivot.
pub fn dense_solve_spd(a: &Dense, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows;
    if a.cols != n || b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "dense_solve_spd: matrix {}x{}, rhs length {}",
            a.rows,
            a.cols,
            b.len()
        )));
    }
    // Lower-triangular factor, stored dense.
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a.at(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return Err(Error::NotSpd);
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    // Forward then backward substitution.
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i * n + k] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[k * n + i] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    Ok(y)
}

/// Square sparse matrix in compressed-row form, column indices strictly
/// increasing within each row.
#[derive(Debug, Clone)]
pub struct Csr {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csr {
    pub fn identity(n: usize) -> Self {
        Csr {
            dim: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.col_idx[lo..hi].binary_search(&j) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// Sum of all entries, row by row.
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// self + alpha * other, entrywise union of the two sparsity patterns.
    pub fn add_scaled(&self, other: &Csr, alpha: f64) -> Result<Csr> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "add_scaled: {} vs {}",
                self.dim, other.dim
            )));
        }
        let n = self.dim;
        let mut builder = CsrBuilder::new(n);
        for i in 0..n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                builder.add(i, self.col_idx[k], self.values[k]);
            }
            for k in other.row_ptr[i]..other.row_ptr[i + 1] {
                builder.add(i, other.col_idx[k], alpha * other.values[k]);
            }
        }
        Ok(builder.build())
    }

    /// Extract the principal submatrix on `keep` (sorted, deduplicated rows/cols).
    pub fn restrict(&self, keep: &[usize]) -> Csr {
        let mut map = vec![usize::MAX; self.dim];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut builder = CsrBuilder::new(keep.len());
        for (new_i, &old_i) in keep.iter().enumerate() {
            for k in self.row_ptr[old_i]..self.row_ptr[old_i + 1] {
                let new_j = map[self.col_idx[k]];
                if new_j != usize::MAX {
                    builder.add(new_i, new_j, self.values[k]);
                }
            }
        }
        builder.build()
    }

    pub fn to_dense(&self) -> Dense {
        let mut d = Dense::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                d.set(i, self.col_idx[k], self.values[k]);
            }
        }
        d
    }
}

/// Triplet accumulator for assembling a [`Csr`]; duplicate entries are summed.
#[derive(Debug)]
pub struct CsrBuilder {
    dim: usize,
    triplets: Vec<(usize, usize, f64)>,
}

impl CsrBuilder {
    pub fn new(dim: usize) -> Self {
        CsrBuilder { dim, triplets: Vec::new() }
    }

    pub fn with_capacity(dim: usize, cap: usize) -> Self {
        CsrBuilder { dim, triplets: Vec::with_capacity(cap) }
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.dim && j < self.dim);
        self.triplets.push((i, j, v));
    }

    pub fn build(mut self) -> Csr {
        self.triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; self.dim + 1];
        let mut col_idx = Vec::with_capacity(self.triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.triplets.len());
        let mut last = None;
        for (i, j, v) in self.triplets {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..self.dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Csr { dim: self.dim, row_ptr, col_idx, values }
    }
}

/// Sparse matrix-vector product, summed in row order.
pub fn spmv(a: &Csr, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != a.dim {
        return Err(Error::DimensionMismatch(format!(
            "spmv: matrix dimension {}, vector length {}",
            a.dim,
            x.len()
        )));
    }
    let mut y = vec![0.0; a.dim];
    for i in 0..a.dim {
        let mut s = 0.0;
        for k in a.row_ptr[i]..a.row_ptr[i + 1] {
            s += a.values[k] * x[a.col_idx[k]];
        }
        y[i] = s;
    }
    Ok(y)
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// Jacobi-preconditioned conjugate gradients for SPD systems, starting from zero.
///
/// Returns x with relative residual ||b - Ax|| / ||b|| <= tol. Fails if an
/// entry of the diagonal vanishes or the iteration does not converge within
/// `max_iter` steps.
pub fn cg_solve(a: &Csr, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let x0 = vec![0.0; a.dim];
    cg_solve_from(a, b, x0, tol, max_iter)
}

/// Same as [`cg_solve`] but warm-started from `x0` (taken by value, refined in place).
pub fn cg_solve_from(
    a: &Csr,
    b: &[f64],
    mut x: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    if b.len() != a.dim || x.len() != a.dim {
        return Err(Error::DimensionMismatch(format!(
            "cg_solve: matrix dimension {}, rhs length {}",
            a.dim,
            b.len()
        )));
    }
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok(vec![0.0; a.dim]);
    }
    let mut inv_diag = a.diagonal();
    for (i, d) in inv_diag.iter_mut().enumerate() {
        if *d == 0.0 {
            return Err(Error::ZeroDiagonal(i));
        }
        *d = 1.0 / *d;
    }

    let ax = spmv(a, &x)?;
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
    let mut res = norm2(&r) / b_norm;
    if res <= tol {
        return Ok(x);
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);

    for _ in 0..max_iter {
        let q = spmv(a, &p)?;
        let pq = dot(&p, &q);
        if pq <= 0.0 {
            return Err(Error::NotSpd);
        }
        let alpha = rz / pq;
        for i in 0..a.dim {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        res = norm2(&r) / b_norm;
        if res <= tol {
            return Ok(x);
        }
        for i in 0..a.dim {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..a.dim {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::CgDidNotConverge { iterations: max_iter, residual: res })
}

/// Eigenvalues of a symmetric 2x2 matrix, ascending.
pub fn eigenvalues_sym2(m: &[[f64; 2]; 2]) -> [f64; 2] {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    [tr / 2.0 - disc, tr / 2.0 + disc]
}
