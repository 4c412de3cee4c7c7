//! Dense linear algebra kept deliberately small: a row-major matrix type,
//! Cholesky factorization for symmetric positive definite solves, a cyclic
//! Jacobi eigensolver for symmetric matrices, and Gauss-Jordan inversion
//! for the tiny matrices used by metric tensors.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot} at column {col})")]
    NotPositiveDefinite { col: usize, pivot: f64 },
    #[error("Jacobi eigensolver did not converge within {max_sweeps} sweeps")]
    NoConvergence { max_sweeps: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(
            rows.iter().all(|row| row.len() == c),
            "ragged rows in matrix literal"
        );
        Mat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// X'X (cols × cols Gram matrix).
    pub fn gram(&self) -> Mat {
        let p = self.cols;
        let mut g = Mat::zeros(p, p);
        for i in 0..self.rows {
            let row = self.row(i);
            for a in 0..p {
                for b in a..p {
                    g[(a, b)] += row[a] * row[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                g[(a, b)] = g[(b, a)];
            }
        }
        g
    }

    /// X'y.
    pub fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows, "X'y length mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            let row = self.row(i);
            for (o, &x) in out.iter_mut().zip(row.iter()) {
                *o += x * yi;
            }
        }
        out
    }

    /// Xv.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "Xv length mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(a: &Mat) -> Result<Mat, LinalgError> {
    assert_eq!(a.rows, a.cols, "cholesky needs a square matrix");
    let n = a.rows;
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(LinalgError::NotPositiveDefinite { col: j, pivot: d });
        }
        let diag = d.sqrt();
        l[(j, j)] = diag;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / diag;
        }
    }
    Ok(l)
}

/// Solve A x = b given the Cholesky factor L of A.
pub fn chol_solve(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = l.rows;
    assert_eq!(b.len(), n);
    // forward: L z = b
    let mut z = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * z[k];
        }
        z[i] = s / l[(i, i)];
    }
    // backward: L' x = z
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Inverse of a symmetric positive definite matrix from its Cholesky factor.
pub fn chol_inverse(l: &Mat) -> Mat {
    let n = l.rows;
    let mut inv = Mat::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let x = chol_solve(l, &e);
        for i in 0..n {
            inv[(i, j)] = x[i];
        }
    }
    // symmetrize fp dust
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (inv[(i, j)] + inv[(j, i)]);
            inv[(i, j)] = v;
            inv[(j, i)] = v;
        }
    }
    inv
}

pub struct Eigen {
    /// Eigenvalues, one per column of `vectors`.
    pub values: Vec<f64>,
    /// Column-major orthonormal eigenvectors: `vectors[(i, k)]` is
    /// component i of the k-th eigenvector.
    pub vectors: Mat,
}

/// Cyclic Jacobi eigensolver for a symmetric matrix. Sweeps rotate every
/// off-diagonal pair until the largest off-diagonal magnitude falls below
/// `tol` or `max_sweeps` full sweeps have run.
pub fn jacobi_eigen(a: &Mat, tol: f64, max_sweeps: usize) -> Result<Eigen, LinalgError> {
    assert_eq!(a.rows, a.cols, "eigen needs a square matrix");
    let n = a.rows;
    let mut m = a.clone();
    let mut v = Mat::identity(n);
    for _ in 0..max_sweeps {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(m[(i, j)].abs());
            }
        }
        if off < tol {
            let values = (0..n).map(|i| m[(i, i)]).collect();
            return Ok(Eigen { values, vectors: v });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() < tol * 1e-3 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                // stable tangent of the rotation angle
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(LinalgError::NoConvergence { max_sweeps })
}

/// Index of the largest eigenvalue.
pub fn dominant_index(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Solve a square system by Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &Mat, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    assert_eq!(a.rows, a.cols);
    assert_eq!(b.len(), a.rows);
    let n = a.rows;
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let mut pivot_row = col;
        for r in (col + 1)..n {
            if m[(r, col)].abs() > m[(pivot_row, col)].abs() {
                pivot_row = r;
            }
        }
        if m[(pivot_row, col)].abs() == 0.0 {
            return Err(LinalgError::Singular);
        }
        if pivot_row != col {
            for k in col..n {
                let tmp = m[(col, k)];
                m[(col, k)] = m[(pivot_row, k)];
                m[(pivot_row, k)] = tmp;
            }
            rhs.swap(col, pivot_row);
        }
        for r in (col + 1)..n {
            let factor = m[(r, col)] / m[(col, col)];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                m[(r, k)] -= factor * m[(col, k)];
            }
            rhs[r] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for k in (i + 1)..n {
            s -= m[(i, k)] * x[k];
        }
        x[i] = s / m[(i, i)];
    }
    Ok(x)
}

/// Gauss-Jordan inverse with partial pivoting; meant for the small
/// matrices (2x2, 3x3, 4x4) that appear as metric tensors.
pub fn invert_small(a: &Mat, pivot_tol: f64) -> Result<Mat, LinalgError> {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut m = a.clone();
    let mut inv = Mat::identity(n);
    for col in 0..n {
        let mut pivot_row = col;
        for r in (col + 1)..n {
            if m[(r, col)].abs() > m[(pivot_row, col)].abs() {
                pivot_row = r;
            }
        }
        let pivot = m[(pivot_row, col)];
        if pivot.abs() <= pivot_tol || !pivot.is_finite() {
            return Err(LinalgError::Singular);
        }
        if pivot_row != col {
            for k in 0..n {
                let tmp = m[(col, k)];
                m[(col, k)] = m[(pivot_row, k)];
                m[(pivot_row, k)] = tmp;
                let tmp = inv[(col, k)];
                inv[(col, k)] = inv[(pivot_row, k)];
                inv[(pivot_row, k)] = tmp;
            }
        }
        let scale = 1.0 / m[(col, col)];
        for k in 0..n {
            m[(col, k)] *= scale;
            inv[(col, k)] *= scale;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = m[(r, col)];
            if factor == 0.0 {
                continue;
            }
            for k in 0..n {
                m[(r, k)] -= factor * m[(col, k)];
                inv[(r, k)] -= factor * inv[(col, k)];
            }
        }
    }
    Ok(inv)
}
