//! Small dense linear-algebra kernels: cyclic Jacobi for symmetric
//! eigenproblems, partial-pivot LU, and Gram-Schmidt orthonormalization.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};

/// Off-diagonal Frobenius tolerance, relative to the full Frobenius norm.
pub const JACOBI_TOLERANCE: f64 = 1e-14;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Pivot threshold relative to the largest entry of the pivot row.
pub const PIVOT_THRESHOLD: f64 = 1e-13;

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Eigenvalues sorted in descending order.
    pub values: Array1<f64>,
    /// Column `k` is the unit eigenvector of `values[k]`.
    pub vectors: Array2<f64>,
    pub sweeps: usize,
}

fn off_diagonal_norm(m: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[i * n + j] * m[i * n + j];
            }
        }
    }
    s.sqrt()
}

/// Rotates rows `p < q` of a row-major `n`-column buffer in place.
fn rotate_rows(buf: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = buf.split_at_mut(q * n);
    let rp = &mut head[p * n..(p + 1) * n];
    let rq = &mut tail[..n];
    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Cyclic Jacobi rotation method for a symmetric matrix.
///
/// Only the symmetric part of `a` is meaningful; the input is assumed
/// symmetric and is not checked beyond its shape.
pub fn symmetric_eigen(a: ArrayView2<f64>) -> Result<SymmetricEigen> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "symmetric_eigen (square matrix)",
            expected: n,
            found: a.ncols(),
        });
    }
    // row-major working copy; `vt` holds the eigenvectors as rows
    let mut m: Vec<f64> = a.iter().copied().collect();
    let mut vt = vec![0.0; n * n];
    for i in 0..n {
        vt[i * n + i] = 1.0;
    }
    let total = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = JACOBI_TOLERANCE * total;

    let mut sweeps = 0;
    let mut off = off_diagonal_norm(&m, n);
    while off > target {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                residual: off,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                rotate_rows(&mut m, n, p, q, c, s);
                m[p * n + p] = app - t * apq;
                m[q * n + q] = aqq + t * apq;
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    if k != p && k != q {
                        m[k * n + p] = m[p * n + k];
                        m[k * n + q] = m[q * n + k];
                    }
                }
                rotate_rows(&mut vt, n, p, q, c, s);
            }
        }
        off = off_diagonal_norm(&m, n);
    }

    // Stable sort keeps equal eigenvalues in their diagonal order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]));
    let values = Array1::from_iter(order.iter().map(|&i| m[i * n + i]));
    let vectors = Array2::from_shape_fn((n, n), |(r, k)| vt[order[k] * n + r]);
    Ok(SymmetricEigen {
        values,
        vectors,
        sweeps,
    })
}

/// LU factorization with partial (row) pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Array2<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: ArrayView2<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "LU factorization (square matrix)",
                expected: n,
                found: a.ncols(),
            });
        }
        let mut lu = a.to_owned();
        let mut perm: Vec<usize> = (0..n).collect();
        // Largest magnitude in each original row, used to scale the pivot test.
        let row_scale: Vec<f64> = a
            .rows()
            .into_iter()
            .map(|r| r.iter().fold(0.0f64, |m, x| m.max(x.abs())))
            .collect();

        for k in 0..n {
            let mut piv = k;
            let mut best = lu[[k, k]].abs();
            for i in (k + 1)..n {
                let val = lu[[i, k]].abs();
                if val > best {
                    best = val;
                    piv = i;
                }
            }
            let scale = row_scale[perm[piv]];
            if best == 0.0 || best < PIVOT_THRESHOLD * scale {
                return Err(Error::Singular {
                    column: k,
                    pivot: best,
                });
            }
            if piv != k {
                for j in 0..n {
                    lu.swap([k, j], [piv, j]);
                }
                perm.swap(k, piv);
            }
            let pivot = lu[[k, k]];
            for i in (k + 1)..n {
                let factor = lu[[i, k]] / pivot;
                lu[[i, k]] = factor;
                if factor != 0.0 {
                    for j in (k + 1)..n {
                        lu[[i, j]] -= factor * lu[[k, j]];
                    }
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Array1<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                context: "LU solve right-hand side",
                expected: n,
                found: b.len(),
            });
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[[i, j]] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[[i, j]] * x[j];
            }
            x[i] = s / self.lu[[i, i]];
        }
        Ok(Array1::from(x))
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: ArrayView2<f64>) -> Result<Array2<f64>> {
        let mut out = Array2::zeros(b.raw_dim());
        for (j, col) in b.columns().into_iter().enumerate() {
            let rhs: Vec<f64> = col.to_vec();
            out.column_mut(j).assign(&self.solve(&rhs)?);
        }
        Ok(out)
    }

    /// 1-norm condition number `‖A‖₁‖A⁻¹‖₁`, given the original matrix.
    pub fn condition_number(&self, a: ArrayView2<f64>) -> Result<f64> {
        let n = self.dim();
        let norm_a = one_norm(a);
        let mut norm_inv = 0.0f64;
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e)?;
            norm_inv = norm_inv.max(col.iter().map(|x| x.abs()).sum());
        }
        Ok(norm_a * norm_inv)
    }
}

pub fn one_norm(a: ArrayView2<f64>) -> f64 {
    a.columns()
        .into_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Orthonormalizes the columns of `q` in place with two passes of
/// modified Gram-Schmidt. Fails if a column collapses to zero.
pub fn gram_schmidt(q: &mut Array2<f64>) -> Result<()> {
    let ncols = q.ncols();
    for k in 0..ncols {
        for _pass in 0..2 {
            for j in 0..k {
                let proj = q.column(j).dot(&q.column(k));
                let qj = q.column(j).to_owned();
                q.column_mut(k).scaled_add(-proj, &qj);
            }
        }
        let norm = q.column(k).dot(&q.column(k)).sqrt();
        if !(norm > f64::MIN_POSITIVE) {
            return Err(Error::RankDeficient {
                requested: ncols,
                achievable: k,
            });
        }
        q.column_mut(k).mapv_inplace(|x| x / norm);
    }
    Ok(())
}
