#![allow(dead_code)]

use burgers_rom::pde::{generate_snapshots, BurgersParams, Grid, SnapshotSet};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
}

pub fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| rng.random_range(-1.0..1.0))
}

/// Shipped problem: 1024 nodes on [0, 1], 300 snapshots up to t = 2.
pub struct Burgers {
    pub grid: Grid,
    pub params: BurgersParams,
    pub snapshots: SnapshotSet,
}

pub fn burgers() -> Burgers {
    let grid = Grid::new(1024, 1.0).unwrap();
    let params = BurgersParams::new(1000.0, 2.0, 300).unwrap();
    let snapshots = generate_snapshots(&grid, &params).unwrap();
    Burgers {
        grid,
        params,
        snapshots,
    }
}

/// One-sided (Hestenes) Jacobi SVD: orthogonalizes the columns of `a`
/// pairwise and returns the column norms sorted descending.
pub fn jacobi_singular_values(a: &Array2<f64>) -> Vec<f64> {
    let mut u = a.clone();
    let n = u.ncols();
    for _sweep in 0..200 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = u.column(p).iter().map(|v| v * v).sum();
                let beta: f64 = u.column(q).iter().map(|v| v * v).sum();
                let gamma: f64 = u.column(p).iter().zip(u.column(q)).map(|(x, y)| x * y).sum();
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..u.nrows() {
                    let up = u[[i, p]];
                    let uq = u[[i, q]];
                    u[[i, p]] = c * up - s * uq;
                    u[[i, q]] = s * up + c * uq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = u
        .columns()
        .into_iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// Gauss-Jordan inverse with partial pivoting, for small test matrices.
pub fn dense_inverse(a: &Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut inv = Array2::<f64>::eye(n);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[[i, col]].abs().partial_cmp(&m[[j, col]].abs()).unwrap())
            .unwrap();
        for k in 0..n {
            m.swap([col, k], [piv, k]);
            inv.swap([col, k], [piv, k]);
        }
        let d = m[[col, col]];
        assert!(d != 0.0, "singular test matrix");
        for k in 0..n {
            m[[col, k]] /= d;
            inv[[col, k]] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = m[[r, col]];
                for k in 0..n {
                    m[[r, k]] -= f * m[[col, k]];
                    inv[[r, k]] -= f * inv[[col, k]];
                }
            }
        }
    }
    inv
}

/// Naive triple loop.
pub fn matmul(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros((a.nrows(), b.ncols()));
    for i in 0..a.nrows() {
        for j in 0..b.ncols() {
            let mut s = 0.0;
            for k in 0..a.ncols() {
                s += a[[i, k]] * b[[k, j]];
            }
            out[[i, j]] = s;
        }
    }
    out
}

pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Brute-force `u · u_x` with central differences and zero boundary rows.
pub fn nonlinear_loop(u: &[f64], dx: f64) -> Vec<f64> {
    let n = u.len();
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        out[i] = u[i] * (u[i + 1] - u[i - 1]) / (2.0 * dx);
    }
    out
}
