//! Small dense linear algebra: row-pivoted LU with a 1-norm condition estimate and
//! a cyclic Jacobi eigensolver. Matrices here are at most ~25x25 (basis sizes up to
//! p = 25), so O(n³) with explicit inverses is cheap and keeps behavior transparent.

use crate::{Error, Result};

/// Row-major dense square matrix view used internally.
fn norm1(a: &[f64], n: usize) -> f64 {
    (0..n)
        .map(|j| (0..n).map(|i| a[i * n + j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// LU factorization with partial pivoting, factored once and reused across steps.
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
    cond1: f64,
}

impl LuFactors {
    /// Factor a row-major n x n matrix. Fails when a pivot vanishes or the 1-norm
    /// condition estimate exceeds `cond_limit`.
    pub fn factor(a: &[f64], n: usize, what: &'static str, cond_limit: f64) -> Result<LuFactors> {
        assert_eq!(a.len(), n * n);
        let a1 = norm1(a, n);
        let mut lu = a.to_vec();
        let mut piv: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let mut pr = col;
            let mut pmax = lu[col * n + col].abs();
            for r in col + 1..n {
                let v = lu[r * n + col].abs();
                if v > pmax {
                    pmax = v;
                    pr = r;
                }
            }
            if pmax == 0.0 {
                return Err(Error::IllConditioned { what, cond: f64::INFINITY });
            }
            if pr != col {
                for j in 0..n {
                    lu.swap(col * n + j, pr * n + j);
                }
                piv.swap(col, pr);
            }
            let d = lu[col * n + col];
            for r in col + 1..n {
                let m = lu[r * n + col] / d;
                lu[r * n + col] = m;
                for j in col + 1..n {
                    lu[r * n + j] -= m * lu[col * n + j];
                }
            }
        }
        let mut f = LuFactors { n, lu, piv, cond1: 0.0 };
        // Condition estimate from the explicit inverse; n is small enough that the
        // extra n solves cost nothing compared to the study loops.
        let mut inv_norm: f64 = 0.0;
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.fill(0.0);
            e[j] = 1.0;
            let x = f.solve(&e);
            inv_norm = inv_norm.max(x.iter().map(|v| v.abs()).sum::<f64>());
        }
        f.cond1 = a1 * inv_norm;
        if !f.cond1.is_finite() || f.cond1 > cond_limit {
            return Err(Error::IllConditioned { what, cond: f.cond1 });
        }
        Ok(f)
    }

    /// 1-norm condition estimate of the factored matrix.
    pub fn cond(&self) -> f64 {
        self.cond1
    }

    /// Solve A x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.piv.iter().map(|&r| b[r]).collect();
        for i in 1..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix (row-major, n x n).
///
/// Returns eigenvalues ascending and the matching eigenvectors as rows of the
/// second vector (eigenvector `j` occupies `vecs[j*n..(j+1)*n]`). Off-diagonal
/// sweep tolerance is `1e-12 * max|diag|`, tight enough that eigen-residuals stay
/// below 1e-10·‖G‖ for every Gram matrix in the studies.
pub fn jacobi_eigh(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let max_diag = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let tol = 1e-12 * max_diag;
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(m[p * n + q].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() <= tol * 1e-4 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for j in 0..n {
                    let mpj = m[p * n + j];
                    let mqj = m[q * n + j];
                    m[p * n + j] = c * mpj - s * mqj;
                    m[q * n + j] = s * mpj + c * mqj;
                }
                for i in 0..n {
                    let mip = m[i * n + p];
                    let miq = m[i * n + q];
                    m[i * n + p] = c * mip - s * miq;
                    m[i * n + q] = s * mip + c * miq;
                }
                for j in 0..n {
                    let vpj = v[p * n + j];
                    let vqj = v[q * n + j];
                    v[p * n + j] = c * vpj - s * vqj;
                    v[q * n + j] = s * vpj + c * vqj;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].partial_cmp(&m[j * n + j]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vecs = vec![0.0; n * n];
    for (row, &i) in order.iter().enumerate() {
        vecs[row * n..(row + 1) * n].copy_from_slice(&v[i * n..(i + 1) * n]);
    }
    (vals, vecs)
}
