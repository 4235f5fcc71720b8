use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{domain, Error, Result};

/// Pivots smaller than this in magnitude are treated as singular.
pub const PIVOT_THRESHOLD: f64 = 1e-14;

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: alloc::vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(domain("matrix must be square"));
        }
        Ok(Self { n, data: rows.iter().flatten().copied().collect() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Resets to the `n × n` zero matrix, reusing the allocation.
    pub fn reset(&mut self, n: usize) {
        self.n = n;
        self.data.clear();
        self.data.resize(n * n, 0.0);
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve_dense(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let mut lu = a.clone();
    let mut x = b.to_vec();
    solve_in_place(&mut lu, &mut x)?;
    Ok(x)
}

/// In-place variant of [`solve_dense`]: `a` is destroyed and `b` receives `x`.
pub fn solve_in_place(a: &mut DenseMatrix, b: &mut [f64]) -> Result<()> {
    let n = a.n;
    if b.len() != n {
        return Err(domain("right-hand side length does not match the matrix"));
    }
    if a.data.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("linear system entries must be finite".into()));
    }

    for col in 0..n {
        let (pivot_row, pivot) =
            (col..n)
                .map(|r| (r, a[(r, col)].abs()))
                .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot < PIVOT_THRESHOLD {
            return Err(Error::Singular { pivot, threshold: PIVOT_THRESHOLD });
        }
        if pivot_row != col {
            for j in 0..n {
                a.data.swap(col * n + j, pivot_row * n + j);
            }
            b.swap(col, pivot_row);
        }

        let diag = a[(col, col)];
        for r in col + 1..n {
            let factor = a[(r, col)] / diag;
            if factor == 0.0 {
                continue;
            }
            for j in col + 1..n {
                a[(r, j)] -= factor * a[(col, j)];
            }
            b[r] -= factor * b[col];
        }
    }

    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|j| a[(row, j)] * b[j]).sum();
        b[row] = (b[row] - tail) / a[(row, row)];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn residual(a: &DenseMatrix, x: &[f64], b: &[f64]) -> f64 {
        a.mul_vec(x).iter().zip(b).map(|(ax, b)| (ax - b).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn identity_returns_rhs() {
        let b = vec![1.5, -2.0, 3.25];
        assert_eq!(solve_dense(&DenseMatrix::identity(3), &b).unwrap(), b);
    }

    #[test]
    fn one_by_one_self_loop_system() {
        let a = DenseMatrix::from_rows(&[vec![0.8]]).unwrap();
        let x = solve_dense(&a, &[1.0]).unwrap();
        assert!((x[0] - 1.25).abs() < 1e-15);
    }

    #[test]
    fn hilbert_four_residual() {
        let rows: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| 1.0 / (i + j + 1) as f64).collect()).collect();
        let a = DenseMatrix::from_rows(&rows).unwrap();
        let x_true = [1.0, -2.0, 3.0, -4.0];
        let b = a.mul_vec(&x_true);
        let x = solve_dense(&a, &b).unwrap();
        let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        assert!(residual(&a, &x, &b) <= 1e-9 * scale);
        for (xi, ti) in x.iter().zip(x_true) {
            assert!((xi - ti).abs() < 1e-9);
        }
    }

    #[test]
    fn needs_pivoting() {
        let a = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(solve_dense(&a, &[2.0, 3.0]).unwrap(), vec![3.0, 2.0]);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(solve_dense(&a, &[1.0, 1.0]), Err(Error::Singular { .. })));
    }

    #[test]
    fn non_finite_and_shape_errors() {
        let a = DenseMatrix::from_rows(&[vec![f64::NAN]]).unwrap();
        assert!(matches!(solve_dense(&a, &[1.0]), Err(Error::NonFinite(_))));
        assert!(DenseMatrix::from_rows(&[vec![1.0, 2.0]]).is_err());
        assert!(solve_dense(&DenseMatrix::identity(2), &[1.0]).is_err());
    }

    #[test]
    fn random_diagonally_dominant_systems() {
        // Strict diagonal dominance by a factor of two keeps the condition number small.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..100 {
            let n = 1 + trial % 12;
            let mut a = DenseMatrix::zeros(n);
            for i in 0..n {
                let mut off = 0.0;
                for j in 0..n {
                    if i != j {
                        let v: f64 = rng.random_range(-1.0..1.0);
                        a[(i, j)] = v;
                        off += v.abs();
                    }
                }
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                a[(i, i)] = sign * (2.0 * off + 1.0);
            }
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
            let x = solve_dense(&a, &b).unwrap();
            let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            assert!(residual(&a, &x, &b) <= 1e-9 * scale, "trial {trial}");
        }
    }
}
