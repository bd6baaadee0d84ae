use super::matrix::DenseMatrix;
use crate::error::{invalid, Error, Result};

/// Relative pivot threshold below which a matrix is treated as singular.
pub const PIVOT_TOL: f64 = 1e-14;

/// Partial-pivoting LU factorization `PA = LU`, reusable across solves.
///
/// The factors are kept row-compressed: banded operators with periodic
/// corners only fill in a few columns, so solves stay close to linear cost.
#[derive(Debug, Clone)]
pub struct LuFactor {
    n: usize,
    perm: Vec<usize>,
    // Strictly lower part of L (unit diagonal implied), per row.
    lower: Vec<Vec<(usize, f64)>>,
    // Strictly upper part of U, per row.
    upper: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
}

impl LuFactor {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(invalid(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let threshold = PIVOT_TOL * a.max_abs();
        let mut rows: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let (pivot_row, pivot_abs) = (k..n)
                .map(|i| (i, rows[i][k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pivot_abs > threshold) || pivot_abs == 0.0 {
                return Err(Error::SingularMatrix {
                    column: k,
                    pivot: pivot_abs,
                    threshold,
                });
            }
            rows.swap(k, pivot_row);
            perm.swap(k, pivot_row);

            let (head, tail) = rows.split_at_mut(k + 1);
            let pivot = &head[k];
            let inv = 1.0 / pivot[k];
            // Nonzero tail of the pivot row, collected once per column.
            let pivot_tail: Vec<(usize, f64)> = (k + 1..n)
                .filter(|&j| pivot[j] != 0.0)
                .map(|j| (j, pivot[j]))
                .collect();
            for row in tail.iter_mut() {
                let factor = row[k];
                if factor == 0.0 {
                    continue;
                }
                let l = factor * inv;
                row[k] = l;
                for &(j, u) in &pivot_tail {
                    row[j] -= l * u;
                }
            }
        }

        let mut lower = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n);
        let mut diag = Vec::with_capacity(n);
        for (i, row) in rows.iter().enumerate() {
            lower.push(
                row[..i]
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(j, &v)| (j, v))
                    .collect(),
            );
            diag.push(row[i]);
            upper.push(
                row[i + 1..]
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(j, &v)| (i + 1 + j, v))
                    .collect(),
            );
        }
        Ok(Self {
            n,
            perm,
            lower,
            upper,
            diag,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` for one right-hand side.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n, "rhs length mismatch");
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..self.n {
            let s: f64 = self.lower[i].iter().map(|&(j, l)| l * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..self.n).rev() {
            let s: f64 = self.upper[i].iter().map(|&(j, u)| u * x[j]).sum();
            x[i] = (x[i] - s) / self.diag[i];
        }
        x
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if rhs.rows() != self.n {
            return Err(invalid(format!(
                "rhs has {} rows, factorization has {}",
                rhs.rows(),
                self.n
            )));
        }
        let mut out = DenseMatrix::zeros(self.n, rhs.cols());
        for j in 0..rhs.cols() {
            out.set_column(j, &self.solve(&rhs.column(j)));
        }
        Ok(out)
    }
}

/// Factor-and-solve convenience for a single system with several right-hand sides.
pub fn lu_solve(a: &DenseMatrix, rhs: &DenseMatrix) -> Result<DenseMatrix> {
    LuFactor::new(a)?.solve_matrix(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_rhs() {
        let rhs = DenseMatrix::from_row_major(3, 1, vec![1.5, -2.0, 7.0]).unwrap();
        assert_eq!(lu_solve(&DenseMatrix::identity(3), &rhs).unwrap(), rhs);
    }

    #[test]
    fn diagonal_solve() {
        let a = DenseMatrix::from_diagonal(&[2.0, 4.0]);
        let rhs = DenseMatrix::from_row_major(2, 1, vec![2.0, 4.0]).unwrap();
        assert_eq!(lu_solve(&a, &rhs).unwrap().as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn needs_pivoting() {
        let a = DenseMatrix::from_row_major(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let x = LuFactor::new(&a).unwrap().solve(&[3.0, 5.0]);
        assert_eq!(x, vec![5.0, 3.0]);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = DenseMatrix::from_row_major(2, 2, vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(LuFactor::new(&a), Err(Error::SingularMatrix { column: 1, .. })));
        assert!(LuFactor::new(&DenseMatrix::zeros(2, 3)).is_err());
    }
}
