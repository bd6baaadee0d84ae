use super::matrix::{dot, DenseMatrix};
use crate::error::{invalid, Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues in descending order, eigenvectors as the matching columns.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

/// `YᵀY`. The lower triangle is copied from the upper one so the result is
/// exactly symmetric.
pub fn gram(y: &DenseMatrix) -> Result<DenseMatrix> {
    if y.rows() == 0 || y.cols() == 0 {
        return Err(invalid("gram of an empty matrix"));
    }
    let m = y.cols();
    let mut g = DenseMatrix::zeros(m, m);
    for k in 0..y.rows() {
        let row = y.row(k);
        for i in 0..m {
            let yi = row[i];
            if yi == 0.0 {
                continue;
            }
            let dst = &mut g.row_mut(i)[i..];
            for (d, &yj) in dst.iter_mut().zip(&row[i..]) {
                *d += yi * yj;
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            g[(i, j)] = g[(j, i)];
        }
    }
    Ok(g)
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
///
/// Sweeps until the largest off-diagonal magnitude is at most
/// `tol · ‖S‖_F`. Eigenpairs come back sorted by descending eigenvalue; the
/// sort is stable, so equal eigenvalues keep their rotation order.
pub fn sym_eig(s: &DenseMatrix, tol: f64) -> Result<EigenPairs> {
    if !s.is_square() {
        return Err(invalid(format!(
            "sym_eig needs a square matrix, got {}x{}",
            s.rows(),
            s.cols()
        )));
    }
    if !(tol > 0.0) {
        return Err(invalid("sym_eig tolerance must be positive"));
    }
    let n = s.rows();
    let scale = s.max_abs();
    if s.symmetry_defect() > 1e-12 * scale {
        return Err(invalid(format!(
            "matrix is not symmetric (defect {:e})",
            s.symmetry_defect()
        )));
    }

    let mut a = s.clone();
    // Rows of `vt` are the eigenvectors; row updates stay contiguous.
    let mut vt = DenseMatrix::identity(n);
    let threshold = tol * s.frobenius();

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if max_off_diagonal(&a) <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                rotate(&mut a, p, q, c, sn, t);
                rotate_rows(&mut vt, p, q, c, sn);
            }
        }
    }
    if !converged && max_off_diagonal(&a) > threshold {
        return Err(Error::NumericalFailure(format!(
            "Jacobi eigen-solver did not converge in {MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |row, col| vt[(order[col], row)]);
    Ok(EigenPairs { values, vectors })
}

fn max_off_diagonal(a: &DenseMatrix) -> f64 {
    let n = a.rows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max(a[(i, j)].abs());
        }
    }
    worst
}

// Two-sided rotation J(p,q)ᵀ A J(p,q) of a symmetric matrix, zeroing a_pq.
fn rotate(a: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64, t: f64) {
    let n = a.rows();
    let apq = a[(p, q)];
    a[(p, p)] -= t * apq;
    a[(q, q)] += t * apq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a[(p, k)];
        let akq = a[(q, k)];
        let new_p = c * akp - s * akq;
        let new_q = s * akp + c * akq;
        a[(p, k)] = new_p;
        a[(k, p)] = new_p;
        a[(q, k)] = new_q;
        a[(k, q)] = new_q;
    }
}

fn rotate_rows(m: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64) {
    let cols = m.cols();
    for k in 0..cols {
        let xp = m[(p, k)];
        let xq = m[(q, k)];
        m[(p, k)] = c * xp - s * xq;
        m[(q, k)] = s * xp + c * xq;
    }
}

/// Reconstructs `V Λ Vᵀ`.
pub fn reconstruct(pairs: &EigenPairs) -> DenseMatrix {
    let v = &pairs.vectors;
    let n = v.rows();
    DenseMatrix::from_fn(n, n, |i, j| {
        let scaled: Vec<f64> = (0..v.cols()).map(|k| v[(i, k)] * pairs.values[k]).collect();
        dot(&scaled, v.row(j))
    })
}
