use log::warn;

use super::eig::{gram, sym_eig};
use super::matrix::{axpy, dot, norm2, DenseMatrix};
use crate::error::{invalid, Result};

/// Default relative cut-off for dropping singular values.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

const GRAM_EIG_TOL: f64 = 1e-14;
const POLISH_TOL: f64 = 1e-13;
const POLISH_MAX_SWEEPS: usize = 60;

/// Leading left singular vectors and singular values of a snapshot matrix.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    /// Orthonormal columns, one per retained singular value.
    pub phi: DenseMatrix,
    /// Retained singular values, descending.
    pub sigma: Vec<f64>,
    /// Set when the input had no nonzero entries; `phi` then has no columns.
    pub zero_input: bool,
}

impl ThinSvd {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }
}

/// Thin SVD by the method of snapshots.
///
/// The right singular vectors come from the eigen-decomposition of the small
/// Gram matrix `YᵀY`. The rotated snapshots `W = YV` are then polished with
/// one-sided Jacobi rotations, which recovers the small singular values to
/// the accuracy of `Y` itself instead of the square-root accuracy of the
/// Gram eigenvalues. A final modified Gram–Schmidt pass re-orthonormalizes
/// the retained columns.
///
/// Singular values below `rank_tol · σ₁` are dropped; at most `max_rank`
/// columns are kept. The basis is unique only up to rotations inside blocks
/// of equal singular values.
pub fn thin_svd_snapshots(y: &DenseMatrix, max_rank: usize, rank_tol: f64) -> Result<ThinSvd> {
    let limit = y.rows().min(y.cols());
    if max_rank > limit {
        return Err(invalid(format!(
            "max_rank {max_rank} exceeds min(rows, cols) = {limit}"
        )));
    }
    if y.max_abs() == 0.0 {
        warn!("snapshot matrix is identically zero; returning an empty basis");
        return Ok(ThinSvd {
            phi: DenseMatrix::zeros(y.rows(), 0),
            sigma: Vec::new(),
            zero_input: true,
        });
    }

    let eig = sym_eig(&gram(y)?, GRAM_EIG_TOL)?;
    // Columns of W = Y V, stored as rows for contiguous access.
    let v = &eig.vectors;
    let mut w: Vec<Vec<f64>> = (0..y.cols())
        .map(|j| {
            let vj = v.column(j);
            (0..y.rows()).map(|i| dot(y.row(i), &vj)).collect()
        })
        .collect();
    polish_columns(&mut w);

    let mut norms: Vec<(f64, usize)> = w.iter().enumerate().map(|(j, c)| (norm2(c), j)).collect();
    // Stable sort keeps the Gram ordering within ties.
    norms.sort_by(|a, b| b.0.total_cmp(&a.0));
    let sigma_max = norms[0].0;
    let kept: Vec<(f64, usize)> = norms
        .into_iter()
        .take_while(|&(s, _)| s > 0.0 && s >= rank_tol * sigma_max)
        .take(max_rank)
        .collect();

    let mut columns: Vec<Vec<f64>> = kept
        .iter()
        .map(|&(s, j)| w[j].iter().map(|x| x / s).collect())
        .collect();
    modified_gram_schmidt(&mut columns);

    let refs: Vec<&[f64]> = columns.iter().map(Vec::as_slice).collect();
    let phi = DenseMatrix::from_columns(y.rows(), &refs)?;
    Ok(ThinSvd {
        phi,
        sigma: kept.iter().map(|&(s, _)| s).collect(),
        zero_input: false,
    })
}

// One-sided (Hestenes) Jacobi: rotate column pairs until mutually orthogonal.
fn polish_columns(w: &mut [Vec<f64>]) {
    let m = w.len();
    let mut norms: Vec<f64> = w.iter().map(|c| dot(c, c)).collect();
    for _ in 0..POLISH_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..m {
            for q in p + 1..m {
                let (alpha, beta) = (norms[p], norms[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot(&w[p], &w[q]);
                if gamma.abs() <= POLISH_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = w.split_at_mut(q);
                let (cp, cq) = (&mut lo[p], &mut hi[0]);
                for (xp, xq) in cp.iter_mut().zip(cq.iter_mut()) {
                    let a = *xp;
                    let b = *xq;
                    *xp = c * a - s * b;
                    *xq = s * a + c * b;
                }
                norms[p] = dot(cp, cp);
                norms[q] = dot(cq, cq);
            }
        }
        if !rotated {
            return;
        }
    }
}

fn modified_gram_schmidt(columns: &mut [Vec<f64>]) {
    for j in 0..columns.len() {
        let (done, rest) = columns.split_at_mut(j);
        let cj = &mut rest[0];
        for prev in done.iter() {
            let proj = dot(prev, cj);
            axpy(-proj, prev, cj);
        }
        let nrm = norm2(cj);
        if nrm > 0.0 {
            cj.iter_mut().for_each(|x| *x /= nrm);
        }
    }
}
