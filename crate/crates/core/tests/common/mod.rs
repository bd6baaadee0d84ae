#![allow(dead_code)]

use hamrom::numkernel::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
    let a = random_matrix(rng, n, n);
    DenseMatrix::from_fn(n, n, |i, j| a[(i, j)] + a[(j, i)])
}

pub fn random_skew(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
    let a = random_matrix(rng, n, n);
    DenseMatrix::from_fn(n, n, |i, j| a[(i, j)] - a[(j, i)])
}

/// Orthonormal n×r matrix from QR of a random matrix (nalgebra, independent
/// of the crate's own kernels).
pub fn random_orthonormal(rng: &mut ChaCha8Rng, n: usize, r: usize) -> DenseMatrix {
    let a = nalgebra::DMatrix::from_fn(n, r, |_, _| rng.gen_range(-1.0..1.0));
    let q = a.qr().q();
    DenseMatrix::from_fn(n, r, |i, j| q[(i, j)])
}

pub fn to_nalgebra(m: &DenseMatrix) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

/// Singular values from nalgebra's bidiagonal SVD, descending.
pub fn oracle_singular_values(m: &DenseMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = to_nalgebra(m).svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Trajectory with the given recorded states and unit spacing in time.
pub fn trajectory_of(states: DenseMatrix) -> hamrom::integrate::Trajectory {
    let m = states.cols();
    hamrom::integrate::Trajectory {
        times: (0..m).map(|k| k as f64).collect(),
        states,
        energies: vec![0.0; m],
        steps_total: m.saturating_sub(1),
        max_picard_iterations: 0,
    }
}
