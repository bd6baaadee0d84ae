//! Semi-discrete Hamiltonian systems on periodic 1D grids.
//!
//! Wave states are stacked `(u, v)` with the first `n` entries holding `u`
//! and the last `n` holding `v = u̇`.

mod flow;

pub use flow::{EnergyForm, PolyGradFlow, Quadratic, StructureTag, SymTensor3};

use crate::error::{invalid, Result};
use crate::numkernel::DenseMatrix;

/// Uniform periodic grid with `n` points `xᵢ = origin + i·dx`, `i = 1..=n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec1D {
    n: usize,
    length: f64,
    origin: f64,
    dx: f64,
}

impl GridSpec1D {
    pub fn new(n: usize, length: f64, origin: f64) -> Result<Self> {
        if n < 3 {
            return Err(invalid(format!("grid needs at least 3 points, got {n}")));
        }
        if !(length > 0.0) || !length.is_finite() || !origin.is_finite() {
            return Err(invalid(format!("invalid grid extent {length} at {origin}")));
        }
        Ok(Self {
            n,
            length,
            origin,
            dx: length / n as f64,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn points(&self) -> Vec<f64> {
        (1..=self.n).map(|i| self.origin + i as f64 * self.dx).collect()
    }
}

/// Periodic central first-derivative matrix, entries `±1/(2dx)`.
pub fn central_diff_matrix(grid: &GridSpec1D) -> DenseMatrix {
    let n = grid.n();
    let h = 1.0 / (2.0 * grid.dx());
    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, (i + 1) % n)] = h;
        a[(i, (i + n - 1) % n)] = -h;
    }
    a
}

/// Periodic three-point Laplacian scaled by `scale`: diagonal
/// `−2·scale/dx²`, neighbours `scale/dx²`.
pub fn laplacian_matrix(grid: &GridSpec1D, scale: f64) -> DenseMatrix {
    let n = grid.n();
    let off = scale / (grid.dx() * grid.dx());
    let mut b = DenseMatrix::zeros(n, n);
    for i in 0..n {
        b[(i, i)] = -2.0 * off;
        b[(i, (i + 1) % n)] = off;
        b[(i, (i + n - 1) % n)] = off;
    }
    b
}

/// Linear wave `u_tt = c² u_xx` as a canonical Hamiltonian system on `(u, v)`.
pub fn build_wave_fom(c: f64, grid: &GridSpec1D) -> Result<PolyGradFlow> {
    if !(c > 0.0) {
        return Err(invalid(format!("wave speed must be positive, got {c}")));
    }
    let n = grid.n();
    let a_wave = laplacian_matrix(grid, c * c);
    let mut s = DenseMatrix::zeros(2 * n, 2 * n);
    let mut g1 = DenseMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        s[(i, n + i)] = 1.0;
        s[(n + i, i)] = -1.0;
        g1[(n + i, n + i)] = 1.0;
        for j in 0..n {
            g1[(i, j)] = -a_wave[(i, j)];
        }
    }
    PolyGradFlow::new(
        s,
        None,
        g1,
        None,
        Some(EnergyForm::Wave { n, c, dx: grid.dx() }),
        StructureTag::Skew,
        Some(vec![0..n, n..2 * n]),
    )
}

/// KdV `u_t = ∂ₓ(α/2 u² + ρu + ν u_xx)` with periodic central differences.
pub fn build_kdv_fom(alpha: f64, rho: f64, nu: f64, grid: &GridSpec1D) -> Result<PolyGradFlow> {
    let n = grid.n();
    let s = central_diff_matrix(grid);
    let mut g1 = laplacian_matrix(grid, nu);
    for i in 0..n {
        g1[(i, i)] += rho;
    }
    let g2 = (alpha != 0.0).then(|| Quadratic::Diagonal(vec![alpha / 2.0; n]));
    PolyGradFlow::new(
        s,
        None,
        g1,
        g2,
        Some(EnergyForm::Kdv {
            alpha,
            rho,
            nu,
            dx: grid.dx(),
        }),
        StructureTag::Skew,
        None,
    )
}

/// Compactly supported cubic spline bump used as the wave's initial profile.
pub fn cubic_spline_bump(s: f64) -> f64 {
    if s <= 1.0 {
        1.0 - 1.5 * s * s + 0.75 * s * s * s
    } else if s <= 2.0 {
        0.25 * (2.0 - s).powi(3)
    } else {
        0.0
    }
}

/// Stacked `(u₀, v₀)` with `u₀ᵢ = h(10|xᵢ − ½|)` and `v₀ = 0`.
pub fn wave_initial(grid: &GridSpec1D) -> Vec<f64> {
    let n = grid.n();
    let mut state = vec![0.0; 2 * n];
    for (slot, x) in state.iter_mut().zip(grid.points()) {
        *slot = cubic_spline_bump(10.0 * (x - 0.5).abs());
    }
    state
}

/// `u₀ᵢ = sech²(xᵢ/√2)`.
pub fn kdv_initial(grid: &GridSpec1D) -> Vec<f64> {
    grid.points()
        .into_iter()
        .map(|x| {
            let sech = 1.0 / (x / std::f64::consts::SQRT_2).cosh();
            sech * sech
        })
        .collect()
}
