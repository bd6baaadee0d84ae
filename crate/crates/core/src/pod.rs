//! Snapshot assembly and POD bases.
//!
//! A snapshot set holds the recorded states as columns, optionally shifted
//! by the initial state, followed by `μ`-weighted gradient columns when
//! `μ > 0`. Bases are the leading left singular vectors of that matrix.

use std::ops::Range;

use crate::error::{invalid, Error, Result};
use crate::hamsys::PolyGradFlow;
use crate::integrate::Trajectory;
use crate::numkernel::{axpy, dot, norm2, thin_svd_snapshots, DenseMatrix, DEFAULT_RANK_TOL};

/// Default relative threshold below which the initial residual is ignored.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    data: DenseMatrix,
    mu: f64,
    shifted: bool,
    reference: Option<Vec<f64>>,
    state_cols: usize,
}

impl SnapshotSet {
    /// Builds a set from raw state columns and optional (already weighted)
    /// gradient columns.
    pub fn new(
        states: DenseMatrix,
        gradients: Option<DenseMatrix>,
        mu: f64,
        reference: Option<Vec<f64>>,
    ) -> Result<Self> {
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(invalid(format!("mu must be a finite non-negative number, got {mu}")));
        }
        if states.cols() == 0 {
            return Err(invalid("snapshot set needs at least one state column"));
        }
        let state_cols = states.cols();
        let data = match (mu > 0.0, gradients) {
            (false, None) => states,
            (true, Some(g)) if g.rows() == states.rows() && g.cols() == state_cols => states.hstack(&g)?,
            (true, Some(_)) => return Err(invalid("gradient block must match the state block")),
            (true, None) => return Err(invalid("mu > 0 needs gradient columns")),
            (false, Some(_)) => return Err(invalid("gradient columns given with mu = 0")),
        };
        if let Some(r) = &reference {
            if r.len() != data.rows() {
                return Err(invalid("shift reference has the wrong length"));
            }
        }
        Ok(Self {
            shifted: reference.is_some(),
            data,
            mu,
            reference,
            state_cols,
        })
    }

    pub fn data(&self) -> &DenseMatrix {
        &self.data
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn is_shifted(&self) -> bool {
        self.shifted
    }

    pub fn reference(&self) -> Option<&[f64]> {
        self.reference.as_deref()
    }

    /// Number of state columns `M`; gradient columns follow when `μ > 0`.
    pub fn state_cols(&self) -> usize {
        self.state_cols
    }

    pub fn rows(&self) -> usize {
        self.data.rows()
    }

    /// Restriction to a block of rows, e.g. one physical field.
    pub fn restrict(&self, rows: Range<usize>) -> Result<Self> {
        if rows.end > self.rows() || rows.start >= rows.end {
            return Err(invalid(format!("row range {rows:?} is out of bounds")));
        }
        Ok(Self {
            data: self.data.row_block(rows.clone()),
            mu: self.mu,
            shifted: self.shifted,
            reference: self.reference.as_ref().map(|r| r[rows].to_vec()),
            state_cols: self.state_cols,
        })
    }
}

/// Snapshot set from a recorded trajectory. Gradient columns `μ∇H(u(tⱼ))`
/// are evaluated at the unshifted states and are never shifted.
pub fn collect_snapshots(traj: &Trajectory, flow: &PolyGradFlow, mu: f64, shifted: bool) -> Result<SnapshotSet> {
    let m = traj.recorded();
    if m == 0 {
        return Err(invalid("trajectory has no recorded states"));
    }
    if traj.states.rows() != flow.dim() {
        return Err(invalid("trajectory and flow dimensions differ"));
    }
    let gradients = if mu > 0.0 {
        let cols = (0..m)
            .map(|k| flow.eval_grad(&traj.state(k)).map(|g| g.into_iter().map(|x| mu * x).collect()))
            .collect::<Result<Vec<Vec<f64>>>>()?;
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        Some(DenseMatrix::from_columns(flow.dim(), &refs)?)
    } else {
        None
    };
    let (states, reference) = if shifted {
        let u0 = traj.initial_state();
        let states = DenseMatrix::from_fn(flow.dim(), m, |i, j| traj.states[(i, j)] - u0[i]);
        (states, Some(u0))
    } else {
        (traj.states.clone(), None)
    };
    SnapshotSet::new(states, gradients, mu, reference)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PodBasis {
    phi: DenseMatrix,
    sigma: Vec<f64>,
    shifted_reference: Option<Vec<f64>>,
    enriched: bool,
}

impl PodBasis {
    /// Wraps explicit orthonormal columns (no spectrum attached).
    pub fn from_orthonormal(phi: DenseMatrix) -> Result<Self> {
        let defect = phi.orthonormality_defect();
        if defect > 1e-10 {
            return Err(invalid(format!("basis columns are not orthonormal (defect {defect:e})")));
        }
        Ok(Self {
            phi,
            sigma: Vec::new(),
            shifted_reference: None,
            enriched: false,
        })
    }

    /// Marks the basis as built from snapshots shifted by `reference`.
    pub fn with_shift_reference(mut self, reference: Vec<f64>) -> Result<Self> {
        if reference.len() != self.rows() {
            return Err(invalid("shift reference has the wrong length"));
        }
        self.shifted_reference = Some(reference);
        Ok(self)
    }

    /// Orthonormal basis columns.
    pub fn phi(&self) -> &DenseMatrix {
        &self.phi
    }

    /// Full nonzero spectrum of the source snapshots, descending.
    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn r(&self) -> usize {
        self.phi.cols()
    }

    pub fn rows(&self) -> usize {
        self.phi.rows()
    }

    pub fn shifted_reference(&self) -> Option<&[f64]> {
        self.shifted_reference.as_deref()
    }

    pub fn is_enriched(&self) -> bool {
        self.enriched
    }

    /// `Σ_{j>r} σⱼ²` over the stored spectrum.
    pub fn sigma_tail(&self, r: usize) -> Result<f64> {
        sigma_tail(self, r)
    }

    /// `‖v − ΦΦᵀv‖`.
    pub fn residual_norm(&self, v: &[f64]) -> f64 {
        norm2(&self.residual(v))
    }

    fn residual(&self, v: &[f64]) -> Vec<f64> {
        let coeffs = self.phi.tr_matvec(v);
        let mut res = v.to_vec();
        axpy(-1.0, &self.phi.matvec(&coeffs), &mut res);
        res
    }
}

/// Leading `r` POD modes of a snapshot set; the full spectrum is kept.
pub fn compute_basis(snaps: &SnapshotSet, r: usize) -> Result<PodBasis> {
    let y = snaps.data();
    let full = y.rows().min(y.cols());
    let svd = thin_svd_snapshots(y, full, DEFAULT_RANK_TOL)?;
    if r > svd.rank() {
        return Err(Error::RankExceeded {
            requested: r,
            attained: svd.rank(),
        });
    }
    Ok(PodBasis {
        phi: svd.phi.leading_columns(r),
        sigma: svd.sigma,
        shifted_reference: snaps.reference().map(<[f64]>::to_vec),
        enriched: false,
    })
}

/// `Σⱼ ‖yⱼ − ΦΦᵀyⱼ‖²` evaluated directly.
pub fn projection_error(snaps: &SnapshotSet, basis: &PodBasis) -> Result<f64> {
    let parts = projection_error_parts(snaps, basis)?;
    Ok(parts.state + snaps.mu() * snaps.mu() * parts.gradient)
}

/// Split projection error of a `μ`-augmented set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionErrors {
    /// Over the state columns.
    pub state: f64,
    /// Over the unweighted gradients `∇H(u(tⱼ))`; zero when `μ = 0`.
    pub gradient: f64,
}

pub fn projection_error_parts(snaps: &SnapshotSet, basis: &PodBasis) -> Result<ProjectionErrors> {
    if snaps.rows() != basis.rows() {
        return Err(invalid(format!(
            "snapshot rows {} differ from basis rows {}",
            snaps.rows(),
            basis.rows()
        )));
    }
    let y = snaps.data();
    let squared = |j: usize| {
        let r = basis.residual(&y.column(j));
        dot(&r, &r)
    };
    let state = (0..snaps.state_cols()).map(squared).sum();
    let gradient = if snaps.mu() > 0.0 {
        let weighted: f64 = (snaps.state_cols()..y.cols()).map(squared).sum();
        weighted / (snaps.mu() * snaps.mu())
    } else {
        0.0
    };
    Ok(ProjectionErrors { state, gradient })
}

/// `Σ_{j>r} σⱼ²`.
pub fn sigma_tail(basis: &PodBasis, r: usize) -> Result<f64> {
    if r > basis.sigma.len() {
        return Err(invalid(format!(
            "r = {r} exceeds the stored spectrum length {}",
            basis.sigma.len()
        )));
    }
    Ok(basis.sigma[r..].iter().rev().map(|s| s * s).sum())
}

/// Appends the normalized initial-condition residual `(I − ΦΦᵀ)u₀` unless it
/// is below `residual_tol·‖u₀‖`.
pub fn enrich_with_ic_residual(basis: &PodBasis, u0: &[f64], residual_tol: f64) -> Result<PodBasis> {
    if u0.len() != basis.rows() {
        return Err(invalid(format!(
            "initial state has length {}, basis rows {}",
            u0.len(),
            basis.rows()
        )));
    }
    let mut res = basis.residual(u0);
    if norm2(&res) <= residual_tol * norm2(u0) {
        return Ok(basis.clone());
    }
    // Second pass against cancellation in the first projection.
    let again = basis.phi.tr_matvec(&res);
    axpy(-1.0, &basis.phi.matvec(&again), &mut res);
    let nrm = norm2(&res);
    res.iter_mut().for_each(|x| *x /= nrm);

    let phi = basis
        .phi
        .hstack(&DenseMatrix::from_columns(basis.rows(), &[res.as_slice()])?)?;
    Ok(PodBasis {
        phi,
        sigma: basis.sigma.clone(),
        shifted_reference: basis.shifted_reference.clone(),
        enriched: true,
    })
}
