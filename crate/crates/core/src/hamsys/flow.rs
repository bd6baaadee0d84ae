use std::ops::Range;

use crate::error::{invalid, Result};
use crate::numkernel::{dot, sym_eig, DenseMatrix};

/// Algebraic property of the structure operator `S` that the flow guarantees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureTag {
    /// `S = −Sᵀ`: the energy is a first integral.
    Skew,
    /// Symmetric part of `S` is negative semidefinite: the energy is a
    /// non-increasing Lyapunov function.
    NegativeSemidefinite,
    /// No structural guarantee (standard Galerkin reduced models).
    None,
}

/// Dense 3-tensor `T[p, i, j]`, symmetric in its last two indices.
///
/// Only the `i ≤ j` half is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor3 {
    out_dim: usize,
    dim: usize,
    data: Vec<f64>,
}

impl SymTensor3 {
    pub fn zeros(out_dim: usize, dim: usize) -> Self {
        Self {
            out_dim,
            dim,
            data: vec![0.0; out_dim * pair_count(dim)],
        }
    }

    /// Fills the tensor from `f(i, j)`, which must return the output vector
    /// `T[·, i, j]` for each `i ≤ j`.
    pub fn from_pairs(out_dim: usize, dim: usize, mut f: impl FnMut(usize, usize) -> Vec<f64>) -> Self {
        let mut t = Self::zeros(out_dim, dim);
        let pairs = pair_count(dim);
        for i in 0..dim {
            for j in i..dim {
                let col = f(i, j);
                assert_eq!(col.len(), out_dim, "tensor fibre length mismatch");
                let idx = pair_index(dim, i, j);
                for (p, v) in col.into_iter().enumerate() {
                    t.data[p * pairs + idx] = v;
                }
            }
        }
        t
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, p: usize, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.data[p * pair_count(self.dim) + pair_index(self.dim, i, j)]
    }

    /// `T(a, b)_p = Σᵢⱼ T[p,i,j] aᵢ bⱼ`.
    pub fn eval(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        // Symmetrized pair products, shared by every output row.
        let mut prods = Vec::with_capacity(pair_count(n));
        for i in 0..n {
            prods.push(a[i] * b[i]);
            for j in i + 1..n {
                prods.push(a[i] * b[j] + a[j] * b[i]);
            }
        }
        if prods.is_empty() {
            return vec![0.0; self.out_dim];
        }
        self.data.chunks_exact(prods.len()).map(|row| dot(row, &prods)).collect()
    }
}

fn pair_count(n: usize) -> usize {
    n * (n + 1) / 2
}

fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n);
    // Row i of the upper triangle starts after Σ_{k<i} (n − k) entries.
    i * n - i * i.saturating_sub(1) / 2 + (j - i)
}

/// Quadratic part `G₂(u, v)` of a polynomial gradient.
#[derive(Debug, Clone, PartialEq)]
pub enum Quadratic {
    /// `G₂(u, v)ᵢ = cᵢ uᵢ vᵢ`, the pointwise products of a full-order model.
    Diagonal(Vec<f64>),
    /// Dense reduced tensor.
    Tensor(SymTensor3),
}

impl Quadratic {
    pub fn out_dim(&self) -> usize {
        match self {
            Quadratic::Diagonal(c) => c.len(),
            Quadratic::Tensor(t) => t.out_dim(),
        }
    }

    pub fn in_dim(&self) -> usize {
        match self {
            Quadratic::Diagonal(c) => c.len(),
            Quadratic::Tensor(t) => t.dim(),
        }
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        match self {
            Quadratic::Diagonal(c) => c.iter().zip(a).zip(b).map(|((c, x), y)| c * x * y).collect(),
            Quadratic::Tensor(t) => t.eval(a, b),
        }
    }

    /// Matrix of the linear map `v ↦ G₂(u, v)`.
    pub fn linearize_at(&self, u: &[f64]) -> DenseMatrix {
        match self {
            Quadratic::Diagonal(c) => {
                let d: Vec<f64> = c.iter().zip(u).map(|(c, x)| c * x).collect();
                DenseMatrix::from_diagonal(&d)
            }
            Quadratic::Tensor(t) => DenseMatrix::from_fn(t.out_dim(), t.dim(), |p, j| {
                (0..t.dim()).map(|i| t.get(p, i, j) * u[i]).sum()
            }),
        }
    }
}

/// How a flow evaluates its energy functional.
#[derive(Debug, Clone, PartialEq)]
pub enum EnergyForm {
    /// Linear wave on a stacked `(u, v)` state with `n` points per field:
    /// `dx · Σ [½ vⱼ² + c²/2 (δ⁺uⱼ)²]`, periodic.
    Wave { n: usize, c: f64, dx: f64 },
    /// KdV: `dx · Σ [α/6 uⱼ³ + ρ/2 uⱼ² − ν/2 (δ⁺uⱼ)²]`, periodic.
    Kdv { alpha: f64, rho: f64, nu: f64, dx: f64 },
    /// Exact potential of the polynomial gradient:
    /// `weight · (constant + g₀·u + ½ uᵀG₁u + ⅓ u·G₂(u,u))`.
    /// Only meaningful when `G₁` is symmetric and `G₂` fully symmetric.
    Potential { weight: f64, constant: f64 },
}

/// Finite-dimensional flow `u̇ = S (g₀ + G₁u + G₂(u,u))`.
///
/// Both the full-order discretizations and every reduced model are
/// represented this way, so one time stepper serves all of them.
#[derive(Debug, Clone)]
pub struct PolyGradFlow {
    structure: DenseMatrix,
    g0: Option<Vec<f64>>,
    g1: DenseMatrix,
    g2: Option<Quadratic>,
    energy: Option<EnergyForm>,
    tag: StructureTag,
    fields: Vec<Range<usize>>,
}

impl PolyGradFlow {
    /// Validates and assembles a flow. `fields` partitions the state into
    /// physical fields; pass `None` for a single field.
    pub fn new(
        structure: DenseMatrix,
        g0: Option<Vec<f64>>,
        g1: DenseMatrix,
        g2: Option<Quadratic>,
        energy: Option<EnergyForm>,
        tag: StructureTag,
        fields: Option<Vec<Range<usize>>>,
    ) -> Result<Self> {
        let dim = structure.rows();
        if !structure.is_square() || !g1.is_square() || g1.rows() != dim {
            return Err(invalid(format!(
                "operator shapes disagree: S is {}x{}, G1 is {}x{}",
                structure.rows(),
                structure.cols(),
                g1.rows(),
                g1.cols()
            )));
        }
        if let Some(g0) = &g0 {
            if g0.len() != dim {
                return Err(invalid(format!("g0 has length {}, expected {dim}", g0.len())));
            }
            if g0.iter().any(|x| !x.is_finite()) {
                return Err(invalid("g0 has non-finite entries"));
            }
        }
        if let Some(q) = &g2 {
            if q.out_dim() != dim || q.in_dim() != dim {
                return Err(invalid(format!(
                    "quadratic term maps {} -> {}, expected {dim} -> {dim}",
                    q.in_dim(),
                    q.out_dim()
                )));
            }
        }
        let s_scale = structure.max_abs();
        match tag {
            StructureTag::Skew => {
                let defect = structure.skew_defect();
                if defect > 1e-13 * s_scale {
                    return Err(invalid(format!("structure operator is not skew (defect {defect:e})")));
                }
            }
            StructureTag::NegativeSemidefinite => {
                let sym = DenseMatrix::from_fn(dim, dim, |i, j| 0.5 * (structure[(i, j)] + structure[(j, i)]));
                let top = sym_eig(&sym, 1e-14)?.values.first().copied().unwrap_or(0.0);
                if top > 1e-12 * s_scale {
                    return Err(invalid(format!(
                        "structure operator has a positive symmetric eigenvalue {top:e}"
                    )));
                }
            }
            StructureTag::None => {}
        }
        if tag != StructureTag::None {
            let defect = g1.symmetry_defect();
            if defect > 1e-13 * g1.max_abs() {
                return Err(invalid(format!("G1 is not symmetric (defect {defect:e})")));
            }
        }
        let fields = fields.unwrap_or_else(|| vec![0..dim]);
        let mut next = 0;
        for f in &fields {
            if f.start != next || f.end < f.start {
                return Err(invalid("fields must partition the state contiguously"));
            }
            next = f.end;
        }
        if next != dim {
            return Err(invalid("fields do not cover the state"));
        }
        if let Some(EnergyForm::Wave { n, .. }) = energy {
            if 2 * n != dim {
                return Err(invalid("wave energy needs a stacked (u, v) state"));
            }
        }
        if let Some(EnergyForm::Kdv { .. }) = energy {
            if dim < 2 {
                return Err(invalid("KdV energy needs at least two points"));
            }
        }
        Ok(Self {
            structure,
            g0,
            g1,
            g2,
            energy,
            tag,
            fields,
        })
    }

    pub fn dim(&self) -> usize {
        self.structure.rows()
    }

    pub fn structure(&self) -> &DenseMatrix {
        &self.structure
    }

    pub fn g0(&self) -> Option<&[f64]> {
        self.g0.as_deref()
    }

    pub fn g1(&self) -> &DenseMatrix {
        &self.g1
    }

    pub fn g2(&self) -> Option<&Quadratic> {
        self.g2.as_ref()
    }

    pub fn energy_form(&self) -> Option<&EnergyForm> {
        self.energy.as_ref()
    }

    pub fn tag(&self) -> StructureTag {
        self.tag
    }

    pub fn fields(&self) -> &[Range<usize>] {
        &self.fields
    }

    fn check_dim(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dim() {
            return Err(invalid(format!(
                "state has length {}, flow dimension is {}",
                u.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// `∇H(u) = g₀ + G₁u + G₂(u,u)`.
    pub fn eval_grad(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(u)?;
        let mut g = self.g1.matvec(u);
        if let Some(g0) = &self.g0 {
            g.iter_mut().zip(g0).for_each(|(x, c)| *x += c);
        }
        if let Some(q) = &self.g2 {
            g.iter_mut().zip(q.eval(u, u)).for_each(|(x, c)| *x += c);
        }
        Ok(g)
    }

    /// Right-hand side `S ∇H(u)`.
    pub fn eval_rhs(&self, u: &[f64]) -> Result<Vec<f64>> {
        Ok(self.structure.matvec(&self.eval_grad(u)?))
    }

    pub fn eval_energy(&self, u: &[f64]) -> Result<f64> {
        self.check_dim(u)?;
        match self.energy {
            Some(EnergyForm::Wave { n, c, dx }) => {
                let (uf, vf) = u.split_at(n);
                let kinetic: f64 = vf.iter().map(|v| 0.5 * v * v).sum();
                let strain: f64 = (0..n)
                    .map(|j| {
                        let d = (uf[(j + 1) % n] - uf[j]) / dx;
                        0.5 * c * c * d * d
                    })
                    .sum();
                Ok(dx * (kinetic + strain))
            }
            Some(EnergyForm::Kdv { alpha, rho, nu, dx }) => {
                let n = u.len();
                let total: f64 = (0..n)
                    .map(|j| {
                        let x = u[j];
                        let d = (u[(j + 1) % n] - x) / dx;
                        alpha / 6.0 * x * x * x + rho / 2.0 * x * x - nu / 2.0 * d * d
                    })
                    .sum();
                Ok(dx * total)
            }
            Some(EnergyForm::Potential { weight, constant }) => {
                let mut h = constant + 0.5 * dot(u, &self.g1.matvec(u));
                if let Some(g0) = &self.g0 {
                    h += dot(g0, u);
                }
                if let Some(q) = &self.g2 {
                    h += dot(u, &q.eval(u, u)) / 3.0;
                }
                Ok(weight * h)
            }
            None => Err(invalid("flow carries no energy functional")),
        }
    }
}
