//! Galerkin and structure-preserving reduced-order models.
//!
//! Every variant is assembled as a [`PolyGradFlow`] in the coefficient
//! space, so reduced models run through the same AVF stepper as the full
//! model. Multi-field systems use one basis per field; the combined basis
//! is block diagonal.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::hamsys::{EnergyForm, PolyGradFlow, Quadratic, StructureTag, SymTensor3};
use crate::integrate::{integrate_with_energy, AvfScheme, Trajectory};
use crate::numkernel::{axpy, DenseMatrix};
use crate::pod::PodBasis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RomVariant {
    /// Standard Galerkin projection `ȧ = ΦᵀS∇H(Φa)`.
    Grom,
    /// Structure-preserving, `ȧ = ΦᵀSΦ · Φᵀ∇H(Φa)`.
    Sp0,
    /// As `Sp0` on a basis enriched with the initial residual.
    Sp1,
    /// As `Sp0` around the initial state: `u = u₀ + Φa`, `a(0) = 0`.
    Sp2,
}

impl RomVariant {
    pub const ALL: [RomVariant; 4] = [RomVariant::Grom, RomVariant::Sp0, RomVariant::Sp1, RomVariant::Sp2];

    pub fn label(self) -> &'static str {
        match self {
            RomVariant::Grom => "G-ROM",
            RomVariant::Sp0 => "SP-ROM-0",
            RomVariant::Sp1 => "SP-ROM-1",
            RomVariant::Sp2 => "SP-ROM-2",
        }
    }

    pub fn is_structure_preserving(self) -> bool {
        self != RomVariant::Grom
    }
}

impl fmt::Display for RomVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RomVariant::Grom => "grom",
            RomVariant::Sp0 => "sp0",
            RomVariant::Sp1 => "sp1",
            RomVariant::Sp2 => "sp2",
        })
    }
}

impl FromStr for RomVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "grom" | "g-rom" => Ok(RomVariant::Grom),
            "sp0" | "sp-rom-0" => Ok(RomVariant::Sp0),
            "sp1" | "sp-rom-1" => Ok(RomVariant::Sp1),
            "sp2" | "sp-rom-2" => Ok(RomVariant::Sp2),
            other => Err(invalid(format!("unknown ROM variant '{other}'"))),
        }
    }
}

/// A basis for the state rows `rows` of the full model.
#[derive(Debug, Clone)]
pub struct FieldBasis {
    pub rows: Range<usize>,
    pub basis: PodBasis,
}

impl FieldBasis {
    pub fn new(rows: Range<usize>, basis: PodBasis) -> Result<Self> {
        if rows.len() != basis.rows() {
            return Err(invalid(format!(
                "basis has {} rows, field {rows:?} has {}",
                basis.rows(),
                rows.len()
            )));
        }
        Ok(Self { rows, basis })
    }
}

#[derive(Debug, Clone)]
pub struct ReducedModel {
    flow: PolyGradFlow,
    fom: Arc<PolyGradFlow>,
    bases: Vec<FieldBasis>,
    phi: DenseMatrix,
    // Φᵀ for the structure-preserving variants, ΦᵀS for G-ROM.
    left: DenseMatrix,
    variant: RomVariant,
    decode_offset: Option<Vec<f64>>,
}

impl ReducedModel {
    pub fn flow(&self) -> &PolyGradFlow {
        &self.flow
    }

    pub fn fom(&self) -> &PolyGradFlow {
        &self.fom
    }

    pub fn bases(&self) -> &[FieldBasis] {
        &self.bases
    }

    /// Combined (block-diagonal) basis.
    pub fn phi(&self) -> &DenseMatrix {
        &self.phi
    }

    pub fn variant(&self) -> RomVariant {
        self.variant
    }

    pub fn decode_offset(&self) -> Option<&[f64]> {
        self.decode_offset.as_deref()
    }

    pub fn fom_dim(&self) -> usize {
        self.phi.rows()
    }

    pub fn dim(&self) -> usize {
        self.phi.cols()
    }

    /// `Φᵀ(u − offset)`.
    pub fn encode(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.fom_dim() {
            return Err(invalid(format!(
                "state has length {}, model expects {}",
                u.len(),
                self.fom_dim()
            )));
        }
        Ok(match &self.decode_offset {
            Some(off) => {
                let shifted: Vec<f64> = u.iter().zip(off).map(|(a, b)| a - b).collect();
                self.phi.tr_matvec(&shifted)
            }
            None => self.phi.tr_matvec(u),
        })
    }

    /// `offset + Φa`.
    pub fn decode(&self, a: &[f64]) -> Result<Vec<f64>> {
        if a.len() != self.dim() {
            return Err(invalid(format!(
                "coefficients have length {}, model dimension is {}",
                a.len(),
                self.dim()
            )));
        }
        let mut u = self.phi.matvec(a);
        if let Some(off) = &self.decode_offset {
            axpy(1.0, off, &mut u);
        }
        Ok(u)
    }

    /// Full-order energy of the decoded state.
    pub fn energy(&self, a: &[f64]) -> Result<f64> {
        self.fom.eval_energy(&self.decode(a)?)
    }

    /// Reduced quadratic term evaluated through full dimension instead of the
    /// precomputed tensor; for cross-checking.
    pub fn quadratic_on_the_fly(&self, a: &[f64]) -> Result<Option<Vec<f64>>> {
        let Some(q) = self.fom.g2() else {
            return Ok(None);
        };
        let u = self.phi.matvec(a);
        Ok(Some(self.left.matvec(&q.eval(&u, &u))))
    }
}

/// Assembles the reduced operators of `variant` on the given field bases.
///
/// The bases must partition the full state in order. `Sp1` needs at least
/// one enriched basis, `Sp2` needs every basis to carry a shift reference,
/// and the other variants reject shifted bases.
pub fn reduce_operators(fom: Arc<PolyGradFlow>, bases: Vec<FieldBasis>, variant: RomVariant) -> Result<ReducedModel> {
    check_bases(&fom, &bases, variant)?;
    let n = fom.dim();
    let r: usize = bases.iter().map(|b| b.basis.r()).sum();
    let mut phi = DenseMatrix::zeros(n, r);
    let mut reduced_fields = Vec::with_capacity(bases.len());
    let mut offset = 0;
    for fb in &bases {
        let k = fb.basis.r();
        for (local, i) in fb.rows.clone().enumerate() {
            phi.row_mut(i)[offset..offset + k].copy_from_slice(fb.basis.phi().row(local));
        }
        reduced_fields.push(offset..offset + k);
        offset += k;
    }

    let decode_offset = (variant == RomVariant::Sp2).then(|| {
        bases
            .iter()
            .flat_map(|b| b.basis.shifted_reference().unwrap_or_default().iter().copied())
            .collect::<Vec<f64>>()
    });

    let s_phi = fom.structure().matmul(&phi);
    let g1_phi = fom.g1().matmul(&phi);
    let phi_t = phi.transpose();
    let left = match variant {
        RomVariant::Grom => fom.structure().transpose().matmul(&phi).transpose(),
        _ => phi_t.clone(),
    };

    // Expansion about u₀ for the shifted variant: ∇H(u₀ + Φa) =
    // ∇H(u₀) + (G₁ + 2G₂(u₀,·))Φa + G₂(Φa,Φa).
    let (g0_full, g1_cols) = match &decode_offset {
        Some(u0) => {
            let mut cols = g1_phi;
            if let Some(q) = fom.g2() {
                for j in 0..r {
                    let lin = q.eval(u0, &phi.column(j));
                    for (i, v) in lin.into_iter().enumerate() {
                        cols[(i, j)] += 2.0 * v;
                    }
                }
            }
            (Some(fom.eval_grad(u0)?), cols)
        }
        None => (fom.g0().map(<[f64]>::to_vec), g1_phi),
    };

    let g0_r = g0_full.map(|g| left.matvec(&g));
    let mut g1_r = left.matmul(&g1_cols);
    let g2_r = fom.g2().map(|q| reduce_quadratic(q, &phi, &left));

    let (structure, tag) = match variant {
        RomVariant::Grom => (DenseMatrix::identity(r), StructureTag::None),
        _ => {
            let mut s_r = phi_t.matmul(&s_phi);
            if fom.tag() == StructureTag::Skew {
                s_r = DenseMatrix::from_fn(r, r, |i, j| 0.5 * (s_r[(i, j)] - s_r[(j, i)]));
            }
            g1_r = DenseMatrix::from_fn(r, r, |i, j| 0.5 * (g1_r[(i, j)] + g1_r[(j, i)]));
            (s_r, fom.tag())
        }
    };

    let energy = match (variant, energy_weight(fom.energy_form())) {
        (RomVariant::Grom, _) | (_, None) => None,
        (_, Some(weight)) => {
            let constant = match &decode_offset {
                Some(u0) => fom.eval_energy(u0)? / weight,
                None => 0.0,
            };
            Some(EnergyForm::Potential { weight, constant })
        }
    };

    let flow = PolyGradFlow::new(structure, g0_r, g1_r, g2_r, energy, tag, Some(reduced_fields))?;
    Ok(ReducedModel {
        flow,
        fom,
        bases,
        phi,
        left,
        variant,
        decode_offset,
    })
}

/// Integrates the reduced model from the encoding of `u0` and returns the
/// decoded trajectory with the full-order energy of every decoded step.
pub fn run_rom(model: &ReducedModel, u0: &[f64], scheme: &AvfScheme) -> Result<Trajectory> {
    let a0 = model.encode(u0)?;
    let coeffs = integrate_with_energy(&model.flow, &a0, scheme, |a| model.energy(a))?;
    let decoded = (0..coeffs.recorded())
        .map(|k| model.decode(&coeffs.state(k)))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&[f64]> = decoded.iter().map(Vec::as_slice).collect();
    Ok(Trajectory {
        states: DenseMatrix::from_columns(model.fom_dim(), &refs)?,
        ..coeffs
    })
}

// T[p,i,j] = (left · G₂(φᵢ, φⱼ))ₚ, one full-dimension evaluation per pair.
fn reduce_quadratic(q: &Quadratic, phi: &DenseMatrix, left: &DenseMatrix) -> Quadratic {
    let columns: Vec<Vec<f64>> = (0..phi.cols()).map(|j| phi.column(j)).collect();
    Quadratic::Tensor(SymTensor3::from_pairs(left.rows(), phi.cols(), |i, j| {
        left.matvec(&q.eval(&columns[i], &columns[j]))
    }))
}

// Factor relating the flow gradient to the true energy gradient.
fn energy_weight(form: Option<&EnergyForm>) -> Option<f64> {
    match form? {
        EnergyForm::Wave { dx, .. } | EnergyForm::Kdv { dx, .. } => Some(*dx),
        EnergyForm::Potential { weight, .. } => Some(*weight),
    }
}

fn check_bases(fom: &PolyGradFlow, bases: &[FieldBasis], variant: RomVariant) -> Result<()> {
    if bases.is_empty() {
        return Err(invalid("at least one basis is required"));
    }
    let mut next = 0;
    for b in bases {
        if b.rows.start != next || b.rows.len() != b.basis.rows() {
            return Err(invalid("bases must partition the state contiguously"));
        }
        if b.basis.r() == 0 {
            return Err(invalid("empty basis"));
        }
        next = b.rows.end;
    }
    if next != fom.dim() {
        return Err(invalid(format!(
            "bases cover {next} rows, full model has {}",
            fom.dim()
        )));
    }
    let shifted = bases.iter().filter(|b| b.basis.shifted_reference().is_some()).count();
    match variant {
        RomVariant::Sp1 if !bases.iter().any(|b| b.basis.is_enriched()) => {
            Err(invalid("SP-ROM-1 needs an enriched basis"))
        }
        RomVariant::Sp2 if shifted != bases.len() => Err(invalid("SP-ROM-2 needs bases from shifted snapshots")),
        RomVariant::Grom | RomVariant::Sp0 | RomVariant::Sp1 if shifted > 0 => Err(invalid(format!(
            "{} does not take shifted bases",
            variant.label()
        ))),
        _ => Ok(()),
    }
}
