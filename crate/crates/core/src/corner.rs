//! Corner matrix spaces `K_J = {M Hermitian : Φ_i*MΦ_i ∈ span{I_r} for i ∈ J}`
//! and their dimension certificates.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fusion::is_tight;
use crate::numerics::{
    herm_basis, herm_coords_raw, null_space_certified, numerical_rank, traceless_coords, Field, HermCoords,
    RankCertificate, Scalar, Tolerances,
};
use crate::subspaces::{is_equi_isoclinic, SubspaceSequence};

/// An orthonormal basis of `K_J` in Hermitian coordinates.
#[derive(Debug, Clone, Serialize)]
pub struct CornerBasis {
    pub field: Field,
    pub d: usize,
    pub r: usize,
    /// 0-based indices.
    pub indices: Vec<usize>,
    pub dim: usize,
    pub basis: Vec<HermCoords>,
    pub certificate: RankCertificate,
}

impl CornerBasis {
    /// Coefficient matrix with the basis coordinates as columns.
    fn columns(&self) -> DMatrix<f64> {
        let rows = self.field.dim_h(self.d);
        DMatrix::from_fn(rows, self.dim, |i, j| self.basis[j].coords[i])
    }
}

fn check_indices(n: usize, indices: &[usize]) -> Result<()> {
    let mut sorted = indices.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if indices.is_empty() || sorted.len() != indices.len() || sorted.last().is_some_and(|&j| j >= n) {
        return Err(Error::InvalidInput(format!(
            "index set must be nonempty, duplicate-free and below n = {n}: {indices:?}"
        )));
    }
    Ok(())
}

/// Stacks the traceless parts of `M ↦ Φ_i*MΦ_i` for `i ∈ J` as a real matrix on
/// Hermitian coordinates.
fn constraint_matrix<T: Scalar>(s: &SubspaceSequence<T>, indices: &[usize]) -> DMatrix<f64> {
    let d = s.d();
    let per = T::FIELD.dim_h(s.r()) - 1;
    let basis = herm_basis::<T>(d);
    let mut a = DMatrix::zeros(per * indices.len(), basis.len());
    for (block, &i) in indices.iter().enumerate() {
        let phi = s.isometry(i);
        for (k, e) in basis.iter().enumerate() {
            let image = phi.adjoint() * e * phi;
            for (row, v) in traceless_coords(&image).into_iter().enumerate() {
                a[(block * per + row, k)] = v;
            }
        }
    }
    a
}

/// Certified orthonormal basis of `K_J`; `Error::Uncertain` when the
/// singular-value gap is too small to trust the dimension.
pub fn corner_space<T: Scalar>(s: &SubspaceSequence<T>, indices: &[usize], tol: &Tolerances) -> Result<CornerBasis> {
    check_indices(s.n(), indices)?;
    let ns = null_space_certified(&constraint_matrix(s, indices), tol)?;
    ns.certificate.require_certified()?;
    let basis = ns
        .basis
        .into_iter()
        .map(|v| HermCoords {
            field: T::FIELD,
            d: s.d(),
            coords: v.iter().copied().collect(),
        })
        .collect::<Vec<_>>();
    Ok(CornerBasis {
        field: T::FIELD,
        d: s.d(),
        r: s.r(),
        indices: indices.to_vec(),
        dim: basis.len(),
        basis,
        certificate: ns.certificate,
    })
}

/// Largest distance from a projection `P_i` to the span of the basis.
pub fn projection_membership_residual<T: Scalar>(s: &SubspaceSequence<T>, k: &CornerBasis) -> f64 {
    let b = k.columns();
    (0..s.n())
        .map(|i| {
            let p = DVector::from_vec(herm_coords_raw(&s.projection(i)));
            let fit = &b * (b.transpose() * &p);
            (p - fit).amax()
        })
        .fold(0.0, f64::max)
}

/// `dim K_1, …, dim K_m` together with any violated closed form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KPrefix {
    pub n: usize,
    pub dims: Vec<usize>,
    pub gaps: Vec<f64>,
    pub violations: Vec<String>,
}

/// `dimH(d) − j·dimH(r) + j`, the dimension of `K_j` for `j ≤ 3`.
pub fn closed_form_dim_k(field: Field, d: usize, r: usize, j: usize) -> i64 {
    field.dim_h(d) as i64 - (j * field.dim_h(r)) as i64 + j as i64
}

/// `dim K_j` for `j = 1..=m`, recording (rather than raising) violations of
/// monotonicity, of `n ≤ dim K_j` and of the closed forms for `j ≤ 3`.
pub fn k_prefix<T: Scalar>(s: &SubspaceSequence<T>, m: usize, tol: &Tolerances) -> Result<KPrefix> {
    if m == 0 || m > s.n() {
        return Err(Error::InvalidInput(format!("prefix length must lie in 1..={}", s.n())));
    }
    let indices: Vec<usize> = (0..s.n()).collect();
    let mut out = KPrefix {
        n: s.n(),
        dims: Vec::with_capacity(m),
        gaps: Vec::with_capacity(m),
        violations: Vec::new(),
    };
    for j in 1..=m {
        let k = corner_space(s, &indices[..j], tol)?;
        if let Some(&prev) = out.dims.last() {
            if k.dim > prev {
                out.violations.push(format!("dim K_{j} = {} exceeds dim K_{} = {prev}", k.dim, j - 1));
            }
        }
        if k.dim < s.n() {
            out.violations.push(format!("dim K_{j} = {} is below n = {}", k.dim, s.n()));
        }
        if j <= 3 {
            let want = closed_form_dim_k(T::FIELD, s.d(), s.r(), j);
            if k.dim as i64 != want {
                out.violations.push(format!("dim K_{j} = {} but the closed form gives {want}", k.dim));
            }
        }
        out.dims.push(k.dim);
        out.gaps.push(k.certificate.gap);
    }
    Ok(out)
}

fn require_ei_not_one<T: Scalar>(s: &SubspaceSequence<T>, tol: &Tolerances) -> Result<f64> {
    let alpha = is_equi_isoclinic(s, tol).ok_or_else(|| Error::NotEquiIsoclinic("pairwise singular values differ".into()))?;
    if alpha >= 1.0 - tol.residual_abs {
        return Err(Error::AlphaOne);
    }
    Ok(alpha)
}

/// `(dim K_1, …, dim K_n)` of an EI with `α ∈ [0,1)`, with every closed form enforced.
pub fn dims_k_prefix<T: Scalar>(s: &SubspaceSequence<T>, tol: &Tolerances) -> Result<KPrefix> {
    require_ei_not_one(s, tol)?;
    let prefix = k_prefix(s, s.n(), tol)?;
    if let Some(v) = prefix.violations.first() {
        return Err(Error::FormulaViolation(v.clone()));
    }
    Ok(prefix)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LDim {
    pub dim_k: usize,
    pub dim_l: usize,
}

/// `dim L_J`, computed as the preimage of `span{(1,…,1)}` under
/// `K_J → ℝ^J, M ↦ (⟨M, P_j⟩_F)_j`; the identity `dim L_J = dim K_J − |J| + 1` is enforced.
pub fn dim_l<T: Scalar>(s: &SubspaceSequence<T>, indices: &[usize], tol: &Tolerances) -> Result<LDim> {
    let k = corner_space(s, indices, tol)?;
    let b = k.columns();
    let gram: Vec<DVector<f64>> = indices
        .iter()
        .map(|&j| b.transpose() * DVector::from_vec(herm_coords_raw(&s.projection(j))))
        .collect();
    let dim_l = if k.dim == 0 {
        0
    } else {
        // ⟨M,P_j⟩ − ⟨M,P_{j_0}⟩ = 0 for the remaining j
        let rows = indices.len() - 1;
        let a = DMatrix::from_fn(rows, k.dim, |i, c| gram[i + 1][c] - gram[0][c]);
        let ns = null_space_certified(&a, tol)?;
        ns.certificate.require_certified()?;
        ns.basis.len()
    };
    let want = k.dim as i64 - indices.len() as i64 + 1;
    if dim_l as i64 != want {
        return Err(Error::FormulaViolation(format!(
            "dim L_J = {dim_l} but dim K_J - |J| + 1 = {want}"
        )));
    }
    Ok(LDim { dim_k: k.dim, dim_l })
}

/// Frobenius Gram matrix of the projections.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionGram {
    pub alpha: f64,
    pub gram: Vec<Vec<f64>>,
    /// `‖gram − (α²rJ + (1−α²)rI)‖_max`.
    pub residual: f64,
    pub rank: usize,
}

/// `⟨P_i, P_j⟩_F = ‖Φ_i*Φ_j‖_F²`, compared against `α²rJ + (1−α²)rI`.
pub fn projection_gram_check<T: Scalar>(s: &SubspaceSequence<T>, tol: &Tolerances) -> Result<ProjectionGram> {
    let alpha = is_equi_isoclinic(s, tol).ok_or_else(|| Error::NotEquiIsoclinic("pairwise singular values differ".into()))?;
    let n = s.n();
    let r = s.r() as f64;
    let g = DMatrix::from_fn(n, n, |i, j| {
        let c = s.isometry(i).adjoint() * s.isometry(j);
        c.iter().map(|z| z.modulus_squared()).sum::<f64>()
    });
    let a2 = alpha * alpha;
    let expected = DMatrix::from_fn(n, n, |i, j| if i == j { r } else { a2 * r });
    let residual = (&g - expected).amax();
    if residual > tol.residual_abs * r.max(1.0) * 10.0 {
        return Err(Error::FormulaViolation(format!("projection Gram residual {residual:e}")));
    }
    Ok(ProjectionGram {
        alpha,
        gram: g.row_iter().map(|row| row.iter().copied().collect()).collect(),
        residual,
        rank: numerical_rank(&g, tol)?,
    })
}

/// Certificate for `dim K_n = n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnCertificate {
    pub n: usize,
    pub dims: Vec<usize>,
    pub gaps: Vec<f64>,
    pub satisfied: bool,
    pub is_eitff: bool,
}

pub fn certify_dim_kn_eq_n<T: Scalar>(s: &SubspaceSequence<T>, tol: &Tolerances) -> Result<KnCertificate> {
    let prefix = dims_k_prefix(s, tol)?;
    let satisfied = prefix.dims.last() == Some(&s.n());
    let is_eitff = is_tight(s, tol);
    if satisfied && !is_eitff {
        return Err(Error::InternalInconsistency(
            "dim K_n = n holds for a sequence that is not tight".into(),
        ));
    }
    Ok(KnCertificate {
        n: prefix.n,
        dims: prefix.dims,
        gaps: prefix.gaps,
        satisfied,
        is_eitff,
    })
}
