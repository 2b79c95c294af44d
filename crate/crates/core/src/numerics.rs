//! Dense field-generic linear algebra on top of `nalgebra`.
//!
//! Every algorithm in the crate is written once over the [`Scalar`] trait and
//! instantiated for `f64` (the real field) and `Complex64` (the complex field).
//! Real matrices never carry imaginary storage. The runtime tag of a scalar
//! type is [`Scalar::FIELD`].
//!
//! Hermitian matrices are handled through [`HermCoords`]: the diagonal entries
//! followed by the strictly upper triangular entries scaled by √2 (real and
//! imaginary parts separately over ℂ). With that scaling the coordinate map is
//! an isometry from the Frobenius inner product `Re tr(M N*)` to the Euclidean
//! one, so ranks and orthonormality carry over unchanged.

use std::fmt::Debug;

use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen, QR, SVD};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum ratio between the smallest accepted and largest rejected singular
/// value before a rank (and hence a dimension) counts as certified.
pub const MIN_DIMENSION_GAP: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Field {
    #[serde(rename = "R")]
    Real,
    #[serde(rename = "C")]
    Complex,
}

impl Field {
    /// Real dimension of the space of Hermitian `d × d` matrices.
    pub fn dim_h(self, d: usize) -> usize {
        match self {
            Field::Real => d * (d + 1) / 2,
            Field::Complex => d * d,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Field::Real => "R",
            Field::Complex => "C",
        }
    }

    pub fn parse(tag: &str) -> Option<Field> {
        match tag {
            "R" | "r" | "real" => Some(Field::Real),
            "C" | "c" | "complex" => Some(Field::Complex),
            _ => None,
        }
    }
}

impl std::fmt::Display for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// Scalars of the two supported fields.
pub trait Scalar: ComplexField<RealField = f64> + Copy + Debug + Send + Sync + 'static {
    const FIELD: Field;

    /// Builds a scalar from real and imaginary parts. Over ℝ the imaginary
    /// part must be zero and is dropped.
    fn from_parts(re: f64, im: f64) -> Self;

    /// A standard Gaussian sample (circularly symmetric over ℂ).
    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Scalar for f64 {
    const FIELD: Field = Field::Real;

    fn from_parts(re: f64, im: f64) -> Self {
        debug_assert!(im == 0.0, "imaginary part on the real field");
        re
    }

    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

impl Scalar for Complex64 {
    const FIELD: Field = Field::Complex;

    fn from_parts(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }

    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }
}

/// Numerical thresholds shared by every predicate in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative singular-value threshold for numerical rank.
    pub rank_rel: f64,
    /// Absolute residual threshold for verification predicates.
    pub residual_abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank_rel: 1e-8,
            residual_abs: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn new(rank_rel: f64, residual_abs: f64) -> Result<Self> {
        let ok = |x: f64| x > 0.0 && x < 1.0;
        if !ok(rank_rel) || !ok(residual_abs) {
            return Err(Error::InvalidInput(format!(
                "tolerances must lie in (0,1): rank_rel = {rank_rel}, residual_abs = {residual_abs}"
            )));
        }
        Ok(Tolerances {
            rank_rel,
            residual_abs,
        })
    }
}

/// Thin singular value decomposition `A = U diag(sigma) V*`, sigma nonincreasing.
#[derive(Debug, Clone)]
pub struct Svd<T: Scalar> {
    pub u: DMatrix<T>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<T>,
}

fn check_finite<T: Scalar>(a: &DMatrix<T>) -> Result<()> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    if a.iter().any(|x| !x.real().is_finite() || !x.imaginary().is_finite()) {
        return Err(Error::InvalidInput("non-finite matrix entry".into()));
    }
    Ok(())
}

pub fn svd<T: Scalar>(a: &DMatrix<T>) -> Result<Svd<T>> {
    check_finite(a)?;
    let raw = SVD::try_new_unordered(a.clone(), true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::InternalInconsistency("SVD failed to converge".into()))?;
    let u = raw.u.expect("requested U");
    let v_t = raw.v_t.expect("requested V*");
    let sv = raw.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let sigma = order.iter().map(|&i| sv[i]).collect();
    let u = DMatrix::from_fn(u.nrows(), order.len(), |i, j| u[(i, order[j])]);
    let v = DMatrix::from_fn(v_t.ncols(), order.len(), |i, j| v_t[(order[j], i)].conjugate());
    Ok(Svd { u, sigma, v })
}

pub fn singular_values<T: Scalar>(a: &DMatrix<T>) -> Result<Vec<f64>> {
    check_finite(a)?;
    let mut sv: Vec<f64> = SVD::try_new_unordered(a.clone(), false, false, f64::EPSILON, 0)
        .ok_or_else(|| Error::InternalInconsistency("SVD failed to converge".into()))?
        .singular_values
        .iter()
        .copied()
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

fn rank_from_sigma(sigma: &[f64], tol: &Tolerances) -> usize {
    let scale = sigma.first().copied().unwrap_or(0.0).max(1.0);
    sigma.iter().filter(|&&s| s > tol.rank_rel * scale).count()
}

/// Number of singular values above `rank_rel · max(σ_max, 1)`.
pub fn numerical_rank<T: Scalar>(a: &DMatrix<T>, tol: &Tolerances) -> Result<usize> {
    Ok(rank_from_sigma(&singular_values(a)?, tol))
}

/// A numerical rank together with the singular-value gap that separates the
/// accepted from the rejected values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankCertificate {
    pub rank: usize,
    /// Ratio of the smallest accepted to the largest rejected singular value;
    /// infinite when nothing is rejected or the rejected values are exact zeros.
    pub gap: f64,
    /// Singular values of the (zero-padded, square or tall) matrix.
    pub sigma: Vec<f64>,
}

impl RankCertificate {
    fn from_sigma(sigma: Vec<f64>, tol: &Tolerances) -> Self {
        let rank = rank_from_sigma(&sigma, tol);
        let scale = sigma.first().copied().unwrap_or(0.0).max(1.0);
        let accepted = if rank > 0 { sigma[rank - 1] } else { scale };
        let rejected = sigma.get(rank).copied().unwrap_or(0.0);
        let gap = if rejected == 0.0 {
            f64::INFINITY
        } else {
            accepted / rejected
        };
        RankCertificate { rank, gap, sigma }
    }

    pub fn is_certified(&self) -> bool {
        self.gap >= MIN_DIMENSION_GAP
    }

    pub fn require_certified(&self) -> Result<()> {
        if self.is_certified() {
            Ok(())
        } else {
            Err(Error::Uncertain {
                rank: self.rank,
                gap: self.gap,
                required: MIN_DIMENSION_GAP,
            })
        }
    }
}

/// Orthonormal basis of a real null space plus the rank certificate it came from.
#[derive(Debug, Clone)]
pub struct NullSpace {
    pub basis: Vec<DVector<f64>>,
    pub certificate: RankCertificate,
}

/// Null space of a real matrix. Wide matrices are padded with zero rows so the
/// decomposition exposes the full right singular basis.
pub fn null_space_certified(a: &DMatrix<f64>, tol: &Tolerances) -> Result<NullSpace> {
    let cols = a.ncols();
    if cols == 0 {
        return Err(Error::InvalidInput("matrix with no columns".into()));
    }
    if a.nrows() == 0 {
        let basis = (0..cols).map(|k| DVector::from_fn(cols, |i, _| f64::from(i == k))).collect();
        return Ok(NullSpace {
            basis,
            certificate: RankCertificate {
                rank: 0,
                gap: f64::INFINITY,
                sigma: vec![0.0; cols],
            },
        });
    }
    let padded;
    let work = if a.nrows() < cols {
        padded = DMatrix::from_fn(cols, cols, |i, j| if i < a.nrows() { a[(i, j)] } else { 0.0 });
        &padded
    } else {
        a
    };
    let dec = svd(work)?;
    let certificate = RankCertificate::from_sigma(dec.sigma.clone(), tol);
    let basis = (certificate.rank..cols)
        .map(|j| dec.v.column(j).into_owned())
        .collect();
    Ok(NullSpace { basis, certificate })
}

pub fn null_space(a: &DMatrix<f64>, tol: &Tolerances) -> Result<Vec<DVector<f64>>> {
    Ok(null_space_certified(a, tol)?.basis)
}

/// Rank of an arbitrary matrix with its gap certificate.
pub fn certified_rank<T: Scalar>(a: &DMatrix<T>, tol: &Tolerances) -> Result<RankCertificate> {
    Ok(RankCertificate::from_sigma(singular_values(a)?, tol))
}

/// Largest absolute entry.
pub fn max_abs<T: Scalar>(a: &DMatrix<T>) -> f64 {
    a.iter().map(|x| x.modulus()).fold(0.0, f64::max)
}

/// `‖A*A − I‖_max`.
pub fn isometry_residual<T: Scalar>(a: &DMatrix<T>) -> f64 {
    let g = a.adjoint() * a;
    max_abs(&(g - DMatrix::identity(a.ncols(), a.ncols())))
}

pub fn hermitian_residual<T: Scalar>(a: &DMatrix<T>) -> f64 {
    max_abs(&(a - a.adjoint()))
}

/// Real-coordinate vector of a Hermitian matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermCoords {
    pub field: Field,
    pub d: usize,
    pub coords: Vec<f64>,
}

/// Coordinates of the Hermitian part of `m`, no Hermitian check.
pub(crate) fn herm_coords_raw<T: Scalar>(m: &DMatrix<T>) -> Vec<f64> {
    let d = m.nrows();
    let mut out = Vec::with_capacity(T::FIELD.dim_h(d));
    for i in 0..d {
        out.push(m[(i, i)].real());
    }
    let s = std::f64::consts::SQRT_2;
    for i in 0..d {
        for j in (i + 1)..d {
            let avg = (m[(i, j)] + m[(j, i)].conjugate()) * T::from_real(0.5);
            out.push(s * avg.real());
            if T::FIELD == Field::Complex {
                out.push(s * avg.imaginary());
            }
        }
    }
    out
}

pub fn herm_to_coords<T: Scalar>(m: &DMatrix<T>, tol: &Tolerances) -> Result<HermCoords> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::InvalidInput("Hermitian matrix must be square and nonempty".into()));
    }
    let residual = hermitian_residual(m);
    if residual > tol.residual_abs {
        return Err(Error::NotHermitian { residual });
    }
    Ok(HermCoords {
        field: T::FIELD,
        d: m.nrows(),
        coords: herm_coords_raw(m),
    })
}

pub fn coords_to_herm<T: Scalar>(c: &HermCoords) -> Result<DMatrix<T>> {
    if c.field != T::FIELD {
        return Err(Error::FieldMismatch(format!(
            "coordinates over {} decoded over {}",
            c.field,
            T::FIELD
        )));
    }
    if c.coords.len() != c.field.dim_h(c.d) {
        return Err(Error::InvalidInput(format!(
            "expected {} coordinates for d = {}, got {}",
            c.field.dim_h(c.d),
            c.d,
            c.coords.len()
        )));
    }
    Ok(herm_from_raw(c.d, &c.coords))
}

pub(crate) fn herm_from_raw<T: Scalar>(d: usize, coords: &[f64]) -> DMatrix<T> {
    let mut m = DMatrix::<T>::zeros(d, d);
    for i in 0..d {
        m[(i, i)] = T::from_real(coords[i]);
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut k = d;
    for i in 0..d {
        for j in (i + 1)..d {
            let re = coords[k] * s;
            k += 1;
            let im = if T::FIELD == Field::Complex {
                k += 1;
                coords[k - 1] * s
            } else {
                0.0
            };
            let z = T::from_parts(re, im);
            m[(i, j)] = z;
            m[(j, i)] = z.conjugate();
        }
    }
    m
}

/// Orthonormal basis of the Hermitian `d × d` matrices matching the
/// coordinate order of [`HermCoords`].
pub fn herm_basis<T: Scalar>(d: usize) -> Vec<DMatrix<T>> {
    let n = T::FIELD.dim_h(d);
    let mut e = vec![0.0; n];
    (0..n)
        .map(|k| {
            e[k] = 1.0;
            let m = herm_from_raw(d, &e);
            e[k] = 0.0;
            m
        })
        .collect()
}

/// Coordinates of the traceless part of a Hermitian `r × r` matrix in an
/// orthonormal basis of the traceless subspace (length `dim_h(r) − 1`).
///
/// The diagonal is mapped through the Helmert basis of the sum-zero
/// hyperplane, which discards exactly the trace direction.
pub(crate) fn traceless_coords<T: Scalar>(m: &DMatrix<T>) -> Vec<f64> {
    let r = m.nrows();
    let raw = herm_coords_raw(m);
    let mut out = Vec::with_capacity(raw.len().saturating_sub(1));
    let mut prefix = 0.0;
    for k in 1..r {
        prefix += raw[k - 1];
        let kf = k as f64;
        out.push((prefix - kf * raw[k]) / (kf * (kf + 1.0)).sqrt());
    }
    out.extend_from_slice(&raw[r..]);
    out
}

/// Extends an isometry `Φ ∈ F^{d×r}` to a unitary whose first `r` columns are `Φ`.
///
/// Standard basis vectors are appended greedily, always taking the one with
/// the largest component orthogonal to the current columns.
pub fn complete_to_unitary<T: Scalar>(phi: &DMatrix<T>, tol: &Tolerances) -> Result<DMatrix<T>> {
    let (d, r) = phi.shape();
    if r > d || r == 0 {
        return Err(Error::InvalidInput(format!("cannot complete a {d}x{r} matrix")));
    }
    let residual = isometry_residual(phi);
    if residual > tol.residual_abs {
        return Err(Error::NotIsometry { residual });
    }
    let mut cols: Vec<DVector<T>> = phi.column_iter().map(|c| c.into_owned()).collect();
    let mut used = vec![false; d];
    while cols.len() < d {
        let mut best: Option<(usize, DVector<T>, f64)> = None;
        for k in (0..d).filter(|&k| !used[k]) {
            let mut v = DVector::<T>::zeros(d);
            v[k] = T::one();
            // two passes of classical Gram-Schmidt
            for _ in 0..2 {
                for q in &cols {
                    let c = q.dotc(&v);
                    v -= q * c;
                }
            }
            let norm = v.norm();
            if best.as_ref().is_none_or(|b| norm > b.2) {
                best = Some((k, v, norm));
            }
        }
        let (k, v, norm) = best.expect("a remaining basis vector exists");
        used[k] = true;
        cols.push(v.unscale(norm));
    }
    Ok(DMatrix::from_columns(&cols))
}

/// Unitary polar factor `U V*` of a square or tall matrix.
pub fn polar_factor<T: Scalar>(a: &DMatrix<T>) -> Result<DMatrix<T>> {
    let dec = svd(a)?;
    Ok(&dec.u * dec.v.adjoint())
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen<T: Scalar>(a: &DMatrix<T>) -> Result<(Vec<f64>, DMatrix<T>)> {
    check_finite(a)?;
    let sym = (a + a.adjoint()) * T::from_real(0.5);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::InternalInconsistency("eigensolver failed to converge".into()))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(a.nrows(), order.len(), |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

/// Haar-distributed unitary (orthogonal over ℝ) via QR of a Gaussian matrix.
pub fn random_unitary<T: Scalar, R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<T> {
    let g = DMatrix::<T>::from_fn(n, n, |_, _| T::gaussian(rng));
    let qr = QR::new(g);
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let x = r[(j, j)];
        let m = x.modulus();
        if m > 0.0 {
            let phase = x.unscale(m);
            for i in 0..n {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// Block-diagonal matrix `diag(A, B)`.
pub fn block_diag<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut m = DMatrix::zeros(ra + rb, ca + cb);
    m.view_mut((0, 0), (ra, ca)).copy_from(a);
    m.view_mut((ra, ca), (rb, cb)).copy_from(b);
    m
}

/// Stacks matrices with equal column counts on top of each other.
pub fn vstack<T: Scalar>(blocks: &[&DMatrix<T>]) -> DMatrix<T> {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut m = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        m.view_mut((at, 0), b.shape()).copy_from(*b);
        at += b.nrows();
    }
    m
}

/// Places matrices with equal row counts side by side.
pub fn hstack<T: Scalar>(blocks: &[&DMatrix<T>]) -> DMatrix<T> {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut m = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        m.view_mut((0, at), b.shape()).copy_from(*b);
        at += b.ncols();
    }
    m
}

/// Real `f64` matrix viewed over the field `T`.
pub fn lift<T: Scalar>(a: &DMatrix<f64>) -> DMatrix<T> {
    a.map(T::from_real)
}

/// `I_n` scaled by `s`.
pub fn scaled_identity<T: Scalar>(n: usize, s: f64) -> DMatrix<T> {
    DMatrix::from_diagonal_element(n, n, T::from_real(s))
}
