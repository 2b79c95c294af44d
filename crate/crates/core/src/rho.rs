//! ρ-spaces: ρ-orthonormal families of unitaries, simplices inside them, the
//! `EITFF(2r, r, n)` they induce and the space of `C_0` that controls `dim K_n`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::bounds::{radon_hurwitz, RadonHurwitzInput};
use crate::corner::dims_k_prefix;
use crate::error::{Error, Result};
use crate::numerics::{
    herm_coords_raw, isometry_residual, max_abs, null_space_certified, random_unitary, vstack, RankCertificate,
    Scalar, Tolerances,
};
use crate::subspaces::SubspaceSequence;

/// `(1/r)·Re tr(AB*)`.
pub fn rho_inner<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<f64> {
    if !a.is_square() || a.shape() != b.shape() || a.nrows() == 0 {
        return Err(Error::InvalidInput(format!(
            "rho inner product needs equal square shapes, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let t: f64 = a.iter().zip(b.iter()).map(|(x, y)| (*x * y.conjugate()).real()).sum();
    Ok(t / a.nrows() as f64)
}

/// Largest unitarity or anticommutation residual `‖C_i*C_j + C_j*C_i‖_max`, `i ≠ j`.
pub fn rho_orthonormality_residual<T: Scalar>(mats: &[DMatrix<T>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in mats.iter().enumerate() {
        worst = worst.max(isometry_residual(a));
        for b in &mats[i + 1..] {
            worst = worst.max(max_abs(&(a.adjoint() * b + b.adjoint() * a)));
        }
    }
    worst
}

/// A ρ-orthonormal sequence of `r×r` unitaries.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoSequence<T: Scalar> {
    pub r: usize,
    pub mats: Vec<DMatrix<T>>,
}

impl<T: Scalar> RhoSequence<T> {
    pub fn new(mats: Vec<DMatrix<T>>, tol: &Tolerances) -> Result<Self> {
        let r = mats
            .first()
            .map(|m| m.nrows())
            .ok_or_else(|| Error::InvalidInput("empty rho sequence".into()))?;
        if r == 0 || mats.iter().any(|m| m.shape() != (r, r)) {
            return Err(Error::InvalidInput("rho sequence needs nonempty square matrices of one size".into()));
        }
        let rho = radon_hurwitz(r, T::FIELD)?;
        if mats.len() > rho {
            return Err(Error::InvalidInput(format!(
                "{} matrices exceed the Radon-Hurwitz number {rho} of r = {r}",
                mats.len()
            )));
        }
        let residual = rho_orthonormality_residual(&mats);
        if residual > tol.residual_abs {
            return Err(Error::InvalidInput(format!("sequence is not rho-orthonormal (residual {residual:e})")));
        }
        Ok(RhoSequence { r, mats })
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    /// `Σ_j x_j C_j`.
    pub fn combine(&self, x: &[f64]) -> DMatrix<T> {
        let mut out = DMatrix::zeros(self.r, self.r);
        for (c, &w) in self.mats.iter().zip(x) {
            out += c * T::from_real(w);
        }
        out
    }
}

fn kron<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    a.kronecker(b)
}

/// One doubling step `C_j ↦ ((0, −C_j*), (C_j, 0))`, then `diag(iI, −iI)` and `I`.
fn double_complex(mats: &[DMatrix<Complex64>]) -> Vec<DMatrix<Complex64>> {
    let s = mats[0].nrows();
    let mut out: Vec<DMatrix<Complex64>> = mats
        .iter()
        .map(|c| {
            let mut d = DMatrix::zeros(2 * s, 2 * s);
            d.view_mut((0, s), (s, s)).copy_from(&(-c.adjoint()));
            d.view_mut((s, 0), (s, s)).copy_from(c);
            d
        })
        .collect();
    let mut diag = DMatrix::zeros(2 * s, 2 * s);
    for i in 0..s {
        diag[(i, i)] = Complex64::I;
        diag[(s + i, s + i)] = -Complex64::I;
    }
    out.push(diag);
    out.push(DMatrix::identity(2 * s, 2 * s));
    out
}

/// A ρ-orthonormal sequence of length `ρ_ℂ(r)` whose `C_0`-space is `{0}`.
///
/// With `r = (2a+1)2^k` it starts from `(iI, I)` in size `2a+1` and doubles `k` times.
pub fn build_rho_complex(r: usize) -> Result<RhoSequence<Complex64>> {
    let dec = RadonHurwitzInput::decompose(r)?;
    let odd = 2 * dec.a + 1;
    let k = r.trailing_zeros();
    let id = DMatrix::<Complex64>::identity(odd, odd);
    let mut mats = vec![&id * Complex64::I, id];
    for _ in 0..k {
        mats = double_complex(&mats);
    }
    RhoSequence::new(mats, &Tolerances::default())
}

/// Left multiplication by the imaginary units of an algebra with basis
/// `e_0 = 1, e_1, …`, where each triple `(a, b, c)` means `e_a e_b = e_c`
/// (cyclically, and anticommuting).
fn left_multiplications(dim: usize, triples: &[(usize, usize, usize)]) -> Vec<DMatrix<f64>> {
    // table[a][b] = (sign, index) of e_a e_b
    let mut table = vec![vec![(0.0, 0usize); dim]; dim];
    for a in 0..dim {
        table[0][a] = (1.0, a);
        table[a][0] = (1.0, a);
        if a > 0 {
            table[a][a] = (-1.0, 0);
        }
    }
    for &(a, b, c) in triples {
        for (x, y, z) in [(a, b, c), (b, c, a), (c, a, b)] {
            table[x][y] = (1.0, z);
            table[y][x] = (-1.0, z);
        }
    }
    (1..dim)
        .map(|a| {
            let mut m = DMatrix::zeros(dim, dim);
            for b in 0..dim {
                let (sign, c) = table[a][b];
                m[(c, b)] = sign;
            }
            m
        })
        .collect()
}

const QUATERNION_TRIPLES: [(usize, usize, usize); 1] = [(1, 2, 3)];
const OCTONION_TRIPLES: [(usize, usize, usize); 7] =
    [(1, 2, 3), (1, 4, 5), (1, 7, 6), (2, 4, 6), (2, 5, 7), (3, 4, 7), (3, 6, 5)];

/// ρ-orthonormal family of length `ρ_ℝ(2^c)` in `ℝ^{2^c×2^c}`, `c ≤ 3`, ending with `I`.
fn dyadic_real_family(c: usize) -> Vec<DMatrix<f64>> {
    let s = 1usize << c;
    let mut mats = match c {
        0 => vec![],
        1 => vec![DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])],
        2 => left_multiplications(4, &QUATERNION_TRIPLES),
        _ => left_multiplications(8, &OCTONION_TRIPLES),
    };
    mats.push(DMatrix::identity(s, s));
    mats
}

/// A ρ-orthonormal sequence of length `ρ_ℝ(r)` for `r = (2a+1)2^c`, `c ≤ 3`:
/// the classical families `{I}`, `{J, I}`, quaternion and octonion left
/// multiplications (each followed by `I`), tensored with `I_{2a+1}`.
pub fn build_rho_real(r: usize) -> Result<RhoSequence<f64>> {
    let dec = RadonHurwitzInput::decompose(r)?;
    if dec.b > 0 {
        return Err(Error::UnsupportedDyadicPart(r));
    }
    let odd = DMatrix::<f64>::identity(2 * dec.a + 1, 2 * dec.a + 1);
    let mats = dyadic_real_family(dec.c).iter().map(|m| kron(m, &odd)).collect();
    RhoSequence::new(mats, &Tolerances { rank_rel: 1e-8, residual_abs: 1e-12 })
}

/// `m` unitaries with pairwise ρ-inner product `−1/(m−1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Simplex<T: Scalar> {
    pub r: usize,
    pub mats: Vec<DMatrix<T>>,
}

impl<T: Scalar> Simplex<T> {
    pub fn m(&self) -> usize {
        self.mats.len()
    }
}

/// Vertices of a regular simplex of `m` unit vectors in `ℝ^{m−1}` (Helmert coordinates).
pub fn regular_simplex(m: usize) -> Vec<Vec<f64>> {
    let scale = (m as f64 / (m as f64 - 1.0)).sqrt();
    (0..m)
        .map(|i| {
            (1..m)
                .map(|k| {
                    let kf = k as f64;
                    let h = if i < k {
                        1.0
                    } else if i == k {
                        -kf
                    } else {
                        0.0
                    };
                    scale * h / (kf * (kf + 1.0)).sqrt()
                })
                .collect()
        })
        .collect()
}

fn simplex_from_coords<T: Scalar>(basis: &RhoSequence<T>, coords: &[Vec<f64>], tol: &Tolerances) -> Result<Simplex<T>> {
    let m = coords.len();
    let mats: Vec<DMatrix<T>> = coords.iter().map(|x| basis.combine(x)).collect();
    let target = -1.0 / (m as f64 - 1.0);
    for (i, a) in mats.iter().enumerate() {
        let u = isometry_residual(a);
        if u > tol.residual_abs {
            return Err(Error::InternalInconsistency(format!("simplex element {i} is not unitary ({u:e})")));
        }
        for b in &mats[i + 1..] {
            let z = rho_inner(a, b)?;
            if (z - target).abs() > tol.residual_abs {
                return Err(Error::InternalInconsistency(format!("simplex inner product {z} != {target}")));
            }
        }
    }
    Ok(Simplex { r: basis.r, mats })
}

/// `B_i = Σ_j v_i[j] C_j` over the first `m−1` basis elements, with `v_i` regular-simplex vertices.
pub fn simplex_from_basis<T: Scalar>(basis: &RhoSequence<T>, m: usize) -> Result<Simplex<T>> {
    if m < 2 {
        return Err(Error::InvalidInput(format!("a simplex needs m >= 2, got {m}")));
    }
    if m - 1 > basis.len() {
        return Err(Error::BasisTooShort { len: basis.len(), m });
    }
    simplex_from_coords(basis, &regular_simplex(m), &Tolerances::default())
}

/// A simplex rotated by a random orthogonal map of the whole ρ-space.
pub fn random_simplex<T: Scalar, R: Rng + ?Sized>(basis: &RhoSequence<T>, m: usize, rng: &mut R) -> Result<Simplex<T>> {
    if m < 2 {
        return Err(Error::InvalidInput(format!("a simplex needs m >= 2, got {m}")));
    }
    if m - 1 > basis.len() {
        return Err(Error::BasisTooShort { len: basis.len(), m });
    }
    let l = basis.len();
    let q = random_unitary::<f64, _>(l, rng);
    let coords: Vec<Vec<f64>> = regular_simplex(m)
        .into_iter()
        .map(|v| {
            let padded = DVector::from_fn(l, |i, _| v.get(i).copied().unwrap_or(0.0));
            (&q * padded).iter().copied().collect()
        })
        .collect();
    simplex_from_coords(basis, &coords, &Tolerances::default())
}

/// `Φ_1 = (I; 0)`, `Φ_j = (αI; βB_j)` with `α = √((n−2)/(2n−2))`, `n = m + 1`.
pub fn eitff_from_simplex<T: Scalar>(b: &Simplex<T>) -> Result<SubspaceSequence<T>> {
    let r = b.r;
    let n = b.m() + 1;
    let alpha = ((n as f64 - 2.0) / (2.0 * n as f64 - 2.0)).sqrt();
    let beta = (1.0 - alpha * alpha).sqrt();
    let id = DMatrix::<T>::identity(r, r);
    let mut phis = vec![vstack(&[&id, &DMatrix::zeros(r, r)])];
    for bj in &b.mats {
        phis.push(vstack(&[&(&id * T::from_real(alpha)), &(bj * T::from_real(beta))]));
    }
    SubspaceSequence::new(phis, &Tolerances::default())
}

/// Real basis of `{C_0 : C_0*C_j + C_j*C_0 = 0 for every j}`.
#[derive(Debug, Clone)]
pub struct C0Space<T: Scalar> {
    pub basis: Vec<DMatrix<T>>,
    pub certificate: RankCertificate,
}

impl<T: Scalar> C0Space<T> {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// Real parameters of `F^{r×r}`: entries (and imaginary parts over ℂ) in column order.
fn unit_matrix<T: Scalar>(r: usize, k: usize) -> DMatrix<T> {
    let mut m = DMatrix::zeros(r, r);
    if T::FIELD == crate::Field::Real {
        m[k] = T::one();
    } else {
        m[k / 2] = T::from_parts(k.is_multiple_of(2) as u8 as f64, (!k.is_multiple_of(2)) as u8 as f64);
    }
    m
}

pub fn c0_space<T: Scalar>(mats: &[DMatrix<T>], tol: &Tolerances) -> Result<C0Space<T>> {
    let r = mats
        .first()
        .map(|m| m.nrows())
        .ok_or_else(|| Error::InvalidInput("empty matrix list".into()))?;
    if mats.iter().any(|m| m.shape() != (r, r)) {
        return Err(Error::InvalidInput("matrices must be square of one size".into()));
    }
    let params = if T::FIELD == crate::Field::Real { r * r } else { 2 * r * r };
    let rows_per = T::FIELD.dim_h(r);
    let mut a = DMatrix::<f64>::zeros(rows_per * mats.len(), params);
    for k in 0..params {
        let e = unit_matrix::<T>(r, k);
        for (j, c) in mats.iter().enumerate() {
            let image = e.adjoint() * c + c.adjoint() * &e;
            for (row, v) in herm_coords_raw(&image).into_iter().enumerate() {
                a[(j * rows_per + row, k)] = v;
            }
        }
    }
    let ns = null_space_certified(&a, tol)?;
    ns.certificate.require_certified()?;
    let basis = ns
        .basis
        .iter()
        .map(|v| {
            let mut m = DMatrix::zeros(r, r);
            for (k, &w) in v.iter().enumerate() {
                m += unit_matrix::<T>(r, k) * T::from_real(w);
            }
            m
        })
        .collect();
    Ok(C0Space {
        basis,
        certificate: ns.certificate,
    })
}

/// ρ-orthonormal basis of the real span of `mats` (Gram–Schmidt in `⟨·,·⟩_ρ`).
pub fn rho_orthonormal_basis<T: Scalar>(mats: &[DMatrix<T>], tol: &Tolerances) -> Result<Vec<DMatrix<T>>> {
    let mut out: Vec<DMatrix<T>> = Vec::new();
    for m in mats {
        let mut v = m.clone();
        for _ in 0..2 {
            for q in &out {
                let c = rho_inner(&v, q)?;
                v -= q * T::from_real(c);
            }
        }
        let norm = rho_inner(&v, &v)?.sqrt();
        if norm > tol.rank_rel.sqrt() {
            out.push(v.unscale(norm));
        }
    }
    Ok(out)
}

/// `n + dim C_0-space` of the simplex's span, checked against the corner
/// module's `dim K_n` for the EITFF built from the simplex.
pub fn dim_kn_via_sform<T: Scalar>(b: &Simplex<T>, s: &SubspaceSequence<T>, tol: &Tolerances) -> Result<usize> {
    let span = rho_orthonormal_basis(&b.mats, tol)?;
    let via = s.n() + c0_space(&span, tol)?.dim();
    let direct = *dims_k_prefix(s, tol)?.dims.last().expect("n >= 1");
    if via != direct {
        return Err(Error::InternalInconsistency(format!(
            "n + dim C0 = {via} but dim K_n = {direct}"
        )));
    }
    Ok(via)
}

/// The family `C_j = D⊗A_j` (`j < ρ`), `C_ρ = I_r` with `D = diag(1, −I_{2a})`,
/// and the explicit nonzero `C_0` that witnesses `dim K_n > n`.
#[derive(Debug, Clone)]
pub struct Counterexample<T: Scalar> {
    pub family: RhoSequence<T>,
    pub c0: DMatrix<T>,
}

pub fn counterexample_not_power_of_two<T: Scalar>(r: usize) -> Result<Counterexample<T>> {
    let dec = RadonHurwitzInput::decompose(r)?;
    if dec.a == 0 {
        return Err(Error::NotApplicable(format!("r = {r} is a power of 2")));
    }
    let k = r.trailing_zeros() as usize;
    let s = 1usize << k;
    let a_family: Vec<DMatrix<T>> = match T::FIELD {
        crate::Field::Real => {
            if k > 3 {
                return Err(Error::UnsupportedDyadicPart(r));
            }
            dyadic_real_family(k).iter().map(|m| m.map(T::from_real)).collect()
        }
        crate::Field::Complex => build_rho_complex(s)?
            .mats
            .iter()
            .map(|m| m.map(|z| T::from_parts(z.re, z.im)))
            .collect(),
    };
    let odd = 2 * dec.a + 1;
    let mut d = DMatrix::<T>::identity(odd, odd);
    for i in 1..odd {
        d[(i, i)] = -T::one();
    }
    let rho = a_family.len();
    let mut mats: Vec<DMatrix<T>> = a_family[..rho - 1].iter().map(|a| kron(&d, a)).collect();
    mats.push(DMatrix::identity(r, r));
    let family = RhoSequence::new(mats, &Tolerances { rank_rel: 1e-8, residual_abs: 1e-12 })?;
    let mut c0 = DMatrix::<T>::zeros(r, r);
    for i in 0..s {
        c0[(i, s + i)] = T::one();
        c0[(s + i, i)] = -T::one();
    }
    let residual = family
        .mats
        .iter()
        .map(|c| max_abs(&(c0.adjoint() * c + c.adjoint() * &c0)))
        .fold(0.0, f64::max);
    if residual > 1e-12 {
        return Err(Error::InternalInconsistency(format!("C0 constraint residual {residual:e}")));
    }
    Ok(Counterexample { family, c0 })
}
