//! Subspace sequences, principal angles, isoclinism and the normal form of an
//! equi-isoclinic sequence.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{
    complete_to_unitary, isometry_residual, max_abs, numerical_rank, scaled_identity, singular_values,
    vstack, Field, Scalar, Tolerances,
};

/// `n` isometries `Φ_j ∈ F^{d×r}`, each representing an `r`-dimensional subspace of `F^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceSequence<T: Scalar> {
    d: usize,
    r: usize,
    isometries: Vec<DMatrix<T>>,
}

impl<T: Scalar> SubspaceSequence<T> {
    /// Validates shapes and checks `‖Φ_j*Φ_j − I‖_max ≤ residual_abs` for every `j`.
    pub fn new(isometries: Vec<DMatrix<T>>, tol: &Tolerances) -> Result<Self> {
        let first = isometries
            .first()
            .ok_or_else(|| Error::InvalidInput("a subspace sequence needs n >= 1".into()))?;
        let (d, r) = first.shape();
        if r == 0 || r > d {
            return Err(Error::InvalidInput(format!("need 1 <= r <= d, got d = {d}, r = {r}")));
        }
        for (j, phi) in isometries.iter().enumerate() {
            if phi.shape() != (d, r) {
                return Err(Error::InvalidInput(format!(
                    "isometry {j} has shape {:?}, expected ({d}, {r})",
                    phi.shape()
                )));
            }
            let residual = isometry_residual(phi);
            if !(residual <= tol.residual_abs) {
                return Err(Error::NotIsometry { residual });
            }
        }
        Ok(SubspaceSequence { d, r, isometries })
    }

    pub fn field(&self) -> Field {
        T::FIELD
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn n(&self) -> usize {
        self.isometries.len()
    }

    pub fn isometries(&self) -> &[DMatrix<T>] {
        &self.isometries
    }

    pub fn isometry(&self, j: usize) -> &DMatrix<T> {
        &self.isometries[j]
    }

    pub fn into_isometries(self) -> Vec<DMatrix<T>> {
        self.isometries
    }

    /// Orthogonal projection `Φ_j Φ_j*`.
    pub fn projection(&self, j: usize) -> DMatrix<T> {
        let phi = &self.isometries[j];
        phi * phi.adjoint()
    }

    /// Fusion synthesis matrix `[Φ_1 ⋯ Φ_n] ∈ F^{d×rn}`.
    pub fn synthesis(&self) -> DMatrix<T> {
        let refs: Vec<&DMatrix<T>> = self.isometries.iter().collect();
        crate::numerics::hstack(&refs)
    }

    /// The same subspaces viewed inside `F^{d+extra}` (zero rows appended).
    pub fn embed(&self, extra: usize) -> Self {
        let isometries = self
            .isometries
            .iter()
            .map(|phi| phi.clone().resize_vertically(self.d + extra, T::zero()))
            .collect();
        SubspaceSequence {
            d: self.d + extra,
            r: self.r,
            isometries,
        }
    }

    /// The equivalent sequence `U Φ_j Z_j` for a unitary `U` and unitaries `Z_j`.
    pub fn transformed(&self, left: &DMatrix<T>, rights: &[DMatrix<T>], tol: &Tolerances) -> Result<Self> {
        if rights.len() != self.n() {
            return Err(Error::InvalidInput("one right unitary per subspace is required".into()));
        }
        let isometries = self
            .isometries
            .iter()
            .zip(rights)
            .map(|(phi, z)| left * phi * z)
            .collect();
        SubspaceSequence::new(isometries, tol)
    }

    /// The subsequence selected by `indices` (0-based).
    pub fn subsequence(&self, indices: &[usize]) -> Result<Self> {
        let isometries = indices
            .iter()
            .map(|&j| {
                self.isometries
                    .get(j)
                    .cloned()
                    .ok_or_else(|| Error::InvalidInput(format!("index {j} out of range for n = {}", self.n())))
            })
            .collect::<Result<Vec<_>>>()?;
        if isometries.is_empty() {
            return Err(Error::InvalidInput("empty subsequence".into()));
        }
        Ok(SubspaceSequence {
            d: self.d,
            r: self.r,
            isometries,
        })
    }
}

/// A subspace sequence whose field is only known at runtime.
#[derive(Debug, Clone, PartialEq)]
pub enum AnySequence {
    Real(SubspaceSequence<f64>),
    Complex(SubspaceSequence<Complex64>),
}

impl AnySequence {
    pub fn field(&self) -> Field {
        match self {
            AnySequence::Real(_) => Field::Real,
            AnySequence::Complex(_) => Field::Complex,
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        match self {
            AnySequence::Real(s) => (s.d(), s.r(), s.n()),
            AnySequence::Complex(s) => (s.d(), s.r(), s.n()),
        }
    }
}

impl From<SubspaceSequence<f64>> for AnySequence {
    fn from(s: SubspaceSequence<f64>) -> Self {
        AnySequence::Real(s)
    }
}

impl From<SubspaceSequence<Complex64>> for AnySequence {
    fn from(s: SubspaceSequence<Complex64>) -> Self {
        AnySequence::Complex(s)
    }
}

/// Principal angles in radians, nondecreasing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrincipalAngles {
    pub angles: Vec<f64>,
}

fn lex_cmp<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let o = x
            .real()
            .total_cmp(&y.real())
            .then(x.imaginary().total_cmp(&y.imaginary()));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

/// Cosines of the principal angles, `σ_j(Φ*Ψ)` clamped into `[0,1]`, nonincreasing.
pub fn principal_cosines<T: Scalar>(phi: &DMatrix<T>, psi: &DMatrix<T>) -> Result<Vec<f64>> {
    if phi.shape() != psi.shape() {
        return Err(Error::InvalidInput(format!(
            "isometries of shapes {:?} and {:?}",
            phi.shape(),
            psi.shape()
        )));
    }
    // evaluate in a canonical order so the result is symmetric bit for bit
    let (a, b) = if lex_cmp(phi, psi) == Ordering::Greater {
        (psi, phi)
    } else {
        (phi, psi)
    };
    let sv = singular_values(&(a.adjoint() * b))?;
    Ok(sv.into_iter().map(|s| s.clamp(0.0, 1.0)).collect())
}

pub fn principal_angles<T: Scalar>(phi: &DMatrix<T>, psi: &DMatrix<T>) -> Result<PrincipalAngles> {
    let angles = principal_cosines(phi, psi)?.into_iter().map(f64::acos).collect();
    Ok(PrincipalAngles { angles })
}

/// `max_{i≠j} ‖Φ_i*Φ_j‖_op`.
pub fn block_coherence<T: Scalar>(s: &SubspaceSequence<T>) -> Result<f64> {
    if s.n() < 2 {
        return Err(Error::InvalidInput("block coherence needs n >= 2".into()));
    }
    let mut mu: f64 = 0.0;
    for i in 0..s.n() {
        for j in (i + 1)..s.n() {
            let sv = principal_cosines(s.isometry(i), s.isometry(j))?;
            mu = mu.max(sv[0]);
        }
    }
    Ok(mu.clamp(0.0, 1.0))
}

/// Pairwise isoclinism statistics of a sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsoclinismReport {
    /// Common parameter when the sequence is equi-isoclinic within tolerance.
    pub alpha: Option<f64>,
    /// Mean over all pairs of the mean singular value.
    pub mean: f64,
    /// Largest spread of singular values inside a single pair.
    pub within_pair_spread: f64,
    /// Spread of the per-pair means across pairs.
    pub across_pair_spread: f64,
}

pub fn isoclinism_report<T: Scalar>(s: &SubspaceSequence<T>, tol: &Tolerances) -> Result<IsoclinismReport> {
    if s.n() < 2 {
        return Err(Error::InvalidInput("isoclinism needs n >= 2".into()));
    }
    let mut within: f64 = 0.0;
    let mut means = Vec::new();
    for i in 0..s.n() {
        for j in (i + 1)..s.n() {
            let sv = principal_cosines(s.isometry(i), s.isometry(j))?;
            within = within.max(sv[0] - sv[sv.len() - 1]);
            means.push(sv.iter().sum::<f64>() / sv.len() as f64);
        }
    }
    let mean = means.iter().sum::<f64>() / means.len() as f64;
    let hi = means.iter().copied().fold(f64::MIN, f64::max);
    let lo = means.iter().copied().fold(f64::MAX, f64::min);
    let across = hi - lo;
    let alpha = (within <= tol.residual_abs && across <= tol.residual_abs).then_some(mean.clamp(0.0, 1.0));
    Ok(IsoclinismReport {
        alpha,
        mean,
        within_pair_spread: within,
        across_pair_spread: across,
    })
}

/// The common isoclinism parameter, or `None` when the sequence is not equi-isoclinic.
pub fn is_equi_isoclinic<T: Scalar>(s: &SubspaceSequence<T>, tol: &Tolerances) -> Option<f64> {
    isoclinism_report(s, tol).ok().and_then(|r| r.alpha)
}

/// Residuals of the normal-form identities for subspaces `j ≥ 3`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct NormalFormResiduals {
    /// `max_j ‖U_j*U_j − I‖_max`.
    pub unitary: f64,
    /// `max_j ‖X_jX_j* − X_j*X_j‖_max`.
    pub normal: f64,
    /// `min_j σ_min(X_j)`; positive means every `X_j` is invertible.
    pub min_singular_x: f64,
    /// `max_j ‖Y_j*Y_j − ((1−3α²)I + α³(U_j+U_j*))/(1−α²)‖_max`.
    pub gram_y: f64,
}

/// An equi-isoclinic sequence in normal form:
/// `Φ_1 = (I; 0; 0)`, `Φ_2 = (αI; βI; 0)`, `Φ_j = (αI; X_j; Y_j)` for `j ≥ 3`.
#[derive(Debug, Clone)]
pub struct NormalizedEi<T: Scalar> {
    pub base: SubspaceSequence<T>,
    pub alpha: f64,
    pub beta: f64,
    /// Middle blocks `X_j` for `j ≥ 3`.
    pub x: Vec<DMatrix<T>>,
    /// Bottom blocks `Y_j ∈ F^{(d−2r)×r}` for `j ≥ 3`.
    pub y: Vec<DMatrix<T>>,
    /// `U_j = αI + (β/α) X_j`, present when `α ≠ 0`.
    pub u: Option<Vec<DMatrix<T>>>,
    /// The left unitary `L` with `base_j = L Ψ_j Z_j`.
    pub left: DMatrix<T>,
    /// The right unitaries `Z_j`.
    pub rights: Vec<DMatrix<T>>,
    pub residuals: NormalFormResiduals,
}

/// Brings an `α`-EI with `α ∈ [0,1)` and `d ≥ 2r` into normal form by one left
/// unitary and per-subspace right unitaries.
pub fn normalize_ei<T: Scalar>(s: &SubspaceSequence<T>, alpha: f64, tol: &Tolerances) -> Result<NormalizedEi<T>> {
    let (d, r, n) = (s.d(), s.r(), s.n());
    if d < 2 * r {
        return Err(Error::DimensionTooSmall { d, r });
    }
    if n < 2 {
        return Err(Error::InvalidInput("normalization needs n >= 2".into()));
    }
    let measured = isoclinism_report(s, tol)?
        .alpha
        .ok_or_else(|| Error::NotEquiIsoclinic("pairwise singular values differ".into()))?;
    if (measured - alpha).abs() > tol.residual_abs {
        return Err(Error::NotEquiIsoclinic(format!("measured alpha {measured} but {alpha} was given")));
    }
    if !(0.0..1.0 - tol.residual_abs).contains(&alpha) {
        return Err(Error::NotEquiIsoclinic(format!("alpha = {alpha} is not in [0,1)")));
    }
    let beta = (1.0 - alpha * alpha).sqrt();
    let zero_alpha = alpha <= tol.residual_abs;

    let v = complete_to_unitary(s.isometry(0), tol)?.adjoint();
    let mut rights = vec![DMatrix::<T>::identity(r, r)];
    for j in 1..n {
        if zero_alpha {
            rights.push(DMatrix::identity(r, r));
        } else {
            let a = s.isometry(0).adjoint() * s.isometry(j);
            rights.push(a.adjoint().unscale(alpha));
        }
    }
    let second = &v * s.isometry(1) * &rights[1];
    let tail = second.rows(r, d - r).unscale(beta);
    let w = complete_to_unitary(&tail, tol)?.adjoint();
    let mut left = DMatrix::<T>::identity(d, d);
    left.view_mut((r, r), (d - r, d - r)).copy_from(&w);
    let left = left * v;

    let mut isometries = Vec::with_capacity(n);
    let mut snap: f64 = 0.0;
    for j in 0..n {
        let mut phi = &left * s.isometry(j) * &rights[j];
        let mut exact_top = scaled_identity::<T>(r, if j == 0 { 1.0 } else { alpha });
        if zero_alpha && j > 0 {
            exact_top.fill(T::zero());
        }
        snap = snap.max(max_abs(&(phi.rows(0, r) - &exact_top)));
        phi.rows_mut(0, r).copy_from(&exact_top);
        if j < 2 {
            let mut exact = DMatrix::<T>::zeros(d, r);
            exact.rows_mut(0, r).copy_from(&exact_top);
            if j == 1 {
                exact.rows_mut(r, r).copy_from(&scaled_identity(r, beta));
            }
            snap = snap.max(max_abs(&(&phi - &exact)));
            phi = exact;
        }
        isometries.push(phi);
    }
    let slack = tol.residual_abs * if zero_alpha { 1.0 } else { (1.0 + 1.0 / alpha).powi(2) };
    if snap > slack {
        return Err(Error::NotEquiIsoclinic(format!("normal form residual {snap:e}")));
    }

    let x: Vec<DMatrix<T>> = isometries[2..].iter().map(|p| p.rows(r, r).into_owned()).collect();
    let y: Vec<DMatrix<T>> = isometries[2..].iter().map(|p| p.rows(2 * r, d - 2 * r).into_owned()).collect();
    let mut residuals = NormalFormResiduals {
        min_singular_x: f64::INFINITY,
        ..Default::default()
    };
    let u = if zero_alpha {
        None
    } else {
        let us: Vec<DMatrix<T>> = x
            .iter()
            .map(|xj| scaled_identity::<T>(r, alpha) + xj * T::from_real(beta / alpha))
            .collect();
        for ((xj, yj), uj) in x.iter().zip(&y).zip(&us) {
            residuals.unitary = residuals.unitary.max(isometry_residual(uj));
            residuals.normal = residuals
                .normal
                .max(max_abs(&(xj * xj.adjoint() - xj.adjoint() * xj)));
            let smin = singular_values(xj)?.last().copied().unwrap_or(0.0);
            residuals.min_singular_x = residuals.min_singular_x.min(smin);
            let a2 = alpha * alpha;
            let expected = (scaled_identity::<T>(r, 1.0 - 3.0 * a2) + (uj + uj.adjoint()) * T::from_real(a2 * alpha))
                .unscale(1.0 - a2);
            residuals.gram_y = residuals.gram_y.max(max_abs(&(yj.adjoint() * yj - expected)));
        }
        if residuals.unitary > slack || residuals.normal > slack || residuals.gram_y > slack {
            return Err(Error::NotEquiIsoclinic(format!("normal-form identities fail: {residuals:?}")));
        }
        if !x.is_empty() && residuals.min_singular_x <= tol.rank_rel {
            return Err(Error::NotEquiIsoclinic("a middle block X_j is singular".into()));
        }
        Some(us)
    };
    Ok(NormalizedEi {
        base: SubspaceSequence::new(isometries, &Tolerances { residual_abs: slack.min(0.5), ..*tol })?,
        alpha,
        beta,
        x,
        y,
        u,
        left,
        rights,
        residuals,
    })
}

/// Scalars that define the three-subspace construction for `(d, r, α)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ei3Parameters {
    pub x1: f64,
    pub x2: f64,
    pub c: f64,
    pub lambda1: Complex64,
    pub lambda2: Complex64,
}

/// `x₁ = (3α²−1)/(2α³)`, `c² = α³(1−x₁)/(1−α²)` (placing `x₂` at `(x₁+1)/2`).
pub fn ei3_parameters(alpha: f64) -> Result<Ei3Parameters> {
    if !(0.5..1.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!("need 1/2 <= alpha < 1, got {alpha}")));
    }
    let a2 = alpha * alpha;
    let a3 = a2 * alpha;
    let x1 = (3.0 * a2 - 1.0) / (2.0 * a3);
    let c2 = a3 * (1.0 - x1) / (1.0 - a2);
    let x2 = x1 + c2 * (1.0 - a2) / (2.0 * a3);
    let unimodular = |x: f64| Complex64::new(x, (1.0 - x * x).max(0.0).sqrt());
    Ok(Ei3Parameters {
        x1,
        x2,
        c: c2.sqrt(),
        lambda1: unimodular(x1),
        lambda2: unimodular(x2),
    })
}

/// Three complex `r`-dimensional subspaces of `ℂ^d`, `2r < d < 3r`, that are
/// equi-isoclinic with parameter `α ∈ [1/2, 1)`.
pub fn construct_ei3(d: usize, r: usize, alpha: f64) -> Result<SubspaceSequence<Complex64>> {
    if !(2 * r < d && d < 3 * r) {
        return Err(Error::InvalidInput(format!("need 2r < d < 3r, got d = {d}, r = {r}")));
    }
    let p = ei3_parameters(alpha)?;
    let beta = (1.0 - alpha * alpha).sqrt();
    let k = d - 2 * r;
    let mut u = DMatrix::<Complex64>::zeros(r, r);
    for i in 0..r {
        u[(i, i)] = if i < k { p.lambda2 } else { p.lambda1 };
    }
    let mut y = DMatrix::<Complex64>::zeros(k, r);
    for i in 0..k {
        y[(i, i)] = Complex64::from(p.c);
    }
    let id = DMatrix::<Complex64>::identity(r, r);
    let zero_tail = DMatrix::<Complex64>::zeros(k, r);
    let phi1 = vstack(&[&id, &DMatrix::zeros(r, r), &zero_tail]);
    let phi2 = vstack(&[&(&id * Complex64::from(alpha)), &(&id * Complex64::from(beta)), &zero_tail]);
    let middle = u * Complex64::from(alpha / beta) - &id * Complex64::from(alpha * alpha / beta);
    let phi3 = vstack(&[&(&id * Complex64::from(alpha)), &middle, &y]);
    SubspaceSequence::new(vec![phi1, phi2, phi3], &Tolerances::default())
}

/// Dimension of `W_1 + ⋯ + W_n`.
pub fn common_span_dim<T: Scalar>(s: &SubspaceSequence<T>, tol: &Tolerances) -> Result<usize> {
    numerical_rank(&s.synthesis(), tol)
}

/// For even `r`, the pair `(r, n)` of an `EITFF_ℝ(2r+1, r, n)` when one exists.
///
/// Such an EITFF must have `α = 1/2`, forcing `n = (6r+3)/(2r−1)`.
pub fn eitff_2rplus1_exists(r: usize) -> Result<Option<(usize, usize)>> {
    if r == 0 || r % 2 == 1 {
        return Err(Error::InvalidInput(format!("r must be a positive even integer, got {r}")));
    }
    let (num, den) = (6 * r + 3, 2 * r - 1);
    Ok((num % den == 0).then_some((r, num / den)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::random_unitary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn coord_plane(d: usize, cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(d, cols.len(), |i, j| f64::from(i == cols[j]))
    }

    /// The 1/√3-EI_ℝ(4,2,4): normal form with the three 120° rotations.
    pub(crate) fn eitff_4_2_4() -> SubspaceSequence<f64> {
        let a = 1.0 / 3f64.sqrt();
        let b = (2.0f64 / 3.0).sqrt();
        let rot = |t: f64| DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]);
        let mut phis = vec![coord_plane(4, &[0, 1])];
        for k in 0..3 {
            let bj = rot(2.0 * std::f64::consts::PI * k as f64 / 3.0);
            let id = DMatrix::<f64>::identity(2, 2);
            phis.push(vstack(&[&(id * a), &(bj * b)]));
        }
        SubspaceSequence::new(phis, &tol()).unwrap()
    }

    #[test]
    fn sequence_validation() {
        assert!(SubspaceSequence::<f64>::new(vec![], &tol()).is_err());
        let bad = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        assert!(matches!(SubspaceSequence::new(vec![bad], &tol()), Err(Error::NotIsometry { .. })));
        let a = coord_plane(3, &[0]);
        let b = coord_plane(4, &[0]);
        assert!(SubspaceSequence::new(vec![a, b], &tol()).is_err());
    }

    #[test]
    fn principal_angle_examples() {
        let phi = coord_plane(4, &[0, 1]);
        let psi = coord_plane(4, &[2, 3]);
        assert_eq!(principal_angles(&phi, &phi).unwrap().angles, vec![0.0, 0.0]);
        let pa = principal_angles(&phi, &psi).unwrap().angles;
        assert!(pa.iter().all(|t| (t - FRAC_PI_2).abs() < 1e-15));
        let s = eitff_4_2_4();
        let want = (1.0 / 3f64.sqrt()).acos();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    let pa = principal_angles(s.isometry(i), s.isometry(j)).unwrap();
                    assert!(pa.angles.iter().all(|t| (t - want).abs() < 1e-9));
                }
            }
        }
        assert!(principal_angles(&phi, &coord_plane(4, &[0])).is_err());
    }

    #[test]
    fn principal_angles_symmetric_and_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let phi = random_unitary::<Complex64, _>(6, &mut rng).columns(0, 3).into_owned();
            let psi = random_unitary::<Complex64, _>(6, &mut rng).columns(0, 3).into_owned();
            let ab = principal_angles(&phi, &psi).unwrap();
            assert_eq!(ab, principal_angles(&psi, &phi).unwrap());
            assert!(ab.angles.windows(2).all(|w| w[0] <= w[1]));
            let u = random_unitary::<Complex64, _>(3, &mut rng);
            let u2 = random_unitary::<Complex64, _>(3, &mut rng);
            let rotated = principal_angles(&(&phi * u), &(&psi * u2)).unwrap();
            for (x, y) in ab.angles.iter().zip(&rotated.angles) {
                assert!((x.cos() - y.cos()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn block_coherence_examples() {
        let phi = coord_plane(2, &[0]);
        let same = SubspaceSequence::new(vec![phi.clone(), phi.clone()], &tol()).unwrap();
        assert_eq!(block_coherence(&same).unwrap(), 1.0);
        let orth = SubspaceSequence::new(vec![phi.clone(), coord_plane(2, &[1])], &tol()).unwrap();
        assert_eq!(block_coherence(&orth).unwrap(), 0.0);
        let ei = construct_ei3(5, 2, 0.5).unwrap();
        assert!((block_coherence(&ei).unwrap() - 0.5).abs() < 1e-12);
        let single = SubspaceSequence::new(vec![phi], &tol()).unwrap();
        assert!(block_coherence(&single).is_err());
    }

    #[test]
    fn is_equi_isoclinic_examples() {
        let phi = coord_plane(4, &[0, 1]);
        let copies = SubspaceSequence::new(vec![phi.clone(); 3], &tol()).unwrap();
        assert_eq!(is_equi_isoclinic(&copies, &tol()), Some(1.0));
        let orth = SubspaceSequence::new(
            vec![coord_plane(6, &[0, 1]), coord_plane(6, &[2, 3]), coord_plane(6, &[4, 5])],
            &tol(),
        )
        .unwrap();
        assert_eq!(is_equi_isoclinic(&orth, &tol()), Some(0.0));
        let alpha = is_equi_isoclinic(&eitff_4_2_4(), &tol()).unwrap();
        assert!((alpha - 1.0 / 3f64.sqrt()).abs() < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let random: Vec<_> = (0..3)
            .map(|_| random_unitary::<f64, _>(6, &mut rng).columns(0, 2).into_owned())
            .collect();
        let random = SubspaceSequence::new(random, &tol()).unwrap();
        assert_eq!(is_equi_isoclinic(&random, &tol()), None);
    }

    #[test]
    fn isoclinic_pairs_satisfy_projection_identities() {
        for s in [eitff_4_2_4().embed(1)] {
            let alpha = is_equi_isoclinic(&s, &tol()).unwrap();
            for i in 0..s.n() {
                for j in 0..s.n() {
                    if i == j {
                        continue;
                    }
                    let p = s.projection(i);
                    let q = s.projection(j);
                    let psi = s.isometry(j);
                    let lhs = psi.adjoint() * &p * psi;
                    assert!(max_abs(&(lhs - scaled_identity::<f64>(2, alpha * alpha))) < 1e-9);
                    assert!(max_abs(&(&q * &p * &q - &q * (alpha * alpha))) < 1e-9);
                }
            }
        }
        let s = construct_ei3(8, 3, 0.6).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    let (p, q) = (s.projection(i), s.projection(j));
                    let qpq = &q * &p * &q - &q * Complex64::from(0.36);
                    assert!(max_abs(&qpq) < 1e-9);
                }
            }
        }
    }

    #[test]
    fn ei3_parameters_at_half() {
        let p = ei3_parameters(0.5).unwrap();
        assert!((p.x1 + 1.0).abs() < 1e-15);
        assert!((p.c * p.c - 1.0 / 3.0).abs() < 1e-15);
        assert!(p.x2.abs() < 1e-15);
        assert!(ei3_parameters(0.4).is_err());
    }

    #[test]
    fn construct_ei3_examples() {
        for &(d, r, alpha) in &[(5usize, 2usize, 0.5), (8, 3, 0.6), (7, 3, 0.9), (11, 4, 0.75)] {
            let s = construct_ei3(d, r, alpha).unwrap();
            for phi in s.isometries() {
                assert!(isometry_residual(phi) <= 1e-12);
            }
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        let g = s.isometry(i).adjoint() * s.isometry(j);
                        assert!(isometry_residual(&g.unscale(alpha)) <= 1e-12);
                    }
                }
            }
            let a = is_equi_isoclinic(&s, &tol()).unwrap();
            assert!((a - alpha).abs() <= 1e-9);
        }
        assert!(matches!(construct_ei3(5, 2, 0.4), Err(Error::InvalidInput(_))));
        assert!(matches!(construct_ei3(6, 2, 0.5), Err(Error::InvalidInput(_))));
    }

    fn check_normal_form<T: Scalar>(nf: &NormalizedEi<T>, source: &SubspaceSequence<T>) {
        let r = source.r();
        let d = source.d();
        let base = &nf.base;
        let mut phi1 = DMatrix::<T>::zeros(d, r);
        phi1.rows_mut(0, r).copy_from(&DMatrix::identity(r, r));
        assert_eq!(base.isometry(0), &phi1);
        let mut phi2 = DMatrix::<T>::zeros(d, r);
        phi2.rows_mut(0, r).copy_from(&scaled_identity(r, nf.alpha));
        phi2.rows_mut(r, r).copy_from(&scaled_identity(r, nf.beta));
        assert_eq!(base.isometry(1), &phi2);
        // equivalence: L Ψ_j Z_j reproduces the normal form
        for j in 0..source.n() {
            let back = &nf.left * source.isometry(j) * &nf.rights[j];
            assert!(max_abs(&(back - base.isometry(j))) < 1e-9);
        }
        assert!(isometry_residual(&nf.left) < 1e-12);
        let t = tol();
        let a0 = is_equi_isoclinic(source, &t).unwrap();
        let a1 = is_equi_isoclinic(base, &t).unwrap();
        assert!((a0 - a1).abs() < 1e-9);
        assert!((block_coherence(source).unwrap() - block_coherence(base).unwrap()).abs() < 1e-9);
        assert!(nf.residuals.unitary <= 1e-9 && nf.residuals.normal <= 1e-9 && nf.residuals.gram_y <= 1e-9);
    }

    #[test]
    fn normalize_fixed_point_and_rotations() {
        let s = construct_ei3(5, 2, 0.5).unwrap();
        let nf = normalize_ei(&s, 0.5, &tol()).unwrap();
        check_normal_form(&nf, &s);
        assert!(max_abs(&(nf.base.isometry(2) - s.isometry(2))) < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..5 {
            let left = random_unitary::<Complex64, _>(5, &mut rng);
            let rights: Vec<_> = (0..3).map(|_| random_unitary::<Complex64, _>(2, &mut rng)).collect();
            let rotated = s.transformed(&left, &rights, &tol()).unwrap();
            let nf = normalize_ei(&rotated, 0.5, &tol()).unwrap();
            check_normal_form(&nf, &rotated);
            assert!(nf.u.is_some());
            assert!(nf.residuals.min_singular_x > 1e-3);
        }

        let real = eitff_4_2_4();
        let nf = normalize_ei(&real, 1.0 / 3f64.sqrt(), &tol()).unwrap();
        check_normal_form(&nf, &real);
        assert_eq!(nf.y[0].nrows(), 0);
    }

    #[test]
    fn normalize_zero_alpha_and_errors() {
        let s = SubspaceSequence::new(vec![coord_plane(4, &[2, 3]), coord_plane(4, &[0, 1])], &tol()).unwrap();
        let nf = normalize_ei(&s, 0.0, &tol()).unwrap();
        assert_eq!(nf.beta, 1.0);
        assert!(nf.u.is_none());
        assert_eq!(nf.base.isometry(1), &coord_plane(4, &[2, 3]));

        let copies = SubspaceSequence::new(vec![coord_plane(4, &[0, 1]); 2], &tol()).unwrap();
        assert!(matches!(normalize_ei(&copies, 1.0, &tol()), Err(Error::NotEquiIsoclinic(_))));
        let narrow = SubspaceSequence::new(vec![coord_plane(3, &[0, 1]); 2], &tol()).unwrap();
        assert!(matches!(normalize_ei(&narrow, 1.0, &tol()), Err(Error::DimensionTooSmall { .. })));
        let s = construct_ei3(5, 2, 0.5).unwrap();
        assert!(matches!(normalize_ei(&s, 0.6, &tol()), Err(Error::NotEquiIsoclinic(_))));
    }

    #[test]
    fn common_span_examples() {
        let one = SubspaceSequence::new(vec![coord_plane(5, &[1, 3])], &tol()).unwrap();
        assert_eq!(common_span_dim(&one, &tol()).unwrap(), 2);
        let s = eitff_4_2_4();
        assert_eq!(common_span_dim(&s, &tol()).unwrap(), 4);
        assert_eq!(common_span_dim(&s.embed(1), &tol()).unwrap(), 4);
    }

    #[test]
    fn eitff_2rplus1_scan() {
        assert_eq!(eitff_2rplus1_exists(2).unwrap(), Some((2, 5)));
        assert_eq!(eitff_2rplus1_exists(4).unwrap(), None);
        assert_eq!(eitff_2rplus1_exists(100).unwrap(), None);
        assert!(eitff_2rplus1_exists(3).is_err());
        for r in (2..=1000).step_by(2) {
            assert_eq!(eitff_2rplus1_exists(r).unwrap().is_some(), r == 2);
        }
    }
}
