//! Fusion Gram and frame operators, tightness and EITFF certification, and the
//! operations that turn one EITFF into another.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::bounds::{spark_bound, welch_bound, ParamTriple};
use crate::error::{Error, Result};
use crate::numerics::{block_diag, hermitian_eigen, max_abs, polar_factor, Scalar, Tolerances};
use crate::subspaces::{block_coherence, is_equi_isoclinic, SubspaceSequence};

/// The `n×n` array of `r×r` blocks `Φ_i*Φ_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionGram<T: Scalar> {
    pub r: usize,
    pub n: usize,
    pub blocks: Vec<Vec<DMatrix<T>>>,
}

impl<T: Scalar> FusionGram<T> {
    /// The full `rn×rn` matrix `Φ*Φ`.
    pub fn to_matrix(&self) -> DMatrix<T> {
        let (r, n) = (self.r, self.n);
        let mut g = DMatrix::zeros(r * n, r * n);
        for (i, row) in self.blocks.iter().enumerate() {
            for (j, b) in row.iter().enumerate() {
                g.view_mut((i * r, j * r), (r, r)).copy_from(b);
            }
        }
        g
    }
}

pub fn fusion_gram<T: Scalar>(s: &SubspaceSequence<T>) -> FusionGram<T> {
    let blocks = s
        .isometries()
        .iter()
        .map(|a| s.isometries().iter().map(|b| a.adjoint() * b).collect())
        .collect();
    FusionGram {
        r: s.r(),
        n: s.n(),
        blocks,
    }
}

/// `Σ_j Φ_jΦ_j*`.
pub fn frame_operator<T: Scalar>(s: &SubspaceSequence<T>) -> DMatrix<T> {
    let phi = s.synthesis();
    &phi * phi.adjoint()
}

/// Equi-isoclinism, tightness and the two coherence bounds of a sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameCertificate {
    pub is_ei: bool,
    pub alpha: Option<f64>,
    pub is_tight: bool,
    /// `c` with `Σ P_j = cI`, present when tight.
    pub tight_constant: Option<f64>,
    /// `‖Σ P_j − (rn/d)I‖_max`.
    pub tight_residual: f64,
    pub is_eitff: bool,
    pub coherence: f64,
    /// Absent when `nr < d`.
    pub welch: Option<f64>,
    /// Absent when `d ≤ r`.
    pub spark_bound: Option<f64>,
}

fn tight_residual<T: Scalar>(s: &SubspaceSequence<T>) -> f64 {
    let c = (s.r() * s.n()) as f64 / s.d() as f64;
    let mut frame = frame_operator(s);
    for i in 0..s.d() {
        frame[(i, i)] -= T::from_real(c);
    }
    max_abs(&frame)
}

pub fn is_tight<T: Scalar>(s: &SubspaceSequence<T>, tol: &Tolerances) -> bool {
    tight_residual(s) <= tol.residual_abs
}

pub fn certify<T: Scalar>(s: &SubspaceSequence<T>, tol: &Tolerances) -> Result<FrameCertificate> {
    if s.n() < 2 {
        return Err(Error::InvalidInput("certification needs n >= 2".into()));
    }
    let alpha = is_equi_isoclinic(s, tol);
    let residual = tight_residual(s);
    let tight = residual <= tol.residual_abs;
    let triple = ParamTriple::new(s.d(), s.r(), s.n())?;
    Ok(FrameCertificate {
        is_ei: alpha.is_some(),
        alpha,
        is_tight: tight,
        tight_constant: tight.then(|| (s.r() * s.n()) as f64 / s.d() as f64),
        tight_residual: residual,
        is_eitff: alpha.is_some() && tight,
        coherence: block_coherence(s)?,
        welch: welch_bound(triple).ok(),
        spark_bound: spark_bound(s.d(), s.r()).ok(),
    })
}

/// The `TFF(rn−d, r, n)` whose fusion Gram is `(rn/(rn−d))(I − (d/rn)Φ*Φ)`.
pub fn naimark_complement<T: Scalar>(s: &SubspaceSequence<T>, tol: &Tolerances) -> Result<SubspaceSequence<T>> {
    let (d, r, n) = (s.d(), s.r(), s.n());
    let rn = r * n;
    if d == rn {
        return Err(Error::NoComplement);
    }
    let residual = tight_residual(s);
    if residual > tol.residual_abs {
        return Err(Error::NotTight { residual });
    }
    let m = rn - d;
    let scale = rn as f64 / m as f64;
    let mut g = fusion_gram(s).to_matrix() * T::from_real(-(d as f64) / rn as f64);
    for i in 0..rn {
        g[(i, i)] += T::one();
    }
    let g = g * T::from_real(scale);
    let (evals, vecs) = hermitian_eigen(&g)?;
    let top = evals.last().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..rn).filter(|&i| evals[i] > tol.rank_rel * top).collect();
    if keep.len() != m {
        return Err(Error::InternalInconsistency(format!(
            "complement Gram has rank {} instead of {m}",
            keep.len()
        )));
    }
    // Ψ = √Λ V*, an m×rn factor with Ψ*Ψ = G′
    let mut psi = DMatrix::<T>::zeros(m, rn);
    for (row, &i) in keep.iter().enumerate() {
        let v = vecs.column(i).adjoint() * T::from_real(evals[i].sqrt());
        psi.row_mut(row).copy_from(&v);
    }
    let isometries = (0..n)
        .map(|j| polar_factor(&psi.columns(j * r, r).into_owned()))
        .collect::<Result<Vec<_>>>()?;
    SubspaceSequence::new(isometries, tol)
}

/// Real `2d×2r` matrix with each entry `a+bi` replaced by `((a, −b), (b, a))`.
pub fn realify(m: &DMatrix<Complex64>) -> DMatrix<f64> {
    DMatrix::from_fn(2 * m.nrows(), 2 * m.ncols(), |i, j| {
        let z = m[(i / 2, j / 2)];
        match (i % 2, j % 2) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            _ => z.im,
        }
    })
}

/// Realifies every isometry, mapping an `EITFF_ℂ(d,r,n)` to an `EITFF_ℝ(2d,2r,n)`.
pub fn hoggar_c_to_r(s: &SubspaceSequence<Complex64>, tol: &Tolerances) -> Result<SubspaceSequence<f64>> {
    SubspaceSequence::new(s.isometries().iter().map(realify).collect(), tol)
}

/// The block-diagonal sum `Φ_j ⊕ Φ′_j` of two EITFFs with equal `d/r` and `n`.
pub fn direct_sum<T: Scalar>(
    a: &SubspaceSequence<T>,
    b: &SubspaceSequence<T>,
    tol: &Tolerances,
) -> Result<SubspaceSequence<T>> {
    if a.n() != b.n() {
        return Err(Error::InvalidInput(format!("sequence lengths differ: {} and {}", a.n(), b.n())));
    }
    if a.d() * b.r() != b.d() * a.r() {
        return Err(Error::RatioMismatch {
            d1: a.d(),
            r1: a.r(),
            d2: b.d(),
            r2: b.r(),
        });
    }
    for (name, s) in [("first", a), ("second", b)] {
        if !certify(s, tol)?.is_eitff {
            return Err(Error::NotEitff(format!("{name} summand")));
        }
    }
    let isometries = a
        .isometries()
        .iter()
        .zip(b.isometries())
        .map(|(x, y)| block_diag(x, y))
        .collect();
    SubspaceSequence::new(isometries, tol)
}

/// `n` copies of `F^r`, an `EITFF(r,r,n)` with `α = 1`.
pub fn trivial_eitff<T: Scalar>(r: usize, n: usize) -> Result<SubspaceSequence<T>> {
    if r == 0 || n == 0 {
        return Err(Error::InvalidInput(format!("need r, n >= 1, got r = {r}, n = {n}")));
    }
    SubspaceSequence::new(vec![DMatrix::identity(r, r); n], &Tolerances::default())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::numerics::{random_unitary, singular_values, vstack};
    use crate::subspaces::construct_ei3;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    /// Normal form `(I;0)` and `((1/√3)I; √(2/3)·R_k)` with 120° rotations `R_k`.
    pub(crate) fn eitff_r_4_2_4() -> SubspaceSequence<f64> {
        let a = 1.0 / 3f64.sqrt();
        let b = (2.0f64 / 3.0).sqrt();
        let mut phis = vec![DMatrix::from_fn(4, 2, |i, j| f64::from(i == j))];
        for k in 0..3 {
            let t = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
            let rot = DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]);
            phis.push(vstack(&[&DMatrix::identity(2, 2).scale(a), &rot.scale(b)]));
        }
        SubspaceSequence::new(phis, &tol()).unwrap()
    }

    /// Four lines in ℂ² at equal angle arccos(1/√3).
    pub(crate) fn eitff_c_2_1_4() -> SubspaceSequence<Complex64> {
        let a = 1.0 / 3f64.sqrt();
        let b = (2.0f64 / 3.0).sqrt();
        let mut phis = vec![DMatrix::from_column_slice(2, 1, &[Complex64::ONE, Complex64::ZERO])];
        for k in 0..3 {
            let w = Complex64::from_polar(b, 2.0 * std::f64::consts::PI * k as f64 / 3.0);
            phis.push(DMatrix::from_column_slice(2, 1, &[Complex64::from(a), w]));
        }
        SubspaceSequence::new(phis, &tol()).unwrap()
    }

    #[test]
    fn fusion_gram_examples() {
        let one = trivial_eitff::<f64>(3, 1).unwrap();
        assert_eq!(fusion_gram(&one).blocks[0][0], DMatrix::identity(3, 3));
        let split = SubspaceSequence::new(
            vec![
                DMatrix::from_fn(4, 2, |i, j| f64::from(i == j)),
                DMatrix::from_fn(4, 2, |i, j| f64::from(i == j + 2)),
            ],
            &tol(),
        )
        .unwrap();
        assert_eq!(fusion_gram(&split).to_matrix(), DMatrix::identity(4, 4));
        let g = fusion_gram(&eitff_r_4_2_4());
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    let sv = singular_values(&g.blocks[i][j]).unwrap();
                    assert!(sv.iter().all(|s| (s - 1.0 / 3f64.sqrt()).abs() < 1e-12));
                }
            }
        }
    }

    #[test]
    fn frame_operator_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = random_unitary::<Complex64, _>(3, &mut rng);
        let s = SubspaceSequence::new(vec![u], &tol()).unwrap();
        assert!(max_abs(&(frame_operator(&s) - DMatrix::identity(3, 3))) < 1e-12);
        let f = frame_operator(&eitff_r_4_2_4());
        assert!(max_abs(&(f - DMatrix::identity(4, 4).scale(2.0))) < 1e-12);
        let p = DMatrix::from_column_slice(3, 1, &[0.6, 0.8, 0.0]);
        let twice = SubspaceSequence::new(vec![p.clone(), p.clone()], &tol()).unwrap();
        assert!(max_abs(&(frame_operator(&twice) - (&p * p.transpose()).scale(2.0))) < 1e-15);
    }

    #[test]
    fn frame_operator_trace_is_rn() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..6 {
            let phis = (0..n)
                .map(|_| random_unitary::<Complex64, _>(5, &mut rng).columns(0, 2).into_owned())
                .collect();
            let s = SubspaceSequence::new(phis, &tol()).unwrap();
            assert!((frame_operator(&s).trace().re - (2 * n) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn certify_examples() {
        let c = certify(&eitff_r_4_2_4(), &tol()).unwrap();
        assert!(c.is_eitff && c.is_ei && c.is_tight);
        assert!((c.alpha.unwrap() - 1.0 / 3f64.sqrt()).abs() < 1e-9);
        assert_eq!(c.tight_constant, Some(2.0));
        assert!((c.coherence - c.welch.unwrap()).abs() < 1e-9);

        let ei3 = certify(&construct_ei3(5, 2, 0.5).unwrap(), &tol()).unwrap();
        assert!(ei3.is_ei && !ei3.is_tight && !ei3.is_eitff);
        assert_eq!(ei3.tight_constant, None);

        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let phis = (0..4)
            .map(|_| random_unitary::<f64, _>(6, &mut rng).columns(0, 2).into_owned())
            .collect();
        let random = certify(&SubspaceSequence::new(phis, &tol()).unwrap(), &tol()).unwrap();
        assert!(!random.is_ei && !random.is_eitff);
    }

    #[test]
    fn naimark_examples() {
        let t = tol();
        let c = naimark_complement(&trivial_eitff::<f64>(2, 3).unwrap(), &t).unwrap();
        assert_eq!((c.d(), c.r(), c.n()), (4, 2, 3));
        let cert = certify(&c, &t).unwrap();
        assert!(cert.is_eitff);
        assert!((cert.alpha.unwrap() - 0.5).abs() < 1e-9);

        let c = naimark_complement(&eitff_r_4_2_4(), &t).unwrap();
        let cert = certify(&c, &t).unwrap();
        assert!(cert.is_eitff);
        assert!((cert.alpha.unwrap() - 1.0 / 3f64.sqrt()).abs() < 1e-9);

        let c = naimark_complement(&trivial_eitff::<Complex64>(1, 5).unwrap(), &t).unwrap();
        let cert = certify(&c, &t).unwrap();
        assert!(cert.is_eitff && (cert.alpha.unwrap() - 0.25).abs() < 1e-9);

        let basis = SubspaceSequence::new(
            (0..3).map(|k| DMatrix::from_fn(3, 1, |i, _| f64::from(i == k))).collect(),
            &t,
        )
        .unwrap();
        assert_eq!(naimark_complement(&basis, &t), Err(Error::NoComplement));
        let ei3 = construct_ei3(5, 2, 0.5).unwrap();
        assert!(matches!(naimark_complement(&ei3, &t), Err(Error::NotTight { .. })));
    }

    #[test]
    fn naimark_gram_matches_target() {
        let t = tol();
        for s in [eitff_r_4_2_4(), hoggar_c_to_r(&eitff_c_2_1_4(), &t).unwrap()] {
            let (d, r, n) = (s.d(), s.r(), s.n());
            let rn = (r * n) as f64;
            let target = (DMatrix::<f64>::identity(r * n, r * n) - fusion_gram(&s).to_matrix().scale(d as f64 / rn))
                .scale(rn / (rn - d as f64));
            let got = fusion_gram(&naimark_complement(&s, &t).unwrap()).to_matrix();
            assert!(max_abs(&(got - target)) < 1e-8);
            let back = naimark_complement(&naimark_complement(&s, &t).unwrap(), &t).unwrap();
            let (g0, g1) = (fusion_gram(&s), fusion_gram(&back));
            for i in 0..n {
                for j in 0..n {
                    let a = singular_values(&g0.blocks[i][j]).unwrap();
                    let b = singular_values(&g1.blocks[i][j]).unwrap();
                    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-8));
                }
            }
        }
    }

    #[test]
    fn hoggar_examples() {
        let t = tol();
        let real = hoggar_c_to_r(&eitff_c_2_1_4(), &t).unwrap();
        assert_eq!((real.d(), real.r(), real.n()), (4, 2, 4));
        let cert = certify(&real, &t).unwrap();
        assert!(cert.is_eitff && (cert.alpha.unwrap() - 1.0 / 3f64.sqrt()).abs() < 1e-9);

        let all_real = trivial_eitff::<Complex64>(2, 3).unwrap();
        let doubled = hoggar_c_to_r(&all_real, &t).unwrap();
        assert_eq!(doubled.isometry(0), &DMatrix::<f64>::identity(4, 4));
        assert_eq!(certify(&all_real, &t).unwrap().is_eitff, certify(&doubled, &t).unwrap().is_eitff);

        let ei3 = construct_ei3(8, 3, 0.7).unwrap();
        let g = fusion_gram(&ei3).to_matrix();
        let gr = fusion_gram(&hoggar_c_to_r(&ei3, &t).unwrap()).to_matrix();
        assert!(max_abs(&(realify(&g) - gr)) < 1e-13);
        let a = certify(&ei3, &t).unwrap().alpha.unwrap();
        let b = certify(&hoggar_c_to_r(&ei3, &t).unwrap(), &t).unwrap().alpha.unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn direct_sum_examples() {
        let t = tol();
        let s = eitff_r_4_2_4();
        let sum = direct_sum(&s, &s, &t).unwrap();
        assert_eq!((sum.d(), sum.r(), sum.n()), (8, 4, 4));
        let cert = certify(&sum, &t).unwrap();
        assert!(cert.is_eitff && (cert.alpha.unwrap() - 1.0 / 3f64.sqrt()).abs() < 1e-9);
        assert_eq!(cert.tight_constant, Some(2.0));

        let c213 = naimark_complement(&trivial_eitff::<Complex64>(1, 3).unwrap(), &t).unwrap();
        let sum = direct_sum(&c213, &c213, &t).unwrap();
        let cert = certify(&sum, &t).unwrap();
        assert_eq!((sum.d(), sum.r()), (4, 2));
        assert!(cert.is_eitff && (cert.alpha.unwrap() - 0.5).abs() < 1e-9);

        let wide = trivial_eitff::<f64>(2, 4).unwrap();
        assert!(matches!(direct_sum(&s, &wide, &t), Err(Error::RatioMismatch { .. })));
        let not_tight = construct_ei3(5, 2, 0.5).unwrap();
        assert!(matches!(direct_sum(&not_tight, &not_tight, &t), Err(Error::NotEitff(_))));
    }

    #[test]
    fn trivial_examples() {
        let s = trivial_eitff::<f64>(2, 3).unwrap();
        assert_eq!(frame_operator(&s), DMatrix::identity(2, 2).scale(3.0));
        let cert = certify(&s, &tol()).unwrap();
        assert!(cert.is_eitff);
        assert_eq!(cert.alpha, Some(1.0));
        assert!(trivial_eitff::<f64>(0, 3).is_err());
    }
}
