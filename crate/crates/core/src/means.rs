//! Two-operator weighted means.
//!
//! For `0 < λ < 1`:
//!
//! - `A ∇_λ B = (1 − λ)A + λB`
//! - `A ♯_λ B = A^{1/2} (A^{-1/2} B A^{-1/2})^λ A^{1/2}`
//! - `A !_λ B = ((1 − λ)A⁻¹ + λB⁻¹)⁻¹`
//!
//! `♯_λ` is evaluated by the congruence formula only. The iterations in
//! [`crate::iterative`] are checked against it, never used in its place.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symmat::{inverse, min_eigenvalue, spectral_decompose, Matrix, PsdCheck, SymMatrix, Tolerance};

/// Mean weight `λ`, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Weight(f64);

impl Weight {
    pub const HALF: Weight = Weight(0.5);

    pub fn new(lambda: f64) -> Result<Self> {
        if lambda > 0.0 && lambda < 1.0 {
            Ok(Weight(lambda))
        } else {
            Err(Error::Precondition(format!("weight must lie in (0, 1), got {lambda}")))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// `1 − λ`.
    pub fn flip(self) -> Self {
        Weight(1.0 - self.0)
    }
}

impl TryFrom<f64> for Weight {
    type Error = Error;
    fn try_from(x: f64) -> Result<Self> {
        Weight::new(x)
    }
}

impl From<Weight> for f64 {
    fn from(w: Weight) -> f64 {
        w.0
    }
}

/// `(1 − λ)A + λB`.
pub fn nabla(a: &SymMatrix, b: &SymMatrix, w: Weight) -> Result<SymMatrix> {
    a.check_same_dim(b)?;
    Ok(a.lin_comb(1.0 - w.value(), b, w.value()))
}

/// `base^{1/2} (base^{-1/2} other base^{-1/2})^t base^{1/2}`.
///
/// Shared by [`sharp`] and the power geometric mean; both arguments must be
/// strictly positive definite.
pub(crate) fn congruence_power(base: &SymMatrix, other: &SymMatrix, t: f64, tol: &Tolerance) -> Result<SymMatrix> {
    base.check_same_dim(other)?;
    let dec = spectral_decompose(base, tol)?;
    dec.require_strictly_positive(tol, "first mean argument")?;
    spectral_decompose(other, tol)?.require_strictly_positive(tol, "second mean argument")?;

    let root = dec.map(f64::sqrt);
    let inv_root = dec.map(|x| x.sqrt().recip());
    let inner = inv_root.congruence(other);
    let inner_pow = spectral_decompose(&inner, tol)?.map(|x| x.max(0.0).powf(t));
    Ok(root.congruence(&inner_pow))
}

/// Weighted geometric mean `A ♯_λ B`.
pub fn sharp(a: &SymMatrix, b: &SymMatrix, w: Weight, tol: &Tolerance) -> Result<SymMatrix> {
    congruence_power(a, b, w.value(), tol)
}

/// Weighted harmonic mean `((1 − λ)A⁻¹ + λB⁻¹)⁻¹`.
pub fn harmonic(a: &SymMatrix, b: &SymMatrix, w: Weight, tol: &Tolerance) -> Result<SymMatrix> {
    a.check_same_dim(b)?;
    let ai = inverse(a, tol)?;
    let bi = inverse(b, tol)?;
    inverse(&ai.lin_comb(1.0 - w.value(), &bi, w.value()), tol)
}

/// `I − A`.
pub fn complement(a: &SymMatrix) -> SymMatrix {
    &SymMatrix::identity(a.dim()) - a
}

/// PSD test of the block matrix `[[A, X], [X, B]]`.
///
/// `A ♯ B` is the largest selfadjoint `X` for which this block is positive,
/// so the certificate holds at `X = A ♯ B` and fails for `(1 + δ)·(A ♯ B)`.
pub fn block_psd_certificate(a: &SymMatrix, b: &SymMatrix, x: &SymMatrix, tol: &Tolerance) -> Result<PsdCheck> {
    a.check_same_dim(b)?;
    a.check_same_dim(x)?;
    let n = a.dim();
    let block = Matrix::from_fn(2 * n, |i, j| match (i < n, j < n) {
        (true, true) => a.get(i, j),
        (true, false) => x.get(i, j - n),
        (false, true) => x.get(i - n, j),
        (false, false) => b.get(i - n, j - n),
    });
    let block = SymMatrix::from_matrix(block)?;
    Ok(PsdCheck::from_min_eig(min_eigenvalue(&block, tol)?, tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmat::loewner_leq;
    use approx::assert_abs_diff_eq;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn w(x: f64) -> Weight {
        Weight::new(x).unwrap()
    }

    fn spd() -> (SymMatrix, SymMatrix) {
        let a = SymMatrix::from_rows(&[vec![2.0, 0.3, 0.1], vec![0.3, 1.0, -0.2], vec![0.1, -0.2, 0.5]]).unwrap();
        let b = SymMatrix::from_rows(&[vec![0.7, -0.1, 0.0], vec![-0.1, 1.5, 0.4], vec![0.0, 0.4, 0.9]]).unwrap();
        (a, b)
    }

    #[test]
    fn weight_rejects_endpoints() {
        assert!(Weight::new(0.0).is_err());
        assert!(Weight::new(1.0).is_err());
        assert!(Weight::new(f64::NAN).is_err());
        assert!(Weight::new(1e-9).is_ok());
        assert!(serde_json::from_str::<Weight>("1.5").is_err());
    }

    #[test]
    fn nabla_examples() {
        let (a, b) = spd();
        assert!((&nabla(&a, &a, w(0.3)).unwrap() - &a).fro_norm() < 1e-15);
        let r = nabla(&SymMatrix::scalar(0.2), &SymMatrix::scalar(0.4), Weight::HALF).unwrap();
        assert_abs_diff_eq!(r.get(0, 0), 0.3, epsilon = 1e-16);
        let l = nabla(&a, &b, w(0.3)).unwrap();
        let r = nabla(&b, &a, w(0.7)).unwrap();
        assert!((&l - &r).fro_norm() < 1e-15);
        assert!(nabla(&a, &SymMatrix::identity(2), Weight::HALF).is_err());
    }

    #[test]
    fn sharp_examples() {
        let t = tol();
        let (a, b) = spd();
        assert!((&sharp(&a, &a, w(0.35), &t).unwrap() - &a).fro_norm() < 1e-12);
        let r = sharp(&SymMatrix::scalar(0.2), &SymMatrix::scalar(0.4), Weight::HALF, &t).unwrap();
        assert_abs_diff_eq!(r.get(0, 0), 0.282_842_712_474_619, epsilon = 1e-12);
        let l = sharp(&a, &b, w(0.3), &t).unwrap();
        let r = sharp(&b, &a, w(0.7), &t).unwrap();
        assert!((&l - &r).fro_norm() < 1e-10);
    }

    #[test]
    fn sharp_rejects_non_pd() {
        let t = tol();
        let (a, _) = spd();
        let bad = SymMatrix::diag(&[1.0, 0.0, 1.0]);
        assert!(matches!(sharp(&a, &bad, Weight::HALF, &t), Err(Error::Domain(_))));
        assert!(matches!(sharp(&bad, &a, Weight::HALF, &t), Err(Error::Domain(_))));
        assert!(matches!(harmonic(&a, &bad, Weight::HALF, &t), Err(Error::Domain(_))));
    }

    #[test]
    fn commuting_sharp_is_product_of_powers() {
        let t = tol();
        let a = SymMatrix::diag(&[0.2, 0.9, 0.05]);
        let b = SymMatrix::diag(&[0.4, 0.1, 0.3]);
        let lam = 0.3;
        let g = sharp(&a, &b, w(lam), &t).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(g.get(i, i), a.get(i, i).powf(1.0 - lam) * b.get(i, i).powf(lam), epsilon = 1e-14);
        }
    }

    #[test]
    fn harmonic_examples() {
        let t = tol();
        let (a, b) = spd();
        assert!((&harmonic(&a, &a, w(0.6), &t).unwrap() - &a).fro_norm() < 1e-12);
        let r = harmonic(&SymMatrix::scalar(1.0), &SymMatrix::scalar(4.0), Weight::HALF, &t).unwrap();
        assert_abs_diff_eq!(r.get(0, 0), 1.6, epsilon = 1e-14);
        let h = harmonic(&a, &b, Weight::HALF, &t).unwrap();
        let g = sharp(&a, &b, Weight::HALF, &t).unwrap();
        let m = nabla(&a, &b, Weight::HALF).unwrap();
        assert!(loewner_leq(&h, &g, &t).unwrap().holds);
        assert!(loewner_leq(&g, &m, &t).unwrap().holds);
    }

    #[test]
    fn complement_examples() {
        let c = complement(&SymMatrix::diag(&[0.2, 0.4]));
        assert_abs_diff_eq!(c.get(0, 0), 0.8, epsilon = 1e-16);
        assert_abs_diff_eq!(c.get(1, 1), 0.6, epsilon = 1e-16);
        let (a, _) = spd();
        assert!((&complement(&complement(&a)) - &a).fro_norm() < 1e-15);
        let half = SymMatrix::identity(3).scale(0.5);
        assert_eq!(complement(&half), half);
    }

    #[test]
    fn block_certificate_examples() {
        let t = tol();
        let a = SymMatrix::scalar(1.0);
        let b = SymMatrix::scalar(4.0);
        let g = sharp(&a, &b, Weight::HALF, &t).unwrap();
        let c = block_psd_certificate(&a, &b, &g, &t).unwrap();
        assert!(c.holds);
        assert_abs_diff_eq!(c.witness, 0.0, epsilon = 1e-14);

        let c = block_psd_certificate(&a, &b, &SymMatrix::zeros(1), &t).unwrap();
        assert!(c.holds);
        assert_abs_diff_eq!(c.witness, 1.0, epsilon = 1e-15);

        // [[1, 4], [4, 4]] has determinant -12.
        let c = block_psd_certificate(&a, &b, &g.scale(2.0), &t).unwrap();
        assert!(!c.holds);
        assert!(c.witness < -1.0);

        assert!(block_psd_certificate(&a, &b, &SymMatrix::zeros(2), &t).is_err());
    }
}
