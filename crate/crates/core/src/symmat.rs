//! Dense real symmetric matrices and their spectral calculus.
//!
//! [`SymMatrix`] models a selfadjoint operator on a finite-dimensional real
//! Hilbert space. Every matrix function (powers, square roots, inverses) goes
//! through [`spectral_decompose`], a cyclic Jacobi eigensolver, and is
//! evaluated as `Q f(Λ) Qᵀ`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Numerical tolerances shared by every routine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Absolute slack on minimum eigenvalues in PSD / Loewner checks.
    pub psd_slack: f64,
    /// Relative off-diagonal target for the eigensolver.
    pub residual: f64,
    /// Sweep budget for the eigensolver.
    pub max_sweeps: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            psd_slack: 1e-10,
            residual: 1e-12,
            max_sweeps: 64,
        }
    }
}

impl Tolerance {
    pub fn new(psd_slack: f64, residual: f64, max_sweeps: usize) -> Result<Self> {
        if !psd_slack.is_finite() || psd_slack < 0.0 {
            return Err(Error::Precondition(format!("psd_slack must be finite and >= 0, got {psd_slack}")));
        }
        if !residual.is_finite() || residual <= 0.0 {
            return Err(Error::Precondition(format!("residual must be finite and > 0, got {residual}")));
        }
        if max_sweeps == 0 {
            return Err(Error::Precondition("max_sweeps must be positive".into()));
        }
        Ok(Tolerance {
            psd_slack,
            residual,
            max_sweeps,
        })
    }
}

/// General dense square matrix, row-major.
///
/// Used for intermediate products such as `T⁻¹B` that are not symmetric.
/// Arithmetic operators panic on dimension mismatch; public entry points
/// check dimensions before reaching them.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Matrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Matrix { dim, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::MalformedMatrix("matrix has no rows".into()));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::MalformedMatrix(format!(
                    "row {i} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { dim, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i))
    }

    pub fn scale(&self, s: f64) -> Self {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `‖M − Mᵀ‖_F`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = self.get(i, j) - self.get(j, i);
                acc += 2.0 * d * d;
            }
        }
        acc.sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// `M^p` by repeated multiplication; `p = 0` gives the identity.
    pub fn powi(&self, p: usize) -> Self {
        let mut out = Matrix::identity(self.dim);
        for _ in 0..p {
            out = &out * self;
        }
        out
    }
}

impl Mul for &Matrix {
    type Output = Matrix;

    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "matrix product dimension mismatch");
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.data[i * n + k];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += aik * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl Add for &Matrix {
    type Output = Matrix;

    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "matrix sum dimension mismatch");
        Matrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;

    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "matrix difference dimension mismatch");
        Matrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Real symmetric matrix. Entries are exactly symmetric by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    /// Symmetrizes `m` as `(M + Mᵀ)/2`, rejecting non-finite entries.
    pub fn from_matrix(m: Matrix) -> Result<Self> {
        if m.dim == 0 {
            return Err(Error::MalformedMatrix("dimension must be at least 1".into()));
        }
        if !m.is_finite() {
            return Err(Error::MalformedMatrix("non-finite entry".into()));
        }
        Ok(Self::symmetrize(&m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_matrix(Matrix::from_rows(rows)?)
    }

    /// `(M + Mᵀ)/2` without the finiteness check.
    pub(crate) fn symmetrize(m: &Matrix) -> Self {
        let n = m.dim;
        let mut out = m.clone();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (m.get(i, j) + m.get(j, i));
                out.set(i, j, v);
                out.set(j, i, v);
            }
        }
        SymMatrix(out)
    }

    /// Builds from a closure evaluated on the upper triangle only.
    pub(crate) fn from_upper(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        SymMatrix(m)
    }

    pub fn identity(dim: usize) -> Self {
        SymMatrix(Matrix::identity(dim))
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix(Matrix::zeros(dim))
    }

    pub fn diag(values: &[f64]) -> Self {
        SymMatrix(Matrix::from_fn(values.len(), |i, j| if i == j { values[i] } else { 0.0 }))
    }

    /// 1×1 matrix.
    pub fn scalar(x: f64) -> Self {
        Self::diag(&[x])
    }

    /// `Q diag(values) Qᵀ` for an orthogonal `q`.
    pub fn from_spectrum(q: &Matrix, values: &[f64]) -> Self {
        assert_eq!(q.dim(), values.len());
        let n = values.len();
        Self::from_upper(n, |i, j| (0..n).map(|k| q.get(i, k) * values[k] * q.get(j, k)).sum())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.0.rows()
    }

    pub fn fro_norm(&self) -> f64 {
        self.0.fro_norm()
    }

    pub fn scale(&self, s: f64) -> Self {
        SymMatrix(self.0.scale(s))
    }

    /// `α·self + β·other`, entrywise.
    pub fn lin_comb(&self, alpha: f64, other: &SymMatrix, beta: f64) -> Self {
        assert_eq!(self.dim(), other.dim());
        SymMatrix(Matrix {
            dim: self.dim(),
            data: self
                .0
                .data
                .iter()
                .zip(&other.0.data)
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
        })
    }

    /// `X · M · X` for symmetric `X = self`, symmetrized.
    pub fn congruence(&self, m: &SymMatrix) -> SymMatrix {
        let prod = &(&self.0 * &m.0) * &self.0;
        SymMatrix::symmetrize(&prod)
    }

    pub fn check_same_dim(&self, other: &SymMatrix) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(())
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 - &rhs.0)
    }
}

impl Mul for &SymMatrix {
    type Output = Matrix;
    fn mul(self, rhs: &SymMatrix) -> Matrix {
        &self.0 * &rhs.0
    }
}

impl fmt::Display for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.rows() {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:>12.6e}")).collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixFile {
    dim: usize,
    rows: Vec<Vec<f64>>,
}

impl Serialize for SymMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixFile {
            dim: self.dim(),
            rows: self.rows(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SymMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let file = MatrixFile::deserialize(deserializer)?;
        if file.dim != file.rows.len() {
            return Err(D::Error::custom(format!(
                "dim {} does not match {} rows",
                file.dim,
                file.rows.len()
            )));
        }
        SymMatrix::from_rows(&file.rows).map_err(D::Error::custom)
    }
}

impl SymMatrix {
    /// Matrix file JSON: `{"dim": n, "rows": [[...], ...]}` with 17-digit floats.
    pub fn to_json(&self) -> String {
        crate::json::to_string(self).expect("matrix serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Orthonormal eigenbasis (columns of `basis`) and ascending eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    basis: Matrix,
    eigenvalues: Vec<f64>,
}

impl SpectralDecomposition {
    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// `Q f(Λ) Qᵀ` without domain checks.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let values: Vec<f64> = self.eigenvalues.iter().map(|&x| f(x)).collect();
        SymMatrix::from_spectrum(&self.basis, &values)
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.map(|x| x)
    }

    /// Fails unless every eigenvalue exceeds `psd_slack`.
    pub fn require_strictly_positive(&self, tol: &Tolerance, what: &str) -> Result<()> {
        let min = self.min_eigenvalue();
        if min > tol.psd_slack {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "{what} is not strictly positive definite (min eigenvalue {min:e})"
            )))
        }
    }

    /// `A^p` for a strictly positive definite source.
    pub fn power(&self, p: f64, tol: &Tolerance) -> Result<SymMatrix> {
        self.require_strictly_positive(tol, "power base")?;
        Ok(self.map(|x| x.powf(p)))
    }
}

/// Cyclic Jacobi eigensolver.
///
/// A rotation is applied to `(p, q)` whenever `|a_pq|` is not negligible
/// against `sqrt(|a_pp a_qq|)` at machine precision; the solver stops after
/// the first sweep that applies no rotation. If the sweep budget runs out the
/// result is still accepted when the off-diagonal Frobenius norm is within
/// `residual · ‖A‖_F`.
pub fn spectral_decompose(a: &SymMatrix, tol: &Tolerance) -> Result<SpectralDecomposition> {
    let n = a.dim();
    let mut m = a.0.data.clone();
    let mut v = Matrix::identity(n).data;
    let mut quiet = n == 1;

    let mut sweeps = 0;
    while !quiet && sweeps < tol.max_sweeps {
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                if apq.abs() <= f64::EPSILON * (app.abs() * aqq.abs()).sqrt() || apq.abs() < f64::MIN_POSITIVE {
                    continue;
                }
                rotated = true;

                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;

                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        quiet = !rotated;
    }

    if !quiet {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += m[i * n + j] * m[i * n + j];
                }
            }
        }
        let off = off.sqrt();
        if off > tol.residual * a.fro_norm().max(f64::MIN_POSITIVE) {
            return Err(Error::NoConvergence {
                sweeps,
                off_norm: off,
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    let eigenvalues = order.iter().map(|&i| m[i * n + i]).collect();
    let basis = Matrix::from_fn(n, |row, col| v[row * n + order[col]]);
    Ok(SpectralDecomposition { basis, eigenvalues })
}

/// `f(A) = Q f(Λ) Qᵀ`. Fails with `Domain` if `f` is non-finite at any eigenvalue.
pub fn matrix_function(a: &SymMatrix, f: impl Fn(f64) -> f64, tol: &Tolerance) -> Result<SymMatrix> {
    let dec = spectral_decompose(a, tol)?;
    let values: Vec<f64> = dec.eigenvalues.iter().map(|&x| f(x)).collect();
    if let Some((x, fx)) = dec.eigenvalues.iter().zip(&values).find(|(_, fx)| !fx.is_finite()) {
        return Err(Error::Domain(format!("function undefined at eigenvalue {x:e} (gave {fx})")));
    }
    Ok(SymMatrix::from_spectrum(&dec.basis, &values))
}

/// `A^p` for strictly positive definite `A` (min eigenvalue above `psd_slack`).
pub fn matrix_power(a: &SymMatrix, p: f64, tol: &Tolerance) -> Result<SymMatrix> {
    spectral_decompose(a, tol)?.power(p, tol)
}

/// `A⁻¹` for strictly positive definite `A`.
pub fn inverse(a: &SymMatrix, tol: &Tolerance) -> Result<SymMatrix> {
    let dec = spectral_decompose(a, tol)?;
    dec.require_strictly_positive(tol, "inverse argument")?;
    Ok(dec.map(f64::recip))
}

pub fn min_eigenvalue(a: &SymMatrix, tol: &Tolerance) -> Result<f64> {
    Ok(spectral_decompose(a, tol)?.min_eigenvalue())
}

/// Outcome of a semidefiniteness test: the verdict and the minimum
/// eigenvalue that decided it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdCheck {
    pub holds: bool,
    pub witness: f64,
}

impl PsdCheck {
    pub fn from_min_eig(witness: f64, tol: &Tolerance) -> Self {
        PsdCheck {
            holds: witness >= -tol.psd_slack,
            witness,
        }
    }
}

/// `A ≤ B` in the Loewner order, i.e. `B − A ⪰ 0` up to `psd_slack`.
pub fn loewner_leq(a: &SymMatrix, b: &SymMatrix, tol: &Tolerance) -> Result<PsdCheck> {
    a.check_same_dim(b)?;
    Ok(PsdCheck::from_min_eig(min_eigenvalue(&(b - a), tol)?, tol))
}

/// All eigenvalues in `(lower − slack, upper + slack]`.
pub fn is_strictly_positive(a: &SymMatrix, lower: f64, upper: f64, tol: &Tolerance) -> Result<bool> {
    if lower.is_nan() || upper.is_nan() || lower >= upper {
        return Err(Error::Precondition(format!("bounds must satisfy lower < upper, got ({lower}, {upper}]")));
    }
    let dec = spectral_decompose(a, tol)?;
    Ok(dec.min_eigenvalue() > lower - tol.psd_slack && dec.max_eigenvalue() <= upper + tol.psd_slack)
}

/// `‖AB − BA‖_F`.
pub fn commutator_norm(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    a.check_same_dim(b)?;
    Ok((&(a * b) - &(b * a)).fro_norm())
}

/// Commutation predicate: `‖AB − BA‖_F ≤ psd_slack · (1 + ‖A‖_F ‖B‖_F)`.
pub fn commutes(a: &SymMatrix, b: &SymMatrix, tol: &Tolerance) -> Result<bool> {
    let c = commutator_norm(a, b)?;
    Ok(c <= tol.psd_slack * (1.0 + a.fro_norm() * b.fro_norm()))
}
