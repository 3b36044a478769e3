//! Binomial-series form of the arithmetic–geometric gap.
//!
//! With `D = B^{-1/2}(B − A)B^{-1/2}` and `α = 1 − λ`,
//!
//! ```text
//! A ∇_λ B − A ♯_λ B = Σ_{k≥2} (−1)^{k−1} C(α, k) · B^{1/2} D^k B^{1/2}
//! ```
//!
//! which converges when the spectral radius of `D` is below 1. For commuting
//! `A`, `B` the k-th term is `B^{(1−k)/2}(B − A)^k B^{(1−k)/2}`.
//!
//! The sign factor pairs with powers of `B − A`, not of `AB⁻¹ − I`; the two
//! differ by `(−1)^k` and only the former reproduces the closed-form gap.

use crate::error::{Error, Result};
use crate::means::{nabla, sharp, Weight};
use crate::symmat::{min_eigenvalue, spectral_decompose, SymMatrix, Tolerance};

/// Generalized binomial coefficient `α(α−1)⋯(α−k+1)/k!`.
///
/// Evaluated left to right, dividing by each index as it goes.
pub fn gen_binom(alpha: f64, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (alpha - f64::from(i)) / f64::from(i + 1))
}

/// `(−1)^{k−1} C(α, k)`, strictly positive for `0 < α < 1` and `k ≥ 2`.
pub fn sign_structure(alpha: f64, k: u32) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Precondition(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if k < 2 {
        return Err(Error::Precondition(format!("k must be at least 2, got {k}")));
    }
    let c = gen_binom(alpha, k);
    Ok(if k % 2 == 1 { c } else { -c })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesParams {
    pub lambda: Weight,
    /// Cap on the number of summed terms (k = 2, 3, …).
    pub max_terms: usize,
    /// Stop once a term's Frobenius norm falls to this level.
    pub target_residual: f64,
}

impl SeriesParams {
    pub fn new(lambda: Weight) -> Self {
        SeriesParams {
            lambda,
            max_terms: 64,
            target_residual: 1e-10,
        }
    }

    pub fn with_max_terms(mut self, max_terms: usize) -> Self {
        self.max_terms = max_terms;
        self
    }

    pub fn with_target_residual(mut self, target: f64) -> Self {
        self.target_residual = target;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.max_terms < 2 {
            return Err(Error::Precondition(format!("max_terms must be at least 2, got {}", self.max_terms)));
        }
        if !(self.target_residual > 0.0 && self.target_residual.is_finite()) {
            return Err(Error::Precondition(format!(
                "target_residual must be positive, got {}",
                self.target_residual
            )));
        }
        Ok(())
    }
}

/// One summed term, as emitted in the per-term CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesTerm {
    pub k: u32,
    /// `(−1)^{k−1} C(1 − λ, k)`.
    pub coefficient: f64,
    pub term_fro_norm: f64,
    pub term_min_eig: f64,
    pub partial_sum_fro_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesResult {
    pub partial_sum: SymMatrix,
    pub terms_used: usize,
    pub last_term_norm: f64,
    pub converged: bool,
    pub per_term_min_eigs: Vec<f64>,
    pub terms: Vec<SeriesTerm>,
}

impl SeriesResult {
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                terms: self.terms_used,
                last_term_norm: self.last_term_norm,
            })
        }
    }
}

/// Convergence diagnostics for the gap series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Precheck {
    /// Spectral radius of `B^{-1/2}AB^{-1/2} − I`.
    pub spectral_radius: f64,
    /// `spectral_radius < 1`; the condition the series actually needs.
    pub operative: bool,
    /// Operator norm of `B^{-1/2}AB^{-1/2}`.
    pub operator_norm: f64,
    /// `operator_norm < 1`, the stronger textbook hypothesis.
    pub literal: bool,
}

struct Expansion {
    b_root: SymMatrix,
    /// Eigendecomposition of `D = B^{-1/2}(B − A)B^{-1/2}`.
    d: crate::symmat::SpectralDecomposition,
}

fn expansion(a: &SymMatrix, b: &SymMatrix, tol: &Tolerance) -> Result<Expansion> {
    a.check_same_dim(b)?;
    spectral_decompose(a, tol)?.require_strictly_positive(tol, "A")?;
    let bd = spectral_decompose(b, tol)?;
    bd.require_strictly_positive(tol, "B")?;
    let b_root = bd.map(f64::sqrt);
    let b_inv_root = bd.map(|x| x.sqrt().recip());
    let d = spectral_decompose(&b_inv_root.congruence(&(b - a)), tol)?;
    Ok(Expansion { b_root, d })
}

fn precheck_of(e: &Expansion) -> Precheck {
    let ev = e.d.eigenvalues();
    let spectral_radius = ev.iter().fold(0.0_f64, |r, x| r.max(x.abs()));
    // Eigenvalues of B^{-1/2}AB^{-1/2} are 1 − eig(D); it is PD, so its norm is the largest.
    let operator_norm = ev.iter().map(|x| 1.0 - x).fold(0.0_f64, f64::max);
    Precheck {
        spectral_radius,
        operative: spectral_radius < 1.0,
        operator_norm,
        literal: operator_norm < 1.0,
    }
}

pub fn series_precheck(a: &SymMatrix, b: &SymMatrix, tol: &Tolerance) -> Result<Precheck> {
    Ok(precheck_of(&expansion(a, b, tol)?))
}

/// Partial sums of the gap series.
///
/// Returns `Ok` with `converged = false` when `max_terms` runs out; use
/// [`SeriesResult::require_converged`] to turn that into an error.
pub fn gap_series(a: &SymMatrix, b: &SymMatrix, p: &SeriesParams, tol: &Tolerance) -> Result<SeriesResult> {
    p.validate()?;
    let e = expansion(a, b, tol)?;
    let pre = precheck_of(&e);
    if !pre.operative {
        return Err(Error::Divergent {
            radius: pre.spectral_radius,
        });
    }

    let alpha = p.lambda.flip().value();
    let n = a.dim();
    let mut sum = SymMatrix::zeros(n);
    let mut terms = Vec::new();
    let mut last_term_norm = f64::INFINITY;
    let mut converged = false;

    for k in 2u32.. {
        let coefficient = sign_structure(alpha, k)?;
        let ki = k as i32;
        let d_pow = e.d.map(|x| x.powi(ki));
        let term = e.b_root.congruence(&d_pow).scale(coefficient);
        let term_min_eig = min_eigenvalue(&term, tol)?;
        last_term_norm = term.fro_norm();
        sum = &sum + &term;
        terms.push(SeriesTerm {
            k,
            coefficient,
            term_fro_norm: last_term_norm,
            term_min_eig,
            partial_sum_fro_norm: sum.fro_norm(),
        });
        if last_term_norm <= p.target_residual {
            converged = true;
            break;
        }
        if terms.len() >= p.max_terms {
            break;
        }
    }

    Ok(SeriesResult {
        partial_sum: sum,
        terms_used: terms.len(),
        last_term_norm,
        converged,
        per_term_min_eigs: terms.iter().map(|t| t.term_min_eig).collect(),
        terms,
    })
}

/// `‖series − (A ∇_λ B − A ♯_λ B)‖_F` for a converged series.
pub fn verify_gap_identity(a: &SymMatrix, b: &SymMatrix, p: &SeriesParams, tol: &Tolerance) -> Result<f64> {
    let series = gap_series(a, b, p, tol)?.require_converged()?;
    let closed = &nabla(a, b, p.lambda)? - &sharp(a, b, p.lambda, tol)?;
    Ok((&series.partial_sum - &closed).fro_norm())
}
