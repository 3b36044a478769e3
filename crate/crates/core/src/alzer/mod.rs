//! Alzer-type inequalities: scalar oracle, operator checks, open-problem probe.
//!
//! For `0 < A ≤ B ≤ ½I` commuting and `0 < λ ≤ ½` the operator inequality
//!
//! ```text
//! B′ ∇_λ A′ − B′ ♯_λ A′ ≤ A ∇_λ B − A ♯_λ B,    X′ = I − X
//! ```
//!
//! holds in the Loewner order. The checkers here never assume the
//! hypotheses: they record which ones hold and report the minimum eigenvalue
//! of `RHS − LHS`, so out-of-hypothesis inputs can be probed on purpose.

pub mod experiment;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iterative::{recursive_arithmetic, recursive_geometric};
use crate::means::{complement, nabla, sharp, Weight};
use crate::symmat::{commutes, is_strictly_positive, loewner_leq, min_eigenvalue, spectral_decompose, SymMatrix, Tolerance};

pub use experiment::{
    replay_record, run_experiment, run_experiment_with_workers, run_trial, workers_from_env, ExperimentConfig,
    ExperimentReport, Mode, ReportLine, StoreInputs, Summary,
};

/// Values in `(0, ½]` with positive weights summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarTuple {
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl ScalarTuple {
    pub fn new(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != weights.len() {
            return Err(Error::Precondition(format!(
                "need matching nonempty values/weights, got {} and {}",
                values.len(),
                weights.len()
            )));
        }
        if let Some(x) = values.iter().find(|&&x| !(x > 0.0 && x <= 0.5)) {
            return Err(Error::Precondition(format!("value {x} outside (0, 1/2]")));
        }
        if let Some(w) = weights.iter().find(|&&w| w.is_nan() || w <= 0.0) {
            return Err(Error::Precondition(format!("weight {w} is not positive")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Precondition(format!("weights sum to {total}, not 1")));
        }
        Ok(ScalarTuple { values, weights })
    }

    /// Equal weights `1/n`.
    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        let n = values.len().max(1) as f64;
        let weights = vec![1.0 / n; values.len()];
        Self::new(values, weights)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// `lhs = A′_n − G′_n`, `rhs = A_n − G_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlzerSides {
    pub lhs: f64,
    pub rhs: f64,
}

impl AlzerSides {
    /// `rhs − lhs`; nonnegative when the inequality holds.
    pub fn gap(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// Weighted arithmetic/geometric means of `x_j` and of `1 − x_j`.
pub fn scalar_alzer_gap(t: &ScalarTuple) -> AlzerSides {
    let pairs = || t.values.iter().zip(&t.weights);
    let am: f64 = pairs().map(|(x, w)| w * x).sum();
    let gm: f64 = pairs().map(|(x, w)| w * x.ln()).sum::<f64>().exp();
    let am_c: f64 = pairs().map(|(x, w)| w * (1.0 - x)).sum();
    let gm_c: f64 = pairs().map(|(x, w)| w * (1.0 - x).ln()).sum::<f64>().exp();
    AlzerSides {
        lhs: am_c - gm_c,
        rhs: am - gm,
    }
}

/// Which hypotheses of the operator inequality an input satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypotheses {
    /// Every input has spectrum in `(0, ½]`.
    pub in_range: bool,
    /// `A ≤ B`; absent for the open problem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordered: Option<bool>,
    /// `λ ≤ ½`; absent when no weight is involved.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_le_half: Option<bool>,
}

/// One checked input, as written to a report line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub seed: u64,
    pub master_seed: u64,
    pub n_ops: usize,
    pub dim: usize,
    pub lambda: Option<f64>,
    pub commuting: bool,
    pub hypotheses: Hypotheses,
    /// Minimum eigenvalue of `RHS − LHS`.
    pub gap_min_eig: f64,
    /// `gap_min_eig < −psd_slack`.
    pub violated: bool,
    /// `|gap_min_eig| ≤ 10·psd_slack`: indistinguishable from rounding noise.
    pub marginal: bool,
    /// Open problem only: the gap with inputs in `permutation` order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permuted_gap_min_eig: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutation: Option<Vec<usize>>,
    /// Corollary only: how far each side moves when `A` and `B` swap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<Vec<SymMatrix>>,
}

/// Swap residual above which the `λ = ½` symmetry counts as broken.
pub const SYMMETRY_TOL: f64 = 1e-10;

impl TrialRecord {
    fn new(n_ops: usize, dim: usize, lambda: Option<f64>, commuting: bool, hypotheses: Hypotheses, gap_min_eig: f64, tol: &Tolerance) -> Self {
        TrialRecord {
            trial_id: 0,
            seed: 0,
            master_seed: 0,
            n_ops,
            dim,
            lambda,
            commuting,
            hypotheses,
            gap_min_eig,
            violated: gap_min_eig < -tol.psd_slack,
            marginal: gap_min_eig.abs() <= 10.0 * tol.psd_slack,
            permuted_gap_min_eig: None,
            permutation: None,
            symmetry_residual: None,
            inputs: None,
        }
    }

    pub fn within_hypotheses(&self) -> bool {
        self.commuting
            && self.hypotheses.in_range
            && self.hypotheses.ordered.unwrap_or(true)
            && self.hypotheses.lambda_le_half.unwrap_or(true)
    }

    pub fn symmetry_failed(&self) -> bool {
        self.symmetry_residual.is_some_and(|r| r > SYMMETRY_TOL)
    }
}

fn require_pd(x: &SymMatrix, what: &str, tol: &Tolerance) -> Result<()> {
    spectral_decompose(x, tol)?.require_strictly_positive(tol, what)
}

fn in_half_interval(x: &SymMatrix, tol: &Tolerance) -> Result<bool> {
    is_strictly_positive(x, 0.0, 0.5, tol)
}

/// `(LHS, RHS)` of the operator inequality.
fn operator_sides(a: &SymMatrix, b: &SymMatrix, w: Weight, tol: &Tolerance) -> Result<(SymMatrix, SymMatrix)> {
    let ac = complement(a);
    let bc = complement(b);
    let lhs = &nabla(&bc, &ac, w)? - &sharp(&bc, &ac, w, tol)?;
    let rhs = &nabla(a, b, w)? - &sharp(a, b, w, tol)?;
    Ok((lhs, rhs))
}

/// `RHS − LHS` of the operator inequality as a matrix.
pub fn operator_alzer_gap(a: &SymMatrix, b: &SymMatrix, w: Weight, tol: &Tolerance) -> Result<SymMatrix> {
    a.check_same_dim(b)?;
    require_pd(a, "A", tol)?;
    require_pd(b, "B", tol)?;
    let (lhs, rhs) = operator_sides(a, b, w, tol)?;
    Ok(&rhs - &lhs)
}

/// Checks `B′ ∇_λ A′ − B′ ♯_λ A′ ≤ A ∇_λ B − A ♯_λ B`, recording hypotheses.
pub fn operator_alzer_check(a: &SymMatrix, b: &SymMatrix, w: Weight, tol: &Tolerance) -> Result<TrialRecord> {
    let gap = operator_alzer_gap(a, b, w, tol)?;
    let hyp = Hypotheses {
        in_range: in_half_interval(a, tol)? && in_half_interval(b, tol)?,
        ordered: Some(loewner_leq(a, b, tol)?.holds),
        lambda_le_half: Some(w.value() <= 0.5),
    };
    Ok(TrialRecord::new(
        2,
        a.dim(),
        Some(w.value()),
        commutes(a, b, tol)?,
        hyp,
        min_eigenvalue(&gap, tol)?,
        tol,
    ))
}

/// The `λ = ½` case, plus the swap symmetry of both sides.
pub fn classic_corollary_check(a: &SymMatrix, b: &SymMatrix, tol: &Tolerance) -> Result<TrialRecord> {
    let mut rec = operator_alzer_check(a, b, Weight::HALF, tol)?;
    let (lhs, rhs) = operator_sides(a, b, Weight::HALF, tol)?;
    let (lhs_sw, rhs_sw) = operator_sides(b, a, Weight::HALF, tol)?;
    rec.symmetry_residual = Some((&lhs - &lhs_sw).fro_norm().max((&rhs - &rhs_sw).fro_norm()));
    Ok(rec)
}

/// `(𝐀_n − 𝐆_n) − (𝐀′_n − 𝐆′_n)` with the recursive means, inputs in the given order.
pub fn open_problem_gap(inputs: &[SymMatrix], tol: &Tolerance) -> Result<SymMatrix> {
    if inputs.len() < 2 {
        return Err(Error::Precondition(format!("need at least 2 operators, got {}", inputs.len())));
    }
    for (j, x) in inputs.iter().enumerate() {
        inputs[0].check_same_dim(x)?;
        require_pd(x, &format!("input {j}"), tol)?;
    }
    let primed: Vec<SymMatrix> = inputs.iter().map(complement).collect();
    let rhs = &recursive_arithmetic(inputs)? - &recursive_geometric(inputs, tol)?;
    let lhs = &recursive_arithmetic(&primed)? - &recursive_geometric(&primed, tol)?;
    Ok(&rhs - &lhs)
}

/// One probe of the n-operator conjecture. The verdict is recorded, never asserted.
pub fn open_problem_trial(inputs: &[SymMatrix], tol: &Tolerance) -> Result<TrialRecord> {
    let gap = open_problem_gap(inputs, tol)?;
    let mut in_range = true;
    let mut commuting = true;
    for (j, x) in inputs.iter().enumerate() {
        in_range &= in_half_interval(x, tol)?;
        for y in &inputs[j + 1..] {
            commuting &= commutes(x, y, tol)?;
        }
    }
    let hyp = Hypotheses {
        in_range,
        ordered: None,
        lambda_le_half: None,
    };
    Ok(TrialRecord::new(
        inputs.len(),
        inputs[0].dim(),
        None,
        commuting,
        hyp,
        min_eigenvalue(&gap, tol)?,
        tol,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn scalar_tuple_validation() {
        assert!(ScalarTuple::new(vec![0.2], vec![1.0]).is_ok());
        assert!(ScalarTuple::new(vec![0.6], vec![1.0]).is_err());
        assert!(ScalarTuple::new(vec![0.0], vec![1.0]).is_err());
        assert!(ScalarTuple::new(vec![0.2, 0.3], vec![0.5, 0.6]).is_err());
        assert!(ScalarTuple::new(vec![0.2, 0.3], vec![1.0]).is_err());
        assert!(ScalarTuple::new(vec![0.2, 0.3], vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn scalar_examples() {
        let s = scalar_alzer_gap(&ScalarTuple::uniform(vec![0.2, 0.4]).unwrap());
        assert_abs_diff_eq!(s.lhs, 0.7 - 0.48f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.rhs, 0.3 - 0.08f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.lhs, 0.007_179_68, epsilon = 1e-8);
        assert_abs_diff_eq!(s.rhs, 0.017_157_29, epsilon = 1e-8);

        let s = scalar_alzer_gap(&ScalarTuple::uniform(vec![0.3; 4]).unwrap());
        assert_abs_diff_eq!(s.lhs, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.rhs, 0.0, epsilon = 1e-15);

        let s = scalar_alzer_gap(&ScalarTuple::new(vec![0.5; 3], vec![0.2, 0.3, 0.5]).unwrap());
        assert_abs_diff_eq!(s.lhs, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.rhs, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn operator_scalar_example() {
        let r = operator_alzer_check(&SymMatrix::scalar(0.2), &SymMatrix::scalar(0.4), Weight::HALF, &tol()).unwrap();
        assert_abs_diff_eq!(r.gap_min_eig, 0.009_977_61, epsilon = 1e-8);
        assert!(!r.violated && !r.marginal && r.within_hypotheses());
        assert_eq!(r.lambda, Some(0.5));
    }

    #[test]
    fn operator_equal_inputs() {
        let a = SymMatrix::from_rows(&[vec![0.3, 0.05], vec![0.05, 0.2]]).unwrap();
        let r = operator_alzer_check(&a, &a, Weight::new(0.3).unwrap(), &tol()).unwrap();
        assert_abs_diff_eq!(r.gap_min_eig, 0.0, epsilon = 1e-14);
        assert!(!r.violated && r.marginal);
    }

    #[test]
    fn operator_records_hypotheses() {
        let t = tol();
        let a = SymMatrix::diag(&[0.4, 0.1]);
        let b = SymMatrix::diag(&[0.2, 0.3]);
        let r = operator_alzer_check(&a, &b, Weight::new(0.7).unwrap(), &t).unwrap();
        assert_eq!(r.hypotheses.ordered, Some(false));
        assert_eq!(r.hypotheses.lambda_le_half, Some(false));
        assert!(r.commuting && r.hypotheses.in_range && !r.within_hypotheses());

        let big = SymMatrix::diag(&[0.6, 0.1]);
        let r = operator_alzer_check(&SymMatrix::diag(&[0.05, 0.05]), &big, Weight::HALF, &t).unwrap();
        assert!(!r.hypotheses.in_range);

        assert!(matches!(
            operator_alzer_check(&SymMatrix::diag(&[0.0, 0.1]), &b, Weight::HALF, &t),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn corollary_is_swap_symmetric() {
        let t = tol();
        let a = SymMatrix::from_rows(&[vec![0.3, 0.05], vec![0.05, 0.2]]).unwrap();
        let b = SymMatrix::from_rows(&[vec![0.1, -0.02], vec![-0.02, 0.4]]).unwrap();
        let r1 = classic_corollary_check(&a, &b, &t).unwrap();
        let r2 = classic_corollary_check(&b, &a, &t).unwrap();
        assert!(r1.symmetry_residual.unwrap() <= 1e-10);
        assert!(!r1.symmetry_failed());
        assert_abs_diff_eq!(r1.gap_min_eig, r2.gap_min_eig, epsilon = 1e-10);

        let s = classic_corollary_check(&SymMatrix::scalar(0.2), &SymMatrix::scalar(0.4), &t).unwrap();
        assert_abs_diff_eq!(s.gap_min_eig, 0.009_977_61, epsilon = 1e-8);
        let z = classic_corollary_check(&a, &a, &t).unwrap();
        assert_abs_diff_eq!(z.gap_min_eig, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn open_problem_examples() {
        let t = tol();
        let a = SymMatrix::from_rows(&[vec![0.3, 0.05], vec![0.05, 0.2]]).unwrap();
        let r = open_problem_trial(&[a.clone(), a.clone(), a.clone()], &t).unwrap();
        assert_abs_diff_eq!(r.gap_min_eig, 0.0, epsilon = 1e-13);
        assert_eq!(r.lambda, None);

        let r = open_problem_trial(&[0.2, 0.3, 0.4].map(SymMatrix::scalar), &t).unwrap();
        let g = 0.024f64.cbrt();
        let gc = 0.336f64.cbrt();
        assert_abs_diff_eq!(g, 0.28845, epsilon = 1e-5);
        assert_abs_diff_eq!(gc, 0.69521, epsilon = 1e-5);
        assert_abs_diff_eq!(r.gap_min_eig, (0.3 - g) - (0.7 - gc), epsilon = 1e-14);
        assert_abs_diff_eq!(r.gap_min_eig, 0.00676, epsilon = 1e-5);
        assert!(r.commuting && r.within_hypotheses() && !r.violated);

        assert!(open_problem_trial(std::slice::from_ref(&a), &t).is_err());
        assert!(open_problem_trial(&[a, SymMatrix::diag(&[0.1, -0.1])], &t).is_err());
    }
}
