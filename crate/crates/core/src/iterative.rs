//! Iterative geometric means and recursive m-operator means.
//!
//! The `T_n` recursion
//!
//! ```text
//! T_0     = (1/m)A + ((m−1)/m)B
//! T_{n+1} = ((m−1)/m)T_n + (1/m) A (T_n⁻¹ B)^{m−1}
//! ```
//!
//! decreases in the Loewner order to the power geometric mean
//! `Φ_{1/m}(A, B) = B^{1/2}(B^{-1/2}AB^{-1/2})^{1/m}B^{1/2}` with
//! `0 ≤ T_n − Φ ≤ (1 − 1/m)^n (T_0 − T_0^{(−1)})`, where
//! `T_0^{(−1)} = ((1/m)A⁻¹ + ((m−1)/m)B⁻¹)⁻¹`. At `m = 2` it is the
//! arithmetic–harmonic iteration for `A ♯ B`.

use crate::error::{Error, Result};
use crate::means::{congruence_power, sharp, Weight};
use crate::symmat::{inverse, loewner_leq, min_eigenvalue, spectral_decompose, SymMatrix, Tolerance};

/// Asymmetry of a raw update above `ASYMMETRY_FLAG · (1 + ‖T‖_F)` flags the run.
pub const ASYMMETRY_FLAG: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationParams {
    pub m: usize,
    pub tol_stop: f64,
    pub max_iter: usize,
}

impl IterationParams {
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::Precondition(format!("m must be at least 2, got {m}")));
        }
        Ok(IterationParams {
            m,
            tol_stop: 1e-11,
            max_iter: 200,
        })
    }

    pub fn with_tol_stop(mut self, tol_stop: f64) -> Self {
        self.tol_stop = tol_stop;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub m: usize,
    /// `T_0, T_1, …`
    pub iterates: Vec<SymMatrix>,
    /// `‖T_n − Φ‖_F`.
    pub residuals: Vec<f64>,
    /// `(1 − 1/m)^n ‖T_0 − T_0^{(−1)}‖_F`.
    pub bound_values: Vec<f64>,
    /// Minimum eigenvalue of `T_n − Φ`.
    pub gap_min_eigs: Vec<f64>,
    /// `‖U − Uᵀ‖_F` of the raw update that produced `T_n` (0 for `T_0`).
    pub asymmetry: Vec<f64>,
    pub asymmetry_flagged: bool,
    pub converged: bool,
    /// Closed-form limit `Φ_{1/m}(A, B)`.
    pub limit: SymMatrix,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.iterates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterates.is_empty()
    }

    pub fn last(&self) -> &SymMatrix {
        self.iterates.last().expect("trace holds T_0")
    }

    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::MaxIterExceeded {
                iterations: self.iterates.len() - 1,
                residual: *self.residuals.last().unwrap_or(&f64::NAN),
            })
        }
    }
}

/// `Φ_t(A, B) = B^{1/2}(B^{-1/2}AB^{-1/2})^t B^{1/2}`.
pub fn power_mean_weighted(a: &SymMatrix, b: &SymMatrix, t: f64, tol: &Tolerance) -> Result<SymMatrix> {
    congruence_power(b, a, t, tol)
}

/// Power geometric mean `Φ_{1/m}(A, B)`.
pub fn power_mean(a: &SymMatrix, b: &SymMatrix, m: usize, tol: &Tolerance) -> Result<SymMatrix> {
    if m < 2 {
        return Err(Error::Precondition(format!("m must be at least 2, got {m}")));
    }
    power_mean_weighted(a, b, 1.0 / m as f64, tol)
}

/// `T_0` evaluated at `(A, B)`.
fn start(a: &SymMatrix, b: &SymMatrix, m: usize) -> SymMatrix {
    let mf = m as f64;
    a.lin_comb(1.0 / mf, b, (mf - 1.0) / mf)
}

/// `T_0^{(−1)} = (T_0(A⁻¹, B⁻¹))⁻¹`.
fn start_dual(a: &SymMatrix, b: &SymMatrix, m: usize, tol: &Tolerance) -> Result<SymMatrix> {
    inverse(&start(&inverse(a, tol)?, &inverse(b, tol)?, m), tol)
}

/// One recursion step; returns the symmetrized iterate and the raw asymmetry.
fn step(t: &SymMatrix, a: &SymMatrix, b: &SymMatrix, m: usize, tol: &Tolerance) -> Result<(SymMatrix, f64)> {
    let mf = m as f64;
    let t_inv = inverse(t, tol).map_err(|_| Error::Domain("iterate lost strict positivity".into()))?;
    let p = (&t_inv * b).powi(m - 1);
    let update = &t.as_matrix().scale((mf - 1.0) / mf) + &(a.as_matrix() * &p).scale(1.0 / mf);
    let asym = update.asymmetry();
    let next = SymMatrix::from_matrix(update).map_err(|_| Error::Domain("iterate became non-finite".into()))?;
    Ok((next, asym))
}

enum Stop {
    /// `‖T_n − Φ‖_F ≤ tol_stop`.
    DistanceToLimit,
    /// `‖T_{n+1} − T_n‖_F ≤ tol_stop`.
    Successive,
}

fn run(a: &SymMatrix, b: &SymMatrix, m: usize, limit: SymMatrix, p: &IterationParams, stop: Stop, tol: &Tolerance) -> Result<IterationTrace> {
    let t0 = start(a, b, m);
    let bound0 = (&t0 - &start_dual(a, b, m, tol)?).fro_norm();
    let rate = 1.0 - 1.0 / m as f64;

    let mut trace = IterationTrace {
        m,
        iterates: Vec::new(),
        residuals: Vec::new(),
        bound_values: Vec::new(),
        gap_min_eigs: Vec::new(),
        asymmetry: Vec::new(),
        asymmetry_flagged: false,
        converged: false,
        limit,
    };

    let mut current = t0;
    let mut asym = 0.0;
    let mut bound = bound0;
    for n in 0..=p.max_iter {
        let gap = &current - &trace.limit;
        trace.residuals.push(gap.fro_norm());
        trace.gap_min_eigs.push(min_eigenvalue(&gap, tol)?);
        trace.bound_values.push(bound);
        trace.asymmetry.push(asym);
        if asym > ASYMMETRY_FLAG * (1.0 + current.fro_norm()) {
            trace.asymmetry_flagged = true;
        }
        trace.iterates.push(current.clone());

        if let Stop::DistanceToLimit = stop {
            if trace.residuals[n] <= p.tol_stop {
                trace.converged = true;
                break;
            }
        }
        if n == p.max_iter {
            break;
        }

        let (next, a_n) = step(&current, a, b, m, tol)?;
        if min_eigenvalue(&next, tol)? <= tol.psd_slack {
            return Err(Error::Domain(format!("iterate {} lost strict positivity", n + 1)));
        }
        if let Stop::Successive = stop {
            if (&next - &current).fro_norm() <= p.tol_stop {
                trace.converged = true;
                let gap = &next - &trace.limit;
                trace.residuals.push(gap.fro_norm());
                trace.gap_min_eigs.push(min_eigenvalue(&gap, tol)?);
                trace.bound_values.push(bound * rate);
                trace.asymmetry.push(a_n);
                trace.iterates.push(next);
                break;
            }
        }
        current = next;
        asym = a_n;
        bound *= rate;
    }
    Ok(trace)
}

fn require_pd_pair(a: &SymMatrix, b: &SymMatrix, tol: &Tolerance) -> Result<()> {
    a.check_same_dim(b)?;
    spectral_decompose(a, tol)?.require_strictly_positive(tol, "A")?;
    spectral_decompose(b, tol)?.require_strictly_positive(tol, "B")
}

/// Arithmetic–harmonic iteration `Φ_{n+1} = Φ_n/2 + AΦ_n⁻¹B/2` for `A ♯ B`.
///
/// Stops on successive differences; `p.m` is ignored. The trace's residuals
/// are measured against the closed-form `A ♯ B`.
pub fn ah_iteration(a: &SymMatrix, b: &SymMatrix, p: &IterationParams, tol: &Tolerance) -> Result<IterationTrace> {
    require_pd_pair(a, b, tol)?;
    let limit = sharp(a, b, Weight::HALF, tol)?;
    run(a, b, 2, limit, p, Stop::Successive, tol)
}

/// The `T_n` recursion, stopped on distance to `Φ_{1/m}(A, B)`.
pub fn tn_iteration(a: &SymMatrix, b: &SymMatrix, p: &IterationParams, tol: &Tolerance) -> Result<IterationTrace> {
    require_pd_pair(a, b, tol)?;
    let limit = power_mean(a, b, p.m, tol)?;
    run(a, b, p.m, limit, p, Stop::DistanceToLimit, tol)
}

/// Per-step verdicts of [`check_estimation_bound`]. Witnesses are minimum eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepVerdict {
    pub n: usize,
    /// `T_n − Φ ⪰ 0`.
    pub lower_ok: bool,
    pub lower_witness: f64,
    /// `(1 − 1/m)^n (T_0 − T_0^{(−1)}) − (T_n − Φ) ⪰ 0`.
    pub upper_ok: bool,
    pub upper_witness: f64,
    /// `T_{n+1} ≤ T_n`; vacuous on the last step.
    pub decreasing_ok: bool,
    pub decrease_witness: Option<f64>,
}

impl StepVerdict {
    pub fn holds(&self) -> bool {
        self.lower_ok && self.upper_ok && self.decreasing_ok
    }
}

/// Checks the two-sided estimate and monotone decrease at every step.
///
/// The limit and `T_0^{(−1)}` are recomputed from `(a, b, m)` rather than
/// taken from the trace.
pub fn check_estimation_bound(
    trace: &IterationTrace,
    a: &SymMatrix,
    b: &SymMatrix,
    m: usize,
    tol: &Tolerance,
) -> Result<Vec<StepVerdict>> {
    let limit = power_mean(a, b, m, tol)?;
    let base = &start(a, b, m) - &start_dual(a, b, m, tol)?;
    let rate = 1.0 - 1.0 / m as f64;

    let mut out = Vec::with_capacity(trace.iterates.len());
    for (n, t) in trace.iterates.iter().enumerate() {
        let gap = t - &limit;
        let lower = loewner_leq(&SymMatrix::zeros(t.dim()), &gap, tol)?;
        let bound = base.scale(rate.powi(n as i32));
        let upper = loewner_leq(&gap, &bound, tol)?;
        let decrease = trace
            .iterates
            .get(n + 1)
            .map(|next| loewner_leq(next, t, tol))
            .transpose()?;
        out.push(StepVerdict {
            n,
            lower_ok: lower.holds,
            lower_witness: lower.witness,
            upper_ok: upper.holds,
            upper_witness: upper.witness,
            decreasing_ok: decrease.is_none_or(|d| d.holds),
            decrease_witness: decrease.map(|d| d.witness),
        });
    }
    Ok(out)
}

fn check_family(inputs: &[SymMatrix]) -> Result<()> {
    let first = inputs.first().ok_or(Error::EmptyInput)?;
    inputs.iter().try_for_each(|x| first.check_same_dim(x))
}

/// `A_m(a_1, …, a_m) = (1/m)a_1 + ((m−1)/m) A_{m−1}(a_2, …, a_m)`.
pub fn recursive_arithmetic(inputs: &[SymMatrix]) -> Result<SymMatrix> {
    check_family(inputs)?;
    let (last, rest) = inputs.split_last().expect("nonempty");
    let mut acc = last.clone();
    for (j, x) in rest.iter().enumerate().rev() {
        let k = (inputs.len() - j) as f64;
        acc = x.lin_comb(1.0 / k, &acc, (k - 1.0) / k);
    }
    Ok(acc)
}

/// `H_m(a_1, …, a_m) = ((1/m)a_1⁻¹ + ((m−1)/m) H_{m−1}(a_2, …, a_m)⁻¹)⁻¹`.
pub fn recursive_harmonic(inputs: &[SymMatrix], tol: &Tolerance) -> Result<SymMatrix> {
    check_family(inputs)?;
    let (last, rest) = inputs.split_last().expect("nonempty");
    let mut acc = last.clone();
    inverse(&acc, tol)?;
    for (j, x) in rest.iter().enumerate().rev() {
        let k = (inputs.len() - j) as f64;
        acc = inverse(&inverse(x, tol)?.lin_comb(1.0 / k, &inverse(&acc, tol)?, (k - 1.0) / k), tol)?;
    }
    Ok(acc)
}

/// `G_m(A_1, …, A_m) = Φ_{1/m}(A_1, G_{m−1}(A_2, …, A_m))`, `G_1(A) = A`.
///
/// Order-dependent for `m ≥ 3`.
pub fn recursive_geometric(inputs: &[SymMatrix], tol: &Tolerance) -> Result<SymMatrix> {
    check_family(inputs)?;
    let (last, rest) = inputs.split_last().expect("nonempty");
    spectral_decompose(last, tol)?.require_strictly_positive(tol, "geometric mean input")?;
    let mut acc = last.clone();
    for (j, x) in rest.iter().enumerate().rev() {
        acc = power_mean(x, &acc, inputs.len() - j, tol)?;
    }
    Ok(acc)
}
