//! Seeded ensembles of strictly positive definite matrices.
//!
//! Seed semantics are part of the report format, so they are fixed here:
//!
//! - A trial's seed is the `(trial_id + 1)`-th output of SplitMix64 started
//!   from the master seed ([`trial_seed`]).
//! - Each seed drives a `ChaCha8Rng` (`rand_chacha`, `seed_from_u64`).
//! - A random orthogonal matrix is the Q factor (positive R diagonal) of a
//!   matrix of standard normals drawn row by row.
//! - Eigenvalues are `lo + (hi − lo)·u` with `u` uniform in `[0, 1)`.
//! - Commuting ensembles draw one Q, then the eigenvalues of each matrix in
//!   turn; for ordered pairs each slot draws two values and the smaller goes
//!   to the first matrix. Non-commuting ensembles draw (Q, eigenvalues) per
//!   matrix.
//! - Ordered non-commuting pairs draw `B` as above, then a contraction `C`
//!   (own basis, eigenvalues `r + (1 − r)·u` with `r = lo/hi`) and set
//!   `A = B^{1/2} C B^{1/2}`, so `0 < A ≤ B` without a shared basis.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symmat::{Matrix, SymMatrix};

pub type TrialRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial_id` under `master`; a pure function of both.
pub fn trial_seed(master: u64, trial_id: u64) -> u64 {
    splitmix64_mix(master.wrapping_add(trial_id.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

pub fn rng_from_seed(seed: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub dim: usize,
    pub spectrum_lo: f64,
    pub spectrum_hi: f64,
    pub count: usize,
    pub commuting: bool,
    pub ordered: bool,
    pub seed: u64,
}

impl EnsembleSpec {
    pub const DEFAULT_LO: f64 = 0.01;
    pub const DEFAULT_HI: f64 = 0.5;

    /// Pair with spectra in `[0.01, 0.5)`.
    pub fn pair(dim: usize, commuting: bool, ordered: bool, seed: u64) -> Self {
        EnsembleSpec {
            dim,
            spectrum_lo: Self::DEFAULT_LO,
            spectrum_hi: Self::DEFAULT_HI,
            count: 2,
            commuting,
            ordered,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Spec("dim must be at least 1".into()));
        }
        if self.count == 0 {
            return Err(Error::Spec("count must be at least 1".into()));
        }
        if !(self.spectrum_lo > 0.0 && self.spectrum_lo.is_finite() && self.spectrum_hi.is_finite()) {
            return Err(Error::Spec(format!(
                "spectrum bounds must be finite with lo > 0, got [{}, {}]",
                self.spectrum_lo, self.spectrum_hi
            )));
        }
        if self.spectrum_lo >= self.spectrum_hi {
            return Err(Error::Spec(format!(
                "spectrum_lo {} must be below spectrum_hi {}",
                self.spectrum_lo, self.spectrum_hi
            )));
        }
        if self.ordered && self.count != 2 {
            return Err(Error::Spec(format!("ordered ensembles are pairs, got count {}", self.count)));
        }
        Ok(())
    }
}

/// Haar-style random orthogonal matrix from `rng`.
pub fn random_orthogonal_with<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Matrix {
    let g = Matrix::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    // Modified Gram-Schmidt on columns, applied twice for orthogonality at
    // machine precision. Signs follow a positive R diagonal.
    let mut cols: Vec<Vec<f64>> = (0..dim).map(|j| (0..dim).map(|i| g.get(i, j)).collect()).collect();
    for j in 0..dim {
        let sign = if cols[j][j] < 0.0 { -1.0 } else { 1.0 };
        for _pass in 0..2 {
            for k in 0..j {
                let dot: f64 = cols[k].iter().zip(&cols[j]).map(|(x, y)| x * y).sum();
                let (done, rest) = cols.split_at_mut(j);
                for (y, x) in rest[0].iter_mut().zip(&done[k]) {
                    *y -= dot * x;
                }
            }
        }
        let norm = cols[j].iter().map(|x| x * x).sum::<f64>().sqrt();
        let s = sign / norm;
        for y in &mut cols[j] {
            *y *= s;
        }
    }
    Matrix::from_fn(dim, |i, j| cols[j][i])
}

pub fn random_orthogonal(dim: usize, seed: u64) -> Matrix {
    random_orthogonal_with(dim, &mut rng_from_seed(seed))
}

fn draw_spectrum<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> Vec<f64> {
    let width = spec.spectrum_hi - spec.spectrum_lo;
    (0..spec.dim).map(|_| spec.spectrum_lo + width * rng.random::<f64>()).collect()
}

/// Draws `spec.count` matrices from `rng`, ignoring `spec.seed`.
pub fn random_spd_with<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> Result<Vec<SymMatrix>> {
    spec.validate()?;
    if spec.ordered && !spec.commuting {
        let q = random_orthogonal_with(spec.dim, rng);
        let b_spec = draw_spectrum(spec, rng);
        let b = SymMatrix::from_spectrum(&q, &b_spec);
        let b_root = SymMatrix::from_spectrum(&q, &b_spec.iter().map(|x| x.sqrt()).collect::<Vec<_>>());
        let r = spec.spectrum_lo / spec.spectrum_hi;
        let qc = random_orthogonal_with(spec.dim, rng);
        let c: Vec<f64> = (0..spec.dim).map(|_| r + (1.0 - r) * rng.random::<f64>()).collect();
        let a = b_root.congruence(&SymMatrix::from_spectrum(&qc, &c));
        return Ok(vec![a, b]);
    }
    if !spec.commuting {
        return Ok((0..spec.count)
            .map(|_| {
                let q = random_orthogonal_with(spec.dim, rng);
                SymMatrix::from_spectrum(&q, &draw_spectrum(spec, rng))
            })
            .collect());
    }
    let q = random_orthogonal_with(spec.dim, rng);
    if spec.ordered {
        let mut lo = Vec::with_capacity(spec.dim);
        let mut hi = Vec::with_capacity(spec.dim);
        let width = spec.spectrum_hi - spec.spectrum_lo;
        for _ in 0..spec.dim {
            let x = spec.spectrum_lo + width * rng.random::<f64>();
            let y = spec.spectrum_lo + width * rng.random::<f64>();
            lo.push(x.min(y));
            hi.push(x.max(y));
        }
        return Ok(vec![SymMatrix::from_spectrum(&q, &lo), SymMatrix::from_spectrum(&q, &hi)]);
    }
    Ok((0..spec.count)
        .map(|_| SymMatrix::from_spectrum(&q, &draw_spectrum(spec, rng)))
        .collect())
}

/// Draws the ensemble described by `spec`, seeded by `spec.seed`.
pub fn random_spd(spec: &EnsembleSpec) -> Result<Vec<SymMatrix>> {
    random_spd_with(spec, &mut rng_from_seed(spec.seed))
}
