//! Seeded experiment engine and the JSON-lines report format.
//!
//! A report is one `config` line, one `trial` line per trial in `trial_id`
//! order, then one `summary` line. Every line carries a `"kind"` tag.

use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{classic_corollary_check, open_problem_gap, open_problem_trial, operator_alzer_check, TrialRecord};
use crate::error::{Error, Result};
use crate::gen::{random_spd_with, rng_from_seed, trial_seed, EnsembleSpec};
use crate::json;
use crate::means::Weight;
use crate::symmat::{min_eigenvalue, SymMatrix, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "thm32")]
    Thm32,
    #[serde(rename = "corollary")]
    Corollary,
    #[serde(rename = "open-problem")]
    OpenProblem,
}

impl Mode {
    /// Violations in theorem modes are failures; open-problem ones are findings.
    pub fn is_theorem(self) -> bool {
        !matches!(self, Mode::OpenProblem)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StoreInputs {
    OnViolation,
    Always,
    Never,
}

fn default_lo() -> f64 {
    EnsembleSpec::DEFAULT_LO
}

fn default_hi() -> f64 {
    EnsembleSpec::DEFAULT_HI
}

fn default_store() -> StoreInputs {
    StoreInputs::OnViolation
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub trials: u64,
    pub dim: usize,
    pub n_ops: usize,
    #[serde(default)]
    pub lambda_grid: Vec<f64>,
    pub commuting: bool,
    pub ordered: bool,
    pub seed: u64,
    #[serde(default = "default_store")]
    pub store_inputs: StoreInputs,
    #[serde(default = "default_lo")]
    pub spectrum_lo: f64,
    #[serde(default = "default_hi")]
    pub spectrum_hi: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.dim == 0 {
            return bad("dim must be at least 1".into());
        }
        match self.mode {
            Mode::Thm32 | Mode::Corollary if self.n_ops != 2 => {
                return bad(format!("mode {:?} takes n_ops = 2, got {}", self.mode, self.n_ops));
            }
            Mode::OpenProblem if self.n_ops < 2 => {
                return bad(format!("open-problem needs n_ops >= 2, got {}", self.n_ops));
            }
            Mode::OpenProblem if self.ordered => {
                return bad("ordered applies to pairs only, not open-problem".into());
            }
            _ => {}
        }
        if self.mode == Mode::Thm32 {
            if self.lambda_grid.is_empty() {
                return bad("thm32 needs a nonempty lambda_grid".into());
            }
            if let Some(l) = self.lambda_grid.iter().find(|&&l| Weight::new(l).is_err()) {
                return bad(format!("lambda {l} outside (0, 1)"));
            }
        }
        if self.spectrum_hi > 1.0 {
            return bad(format!("spectrum_hi {} exceeds 1; complements would not be positive", self.spectrum_hi));
        }
        self.ensemble(0).validate().map_err(|e| Error::Config(e.to_string()))
    }

    fn ensemble(&self, seed: u64) -> EnsembleSpec {
        EnsembleSpec {
            dim: self.dim,
            spectrum_lo: self.spectrum_lo,
            spectrum_hi: self.spectrum_hi,
            count: self.n_ops,
            commuting: self.commuting,
            ordered: self.ordered,
            seed,
        }
    }

    fn lambda_for(&self, trial_id: u64) -> Option<Weight> {
        match self.mode {
            Mode::Thm32 => {
                let l = self.lambda_grid[(trial_id % self.lambda_grid.len() as u64) as usize];
                Weight::new(l).ok()
            }
            Mode::Corollary => Some(Weight::HALF),
            Mode::OpenProblem => None,
        }
    }

    fn keep_inputs(&self, rec: &TrialRecord, tol: &Tolerance) -> bool {
        match self.store_inputs {
            StoreInputs::Always => true,
            StoreInputs::Never => false,
            StoreInputs::OnViolation => rec.violated || rec.permuted_gap_min_eig.is_some_and(|g| g < -tol.psd_slack),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mode: Mode,
    pub trials: u64,
    pub violations: u64,
    pub violations_within_hypotheses: u64,
    pub permuted_violations: u64,
    pub marginal: u64,
    pub symmetry_failures: u64,
    pub min_gap_min_eig: Option<f64>,
    pub min_permuted_gap_min_eig: Option<f64>,
    pub wall_time_secs: f64,
}

impl Summary {
    fn from_records(mode: Mode, records: &[TrialRecord], tol: &Tolerance, wall_time_secs: f64) -> Self {
        let count = |f: &dyn Fn(&TrialRecord) -> bool| records.iter().filter(|r| f(r)).count() as u64;
        let fmin = |it: &mut dyn Iterator<Item = f64>| it.reduce(f64::min);
        Summary {
            mode,
            trials: records.len() as u64,
            violations: count(&|r| r.violated),
            violations_within_hypotheses: count(&|r| r.violated && r.within_hypotheses()),
            permuted_violations: count(&|r| r.permuted_gap_min_eig.is_some_and(|g| g < -tol.psd_slack)),
            marginal: count(&|r| r.marginal),
            symmetry_failures: count(&|r| r.symmetry_failed()),
            min_gap_min_eig: fmin(&mut records.iter().map(|r| r.gap_min_eig)),
            min_permuted_gap_min_eig: fmin(&mut records.iter().filter_map(|r| r.permuted_gap_min_eig)),
            wall_time_secs,
        }
    }

    /// Nonzero only for theorem modes: open-problem violations are findings.
    pub fn failures(&self) -> u64 {
        if self.mode.is_theorem() {
            self.violations + self.symmetry_failures
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportLine {
    Config(ExperimentConfig),
    Trial(TrialRecord),
    Summary(Summary),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
}

impl ExperimentReport {
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = json::to_string(&ReportLine::Config(self.config.clone()))?;
        out.push('\n');
        for r in &self.records {
            out.push_str(&json::to_string(&ReportLine::Trial(r.clone()))?);
            out.push('\n');
        }
        out.push_str(&json::to_string(&ReportLine::Summary(self.summary.clone()))?);
        out.push('\n');
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut config = None;
        let mut summary = None;
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let parsed: ReportLine =
                serde_json::from_str(line).map_err(|e| Error::Parse(format!("report line {}: {e}", i + 1)))?;
            match (parsed, &config, &summary) {
                (ReportLine::Config(c), None, None) => config = Some(c),
                (ReportLine::Trial(r), Some(_), None) => records.push(r),
                (ReportLine::Summary(s), Some(_), None) => summary = Some(s),
                _ => return Err(Error::Parse(format!("report line {} is out of order", i + 1))),
            }
        }
        match (config, summary) {
            (Some(config), Some(summary)) => Ok(ExperimentReport { config, records, summary }),
            _ => Err(Error::Parse("report needs a config line and a summary line".into())),
        }
    }
}

/// Reads `MEANLAB_THREADS`; `None` when unset.
pub fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var("MEANLAB_THREADS") {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(Error::Config(format!("MEANLAB_THREADS: {e}"))),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("MEANLAB_THREADS must be a positive integer, got {s:?}"))),
        },
    }
}

fn evaluate(
    config: &ExperimentConfig,
    inputs: &[SymMatrix],
    lambda: Option<Weight>,
    permutation: Option<&[usize]>,
    tol: &Tolerance,
) -> Result<TrialRecord> {
    match config.mode {
        Mode::Thm32 => {
            let w = lambda.ok_or_else(|| Error::Config("thm32 record without lambda".into()))?;
            operator_alzer_check(&inputs[0], &inputs[1], w, tol)
        }
        Mode::Corollary => classic_corollary_check(&inputs[0], &inputs[1], tol),
        Mode::OpenProblem => {
            let mut rec = open_problem_trial(inputs, tol)?;
            if let Some(p) = permutation {
                if p.len() != inputs.len() {
                    return Err(Error::Parse(format!("permutation of length {} for {} inputs", p.len(), inputs.len())));
                }
                let permuted: Vec<SymMatrix> = p.iter().map(|&j| inputs[j].clone()).collect();
                rec.permuted_gap_min_eig = Some(min_eigenvalue(&open_problem_gap(&permuted, tol)?, tol)?);
                rec.permutation = Some(p.to_vec());
            }
            Ok(rec)
        }
    }
}

/// Runs trial `trial_id` of `config` from its derived seed.
pub fn run_trial(config: &ExperimentConfig, trial_id: u64, tol: &Tolerance) -> Result<TrialRecord> {
    let seed = trial_seed(config.seed, trial_id);
    let mut rng = rng_from_seed(seed);
    let inputs = random_spd_with(&config.ensemble(seed), &mut rng)?;
    let permutation = (config.mode == Mode::OpenProblem).then(|| {
        let mut p: Vec<usize> = (0..config.n_ops).collect();
        p.shuffle(&mut rng);
        p
    });
    let mut rec = evaluate(config, &inputs, config.lambda_for(trial_id), permutation.as_deref(), tol)?;
    rec.trial_id = trial_id;
    rec.seed = seed;
    rec.master_seed = config.seed;
    if config.keep_inputs(&rec, tol) {
        rec.inputs = Some(inputs);
    }
    Ok(rec)
}

/// Recomputes a stored record: from its embedded inputs when present,
/// otherwise by regenerating the trial from its master seed.
pub fn replay_record(config: &ExperimentConfig, record: &TrialRecord, tol: &Tolerance) -> Result<TrialRecord> {
    let config = ExperimentConfig {
        seed: record.master_seed,
        ..config.clone()
    };
    let Some(inputs) = &record.inputs else {
        return run_trial(&config, record.trial_id, tol);
    };
    if inputs.len() != config.n_ops || inputs.iter().any(|m| m.dim() != config.dim) {
        return Err(Error::Parse(format!("stored inputs of trial {} do not match the config", record.trial_id)));
    }
    let lambda = record.lambda.map(Weight::new).transpose()?;
    let mut rec = evaluate(&config, inputs, lambda, record.permutation.as_deref(), tol)?;
    rec.trial_id = record.trial_id;
    rec.seed = record.seed;
    rec.master_seed = record.master_seed;
    rec.inputs = Some(inputs.clone());
    Ok(rec)
}

/// Runs on `workers` threads; the report does not depend on `workers`.
pub fn run_experiment_with_workers(config: &ExperimentConfig, workers: Option<usize>, tol: &Tolerance) -> Result<ExperimentReport> {
    config.validate()?;
    let start = Instant::now();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let records = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|id| run_trial(config, id, tol))
            .collect::<Result<Vec<_>>>()
    })?;
    let summary = Summary::from_records(config.mode, &records, tol, start.elapsed().as_secs_f64());
    Ok(ExperimentReport {
        config: config.clone(),
        records,
        summary,
    })
}

/// Runs with the worker cap from `MEANLAB_THREADS`.
pub fn run_experiment(config: &ExperimentConfig, tol: &Tolerance) -> Result<ExperimentReport> {
    run_experiment_with_workers(config, workers_from_env()?, tol)
}
