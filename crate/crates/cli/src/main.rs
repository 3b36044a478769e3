//! `meanlab` command-line front end.
//!
//! Exit codes: 0 success, 2 flag/parse/config error, 3 domain error or failed
//! series precheck, 4 no convergence, 5 theorem-mode violations, 6 replay
//! mismatch.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use meanlab::alzer::experiment::ExperimentReport;
use meanlab::alzer::{replay_record, run_experiment, ExperimentConfig, Mode, StoreInputs};
use meanlab::iterative::{ah_iteration, recursive_arithmetic, recursive_geometric, recursive_harmonic, tn_iteration, IterationParams};
use meanlab::json::fmt_f64;
use meanlab::means::{harmonic, nabla, sharp};
use meanlab::series::{gap_series, series_precheck, SeriesParams};
use meanlab::{Error, SymMatrix, Tolerance, Weight};

const REPLAY_TOL: f64 = 1e-12;

#[derive(Parser)]
#[command(name = "meanlab", version, about = "Weighted operator means on positive-definite matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Two-operator weighted mean of matrix files.
    Mean {
        #[arg(long, value_enum)]
        op: MeanOp,
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-term CSV trace of the arithmetic-geometric gap series.
    Series {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
        #[arg(long, default_value_t = 64)]
        terms: usize,
        #[arg(long, default_value_t = 1e-10)]
        target_residual: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// CSV trace of the T_n or arithmetic-harmonic iteration.
    Iterate {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, value_enum, default_value_t = IterKind::Tn)]
        kind: IterKind,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-11)]
        tol_stop: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recursive m-operator mean of the inputs, in the given order.
    Gmean {
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = RecursiveKind::Geometric)]
        kind: RecursiveKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Seeded check of the operator inequality (thm32 or corollary mode).
    Verify {
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Seeded probe of the n-operator conjecture.
    SearchOpen {
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Recompute every trial of a report and compare gaps.
    Replay {
        #[arg(long)]
        report: PathBuf,
        /// Only this trial.
        #[arg(long)]
        trial: Option<u64>,
        /// CSV of stored vs replayed gaps; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MeanOp {
    Nabla,
    Sharp,
    Harmonic,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum IterKind {
    Tn,
    Ah,
}

#[derive(Clone, Copy, ValueEnum)]
enum RecursiveKind {
    Arithmetic,
    Geometric,
    Harmonic,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Thm32,
    Corollary,
    OpenProblem,
}

#[derive(Clone, Copy, ValueEnum)]
enum StoreArg {
    OnViolation,
    Always,
    Never,
}

#[derive(clap::Args)]
struct ExperimentArgs {
    /// Full ExperimentConfig JSON; other experiment flags are then ignored.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long)]
    n_ops: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5")]
    lambda_grid: Vec<f64>,
    #[arg(long)]
    commuting: bool,
    #[arg(long)]
    ordered: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = StoreArg::OnViolation)]
    store_inputs: StoreArg,
    #[arg(long, default_value_t = 0.01)]
    spectrum_lo: f64,
    #[arg(long, default_value_t = 0.5)]
    spectrum_hi: f64,
    #[arg(long)]
    report: PathBuf,
}

/// A failed command: exit code plus message.
struct Failure(u8, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Domain(_) | Error::Divergent { .. } | Error::NoConvergence { .. } => 3,
            Error::NotConverged { .. } | Error::MaxIterExceeded { .. } => 4,
            _ => 2,
        };
        Failure(code, e.to_string())
    }
}

type CmdResult = std::result::Result<u8, Failure>;

fn read_matrix(path: &Path) -> std::result::Result<SymMatrix, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure(2, format!("{}: {e}", path.display())))?;
    SymMatrix::from_json(&text).map_err(|e| Failure(2, format!("{}: {e}", path.display())))
}

/// Writes through a temp file in the target directory, renamed on success.
fn write_atomic(path: &Path, contents: &str) -> std::result::Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| Failure(2, format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn weight(lambda: f64) -> std::result::Result<Weight, Failure> {
    Weight::new(lambda).map_err(|e| Failure(2, e.to_string()))
}

fn cmd_mean(op: MeanOp, lambda: f64, a: &Path, b: &Path, out: &Path, tol: &Tolerance) -> CmdResult {
    let w = weight(lambda)?;
    let (a, b) = (read_matrix(a)?, read_matrix(b)?);
    let r = match op {
        MeanOp::Nabla => nabla(&a, &b, w)?,
        MeanOp::Sharp => sharp(&a, &b, w, tol)?,
        MeanOp::Harmonic => harmonic(&a, &b, w, tol)?,
    };
    write_atomic(out, &(r.to_json() + "\n"))?;
    Ok(0)
}

fn cmd_series(a: &Path, b: &Path, lambda: f64, terms: usize, target: f64, out: &Path, tol: &Tolerance) -> CmdResult {
    let w = weight(lambda)?;
    if terms < 2 {
        return Err(Failure(2, format!("--terms must be at least 2, got {terms}")));
    }
    let (a, b) = (read_matrix(a)?, read_matrix(b)?);
    let pre = series_precheck(&a, &b, tol)?;
    if !pre.operative {
        return Err(Failure(3, format!("series precheck failed: spectral radius {} >= 1", pre.spectral_radius)));
    }
    let params = SeriesParams::new(w).with_max_terms(terms).with_target_residual(target);
    let res = gap_series(&a, &b, &params, tol)?;
    let closed = &nabla(&a, &b, w)? - &sharp(&a, &b, w, tol)?;
    let residual = (&res.partial_sum - &closed).fro_norm();

    let mut csv = String::from("k,coefficient,term_fro_norm,term_min_eig,partial_sum_fro_norm\n");
    for t in &res.terms {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            t.k,
            fmt_f64(t.coefficient),
            fmt_f64(t.term_fro_norm),
            fmt_f64(t.term_min_eig),
            fmt_f64(t.partial_sum_fro_norm)
        );
    }
    let _ = writeln!(csv, "# converged={},identity_residual={}", res.converged, fmt_f64(residual));
    write_atomic(out, &csv)?;
    if res.converged {
        Ok(0)
    } else {
        eprintln!("series not converged after {} terms, last term norm {}", res.terms_used, res.last_term_norm);
        Ok(4)
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_iterate(a: &Path, b: &Path, kind: IterKind, m: usize, max_iter: usize, tol_stop: f64, out: &Path, tol: &Tolerance) -> CmdResult {
    let m = if kind == IterKind::Ah { 2 } else { m };
    let params = IterationParams::new(m)?.with_max_iter(max_iter).with_tol_stop(tol_stop);
    let (a, b) = (read_matrix(a)?, read_matrix(b)?);
    let trace = match kind {
        IterKind::Tn => tn_iteration(&a, &b, &params, tol)?,
        IterKind::Ah => ah_iteration(&a, &b, &params, tol)?,
    };
    let mut csv = String::from("n,residual_fro,bound_fro,min_eig_Tn_minus_limit,asymmetry_norm\n");
    for n in 0..trace.len() {
        let _ = writeln!(
            csv,
            "{n},{},{},{},{}",
            fmt_f64(trace.residuals[n]),
            fmt_f64(trace.bound_values[n]),
            fmt_f64(trace.gap_min_eigs[n]),
            fmt_f64(trace.asymmetry[n])
        );
    }
    write_atomic(out, &csv)?;
    if trace.asymmetry_flagged {
        eprintln!("warning: raw update asymmetry exceeded the flag threshold");
    }
    if trace.converged {
        Ok(0)
    } else {
        eprintln!("no convergence within {max_iter} iterations");
        Ok(4)
    }
}

fn cmd_gmean(inputs: &[PathBuf], kind: RecursiveKind, out: &Path, tol: &Tolerance) -> CmdResult {
    let mats = inputs.iter().map(|p| read_matrix(p)).collect::<std::result::Result<Vec<_>, _>>()?;
    let r = match kind {
        RecursiveKind::Arithmetic => recursive_arithmetic(&mats)?,
        RecursiveKind::Geometric => recursive_geometric(&mats, tol)?,
        RecursiveKind::Harmonic => recursive_harmonic(&mats, tol)?,
    };
    write_atomic(out, &(r.to_json() + "\n"))?;
    Ok(0)
}

fn build_config(args: &ExperimentArgs, theorem: bool) -> std::result::Result<ExperimentConfig, Failure> {
    let config = if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| Failure(2, format!("{}: {e}", path.display())))?;
        serde_json::from_str::<ExperimentConfig>(&text).map_err(|e| Failure(2, format!("{}: {e}", path.display())))?
    } else {
        let mode = match (args.mode, theorem) {
            (Some(ModeArg::Thm32), _) | (None, true) => Mode::Thm32,
            (Some(ModeArg::Corollary), _) => Mode::Corollary,
            (Some(ModeArg::OpenProblem), _) | (None, false) => Mode::OpenProblem,
        };
        ExperimentConfig {
            mode,
            trials: args.trials,
            dim: args.dim,
            n_ops: args.n_ops.unwrap_or(if theorem { 2 } else { 3 }),
            lambda_grid: if mode == Mode::Thm32 { args.lambda_grid.clone() } else { Vec::new() },
            commuting: args.commuting,
            ordered: args.ordered,
            seed: args.seed,
            store_inputs: match args.store_inputs {
                StoreArg::OnViolation => StoreInputs::OnViolation,
                StoreArg::Always => StoreInputs::Always,
                StoreArg::Never => StoreInputs::Never,
            },
            spectrum_lo: args.spectrum_lo,
            spectrum_hi: args.spectrum_hi,
        }
    };
    if config.mode.is_theorem() != theorem {
        let want = if theorem { "thm32 or corollary" } else { "open-problem" };
        return Err(Failure(2, format!("this subcommand takes mode {want}")));
    }
    config.validate()?;
    Ok(config)
}

fn cmd_experiment(args: &ExperimentArgs, theorem: bool, tol: &Tolerance) -> CmdResult {
    let config = build_config(args, theorem)?;
    let report = run_experiment(&config, tol)?;
    write_atomic(&args.report, &report.to_jsonl()?)?;
    let s = &report.summary;
    let min_gap = s.min_gap_min_eig.map_or_else(|| "none".to_string(), fmt_f64);
    if theorem {
        println!(
            "trials={} violations={} symmetry_failures={} marginal={} min_gap_min_eig={min_gap}",
            s.trials, s.violations, s.symmetry_failures, s.marginal
        );
        Ok(if s.failures() > 0 { 5 } else { 0 })
    } else {
        println!(
            "trials={} findings={} permuted_findings={} marginal={} min_gap_min_eig={min_gap}",
            s.trials, s.violations, s.permuted_violations, s.marginal
        );
        Ok(0)
    }
}

fn cmd_replay(report: &Path, trial: Option<u64>, out: Option<&Path>, tol: &Tolerance) -> CmdResult {
    let text = std::fs::read_to_string(report).map_err(|e| Failure(2, format!("{}: {e}", report.display())))?;
    let report = ExperimentReport::from_jsonl(&text)?;
    let records: Vec<_> = report.records.iter().filter(|r| trial.is_none_or(|t| r.trial_id == t)).collect();
    if let Some(t) = trial {
        if records.is_empty() {
            return Err(Failure(2, format!("trial {t} is not in the report")));
        }
    }
    let mut csv = String::from("trial_id,stored_gap_min_eig,replayed_gap_min_eig,abs_diff\n");
    let mut mismatches = 0usize;
    for r in records {
        let again = replay_record(&report.config, r, tol)?;
        let diff = (again.gap_min_eig - r.gap_min_eig).abs();
        let perm_diff = match (again.permuted_gap_min_eig, r.permuted_gap_min_eig) {
            (Some(x), Some(y)) => (x - y).abs(),
            (None, None) => 0.0,
            _ => f64::INFINITY,
        };
        if !(diff <= REPLAY_TOL && perm_diff <= REPLAY_TOL) {
            mismatches += 1;
        }
        let _ = writeln!(csv, "{},{},{},{}", r.trial_id, fmt_f64(r.gap_min_eig), fmt_f64(again.gap_min_eig), fmt_f64(diff));
    }
    match out {
        Some(p) => write_atomic(p, &csv)?,
        None => print!("{csv}"),
    }
    if mismatches > 0 {
        eprintln!("{mismatches} trial(s) did not replay within {REPLAY_TOL:e}");
        Ok(6)
    } else {
        Ok(0)
    }
}

fn dispatch(cli: Cli) -> CmdResult {
    let tol = Tolerance::default();
    match cli.command {
        Command::Mean { op, lambda, a, b, out } => cmd_mean(op, lambda, &a, &b, &out, &tol),
        Command::Series { a, b, lambda, terms, target_residual, out } => {
            cmd_series(&a, &b, lambda, terms, target_residual, &out, &tol)
        }
        Command::Iterate { a, b, kind, m, max_iter, tol_stop, out } => cmd_iterate(&a, &b, kind, m, max_iter, tol_stop, &out, &tol),
        Command::Gmean { inputs, kind, out } => cmd_gmean(&inputs, kind, &out, &tol),
        Command::Verify { exp } => cmd_experiment(&exp, true, &tol),
        Command::SearchOpen { exp } => cmd_experiment(&exp, false, &tol),
        Command::Replay { report, trial, out } => cmd_replay(&report, trial, out.as_deref(), &tol),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("meanlab: {msg}");
            ExitCode::from(code)
        }
    }
}
