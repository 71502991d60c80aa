//! Driver of the polaron spectral pipeline.
//!
//! `polaron-bands <subcommand> --config PATH [--out-dir PATH] [--threads N]`
//!
//! Upstream stages are loaded from the stage cache (`POLARON_CACHE_DIR`,
//! else `run.cache_dir`, else `<out_dir>/.cache`) or computed and cached.
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 numerical, cache or I/O error. Diagnostics go to stderr as one JSON
//! object per line.

pub mod cache;
pub mod config;
pub mod emit;
pub mod error;
pub mod pipeline;
pub mod tables;
pub mod verify;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use polaron_core::trial_kernels::verify_trial_lemmas;
use polaron_core::Exec;
use serde::Serialize;

use crate::cache::Cache;
use crate::config::Config;
use crate::emit::{write_json, Provenance, Table};
use crate::error::CliError;
use crate::pipeline::Pipeline;

/// Environment variable overriding the cache directory.
pub const CACHE_ENV: &str = "POLARON_CACHE_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "polaron-bands",
    version,
    about = "Strong-coupling polaron spectra, ladders and energy bands"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    SolvePekar,
    Hessian,
    Ladder,
    Bands,
    TrialCheck,
    Verify,
    Sweep,
}

#[derive(Debug, Parser)]
pub struct Args {
    /// JSON configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides `run.out_dir`).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads (overrides `run.thread_count`).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Radial Pekar minimizer: pekar.csv, pekar_summary.json.
    SolvePekar(Args),
    /// Field Hessian spectrum: spectrum.csv, hessian_summary.json.
    Hessian(Args),
    /// Excitation ladder: ladder.csv.
    Ladder(Args),
    /// Band table and plot data: bands.csv, figure1_data.csv.
    Bands(Args),
    /// Trial-kernel checks: trial_report.json.
    TrialCheck(Args),
    /// All numerical self-checks: verify_report.json, verify.csv.
    Verify(Args),
    /// Every table of the pipeline.
    Sweep(Args),
}

impl Command {
    fn split(&self) -> (CommandKind, &Args) {
        match self {
            Command::SolvePekar(a) => (CommandKind::SolvePekar, a),
            Command::Hessian(a) => (CommandKind::Hessian, a),
            Command::Ladder(a) => (CommandKind::Ladder, a),
            Command::Bands(a) => (CommandKind::Bands, a),
            Command::TrialCheck(a) => (CommandKind::TrialCheck, a),
            Command::Verify(a) => (CommandKind::Verify, a),
            Command::Sweep(a) => (CommandKind::Sweep, a),
        }
    }
}

fn diagnostic(level: &str, kind: Option<&str>, message: &str) {
    #[derive(Serialize)]
    struct Line<'a> {
        level: &'a str,
        #[serde(skip_serializing_if = "Option::is_none")]
        kind: Option<&'a str>,
        message: &'a str,
    }
    let line = serde_json::to_string(&Line {
        level,
        kind,
        message,
    })
    .expect("plain strings serialize");
    eprintln!("{line}");
}

/// Reports a recoverable event on stderr.
pub fn notice(message: &str) {
    diagnostic("notice", None, message);
}

/// Record of one invocation, written as `run_artifacts.json`.
#[derive(Debug, Serialize)]
pub struct RunArtifacts {
    pub command: String,
    pub files: Vec<PathBuf>,
    pub stage_seconds: std::collections::BTreeMap<String, f64>,
    pub cache_hits: std::collections::BTreeMap<String, bool>,
    pub cache_dir: PathBuf,
    pub threads: Option<usize>,
    pub total_seconds: f64,
}

/// Parses `argv`, runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(_) => 0,
        Err(e) => {
            diagnostic("error", Some(e.kind()), &e.to_string());
            e.exit_code()
        }
    }
}

/// Cache directory: the environment override, the configured one, or
/// `<out_dir>/.cache`.
pub fn cache_dir(cfg: &Config, out_dir: &Path) -> PathBuf {
    match std::env::var_os(CACHE_ENV) {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => cfg
            .run
            .cache_dir
            .clone()
            .unwrap_or_else(|| out_dir.join(".cache")),
    }
}

pub fn execute(cmd: &Command) -> Result<RunArtifacts, CliError> {
    let (kind, args) = cmd.split();
    let cfg = Config::load(&args.config)?;
    let threads = args.threads.or(cfg.run.thread_count);
    if threads == Some(0) {
        return Err(CliError::Config("--threads must be positive".into()));
    }
    let out_dir = args
        .out_dir
        .clone()
        .unwrap_or_else(|| cfg.run.out_dir.clone());
    let cache = Cache::new(cache_dir(&cfg, &out_dir));
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| {
                    CliError::Config(format!("cannot build a pool of {n} threads: {e}"))
                })?;
            pool.install(|| run_command(kind, &cfg, &out_dir, cache, threads))
        }
        None => run_command(kind, &cfg, &out_dir, cache, threads),
    }
}

fn run_command(
    kind: CommandKind,
    cfg: &Config,
    out_dir: &Path,
    cache: Cache,
    threads: Option<usize>,
) -> Result<RunArtifacts, CliError> {
    let start = Instant::now();
    let prov = Provenance::new(cfg.hash(), cfg.numerics.k_max_proxy, cfg.physics.c_err);
    let cache_dir = cache.dir().to_path_buf();
    let mut p = Pipeline::new(cfg, cache, Exec::Parallel);
    let mut files = Vec::new();
    let mut outcome = Ok(());
    let write = |t: Table, files: &mut Vec<PathBuf>| -> Result<(), CliError> {
        files.push(t.write(out_dir)?);
        Ok(())
    };

    match kind {
        CommandKind::SolvePekar => {
            let sol = p.pekar()?;
            write(tables::pekar_table(&prov, sol), &mut files)?;
            files.push(write_json(
                out_dir,
                "pekar_summary.json",
                &prov,
                &pekar_summary(sol),
            )?);
        }
        CommandKind::Hessian => {
            let spec = p.spectrum()?;
            write(tables::spectrum_table(&prov, spec), &mut files)?;
            files.push(write_json(
                out_dir,
                "hessian_summary.json",
                &prov,
                &hessian_summary(spec),
            )?);
        }
        CommandKind::Ladder => {
            let ladder = p.ladder()?;
            write(tables::ladder_table(&prov, &ladder), &mut files)?;
        }
        CommandKind::Bands | CommandKind::Sweep => {
            if kind == CommandKind::Sweep {
                let sol = p.pekar()?;
                files.push(write_json(
                    out_dir,
                    "pekar_summary.json",
                    &prov,
                    &pekar_summary(sol),
                )?);
                let spec = p.spectrum()?;
                write(tables::spectrum_table(&prov, spec), &mut files)?;
                files.push(write_json(
                    out_dir,
                    "hessian_summary.json",
                    &prov,
                    &hessian_summary(spec),
                )?);
                let ladder = p.ladder()?;
                write(tables::ladder_table(&prov, &ladder), &mut files)?;
            }
            let inputs = p.band_inputs()?;
            let diagram = p.diagram(&inputs)?;
            write(tables::bands_table(&prov, &diagram), &mut files)?;
            let ph = &cfg.physics;
            write(
                tables::figure_table(
                    &prov,
                    &inputs,
                    &ph.alpha_list,
                    ph.n_bands,
                    ph.figure_points,
                    ph.figure_p_max_over_pc,
                )?,
                &mut files,
            )?;
        }
        CommandKind::TrialCheck => {
            let exec = p.exec;
            let sol = p.pekar()?.clone();
            let spec = p.spectrum()?;
            let t = Instant::now();
            let report = verify_trial_lemmas(&sol, spec, &cfg.trial, exec)?;
            p.timings.insert("trial".into(), t.elapsed().as_secs_f64());
            files.push(write_json(out_dir, "trial_report.json", &prov, &report)?);
            if !report.passed {
                outcome = Err(CliError::Verification {
                    failed: report.failures().into_iter().map(String::from).collect(),
                });
            }
        }
        CommandKind::Verify => {
            let t = Instant::now();
            let report = verify::run_verification(&mut p, &prov)?;
            p.timings.insert("verify".into(), t.elapsed().as_secs_f64());
            write(verify::report_table(&prov, &report), &mut files)?;
            files.push(write_json(out_dir, "verify_report.json", &prov, &report)?);
            if !report.passed {
                outcome = Err(CliError::Verification {
                    failed: report.failures(),
                });
            }
        }
    }

    let artifacts = RunArtifacts {
        command: format!("{kind:?}"),
        files,
        stage_seconds: p.timings.clone(),
        cache_hits: p.cache_hits.clone(),
        cache_dir,
        threads,
        total_seconds: start.elapsed().as_secs_f64(),
    };
    write_json(out_dir, "run_artifacts.json", &prov, &artifacts)?;
    outcome.map(|_| artifacts)
}

#[derive(Serialize)]
struct PekarSummary {
    e_pek: f64,
    lambda_pek: f64,
    kinetic: f64,
    phi_norm_sq: f64,
    grad_phi_norm_sq: f64,
    m_lp: f64,
    lambda_gauss: f64,
    iterations: usize,
    residual: f64,
    virial_residual: f64,
    n_r: usize,
    r_max: f64,
}

fn pekar_summary(s: &polaron_core::pekar_solver::PekarSolution) -> PekarSummary {
    PekarSummary {
        e_pek: s.e_pek,
        lambda_pek: s.lambda_pek,
        kinetic: s.kinetic,
        phi_norm_sq: s.phi_norm_sq,
        grad_phi_norm_sq: s.grad_phi_norm_sq,
        m_lp: s.m_lp,
        lambda_gauss: s.lambda_gauss,
        iterations: s.iterations,
        residual: s.residual,
        virial_residual: s.virial_residual,
        n_r: s.grid.len(),
        r_max: s.grid.nodes.last().copied().unwrap_or(0.0),
    }
}

#[derive(Serialize)]
struct HessianSummary {
    cutoff: f64,
    ell_max: usize,
    beta: f64,
    frak_m: usize,
    zero_mode_eigenvalue: f64,
    zero_mode_overlap: f64,
    tr_one_minus_h: f64,
    trace_ell_tail: f64,
    trace_k_tail: f64,
    /// `½Tr(√H − 1)`.
    zpe: f64,
    /// `Tr(√H − 1)`, the coefficient-1 convention.
    zpe_coefficient_one: f64,
    zpe_sectors: f64,
    zpe_ell_tail: f64,
    zpe_k_tail: f64,
    tail_bound: f64,
    grad_trace: f64,
    containment_violations: usize,
    modes_listed: usize,
}

fn hessian_summary(s: &polaron_core::hessian_spectrum::HessianSpectrum) -> HessianSummary {
    HessianSummary {
        cutoff: s.cutoff,
        ell_max: s.ell_max,
        beta: s.beta,
        frak_m: s.frak_m,
        zero_mode_eigenvalue: s.zero_mode.eigenvalue,
        zero_mode_overlap: s.zero_mode.overlap,
        tr_one_minus_h: s.tr_one_minus_h,
        trace_ell_tail: s.trace_ell_tail,
        trace_k_tail: s.trace_k_tail,
        zpe: s.zpe_full,
        zpe_coefficient_one: 2.0 * s.zpe_full,
        zpe_sectors: s.zpe_sectors,
        zpe_ell_tail: s.zpe_ell_tail,
        zpe_k_tail: s.zpe_k_tail,
        tail_bound: s.tail_bound,
        grad_trace: s.grad_trace,
        containment_violations: s.containment_violations,
        modes_listed: s.modes.len(),
    }
}
