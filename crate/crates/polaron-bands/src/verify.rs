//! The `verify` subcommand: numerical self-checks of every stage against
//! fixed tolerances.

use std::f64::consts::PI;

use polaron_core::band_calculator::{
    band_upper, count_bound_states, critical_momentum, sweep, BandInputs, CountCriterion, SweepSpec,
};
use polaron_core::bogoliubov_ladder::{brute_force_ladder, enumerate_ladder, mode_energies};
use polaron_core::hessian_spectrum::{
    bogoliubov_blocks, cutoff_scaling_study, prepare_context, sector_spectrum, HessianConfig,
};
use polaron_core::pekar_solver::{solve_pekar, PekarConfig};
use polaron_core::trial_kernels::verify_trial_lemmas;
use polaron_core::Exec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::emit::{Provenance, Table};
use crate::error::CliError;
use crate::pipeline::Pipeline;
use crate::tables::bands_table;

/// Gaussian-trial upper bound on `e_pek`.
pub const GAUSSIAN_BOUND: f64 = -1.0 / (48.0 * PI * PI * PI);

pub const PEKAR_RESIDUAL_TOL: f64 = 1e-5;
pub const PEKAR_GRID_REL_TOL: f64 = 1e-6;
pub const ZERO_MODE_TOL: f64 = 5e-3;
pub const ZERO_MODE_REFINEMENT_FACTOR: f64 = 2.0;
pub const CONTAINMENT_TOL: f64 = 1e-8;
pub const SLOPE_RANGE: (f64, f64) = (-1.2, -0.3);
pub const GRAD_EXPONENT_MAX: f64 = 1.15;
pub const SYMPLECTIC_TOL: f64 = 1e-10;
pub const BAND_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    /// Group number of the check.
    pub group: u32,
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: String,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn failures(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.clone())
            .collect()
    }
}

struct Checks(Vec<Check>);

impl Checks {
    fn add(
        &mut self,
        group: u32,
        name: &str,
        passed: bool,
        value: f64,
        bound: impl Into<String>,
        detail: impl Into<String>,
    ) {
        self.0.push(Check {
            group,
            name: name.into(),
            passed,
            value,
            bound: bound.into(),
            detail: detail.into(),
        });
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Random ascending energies in `[0.1, 0.95)`, pairwise distinct.
fn random_energies(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = rng.gen_range(3..=10);
    let mut e: Vec<f64> = Vec::with_capacity(n);
    while e.len() < n {
        let x = rng.gen_range(0.1..0.95);
        if e.iter().all(|y| (x - y).abs() > 1e-9) {
            e.push(x);
        }
    }
    e.sort_by(f64::total_cmp);
    e
}

pub fn run_verification(p: &mut Pipeline, prov: &Provenance) -> Result<VerifyReport, CliError> {
    let cfg = p.cfg;
    let exec = p.exec;
    let mut c = Checks(Vec::new());

    // Pekar minimizer.
    let sol = p.pekar()?.clone();
    c.add(
        1,
        "pekar_gaussian_bound",
        sol.e_pek <= GAUSSIAN_BOUND,
        sol.e_pek,
        format!("<= {GAUSSIAN_BOUND:e}"),
        "",
    );
    c.add(
        1,
        "pekar_virial",
        sol.virial_residual < PEKAR_RESIDUAL_TOL,
        sol.virial_residual,
        "< 1e-5",
        "",
    );
    c.add(
        1,
        "pekar_self_consistency",
        sol.residual < PEKAR_RESIDUAL_TOL,
        sol.residual,
        "< 1e-5",
        "",
    );
    let half = PekarConfig {
        n_r: cfg.numerics.n_r / 2,
        ..cfg.numerics.pekar()
    };
    let coarse = solve_pekar(&half)?;
    let d = (coarse.e_pek - sol.e_pek).abs() / sol.e_pek.abs();
    c.add(
        1,
        "pekar_grid_convergence",
        d < PEKAR_GRID_REL_TOL,
        d,
        "< 1e-6",
        format!("n_r = {} vs {}", half.n_r, cfg.numerics.n_r),
    );

    // Hessian spectrum.
    let spec = p.spectrum()?.clone();
    let raw = spec.zero_mode.eigenvalue;
    c.add(
        2,
        "zero_mode_magnitude",
        raw.abs() < ZERO_MODE_TOL,
        raw.abs(),
        "< 5e-3",
        "",
    );
    if cfg.verify.zero_mode_refinement {
        let base = cfg.numerics.pekar();
        let hcfg = cfg.numerics.hessian();
        let fine_base = PekarConfig {
            n_r: 2 * base.n_r,
            ..base
        };
        let fine = HessianConfig {
            n_k: 2 * hcfg.n_k,
            kh_max: hcfg.kh_max / 2.0,
            ..hcfg.clone()
        };
        let ctx = prepare_context(&fine_base, &fine, hcfg.k_max_proxy)?;
        let s1 = sector_spectrum(&ctx, 1, hcfg.containment_tol)?;
        let fine_raw = s1.zero_mode.map(|z| z.eigenvalue).unwrap_or(f64::NAN);
        let ratio = raw.abs() / fine_raw.abs();
        c.add(
            2,
            "zero_mode_refinement",
            ratio >= ZERO_MODE_REFINEMENT_FACTOR,
            ratio,
            ">= 2",
            format!("{raw:e} -> {fine_raw:e} with n_k and n_r doubled"),
        );
    }

    let outside = |l: f64| !(-CONTAINMENT_TOL..=1.0 + CONTAINMENT_TOL).contains(&l);
    let mut violations = spec
        .sectors
        .iter()
        .flat_map(|s| s.eigenvalues.iter().copied().chain([s.raw_min, s.raw_max]))
        .filter(|&l| outside(l))
        .count();
    let mut total: usize = spec.sectors.iter().map(|s| s.eigenvalues.len()).sum();

    if cfg.verify.cutoff_scaling {
        let study = cutoff_scaling_study(
            &cfg.numerics.pekar(),
            &cfg.numerics.hessian(),
            &cfg.physics.k_list,
            cfg.physics.scaling_ell_max,
            exec,
        )?;
        violations += study.containment_violations;
        total += study.tracked.len();
        for (i, m) in study.tracked.iter().enumerate() {
            let s = m.slope.unwrap_or(f64::NAN);
            c.add(
                4,
                &format!("cutoff_slope_mode_{i}"),
                s >= SLOPE_RANGE.0 && s <= SLOPE_RANGE.1,
                s,
                "in [-1.2, -0.3]",
                format!(
                    "ell = {}, index = {}, |lambda_K - lambda_ref| = {:?}",
                    m.ell, m.index, m.differences
                ),
            );
        }
        c.add(
            4,
            "grad_trace_exponent",
            study.grad_exponent <= GRAD_EXPONENT_MAX,
            study.grad_exponent,
            "<= 1.15",
            "",
        );
    }
    c.add(
        3,
        "spectrum_containment",
        violations == 0,
        violations as f64,
        "= 0",
        format!("eigenvalues outside [-1e-8, 1 + 1e-8] among {total} checked"),
    );

    // Ladder.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.run.seed);
    let mut mismatches = 0usize;
    for _ in 0..cfg.verify.ladder_instances {
        let e = random_energies(&mut rng);
        let brute = brute_force_ladder(&e, 1.0, usize::MAX)?;
        let fast = enumerate_ladder(&e, 1.0, brute.len() + 1)?;
        if fast.entries != brute.entries {
            mismatches += 1;
        }
    }
    c.add(
        5,
        "ladder_matches_brute_force",
        mismatches == 0,
        mismatches as f64,
        "= 0",
        format!("{} seeded instances", cfg.verify.ladder_instances),
    );
    let inputs = p.band_inputs()?;
    let ladder = p.ladder()?;
    let single = mode_energies(&spec, ladder.len());
    let termwise = ladder
        .entries
        .iter()
        .skip(1)
        .zip(&single)
        .filter(|(l, s)| l.energy > **s)
        .count();
    c.add(
        5,
        "ladder_below_single_modes",
        termwise == 0,
        termwise as f64,
        "= 0",
        "",
    );
    let longest = ladder
        .entries
        .iter()
        .map(|e| e.modes.len())
        .max()
        .unwrap_or(0);
    c.add(
        5,
        "ladder_multiset_length",
        longest <= spec.frak_m,
        longest as f64,
        format!("<= frak_m = {}", spec.frak_m),
        "",
    );

    let blocks = bogoliubov_blocks(&spec, exec)?;
    c.add(
        6,
        "symplectic_identity",
        blocks.max_defect < SYMPLECTIC_TOL,
        blocks.max_defect,
        "< 1e-10",
        "",
    );

    counting_checks(
        &mut c,
        &inputs,
        &cfg.verify.count_alphas,
        cfg.physics.count_criterion,
        cfg.verify.count_growth,
    )?;
    band_checks(
        &mut c,
        &inputs,
        &cfg.physics.alpha_list,
        cfg.physics.n_bands,
    )?;

    if cfg.verify.trial_kernels {
        let report = verify_trial_lemmas(&sol, &spec, &cfg.trial, exec)?;
        for claim in &report.claims {
            c.add(
                9,
                &format!("trial_{}", claim.name),
                claim.passed,
                claim.value,
                format!("{:e}", claim.bound),
                "",
            );
        }
    }

    let spec_sweep = SweepSpec {
        alphas: cfg.physics.alpha_list.clone(),
        momenta: cfg.physics.momenta(),
        n_bands: cfg.physics.n_bands,
        c_err: cfg.physics.c_err,
    };
    let render = |e: Exec| -> Result<String, CliError> {
        let d = sweep(&inputs, &spec_sweep, e)?;
        Ok(bands_table(prov, &d).render())
    };
    let same = render(Exec::Sequential)? == render(Exec::Parallel)?;
    c.add(
        10,
        "sweep_policy_independence",
        same,
        f64::from(u8::from(same)),
        "= 1",
        "",
    );

    let passed = c.0.iter().all(|x| x.passed);
    Ok(VerifyReport {
        checks: c.0,
        passed,
    })
}

fn counting_checks(
    c: &mut Checks,
    inputs: &BandInputs,
    alphas: &[f64],
    criterion: CountCriterion,
    growth: usize,
) -> Result<(), CliError> {
    let counts: Vec<usize> = alphas
        .iter()
        .map(|&a| count_bound_states(inputs, a, 0.0, criterion, 0.0))
        .collect::<Result<_, _>>()?;
    let monotone = counts.windows(2).all(|w| w[0] <= w[1]);
    c.add(
        7,
        "count_nondecreasing",
        monotone,
        f64::from(u8::from(monotone)),
        "= 1",
        format!("{counts:?}"),
    );
    let (first, last) = (counts[0], counts[counts.len() - 1]);
    c.add(
        7,
        "count_divergence",
        last >= first + growth,
        last as f64 - first as f64,
        format!(">= {growth}"),
        format!("counts {counts:?} over alpha {alphas:?}"),
    );
    let mut at_pc = Vec::new();
    for &a in alphas {
        let pc = critical_momentum(inputs.m_lp, a);
        at_pc.push(count_bound_states(
            inputs,
            a,
            pc,
            CountCriterion::Ladder,
            0.0,
        )?);
        at_pc.push(count_bound_states(
            inputs,
            a,
            pc,
            CountCriterion::SqrtLambda,
            0.0,
        )?);
    }
    let max = at_pc.iter().copied().max().unwrap_or(0);
    c.add(
        7,
        "count_zero_at_critical_momentum",
        max == 0,
        max as f64,
        "= 0",
        "",
    );
    Ok(())
}

fn band_checks(
    c: &mut Checks,
    inputs: &BandInputs,
    alphas: &[f64],
    n_bands: usize,
) -> Result<(), CliError> {
    let mut kinetic_err = 0.0f64;
    let mut rest_err = 0.0f64;
    for &a in alphas {
        let pc = critical_momentum(inputs.m_lp, a);
        for n in 0..n_bands {
            let b0 = band_upper(inputs, n, a, 0.0)?;
            for f in [0.1, 0.5, 1.0, 2.0] {
                let p = f * pc;
                let lhs = band_upper(inputs, n, a, p)? - b0;
                let rhs = p * p / (2.0 * a.powi(4) * inputs.m_lp);
                kinetic_err = kinetic_err.max(rel(lhs, rhs));
            }
            let lhs = a * a * (b0 - inputs.e_pek);
            rest_err = rest_err.max(rel(lhs, inputs.zpe + inputs.ladder[n]));
        }
    }
    c.add(
        8,
        "band_kinetic_term",
        kinetic_err < BAND_REL_TOL,
        kinetic_err,
        "< 1e-12",
        "",
    );
    c.add(
        8,
        "band_rest_energy",
        rest_err < BAND_REL_TOL,
        rest_err,
        "< 1e-12",
        "",
    );
    Ok(())
}

/// Table form of the report (one row per check).
pub fn report_table(prov: &Provenance, r: &VerifyReport) -> Table {
    let mut t = Table::new(
        "verify.csv",
        prov,
        &["group", "name", "passed", "value", "bound"],
    );
    for ch in &r.checks {
        t.row(vec![
            ch.group.to_string(),
            ch.name.clone(),
            ch.passed.to_string(),
            crate::emit::fmt_e(ch.value),
            ch.bound.replace(',', ";"),
        ]);
    }
    t
}
