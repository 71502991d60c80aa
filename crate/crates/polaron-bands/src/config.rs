//! Run configuration: a JSON document with four sections, every field
//! optional and unknown keys rejected.

use std::path::{Path, PathBuf};

use polaron_core::band_calculator::{CountCriterion, MomentumGridSpec};
use polaron_core::hessian_spectrum::HessianConfig;
use polaron_core::pekar_solver::PekarConfig;
use polaron_core::trial_kernels::TrialConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Grids and tolerances of the numerical stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    /// Radial nodes of the Pekar solve.
    pub n_r: usize,
    pub r_max: f64,
    pub max_iter: usize,
    /// Momentum nodes per sector.
    pub n_k: usize,
    /// Cutoff standing in for `K = ∞`.
    pub k_max_proxy: f64,
    pub k_scale: f64,
    pub ell_max: usize,
    pub ell_cap: usize,
    pub ell_step: usize,
    pub kh_max: f64,
    pub momentum_tail: bool,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub energy: f64,
    pub state: f64,
    pub self_consistency: f64,
    pub lambda_edge: f64,
    pub tail_rel: f64,
    pub containment: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        let p = PekarConfig::default();
        let h = HessianConfig::default();
        Numerics {
            n_r: p.n_r,
            r_max: p.r_max,
            max_iter: p.max_iter,
            n_k: h.n_k,
            k_max_proxy: h.k_max_proxy,
            k_scale: h.k_scale,
            ell_max: h.ell_max,
            ell_cap: h.ell_cap,
            ell_step: h.ell_step,
            kh_max: h.kh_max,
            momentum_tail: h.momentum_tail,
            tolerances: Tolerances::default(),
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        let p = PekarConfig::default();
        let h = HessianConfig::default();
        Tolerances {
            energy: p.tol_energy,
            state: p.tol_state,
            self_consistency: h.self_consistency_tol,
            lambda_edge: h.lambda_edge_tol,
            tail_rel: h.tail_rel_tol,
            containment: h.containment_tol,
        }
    }
}

impl Numerics {
    pub fn pekar(&self) -> PekarConfig {
        PekarConfig {
            n_r: self.n_r,
            r_max: self.r_max,
            tol_energy: self.tolerances.energy,
            tol_state: self.tolerances.state,
            max_iter: self.max_iter,
        }
    }

    pub fn hessian(&self) -> HessianConfig {
        HessianConfig {
            n_k: self.n_k,
            k_max_proxy: self.k_max_proxy,
            k_scale: self.k_scale,
            ell_max: self.ell_max,
            ell_cap: self.ell_cap,
            ell_step: self.ell_step,
            kh_max: self.kh_max,
            lambda_edge_tol: self.tolerances.lambda_edge,
            tail_rel_tol: self.tolerances.tail_rel,
            containment_tol: self.tolerances.containment,
            momentum_tail: self.momentum_tail,
            self_consistency_tol: self.tolerances.self_consistency,
        }
    }
}

/// Couplings, momenta and counting options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Physics {
    /// Cutoffs of the scaling study; the last one is the reference.
    #[serde(rename = "K_list")]
    pub k_list: Vec<f64>,
    /// Sectors `0..=scaling_ell_max` of the scaling study.
    pub scaling_ell_max: usize,
    pub alpha_list: Vec<f64>,
    /// Absolute momenta; exclusive with `p_over_pc_list`.
    pub p_list: Option<Vec<f64>>,
    /// Momenta as fractions of `P_c(α)`.
    pub p_over_pc_list: Option<Vec<f64>>,
    pub n_bands: usize,
    /// Ladder entries computed (the ground level included).
    pub ladder_size: usize,
    pub delta: f64,
    pub eta: f64,
    pub c_err: f64,
    /// Rule used for the reported count in the verification.
    pub count_criterion: CountCriterion,
    /// Momentum samples per band curve in the figure data.
    pub figure_points: usize,
    /// Figure momenta run up to `figure_p_max_over_pc·P_c`.
    pub figure_p_max_over_pc: f64,
}

pub const DEFAULT_P_OVER_PC: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

impl Default for Physics {
    fn default() -> Self {
        Physics {
            k_list: vec![10.0, 20.0, 40.0, 80.0],
            scaling_ell_max: 8,
            alpha_list: vec![5.0, 10.0, 20.0, 40.0, 80.0],
            p_list: None,
            p_over_pc_list: None,
            n_bands: 4,
            ladder_size: 64,
            delta: 0.0,
            eta: 1.0,
            c_err: 0.0,
            count_criterion: CountCriterion::Ladder,
            figure_points: 41,
            figure_p_max_over_pc: 1.25,
        }
    }
}

impl Physics {
    pub fn momenta(&self) -> MomentumGridSpec {
        match (&self.p_list, &self.p_over_pc_list) {
            (Some(p), _) => MomentumGridSpec::Absolute(p.clone()),
            (None, Some(f)) => MomentumGridSpec::FractionOfCritical(f.clone()),
            (None, None) => MomentumGridSpec::FractionOfCritical(DEFAULT_P_OVER_PC.to_vec()),
        }
    }
}

/// Checks of the `verify` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Seeded random instances of the ladder cross-check.
    pub ladder_instances: usize,
    /// Recompute the `ℓ = 1` sector on doubled grids.
    pub zero_mode_refinement: bool,
    /// Run the cutoff scaling study over `K_list`.
    pub cutoff_scaling: bool,
    /// Run the trial-kernel suite.
    pub trial_kernels: bool,
    /// Couplings of the counting-divergence check.
    pub count_alphas: Vec<f64>,
    /// Required growth `count(α_max) − count(α_min)`.
    pub count_growth: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            ladder_instances: 100,
            zero_mode_refinement: true,
            cutoff_scaling: true,
            trial_kernels: true,
            count_alphas: vec![5.0, 10.0, 20.0, 40.0, 80.0],
            count_growth: 3,
        }
    }
}

/// Execution settings; only `seed` influences results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Run {
    pub out_dir: PathBuf,
    pub cache_dir: Option<PathBuf>,
    pub format: String,
    pub thread_count: Option<usize>,
    pub seed: u64,
}

impl Default for Run {
    fn default() -> Self {
        Run {
            out_dir: PathBuf::from("out"),
            cache_dir: None,
            format: "csv".into(),
            thread_count: None,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub numerics: Numerics,
    pub physics: Physics,
    pub trial: TrialConfig,
    pub verify: VerifyConfig,
    pub run: Run,
}

/// The result-determining part of a [`Config`].
#[derive(Serialize)]
struct Canonical<'a> {
    numerics: &'a Numerics,
    physics: &'a Physics,
    trial: &'a TrialConfig,
    verify: &'a VerifyConfig,
    seed: u64,
}

/// Hex SHA-256 of the compact JSON serialization of `value`.
pub fn content_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config types serialize");
    let digest = Sha256::digest(&bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn invalid(field: &str, reason: impl Into<String>) -> CliError {
    CliError::Config(format!("invalid `{field}`: {}", reason.into()))
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(
            field,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

fn ascending(field: &str, v: &[f64], min: f64) -> Result<(), CliError> {
    if v.is_empty() {
        return Err(invalid(field, "must not be empty"));
    }
    if let Some(x) = v.iter().find(|x| !(x.is_finite() && **x >= min)) {
        return Err(invalid(
            field,
            format!("entries must be finite and ≥ {min}, got {x}"),
        ));
    }
    if v.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid(field, "must be strictly ascending"));
    }
    Ok(())
}

impl Config {
    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Config =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let n = &self.numerics;
        for (field, v) in [
            ("numerics.n_r", n.n_r),
            ("numerics.max_iter", n.max_iter),
            ("numerics.n_k", n.n_k),
            ("numerics.ell_cap", n.ell_cap),
            ("numerics.ell_step", n.ell_step),
        ] {
            if v == 0 {
                return Err(invalid(field, "must be positive"));
            }
        }
        for (field, v) in [
            ("numerics.r_max", n.r_max),
            ("numerics.k_max_proxy", n.k_max_proxy),
            ("numerics.k_scale", n.k_scale),
            ("numerics.kh_max", n.kh_max),
            ("numerics.tolerances.energy", n.tolerances.energy),
            ("numerics.tolerances.state", n.tolerances.state),
            (
                "numerics.tolerances.self_consistency",
                n.tolerances.self_consistency,
            ),
            ("numerics.tolerances.lambda_edge", n.tolerances.lambda_edge),
            ("numerics.tolerances.tail_rel", n.tolerances.tail_rel),
            ("numerics.tolerances.containment", n.tolerances.containment),
        ] {
            positive(field, v)?;
        }
        let core = |e: polaron_core::PolaronError| CliError::Config(format!("numerics: {e}"));
        n.pekar().validate().map_err(core)?;
        n.hessian().validate().map_err(core)?;

        let p = &self.physics;
        ascending("physics.K_list", &p.k_list, f64::MIN_POSITIVE)?;
        if p.k_list.len() < 3 {
            return Err(invalid("physics.K_list", "needs at least three cutoffs"));
        }
        if p.scaling_ell_max < 2 {
            return Err(invalid("physics.scaling_ell_max", "must be at least 2"));
        }
        ascending("physics.alpha_list", &p.alpha_list, 1.0)?;
        match (&p.p_list, &p.p_over_pc_list) {
            (Some(_), Some(_)) => {
                return Err(invalid(
                    "physics.p_list",
                    "give either p_list or p_over_pc_list, not both",
                ))
            }
            (Some(v), None) => ascending("physics.p_list", v, 0.0)?,
            (None, Some(v)) => ascending("physics.p_over_pc_list", v, 0.0)?,
            (None, None) => {}
        }
        for (field, v) in [
            ("physics.n_bands", p.n_bands),
            ("physics.ladder_size", p.ladder_size),
        ] {
            if v == 0 {
                return Err(invalid(field, "must be positive"));
            }
        }
        if p.n_bands > p.ladder_size {
            return Err(invalid("physics.n_bands", "must not exceed ladder_size"));
        }
        if p.figure_points < 3 {
            return Err(invalid("physics.figure_points", "must be at least 3"));
        }
        positive("physics.figure_p_max_over_pc", p.figure_p_max_over_pc)?;
        if !(p.delta >= 0.0 && p.delta.is_finite()) {
            return Err(invalid("physics.delta", "must be finite and nonnegative"));
        }
        positive("physics.eta", p.eta)?;
        if !(p.c_err >= 0.0 && p.c_err.is_finite()) {
            return Err(invalid("physics.c_err", "must be finite and nonnegative"));
        }

        self.trial
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;

        let v = &self.verify;
        if v.ladder_instances == 0 {
            return Err(invalid("verify.ladder_instances", "must be positive"));
        }
        ascending("verify.count_alphas", &v.count_alphas, 1.0)?;

        if self.run.format != "csv" {
            return Err(invalid(
                "run.format",
                format!("only \"csv\" is supported, got {:?}", self.run.format),
            ));
        }
        if self.run.thread_count == Some(0) {
            return Err(invalid("run.thread_count", "must be positive"));
        }
        Ok(())
    }

    /// Hash of everything that determines results (not paths or threads).
    pub fn hash(&self) -> String {
        content_hash(&Canonical {
            numerics: &self.numerics,
            physics: &self.physics,
            trial: &self.trial,
            verify: &self.verify,
            seed: self.run.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_fills_defaults() {
        let c = Config::from_json(r#"{"physics":{"alpha_list":[10]}}"#).unwrap();
        assert_eq!(c.physics.alpha_list, vec![10.0]);
        assert_eq!(c.numerics, Numerics::default());
        assert_eq!(c.numerics.n_k, 200);
        assert_eq!(c.numerics.k_max_proxy, 50.0);
        assert_eq!(c.run.format, "csv");
    }

    #[test]
    fn descending_alphas_rejected() {
        let e = Config::from_json(r#"{"physics":{"alpha_list":[20,10]}}"#).unwrap_err();
        assert!(e.to_string().contains("alpha_list"), "{e}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn unknown_key_named() {
        let e = Config::from_json(r#"{"physics":{"alpha_lst":[10]}}"#).unwrap_err();
        assert!(e.to_string().contains("alpha_lst"), "{e}");
        let e = Config::from_json(r#"{"numerics":{"tolerances":{"bogus":1}}}"#).unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
    }

    #[test]
    fn both_momentum_lists_rejected() {
        let e =
            Config::from_json(r#"{"physics":{"p_list":[0],"p_over_pc_list":[0]}}"#).unwrap_err();
        assert!(e.to_string().contains("p_list"));
    }

    #[test]
    fn hash_ignores_execution_settings() {
        let a = Config::default();
        let mut b = a.clone();
        b.run.thread_count = Some(8);
        b.run.out_dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.physics.c_err = 0.5;
        assert_ne!(a.hash(), b.hash());
    }
}
