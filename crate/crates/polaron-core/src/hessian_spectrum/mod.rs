//! The field Hessian `H_K = 1 − 4T_K` in partial-wave momentum sectors.
//!
//! For a radial electron state the operator `T_K` commutes with rotations
//! of the field, so it splits into sectors labelled by the field angular
//! momentum `ℓ`, each `(2ℓ+1)`-fold degenerate. On sector `ℓ` the kernel
//! with respect to the measure `k² dk` on `(0, K]` is
//!
//! ```text
//! (4T̃)_ℓ(k, k') = (8/π) ρ_ℓ(k, k') / (k k'),
//! ρ_ℓ(k, k')   = ⟨ψ j_ℓ(k·), R_ℓ ψ j_ℓ(k'·)⟩,
//! ```
//!
//! where `R_ℓ` is the reduced resolvent of `h_pek = −Δ + V^φ − λ_pek` in
//! electron angular momentum `ℓ`. The kernel is discretized by the
//! Nyström method on a [`MomentumGrid`]; symmetrizing with the square
//! roots of the `k²` weights gives a symmetric matrix whose eigenvectors
//! are orthonormal in the weighted measure.
//!
//! The translation zero modes `∂_iφ` live in `ℓ = 1` with radial profile
//! `k φ̂(k) ∝ ρ̂(k)`. That direction is removed by a Householder
//! deflation; the smallest eigenvalue before deflation is a diagnostic of
//! the whole discretization (it must vanish in the continuum).

mod resolvent;
mod scaling;
pub(crate) mod tails;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{PolaronError, Result};
use crate::exec::Exec;
use crate::pekar_solver::{ElectronState, PekarConfig};
use crate::radial_numerics::{dot, spherical_bessel_all, sym_eig, DenseMatrix, MomentumGrid};

pub use resolvent::{reduced_resolvent_apply, ReducedResolvent};
pub use scaling::{cutoff_scaling_study, log_log_slope, ScalingReport, TrackedMode};
pub use tails::momentum_tail_trace;

use tails::{ElectronDensity, FreeAsymptotics};

/// Numerical knobs of the Hessian stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HessianConfig {
    /// Momentum nodes per sector (multiple of 8).
    pub n_k: usize,
    /// Momentum cutoff used as the `K = ∞` proxy.
    pub k_max_proxy: f64,
    /// Crossover scale of the momentum map.
    pub k_scale: f64,
    /// Initial highest sector.
    pub ell_max: usize,
    /// Hard limit for the automatic sector extension.
    pub ell_cap: usize,
    /// Sectors added per extension step.
    pub ell_step: usize,
    /// Electron grid spacing times cutoff, `h·K ≤ kh_max`.
    pub kh_max: f64,
    /// Modes with `λ ≥ 1 − lambda_edge_tol` are not listed.
    pub lambda_edge_tol: f64,
    /// Target for `tail_bound / |zpe_sum|`.
    pub tail_rel_tol: f64,
    /// Allowed excursion of eigenvalues outside `[0, 1]`.
    pub containment_tol: f64,
    /// Add the asymptotic momentum tail beyond the cutoff to the traces.
    pub momentum_tail: bool,
    /// Self-consistency tolerance (`L²` state change) of the electron
    /// solve on the Hessian grid; the zero mode is exact only at
    /// self-consistency.
    pub self_consistency_tol: f64,
}

impl Default for HessianConfig {
    fn default() -> Self {
        HessianConfig {
            n_k: 200,
            k_max_proxy: 50.0,
            k_scale: 0.02,
            ell_max: 8,
            ell_cap: 64,
            ell_step: 8,
            kh_max: 1.0,
            lambda_edge_tol: 1e-9,
            tail_rel_tol: 1e-4,
            containment_tol: 1e-8,
            momentum_tail: true,
            self_consistency_tol: 1e-10,
        }
    }
}

impl HessianConfig {
    /// Checks ranges of all fields.
    pub fn validate(&self) -> Result<()> {
        if self.n_k < 8 || self.n_k % 8 != 0 {
            return Err(PolaronError::config(
                "n_k",
                "must be a positive multiple of 8",
            ));
        }
        if !(self.k_max_proxy > 0.0 && self.k_max_proxy.is_finite()) {
            return Err(PolaronError::config("k_max_proxy", "must be positive"));
        }
        if !(self.k_scale > 0.0 && self.k_scale < self.k_max_proxy) {
            return Err(PolaronError::config(
                "k_scale",
                "must lie in (0, k_max_proxy)",
            ));
        }
        if self.ell_cap > crate::radial_numerics::MAX_ORDER || self.ell_max > self.ell_cap {
            return Err(PolaronError::config(
                "ell_cap",
                format!(
                    "need ell_max ≤ ell_cap ≤ {}",
                    crate::radial_numerics::MAX_ORDER
                ),
            ));
        }
        if self.ell_max < 2 {
            return Err(PolaronError::config("ell_max", "must be at least 2"));
        }
        if self.ell_step == 0 {
            return Err(PolaronError::config("ell_step", "must be positive"));
        }
        if !(self.kh_max > 0.0) {
            return Err(PolaronError::config("kh_max", "must be positive"));
        }
        if !(self.lambda_edge_tol > 0.0 && self.lambda_edge_tol < 1.0) {
            return Err(PolaronError::config(
                "lambda_edge_tol",
                "must lie in (0, 1)",
            ));
        }
        if !(self.tail_rel_tol > 0.0) {
            return Err(PolaronError::config("tail_rel_tol", "must be positive"));
        }
        if !(self.self_consistency_tol > 0.0) {
            return Err(PolaronError::config(
                "self_consistency_tol",
                "must be positive",
            ));
        }
        if !(self.containment_tol >= 0.0) {
            return Err(PolaronError::config(
                "containment_tol",
                "must be nonnegative",
            ));
        }
        Ok(())
    }
}

/// Electron solve for a Hessian at cutoff `K`: the base grid refined by an
/// integer factor until `h·K ≤ kh_max`, so that `j_ℓ(kr)` is resolved at
/// every momentum node, with tightened self-consistency.
pub fn electron_config_for(base: &PekarConfig, hcfg: &HessianConfig, cutoff: f64) -> PekarConfig {
    let h = base.r_max / base.n_r as f64;
    let factor = ((h * cutoff / hcfg.kh_max).ceil() as usize).max(1);
    PekarConfig {
        n_r: base.n_r * factor,
        tol_state: base.tol_state.min(hcfg.self_consistency_tol),
        tol_energy: base.tol_energy.min(1e-2 * hcfg.self_consistency_tol),
        ..base.clone()
    }
}

/// Solves the electron problem on the Hessian grid for cutoff `K` and
/// prepares the context.
pub fn prepare_context(
    base: &PekarConfig,
    hcfg: &HessianConfig,
    cutoff: f64,
) -> Result<HessianContext> {
    hcfg.validate()?;
    let electron =
        crate::pekar_solver::solve_electron_state(&electron_config_for(base, hcfg, cutoff))?;
    let kgrid = crate::radial_numerics::make_momentum_grid(hcfg.n_k, cutoff, hcfg.k_scale)?;
    HessianContext::new(electron, kgrid)
}

/// Immutable inputs shared by all sectors of one cutoff.
#[derive(Debug, Clone)]
pub struct HessianContext {
    /// Converged electron state on the grid of the Hessian.
    pub electron: ElectronState,
    /// Momentum grid of the sectors.
    pub kgrid: MomentumGrid,
    /// Discrete ground state `u` of `−d²/dr² + V` (`h Σ u² = 1`).
    pub(crate) u: Vec<f64>,
    /// Its eigenvalue (the discrete `λ_pek`).
    pub(crate) lambda: f64,
    /// Normalized zero-mode direction `√W ρ̂` on the momentum grid.
    pub(crate) zero_mode: Vec<f64>,
    /// `ρ̂(k)` at the momentum nodes.
    pub(crate) rho_hat: Vec<f64>,
}

impl HessianContext {
    /// Prepares the shared data. `electron` should live on a grid with
    /// `h·K ≲ 1` (see [`electron_config_for`]).
    pub fn new(electron: ElectronState, kgrid: MomentumGrid) -> Result<Self> {
        let h = electron.grid.spacing();
        let op = crate::radial_numerics::radial_operator(h, 0, &electron.potential);
        let (lambda, u) = crate::pekar_solver::lowest_eigenpair(&op, h, 200)?;
        let rho_hat: Vec<f64> = kgrid
            .nodes
            .iter()
            .map(|&k| {
                u.iter()
                    .zip(&electron.grid.nodes)
                    .map(|(u, r)| {
                        let x = k * r;
                        u * u
                            * if x < 1e-6 {
                                1.0 - x * x / 6.0
                            } else {
                                x.sin() / x
                            }
                    })
                    .sum::<f64>()
                    * h
            })
            .collect();
        let mut zero_mode: Vec<f64> = rho_hat
            .iter()
            .zip(&kgrid.weights)
            .map(|(r, w)| w.sqrt() * r)
            .collect();
        let nz = zero_mode.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(nz > 0.0) {
            return Err(PolaronError::Numerical(
                "density transform vanishes on the momentum grid".into(),
            ));
        }
        zero_mode.iter_mut().for_each(|x| *x /= nz);
        Ok(HessianContext {
            electron,
            kgrid,
            u,
            lambda,
            zero_mode,
            rho_hat,
        })
    }

    /// Cutoff `K` of the momentum grid.
    pub fn cutoff(&self) -> f64 {
        self.kgrid.cutoff
    }

    /// `ρ̂(k)` at the momentum nodes.
    pub fn density_transform(&self) -> &[f64] {
        &self.rho_hat
    }

    pub(crate) fn electron_density(&self) -> ElectronDensity<'_> {
        ElectronDensity {
            u: &self.u,
            r: &self.electron.grid.nodes,
            h: self.electron.grid.spacing(),
        }
    }
}

/// Zero-mode diagnostic of the `ℓ = 1` sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroModeDiagnostic {
    /// Smallest eigenvalue of `1 − 4T̃` before deflation.
    pub eigenvalue: f64,
    /// `|⟨v, z⟩|` of its eigenvector with the normalized `k φ̂(k)`.
    pub overlap: f64,
}

/// Spectrum of one partial-wave sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorSpectrum {
    /// Field angular momentum.
    pub ell: usize,
    /// Cutoff `K`.
    pub cutoff: f64,
    /// Ascending eigenvalues, clamped to `[0, 1]` (zero mode removed for `ℓ = 1`).
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors (rows) in the symmetrized coordinates `√W·c(k)`.
    pub eigenvectors: DenseMatrix,
    /// True iff the zero-mode direction was removed.
    pub deflated: bool,
    /// Smallest unclamped eigenvalue (before deflation).
    pub raw_min: f64,
    /// Largest unclamped eigenvalue.
    pub raw_max: f64,
    /// Eigenvalues outside `[−tol, 1 + tol]`.
    pub containment_violations: usize,
    /// `ℓ = 1` only.
    pub zero_mode: Option<ZeroModeDiagnostic>,
    /// `tr(4T̃_ℓ)` from the matrix diagonal (one block).
    pub trace_4t: f64,
    /// `tr(1 − H)_ℓ` from the undeflated eigenvalues (one block).
    pub trace_one_minus_h: f64,
    /// `∫k² (4T̃_ℓ)(k,k) k² dk` (one block).
    pub grad_trace: f64,
    /// `½Σ(√λ − 1)` over the listed eigenvalues (one block).
    pub zpe: f64,
    /// Symmetry defect of the assembled matrix before symmetrization.
    pub symmetry_defect: f64,
}

impl SectorSpectrum {
    /// Eigenvector `n` as a function of momentum, normalized in `k² dk`.
    pub fn eigenfunction(&self, n: usize, kgrid: &MomentumGrid) -> Vec<f64> {
        self.eigenvectors
            .row(n)
            .iter()
            .zip(&kgrid.weights)
            .map(|(v, w)| v / w.sqrt())
            .collect()
    }

    /// `‖∇𝔲‖² = ∫k² |𝔲(k)|² k² dk` of eigenvector `n`.
    pub fn gradient_norm_sq(&self, n: usize, kgrid: &MomentumGrid) -> f64 {
        self.eigenvectors
            .row(n)
            .iter()
            .zip(&kgrid.nodes)
            .map(|(v, k)| k * k * v * v)
            .sum()
    }
}

/// One entry of the merged mode list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    /// Eigenvalue `λ`.
    pub lambda: f64,
    /// Sector.
    pub ell: usize,
    /// Index inside the sector.
    pub index: usize,
}

/// Full spectrum of `H_K` with traces and zero-point energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianSpectrum {
    /// Cutoff `K`.
    pub cutoff: f64,
    /// Highest computed sector.
    pub ell_max: usize,
    /// Sectors `0..=ell_max`.
    pub sectors: Vec<SectorSpectrum>,
    /// Ascending modes below `1 − lambda_edge_tol`, each sector entry
    /// repeated `2ℓ+1` times; ties broken by `(ℓ, index)`.
    pub modes: Vec<Mode>,
    /// Smallest eigenvalue on the complement of the zero modes.
    pub beta: f64,
    /// `⌈1/√β⌉`.
    pub frak_m: usize,
    /// `Σ(2ℓ+1) tr(1 − H)_ℓ` over the computed sectors (eigenvalue route).
    pub tr_one_minus_h: f64,
    /// `Σ(2ℓ+1) tr(4T̃_ℓ)` over the computed sectors (diagonal route).
    pub tr_4t_diagonal: f64,
    /// Estimated trace of sectors `ℓ > ell_max`.
    pub trace_ell_tail: f64,
    /// Estimated trace of momenta beyond the cutoff (0 if disabled).
    pub trace_k_tail: f64,
    /// `½Σ(√λ − 1)` over the computed sectors.
    pub zpe_sectors: f64,
    /// Estimated contribution of sectors `ℓ > ell_max`.
    pub zpe_ell_tail: f64,
    /// Estimated contribution of momenta beyond the cutoff.
    pub zpe_k_tail: f64,
    /// `E₂ = zpe_sectors + zpe_ell_tail + zpe_k_tail`.
    pub zpe_sum: f64,
    /// `E₂ − 3/2`.
    pub zpe_full: f64,
    /// `Tr((−i∇)(1 − H_K)(−i∇))` including the sector tail.
    pub grad_trace: f64,
    /// Sector part of `grad_trace`.
    pub grad_trace_sectors: f64,
    /// Uncertainty of the sector-tail estimate of `zpe_sum`.
    pub tail_bound: f64,
    /// `ℓ = 1` zero-mode diagnostic.
    pub zero_mode: ZeroModeDiagnostic,
    /// Total number of eigenvalues outside the containment window.
    pub containment_violations: usize,
    /// Momentum grid of the sectors.
    pub kgrid: MomentumGrid,
    /// `ρ̂(k)` at the momentum nodes; the field is `φ̂(k) = (2π)^{-3/2} ρ̂(k)/k`.
    pub rho_hat: Vec<f64>,
}

impl HessianSpectrum {
    /// The first `count` entries of the mode list as eigenvalues.
    pub fn lowest_eigenvalues(&self, count: usize) -> Vec<f64> {
        self.modes.iter().take(count).map(|m| m.lambda).collect()
    }
}

/// Sector matrix with bookkeeping.
struct SectorMatrix {
    /// `S = I − M`, `M = √W (4T̃) √W`.
    s: DenseMatrix,
    symmetry_defect: f64,
    diag_4t: Vec<f64>,
}

fn build_sector_matrix(ctx: &HessianContext, ell: usize) -> Result<SectorMatrix> {
    let res = ReducedResolvent::for_context(ctx, ell)?;
    let grid = &ctx.electron.grid;
    let h = grid.spacing();
    let n = grid.len();
    let kg = &ctx.kgrid;
    let nk = kg.len();
    let norm = 1.0 / (4.0 * PI).sqrt();
    let mut a = vec![0.0; nk * n];
    let mut jb = vec![0.0; ell + 1];
    for (row, &k) in a.chunks_mut(n).zip(&kg.nodes) {
        for ((dst, r), u) in row.iter_mut().zip(&grid.nodes).zip(&ctx.u) {
            spherical_bessel_all(k * r, &mut jb);
            *dst = norm * u * jb[ell];
        }
    }
    let mut x = a.clone();
    for row in x.chunks_mut(n) {
        res.apply_in_place(row);
    }
    let mut rho = DenseMatrix::zeros(nk);
    for i in 0..nk {
        let ai = &a[i * n..(i + 1) * n];
        for j in 0..nk {
            let xj = &x[j * n..(j + 1) * n];
            *rho.get_mut(i, j) = h * dot(ai, xj);
        }
    }
    let c = 8.0 / PI;
    let sw: Vec<f64> = kg.weights.iter().map(|w| w.sqrt()).collect();
    let mut m = DenseMatrix::zeros(nk);
    for i in 0..nk {
        for j in 0..nk {
            *m.get_mut(i, j) = sw[i] * sw[j] * c * rho.get(i, j) / (kg.nodes[i] * kg.nodes[j]);
        }
    }
    let symmetry_defect = m.symmetry_defect() / m.max_abs().max(f64::MIN_POSITIVE);
    let mut s = DenseMatrix::identity(nk);
    let mut diag_4t = Vec::with_capacity(nk);
    for i in 0..nk {
        diag_4t.push(m.get(i, i));
        for j in 0..nk {
            let sym = 0.5 * (m.get(i, j) + m.get(j, i));
            *s.get_mut(i, j) -= sym;
        }
    }
    Ok(SectorMatrix {
        s,
        symmetry_defect,
        diag_4t,
    })
}

/// Nyström matrix of `1 − 4T̃_K` on sector `ℓ` (unprojected), symmetrized
/// with the square roots of the `k²` weights.
pub fn sector_kernel(ctx: &HessianContext, ell: usize) -> Result<DenseMatrix> {
    Ok(build_sector_matrix(ctx, ell)?.s)
}

/// Householder reflector `I − 2vvᵀ/(vᵀv)` mapping the unit vector `z` to
/// `∓e₀`.
fn householder(z: &[f64]) -> DenseMatrix {
    let n = z.len();
    let mut v = z.to_vec();
    v[0] += if z[0] >= 0.0 { 1.0 } else { -1.0 };
    let vv: f64 = v.iter().map(|x| x * x).sum();
    let mut hm = DenseMatrix::identity(n);
    for i in 0..n {
        for j in 0..n {
            *hm.get_mut(i, j) -= 2.0 * v[i] * v[j] / vv;
        }
    }
    hm
}

/// Eigendecomposition of sector `ℓ`; for `ℓ = 1` the zero-mode
/// direction is deflated first.
pub fn sector_spectrum(
    ctx: &HessianContext,
    ell: usize,
    containment_tol: f64,
) -> Result<SectorSpectrum> {
    let sm = build_sector_matrix(ctx, ell)?;
    let kg = &ctx.kgrid;
    let nk = kg.len();
    let full = sym_eig(&sm.s)?;
    let raw_min = full.values[0];
    let raw_max = full.values[nk - 1];
    let containment_violations = full
        .values
        .iter()
        .filter(|&&v| v < -containment_tol || v > 1.0 + containment_tol)
        .count();
    let trace_one_minus_h: f64 = full.values.iter().map(|v| 1.0 - v).sum();
    let trace_4t: f64 = sm.diag_4t.iter().sum();
    let grad_trace: f64 = sm
        .diag_4t
        .iter()
        .zip(&kg.nodes)
        .map(|(d, k)| d * k * k)
        .sum();

    let (values, vectors, zero_mode, deflated) = if ell == 1 {
        let z = &ctx.zero_mode;
        let overlap = full
            .vectors
            .row(0)
            .iter()
            .zip(z)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            .abs();
        let hm = householder(z);
        let b = hm.matmul(&sm.s).matmul(&hm);
        let m = nk - 1;
        let mut sub = DenseMatrix::zeros(m);
        for i in 0..m {
            for j in 0..m {
                *sub.get_mut(i, j) = 0.5 * (b.get(i + 1, j + 1) + b.get(j + 1, i + 1));
            }
        }
        let eig = sym_eig(&sub)?;
        // Embed (0, y) and map back with the reflector. The deflated
        // sector keeps nk − 1 vectors; pad the last row with zeros so the
        // matrix stays square.
        let mut vecs = DenseMatrix::zeros(nk);
        for r in 0..m {
            let y = eig.vectors.row(r);
            for i in 0..nk {
                let s: f64 = (0..m).map(|j| hm.get(i, j + 1) * y[j]).sum();
                *vecs.get_mut(r, i) = s;
            }
        }
        (
            eig.values,
            vecs,
            Some(ZeroModeDiagnostic {
                eigenvalue: raw_min,
                overlap,
            }),
            true,
        )
    } else {
        (full.values.clone(), full.vectors, None, false)
    };
    let eigenvalues: Vec<f64> = values.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    if let Some(bad) = eigenvalues.iter().position(|&v| v <= 0.0) {
        return Err(PolaronError::Numerical(format!(
            "sector {ell}: eigenvalue {} ≤ 0 outside the zero-mode space (index {bad})",
            values[bad]
        )));
    }
    let zpe = 0.5 * eigenvalues.iter().map(|v| v.sqrt() - 1.0).sum::<f64>();
    Ok(SectorSpectrum {
        ell,
        cutoff: kg.cutoff,
        eigenvalues,
        eigenvectors: vectors,
        deflated,
        raw_min,
        raw_max,
        containment_violations,
        zero_mode,
        trace_4t,
        trace_one_minus_h,
        grad_trace,
        zpe,
        symmetry_defect: sm.symmetry_defect,
    })
}

/// Sector-tail estimates calibrated on the last computed sector `L`.
#[derive(Debug, Clone, Copy)]
struct TailEstimate {
    zpe: f64,
    trace: f64,
    grad: f64,
}

/// Free-resolvent tail for `ℓ > L`, rescaled by the ratio of the exact
/// to the free value in sector `L` (for the zero-point energy the ratio
/// uses the exact `½Σ(√λ−1)` against `−¼·free trace`).
fn tail_estimate(ctx: &HessianContext, last: &SectorSpectrum) -> TailEstimate {
    let el = ctx.electron_density();
    let k = ctx.cutoff();
    let fa = FreeAsymptotics::new(last.ell);
    let free_sector = tails::free_sector_trace(&fa, &el, k);
    let free_tail = tails::free_tail_trace(&fa, &el, k);
    let free_sector_grad = tails::free_sector_grad_trace(&fa, &el, k);
    let free_tail_grad = tails::free_tail_grad_trace(&fa, &el, k);
    let ratio = |exact: f64, free: f64| if free > 0.0 { exact / free } else { 1.0 };
    let c_trace = ratio(last.trace_4t, free_sector);
    let c_zpe = ratio(-4.0 * last.zpe, free_sector);
    let c_grad = ratio(last.grad_trace, free_sector_grad);
    TailEstimate {
        zpe: -0.25 * c_zpe * free_tail,
        trace: c_trace * free_tail,
        grad: c_grad * free_tail_grad,
    }
}

fn weighted<F: Fn(&SectorSpectrum) -> f64>(sectors: &[SectorSpectrum], f: F) -> f64 {
    sectors.iter().map(|s| (2 * s.ell + 1) as f64 * f(s)).sum()
}

/// Combines computed sectors into the full spectrum.
///
/// Sectors `0..=ell_max` are computed first; while the tail uncertainty
/// exceeds `tail_rel_tol·|zpe_sum|`, further sectors are added up to
/// `ell_cap`. The uncertainty is `L/2` times the change of the
/// tail-corrected zero-point energy when the calibration sector moves
/// from `L − 1` to `L`.
pub fn assemble_spectrum(
    ctx: &HessianContext,
    cfg: &HessianConfig,
    exec: Exec,
) -> Result<HessianSpectrum> {
    cfg.validate()?;
    let first: Vec<usize> = (0..=cfg.ell_max).collect();
    let mut sectors = collect_sectors(ctx, &first, cfg.containment_tol, exec)?;
    loop {
        let spec = combine(ctx, cfg, &sectors)?;
        if spec.tail_bound < cfg.tail_rel_tol * spec.zpe_sum.abs() {
            return Ok(spec);
        }
        let top = sectors.len() - 1;
        if top >= cfg.ell_cap {
            return Err(PolaronError::Accuracy(format!(
                "sector tail not converged at ell_cap = {}: tail_bound {:.3e} vs target {:.3e}",
                cfg.ell_cap,
                spec.tail_bound,
                cfg.tail_rel_tol * spec.zpe_sum.abs()
            )));
        }
        let next: Vec<usize> = (top + 1..=(top + cfg.ell_step).min(cfg.ell_cap)).collect();
        sectors.extend(collect_sectors(ctx, &next, cfg.containment_tol, exec)?);
    }
}

/// Spectrum with a fixed set of sectors `0..=ell_max` (no extension).
pub fn assemble_fixed(
    ctx: &HessianContext,
    cfg: &HessianConfig,
    ell_max: usize,
    exec: Exec,
) -> Result<HessianSpectrum> {
    let ells: Vec<usize> = (0..=ell_max.max(2)).collect();
    let sectors = collect_sectors(ctx, &ells, cfg.containment_tol, exec)?;
    combine(ctx, cfg, &sectors)
}

fn collect_sectors(
    ctx: &HessianContext,
    ells: &[usize],
    tol: f64,
    exec: Exec,
) -> Result<Vec<SectorSpectrum>> {
    exec.map(ells, |&l| sector_spectrum(ctx, l, tol))
        .into_iter()
        .collect()
}

fn combine(
    ctx: &HessianContext,
    cfg: &HessianConfig,
    sectors: &[SectorSpectrum],
) -> Result<HessianSpectrum> {
    let top = sectors.len() - 1;
    let est = tail_estimate(ctx, &sectors[top]);
    let prev = tail_estimate(ctx, &sectors[top - 1]);
    let zpe_sectors = weighted(sectors, |s| s.zpe);
    let last = &sectors[top];
    let zpe_prev_total = zpe_sectors - (2 * top + 1) as f64 * last.zpe + prev.zpe;
    let zpe_total = zpe_sectors + est.zpe;
    // If the corrected remainder decays like L^{-p}, p ≥ 2, the step
    // from L − 1 to L is about p/L of it.
    let tail_bound = (zpe_total - zpe_prev_total).abs() * top as f64 / 2.0;

    let cutoff = ctx.cutoff();
    let kinetic = ctx.electron.kinetic;
    let trace_k_tail = if cfg.momentum_tail {
        momentum_tail_trace(cutoff, kinetic)
    } else {
        0.0
    };
    let zpe_k_tail = -0.25 * trace_k_tail;
    let zpe_sum = zpe_total + zpe_k_tail;

    let mut modes: Vec<Mode> = Vec::new();
    for s in sectors {
        for (index, &lambda) in s.eigenvalues.iter().enumerate() {
            if lambda < 1.0 - cfg.lambda_edge_tol {
                for _ in 0..(2 * s.ell + 1) {
                    modes.push(Mode {
                        lambda,
                        ell: s.ell,
                        index,
                    });
                }
            }
        }
    }
    modes.sort_by(|a, b| {
        a.lambda
            .total_cmp(&b.lambda)
            .then(a.ell.cmp(&b.ell))
            .then(a.index.cmp(&b.index))
    });
    let beta = sectors
        .iter()
        .map(|s| s.eigenvalues[0])
        .fold(f64::INFINITY, f64::min);
    if !(beta > 0.0) {
        return Err(PolaronError::Numerical(format!(
            "spectral gap β = {beta} is not positive"
        )));
    }
    let zero_mode = sectors
        .iter()
        .find_map(|s| s.zero_mode.clone())
        .ok_or_else(|| PolaronError::Contract("sector ℓ = 1 missing".into()))?;
    Ok(HessianSpectrum {
        cutoff,
        ell_max: top,
        modes,
        beta,
        frak_m: (1.0 / beta.sqrt()).ceil() as usize,
        tr_one_minus_h: weighted(sectors, |s| s.trace_one_minus_h),
        tr_4t_diagonal: weighted(sectors, |s| s.trace_4t),
        trace_ell_tail: est.trace,
        trace_k_tail,
        zpe_sectors,
        zpe_ell_tail: est.zpe,
        zpe_k_tail,
        zpe_sum,
        zpe_full: zpe_sum - 1.5,
        grad_trace_sectors: weighted(sectors, |s| s.grad_trace),
        grad_trace: weighted(sectors, |s| s.grad_trace) + est.grad,
        tail_bound,
        zero_mode,
        containment_violations: sectors.iter().map(|s| s.containment_violations).sum(),
        sectors: sectors.to_vec(),
        kgrid: ctx.kgrid.clone(),
        rho_hat: ctx.rho_hat.clone(),
    })
}

/// Bogoliubov blocks of one sector in the momentum basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorBlocks {
    /// Sector.
    pub ell: usize,
    /// `A = (Θ⁻¹ + Θ)/2`, `Θ = H^{1/4}`.
    pub a: DenseMatrix,
    /// `B = (Θ⁻¹ − Θ)/2`.
    pub b: DenseMatrix,
    /// `max |A² − B² − P|` with `P` the projection onto the listed modes.
    pub symplectic_defect: f64,
    /// `‖B‖²_HS` (one block).
    pub b_hs_sq: f64,
    /// `max b²/(1 − λ)` over modes with `λ < 1`: the constant in
    /// `B² ≤ C(1 − H)`.
    pub b_sq_constant: f64,
}

/// Summary over all sectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BogoliubovBlocks {
    /// Per-sector blocks.
    pub sectors: Vec<SectorBlocks>,
    /// Largest symplectic defect.
    pub max_defect: f64,
    /// `Σ(2ℓ+1)‖B_ℓ‖²_HS`.
    pub b_hs_sq: f64,
    /// Largest `b²/(1 − λ)`.
    pub b_sq_constant: f64,
    /// `‖B‖²_HS / tr(1 − H)` over the computed sectors.
    pub hs_to_trace_ratio: f64,
}

/// `A`, `B` per sector and the identity `A² − B² = 1` (on the complement
/// of the zero modes).
pub fn bogoliubov_blocks(spec: &HessianSpectrum, exec: Exec) -> Result<BogoliubovBlocks> {
    let blocks: Vec<SectorBlocks> = exec
        .map(&spec.sectors, sector_blocks)
        .into_iter()
        .collect::<Result<_>>()?;
    let max_defect = blocks
        .iter()
        .map(|b| b.symplectic_defect)
        .fold(0.0, f64::max);
    let b_hs_sq: f64 = blocks
        .iter()
        .map(|b| (2 * b.ell + 1) as f64 * b.b_hs_sq)
        .sum();
    let b_sq_constant = blocks.iter().map(|b| b.b_sq_constant).fold(0.0, f64::max);
    let tr: f64 = spec
        .sectors
        .iter()
        .map(|s| (2 * s.ell + 1) as f64 * s.eigenvalues.iter().map(|v| 1.0 - v).sum::<f64>())
        .sum();
    Ok(BogoliubovBlocks {
        sectors: blocks,
        max_defect,
        b_hs_sq,
        b_sq_constant,
        hs_to_trace_ratio: b_hs_sq / tr,
    })
}

fn sector_blocks(s: &SectorSpectrum) -> Result<SectorBlocks> {
    let n = s.eigenvectors.n;
    let count = s.eigenvalues.len();
    let mut coef_a = Vec::with_capacity(count);
    let mut coef_b = Vec::with_capacity(count);
    let mut b_sq_constant = 0.0f64;
    for &l in &s.eigenvalues {
        if !(l > 0.0) {
            return Err(PolaronError::Numerical(format!(
                "sector {}: mode with λ = {l} outside the zero-mode space",
                s.ell
            )));
        }
        let theta = l.powf(0.25);
        let (a, b) = (0.5 * (1.0 / theta + theta), 0.5 * (1.0 / theta - theta));
        if l < 1.0 {
            b_sq_constant = b_sq_constant.max(b * b / (1.0 - l));
        }
        coef_a.push(a);
        coef_b.push(b);
    }
    let build = |coef: &[f64]| {
        let mut m = DenseMatrix::zeros(n);
        for (r, c) in coef.iter().enumerate() {
            let v = s.eigenvectors.row(r);
            for i in 0..n {
                let f = c * v[i];
                for j in 0..n {
                    *m.get_mut(i, j) += f * v[j];
                }
            }
        }
        m
    };
    let a = build(&coef_a);
    let b = build(&coef_b);
    let proj = build(&vec![1.0; count]);
    let a2 = a.matmul(&a);
    let b2 = b.matmul(&b);
    let symplectic_defect = a2
        .data
        .iter()
        .zip(&b2.data)
        .zip(&proj.data)
        .map(|((x, y), p)| (x - y - p).abs())
        .fold(0.0, f64::max);
    Ok(SectorBlocks {
        ell: s.ell,
        b_hs_sq: coef_b.iter().map(|b| b * b).sum(),
        a,
        b,
        symplectic_defect,
        b_sq_constant,
    })
}
