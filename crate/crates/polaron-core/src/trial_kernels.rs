//! Kernels of the momentum-boosted trial states: the displaced field
//! difference `w_{P,y} = (1 − e^{−y∇})φ_P`, its splitting along the
//! Hessian kernel, the `Θ`-weighted variant `w̃`, the phase `g_P(y)` and
//! the weight function `n_{δ,η}(y)`.
//!
//! Everything is evaluated in momentum space on the Hessian momentum grid
//! with the unitary transform `φ̂(k) = f(k) = (2π)^{-3/2} ρ̂(k)/k` and
//! `φ̂_P = φ̂·(1 − P·k/(α² m_lp))`. In a frame with `ŷ` along `z` and `P`
//! in the `xz` plane, `Re w` lives in the `m = 0` partial waves and
//! `Im w` in `m = 0` and `cos ϕ·P_ℓ¹`. With `x = k|y|` the radial profiles
//! (coefficients of normalized real harmonics) are
//!
//! ```text
//! Re w, ℓ:       √(4π/(2ℓ+1)) f (δ_ℓ0 − (2ℓ+1) j_ℓ(x))
//! Im w, m = 0:   (P_∥/a) k f √(4π/(2ℓ+1)) (δ_ℓ1 − (2ℓ+1) j_ℓ'(x))
//! Im w, cos ϕ:   (P_⊥/a) k f √(2πℓ(ℓ+1)/(2ℓ+1)) (δ_ℓ1 − (2ℓ+1) j_ℓ(x)/x)
//! ```
//!
//! with `a = α² m_lp`, up to a constant phase per partial wave. The kernel
//! of the Hessian is the `ℓ = 1` profile `k f`. `Θ² = √H` acts through the
//! computed sector eigenbases; beyond them `Θ = 1`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{PolaronError, Result};
use crate::exec::Exec;
use crate::hessian_spectrum::HessianSpectrum;
use crate::pekar_solver::PekarSolution;
use crate::radial_numerics::{gauss_legendre, spherical_bessel_all};

/// Below this argument the Bessel combinations use their Taylor series.
const SERIES_CUTOFF: f64 = 0.05;

/// `1 − j₀(x)`.
fn one_minus_j0(x: f64) -> f64 {
    if x < SERIES_CUTOFF {
        let x2 = x * x;
        x2 * (1.0 / 6.0 - x2 * (1.0 / 120.0 - x2 * (1.0 / 5040.0 - x2 / 362_880.0)))
    } else {
        1.0 - x.sin() / x
    }
}

/// `1 − 3 j₁'(x) = 1 − j₀ + 2 j₂`.
fn one_minus_3dj1(x: f64, j: &[f64]) -> f64 {
    if x < SERIES_CUTOFF {
        let x2 = x * x;
        x2 * (0.3 - x2 * (1.0 / 56.0 - x2 / 2160.0))
    } else {
        1.0 - j[0] + 2.0 * j[2]
    }
}

/// `1 − 3 j₁(x)/x = 1 − j₀ − j₂`.
fn one_minus_3j1_over_x(x: f64, j: &[f64]) -> f64 {
    if x < SERIES_CUTOFF {
        let x2 = x * x;
        x2 * (0.1 - x2 * (1.0 / 280.0 - x2 / 15120.0))
    } else {
        1.0 - j[0] - j[2]
    }
}

/// `∫₋₁¹ μ³ sin(xμ) dμ = (6/5) j₁ − (4/5) j₃`.
fn mu3_sine(j: &[f64]) -> f64 {
    1.2 * j[1] - 0.8 * j[3]
}

/// Squared norms of `w_{P,y}` and its pieces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WNorms {
    /// `‖w‖²`.
    pub total: f64,
    /// `‖Π₀ w‖²`.
    pub zero: f64,
    /// `‖Π₁ w‖²`, evaluated as `‖w − Π₀w‖²`.
    pub one: f64,
    /// `‖w̃¹‖²`.
    pub tilde_one: f64,
    /// `‖w̃‖² = ‖w⁰‖² + ‖w̃¹‖²`.
    pub tilde: f64,
    /// Part of `‖w¹‖²` outside the computed sectors (where `Θ = 1`).
    pub outside_basis: f64,
    /// Bound on the error of `tilde` from setting `Θ = 1` outside the
    /// computed sectors.
    pub theta_tail_bound: f64,
    /// `|P| > P_c(α)`: outside the momentum range of the estimates.
    pub beyond_critical: bool,
}

impl WNorms {
    fn zero_sample(beyond_critical: bool) -> Self {
        WNorms {
            total: 0.0,
            zero: 0.0,
            one: 0.0,
            tilde_one: 0.0,
            tilde: 0.0,
            outside_basis: 0.0,
            theta_tail_bound: 0.0,
            beyond_critical,
        }
    }
}

/// `|y|`, `P·ŷ` and `|P − (P·ŷ)ŷ|`.
fn frame(y: [f64; 3], p: [f64; 3]) -> (f64, f64, f64) {
    let r = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
    if r == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let yh = [y[0] / r, y[1] / r, y[2] / r];
    let par = p[0] * yh[0] + p[1] * yh[1] + p[2] * yh[2];
    let perp = [p[0] - par * yh[0], p[1] - par * yh[1], p[2] - par * yh[2]];
    (
        r,
        par,
        (perp[0] * perp[0] + perp[1] * perp[1] + perp[2] * perp[2]).sqrt(),
    )
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Momentum-space data of `φ` on the Hessian grid plus the sector bases.
#[derive(Debug, Clone)]
pub struct TrialKernels<'a> {
    spec: &'a HessianSpectrum,
    k: Vec<f64>,
    /// `√W` of the `k² dk` weights.
    sw: Vec<f64>,
    /// `f(k) = φ̂(k)`.
    f: Vec<f64>,
    /// Normalized kernel direction `√W k f`.
    zhat: Vec<f64>,
    /// `‖∇φ‖²` on the grid.
    grad_norm_sq: f64,
    m_lp: f64,
    lambda_gauss: f64,
}

impl<'a> TrialKernels<'a> {
    /// Binds the field of `pekar` (through the density transform stored
    /// in `spec`) and the sector eigenbases of `spec`.
    pub fn new(pekar: &PekarSolution, spec: &'a HessianSpectrum) -> Result<Self> {
        let g = &spec.kgrid;
        if spec.rho_hat.len() != g.len() {
            return Err(PolaronError::Contract(
                "density transform does not match the momentum grid".into(),
            ));
        }
        if !(pekar.m_lp > 0.0) {
            return Err(PolaronError::Precondition(format!(
                "m_lp = {} is not positive",
                pekar.m_lp
            )));
        }
        let c = (2.0 * PI).powf(-1.5);
        let f: Vec<f64> = g
            .nodes
            .iter()
            .zip(&spec.rho_hat)
            .map(|(k, r)| c * r / k)
            .collect();
        let sw: Vec<f64> = g.weights.iter().map(|w| w.sqrt()).collect();
        let mut zhat: Vec<f64> = sw
            .iter()
            .zip(&g.nodes)
            .zip(&f)
            .map(|((s, k), f)| s * k * f)
            .collect();
        let zn = zhat.iter().map(|z| z * z).sum::<f64>();
        if !(zn > 0.0) {
            return Err(PolaronError::Numerical(
                "field gradient vanishes on the momentum grid".into(),
            ));
        }
        zhat.iter_mut().for_each(|z| *z /= zn.sqrt());
        Ok(TrialKernels {
            spec,
            k: g.nodes.clone(),
            sw,
            f,
            zhat,
            grad_norm_sq: 4.0 * PI * zn,
            m_lp: pekar.m_lp,
            lambda_gauss: pekar.lambda_gauss,
        })
    }

    /// `‖∇φ‖²` from the momentum grid.
    pub fn grad_norm_sq(&self) -> f64 {
        self.grad_norm_sq
    }

    /// `λ = ‖∇φ‖²/6` of the Pekar solution.
    pub fn lambda_gauss(&self) -> f64 {
        self.lambda_gauss
    }

    fn bessel_table(&self, r: f64, lmax: usize) -> Vec<Vec<f64>> {
        self.k
            .iter()
            .map(|&k| {
                let mut j = vec![0.0; lmax + 1];
                spherical_bessel_all(k * r, &mut j);
                j
            })
            .collect()
    }

    /// Norms at separation `r = |y|` (`None`: the limit `|y| → ∞`) with
    /// momentum components `(P_∥, P_⊥)` relative to `ŷ`.
    fn norms_in_frame(&self, r: Option<f64>, p_par: f64, p_perp: f64, alpha: f64) -> WNorms {
        let spec = self.spec;
        let lmax = spec.ell_max.max(3);
        let a = alpha * alpha * self.m_lp;
        let (cp, cq) = (p_par / a, p_perp / a);
        let nk = self.k.len();
        // j_ℓ(x) per node; the far field has every j_ℓ = 0.
        let table = match r {
            Some(r) => self.bessel_table(r, lmax),
            None => vec![vec![0.0; lmax + 1]; nk],
        };
        let x_of = |i: usize| r.map_or(f64::INFINITY, |r| self.k[i] * r);
        let (mut re_sq, mut im_sq) = (0.0, 0.0);
        for i in 0..nk {
            let x = x_of(i);
            let j = &table[i];
            let (omj0, a1, b1) = if x.is_finite() {
                (
                    one_minus_j0(x),
                    one_minus_3dj1(x, j),
                    one_minus_3j1_over_x(x, j),
                )
            } else {
                (1.0, 1.0, 1.0)
            };
            let wf2 = self.sw[i] * self.sw[i] * self.f[i] * self.f[i];
            re_sq += wf2 * omj0;
            im_sq += wf2 * self.k[i] * self.k[i] * (cp * cp * a1 + cq * cq * b1);
        }
        let re_sq = 8.0 * PI * re_sq;
        let im_sq = 8.0 * PI / 3.0 * im_sq;

        let mut re_zero = 0.0;
        let mut im_zero = 0.0;
        let mut in_basis = 0.0;
        let mut theta_re = 0.0;
        let mut theta_im = 0.0;
        let mut re_v = vec![0.0; nk];
        let mut im0_v = vec![0.0; nk];
        let mut imc_v = vec![0.0; nk];
        for s in &spec.sectors {
            let l = s.ell;
            let lf = l as f64;
            let n_re = (4.0 * PI / (2.0 * lf + 1.0)).sqrt();
            let n_c = (2.0 * PI * lf * (lf + 1.0) / (2.0 * lf + 1.0)).sqrt();
            for i in 0..nk {
                let x = x_of(i);
                let j = &table[i];
                let base = self.sw[i] * self.f[i];
                let kb = base * self.k[i];
                let (c_re, c_m0, c_cos) = if !x.is_finite() {
                    (
                        if l == 0 { 1.0 } else { 0.0 },
                        if l == 1 { 1.0 } else { 0.0 },
                        if l == 1 { 1.0 } else { 0.0 },
                    )
                } else {
                    let re = if l == 0 {
                        one_minus_j0(x)
                    } else {
                        -((2 * l + 1) as f64) * j[l]
                    };
                    let (m0, cs) = match l {
                        0 => (j[1], 0.0),
                        1 => (one_minus_3dj1(x, j), one_minus_3j1_over_x(x, j)),
                        _ => {
                            let djl = j[l - 1] - (lf + 1.0) * j[l] / x;
                            (-(2.0 * lf + 1.0) * djl, -(2.0 * lf + 1.0) * j[l] / x)
                        }
                    };
                    (re, m0, cs)
                };
                re_v[i] = base * n_re * c_re;
                im0_v[i] = kb * cp * n_re * c_m0;
                imc_v[i] = kb * cq * n_c * c_cos;
            }
            let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
            let mut mass = sq(&re_v) + sq(&im0_v) + sq(&imc_v);
            if l == 1 {
                let dz = |v: &[f64]| v.iter().zip(&self.zhat).map(|(a, b)| a * b).sum::<f64>();
                let (pr, p0, pc) = (dz(&re_v), dz(&im0_v), dz(&imc_v));
                re_zero += pr * pr;
                im_zero += p0 * p0 + pc * pc;
                mass -= pr * pr + p0 * p0 + pc * pc;
            }
            in_basis += mass;
            for (n, &lam) in s.eigenvalues.iter().enumerate() {
                let v = s.eigenvectors.row(n);
                let d = |w: &[f64]| v.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
                let (dr, d0, dc) = (d(&re_v), d(&im0_v), d(&imc_v));
                let sl = lam.sqrt();
                theta_re += (sl - 1.0) * dr * dr;
                theta_im += (1.0 / sl - 1.0) * (d0 * d0 + dc * dc);
            }
        }
        let total = re_sq + im_sq;
        let zero = re_zero + im_zero;
        // ‖w − w⁰‖² = ‖w‖² − 2⟨w⁰, w⟩ + ‖w⁰‖², with ⟨w⁰, w⟩ = ‖w⁰‖².
        let one = total - 2.0 * zero + zero;
        let tilde_one = one + theta_re + theta_im;
        let outside = (one - in_basis).max(0.0);
        let last = spec
            .sectors
            .last()
            .map_or(1.0, |s| s.eigenvalues[0])
            .clamp(f64::MIN_POSITIVE, 1.0);
        let dev = (1.0 - last.sqrt()).max(1.0 / last.sqrt() - 1.0);
        let p_abs = (p_par * p_par + p_perp * p_perp).sqrt();
        WNorms {
            total,
            zero,
            one,
            tilde_one,
            tilde: zero + tilde_one,
            outside_basis: outside,
            theta_tail_bound: outside * dev,
            beyond_critical: p_abs > (2.0 * self.m_lp).sqrt() * alpha,
        }
    }

    fn check_alpha(alpha: f64) -> Result<()> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(PolaronError::config(
                "alpha",
                format!("must be positive, got {alpha}"),
            ));
        }
        Ok(())
    }

    /// `(‖w‖², ‖w⁰‖², ‖w¹‖², ‖w̃‖²)` and diagnostics at displacement `y`,
    /// total momentum `p` and coupling `alpha`.
    pub fn w_norms(&self, y: [f64; 3], p: [f64; 3], alpha: f64) -> Result<WNorms> {
        Self::check_alpha(alpha)?;
        let (r, par, perp) = frame(y, p);
        if r == 0.0 {
            return Ok(WNorms::zero_sample(
                norm3(p) > (2.0 * self.m_lp).sqrt() * alpha,
            ));
        }
        Ok(self.norms_in_frame(Some(r), par, perp, alpha))
    }

    /// Limit of [`Self::w_norms`] as `|y| → ∞` (direction independent).
    pub fn w_norms_far(&self, p: [f64; 3], alpha: f64) -> Result<WNorms> {
        Self::check_alpha(alpha)?;
        Ok(self.norms_in_frame(None, norm3(p), 0.0, alpha))
    }

    /// `n_{δ,η}(y) = exp(−η α^{2(1−δ)} ‖w̃_{P,y}‖² / 2)`.
    pub fn weight_fn(
        &self,
        y: [f64; 3],
        p: [f64; 3],
        alpha: f64,
        delta: f64,
        eta: f64,
    ) -> Result<f64> {
        check_weight_params(delta, eta)?;
        let w = self.w_norms(y, p, alpha)?;
        Ok(weight_from_norm(w.tilde, alpha, delta, eta))
    }

    /// Coefficients of `Re w⁰_{P,y}` on the normalized `∂_iφ`
    /// (laboratory frame).
    pub fn w0_components(&self, y: [f64; 3]) -> [f64; 3] {
        let r = norm3(y);
        if r == 0.0 {
            return [0.0; 3];
        }
        let mut j = [0.0; 2];
        let q: f64 = (0..self.k.len())
            .map(|i| {
                spherical_bessel_all(self.k[i] * r, &mut j);
                self.sw[i] * self.sw[i] * self.k[i] * self.f[i] * self.f[i] * j[1]
            })
            .sum::<f64>()
            * 4.0
            * PI;
        let n = (self.grad_norm_sq / 3.0).sqrt();
        [y[0] / r * q / n, y[1] / r * q / n, y[2] / r * q / n]
    }

    /// `g_P(y) = −(2/m_lp) ∫₀¹ ds ⟨φ, e^{−sy∇}(y∇)³(P∇)φ⟩
    ///         = −(2/m_lp) (P·ŷ) |y|² 2π ∫ k³ f² (∫μ³ sin(k|y|μ) dμ) k² dk`.
    pub fn g_p(&self, y: [f64; 3], p: [f64; 3]) -> f64 {
        let (r, par, _) = frame(y, p);
        if r == 0.0 {
            return 0.0;
        }
        let mut j = [0.0; 4];
        let s: f64 = (0..self.k.len())
            .map(|i| {
                spherical_bessel_all(self.k[i] * r, &mut j);
                let k = self.k[i];
                self.sw[i] * self.sw[i] * k * k * k * self.f[i] * self.f[i] * mu3_sine(&j)
            })
            .sum();
        -2.0 / self.m_lp * par * r * r * 2.0 * PI * s
    }

    /// `‖(1 − e^{−y∇})φ‖² = 2·4π ∫ (1 − j₀(k|y|)) f² k² dk`.
    pub fn translation_norm_sq(&self, r: f64) -> f64 {
        8.0 * PI
            * (0..self.k.len())
                .map(|i| {
                    self.sw[i] * self.sw[i] * self.f[i] * self.f[i] * one_minus_j0(self.k[i] * r)
                })
                .sum::<f64>()
    }
}

fn check_weight_params(delta: f64, eta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&delta) {
        return Err(PolaronError::config(
            "delta",
            format!("must lie in [0, 1), got {delta}"),
        ));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(PolaronError::config(
            "eta",
            format!("must be positive, got {eta}"),
        ));
    }
    Ok(())
}

fn weight_from_norm(tilde: f64, alpha: f64, delta: f64, eta: f64) -> f64 {
    (-eta * alpha.powf(2.0 * (1.0 - delta)) * tilde / 2.0).exp()
}

/// `‖(1 − e^{−y∇})φ‖²` by direct position-space quadrature of the
/// shifted field over the ball `|x| ≤ r_max − |y|`, plus the leading
/// far-field correction `4|y|²/(9π³R³)` from `φ ≈ 1/(2π²r²)`.
///
/// `φ` is rebuilt from the density of `pekar` on a radial grid four times
/// finer than the solver grid through `φ(r) = (1/2π²)∫ρ̂(k) k j₀(kr) dk`
/// and interpolated with cubic Lagrange polynomials.
pub fn translation_norm_sq_position(pekar: &PekarSolution, r: f64) -> Result<f64> {
    let h0 = pekar.grid.spacing();
    let r_max = pekar.grid.nodes[pekar.grid.len() - 1] + 0.5 * h0;
    let radius = r_max - r - 4.0 * h0;
    if !(radius > 4.0 * r) {
        return Err(PolaronError::config(
            "y",
            format!("|y| = {r} too large for the radial grid"),
        ));
    }
    // ρ̂ is below round-off beyond k = 1 for the Pekar density; panels of
    // width 0.01 resolve j₀(k r_max).
    let (mut kn, mut kw) = (Vec::new(), Vec::new());
    let k_panels = 100;
    for p in 0..k_panels {
        let (x, w) = gauss_legendre(
            8,
            p as f64 / k_panels as f64,
            (p + 1) as f64 / k_panels as f64,
        );
        kn.extend(x);
        kw.extend(w);
    }
    let rho: Vec<f64> = kn.iter().map(|&k| pekar.density_transform(k)).collect();
    let h = 0.25 * h0;
    let n = (r_max / h).ceil() as usize + 4;
    let vals: Vec<f64> = (0..n)
        .map(|i| {
            let s = (i as f64 + 0.5) * h;
            kn.iter()
                .zip(&kw)
                .zip(&rho)
                .map(|((k, w), rh)| {
                    let x = k * s;
                    w * rh * k * if x < 1e-8 { 1.0 } else { x.sin() / x }
                })
                .sum::<f64>()
                / (2.0 * PI * PI)
        })
        .collect();
    // Midpoint nodes s_i = (i + ½)h; φ is even through the origin.
    let at = |i: isize| -> f64 { vals[if i < 0 { (-i - 1) as usize } else { i as usize }] };
    let phi = |s: f64| -> f64 {
        let t = s / h - 0.5;
        let i = t.floor() as isize;
        let u = t - i as f64;
        let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
        // Cubic Lagrange through i−1 … i+2.
        p0 * (-u * (u - 1.0) * (u - 2.0) / 6.0)
            + p1 * ((u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0)
            + p2 * (-(u + 1.0) * u * (u - 2.0) / 2.0)
            + p3 * ((u + 1.0) * u * (u - 1.0) / 6.0)
    };
    let (mu, wmu) = gauss_legendre(48, -1.0, 1.0);
    let panels = (radius / (2.0 * h)).ceil() as usize;
    let width = radius / panels as f64;
    let mut total = 0.0;
    for pnl in 0..panels {
        let (xs, ws) = gauss_legendre(6, pnl as f64 * width, (pnl + 1) as f64 * width);
        for (&s, &ws) in xs.iter().zip(&ws) {
            let p0 = phi(s);
            let mut inner = 0.0;
            for (&m, &wm) in mu.iter().zip(&wmu) {
                let d = (s * s + r * r - 2.0 * s * r * m).max(0.0).sqrt();
                let diff = p0 - phi(d);
                inner += wm * diff * diff;
            }
            total += ws * s * s * inner;
        }
    }
    Ok(2.0 * PI * total + 4.0 * r * r / (9.0 * PI.powi(3) * radius.powi(3)))
}

/// Sampling, tolerances and regression bands of [`verify_trial_lemmas`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrialConfig {
    /// Couplings of the Gaussian comparison (ascending).
    pub alphas: Vec<f64>,
    /// `|P|/P_c(α)` values for the symmetry and band samples.
    pub p_over_pc: Vec<f64>,
    pub delta: f64,
    pub eta: f64,
    /// Small `|y|` values for the small-displacement fits.
    pub small_y: Vec<f64>,
    /// Gauss–Legendre panels (8 nodes each) on `[0, y_max(α)]`.
    pub y_panels: usize,
    /// `y_max(α) = min(y_width/(α√λ), y_cap)`.
    pub y_width: f64,
    pub y_cap: f64,
    /// Radius of the ball `g = 1_{|y| ≤ R}` in the integrated Gaussian
    /// comparison.
    pub l1_radius: f64,
    /// Couplings of the integrated Gaussian comparison.
    pub l1_alphas: Vec<f64>,
    /// `|y|` values of the position-space cross-check.
    pub position_check_y: Vec<f64>,
    /// `|P|/α` of the `g_P` growth fit.
    pub g_p_over_alpha: f64,
    pub w0_rel_tol: f64,
    pub w1_slope_min: f64,
    pub g_slope_min: f64,
    pub symmetry_tol: f64,
    pub decomposition_tol: f64,
    pub linearity_tol: f64,
    pub gauss_sup_ratio_max: f64,
    pub gauss_l1_exponent_max: f64,
    pub translation_rel_tol: f64,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            alphas: vec![10.0, 20.0, 40.0, 80.0],
            p_over_pc: vec![0.0, 0.5],
            delta: 0.0,
            eta: 1.0,
            small_y: vec![0.01, 0.02, 0.03, 0.04, 0.05],
            y_panels: 12,
            y_width: 4.0,
            y_cap: 800.0,
            l1_radius: 800.0,
            l1_alphas: vec![20.0, 40.0, 80.0],
            position_check_y: vec![2.0, 10.0, 40.0],
            g_p_over_alpha: 1.0,
            w0_rel_tol: 0.02,
            w1_slope_min: 3.8,
            g_slope_min: 2.9,
            symmetry_tol: 1e-10,
            decomposition_tol: 1e-10,
            linearity_tol: 1e-10,
            gauss_sup_ratio_max: 0.5,
            gauss_l1_exponent_max: -3.5,
            translation_rel_tol: 1e-4,
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        let asc = |name: &str, v: &[f64]| -> Result<()> {
            if v.is_empty()
                || v.iter().any(|x| !(x.is_finite() && *x > 0.0))
                || v.windows(2).any(|w| w[0] >= w[1])
            {
                return Err(PolaronError::config(
                    name,
                    "must be nonempty, positive and strictly ascending",
                ));
            }
            Ok(())
        };
        asc("trial.alphas", &self.alphas)?;
        asc("trial.small_y", &self.small_y)?;
        asc("trial.l1_alphas", &self.l1_alphas)?;
        asc("trial.position_check_y", &self.position_check_y)?;
        if self.small_y.len() < 2 || self.l1_alphas.len() < 2 {
            return Err(PolaronError::config(
                "trial",
                "fits need at least two samples",
            ));
        }
        if self.alphas.len() < 2 {
            return Err(PolaronError::config(
                "trial.alphas",
                "need at least two couplings",
            ));
        }
        if self.p_over_pc.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(PolaronError::config(
                "trial.p_over_pc",
                "must be finite and nonnegative",
            ));
        }
        check_weight_params(self.delta, self.eta)?;
        for (name, v) in [
            ("trial.y_width", self.y_width),
            ("trial.y_cap", self.y_cap),
            ("trial.l1_radius", self.l1_radius),
            ("trial.w0_rel_tol", self.w0_rel_tol),
            ("trial.symmetry_tol", self.symmetry_tol),
            ("trial.decomposition_tol", self.decomposition_tol),
            ("trial.linearity_tol", self.linearity_tol),
            ("trial.gauss_sup_ratio_max", self.gauss_sup_ratio_max),
            ("trial.translation_rel_tol", self.translation_rel_tol),
            ("trial.g_p_over_alpha", self.g_p_over_alpha),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PolaronError::config(
                    name,
                    format!("must be positive, got {v}"),
                ));
            }
        }
        if self.y_panels == 0 {
            return Err(PolaronError::config("trial.y_panels", "must be positive"));
        }
        Ok(())
    }
}

/// One evaluated displacement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YSample {
    pub y: [f64; 3],
    pub p: [f64; 3],
    pub alpha: f64,
    pub norms: WNorms,
    /// `n_{δ,η}(y)`.
    pub weight: f64,
    /// `e^{−λα²y²}`.
    pub gauss_ref: f64,
    pub g_p: f64,
}

/// Gaussian comparison at one coupling (`P = 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussComparison {
    pub alpha: f64,
    pub y_max: f64,
    /// `sup |n_{δ,η} − e^{−λα²y²}|` over the `y` grid and `|y| → ∞`.
    pub sup_deviation: f64,
    /// `|y|` of the supremum (`None` for the far field).
    pub sup_at: Option<f64>,
    /// `n_{δ,η}` as `|y| → ∞`.
    pub far_weight: f64,
}

/// Small-`y` regressions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFits {
    /// Intercept of `‖w⁰‖²/y² = c₀ + c₁y²` (`P = 0`).
    pub w0_intercept: f64,
    /// `c₀/(2λ) − 1`.
    pub w0_rel_error: f64,
    /// Log–log slope of `‖w¹‖²` against `|y|` (`P = 0`).
    pub w1_slope: f64,
    /// Log–log slope of `|g_P|` against `|y|`.
    pub g_slope: f64,
    /// Fitted `C` in `|g_P(y)| ≤ C·α|y|³`.
    pub g_constant: f64,
    /// Range of `‖w̃¹‖²/‖w¹‖²` over all samples.
    pub tilde_ratio_min: f64,
    pub tilde_ratio_max: f64,
    /// Per coupling.
    pub gauss: Vec<GaussComparison>,
    /// `∫_{|y|≤R} |n_{δ,η} − e^{−λα²y²}| dy` per `l1_alphas`.
    pub gauss_l1: Vec<f64>,
    /// Log–log slope of `gauss_l1` against `α`.
    pub gauss_l1_exponent: f64,
}

/// Maximal symmetry violations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryDefects {
    /// `|n(y) − n(−y)|`.
    pub weight_evenness: f64,
    /// `|‖w̃_y‖² − ‖w̃_{−y}‖²|` relative.
    pub tilde_evenness: f64,
    /// `|g(y) + g(−y)|` relative.
    pub g_oddness: f64,
    /// `|Re w⁰_{−y} + Re w⁰_y|` componentwise, relative.
    pub w0_oddness: f64,
    /// `|g_{2P} − 2g_P|` relative.
    pub g_linearity: f64,
}

/// Spectral against position-space translation norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationCheck {
    pub y: f64,
    pub spectral: f64,
    pub position: f64,
    pub rel_error: f64,
}

/// Outcome of one checked claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

/// Output of [`verify_trial_lemmas`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialKernelReport {
    pub lambda: f64,
    pub m_lp: f64,
    pub samples: Vec<YSample>,
    pub fits: TrialFits,
    pub symmetry_defects: SymmetryDefects,
    /// Largest `|‖w⁰‖² + ‖w¹‖² − ‖w‖²|/‖w‖²`.
    pub decomposition_defect: f64,
    /// Largest bound on the `Θ = 1` approximation error of `‖w̃‖²`.
    pub theta_tail_bound: f64,
    pub translation: Vec<TranslationCheck>,
    /// Samples with `|P| > P_c(α)`.
    pub beyond_critical: usize,
    pub claims: Vec<Claim>,
    pub passed: bool,
}

impl TrialKernelReport {
    /// Names of the failed claims.
    pub fn failures(&self) -> Vec<&str> {
        self.claims
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }
}

/// Fixed sample directions (not normalized).
const DIRECTIONS: [[f64; 3]; 4] = [
    [0.0, 0.0, 1.0],
    [1.0, 0.0, 0.0],
    [1.0, 1.0, 1.0],
    [0.3, -0.5, 0.81],
];

/// Direction of the total momentum.
const P_DIRECTION: [f64; 3] = [1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0];

fn scaled(v: [f64; 3], s: f64) -> [f64; 3] {
    let n = norm3(v);
    [v[0] * s / n, v[1] * s / n, v[2] * s / n]
}

fn neg(v: [f64; 3]) -> [f64; 3] {
    [-v[0], -v[1], -v[2]]
}

fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    crate::hessian_spectrum::log_log_slope(x, y).unwrap_or(f64::NAN)
}

/// Evaluates the trial-kernel objects over the configured samples and
/// checks the small-displacement bounds, the symmetries and the Gaussian
/// replacement of the weight function. Failing claims are recorded in the
/// report (`passed = false`), not returned as errors.
pub fn verify_trial_lemmas(
    pekar: &PekarSolution,
    spec: &HessianSpectrum,
    cfg: &TrialConfig,
    exec: Exec,
) -> Result<TrialKernelReport> {
    cfg.validate()?;
    let tk = TrialKernels::new(pekar, spec)?;
    let lambda = pekar.lambda_gauss;
    let pc = |alpha: f64| (2.0 * pekar.m_lp).sqrt() * alpha;

    // Symmetry samples: every direction, ±y, every α and P fraction.
    let mut jobs: Vec<([f64; 3], [f64; 3], f64)> = Vec::new();
    for &alpha in &cfg.alphas {
        let y0 = 1.0 / (alpha * lambda.sqrt());
        for &frac in &cfg.p_over_pc {
            let p = scaled(P_DIRECTION, frac * pc(alpha));
            for d in DIRECTIONS {
                for m in [0.25, 1.0] {
                    let y = scaled(d, m * y0.min(cfg.y_cap));
                    jobs.push((y, p, alpha));
                    jobs.push((neg(y), p, alpha));
                }
            }
        }
    }
    let eval = |&(y, p, alpha): &([f64; 3], [f64; 3], f64)| -> Result<YSample> {
        let norms = tk.w_norms(y, p, alpha)?;
        let r2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
        Ok(YSample {
            y,
            p,
            alpha,
            norms,
            weight: weight_from_norm(norms.tilde, alpha, cfg.delta, cfg.eta),
            gauss_ref: (-lambda * alpha * alpha * r2).exp(),
            g_p: tk.g_p(y, p),
        })
    };
    let samples: Vec<YSample> = exec.map(&jobs, eval).into_iter().collect::<Result<_>>()?;

    let mut sym = SymmetryDefects {
        weight_evenness: 0.0,
        tilde_evenness: 0.0,
        g_oddness: 0.0,
        w0_oddness: 0.0,
        g_linearity: 0.0,
    };
    for pair in samples.chunks(2) {
        let (a, b) = (&pair[0], &pair[1]);
        sym.weight_evenness = sym.weight_evenness.max((a.weight - b.weight).abs());
        sym.tilde_evenness = sym.tilde_evenness.max(rel(a.norms.tilde, b.norms.tilde));
        sym.g_oddness = sym.g_oddness.max(rel(a.g_p, -b.g_p));
        let (ca, cb) = (tk.w0_components(a.y), tk.w0_components(b.y));
        let scale = norm3(ca).max(f64::MIN_POSITIVE);
        for i in 0..3 {
            sym.w0_oddness = sym.w0_oddness.max((ca[i] + cb[i]).abs() / scale);
        }
        let g2 = tk.g_p(a.y, [2.0 * a.p[0], 2.0 * a.p[1], 2.0 * a.p[2]]);
        sym.g_linearity = sym.g_linearity.max(rel(g2, 2.0 * a.g_p));
    }

    // Small-y fits at P = 0 along z.
    let small: Vec<WNorms> = exec
        .map(&cfg.small_y, |&r| {
            tk.w_norms([0.0, 0.0, r], [0.0; 3], cfg.alphas[0])
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let y2: Vec<f64> = cfg.small_y.iter().map(|r| r * r).collect();
    let ratio: Vec<f64> = small.iter().zip(&y2).map(|(w, y2)| w.zero / y2).collect();
    let (c0, _) = linear_fit(&y2, &ratio);
    let w1: Vec<f64> = small.iter().map(|w| w.one).collect();
    let g_alpha = cfg.alphas[0];
    let p_g = scaled([1.0, 0.0, 1.0], cfg.g_p_over_alpha * g_alpha);
    let g_vals: Vec<f64> = cfg
        .small_y
        .iter()
        .map(|&r| tk.g_p(scaled([1.0, 1.0, 1.0], r), p_g).abs())
        .collect();
    let g_constant = cfg
        .small_y
        .iter()
        .zip(&g_vals)
        .map(|(r, g)| g / (g_alpha * r.powi(3)))
        .fold(0.0, f64::max);

    // Gaussian comparison at P = 0 (isotropic).
    let gauss: Vec<GaussComparison> = exec
        .map(&cfg.alphas, |&alpha| {
            gauss_comparison(&tk, cfg, lambda, alpha)
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let gauss_l1: Vec<f64> = exec
        .map(&cfg.l1_alphas, |&alpha| gauss_l1(&tk, cfg, lambda, alpha))
        .into_iter()
        .collect::<Result<_>>()?;
    let gauss_l1_exponent = log_slope(&cfg.l1_alphas, &gauss_l1);

    let all_norms = samples.iter().map(|s| &s.norms).chain(&small);
    let (mut tr_min, mut tr_max, mut decomposition_defect, mut theta_tail_bound) =
        (f64::INFINITY, 0.0f64, 0.0f64, 0.0f64);
    for w in all_norms {
        if w.one > 0.0 {
            let r = w.tilde_one / w.one;
            tr_min = tr_min.min(r);
            tr_max = tr_max.max(r);
        }
        if w.total > 0.0 {
            decomposition_defect =
                decomposition_defect.max((w.zero + w.one - w.total).abs() / w.total);
        }
        theta_tail_bound = theta_tail_bound.max(w.theta_tail_bound);
    }

    let translation: Vec<TranslationCheck> = exec
        .map(&cfg.position_check_y, |&r| -> Result<TranslationCheck> {
            let spectral = tk.translation_norm_sq(r);
            let position = translation_norm_sq_position(pekar, r)?;
            Ok(TranslationCheck {
                y: r,
                spectral,
                position,
                rel_error: (spectral - position).abs() / position,
            })
        })
        .into_iter()
        .collect::<Result<_>>()?;

    let fits = TrialFits {
        w0_intercept: c0,
        w0_rel_error: c0 / (2.0 * lambda) - 1.0,
        w1_slope: log_slope(&cfg.small_y, &w1),
        g_slope: log_slope(&cfg.small_y, &g_vals),
        g_constant,
        tilde_ratio_min: tr_min,
        tilde_ratio_max: tr_max,
        gauss,
        gauss_l1,
        gauss_l1_exponent,
    };

    let beta_sqrt = spec.beta.sqrt();
    let mut claims = Vec::new();
    let mut claim = |name: &str, value: f64, bound: f64, passed: bool| {
        claims.push(Claim {
            name: name.to_string(),
            value,
            bound,
            passed,
        })
    };
    claim(
        "w0_small_y_limit",
        fits.w0_rel_error.abs(),
        cfg.w0_rel_tol,
        fits.w0_rel_error.abs() < cfg.w0_rel_tol,
    );
    claim(
        "w1_small_y_slope",
        fits.w1_slope,
        cfg.w1_slope_min,
        fits.w1_slope >= cfg.w1_slope_min,
    );
    claim(
        "g_small_y_slope",
        fits.g_slope,
        cfg.g_slope_min,
        fits.g_slope >= cfg.g_slope_min,
    );
    claim(
        "g_linear_in_p",
        sym.g_linearity,
        cfg.linearity_tol,
        sym.g_linearity < cfg.linearity_tol,
    );
    claim(
        "weight_even",
        sym.weight_evenness,
        cfg.symmetry_tol,
        sym.weight_evenness < cfg.symmetry_tol,
    );
    claim(
        "tilde_norm_even",
        sym.tilde_evenness,
        cfg.symmetry_tol,
        sym.tilde_evenness < cfg.symmetry_tol,
    );
    claim(
        "g_odd",
        sym.g_oddness,
        cfg.symmetry_tol,
        sym.g_oddness < cfg.symmetry_tol,
    );
    claim(
        "re_w0_odd",
        sym.w0_oddness,
        cfg.symmetry_tol,
        sym.w0_oddness < cfg.symmetry_tol,
    );
    claim(
        "orthogonal_decomposition",
        decomposition_defect,
        cfg.decomposition_tol,
        decomposition_defect < cfg.decomposition_tol,
    );
    claim(
        "tilde_ratio_band",
        tr_max.max(1.0 / tr_min),
        1.0 / beta_sqrt,
        tr_min >= beta_sqrt * (1.0 - 1e-9) && tr_max <= (1.0 + 1e-9) / beta_sqrt,
    );
    let weights_ok = samples.iter().all(|s| s.weight > 0.0 && s.weight <= 1.0);
    claim(
        "weights_in_unit_interval",
        f64::from(u8::from(weights_ok)),
        1.0,
        weights_ok,
    );
    let lo = fits
        .gauss
        .iter()
        .find(|g| g.alpha == 10.0)
        .or(fits.gauss.first());
    let hi = fits
        .gauss
        .iter()
        .find(|g| g.alpha == 40.0)
        .or(fits.gauss.last());
    if let (Some(lo), Some(hi)) = (lo, hi) {
        let r = hi.sup_deviation / lo.sup_deviation;
        claim(
            "gauss_sup_ratio",
            r,
            cfg.gauss_sup_ratio_max,
            r < cfg.gauss_sup_ratio_max,
        );
    }
    claim(
        "gauss_l1_exponent",
        fits.gauss_l1_exponent,
        cfg.gauss_l1_exponent_max,
        fits.gauss_l1_exponent <= cfg.gauss_l1_exponent_max,
    );
    let worst_translation = translation.iter().map(|t| t.rel_error).fold(0.0, f64::max);
    claim(
        "translation_norm_position_space",
        worst_translation,
        cfg.translation_rel_tol,
        worst_translation < cfg.translation_rel_tol,
    );
    let passed = claims.iter().all(|c| c.passed);
    Ok(TrialKernelReport {
        lambda,
        m_lp: pekar.m_lp,
        beyond_critical: samples.iter().filter(|s| s.norms.beyond_critical).count(),
        samples,
        fits,
        symmetry_defects: sym,
        decomposition_defect,
        theta_tail_bound,
        translation,
        claims,
        passed,
    })
}

/// Least-squares `y = c₀ + c₁x`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let c1 = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - c1 * mx, c1)
}

fn y_grid(cfg: &TrialConfig, y_max: f64) -> (Vec<f64>, Vec<f64>) {
    let mut ys = Vec::new();
    let mut ws = Vec::new();
    let width = y_max / cfg.y_panels as f64;
    for p in 0..cfg.y_panels {
        let (x, w) = gauss_legendre(8, p as f64 * width, (p + 1) as f64 * width);
        ys.extend(x);
        ws.extend(w);
    }
    (ys, ws)
}

fn gauss_comparison(
    tk: &TrialKernels<'_>,
    cfg: &TrialConfig,
    lambda: f64,
    alpha: f64,
) -> Result<GaussComparison> {
    let y_max = (cfg.y_width / (alpha * lambda.sqrt())).min(cfg.y_cap);
    let (ys, _) = y_grid(cfg, y_max);
    let far = weight_from_norm(
        tk.w_norms_far([0.0; 3], alpha)?.tilde,
        alpha,
        cfg.delta,
        cfg.eta,
    );
    let (mut sup, mut at) = (far, None);
    for &r in &ys {
        let n = weight_from_norm(
            tk.w_norms([0.0, 0.0, r], [0.0; 3], alpha)?.tilde,
            alpha,
            cfg.delta,
            cfg.eta,
        );
        let d = (n - (-lambda * alpha * alpha * r * r).exp()).abs();
        if d > sup {
            sup = d;
            at = Some(r);
        }
    }
    Ok(GaussComparison {
        alpha,
        y_max,
        sup_deviation: sup,
        sup_at: at,
        far_weight: far,
    })
}

fn gauss_l1(tk: &TrialKernels<'_>, cfg: &TrialConfig, lambda: f64, alpha: f64) -> Result<f64> {
    let (ys, ws) = y_grid(cfg, cfg.l1_radius);
    let mut s = 0.0;
    for (&r, &w) in ys.iter().zip(&ws) {
        let n = weight_from_norm(
            tk.w_norms([0.0, 0.0, r], [0.0; 3], alpha)?.tilde,
            alpha,
            cfg.delta,
            cfg.eta,
        );
        s += w * 4.0 * PI * r * r * (n - (-lambda * alpha * alpha * r * r).exp()).abs();
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_match_closed_forms_at_the_switch() {
        let x: f64 = SERIES_CUTOFF;
        let mut j = [0.0; 4];
        spherical_bessel_all(x, &mut j);
        let d = 1.0 - x.sin() / x;
        assert!((one_minus_j0(x * 0.999_999) / d - 1.0).abs() < 1e-5);
        let a = 1.0 - j[0] + 2.0 * j[2];
        assert!((one_minus_3dj1(x * 0.999_999, &j) / a - 1.0).abs() < 1e-5);
        let b = 1.0 - j[0] - j[2];
        assert!((one_minus_3j1_over_x(x * 0.999_999, &j) / b - 1.0).abs() < 1e-5);
    }

    #[test]
    fn mu3_sine_matches_quadrature() {
        let x: f64 = 2.7;
        let (m, w) = gauss_legendre(40, -1.0, 1.0);
        let q: f64 = m
            .iter()
            .zip(&w)
            .map(|(m, w)| w * m.powi(3) * (x * m).sin())
            .sum();
        let mut j = [0.0; 4];
        spherical_bessel_all(x, &mut j);
        assert!((mu3_sine(&j) - q).abs() < 1e-13);
    }

    #[test]
    fn frame_components() {
        let (r, par, perp) = frame([0.0, 0.0, 2.0], [3.0, 0.0, 4.0]);
        assert_eq!((r, par, perp), (2.0, 4.0, 3.0));
        assert_eq!(frame([0.0; 3], [1.0, 0.0, 0.0]), (0.0, 0.0, 0.0));
    }

    #[test]
    fn weight_parameter_validation() {
        assert!(check_weight_params(1.0, 1.0).is_err());
        assert!(check_weight_params(0.5, 0.0).is_err());
        assert!(check_weight_params(0.0, 2.0).is_ok());
        assert_eq!(weight_from_norm(0.0, 10.0, 0.0, 1.0), 1.0);
    }

    #[test]
    fn linear_fit_recovers_line() {
        let (c0, c1) = linear_fit(&[1.0, 2.0, 3.0], &[5.0, 7.0, 9.0]);
        assert!((c0 - 3.0).abs() < 1e-14 && (c1 - 2.0).abs() < 1e-14);
    }
}
