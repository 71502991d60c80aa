//! Radial Pekar minimizer by alternating minimization.
//!
//! With `ρ = ψ²` the classical field and the electron potential are
//! `φ = ρ * 1/(2π²|x|²)` and `V^φ = −2 (φ * 1/(2π²|x|²)) = −(1/2π) ρ * 1/|x|`.
//! The solver uses the Coulomb form of `V^φ` (fourth-order Newton shells);
//! the inverse-square forms are provided separately and cross-checked.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{PolaronError, Result};
use crate::radial_numerics::{
    coulomb_convolve, gauss_legendre, inverse_square_convolve, inverse_square_convolve_with_tail,
    make_radial_grid, radial_operator, Mapping, RadialFn, RadialGrid, SymPenta,
};

/// Numerical knobs of the Pekar solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PekarConfig {
    /// Number of radial cells.
    pub n_r: usize,
    /// Outer (Dirichlet) radius.
    pub r_max: f64,
    /// Stop when successive energies differ by less than this.
    pub tol_energy: f64,
    /// ... and successive states by less than this in `L²`.
    pub tol_state: f64,
    /// Iteration cap of the alternating minimization.
    pub max_iter: usize,
}

impl Default for PekarConfig {
    fn default() -> Self {
        PekarConfig {
            n_r: 800,
            r_max: 650.0,
            tol_energy: 1e-10,
            tol_state: 1e-8,
            max_iter: 500,
        }
    }
}

impl PekarConfig {
    /// Checks ranges of all fields.
    pub fn validate(&self) -> Result<()> {
        if self.n_r < 16 {
            return Err(PolaronError::config("n_r", "must be at least 16"));
        }
        if !(self.r_max > 0.0 && self.r_max.is_finite()) {
            return Err(PolaronError::config("r_max", "must be positive"));
        }
        if !(self.tol_energy > 0.0) {
            return Err(PolaronError::config("tol_energy", "must be positive"));
        }
        if !(self.tol_state > 0.0) {
            return Err(PolaronError::config("tol_state", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(PolaronError::config("max_iter", "must be positive"));
        }
        Ok(())
    }
}

/// Converged Pekar minimizer and derived scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PekarSolution {
    /// Uniform radial grid of the solve.
    pub grid: RadialGrid,
    /// Electron state, `4π∫ψ² r² dr = 1`, positive.
    pub psi: RadialFn,
    /// Classical field `φ = ψ² * 1/(2π²|x|²)`, positive.
    pub phi: RadialFn,
    /// Electron potential `V^φ` of the converged state.
    pub potential: RadialFn,
    /// Pekar energy `e_pek = T − ‖φ‖²`.
    pub e_pek: f64,
    /// `λ_pek = e_pek − ‖φ‖²`, the ground-state energy of `−Δ + V^φ`.
    pub lambda_pek: f64,
    /// Kinetic energy `T = ‖∇ψ‖²`.
    pub kinetic: f64,
    /// `‖φ‖²`.
    pub phi_norm_sq: f64,
    /// `‖∇φ‖²`.
    pub grad_phi_norm_sq: f64,
    /// Effective mass `(2/3)‖∇φ‖²`.
    pub m_lp: f64,
    /// Gaussian rate `(1/6)‖∇φ‖²`.
    pub lambda_gauss: f64,
    /// Number of alternating-minimization steps.
    pub iterations: usize,
    /// Self-consistency residual `‖(−Δ + V^φ − λ_pek)ψ‖`.
    pub residual: f64,
    /// Relative virial defect `|2T − ‖φ‖²|/‖φ‖²`.
    pub virial_residual: f64,
    /// Energy `E(ψ_k)` after each step.
    pub energy_trace: Vec<f64>,
}

impl PekarSolution {
    /// `u = √(4π)·r·ψ`, normalized as `h Σ u² = 1`.
    pub fn reduced_state(&self) -> Vec<f64> {
        let c = (4.0 * PI).sqrt();
        self.psi
            .values
            .iter()
            .zip(&self.grid.nodes)
            .map(|(p, r)| c * r * p)
            .collect()
    }

    /// Fourier transform of the density, `ρ̂(k) = 4π∫ψ² j₀(kr) r² dr`.
    pub fn density_transform(&self, k: f64) -> f64 {
        let h = self.grid.spacing();
        let u = self.reduced_state();
        density_transform_from(&u, &self.grid.nodes, h, k)
    }
}

fn density_transform_from(u: &[f64], r: &[f64], h: f64, k: f64) -> f64 {
    u.iter()
        .zip(r)
        .map(|(u, r)| {
            let x = k * r;
            let j0 = if x < 1e-6 {
                1.0 - x * x / 6.0
            } else {
                x.sin() / x
            };
            u * u * j0
        })
        .sum::<f64>()
        * h
}

/// `φ = ψ² * 1/(2π²|x|²)` on the grid of `psi`.
pub fn phonon_field(psi: &RadialFn, grid: &RadialGrid) -> Result<RadialFn> {
    psi.require_radial("phonon_field")?;
    let norm = psi.norm_sq(grid);
    if (norm - 1.0).abs() > 1e-8 {
        return Err(PolaronError::Precondition(format!(
            "phonon_field needs a normalized state, got norm² = {norm}"
        )));
    }
    let rho = RadialFn::radial(psi.values.iter().map(|p| p * p).collect());
    inverse_square_convolve(&rho, grid)
}

/// `V^φ = −∫φ(y)/(π²|x−y|²) dy = −2·(φ * 1/(2π²|x|²))`.
///
/// The field is continued beyond `r_max` by its `1/r²` far field matched
/// at the last node.
pub fn effective_potential(phi: &RadialFn, grid: &RadialGrid) -> Result<RadialFn> {
    phi.require_radial("effective_potential")?;
    let n = grid.len();
    let r_last = grid.nodes[n - 1];
    let tail = phi.values[n - 1] * r_last * r_last;
    let conv = inverse_square_convolve_with_tail(phi, grid, tail)?;
    Ok(RadialFn::radial(
        conv.values.iter().map(|v| -2.0 * v).collect(),
    ))
}

/// `V^φ` from the density through the Coulomb identity,
/// `V^φ = −(1/2π)·(ψ² * 1/|x|)`.
pub fn effective_potential_from_density(psi: &RadialFn, grid: &RadialGrid) -> Result<RadialFn> {
    let rho = RadialFn::radial(psi.values.iter().map(|p| p * p).collect());
    let vc = coulomb_convolve(&rho, grid)?;
    Ok(RadialFn::radial(
        vc.values.iter().map(|v| -v / (2.0 * PI)).collect(),
    ))
}

/// Lowest eigenpair of `−Δ + V` in sector `ell` on a uniform grid.
///
/// Returns the eigenvalue and the positive radial eigenfunction `f`,
/// normalized with the measure of [`RadialFn::norm_sq`].
pub fn radial_ground_state(
    potential: &RadialFn,
    ell: usize,
    grid: &RadialGrid,
) -> Result<(f64, RadialFn)> {
    let h = grid.spacing();
    if potential.values.iter().any(|v| !v.is_finite()) {
        return Err(PolaronError::Precondition(
            "potential has non-finite values".into(),
        ));
    }
    let op = radial_operator(h, ell, &potential.values);
    let (lambda, u) = lowest_eigenpair(&op, h, 200)?;
    let c = if ell == 0 { (4.0 * PI).sqrt() } else { 1.0 };
    let values = u
        .iter()
        .zip(&grid.nodes)
        .map(|(u, r)| u / (c * r))
        .collect();
    Ok((lambda, RadialFn { values, ell }))
}

/// Lowest eigenpair of a symmetric pentadiagonal operator: Sturm-count
/// bisection to isolate the eigenvalue, then shifted inverse iteration.
/// The vector is normalized as `h Σ u² = 1` with positive sum.
pub(crate) fn lowest_eigenpair(op: &SymPenta, h: f64, max_steps: usize) -> Result<(f64, Vec<f64>)> {
    let n = op.len();
    let (mut lo, ghi) = op.gershgorin();
    // Rayleigh quotient of a smooth positive bump bounds λ₀ from above.
    let trial: Vec<f64> = (0..n)
        .map(|i| ((i as f64 + 0.5) * PI / n as f64).sin())
        .collect();
    let tn: f64 = trial.iter().map(|x| x * x).sum();
    let mut hi = (op.quad_form(&trial) / tn).min(ghi);
    if op.count_below(hi) == 0 {
        hi = ghi + 1.0;
    }
    let mut steps = 0;
    while hi - lo > 1e-10 * lo.abs().max(hi.abs()) && steps < 200 {
        let mid = 0.5 * (lo + hi);
        if op.count_below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        steps += 1;
    }
    // Shift slightly below the isolated eigenvalue.
    let sigma = lo - 1e-6 * lo.abs().max(hi.abs()).max(hi - lo);
    let fac = op.shifted(sigma).factor()?;
    let mut u = trial;
    normalize(&mut u, h);
    let mut lambda = f64::NAN;
    let mut au = vec![0.0; n];
    // Round-off floor of the residual for this operator.
    let floor = 1e3 * f64::EPSILON * ghi.abs().max(lo.abs());
    let mut prev_res = f64::INFINITY;
    for step in 0..max_steps {
        fac.solve_in_place(&mut u);
        normalize(&mut u, h);
        op.apply(&u, &mut au);
        let rq: f64 = u.iter().zip(&au).map(|(a, b)| a * b).sum::<f64>() * h;
        let res: f64 = u
            .iter()
            .zip(&au)
            .map(|(a, b)| (b - rq * a).powi(2))
            .sum::<f64>()
            .sqrt()
            * h.sqrt();
        let scale = rq.abs().max(1e-300);
        lambda = rq;
        if step >= 1 && res <= 1e-10 * scale.max(1e-6) {
            break;
        }
        // Stagnation at the round-off floor.
        if step >= 3 && res <= floor && res >= 0.5 * prev_res {
            break;
        }
        prev_res = res;
        if step + 1 == max_steps {
            return Err(PolaronError::Convergence {
                iterations: max_steps,
                detail: format!("inverse iteration residual {res:e} at eigenvalue {rq:e}"),
            });
        }
    }
    Ok((lambda, u))
}

fn normalize(u: &mut [f64], h: f64) {
    let s: f64 = u.iter().map(|x| x * x).sum::<f64>() * h;
    let sign = if u.iter().sum::<f64>() < 0.0 {
        -1.0
    } else {
        1.0
    };
    let inv = sign / s.sqrt();
    for x in u.iter_mut() {
        *x *= inv;
    }
}

/// Energy pieces of a normalized reduced state `u` on a uniform grid:
/// `(T, ‖φ‖², potential V^φ)`.
fn energy_terms(
    u: &[f64],
    grid: &RadialGrid,
    kinetic_op: &SymPenta,
) -> Result<(f64, f64, Vec<f64>)> {
    let h = grid.spacing();
    let t = kinetic_op.quad_form(u) * h;
    let psi = reduced_to_psi(u, grid);
    let v = effective_potential_from_density(&psi, grid)?;
    // ⟨ψ, V ψ⟩ = h Σ u² V = −2‖φ‖²
    let pot: f64 = u.iter().zip(&v.values).map(|(u, v)| u * u * v).sum::<f64>() * h;
    Ok((t, -0.5 * pot, v.values))
}

fn reduced_to_psi(u: &[f64], grid: &RadialGrid) -> RadialFn {
    let c = (4.0 * PI).sqrt();
    RadialFn::radial(
        u.iter()
            .zip(&grid.nodes)
            .map(|(u, r)| u / (c * r))
            .collect(),
    )
}

/// Converged electron side of the Pekar problem, without the field.
///
/// This is all the Hessian needs; it avoids the quadratic-cost field
/// evaluation on very fine grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectronState {
    /// Uniform radial grid.
    pub grid: RadialGrid,
    /// Reduced state `u = √(4π)·r·ψ`, `h Σ u² = 1`, positive.
    pub u: Vec<f64>,
    /// `V^φ` generated by `u`.
    pub potential: Vec<f64>,
    /// `e_pek = T − ‖φ‖²`.
    pub e_pek: f64,
    /// `λ_pek = e_pek − ‖φ‖²`.
    pub lambda_pek: f64,
    /// `T = ‖∇ψ‖²`.
    pub kinetic: f64,
    /// `‖φ‖²` (Coulomb route).
    pub phi_norm_sq: f64,
    /// Number of alternating-minimization steps.
    pub iterations: usize,
    /// Energy after each step.
    pub energy_trace: Vec<f64>,
}

/// Alternating minimization `ψ → V^φ → ground state of −Δ + V^φ` for the
/// electron only.
///
/// Starts from the optimal Gaussian `(2a/π)^{3/4}e^{−ar²}`,
/// `a = 1/(144π³)`.
pub fn solve_electron_state(cfg: &PekarConfig) -> Result<ElectronState> {
    cfg.validate()?;
    let grid = make_radial_grid(cfg.n_r, cfg.r_max, Mapping::Uniform)?;
    let h = grid.spacing();
    let kinetic_op = radial_operator(h, 0, &vec![0.0; cfg.n_r]);
    let a = 1.0 / (144.0 * PI.powi(3));
    let c = (4.0 * PI).sqrt() * (2.0 * a / PI).powf(0.75);
    let mut u: Vec<f64> = grid
        .nodes
        .iter()
        .map(|r| c * r * (-a * r * r).exp())
        .collect();
    normalize(&mut u, h);

    let (mut t, mut pn, mut v) = energy_terms(&u, &grid, &kinetic_op)?;
    let mut energy = t - pn;
    let mut trace = vec![energy];
    let mut iterations = 0;
    loop {
        if iterations >= cfg.max_iter {
            return Err(PolaronError::Convergence {
                iterations,
                detail: format!(
                    "energy trace tail {:?}",
                    &trace[trace.len().saturating_sub(5)..]
                ),
            });
        }
        iterations += 1;
        let op = radial_operator(h, 0, &v);
        let (_, u_new) = lowest_eigenpair(&op, h, 200)?;
        let (t_new, pn_new, v_new) = energy_terms(&u_new, &grid, &kinetic_op)?;
        let e_new = t_new - pn_new;
        // Alternating minimization never raises the energy; increases at the
        // level of the energy tolerance are round-off.
        if e_new > energy + cfg.tol_energy.max(1e-12 * energy.abs()) {
            return Err(PolaronError::Numerical(format!(
                "energy increased from {energy:e} to {e_new:e} at iteration {iterations}"
            )));
        }
        let dstate = u
            .iter()
            .zip(&u_new)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
            * h.sqrt();
        let de = (energy - e_new).abs();
        u = u_new;
        t = t_new;
        pn = pn_new;
        v = v_new;
        energy = e_new;
        trace.push(energy);
        if de < cfg.tol_energy && dstate < cfg.tol_state {
            break;
        }
    }
    if !(energy < 0.0) || u.iter().any(|&p| p <= 0.0) {
        return Err(PolaronError::Numerical(format!(
            "converged state violates e_pek < 0 or ψ > 0 (e_pek = {energy:e})"
        )));
    }
    Ok(ElectronState {
        grid,
        u,
        potential: v,
        e_pek: energy,
        lambda_pek: energy - pn,
        kinetic: t,
        phi_norm_sq: pn,
        iterations,
        energy_trace: trace,
    })
}

/// Full Pekar solve: [`solve_electron_state`] plus the classical field,
/// the self-consistency residual and the effective mass.
pub fn solve_pekar(cfg: &PekarConfig) -> Result<PekarSolution> {
    let st = solve_electron_state(cfg)?;
    let grid = st.grid;
    let h = grid.spacing();
    let u = st.u;
    let psi = reduced_to_psi(&u, &grid);
    let op = radial_operator(h, 0, &st.potential);
    let mut au = vec![0.0; u.len()];
    op.apply(&u, &mut au);
    let residual = au
        .iter()
        .zip(&u)
        .map(|(a, b)| (a - st.lambda_pek * b).powi(2))
        .sum::<f64>()
        .sqrt()
        * h.sqrt();
    let phi = phonon_field(&psi, &grid)?;
    let grad = grad_phi_norm_sq_fourier(&u, &grid);
    let (m_lp, lambda_gauss) = mass_from_grad(grad);
    let (t, pn) = (st.kinetic, st.phi_norm_sq);
    Ok(PekarSolution {
        grid,
        psi,
        phi,
        potential: RadialFn::radial(st.potential),
        e_pek: st.e_pek,
        lambda_pek: st.lambda_pek,
        kinetic: t,
        phi_norm_sq: pn,
        grad_phi_norm_sq: grad,
        m_lp,
        lambda_gauss,
        iterations: st.iterations,
        residual,
        virial_residual: (2.0 * t - pn).abs() / pn,
        energy_trace: st.energy_trace,
    })
}

fn mass_from_grad(grad: f64) -> (f64, f64) {
    (2.0 / 3.0 * grad, grad / 6.0)
}

/// `‖∇φ‖² = (1/(2π²))∫₀^∞ k² ρ̂(k)² dk`, with the momentum integral
/// carried to the resolution limit `π/(2h)` of the grid.
fn grad_phi_norm_sq_fourier(u: &[f64], grid: &RadialGrid) -> f64 {
    let h = grid.spacing();
    let k_top = PI / (2.0 * h);
    let panels = 64;
    let mut acc = 0.0;
    for p in 0..panels {
        let a = k_top * p as f64 / panels as f64;
        let b = k_top * (p + 1) as f64 / panels as f64;
        let (ks, ws) = gauss_legendre(12, a, b);
        for (k, w) in ks.iter().zip(&ws) {
            let f = density_transform_from(u, &grid.nodes, h, *k);
            acc += w * k * k * f * f;
        }
    }
    acc / (2.0 * PI * PI)
}

/// Effective mass `(2/3)‖∇φ‖²` and Gaussian rate `(1/6)‖∇φ‖²` from a
/// position-space field on a uniform grid.
///
/// `‖∇φ‖² = 4π∫φ'² r² dr` with fourth-order central differences; beyond
/// `r_max` the `c/r²` far field adds `16πc²/(3 r_max³)`.
pub fn effective_mass(phi: &RadialFn, grid: &RadialGrid) -> Result<(f64, f64)> {
    phi.require_radial("effective_mass")?;
    let h = grid.spacing();
    let f = &phi.values;
    let n = f.len();
    let at = |i: isize| -> f64 {
        if i < 0 {
            f[(-i - 1) as usize]
        } else if (i as usize) < n {
            f[i as usize]
        } else {
            // Continue with the far field c/r².
            let r_last = grid.nodes[n - 1];
            let r = (i as f64 + 0.5) * h;
            f[n - 1] * r_last * r_last / (r * r)
        }
    };
    let mut s = 0.0;
    for i in 0..n as isize {
        let d = (at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2)) / (12.0 * h);
        s += grid.weights[i as usize] * d * d;
    }
    let r_last = grid.nodes[n - 1];
    let c = f[n - 1] * r_last * r_last;
    let grad = 4.0 * PI * s + 16.0 * PI * c * c / (3.0 * grid.r_max.powi(3));
    Ok(mass_from_grad(grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, r: f64) -> RadialGrid {
        make_radial_grid(n, r, Mapping::Uniform).unwrap()
    }

    #[test]
    fn box_ground_state() {
        let g = grid(400, 3.0);
        let (e, f) = radial_ground_state(&RadialFn::radial(vec![0.0; 400]), 0, &g).unwrap();
        let exact = (PI / 3.0).powi(2);
        assert!((e / exact - 1.0).abs() < 1e-8, "{e} vs {exact}");
        assert!((f.norm_sq(&g) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn hydrogen_ground_state() {
        let g = grid(4000, 60.0);
        let v = RadialFn::from_fn(&g, 0, |r| -1.0 / r);
        let (e, _) = radial_ground_state(&v, 0, &g).unwrap();
        assert!((e + 0.25).abs() < 1e-4, "{e}");
    }

    #[test]
    fn oscillator_ground_state() {
        let g = grid(1000, 10.0);
        let v = RadialFn::from_fn(&g, 0, |r| r * r);
        let (e, f) = radial_ground_state(&v, 0, &g).unwrap();
        assert!((e - 3.0).abs() < 1e-4, "{e}");
        assert!(f.values.iter().all(|&x| x > 0.0));
        // ℓ = 1 oscillator level is 5.
        let (e1, _) = radial_ground_state(&v, 1, &g).unwrap();
        assert!((e1 - 5.0).abs() < 1e-4, "{e1}");
    }
}
