//! Free-resolvent asymptotics for the parts of the traces that are not
//! resolved by explicit sectors.
//!
//! At large momentum the reduced resolvent acts on `ψ(r) j_ℓ(kr)` like
//! `1/k²` (the free radial equation). The sector trace then reduces to
//! `tr(4T̃_ℓ) ≈ (8/π)∫ψ² r³ J_ℓ(Kr) dr` with
//! `J_ℓ(X) = ∫₀^X x^{-2} j_ℓ(x)² dx`, and summing over `ℓ > L` with
//! `Σ_ℓ(2ℓ+1)j_ℓ² = 1` replaces `j_ℓ²` by `1 − S_L`,
//! `S_L = Σ_{ℓ≤L}(2ℓ+1)j_ℓ²`.

use std::f64::consts::PI;

use crate::radial_numerics::{gauss_legendre, spherical_bessel_all};

/// Upper end of the tabulated range of the auxiliary integrals.
const X_CAP: f64 = 4000.0;
/// Panel width of the tables.
const PANEL: f64 = 0.5;
const GL_POINTS: usize = 8;

/// Cumulative integral `∫₀^X g(x) dx` tabulated on `[0, X_CAP]`.
struct CumulativeTable {
    edges: Vec<f64>,
    gl: (Vec<f64>, Vec<f64>),
    g: Box<dyn Fn(f64) -> f64 + Sync + Send>,
}

impl CumulativeTable {
    fn new(g: Box<dyn Fn(f64) -> f64 + Sync + Send>) -> Self {
        let panels = (X_CAP / PANEL) as usize;
        let gl = gauss_legendre(GL_POINTS, -1.0, 1.0);
        let mut edges = Vec::with_capacity(panels + 1);
        let mut acc = 0.0;
        edges.push(0.0);
        for p in 0..panels {
            acc += integrate_panel(&*g, &gl, p as f64 * PANEL, (p + 1) as f64 * PANEL);
            edges.push(acc);
        }
        CumulativeTable { edges, gl, g }
    }

    /// `∫₀^X g` for `X ≤ X_CAP`.
    fn eval(&self, x: f64) -> f64 {
        let x = x.min(X_CAP);
        let p = ((x / PANEL) as usize).min(self.edges.len() - 2);
        let a = p as f64 * PANEL;
        self.edges[p] + integrate_panel(&*self.g, &self.gl, a, x)
    }
}

fn integrate_panel(g: &dyn Fn(f64) -> f64, gl: &(Vec<f64>, Vec<f64>), a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let half = 0.5 * (b - a);
    gl.0.iter()
        .zip(&gl.1)
        .map(|(t, w)| w * half * g(a + half * (t + 1.0)))
        .sum()
}

/// `1 − S_L(x) = Σ_{ℓ>L}(2ℓ+1)j_ℓ(x)²`, computed without cancellation.
fn high_order_weight(l_top: usize, x: f64) -> f64 {
    if x > 2.0 * l_top as f64 + 10.0 {
        let mut j = vec![0.0; l_top + 1];
        spherical_bessel_all(x, &mut j);
        let s: f64 = j
            .iter()
            .enumerate()
            .map(|(l, v)| (2 * l + 1) as f64 * v * v)
            .sum();
        1.0 - s
    } else {
        let hi = l_top + 30 + (2.0 * x) as usize;
        let mut j = vec![0.0; hi + 1];
        spherical_bessel_all(x, &mut j);
        j.iter()
            .enumerate()
            .skip(l_top + 1)
            .map(|(l, v)| (2 * l + 1) as f64 * v * v)
            .sum()
    }
}

/// Free-resolvent estimates for one angular-momentum order `L`.
pub(crate) struct FreeAsymptotics {
    ell: usize,
    /// `∫₀^X x^{-2} j_L(x)² dx`
    sector: CumulativeTable,
    /// `∫₀^X x^{-2} (1 − S_L(x)) dx`
    tail: CumulativeTable,
    /// `∫₀^X (1 − S_L(x)) dx`
    grad_tail: CumulativeTable,
    /// `∫₀^X j_L(x)² dx`
    grad_sector: CumulativeTable,
}

impl FreeAsymptotics {
    pub(crate) fn new(ell: usize) -> Self {
        let l = ell;
        let jl = move |x: f64| {
            let mut j = vec![0.0; l + 1];
            spherical_bessel_all(x, &mut j);
            j[l] * j[l]
        };
        FreeAsymptotics {
            ell,
            sector: CumulativeTable::new(Box::new(
                move |x| if x == 0.0 { 0.0 } else { jl(x) / (x * x) },
            )),
            tail: CumulativeTable::new(Box::new(move |x| {
                if x == 0.0 {
                    0.0
                } else {
                    high_order_weight(l, x) / (x * x)
                }
            })),
            grad_tail: CumulativeTable::new(Box::new(move |x| high_order_weight(l, x))),
            grad_sector: CumulativeTable::new(Box::new(jl)),
        }
    }

    fn beyond_cap_inverse_sq(&self, x: f64, mean_weight_coeff: f64, constant: f64) -> f64 {
        // ∫_{X_CAP}^X x^{-2}(c − a/x²) dx for the non-oscillating average.
        if x <= X_CAP {
            return 0.0;
        }
        constant * (1.0 / X_CAP - 1.0 / x) - mean_weight_coeff / 3.0 * (X_CAP.powi(-3) - x.powi(-3))
    }

    /// `J_L(X)`.
    fn sector_integral(&self, x: f64) -> f64 {
        // Beyond the table j_L² averages to 1/(2x²).
        self.sector.eval(x)
            + if x > X_CAP {
                (X_CAP.powi(-3) - x.powi(-3)) / 6.0
            } else {
                0.0
            }
    }

    /// `∫₀^X x^{-2}(1 − S_L) dx`.
    fn tail_integral(&self, x: f64) -> f64 {
        let a = ((self.ell + 1) * (self.ell + 1)) as f64 / 2.0;
        self.tail.eval(x) + self.beyond_cap_inverse_sq(x, a, 1.0)
    }

    /// `∫₀^X (1 − S_L) dx`.
    fn grad_tail_integral(&self, x: f64) -> f64 {
        let a = ((self.ell + 1) * (self.ell + 1)) as f64 / 2.0;
        self.grad_tail.eval(x)
            + if x > X_CAP {
                (x - X_CAP) - a * (1.0 / X_CAP - 1.0 / x)
            } else {
                0.0
            }
    }

    /// `∫₀^X j_L² dx`.
    fn grad_sector_integral(&self, x: f64) -> f64 {
        self.grad_sector.eval(x)
            + if x > X_CAP {
                0.5 * (1.0 / X_CAP - 1.0 / x)
            } else {
                0.0
            }
    }
}

/// Electron-side data entering the free estimates: reduced state `u`
/// (`h Σ u² = 1`, `u² = 4π r² ψ²`), nodes and spacing.
pub(crate) struct ElectronDensity<'a> {
    pub u: &'a [f64],
    pub r: &'a [f64],
    pub h: f64,
}

impl ElectronDensity<'_> {
    /// `(8/π)∫ψ² r^p F(Kr) dr` with `ψ² r² dr = u² dr/(4π)`.
    fn moment(&self, power: i32, cutoff: f64, f: impl Fn(f64) -> f64) -> f64 {
        let s: f64 = self
            .u
            .iter()
            .zip(self.r)
            .map(|(u, r)| u * u * r.powi(power - 2) * f(cutoff * r))
            .sum();
        8.0 / PI * s * self.h / (4.0 * PI)
    }
}

/// Free estimate of `tr(4T̃_L)` (one copy of the `2L+1` degenerate
/// blocks) at cutoff `K`.
pub(crate) fn free_sector_trace(fa: &FreeAsymptotics, el: &ElectronDensity, cutoff: f64) -> f64 {
    el.moment(3, cutoff, |x| fa.sector_integral(x))
}

/// Free estimate of `Σ_{ℓ>L}(2ℓ+1) tr(4T̃_ℓ)` at cutoff `K`.
pub(crate) fn free_tail_trace(fa: &FreeAsymptotics, el: &ElectronDensity, cutoff: f64) -> f64 {
    el.moment(3, cutoff, |x| fa.tail_integral(x))
}

/// Free estimate of `∫k²(4T̃_L)(k,k)k² dk` (one block).
pub(crate) fn free_sector_grad_trace(
    fa: &FreeAsymptotics,
    el: &ElectronDensity,
    cutoff: f64,
) -> f64 {
    el.moment(1, cutoff, |x| fa.grad_sector_integral(x))
}

/// Free estimate of `Σ_{ℓ>L}(2ℓ+1)∫k²(4T̃_ℓ)(k,k)k² dk`.
pub(crate) fn free_tail_grad_trace(fa: &FreeAsymptotics, el: &ElectronDensity, cutoff: f64) -> f64 {
    el.moment(1, cutoff, |x| fa.grad_tail_integral(x))
}

/// Three-dimensional large-momentum tail of `Tr(4T)` beyond the cutoff:
/// `(2/π²)(1/K + 4T/(9K³))`, from `⟨ψ e^{ikx}, R ψ e^{ikx}⟩ ≈ 1/k² + (4T/3)/k⁴`.
pub fn momentum_tail_trace(cutoff: f64, kinetic: f64) -> f64 {
    2.0 / (PI * PI) * (1.0 / cutoff + 4.0 * kinetic / (9.0 * cutoff.powi(3)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sector_integral_matches_closed_form() {
        // ∫₀^∞ x^{-2} j_ℓ(x)² dx = π/((2ℓ−1)(2ℓ+1)(2ℓ+3)), ℓ ≥ 1
        for l in [1usize, 2, 5] {
            let fa = FreeAsymptotics::new(l);
            let v = fa.sector_integral(1e9);
            let exact = PI / ((2 * l - 1) * (2 * l + 1) * (2 * l + 3)) as f64;
            assert!((v / exact - 1.0).abs() < 1e-9, "l={l}: {v} vs {exact}");
        }
    }

    #[test]
    fn tail_integral_sums_sector_integrals() {
        // ∫x^{-2}(1 − S_L) = Σ_{ℓ>L} (2ℓ+1) J_ℓ(∞) = (π/4)(1/(2L+1) + 1/(2L+3))
        for l in [2usize, 6] {
            let fa = FreeAsymptotics::new(l);
            let v = fa.tail_integral(1e9);
            let exact = PI / 4.0 * (1.0 / (2 * l + 1) as f64 + 1.0 / (2 * l + 3) as f64);
            assert!((v / exact - 1.0).abs() < 1e-8, "l={l}: {v} vs {exact}");
        }
    }

    #[test]
    fn momentum_tail_leading_term() {
        let t = momentum_tail_trace(1e6, 0.0);
        assert!((t * 1e6 * PI * PI / 2.0 - 1.0).abs() < 1e-12);
    }
}
