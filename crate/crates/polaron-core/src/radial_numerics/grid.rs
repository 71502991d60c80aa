//! Radial grids, radial functions and the r²-weighted quadrature.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{PolaronError, Result};

/// Node placement of a [`RadialGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mapping {
    /// Cell midpoints of `n` equal cells on `[0, r_max]`.
    Uniform,
    /// Midpoints in `s ∈ [0, 1]` mapped through
    /// `r = r_max·sinh(β s)/sinh(β)`; clusters nodes near the origin.
    LogStretched,
}

/// Stretch parameter β of [`Mapping::LogStretched`].
pub const LOG_STRETCH: f64 = 3.0;

/// Number of nodes at the outer end carrying the end-point correction
/// (six keeps every corrected weight positive).
const END_CORRECTION_NODES: usize = 6;

/// Quadrature grid for `∫₀^{r_max} f(r) r² dr`.
///
/// The rule is the midpoint rule plus an Euler–Maclaurin end correction
/// at `r_max`. For functions that extend smoothly and evenly through the
/// origin (all regular radial functions) there is no error contribution
/// from `r = 0`; the end correction removes the `h², h⁴, h⁶` terms at
/// `r_max`, so integrands of degree ≤ 5 (including `r²` and `r⁴`) are
/// integrated exactly and functions decaying before `r_max` spectrally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    /// Node radii, strictly increasing and positive.
    pub nodes: Vec<f64>,
    /// Weights for `∫ f r² dr`, all positive.
    pub weights: Vec<f64>,
    /// Outer truncation radius.
    pub r_max: f64,
    /// Node placement.
    pub mapping: Mapping,
}

impl RadialGrid {
    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Always false for a constructed grid (`n ≥ 16`).
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Cell width of a uniform grid.
    ///
    /// # Panics
    /// Panics for a log-stretched grid, which has no single spacing.
    pub fn spacing(&self) -> f64 {
        assert_eq!(
            self.mapping,
            Mapping::Uniform,
            "spacing of a non-uniform grid"
        );
        self.r_max / self.nodes.len() as f64
    }

    /// `∫₀^{r_max} f(r) r² dr` from nodal values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// `∫₀^{r_max} f(r) r² dr` for a closure evaluated at the nodes.
    pub fn integrate_fn(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&r, w)| w * f(r))
            .sum()
    }
}

/// A real radial function sampled on the nodes of a grid.
///
/// `ell` records the angular-momentum sector; the three-dimensional
/// function is `values(r)·Y_ℓm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialFn {
    /// Nodal values.
    pub values: Vec<f64>,
    /// Angular-momentum label.
    pub ell: usize,
}

impl RadialFn {
    /// An `ℓ = 0` function.
    pub fn radial(values: Vec<f64>) -> Self {
        RadialFn { values, ell: 0 }
    }

    /// Samples `f` at the nodes of `grid`.
    pub fn from_fn(grid: &RadialGrid, ell: usize, f: impl Fn(f64) -> f64) -> Self {
        RadialFn {
            values: grid.nodes.iter().map(|&r| f(r)).collect(),
            ell,
        }
    }

    /// Three-dimensional squared norm.
    ///
    /// For `ℓ = 0` this is `4π∫f² r² dr` (the function is `f(|x|)`); for
    /// `ℓ ≥ 1` the angular part is a normalized harmonic, so the norm is
    /// `∫f² r² dr`.
    pub fn norm_sq(&self, grid: &RadialGrid) -> f64 {
        let s: f64 = grid
            .weights
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v * v)
            .sum();
        if self.ell == 0 {
            4.0 * PI * s
        } else {
            s
        }
    }

    /// Errors unless the function lives in the `ℓ = 0` sector.
    pub fn require_radial(&self, op: &str) -> Result<()> {
        if self.ell != 0 {
            return Err(PolaronError::Sector(format!(
                "{op} requires an ℓ = 0 input, got ℓ = {}",
                self.ell
            )));
        }
        Ok(())
    }
}

/// Builds a radial grid with `n` nodes on `[0, r_max]`.
pub fn make_radial_grid(n: usize, r_max: f64, mapping: Mapping) -> Result<RadialGrid> {
    if n < 16 {
        return Err(PolaronError::config(
            "n_r",
            format!("need at least 16 nodes, got {n}"),
        ));
    }
    if !(r_max > 0.0 && r_max.is_finite()) {
        return Err(PolaronError::config(
            "r_max",
            format!("must be positive and finite, got {r_max}"),
        ));
    }
    let ds = 1.0 / n as f64;
    let corr = end_correction(END_CORRECTION_NODES.min(n / 2));
    // Quadrature weights in the unit variable s for ∫₀¹ F(s) ds.
    let mut sw = vec![ds; n];
    for (j, c) in corr.iter().enumerate() {
        sw[n - 1 - j] += ds * c;
    }
    let (nodes, weights) = match mapping {
        Mapping::Uniform => {
            let nodes: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * ds * r_max).collect();
            let weights = nodes
                .iter()
                .zip(&sw)
                .map(|(r, w)| w * r_max * r * r)
                .collect();
            (nodes, weights)
        }
        Mapping::LogStretched => {
            let b = LOG_STRETCH;
            let sb = b.sinh();
            let nodes: Vec<f64> = (0..n)
                .map(|i| r_max * (b * (i as f64 + 0.5) * ds).sinh() / sb)
                .collect();
            let mut weights: Vec<f64> = (0..n)
                .map(|i| {
                    let s = (i as f64 + 0.5) * ds;
                    let dr = r_max * b * (b * s).cosh() / sb;
                    sw[i] * dr * nodes[i] * nodes[i]
                })
                .collect();
            // Close the rule so that the r² moment is exact.
            let total: f64 = weights.iter().sum();
            weights[n - 1] += r_max.powi(3) / 3.0 - total;
            (nodes, weights)
        }
    };
    Ok(RadialGrid {
        nodes,
        weights,
        r_max,
        mapping,
    })
}

/// Relative correction weights `d_j` (in units of the cell width) for the
/// last `m` midpoint nodes, located at `t_j = −(j + ½)` cells from the end.
///
/// The midpoint rule misses `Σ_k c_k h^{2k} F^{(2k−1)}(end)` with the
/// Euler–Maclaurin midpoint coefficients `c_k`. Requiring the corrected
/// rule to be exact for `F = (r − end)^q`, `q < m`, gives a Vandermonde
/// system for the `d_j`.
fn end_correction(m: usize) -> Vec<f64> {
    // c_k = −B_{2k}(½)/(2k)!
    const C: [f64; 4] = [
        1.0 / 24.0,
        -7.0 / 5760.0,
        31.0 / 967_680.0,
        -127.0 / (3840.0 * 40_320.0),
    ];
    let t: Vec<f64> = (0..m).map(|j| -(j as f64 + 0.5)).collect();
    let mut a = vec![vec![0.0; m]; m];
    let mut rhs = vec![0.0; m];
    let mut fact = 1.0;
    for q in 0..m {
        if q > 0 {
            fact *= q as f64;
        }
        for j in 0..m {
            a[q][j] = t[j].powi(q as i32);
        }
        if q % 2 == 1 && (q + 1) / 2 <= C.len() {
            rhs[q] = C[(q + 1) / 2 - 1] * fact;
        }
    }
    solve_dense(a, rhs)
}

/// Gaussian elimination with partial pivoting for the small systems used
/// to construct quadrature rules.
pub(crate) fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_nodes_are_midpoints() {
        let g = make_radial_grid(16, 1.0, Mapping::Uniform).unwrap();
        let h = 1.0 / 16.0;
        for (i, r) in g.nodes.iter().enumerate() {
            assert!((r - (i as f64 + 1.0) * h + h / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn volume_moment_is_exact() {
        for mapping in [Mapping::Uniform, Mapping::LogStretched] {
            let g = make_radial_grid(200, 30.0, mapping).unwrap();
            let v = g.integrate_fn(|_| 1.0);
            assert!((v / 9000.0 - 1.0).abs() < 1e-10, "{mapping:?}: {v}");
        }
    }

    #[test]
    fn gaussian_moment_is_spectral() {
        for mapping in [Mapping::Uniform, Mapping::LogStretched] {
            let g = make_radial_grid(400, 12.0, mapping).unwrap();
            let v = g.integrate_fn(|r| (-r * r).exp());
            assert!((v - PI.sqrt() / 4.0).abs() < 1e-8, "{mapping:?}: {v}");
        }
    }

    #[test]
    fn even_polynomials_are_exact() {
        let g = make_radial_grid(64, 2.0, Mapping::Uniform).unwrap();
        // Total integrand degree ≤ 5 is within the design order.
        for p in 0..2 {
            let v = g.integrate_fn(|r| r.powi(2 * p));
            let exact = 2f64.powi(2 * p + 3) / (2 * p + 3) as f64;
            assert!((v / exact - 1.0).abs() < 1e-12, "p={p}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            make_radial_grid(8, 1.0, Mapping::Uniform),
            Err(PolaronError::Config { ref field, .. }) if field == "n_r"
        ));
        assert!(matches!(
            make_radial_grid(32, -1.0, Mapping::Uniform),
            Err(PolaronError::Config { ref field, .. }) if field == "r_max"
        ));
    }

    #[test]
    fn weights_positive_and_nodes_increasing() {
        for mapping in [Mapping::Uniform, Mapping::LogStretched] {
            let g = make_radial_grid(100, 5.0, mapping).unwrap();
            assert!(g.weights.iter().all(|&w| w > 0.0));
            assert!(g.nodes.windows(2).all(|w| w[0] < w[1] && w[0] > 0.0));
        }
    }
}
