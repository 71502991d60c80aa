//! Momentum grids for the field-side radial integrals.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{PolaronError, Result};

/// Gauss–Legendre points per panel.
pub const POINTS_PER_PANEL: usize = 8;

/// Composite Gauss–Legendre grid for `∫₀^K g(k) k² dk`.
///
/// Panels are equal in the variable `t ∈ [0, 1]` of the map
/// `k = κ(e^{ct} − 1)`, `c = ln(1 + K/κ)`: roughly uniform spacing below
/// the scale `κ` and geometric spacing above it. Doubling the node count
/// halves every panel, so coarse panel edges are kept (nested refinement).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumGrid {
    /// Nodes in `(0, K)`, strictly increasing.
    pub nodes: Vec<f64>,
    /// Weights for `∫ g(k) k² dk`.
    pub weights: Vec<f64>,
    /// Weights for `∫ g(k) dk`.
    pub dk_weights: Vec<f64>,
    /// Cutoff `K`.
    pub cutoff: f64,
    /// Crossover scale `κ` of the map.
    pub scale: f64,
}

impl MomentumGrid {
    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Always false for a constructed grid.
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫₀^K g(k) k² dk` from nodal values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// Builds a momentum grid with `n_k` nodes (a multiple of
/// [`POINTS_PER_PANEL`]) on `[0, cutoff]` with crossover scale `scale`.
pub fn make_momentum_grid(n_k: usize, cutoff: f64, scale: f64) -> Result<MomentumGrid> {
    if n_k < POINTS_PER_PANEL || n_k % POINTS_PER_PANEL != 0 {
        return Err(PolaronError::config(
            "n_k",
            format!("must be a positive multiple of {POINTS_PER_PANEL}, got {n_k}"),
        ));
    }
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(PolaronError::config(
            "k_max_proxy",
            format!("cutoff must be positive, got {cutoff}"),
        ));
    }
    if !(scale > 0.0 && scale < cutoff) {
        return Err(PolaronError::config(
            "k_scale",
            format!("must lie in (0, cutoff), got {scale}"),
        ));
    }
    let rule = GaussLegendre::new(NonZeroUsize::new(POINTS_PER_PANEL).expect("nonzero"));
    let mut ref_pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
    ref_pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let panels = n_k / POINTS_PER_PANEL;
    let c = (1.0 + cutoff / scale).ln();
    let dt = 1.0 / panels as f64;
    let mut nodes = Vec::with_capacity(n_k);
    let mut weights = Vec::with_capacity(n_k);
    let mut dk_weights = Vec::with_capacity(n_k);
    for p in 0..panels {
        let t0 = p as f64 * dt;
        for &(x, w) in &ref_pairs {
            let t = t0 + 0.5 * dt * (x + 1.0);
            let e = (c * t).exp();
            let k = scale * (e - 1.0);
            let jac = scale * c * e * 0.5 * dt * w;
            nodes.push(k);
            dk_weights.push(jac);
            weights.push(jac * k * k);
        }
    }
    Ok(MomentumGrid {
        nodes,
        weights,
        dk_weights,
        cutoff,
        scale,
    })
}

/// Gauss–Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let rule = GaussLegendre::new(NonZeroUsize::new(n.max(1)).expect("nonzero"));
    let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let half = 0.5 * (b - a);
    pairs
        .iter()
        .map(|&(x, w)| (a + half * (x + 1.0), half * w))
        .unzip()
}
