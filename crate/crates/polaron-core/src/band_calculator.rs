//! Energy-band upper bounds, the essential-spectrum edge and bound-state
//! counts over a grid of couplings `α` and momenta `P`.
//!
//! All energies are in the units of the Pekar functional. With the ladder
//! `Λ⁽ⁿ⁾`, the zero-point energy `ZPE = ½Tr(√H − 1)` and the mass `m`:
//!
//! ```text
//! band_n(α, P) = e_pek + (ZPE + Λ⁽ⁿ⁾)/α² + P²/(2α⁴m)
//! edge_lower   = e_pek + ZPE/α² − α^{-(2+1/30)} + α^{-2}
//! edge_upper   = band_0(α, 0) + α^{-2}
//! ```
//!
//! The error terms of the asymptotic band bound are not added; counts use
//! an explicit constant `c_err` (0 by default).

use serde::{Deserialize, Serialize};

use crate::error::{PolaronError, Result};
use crate::exec::Exec;

/// Exponent `s` of the ground-state lower bound error `α^{-(2+s)}`.
pub const LOWER_BOUND_EXPONENT: f64 = 1.0 / 30.0;

/// Scalars and ladders entering the band formulas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandInputs {
    pub e_pek: f64,
    /// Effective mass `m_lp = (2/3)‖∇φ‖²`.
    pub m_lp: f64,
    /// `½Tr(√H − 1)` including the kernel modes.
    pub zpe: f64,
    /// Ladder energies `Λ⁽⁰⁾ = 0 ≤ Λ⁽¹⁾ ≤ …`.
    pub ladder: Vec<f64>,
    /// Single-mode energies `√λ⁽¹⁾ ≤ √λ⁽²⁾ ≤ …` with multiplicity.
    pub sqrt_lambda: Vec<f64>,
}

/// Which list the count compares against the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountCriterion {
    /// Multiset sums `Λ⁽ⁿ⁾`.
    Ladder,
    /// `√λ⁽ⁿ⁾` for `n ≥ 1` plus the ground band.
    SqrtLambda,
}

fn check_alpha(alpha: f64, min: f64) -> Result<()> {
    if !(alpha >= min && alpha.is_finite()) {
        return Err(PolaronError::config(
            "alpha",
            format!("must be finite and ≥ {min}, got {alpha}"),
        ));
    }
    Ok(())
}

/// Upper bound `μ_n` on the `n`-th band at coupling `α` and momentum `P`.
pub fn band_upper(inputs: &BandInputs, n: usize, alpha: f64, p: f64) -> Result<f64> {
    if alpha <= 0.0 || !alpha.is_finite() {
        return Err(PolaronError::config(
            "alpha",
            format!("must be positive, got {alpha}"),
        ));
    }
    let lambda_n = *inputs.ladder.get(n).ok_or_else(|| {
        PolaronError::Range(format!(
            "band {n} beyond ladder length {}",
            inputs.ladder.len()
        ))
    })?;
    let a2 = alpha * alpha;
    Ok(inputs.e_pek + (inputs.zpe + lambda_n) / a2 + p * p / (2.0 * a2 * a2 * inputs.m_lp))
}

/// Bracket `(edge_lower, edge_upper)` of the bottom of the essential
/// spectrum, which does not depend on `P`.
pub fn essential_edge(inputs: &BandInputs, alpha: f64) -> Result<(f64, f64)> {
    check_alpha(alpha, 1.0)?;
    let a2 = alpha * alpha;
    let lower =
        inputs.e_pek + inputs.zpe / a2 - alpha.powf(-(2.0 + LOWER_BOUND_EXPONENT)) + 1.0 / a2;
    let upper = band_upper(inputs, 0, alpha, 0.0)? + 1.0 / a2;
    if !(lower <= upper) {
        return Err(PolaronError::Numerical(format!(
            "essential edge bracket inverted at α = {alpha}: lower {lower:e} > upper {upper:e}"
        )));
    }
    Ok((lower, upper))
}

/// `P_c(α) = √(2 m_lp)·α`.
pub fn critical_momentum(m_lp: f64, alpha: f64) -> f64 {
    (2.0 * m_lp).sqrt() * alpha
}

/// Lower estimate of the number of bound states at `(α, P)`:
/// `#{n : E_n + P²/(2α²m) + c_err·α^{-1/30} < 1 − α^{-1/30}}` with `E_n`
/// from the chosen list.
pub fn count_bound_states(
    inputs: &BandInputs,
    alpha: f64,
    p: f64,
    criterion: CountCriterion,
    c_err: f64,
) -> Result<usize> {
    check_alpha(alpha, 1.0)?;
    let s = alpha.powf(-LOWER_BOUND_EXPONENT);
    let kinetic = p * p / (2.0 * alpha * alpha * inputs.m_lp);
    let threshold = 1.0 - s;
    let admits = |e: f64| e + kinetic + c_err * s < threshold;
    Ok(match criterion {
        CountCriterion::Ladder => inputs.ladder.iter().filter(|&&e| admits(e)).count(),
        CountCriterion::SqrtLambda => {
            usize::from(admits(0.0)) + inputs.sqrt_lambda.iter().filter(|&&e| admits(e)).count()
        }
    })
}

/// Momentum grid of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "values")]
pub enum MomentumGridSpec {
    /// Absolute `|P|` values.
    Absolute(Vec<f64>),
    /// Fractions of `P_c(α)`.
    FractionOfCritical(Vec<f64>),
}

impl MomentumGridSpec {
    fn values(&self) -> &[f64] {
        match self {
            MomentumGridSpec::Absolute(v) | MomentumGridSpec::FractionOfCritical(v) => v,
        }
    }

    fn resolve(&self, m_lp: f64, alpha: f64) -> Vec<f64> {
        match self {
            MomentumGridSpec::Absolute(v) => v.clone(),
            MomentumGridSpec::FractionOfCritical(v) => {
                let pc = critical_momentum(m_lp, alpha);
                v.iter().map(|f| f * pc).collect()
            }
        }
    }
}

/// Grid and options of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub alphas: Vec<f64>,
    pub momenta: MomentumGridSpec,
    /// Bands reported per cell (`n = 0..n_bands`).
    pub n_bands: usize,
    pub c_err: f64,
}

/// One `(α, P, n)` row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub alpha: f64,
    pub p: f64,
    pub n: usize,
    pub band_upper: f64,
    pub edge_lower: f64,
    pub edge_upper: f64,
    /// `band_upper < edge_lower`.
    pub is_bound: bool,
    pub count_ladder: usize,
    pub count_sqrt: usize,
}

/// Sweep result, rows ordered by `(α, P, n)` in grid order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandDiagram {
    pub alphas: Vec<f64>,
    /// Resolved `|P|` values per `α`.
    pub momenta: Vec<Vec<f64>>,
    pub p_c: Vec<f64>,
    pub rows: Vec<BandRow>,
    pub c_err: f64,
    /// Label of the counting rule.
    pub criterion: String,
}

/// Fills the band diagram over the `(α, P)` grid. Cells are evaluated
/// independently; the output order is fixed by the grid.
pub fn sweep(inputs: &BandInputs, spec: &SweepSpec, exec: Exec) -> Result<BandDiagram> {
    if spec.alphas.is_empty() || spec.momenta.values().is_empty() {
        return Err(PolaronError::config(
            "sweep",
            "α and P grids must be nonempty",
        ));
    }
    if spec.n_bands == 0 || spec.n_bands > inputs.ladder.len() {
        return Err(PolaronError::config(
            "n_bands",
            format!(
                "must lie in 1..={}, got {}",
                inputs.ladder.len(),
                spec.n_bands
            ),
        ));
    }
    if spec
        .momenta
        .values()
        .iter()
        .any(|p| !(p.is_finite() && *p >= 0.0))
    {
        return Err(PolaronError::config(
            "momenta",
            "must be finite and nonnegative",
        ));
    }
    let per_alpha: Vec<Result<(Vec<f64>, Vec<BandRow>)>> = exec.map(&spec.alphas, |&alpha| {
        let (edge_lower, edge_upper) = essential_edge(inputs, alpha)?;
        let ps = spec.momenta.resolve(inputs.m_lp, alpha);
        let mut rows = Vec::with_capacity(ps.len() * spec.n_bands);
        for &p in &ps {
            let count_ladder =
                count_bound_states(inputs, alpha, p, CountCriterion::Ladder, spec.c_err)?;
            let count_sqrt =
                count_bound_states(inputs, alpha, p, CountCriterion::SqrtLambda, spec.c_err)?;
            for n in 0..spec.n_bands {
                let band = band_upper(inputs, n, alpha, p)?;
                rows.push(BandRow {
                    alpha,
                    p,
                    n,
                    band_upper: band,
                    edge_lower,
                    edge_upper,
                    is_bound: band < edge_lower,
                    count_ladder,
                    count_sqrt,
                });
            }
        }
        Ok((ps, rows))
    });
    let mut momenta = Vec::new();
    let mut rows = Vec::new();
    for r in per_alpha {
        let (ps, rs) = r?;
        momenta.push(ps);
        rows.extend(rs);
    }
    Ok(BandDiagram {
        p_c: spec
            .alphas
            .iter()
            .map(|&a| critical_momentum(inputs.m_lp, a))
            .collect(),
        alphas: spec.alphas.clone(),
        momenta,
        rows,
        c_err: spec.c_err,
        criterion: if spec.c_err == 0.0 {
            "asymptotic (c_err = 0)".to_string()
        } else {
            format!("c_err = {}", spec.c_err)
        },
    })
}
