//! Behaviour of the cutoff operator `H_K` as `K` grows.

use serde::{Deserialize, Serialize};

use super::{assemble_fixed, prepare_context, HessianConfig, HessianContext, HessianSpectrum};
use crate::error::{PolaronError, Result};
use crate::exec::Exec;
use crate::pekar_solver::PekarConfig;

/// Differences below this are treated as converged to round-off and
/// excluded from the slope fits.
const DIFF_FLOOR: f64 = 1e-13;

/// Number of tracked modes.
const TRACKED: usize = 5;

/// One eigenvalue followed across cutoffs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackedMode {
    /// Sector of the mode.
    pub ell: usize,
    /// Index inside the sector.
    pub index: usize,
    /// `λ_K` for every non-reference cutoff.
    pub values: Vec<f64>,
    /// Reference value at the largest cutoff.
    pub reference: f64,
    /// `|λ_K − λ_ref|`.
    pub differences: Vec<f64>,
    /// Log–log slope of the differences against `K` (`None` when fewer
    /// than two differences exceed the round-off floor).
    pub slope: Option<f64>,
    /// `‖∇𝔲_K‖ / (√K (1 − λ_K)^{-1/2})` for every cutoff (reference last).
    pub gradient_ratios: Vec<f64>,
}

/// Result of [`cutoff_scaling_study`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    /// All cutoffs, the last one being the reference.
    pub cutoffs: Vec<f64>,
    /// Lowest modes at the reference cutoff.
    pub tracked: Vec<TrackedMode>,
    /// `Tr((−i∇)(1 − H_K)(−i∇))` per cutoff.
    pub grad_traces: Vec<f64>,
    /// Least-squares exponent of `grad_traces` against `K`.
    pub grad_exponent: f64,
    /// `Σ(2ℓ+1) tr(1 − H_K)` per cutoff (computed sectors).
    pub tr_one_minus_h: Vec<f64>,
    /// Eigenvalues outside `[−tol, 1 + tol]` over all cutoffs.
    pub containment_violations: usize,
    /// Highest sector used.
    pub ell_max: usize,
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

/// Computes `H_K` for every cutoff in `cutoffs` (ascending, at least
/// three; the largest is the reference) with sectors `0..=ell_max`, and
/// reports eigenvalue convergence, the growth of the gradient-weighted
/// trace and eigenfunction gradient norms.
pub fn cutoff_scaling_study(
    base: &PekarConfig,
    hcfg: &HessianConfig,
    cutoffs: &[f64],
    ell_max: usize,
    exec: Exec,
) -> Result<ScalingReport> {
    if cutoffs.len() < 3 {
        return Err(PolaronError::config(
            "cutoffs",
            "need at least three cutoffs",
        ));
    }
    if cutoffs.windows(2).any(|w| !(w[0] < w[1])) || !(cutoffs[0] > 0.0) {
        return Err(PolaronError::config(
            "cutoffs",
            "must be positive and strictly ascending",
        ));
    }
    let spectra: Vec<(HessianSpectrum, HessianContext)> = exec
        .map(cutoffs, |&k| -> Result<(HessianSpectrum, HessianContext)> {
            let ctx = prepare_context(base, hcfg, k)?;
            let cfg = HessianConfig {
                momentum_tail: false,
                ..hcfg.clone()
            };
            let spec = assemble_fixed(&ctx, &cfg, ell_max, Exec::Sequential)?;
            Ok((spec, ctx))
        })
        .into_iter()
        .collect::<Result<_>>()?;

    let (reference, _) = spectra.last().expect("at least three cutoffs");
    let mut tracked = Vec::new();
    let mut seen = Vec::new();
    for m in &reference.modes {
        if seen.contains(&(m.ell, m.index)) {
            continue;
        }
        seen.push((m.ell, m.index));
        if seen.len() > TRACKED {
            break;
        }
        let reference_value = m.lambda;
        let values: Vec<f64> = spectra[..spectra.len() - 1]
            .iter()
            .map(|(s, _)| s.sectors[m.ell].eigenvalues[m.index])
            .collect();
        let differences: Vec<f64> = values.iter().map(|v| (v - reference_value).abs()).collect();
        let fit: Vec<(f64, f64)> = cutoffs
            .iter()
            .zip(&differences)
            .filter(|(_, d)| **d > DIFF_FLOOR)
            .map(|(k, d)| (*k, *d))
            .collect();
        let (xs, ys): (Vec<f64>, Vec<f64>) = fit.into_iter().unzip();
        let gradient_ratios = spectra
            .iter()
            .map(|(s, ctx)| {
                let sec = &s.sectors[m.ell];
                let lam = sec.eigenvalues[m.index];
                let g = sec.gradient_norm_sq(m.index, &ctx.kgrid).sqrt();
                g * (1.0 - lam).max(0.0).sqrt() / ctx.cutoff().sqrt()
            })
            .collect();
        tracked.push(TrackedMode {
            ell: m.ell,
            index: m.index,
            values,
            reference: reference_value,
            differences,
            slope: log_log_slope(&xs, &ys),
            gradient_ratios,
        });
    }
    let grad_traces: Vec<f64> = spectra.iter().map(|(s, _)| s.grad_trace).collect();
    let grad_exponent = log_log_slope(cutoffs, &grad_traces).ok_or_else(|| {
        PolaronError::Numerical("gradient-weighted traces are not positive".into())
    })?;
    Ok(ScalingReport {
        cutoffs: cutoffs.to_vec(),
        tracked,
        grad_traces,
        grad_exponent,
        tr_one_minus_h: spectra.iter().map(|(s, _)| s.tr_one_minus_h).collect(),
        containment_violations: spectra.iter().map(|(s, _)| s.containment_violations).sum(),
        ell_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.5)).collect();
        assert!((log_log_slope(&x, &y).unwrap() + 0.5).abs() < 1e-12);
        assert!(log_log_slope(&[1.0], &[1.0]).is_none());
    }
}
