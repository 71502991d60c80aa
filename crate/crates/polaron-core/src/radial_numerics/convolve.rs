//! Radially reduced convolutions with `1/|x|` and `1/(2π²|x|²)`.

use std::f64::consts::PI;

use super::grid::{Mapping, RadialFn, RadialGrid};
use crate::error::{PolaronError, Result};

/// Cumulative integrals `∫₀^{r_i} f(s) ds` at the midpoint nodes of a
/// uniform grid, fourth-order accurate.
///
/// `parity` is `+1` for integrands that extend evenly through the origin
/// and `−1` for odd ones; it supplies the two ghost values needed by the
/// first cells. Values beyond the outer end are taken as zero.
pub fn cumulative_integral(f: &[f64], h: f64, parity: f64) -> Vec<f64> {
    let n = f.len();
    let at = |i: isize| -> f64 {
        if i < 0 {
            parity * f[(-i - 1) as usize]
        } else if (i as usize) < n {
            f[i as usize]
        } else {
            0.0
        }
    };
    let mut out = Vec::with_capacity(n);
    // Half cell [0, h/2] by cubic interpolation through t = ±½, ±3/2.
    let mut acc = h * ((155.0 + 53.0 * parity) * at(0) + (-9.0 - 7.0 * parity) * at(1)) / 384.0;
    out.push(acc);
    for i in 1..n {
        let j = i as isize - 1;
        acc += h * (-at(j - 1) + 13.0 * at(j) + 13.0 * at(j + 1) - at(j + 2)) / 24.0;
        out.push(acc);
    }
    out
}

/// Total `∫₀^{r_max} f(s) ds` consistent with [`cumulative_integral`].
fn total_integral(f: &[f64], cum: &[f64], h: f64) -> f64 {
    let n = f.len();
    // Last half cell by cubic interpolation (zero ghosts beyond r_max).
    let fm1 = f[n - 1];
    let fm2 = if n >= 2 { f[n - 2] } else { 0.0 };
    cum[n - 1] + h * (155.0 * fm1 - 9.0 * fm2) / 384.0
}

/// Newton's shell formula: `v(r) = ∫ n(|y|)/|x − y| dy` for a radial
/// density `n`,
/// `v(r) = (4π/r)∫₀^r n s² ds + 4π∫_r^∞ n s ds`.
///
/// Requires a uniform grid; the cumulative integrals are fourth-order.
pub fn coulomb_convolve(density: &RadialFn, grid: &RadialGrid) -> Result<RadialFn> {
    density.require_radial("coulomb_convolve")?;
    require_uniform(grid, "coulomb_convolve")?;
    let h = grid.spacing();
    let r = &grid.nodes;
    let ns2: Vec<f64> = density
        .values
        .iter()
        .zip(r)
        .map(|(n, s)| n * s * s)
        .collect();
    let ns1: Vec<f64> = density.values.iter().zip(r).map(|(n, s)| n * s).collect();
    let inner = cumulative_integral(&ns2, h, 1.0);
    let outer_cum = cumulative_integral(&ns1, h, -1.0);
    let outer_total = total_integral(&ns1, &outer_cum, h);
    let values = (0..r.len())
        .map(|i| 4.0 * PI * (inner[i] / r[i] + outer_total - outer_cum[i]))
        .collect();
    Ok(RadialFn::radial(values))
}

/// `(1/(2π²))∫ n(|y|)/|x − y|² dy` for a radial density `n`.
///
/// The angular average of `|x − y|^{-2}` over a shell of radius `s` is
/// `(2rs)^{-1} ln((r+s)/|r−s|)`, which leaves
/// `(1/(π r))∫ s n(s) ln((r+s)/|r−s|) ds`. The logarithm is integrated
/// exactly against the piecewise-linear interpolant of `s·n(s)` (product
/// integration), so the diagonal singularity costs no accuracy.
pub fn inverse_square_convolve(density: &RadialFn, grid: &RadialGrid) -> Result<RadialFn> {
    inverse_square_convolve_with_tail(density, grid, 0.0)
}

/// As [`inverse_square_convolve`], with the density continued beyond
/// `r_max` as `tail_coeff/s²`.
pub fn inverse_square_convolve_with_tail(
    density: &RadialFn,
    grid: &RadialGrid,
    tail_coeff: f64,
) -> Result<RadialFn> {
    density.require_radial("inverse_square_convolve")?;
    let s = &grid.nodes;
    let n = s.len();
    // Knots of the piecewise-linear interpolant of G(s) = s·n(s); G(0) = 0.
    let mut knots = Vec::with_capacity(n + 1);
    let mut g = Vec::with_capacity(n + 1);
    knots.push(0.0);
    g.push(0.0);
    for i in 0..n {
        knots.push(s[i]);
        g.push(s[i] * density.values[i]);
    }
    let values = s
        .iter()
        .map(|&r| {
            let mut acc = 0.0;
            for k in 0..knots.len() - 1 {
                let (a, b) = (knots[k], knots[k + 1]);
                let slope = (g[k + 1] - g[k]) / (b - a);
                // ∫_a^b (g_a + slope (s − a)) [ln(s + r) − ln|s − r|] ds
                let c0 = g[k] - slope * a;
                let i0 = lin_log(a, b, -r) - lin_log(a, b, r);
                let i1 = s_log(a, b, -r) - s_log(a, b, r);
                acc += c0 * i0 + slope * i1;
            }
            let tail = if tail_coeff != 0.0 {
                let x = r / grid.r_max;
                tail_coeff * 2.0 * legendre_chi2(x)
            } else {
                0.0
            };
            (acc + tail) / (PI * r)
        })
        .collect();
    Ok(RadialFn::radial(values))
}

/// `∫_a^b ln|s − c| ds`.
fn lin_log(a: f64, b: f64, c: f64) -> f64 {
    let f = |u: f64| if u == 0.0 { 0.0 } else { u * u.abs().ln() - u };
    f(b - c) - f(a - c)
}

/// `∫_a^b s ln|s − c| ds`.
fn s_log(a: f64, b: f64, c: f64) -> f64 {
    let f = |u: f64| {
        if u == 0.0 {
            0.0
        } else {
            let l = u.abs().ln();
            0.5 * u * u * l - 0.25 * u * u + c * (u * l - u)
        }
    };
    f(b - c) - f(a - c)
}

/// Legendre's chi function `χ₂(x) = Σ_{j≥0} x^{2j+1}/(2j+1)²`, `0 ≤ x ≤ 1`.
pub fn legendre_chi2(x: f64) -> f64 {
    fn series(x: f64) -> f64 {
        let mut sum = 0.0f64;
        let mut p = x;
        let x2 = x * x;
        let mut k = 1.0;
        while p > 1e-18 * sum.max(1e-300) || k < 2.0 {
            sum += p / (k * k);
            p *= x2;
            k += 2.0;
            if k > 4000.0 {
                break;
            }
        }
        sum
    }
    if x <= 0.0 {
        return 0.0;
    }
    if x <= 0.5 {
        return series(x);
    }
    // χ₂(x) + χ₂(y) = π²/8 − ½ ln x ln y with y = (1−x)/(1+x).
    let y = (1.0 - x) / (1.0 + x);
    let ln_term = if y > 0.0 { 0.5 * x.ln() * y.ln() } else { 0.0 };
    PI * PI / 8.0 - ln_term - series(y)
}

fn require_uniform(grid: &RadialGrid, op: &str) -> Result<()> {
    if grid.mapping != Mapping::Uniform {
        return Err(PolaronError::Precondition(format!(
            "{op} requires a uniform radial grid"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial_numerics::make_radial_grid;

    #[test]
    fn cumulative_integral_is_fourth_order() {
        let err = |n: usize| {
            let h = 4.0 / n as f64;
            let r: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
            // f = r e^{−r²} (odd), ∫₀^r = (1 − e^{−r²})/2
            let f: Vec<f64> = r.iter().map(|r| r * (-r * r).exp()).collect();
            let c = cumulative_integral(&f, h, -1.0);
            r.iter()
                .zip(&c)
                .map(|(r, c)| (c - 0.5 * (1.0 - (-r * r).exp())).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(100) / err(200);
        assert!(ratio > 14.0, "ratio {ratio}");
    }

    #[test]
    fn coulomb_of_zero_is_zero() {
        let g = make_radial_grid(64, 5.0, Mapping::Uniform).unwrap();
        let v = coulomb_convolve(&RadialFn::radial(vec![0.0; 64]), &g).unwrap();
        assert!(v.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn coulomb_rejects_nonradial() {
        let g = make_radial_grid(64, 5.0, Mapping::Uniform).unwrap();
        let f = RadialFn {
            values: vec![0.0; 64],
            ell: 1,
        };
        assert!(matches!(
            coulomb_convolve(&f, &g),
            Err(PolaronError::Sector(_))
        ));
        assert!(matches!(
            inverse_square_convolve(&f, &g),
            Err(PolaronError::Sector(_))
        ));
    }

    #[test]
    fn chi2_series_and_reflection_agree() {
        for &x in &[0.1, 0.45, 0.5, 0.7, 0.95, 1.0] {
            let direct: f64 = (0..200_000)
                .map(|j| {
                    let k = (2 * j + 1) as f64;
                    (x as f64).powf(k) / (k * k)
                })
                .sum();
            let tol = if x == 1.0 { 3e-6 } else { 1e-12 };
            assert!((legendre_chi2(x) - direct).abs() < tol, "x={x}");
        }
    }
}
