//! Symmetric pentadiagonal matrices and the fourth-order radial operator.

use crate::error::{PolaronError, Result};

/// Symmetric matrix with two sub-diagonals.
///
/// `e1[i] = A[i][i−1]` (`e1[0]` unused), `e2[i] = A[i][i−2]`
/// (`e2[0]`, `e2[1]` unused).
#[derive(Debug, Clone, PartialEq)]
pub struct SymPenta {
    pub d: Vec<f64>,
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
}

/// `L D Lᵀ` factors of a [`SymPenta`] (unit lower `L` with two
/// sub-diagonals).
#[derive(Debug, Clone)]
pub struct PentaLdl {
    l1: Vec<f64>,
    l2: Vec<f64>,
    d: Vec<f64>,
}

impl SymPenta {
    /// Dimension.
    pub fn len(&self) -> usize {
        self.d.len()
    }

    /// True for the empty matrix.
    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Returns `A − σI`.
    pub fn shifted(&self, sigma: f64) -> SymPenta {
        SymPenta {
            d: self.d.iter().map(|d| d - sigma).collect(),
            e1: self.e1.clone(),
            e2: self.e2.clone(),
        }
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut s = self.d[i] * x[i];
            if i >= 1 {
                s += self.e1[i] * x[i - 1];
            }
            if i >= 2 {
                s += self.e2[i] * x[i - 2];
            }
            if i + 1 < n {
                s += self.e1[i + 1] * x[i + 1];
            }
            if i + 2 < n {
                s += self.e2[i + 2] * x[i + 2];
            }
            y[i] = s;
        }
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; x.len()];
        self.apply(x, &mut y);
        x.iter().zip(&y).map(|(a, b)| a * b).sum()
    }

    /// Replaces row and column `j` by the unit vector `e_j`.
    pub fn pin(&mut self, j: usize) {
        let n = self.len();
        self.d[j] = 1.0;
        if j >= 1 {
            self.e1[j] = 0.0;
        }
        if j >= 2 {
            self.e2[j] = 0.0;
        }
        if j + 1 < n {
            self.e1[j + 1] = 0.0;
        }
        if j + 2 < n {
            self.e2[j + 2] = 0.0;
        }
    }

    /// `L D Lᵀ` factorization without pivoting.
    ///
    /// Succeeds whenever all leading minors are nonzero; a pivot below
    /// `tiny·max|d|` is reported as an error.
    pub fn factor(&self) -> Result<PentaLdl> {
        let n = self.len();
        let scale = self
            .d
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let mut l1 = vec![0.0; n];
        let mut l2 = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 0..n {
            let mut di = self.d[i];
            if i >= 2 {
                l2[i] = self.e2[i] / d[i - 2];
                di -= l2[i] * l2[i] * d[i - 2];
            }
            if i >= 1 {
                let mut num = self.e1[i];
                if i >= 2 {
                    num -= l2[i] * d[i - 2] * l1[i - 1];
                }
                l1[i] = num / d[i - 1];
                di -= l1[i] * l1[i] * d[i - 1];
            }
            if di.abs() <= 1e-300_f64.max(scale * 1e-16) {
                return Err(PolaronError::Numerical(format!(
                    "singular banded pivot {di:e} at row {i} (scale {scale:e})"
                )));
            }
            d[i] = di;
        }
        Ok(PentaLdl { l1, l2, d })
    }

    /// Number of eigenvalues below `sigma` (Sylvester inertia of `A − σI`).
    ///
    /// Zero pivots are nudged, which only matters when `σ` coincides with
    /// an eigenvalue to working precision.
    pub fn count_below(&self, sigma: f64) -> usize {
        let n = self.len();
        let scale = self
            .d
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1e-300);
        let mut l1p = 0.0; // l1[i-1]
        let mut dm1 = 0.0; // d[i-1]
        let mut dm2 = 0.0; // d[i-2]
        let mut count = 0;
        for i in 0..n {
            let mut di = self.d[i] - sigma;
            let mut l2 = 0.0;
            if i >= 2 {
                l2 = self.e2[i] / dm2;
                di -= l2 * l2 * dm2;
            }
            let mut l1 = 0.0;
            if i >= 1 {
                let mut num = self.e1[i];
                if i >= 2 {
                    num -= l2 * dm2 * l1p;
                }
                l1 = num / dm1;
                di -= l1 * l1 * dm1;
            }
            if di == 0.0 {
                di = -scale * 1e-16;
            }
            if di < 0.0 {
                count += 1;
            }
            l1p = l1;
            dm2 = dm1;
            dm1 = di;
        }
        count
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i >= 1 {
                r += self.e1[i].abs();
            }
            if i >= 2 {
                r += self.e2[i].abs();
            }
            if i + 1 < n {
                r += self.e1[i + 1].abs();
            }
            if i + 2 < n {
                r += self.e2[i + 2].abs();
            }
            lo = lo.min(self.d[i] - r);
            hi = hi.max(self.d[i] + r);
        }
        (lo, hi)
    }
}

impl PentaLdl {
    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 1..n {
            let mut v = b[i] - self.l1[i] * b[i - 1];
            if i >= 2 {
                v -= self.l2[i] * b[i - 2];
            }
            b[i] = v;
        }
        for i in 0..n {
            b[i] /= self.d[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            let mut v = b[i] - self.l1[i + 1] * b[i + 1];
            if i + 2 < n {
                v -= self.l2[i + 2] * b[i + 2];
            }
            b[i] = v;
        }
    }

    /// Smallest and largest pivot magnitude, a cheap conditioning proxy.
    pub fn pivot_range(&self) -> (f64, f64) {
        self.d.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| {
            (lo.min(v.abs()), hi.max(v.abs()))
        })
    }
}

/// Fourth-order finite-difference matrix of
/// `−d²/dr² + ℓ(ℓ+1)/r² + V(r)` acting on `u = r·f` at the cell midpoints
/// `r_i = (i + ½)h` of a uniform grid.
///
/// The five-point stencil `(−1, 16, −30, 16, −1)/(12h²)` uses ghost values
/// from the parity of `u` at the origin, `u(−r) = (−1)^{ℓ+1}u(r)`, and
/// odd reflection about `r_max` (so that `u(r_max) = 0`) at the outer
/// end. The matrix is symmetric.
pub fn radial_operator(h: f64, ell: usize, potential: &[f64]) -> SymPenta {
    let n = potential.len();
    let c = 1.0 / (12.0 * h * h);
    let lfac = (ell * (ell + 1)) as f64;
    let par = if ell % 2 == 0 { -1.0 } else { 1.0 };
    let mut d = Vec::with_capacity(n);
    for (i, v) in potential.iter().enumerate() {
        let r = (i as f64 + 0.5) * h;
        d.push(30.0 * c + lfac / (r * r) + v);
    }
    let mut e1 = vec![-16.0 * c; n];
    let mut e2 = vec![c; n];
    e1[0] = 0.0;
    e2[0] = 0.0;
    if n > 1 {
        e2[1] = 0.0;
    }
    // Ghosts u_{−1} = par·u_0 (rows 0 and 1) and u_{−2} = par·u_1 (row 0).
    d[0] += -16.0 * c * par;
    if n > 1 {
        e1[1] += c * par;
    }
    // Ghosts u_n = −u_{n−1} (rows n−2, n−1) and u_{n+1} = −u_{n−2} (row n−1).
    d[n - 1] += 16.0 * c;
    if n > 1 {
        e1[n - 1] -= c;
    }
    SymPenta { d, e1, e2 }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_spd(n: usize) -> SymPenta {
        let mut d = vec![0.0; n];
        let mut e1 = vec![0.0; n];
        let mut e2 = vec![0.0; n];
        for i in 0..n {
            let t = i as f64;
            d[i] = 6.0 + (t * 0.37).sin();
            if i >= 1 {
                e1[i] = -1.0 + 0.3 * (t * 1.3).cos();
            }
            if i >= 2 {
                e2[i] = 0.5 + 0.2 * (t * 0.7).sin();
            }
        }
        SymPenta { d, e1, e2 }
    }

    #[test]
    fn solve_inverts_apply() {
        let a = random_spd(50);
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.1).cos()).collect();
        let mut b = vec![0.0; 50];
        a.apply(&x, &mut b);
        a.factor().unwrap().solve_in_place(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn inertia_counts_match_dense_spectrum() {
        let a = random_spd(30);
        // Dense eigenvalues through the crate's own dense solver.
        let n = a.len();
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            m[i * n + i] = a.d[i];
            if i >= 1 {
                m[i * n + i - 1] = a.e1[i];
                m[(i - 1) * n + i] = a.e1[i];
            }
            if i >= 2 {
                m[i * n + i - 2] = a.e2[i];
                m[(i - 2) * n + i] = a.e2[i];
            }
        }
        let eig =
            crate::radial_numerics::sym_eig(&crate::radial_numerics::DenseMatrix::from_rows(n, m))
                .unwrap();
        for k in [0usize, 3, 17, 29] {
            let mid = if k + 1 < n {
                0.5 * (eig.values[k] + eig.values[k + 1])
            } else {
                eig.values[k] + 1.0
            };
            assert_eq!(a.count_below(mid), k + 1);
        }
    }

    #[test]
    fn operator_is_fourth_order_on_smooth_odd_function() {
        // u = r e^{−r²/2} solves −u'' + r² u = 3u (ℓ = 0).
        let err = |n: usize| {
            let rmax = 10.0;
            let h = rmax / n as f64;
            let r: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
            let v: Vec<f64> = r.iter().map(|r| r * r).collect();
            let op = radial_operator(h, 0, &v);
            let u: Vec<f64> = r.iter().map(|r| r * (-r * r / 2.0).exp()).collect();
            let mut y = vec![0.0; n];
            op.apply(&u, &mut y);
            y.iter()
                .zip(&u)
                .map(|(a, b)| (a - 3.0 * b).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(200) / err(400);
        assert!(ratio > 12.0, "ratio {ratio}");
    }
}
