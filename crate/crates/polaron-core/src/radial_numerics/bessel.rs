//! Spherical Bessel functions of the first kind.

/// Largest supported order.
pub const MAX_ORDER: usize = 64;

/// `j_ℓ(x)` for `x ≥ 0`.
///
/// Accurate to about `1e-14` absolute for `x ≤ 10³` and all `ℓ ≤ 64`.
pub fn spherical_bessel(ell: usize, x: f64) -> f64 {
    let mut out = vec![0.0; ell + 1];
    spherical_bessel_all(x, &mut out);
    out[ell]
}

/// Fills `out[ℓ] = j_ℓ(x)` for `ℓ = 0..out.len()`.
///
/// Orders below `x` come from the (stable) upward recurrence; when the
/// requested orders reach `x` or beyond, Miller's downward recurrence is
/// used instead and normalized with `Σ(2ℓ+1)j_ℓ² = 1`.
pub fn spherical_bessel_all(x: f64, out: &mut [f64]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    debug_assert!(x >= 0.0, "spherical Bessel argument must be nonnegative");
    let lmax = n - 1;
    if x < 1e-4 {
        // Two-term series x^ℓ/(2ℓ+1)!! · (1 − x²/(2(2ℓ+3))).
        let mut lead = 1.0;
        for (l, o) in out.iter_mut().enumerate() {
            if l > 0 {
                lead *= x / (2 * l + 1) as f64;
            }
            *o = lead * (1.0 - x * x / (2.0 * (2 * l + 3) as f64));
        }
        return;
    }
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    if lmax == 0 {
        out[0] = j0;
        return;
    }
    if x > lmax as f64 {
        out[0] = j0;
        out[1] = (j0 - c) / x;
        for l in 1..lmax {
            out[l + 1] = (2 * l + 1) as f64 / x * out[l] - out[l - 1];
        }
        return;
    }
    // Downward recurrence from well above max(ℓ, x).
    let start = lmax + 20 + (x.max(lmax as f64).sqrt() * 4.0) as usize;
    let mut fp1 = 0.0;
    let mut f = 1e-30;
    let mut norm = 0.0;
    let mut scale_log = 0i32; // number of 1e-100 rescalings applied
    let mut vals_hi = Vec::with_capacity(n);
    for l in (0..=start).rev() {
        if l <= lmax {
            vals_hi.push((l, f, scale_log));
        }
        norm += (2 * l + 1) as f64 * f * f;
        let fm1 = (2 * l + 1) as f64 / x * f - fp1;
        fp1 = f;
        f = fm1;
        if f.abs() > 1e100 {
            f *= 1e-100;
            fp1 *= 1e-100;
            norm *= 1e-200;
            scale_log += 1;
        }
    }
    // `vals_hi` entries recorded before later rescalings must be brought to
    // the final scale.
    let inv = 1.0 / norm.sqrt();
    // Choose the sign from whichever closed form is better conditioned.
    let j1 = (j0 - c) / x;
    let (ref_val, ref_l) = if j0.abs() >= j1.abs() {
        (j0, 0)
    } else {
        (j1, 1)
    };
    for &(l, v, sl) in &vals_hi {
        let rescale = 1e-100f64.powi(scale_log - sl);
        out[l] = v * rescale * inv;
    }
    if (out[ref_l] < 0.0) != (ref_val < 0.0) {
        for o in out.iter_mut() {
            *o = -*o;
        }
    }
}
