//! Radial numerics against closed forms and an independent eigensolver.

use approx::assert_relative_eq;
use nalgebra::{DMatrix, SymmetricEigen};
use polaron_core::radial_numerics::{
    make_momentum_grid, make_radial_grid, spherical_bessel_all, sym_eig, DenseMatrix, Mapping,
};
use proptest::prelude::*;

fn closed_j(x: f64) -> [f64; 3] {
    let (s, c) = x.sin_cos();
    [
        s / x,
        s / (x * x) - c / x,
        (3.0 / (x * x * x) - 1.0 / x) * s - 3.0 * c / (x * x),
    ]
}

proptest! {
    #[test]
    fn bessel_low_orders_match_closed_forms(x in 0.5f64..500.0) {
        let mut j = [0.0; 3];
        spherical_bessel_all(x, &mut j);
        let want = closed_j(x);
        for l in 0..3 {
            prop_assert!((j[l] - want[l]).abs() < 1e-12, "l = {l}, x = {x}: {} vs {}", j[l], want[l]);
        }
    }

    #[test]
    fn bessel_orders_satisfy_recurrence(x in 1.0f64..200.0) {
        let mut j = vec![0.0; 41];
        spherical_bessel_all(x, &mut j);
        for l in 1..40 {
            let lhs = j[l - 1] + j[l + 1];
            let rhs = (2 * l + 1) as f64 / x * j[l];
            prop_assert!((lhs - rhs).abs() < 1e-11 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn sym_eig_agrees_with_nalgebra(n in 1usize..12, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut a = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.gen_range(-1.0..1.0);
                *a.get_mut(i, j) = v;
                *a.get_mut(j, i) = v;
            }
        }
        let ours = sym_eig(&a).unwrap();
        let reference = SymmetricEigen::new(DMatrix::from_fn(n, n, |i, j| a.get(i, j)));
        let mut want: Vec<f64> = reference.eigenvalues.iter().copied().collect();
        want.sort_by(f64::total_cmp);
        for (x, y) in ours.values.iter().zip(&want) {
            prop_assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
        // A v = λ v and orthonormality.
        for k in 0..n {
            let v = ours.vectors.row(k);
            let av = a.mul_vec(v);
            for i in 0..n {
                prop_assert!((av[i] - ours.values[k] * v[i]).abs() < 1e-12);
            }
            for m in 0..n {
                let d: f64 = v.iter().zip(ours.vectors.row(m)).map(|(p, q)| p * q).sum();
                let want = if m == k { 1.0 } else { 0.0 };
                prop_assert!((d - want).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn momentum_grid_integrates_polynomials_and_exponentials() {
    let g = make_momentum_grid(64, 10.0, 0.02).unwrap();
    assert_relative_eq!(
        g.integrate(&vec![1.0; g.len()]),
        1000.0 / 3.0,
        max_relative = 1e-13
    );
    let f: Vec<f64> = g.nodes.iter().map(|k| (-k).exp()).collect();
    let exact = 2.0 - (-10.0f64).exp() * (100.0 + 20.0 + 2.0);
    assert_relative_eq!(g.integrate(&f), exact, max_relative = 1e-12);
}

#[test]
fn momentum_grid_refinement_is_nested() {
    let coarse = make_momentum_grid(32, 50.0, 0.02).unwrap();
    let fine = make_momentum_grid(64, 50.0, 0.02).unwrap();
    assert_eq!(fine.len(), 2 * coarse.len());
    assert!(fine.nodes.windows(2).all(|w| w[0] < w[1]));
    assert!(fine.nodes[0] > 0.0 && *fine.nodes.last().unwrap() < 50.0);
}

#[test]
fn radial_grid_gaussian_moments() {
    let pi = std::f64::consts::PI;
    for mapping in [Mapping::Uniform, Mapping::LogStretched] {
        let g = make_radial_grid(400, 12.0, mapping).unwrap();
        let f: Vec<f64> = g.nodes.iter().map(|r| (-r * r).exp()).collect();
        assert_relative_eq!(g.integrate(&f), pi.sqrt() / 4.0, max_relative = 1e-9);
        // Exact for r² and r⁴ weights times constants.
        assert_relative_eq!(
            g.integrate(&vec![1.0; g.len()]),
            12f64.powi(3) / 3.0,
            max_relative = 1e-12
        );
    }
}
