//! Band formulas and counting rules.

use polaron_core::band_calculator::{
    band_upper, count_bound_states, critical_momentum, essential_edge, sweep, BandInputs,
    CountCriterion, MomentumGridSpec, SweepSpec,
};
use polaron_core::Exec;
use proptest::prelude::*;

fn inputs() -> impl Strategy<Value = BandInputs> {
    (
        -1e-3f64..-1e-4,
        1e-7f64..1e-6,
        -3.0f64..-0.5,
        prop::collection::vec(0.2f64..0.99, 1..20),
    )
        .prop_map(|(e_pek, m_lp, zpe, mut modes)| {
            modes.sort_by(f64::total_cmp);
            let mut ladder = vec![0.0];
            ladder.extend(modes.iter().copied());
            BandInputs {
                e_pek,
                m_lp,
                zpe,
                ladder,
                sqrt_lambda: modes,
            }
        })
}

proptest! {
    #[test]
    fn dispersion_is_exactly_quadratic(i in inputs(), alpha in 1.0f64..200.0, f in 0.0f64..3.0) {
        let p = f * critical_momentum(i.m_lp, alpha);
        for n in 0..i.ladder.len() {
            let b0 = band_upper(&i, n, alpha, 0.0).unwrap();
            let kinetic = p * p / (2.0 * alpha.powi(4) * i.m_lp);
            // The difference of two band values rounds at the band's scale.
            let d = band_upper(&i, n, alpha, p).unwrap() - b0;
            prop_assert!((d - kinetic).abs() < 1e-12 * (kinetic + b0.abs()));
            // ZPE + Λ may nearly cancel here; rounding scales with the summands.
            let scale = i.zpe.abs() + i.ladder[n] + alpha * alpha * i.e_pek.abs();
            let rest = alpha * alpha * (b0 - i.e_pek) - (i.zpe + i.ladder[n]);
            prop_assert!(rest.abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn counts_vanish_at_critical_momentum(i in inputs(), alpha in 1.0f64..1e4, c_err in 0.0f64..2.0) {
        let pc = critical_momentum(i.m_lp, alpha);
        for crit in [CountCriterion::Ladder, CountCriterion::SqrtLambda] {
            prop_assert_eq!(count_bound_states(&i, alpha, pc, crit, c_err).unwrap(), 0);
        }
    }

    #[test]
    fn counts_monotone_in_alpha_and_momentum(i in inputs(), a in 1.0f64..100.0, b in 1.0f64..100.0, f in 0.0f64..1.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        for crit in [CountCriterion::Ladder, CountCriterion::SqrtLambda] {
            prop_assert!(count_bound_states(&i, lo, 0.0, crit, 0.0).unwrap()
                <= count_bound_states(&i, hi, 0.0, crit, 0.0).unwrap());
            let p = f * critical_momentum(i.m_lp, lo);
            prop_assert!(count_bound_states(&i, lo, p, crit, 0.0).unwrap()
                <= count_bound_states(&i, lo, 0.0, crit, 0.0).unwrap());
        }
    }

    #[test]
    fn sweep_rows_are_consistent(i in inputs()) {
        let spec = SweepSpec {
            alphas: vec![5.0, 10.0, 40.0],
            momenta: MomentumGridSpec::FractionOfCritical(vec![0.0, 0.5, 1.0]),
            n_bands: i.ladder.len(),
            c_err: 0.0,
        };
        let d = sweep(&i, &spec, Exec::Parallel).unwrap();
        prop_assert_eq!(&d, &sweep(&i, &spec, Exec::Sequential).unwrap());
        prop_assert_eq!(d.rows.len(), 3 * 3 * i.ladder.len());
        for r in &d.rows {
            prop_assert_eq!(r.is_bound, r.band_upper < r.edge_lower);
            let (lo, hi) = essential_edge(&i, r.alpha).unwrap();
            prop_assert_eq!((lo, hi), (r.edge_lower, r.edge_upper));
        }
    }
}

#[test]
fn edge_bracket_rejects_small_coupling() {
    let i = BandInputs {
        e_pek: -6.9e-4,
        m_lp: 4.5e-7,
        zpe: -1.3,
        ladder: vec![0.0, 0.64],
        sqrt_lambda: vec![0.64],
    };
    assert!(essential_edge(&i, 0.9).unwrap_err().is_config());
    assert!(band_upper(&i, 0, 0.0, 0.0).unwrap_err().is_config());
}
