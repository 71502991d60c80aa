//! End-to-end properties on a coarse configuration.

use std::f64::consts::PI;
use std::sync::OnceLock;

use polaron_core::bogoliubov_ladder::{mode_energies, physical_ladder, zero_point_energy};
use polaron_core::hessian_spectrum::{
    assemble_spectrum, bogoliubov_blocks, prepare_context, HessianConfig, HessianSpectrum,
};
use polaron_core::pekar_solver::{solve_pekar, PekarConfig, PekarSolution};
use polaron_core::trial_kernels::TrialKernels;
use polaron_core::Exec;

fn pekar_cfg() -> PekarConfig {
    PekarConfig {
        n_r: 400,
        ..PekarConfig::default()
    }
}

fn hessian_cfg() -> HessianConfig {
    HessianConfig {
        n_k: 48,
        k_max_proxy: 10.0,
        ell_max: 4,
        ell_cap: 16,
        ell_step: 4,
        tail_rel_tol: 1e-2,
        ..HessianConfig::default()
    }
}

fn pekar() -> &'static PekarSolution {
    static S: OnceLock<PekarSolution> = OnceLock::new();
    S.get_or_init(|| solve_pekar(&pekar_cfg()).unwrap())
}

fn spectrum(exec: Exec) -> HessianSpectrum {
    let h = hessian_cfg();
    let ctx = prepare_context(&pekar_cfg(), &h, h.k_max_proxy).unwrap();
    assemble_spectrum(&ctx, &h, exec).unwrap()
}

fn shared() -> &'static HessianSpectrum {
    static S: OnceLock<HessianSpectrum> = OnceLock::new();
    S.get_or_init(|| spectrum(Exec::Parallel))
}

#[test]
fn pekar_minimizer_beats_gaussian_trial() {
    let s = pekar();
    assert!(s.e_pek <= -1.0 / (48.0 * PI.powi(3)));
    assert!(s.virial_residual < 1e-5);
    assert!(s.residual < 1e-5);
    // e = T − ‖φ‖² with the virial relation 2T = ‖φ‖² gives e = −T.
    assert!((s.e_pek + s.kinetic).abs() < 1e-4 * s.e_pek.abs());
    assert!((s.m_lp - 4.0 * s.lambda_gauss).abs() < 1e-15);
}

#[test]
fn spectrum_is_thread_independent() {
    assert_eq!(&spectrum(Exec::Sequential), shared());
}

#[test]
fn spectrum_contained_and_gapped() {
    let s = shared();
    for sec in &s.sectors {
        for &l in &sec.eigenvalues {
            assert!(
                (-1e-8..=1.0 + 1e-8).contains(&l),
                "ell {} eigenvalue {l}",
                sec.ell
            );
        }
        assert!(sec.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }
    assert_eq!(s.containment_violations, 0);
    assert!(s.zero_mode.eigenvalue.abs() < 1e-6);
    assert!(s.zero_mode.overlap > 0.999);
    assert!(s.beta > 0.0 && s.beta < 1.0);
    assert_eq!(s.frak_m, (1.0 / s.beta.sqrt()).ceil() as usize);
}

#[test]
fn mode_list_respects_multiplicity() {
    let s = shared();
    for w in s.modes.windows(2) {
        assert!(w[0].lambda <= w[1].lambda);
    }
    for sec in &s.sectors {
        let listed = s
            .modes
            .iter()
            .filter(|m| m.ell == sec.ell && m.index == 0)
            .count();
        if sec.eigenvalues[0] < 1.0 - 1e-9 {
            assert_eq!(listed, 2 * sec.ell + 1);
        }
    }
}

#[test]
fn zero_point_energy_consistent() {
    let s = shared();
    let zp = zero_point_energy(s, 1e-2).unwrap();
    assert!((zp.e2 - s.zpe_sum).abs() < 1e-12 * s.zpe_sum.abs());
    assert_eq!(zp.zpe, zp.e2 - 1.5);
    assert!(zp.e2 < 0.0);
}

#[test]
fn symplectic_identity_holds() {
    let b = bogoliubov_blocks(shared(), Exec::Parallel).unwrap();
    assert!(b.max_defect < 1e-10, "{}", b.max_defect);
    assert!(b.b_hs_sq > 0.0);
}

#[test]
fn ladder_bounded_by_single_modes() {
    let s = shared();
    let l = physical_ladder(s, 32).unwrap();
    let e = mode_energies(s, 32);
    assert_eq!(l.entries[0].energy, 0.0);
    for (entry, single) in l.entries.iter().skip(1).zip(&e) {
        assert!(entry.energy <= *single);
    }
    assert!(l.frak_m <= s.frak_m);
}

#[test]
fn trial_kernel_small_y_limit() {
    let s = shared();
    let tk = TrialKernels::new(pekar(), s).unwrap();
    let lam = tk.lambda_gauss();
    assert!((lam - pekar().lambda_gauss).abs() < 1e-3 * lam);
    let y = 0.01;
    let n = tk.w_norms([0.0, 0.0, y], [0.0; 3], 10.0).unwrap();
    assert!((n.zero / (y * y) - 2.0 * lam).abs() < 0.02 * 2.0 * lam);
    let far = tk.w_norms_far([0.0; 3], 10.0).unwrap();
    assert!(far.total > n.total);
    let w = tk
        .weight_fn([0.0, 0.0, 3.0], [0.0; 3], 10.0, 0.0, 1.0)
        .unwrap();
    assert!((0.0..=1.0).contains(&w));
}
