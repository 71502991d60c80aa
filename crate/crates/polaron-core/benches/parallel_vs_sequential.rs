//! Sector assembly and band sweep under both execution policies.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use polaron_core::band_calculator::{sweep, BandInputs, MomentumGridSpec, SweepSpec};
use polaron_core::hessian_spectrum::{assemble_fixed, prepare_context, HessianConfig};
use polaron_core::pekar_solver::PekarConfig;
use polaron_core::Exec;

fn sectors(c: &mut Criterion) {
    let base = PekarConfig {
        n_r: 400,
        ..PekarConfig::default()
    };
    let hcfg = HessianConfig {
        n_k: 64,
        k_max_proxy: 10.0,
        ..HessianConfig::default()
    };
    let ctx = prepare_context(&base, &hcfg, hcfg.k_max_proxy).expect("context");
    let mut g = c.benchmark_group("hessian_sectors");
    g.sample_size(10);
    for (name, exec) in [
        ("sequential", Exec::Sequential),
        ("parallel", Exec::Parallel),
    ] {
        g.bench_with_input(BenchmarkId::new(name, 8), &exec, |b, &exec| {
            b.iter(|| assemble_fixed(&ctx, &hcfg, 8, exec).expect("spectrum"))
        });
    }
    g.finish();
}

fn band_sweep(c: &mut Criterion) {
    let inputs = BandInputs {
        e_pek: -6.87e-4,
        m_lp: 4.55e-7,
        zpe: -2.8,
        ladder: (0..64).map(|i| 0.6 + 0.005 * i as f64).collect(),
        sqrt_lambda: (0..512).map(|i| 0.6 + 0.0007 * i as f64).collect(),
    };
    let spec = SweepSpec {
        alphas: (1..=200).map(|a| 5.0 + a as f64).collect(),
        momenta: MomentumGridSpec::FractionOfCritical(
            (0..=100).map(|i| i as f64 / 100.0).collect(),
        ),
        n_bands: 64,
        c_err: 0.0,
    };
    let mut g = c.benchmark_group("band_sweep");
    for (name, exec) in [
        ("sequential", Exec::Sequential),
        ("parallel", Exec::Parallel),
    ] {
        g.bench_function(name, |b| {
            b.iter(|| sweep(&inputs, &spec, exec).expect("sweep"))
        });
    }
    g.finish();
}

criterion_group!(benches, sectors, band_sweep);
criterion_main!(benches);
