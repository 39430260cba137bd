use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ppnmm::chmc::ChmcConfig;
use ppnmm::gibbs::{initial_state, sample_b, sample_m, sample_z, PriorConfig, StepContext};
use ppnmm::synth::{generate, SynthSpec};
use ppnmm::Exec;

fn sweeps(c: &mut Criterion) {
    let spec = SynthSpec {
        n_rows: 20,
        n_cols: 20,
        n_bands: 50,
        seed: 3,
        ..SynthSpec::default()
    };
    let (y, truth) = generate(&spec, Exec::Sequential).expect("scene");
    let priors = PriorConfig::default();
    let base = initial_state(&y, &truth.m_true, &priors).expect("state");
    let cz = ChmcConfig::latent_default();
    let cm = ChmcConfig::endmember_default();

    let mut group = c.benchmark_group("gibbs_blocks");
    group.sample_size(10);
    for exec in [Exec::Sequential, Exec::Parallel] {
        let ctx = StepContext { seed: 1, iteration: 0, exec };
        let label = format!("{exec:?}");
        group.bench_with_input(BenchmarkId::new("latent", &label), &ctx, |b, ctx| {
            let mut s = base.clone();
            b.iter(|| sample_z(&mut s, &y, &cz, 1, *ctx).expect("sweep"))
        });
        group.bench_with_input(BenchmarkId::new("endmember", &label), &ctx, |b, ctx| {
            let mut s = base.clone();
            b.iter(|| sample_m(&mut s, &y, &priors, &truth.m_true, &cm, 1, *ctx).expect("sweep"))
        });
        group.bench_with_input(BenchmarkId::new("nonlinearity", &label), &ctx, |b, ctx| {
            let mut s = base.clone();
            b.iter(|| sample_b(&mut s, &y, *ctx).expect("sweep"))
        });
    }
    group.finish();
}

criterion_group!(benches, sweeps);
criterion_main!(benches);
