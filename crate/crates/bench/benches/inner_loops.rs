use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use tempart_bench::{dataset, full_model, panel};
use tempart_core::prior::sample_joint_prior_replicate;
use tempart_core::{adjusted_rand_index, point_estimate_partition, EppfSpec, PartitionLoss, Sampler, TrpmParams};

fn gibbs_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep");
    for &(m, t) in &[(20usize, 10usize), (60, 12)] {
        let data = panel(m, t, 0.5, 1);
        let mut sampler = Sampler::new(dataset(&data), full_model(3)).unwrap();
        for _ in 0..50 {
            sampler.sweep().unwrap();
        }
        group.bench_with_input(BenchmarkId::from_parameter(format!("m{m}_t{t}")), &(), |b, _| {
            b.iter(|| sampler.sweep().unwrap())
        });
    }
    group.finish();
}

fn prior_draw(c: &mut Criterion) {
    let params = TrpmParams::constant(60, 12, 0.5, EppfSpec::crp(1.0).unwrap()).unwrap();
    let mut r = 0u64;
    c.bench_function("prior_draw_m60_t12", |b| {
        b.iter(|| {
            r += 1;
            black_box(sample_joint_prior_replicate(&params, 9, r))
        })
    });
}

fn ari(c: &mut Criterion) {
    let data = panel(500, 2, 0.3, 5);
    let (p, q) = (&data.partitions[0], &data.partitions[1]);
    c.bench_function("ari_m500", |b| b.iter(|| adjusted_rand_index(black_box(p), black_box(q)).unwrap()));
}

fn point_estimate(c: &mut Criterion) {
    let data = panel(60, 1, 0.0, 7);
    let mut sampler = Sampler::new(dataset(&data), full_model(11)).unwrap();
    let draws: Vec<_> = (0..500)
        .map(|_| {
            sampler.sweep().unwrap();
            sampler.state().slices[0].partition()
        })
        .collect();
    c.bench_function("vi_lb_estimate_500_draws", |b| {
        b.iter(|| point_estimate_partition(black_box(&draws), PartitionLoss::ViLb).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = gibbs_sweep, prior_draw, ari, point_estimate
}
criterion_main!(benches);
