use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::rngs::StdRng;
use rand::SeedableRng;
use topoforge::homp::{DomainSignature, ReadoutKind, Task};
use topoforge::lifting::{apply_lifting, LiftingConfig, StructuralLifting};
use topoforge::numerics::Tape;
use topoforge::pipeline::{synthetic_sbm, SbmSpec};
use topoforge::{HompModel, ModelConfig};

fn forward_backward(c: &mut Criterion) {
    let mut group = c.benchmark_group("homp");
    group.sample_size(20);
    for nodes in [300, 1200] {
        let spec = SbmSpec { nodes, blocks: 3, p_in: 30.0 / nodes as f64, p_out: 3.0 / nodes as f64, feature_dim: 16, noise: 0.5, seed: 1 };
        let g = synthetic_sbm(&spec).unwrap();
        let fc = apply_lifting(&g, &LiftingConfig::new(StructuralLifting::Clique { max_dim: 2 })).unwrap();
        for readout in [ReadoutKind::Dr, ReadoutKind::Sdp] {
            let mut cfg = ModelConfig::new(Task::NodeClassification);
            cfg.readout = readout;
            let model = HompModel::new(cfg, DomainSignature::of(&fc, 3)).unwrap();
            let state = model.init();
            let batch = model.prepare(std::slice::from_ref(&fc)).unwrap();
            let loss_kind = model.default_loss();
            let targets = batch.targets.clone().unwrap();
            let tag = format!("{readout:?}").to_lowercase();
            group.bench_with_input(BenchmarkId::new(format!("forward_{tag}"), nodes), &batch, |b, batch| {
                b.iter(|| {
                    let mut tape = Tape::new();
                    let p = model.predict(&mut tape, &state, black_box(batch), false, &mut StdRng::seed_from_u64(0)).unwrap();
                    black_box(tape.value(p).get(0, 0))
                })
            });
            group.bench_with_input(BenchmarkId::new(format!("train_step_{tag}"), nodes), &batch, |b, batch| {
                b.iter(|| {
                    let mut tape = Tape::new();
                    let p = model.predict(&mut tape, &state, black_box(batch), true, &mut StdRng::seed_from_u64(0)).unwrap();
                    let l = model.loss(&mut tape, p, &targets, None, loss_kind).unwrap();
                    black_box(tape.backward(l).unwrap())
                })
            });
        }
    }
    group.finish();
}

criterion_group!(benches, forward_backward);
criterion_main!(benches);
