use std::collections::BTreeMap;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rtlic_core::concolic::random_test;
use rtlic_core::frontend::{load_design, SourceDesign};
use rtlic_core::instrument::plain_design;
use rtlic_core::pipeline::{run, Mode, RunConfig};
use rtlic_core::sim::simulate;
use rtlic_core::solver::random::{random_cv, Shape};
use rtlic_core::solver::{solve_internal, DEFAULT_MAX_CONFLICTS};
use rtlic_core::target::TargetLocator;

const RAM: &str = include_str!("../../core/fixtures/ram.v");

fn params() -> BTreeMap<String, i64> {
    [("ADDR_W", 4), ("DATA_W", 8), ("ADDR", 4), ("DATA", 0xAB)].into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn solver(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cvs: Vec<_> = (0..64).map(|_| random_cv(&mut rng, &Shape::default())).collect();
    let mut i = 0;
    c.bench_function("solve_random_cv", |b| {
        b.iter_batched(
            || {
                i = (i + 1) % cvs.len();
                &cvs[i]
            },
            |cv| black_box(solve_internal(cv, DEFAULT_MAX_CONFLICTS)),
            BatchSize::SmallInput,
        )
    });
}

fn simulation(c: &mut Criterion) {
    let d = load_design(&SourceDesign::new("ram.v", RAM), &params()).unwrap();
    let inst = plain_design(&d);
    let t = random_test(&d, 100, 3);
    c.bench_function("simulate_ram_100_cycles", |b| b.iter(|| black_box(simulate(&inst, &t, 100).unwrap())));
}

fn pipeline(c: &mut Criterion) {
    let src = SourceDesign::new("ram.v", RAM);
    let mut cfg = RunConfig::new("ram.v", TargetLocator::Line { line: 37, polarity: true });
    cfg.params = params();
    c.bench_function("incremental_ram_line37", |b| b.iter(|| black_box(run(&src, &cfg).unwrap())));
    let mut base = cfg.clone();
    base.mode = Mode::Baseline;
    c.bench_function("baseline_ram_line37", |b| b.iter(|| black_box(run(&src, &base).unwrap())));
}

criterion_group!(benches, solver, simulation, pipeline);
criterion_main!(benches);
