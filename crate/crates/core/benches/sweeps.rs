//! Sequential vs. rayon backends on the three batch workloads: the light
//! equivalence sweep, the dispatch matrix and multi-seed scenario runs.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dice_core::actuator::{self, ActuatorSettings, NoteContext, PeltierMode};
use dice_core::batch;
use dice_core::dsl::{default_program, eval, MappingTarget};
use dice_core::link::LinkConditions;
use dice_core::model::{ActuatorKind, CubeKind, NormalizedValue, SensorKind};
use dice_core::sensor;
use dice_core::sim::{run_scenario, SimConfig};
use dice_core::sweep;

fn light_equivalence(c: &mut Criterion) {
    let program = default_program(
        MappingTarget::Sensor(SensorKind::Light),
        PeltierMode::Bipolar,
    );
    let check = |i: usize| {
        let x = i as f64;
        eval(&program, x) == Ok(i64::from(sensor::normalize_light(x)))
    };
    let mut g = c.benchmark_group("light_equivalence");
    g.bench_function("sequential", |b| {
        b.iter(|| black_box(batch::map_sequential(65536, check)))
    });
    #[cfg(feature = "parallel")]
    g.bench_function("parallel", |b| {
        b.iter(|| black_box(batch::map_parallel(65536, check)))
    });
    g.finish();
}

fn dispatch_matrix(c: &mut Criterion) {
    let settings = ActuatorSettings::default();
    let case = |i: usize| {
        let v = NormalizedValue::new((i % 25) as u8, SensorKind::ALL[i / 150]).unwrap();
        let a = ActuatorKind::ALL[(i / 25) % 6];
        actuator::dispatch(v, a, &settings, &mut NoteContext::default())
    };
    let mut g = c.benchmark_group("dispatch_matrix");
    g.bench_function("sequential", |b| {
        b.iter(|| black_box(batch::map_sequential(900, case)))
    });
    #[cfg(feature = "parallel")]
    g.bench_function("parallel", |b| {
        b.iter(|| black_box(batch::map_parallel(900, case)))
    });
    g.finish();
}

fn multi_seed(c: &mut Criterion) {
    let events = sweep::combination_sweep(125);
    let cfg = SimConfig::default();
    let link = LinkConditions {
        drop_probability: 0.2,
        base_latency_ms: 20,
        jitter_ms: 10,
        seed: 0,
    };
    let mut g = c.benchmark_group("multi_seed");
    g.sample_size(20);
    for seeds in [8usize, 64] {
        let run = |i: usize| {
            run_scenario(
                cfg.clone(),
                LinkConditions {
                    seed: i as u64,
                    ..link
                },
                &events,
            )
        };
        g.bench_with_input(BenchmarkId::new("sequential", seeds), &seeds, |b, &n| {
            b.iter(|| black_box(batch::map_sequential(n, run)))
        });
        #[cfg(feature = "parallel")]
        g.bench_with_input(BenchmarkId::new("parallel", seeds), &seeds, |b, &n| {
            b.iter(|| black_box(batch::map_parallel(n, run)))
        });
    }
    g.finish();
}

criterion_group!(benches, light_equivalence, dispatch_matrix, multi_seed);
criterion_main!(benches);
