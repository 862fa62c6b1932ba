use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use armdyn::batch::{inverse_dynamics, Execution, Method};
use armdyn::fixtures;
use armdyn::trajectory::table1;

fn inverse_dynamics_batch(c: &mut Criterion) {
    let model = fixtures::synthetic_7dof();
    let states = table1(7, 0.0, 10.0, 1e-2).states();
    let mut group = c.benchmark_group("inverse_dynamics_1001");
    for method in Method::ALL {
        for exec in [Execution::Sequential, Execution::Parallel] {
            let id = BenchmarkId::new(method.name(), format!("{exec:?}").to_lowercase());
            group.bench_function(id, |b| b.iter(|| inverse_dynamics(&model, &states, method, exec).unwrap()));
        }
    }
    group.finish();
}

fn platform_batch(c: &mut Criterion) {
    let platform = fixtures::synthetic_platform();
    let states = table1(7, 0.0, 10.0, 1e-2).states();
    let mut group = c.benchmark_group("bearing_torque_1001");
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_function(format!("{exec:?}").to_lowercase(), |b| {
            b.iter(|| {
                armdyn::batch::map(exec, &states, |s| armdyn::platform::total_bearing_torque(&platform, s))
            })
        });
    }
    group.finish();
}

criterion_group!(benches, inverse_dynamics_batch, platform_batch);
criterion_main!(benches);
