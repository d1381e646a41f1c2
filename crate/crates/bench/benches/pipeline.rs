use std::hint::black_box;

use alert_swarm::gso::{select_communication_domain, GsoParams, LuciferinState, PeerView};
use alert_swarm::sim::{ProfileKind, World};
use alert_swarm::{AgentId, Position, WorldConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn domain_selection(c: &mut Criterion) {
    let params = GsoParams {
        r_s: 50.0,
        ..Default::default()
    };
    let mut group = c.benchmark_group("select_communication_domain");
    for n in [10u32, 50, 200] {
        let swarm: Vec<PeerView> = (0..n)
            .map(|i| PeerView {
                id: AgentId(i),
                position: Position::new(f64::from(i % 17) * 3.0, f64::from(i % 13) * 3.0),
                luciferin: 1.0 + f64::from(i % 11) * 0.1,
            })
            .collect();
        let prev = LuciferinState { g: 1.0, r_d: 40.0 };
        group.bench_with_input(BenchmarkId::from_parameter(n), &swarm, |b, swarm| {
            b.iter(|| {
                select_communication_domain(
                    AgentId(0),
                    Position::new(0.0, 0.0),
                    prev,
                    0.5,
                    black_box(swarm),
                    &params,
                )
            })
        });
    }
    group.finish();
}

fn world_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("world_step");
    group.sample_size(20);
    for n in [50u32, 200] {
        let mut world = World::spawn(WorldConfig {
            n_agents: n,
            ..Default::default()
        })
        .unwrap();
        // warm up so logs and domains are populated
        for _ in 0..30 {
            world.advance();
        }
        group.bench_with_input(BenchmarkId::from_parameter(n), &world, |b, w| {
            b.iter(|| black_box(w.step()))
        });
    }
    group.finish();
}

fn all_honest_run(c: &mut Criterion) {
    let config = WorldConfig {
        ticks: 100,
        profile_mix: [(ProfileKind::Honest, 1.0)].into(),
        ..Default::default()
    };
    c.bench_function("run_experiment/50x100_honest", |b| {
        b.iter(|| alert_swarm::run_experiment(black_box(&config)).unwrap())
    });
}

criterion_group!(benches, domain_selection, world_step, all_honest_run);
criterion_main!(benches);
