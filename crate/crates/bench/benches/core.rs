// SPDX-License-Identifier: Apache-2.0

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use graspforge_core::fixtures;
use graspforge_core::geometry::{closest_point, icosphere, Point3};
use graspforge_core::kinematics::{solve_ik, IkOptions};
use graspforge_core::planner::{force_closure_epsilon, ContactPoint, ContactSet, PlanOptions, Planner, PlannerConfig, PluginRegistry};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn epsilon(c: &mut Criterion) {
    // Four contacts on a tetrahedron around the origin.
    let dirs = [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]];
    let set = ContactSet {
        contacts: dirs
            .iter()
            .map(|d| {
                let n = Vector3::from(*d).normalize();
                ContactPoint { point: Point3::from(n * 0.05), normal: -n, mu: 0.5 }
            })
            .collect(),
        center_of_mass: Point3::origin(),
    };
    c.bench_function("force_closure_epsilon/4 contacts x 8 edges", |b| {
        b.iter(|| force_closure_epsilon(black_box(&set), 8))
    });
}

fn ik(c: &mut Criterion) {
    let robot = fixtures::reference_robot();
    let chain = robot.tcp_chain(robot.end_effector(fixtures::GRIPPER_NAME).unwrap());
    let start = chain.config(&fixtures::neutral_arm_values());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let targets: Vec<_> = (0..64).map(|_| chain.fk(&chain.random_values(&mut rng))).collect();
    let opts = IkOptions::default();
    let mut i = 0;
    c.bench_function("solve_ik/reference arm", |b| {
        b.iter(|| {
            i = (i + 1) % targets.len();
            solve_ik(&chain, black_box(&targets[i]), &start, &opts, i as u64).unwrap()
        })
    });
}

fn closest(c: &mut Criterion) {
    let sphere = icosphere(0.1, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let queries: Vec<Point3> = (0..256)
        .map(|_| Point3::new(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)))
        .collect();
    let mut i = 0;
    c.bench_function("closest_point/icosphere 5120 faces", |b| {
        b.iter(|| {
            i = (i + 1) % queries.len();
            closest_point(&sphere, black_box(&queries[i])).unwrap()
        })
    });
}

fn plan(c: &mut Criterion) {
    let robot = fixtures::reference_robot();
    let task = fixtures::pour_task();
    let registry = PluginRegistry::with_builtins();
    let mut group = c.benchmark_group("plan");
    group.sample_size(10);
    group.bench_function("pour, cold cache", |b| {
        b.iter(|| {
            let planner = Planner::new(&PlannerConfig::default(), &registry).unwrap();
            planner.plan(&task, &robot, &PlanOptions::default()).unwrap()
        })
    });
    let warm = Planner::new(&PlannerConfig::default(), &registry).unwrap();
    warm.plan(&task, &robot, &PlanOptions::default()).unwrap();
    group.bench_function("pour, warm cache", |b| {
        b.iter(|| warm.plan(&task, &robot, &PlanOptions::default()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, epsilon, ik, closest, plan);
criterion_main!(benches);
