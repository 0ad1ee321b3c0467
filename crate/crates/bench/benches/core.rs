use criterion::{black_box, criterion_group, criterion_main, Criterion};

use mms_bench::arena;
use mms_core::bench::{rrt_plan, ArenaFamily, RrtParams};
use mms_core::cellcover2d::{build_cover, channel_decide};
use mms_core::hop::reach_cone_times;
use mms_core::numeric::{int, ratio};
use mms_core::planner::encode_bmc;
use mms_core::qe::{eval, obstacle_free_formula};

fn qe(c: &mut Criterion) {
    let inst = arena(ArenaFamily::LShaped, None);
    c.bench_function("qe/formula", |b| b.iter(|| obstacle_free_formula(black_box(&inst.obstacles[0]))));
    let f = obstacle_free_formula(&inst.obstacles[0]);
    let (p, q) = (vec![int(1), int(2)], vec![ratio(197, 2), int(3)]);
    c.bench_function("qe/eval", |b| b.iter(|| eval(&f, black_box(&p), black_box(&q))));
}

fn hop(c: &mut Criterion) {
    let inst = arena(ArenaFamily::LShaped, None);
    c.bench_function("hop/cone_lp", |b| {
        b.iter(|| reach_cone_times(&inst.mms, black_box(&inst.start), black_box(&inst.target)))
    });
}

fn cover(c: &mut Criterion) {
    let inst = arena(ArenaFamily::Snake, Some(4));
    c.bench_function("cover/snake4", |b| b.iter(|| build_cover(black_box(&inst))));
    let cov = build_cover(&inst).unwrap();
    c.bench_function("cover/decide_snake4", |b| b.iter(|| channel_decide(&inst, black_box(&cov))));
}

fn encode(c: &mut Criterion) {
    let inst = arena(ArenaFamily::Maze, Some(3));
    c.bench_function("planner/encode_maze_k6", |b| b.iter(|| encode_bmc(black_box(&inst), 6)));
}

fn rrt(c: &mut Criterion) {
    let inst = arena(ArenaFamily::LShaped, None);
    let params = RrtParams {
        seed: 1,
        ..RrtParams::scaled_to(&inst, 50)
    };
    let mut g = c.benchmark_group("rrt");
    g.sample_size(10);
    g.bench_function("lshaped", |b| b.iter(|| rrt_plan(black_box(&inst), &params)));
    g.finish();
}

criterion_group!(benches, qe, hop, cover, encode, rrt);
criterion_main!(benches);
