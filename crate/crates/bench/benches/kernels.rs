use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use wildfan_core::convexint::{build_oscillation, Bump, GridBox, OscillationParams};
use wildfan_core::fan::{beats_selfsimilar, fan_dissipation_profile, find_q, paper_example, verify_fan};
use wildfan_core::hull::in_w;
use wildfan_core::model::{lift_state, EulerState, PressureLaw};
use wildfan_core::search::{boundary_exact, boundary_f64, chain_close, free_vars_of, FreeVars};
use wildfan_core::XReal;

fn exact(c: &mut Criterion) {
    let fan = paper_example();
    c.bench_function("verify_fan", |b| b.iter(|| verify_fan(black_box(&fan))));
    c.bench_function("fan_dissipation_profile", |b| b.iter(|| fan_dissipation_profile(black_box(&fan)).unwrap()));
    c.bench_function("beats_selfsimilar", |b| b.iter(|| beats_selfsimilar(black_box(&fan)).unwrap()));
    let r = &fan.regions[1];
    let cap = r.z.q.clone() * XReal::from(32);
    c.bench_function("in_w", |b| b.iter(|| in_w(&fan.law, &r.rho, black_box(&cap), &r.z).unwrap()));
    let mut slow = c.benchmark_group("slow");
    slow.sample_size(10);
    slow.bench_function("find_q", |b| b.iter(|| find_q(black_box(&fan)).unwrap()));
    slow.finish();

    let bx = boundary_exact(&fan.law, &fan.left, &fan.right).unwrap();
    let vx = free_vars_of(&fan);
    c.bench_function("chain_close_exact", |b| b.iter(|| chain_close(&bx, black_box(&vx)).unwrap()));
    let bf = boundary_f64(&bx);
    let f = |x: &XReal| x.to_f64();
    let vf = FreeVars { mu: vx.mu.each_ref().map(f), rho: vx.rho.each_ref().map(f), m1: vx.m1.each_ref().map(f) };
    c.bench_function("chain_close_f64", |b| b.iter(|| chain_close(&bf, black_box(&vf)).unwrap()));
}

fn oscillation(c: &mut Criterion) {
    let law = PressureLaw::new(&XReal::from(2)).unwrap();
    let lift = |m: [i64; 2]| lift_state(&law, &EulerState::new(XReal::one(), m.map(XReal::from))).unwrap().0;
    let (z1, z2) = (lift([1, 0]), lift([0, 1]));
    let par = OscillationParams {
        z_star: z1.scale(&XReal::ratio(2, 5)).add(&z2.scale(&XReal::ratio(3, 5))),
        z1,
        z2,
        tau1: 0.4,
        bump: Bump::new(GridBox::new([0.0; 3], [0.9731, 1.0419, 0.9977]), 0.2).unwrap(),
        k: 8.0,
        delta: 0.02,
        grid_n: 16,
    };
    let mut g = c.benchmark_group("oscillation");
    g.sample_size(10);
    g.bench_function("build_oscillation_16", |b| b.iter(|| build_oscillation(black_box(&par)).unwrap()));
    g.finish();
}

criterion_group!(benches, exact, oscillation);
criterion_main!(benches);
