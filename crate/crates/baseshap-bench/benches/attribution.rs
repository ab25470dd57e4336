use baseshap::attribution::{interaction_table, order_spectrum, shapley_exact, shapley_sampled};
use baseshap::expr::ExprGraph;
use baseshap::game::TableGame;
use baseshap::synth::tsang_suite;
use criterion::{black_box, criterion_group, criterion_main, Criterion};

fn bench_exact_shapley(c: &mut Criterion) {
    let game = TableGame::random(12, 1);
    c.bench_function("shapley_exact_n12", |b| {
        b.iter(|| shapley_exact(black_box(&game)).unwrap())
    });
}

fn bench_interaction_table(c: &mut Criterion) {
    let game = TableGame::random(12, 2);
    c.bench_function("interaction_table_n12", |b| {
        b.iter(|| interaction_table(black_box(&game), None).unwrap())
    });
    c.bench_function("order_spectrum_n12", |b| {
        b.iter(|| order_spectrum(black_box(&game)).unwrap())
    });
}

fn bench_sampled_shapley(c: &mut Criterion) {
    let game = TableGame::random(12, 3);
    c.bench_function("shapley_sampled_n12_100perms", |b| {
        b.iter(|| shapley_sampled(black_box(&game), 100, 7).unwrap())
    });
}

fn bench_parser_and_grad(c: &mut Criterion) {
    let source = &tsang_suite()[0].expr;
    c.bench_function("expr_parse_tsang1", |b| {
        b.iter(|| ExprGraph::parse(black_box(source)).unwrap())
    });
    let graph = ExprGraph::parse(source).unwrap();
    let x = vec![0.5; graph.arity()];
    c.bench_function("expr_grad_tsang1", |b| {
        b.iter(|| graph.grad(black_box(&x)).unwrap())
    });
}

criterion_group!(
    benches,
    bench_exact_shapley,
    bench_interaction_table,
    bench_sampled_shapley,
    bench_parser_and_grad
);
criterion_main!(benches);
