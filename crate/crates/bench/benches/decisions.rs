use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use gptcast_bench::{classical, pentagon, square};
use gptcast::channel::compression;
use gptcast::decide::{broadcaster_exists, cloner_exists, StateSet};
use gptcast::random::random_endochannel;
use gptcast::{max_tensor, min_tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn composites(c: &mut Criterion) {
    let s = square();
    let p = pentagon();
    c.bench_function("square max tensor vertices", |b| b.iter(|| max_tensor(&s, &s).joint().vertices().len()));
    c.bench_function("pentagon min tensor facets", |b| b.iter(|| min_tensor(&p, &p).joint().hrep().inequalities.len()));
}

fn decisions(c: &mut Criterion) {
    let s = square();
    let max = max_tensor(&s, &s);
    max.joint().hrep();
    let all = StateSet::all_vertices(&s);
    c.bench_function("square broadcaster lp (no)", |b| b.iter(|| broadcaster_exists(&all, &max).unwrap().verdict));
    let pair = StateSet::new(s.clone(), s.vertices()[..2].to_vec()).unwrap();
    c.bench_function("square cloner lp (two vertices)", |b| b.iter(|| cloner_exists(&pair, &max).unwrap().verdict));

    let k = classical(4);
    let min = min_tensor(&k, &k);
    min.joint().hrep();
    let simplex = StateSet::all_vertices(&k);
    c.bench_function("classical(4) broadcaster lp (yes)", |b| {
        b.iter(|| broadcaster_exists(&simplex, &min).unwrap().verdict)
    });
}

fn compressions(c: &mut Criterion) {
    let s = square();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    c.bench_function("square compression", |b| {
        b.iter_batched(|| random_endochannel(&mut rng, &s), |t| compression(&t).unwrap(), BatchSize::SmallInput)
    });
}

criterion_group!(benches, composites, decisions, compressions);
criterion_main!(benches);
