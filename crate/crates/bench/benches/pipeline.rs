use std::hint::black_box;

use attaingraph_bench::{busiest_player, dataset, graph};
use attaingraph_core::attainment::{annotate_graph, completion_rates};
use attaingraph_core::cf::{train, TrainParams};
use attaingraph_core::datagen::{generate_dataset, planted_ratings, GenConfig, PlantedConfig};
use attaingraph_core::evalstats::{genre_histograms, ks_statistic, lomax_fit, LomaxParams};
use attaingraph_core::queryexec::evaluate;
use attaingraph_core::querylang::{compile, parse, recommendation_query, unparse, validate, LISTING_1};
use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn attainment(c: &mut Criterion) {
    let ds = dataset(0.1);
    c.bench_function("annotate_graph/scale0.1", |b| {
        b.iter_batched(
            || ds.graph.clone(),
            |mut g| annotate_graph(&mut g, &ds.achievements).unwrap(),
            BatchSize::LargeInput,
        )
    });
    let big = ds.achievements.iter().max_by_key(|t| t.owners().len()).unwrap();
    c.bench_function("completion_rates/largest_game", |b| {
        b.iter(|| completion_rates(black_box(big)).unwrap())
    });
}

fn query(c: &mut Criterion) {
    c.bench_function("parse+validate/listing", |b| {
        b.iter(|| compile(black_box(LISTING_1)).unwrap())
    });
    let ast = parse(LISTING_1).unwrap();
    c.bench_function("unparse/listing", |b| b.iter(|| unparse(black_box(&ast))));

    let g = graph(0.1);
    let who = busiest_player(&g);
    for (name, exclude, genre) in [
        ("sample", false, None),
        ("new_game", true, None),
        ("strategy", true, Some("Strategy")),
    ] {
        let q = validate(&recommendation_query(&who, exclude, genre, 5)).unwrap();
        c.bench_function(&format!("evaluate/{name}/scale0.1"), |b| {
            b.iter(|| evaluate(black_box(&q), &g).unwrap())
        });
    }
}

fn recommender(c: &mut Criterion) {
    let data = planted_ratings(&PlantedConfig::default());
    let params = TrainParams {
        epochs: 1,
        ..TrainParams::default()
    };
    let mut group = c.benchmark_group("svdpp");
    group.sample_size(10);
    group.bench_function("one_epoch/planted", |b| b.iter(|| train(&data, &params).unwrap()));
    group.finish();
}

fn stats(c: &mut Criterion) {
    let sample = LomaxParams::PAPER.sample(&mut ChaCha8Rng::seed_from_u64(1), 100_000);
    let mut group = c.benchmark_group("evalstats");
    group.sample_size(10);
    group.bench_function("lomax_fit/1e5", |b| b.iter(|| lomax_fit(black_box(&sample)).unwrap()));
    group.bench_function("ks/1e5", |b| {
        b.iter(|| ks_statistic(black_box(&sample), &LomaxParams::PAPER).unwrap())
    });
    let g = graph(0.1);
    group.bench_function("genre_histograms/scale0.1", |b| b.iter(|| genre_histograms(&g, 50)));
    group.finish();
}

fn generation(c: &mut Criterion) {
    let mut group = c.benchmark_group("datagen");
    group.sample_size(10);
    group.bench_function("scale0.1", |b| {
        b.iter(|| generate_dataset(&GenConfig::with_scale(0.1, 7)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, attainment, query, recommender, stats, generation);
criterion_main!(benches);
