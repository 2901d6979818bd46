use criterion::{black_box, criterion_group, criterion_main, Criterion};

use scalex_bench::{reference_series, synthetic_corpus};
use scalex_core::{bleu, fit_law, huber_loss, objective, FitConfig, LawKind};

fn fits(c: &mut Criterion) {
    for (name, log_law, kind) in [
        ("fit_log_law_10pts", true, LawKind::Log),
        ("fit_power_law_10pts", false, LawKind::Power),
    ] {
        let (_, series) = reference_series(log_law, 10);
        let config = FitConfig::for_law(kind);
        c.bench_function(name, |b| {
            b.iter(|| fit_law(black_box(&series), kind, &config).unwrap())
        });
    }
}

fn objectives(c: &mut Criterion) {
    let (params, series) = reference_series(true, 10);
    c.bench_function("objective_log_law_10pts", |b| {
        b.iter(|| objective(black_box(&series), black_box(&params), 0.1).unwrap())
    });
    c.bench_function("huber_loss", |b| {
        b.iter(|| huber_loss(black_box(1.0), black_box(0.93), 0.1))
    });
}

fn bleu_scoring(c: &mut Criterion) {
    let corpus = synthetic_corpus(1_000, 25);
    c.bench_function("bleu_1000_pairs", |b| b.iter(|| bleu(black_box(&corpus))));
}

criterion_group!(benches, fits, objectives, bleu_scoring);
criterion_main!(benches);
