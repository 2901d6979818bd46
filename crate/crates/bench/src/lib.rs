//! Inputs shared by the benchmarks.

use scalex_core::metrics::TokenizedCorpus;
use scalex_core::reference::{self, generate, log_spaced_tokens, recovery_range};
use scalex_core::{validate_series, LawParams, MetricKind, ObservationSeries, SeriesMeta};

/// Noiseless series of `n` points from the first reference row of the given family.
pub fn reference_series(log_law: bool, n: usize) -> (LawParams, ObservationSeries) {
    let (row, metric) = if log_law {
        (reference::log_law_rows().next(), MetricKind::Bleu)
    } else {
        (
            reference::power_law_rows().next(),
            MetricKind::DownstreamCrossEntropy,
        )
    };
    let params = row
        .expect("reference table has rows of both families")
        .params;
    let (lo, hi) = recovery_range(&params);
    let raw = generate(&params, &log_spaced_tokens(lo, hi, n))
        .expect("rows are valid on their recovery range");
    let series = validate_series(raw, SeriesMeta::new(metric)).expect("generated points are valid");
    (params, series)
}

/// Deterministic corpus of `pairs` sentence pairs over a small vocabulary.
/// Hypotheses are references with every seventh token replaced.
pub fn synthetic_corpus(pairs: usize, len: usize) -> TokenizedCorpus {
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    let data = (0..pairs)
        .map(|_| {
            let reference: Vec<String> = (0..len).map(|_| format!("w{}", next() % 50)).collect();
            let hypothesis = reference
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    if i % 7 == 3 {
                        format!("x{}", next() % 50)
                    } else {
                        t.clone()
                    }
                })
                .collect();
            (hypothesis, reference)
        })
        .collect();
    TokenizedCorpus::new(data).expect("sentences are non-empty")
}
