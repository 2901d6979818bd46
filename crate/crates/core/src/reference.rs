//! Reference coefficient sets for T5-3B checkpoints pretrained on MC4 splits
//! and finetuned on WMT translation data, with the held-out Huber error each
//! fit reached. Used as generators for synthetic recovery tests and benches.
//!
//! One log-law row of the 50/50 en-ro group has an unreadable `log_a` and is
//! omitted.

use crate::model::{LawParams, LogLaw, PowerLaw};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceFit {
    pub pretraining: &'static str,
    pub task: &'static str,
    /// Finetuning set size as labelled in the source run (e.g. "6M" tokens).
    pub finetune: &'static str,
    pub params: LawParams,
    pub prediction_error: f64,
}

const fn log(log_a: f64, alpha: f64, beta: f64) -> LawParams {
    LawParams::Log(LogLaw { log_a, alpha, beta })
}

const fn pow(e: f64, a: f64, alpha: f64) -> LawParams {
    LawParams::Power(PowerLaw { e, a, alpha })
}

macro_rules! rows {
    ($($pre:literal, $task:literal, $ft:literal, $params:expr, $err:expr;)*) => {
        &[$(ReferenceFit {
            pretraining: $pre,
            task: $task,
            finetune: $ft,
            params: $params,
            prediction_error: $err,
        }),*]
    };
}

/// BLEU log-laws, 50/50 bilingual pretraining mixtures.
pub const BLEU_BILINGUAL: &[ReferenceFit] = rows! {
    "50% en + 50% de", "en-de", "6M", log(-180.75, 9.00, 0.75), 0.034;
    "50% en + 50% de", "en-de", "31M", log(-1.68e3, 84.04, 0.49), 0.050;
    "50% en + 50% de", "en-de", "3B", log(-1.64e8, 9.91e6, 0.19), 0.048;
    "50% en + 50% fr", "en-fr", "42M", log(-1.82e4, 8.98e2, 0.42), 0.061;
    "50% en + 50% fr", "en-fr", "210M", log(-2.33e4, 1.21e3, 0.40), 0.013;
    "50% en + 50% fr", "en-fr", "21B", log(5.08e3, 4.61e8, 0.16), 0.005;
    "50% en + 50% ro", "en-ro", "625K", log(-36.02, 1.77, 1.28), 0.042;
    "50% en + 50% ro", "en-ro", "312M", log(-1.82e4, 9.04e2, 0.40), 0.015;
};

/// Downstream cross-entropy power-laws, 50/50 bilingual pretraining mixtures.
pub const CE_BILINGUAL: &[ReferenceFit] = rows! {
    "50% en + 50% de", "en-de", "6M", pow(3.21e-5, 35.45, 0.64), 1.36e-12;
    "50% en + 50% de", "en-de", "31M", pow(3.28e-5, 4.70e2, 0.78), 3.17e-12;
    "50% en + 50% de", "en-de", "3B", pow(2.24e-5, 2.56e-2, 0.36), 5.76e-14;
    "50% en + 50% fr", "en-fr", "42M", pow(2.72e-5, 2.01e6, 1.18), 7.52e-13;
    "50% en + 50% fr", "en-fr", "210M", pow(2.57e-5, 1.75e7, 1.30), 2.24e-13;
    "50% en + 50% fr", "en-fr", "21B", pow(1.11e-7, 3.41e-5, 1.82e-2), 5.20e-14;
    "50% en + 50% ro", "en-ro", "625K", pow(2.45e-5, 0.49, 0.41), 3.61e-12;
    "50% en + 50% ro", "en-ro", "3M", pow(2.62e-5, 2.40, 0.49), 2.19e-12;
    "50% en + 50% ro", "en-ro", "312M", pow(2.08e-5, 3.94, 0.53), 5.95e-12;
};

/// BLEU log-laws, English-only pretraining.
pub const BLEU_ENGLISH_ONLY: &[ReferenceFit] = rows! {
    "100% en", "en-de", "6M", log(-1.88, 0.15, 3.30), 0.014;
    "100% en", "en-de", "31M", log(-1.81e4, 896.12, 0.28), 0.006;
    "100% en", "en-de", "3B", log(1.02e-7, 104.92, 0.42), 0.015;
    "100% en", "en-fr", "42M", log(1.00, 2.57e-5, 1.11e4), 0.042;
    "100% en", "en-fr", "210M", log(-6.38e7, 3.43e6, 0.20), 0.034;
    "100% en", "en-fr", "21B", log(204.81, 3.80e14, 9.97e-3), 0.004;
    "100% en", "en-ro", "625K", log(-10.54, 0.55, 1.12), 0.008;
    "100% en", "en-ro", "3M", log(-40.41, 2.11, 0.79), 0.025;
    "100% en", "en-ro", "312M", log(3.61, 8.17e5, 0.19), 0.018;
};

/// Downstream cross-entropy power-laws, English-only pretraining.
pub const CE_ENGLISH_ONLY: &[ReferenceFit] = rows! {
    "100% en", "en-de", "6M", pow(3.22e-13, 3.18e-3, 0.15), 5.79e-12;
    "100% en", "en-de", "31M", pow(3.24e-5, 5.20e-3, 0.20), 9.25e-13;
    "100% en", "en-de", "3B", pow(2.24e-5, 2.56e-2, 0.36), 5.76e-14;
    "100% en", "en-fr", "42M", pow(3.49e-5, 1.05e-2, 0.25), 3.63e-13;
    "100% en", "en-fr", "210M", pow(4.24e-5, 19.39, 0.66), 5.40e-13;
    "100% en", "en-fr", "21B", pow(1.26e-7, 2.59e-5, 4.81e-3), 3.63e-14;
    "100% en", "en-ro", "625K", pow(5.79e-12, 1.03e-3, 7.76e-2), 5.56e-12;
    "100% en", "en-ro", "3M", pow(1.78e-12, 9.98e-4, 8.33e-2), 8.23e-12;
    "100% en", "en-ro", "312M", pow(5.85e-5, 1.37e3, 0.88), 3.05e-13;
};

pub fn log_law_rows() -> impl Iterator<Item = &'static ReferenceFit> {
    BLEU_BILINGUAL.iter().chain(BLEU_ENGLISH_ONLY)
}

pub fn power_law_rows() -> impl Iterator<Item = &'static ReferenceFit> {
    CE_BILINGUAL.iter().chain(CE_ENGLISH_ONLY)
}

pub fn all_rows() -> impl Iterator<Item = &'static ReferenceFit> {
    log_law_rows().chain(power_law_rows())
}

/// `n` token counts spaced evenly in log-space over `[lo, hi]`, rounded to integers.
pub fn log_spaced_tokens(lo: f64, hi: f64, n: usize) -> Vec<u64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            let t = if n > 1 {
                i as f64 / (n - 1) as f64
            } else {
                0.0
            };
            (a + t * (b - a)).exp().round() as u64
        })
        .collect()
}

/// Token range used for synthetic recovery: from 1.5x the log-law validity
/// boundary (but at least 1e8 tokens) to 1e11 tokens.
pub fn recovery_range(params: &LawParams) -> (f64, f64) {
    let lo = match params {
        LawParams::Log(l) => crate::laws::validity_threshold(l).map_or(f64::INFINITY, |t| 1.5 * t),
        LawParams::Power(_) => 0.0,
    };
    (lo.max(1e8), 1e11)
}

/// Noiseless `(d_p, value)` pairs generated by `params`.
pub fn generate(params: &LawParams, tokens: &[u64]) -> crate::Result<Vec<(u64, f64)>> {
    tokens
        .iter()
        .map(|&d| Ok((d, params.eval(d as f64)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_are_valid_laws() {
        assert_eq!(log_law_rows().count(), 17);
        assert_eq!(power_law_rows().count(), 18);
        for row in all_rows() {
            row.params.check().unwrap();
        }
    }
}
