//! Corpus-level BLEU with a single reference per hypothesis.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 4;
/// Floor applied to zero precisions when smoothing is requested.
pub const SMOOTHING_EPSILON: f64 = 1e-9;

/// Sentence pairs of pre-tokenized `(hypothesis, reference)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedCorpus {
    pairs: Vec<(Vec<String>, Vec<String>)>,
}

impl TokenizedCorpus {
    pub fn new(pairs: Vec<(Vec<String>, Vec<String>)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidCorpus("corpus has no sentence pairs".into()));
        }
        if let Some(i) = pairs.iter().position(|(h, r)| h.is_empty() || r.is_empty()) {
            return Err(Error::InvalidCorpus(format!(
                "sentence pair {} has an empty side",
                i + 1
            )));
        }
        Ok(Self { pairs })
    }

    /// Splits each line on whitespace. The two sides must have the same number of lines.
    pub fn from_lines<'a>(
        hypotheses: impl IntoIterator<Item = &'a str>,
        references: impl IntoIterator<Item = &'a str>,
    ) -> Result<Self> {
        let split = |s: &str| s.split_whitespace().map(str::to_owned).collect::<Vec<_>>();
        let hyps: Vec<_> = hypotheses.into_iter().map(split).collect();
        let refs: Vec<_> = references.into_iter().map(split).collect();
        if hyps.len() != refs.len() {
            return Err(Error::InvalidCorpus(format!(
                "{} hypotheses but {} references",
                hyps.len(),
                refs.len()
            )));
        }
        Self::new(hyps.into_iter().zip(refs).collect())
    }

    pub fn pairs(&self) -> &[(Vec<String>, Vec<String>)] {
        &self.pairs
    }

    pub fn hypothesis_len(&self) -> usize {
        self.pairs.iter().map(|(h, _)| h.len()).sum()
    }

    pub fn reference_len(&self) -> usize {
        self.pairs.iter().map(|(_, r)| r.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BleuBreakdown {
    /// Modified precisions for n = 1..=4.
    pub precisions: [f64; MAX_ORDER],
    pub matches: [u64; MAX_ORDER],
    pub totals: [u64; MAX_ORDER],
    pub hypothesis_len: u64,
    pub reference_len: u64,
    pub brevity_penalty: f64,
    pub score: f64,
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Clipped matches and total hypothesis n-grams across the corpus.
fn clipped_counts(corpus: &TokenizedCorpus, n: usize) -> (u64, u64) {
    let (mut matched, mut total) = (0, 0);
    for (hyp, reference) in &corpus.pairs {
        let ref_counts = ngram_counts(reference, n);
        for (gram, count) in ngram_counts(hyp, n) {
            matched += count.min(ref_counts.get(gram).copied().unwrap_or(0));
            total += count;
        }
    }
    (matched, total)
}

fn check_order(n: usize) -> Result<()> {
    if (1..=MAX_ORDER).contains(&n) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "n-gram order must be in 1..=4, got {n}"
        )))
    }
}

/// Corpus-level modified n-gram precision: each hypothesis n-gram counts at
/// most as often as it occurs in its reference.
pub fn ngram_precision(corpus: &TokenizedCorpus, n: usize) -> Result<f64> {
    check_order(n)?;
    match clipped_counts(corpus, n) {
        (_, 0) => Err(Error::EmptyAfterNgrams { n }),
        (m, t) => Ok(m as f64 / t as f64),
    }
}

/// `1` when the hypothesis is at least as long as the reference, else `exp(1 - r / c)`.
pub fn brevity_penalty(total_hyp_len: usize, total_ref_len: usize) -> f64 {
    if total_hyp_len >= total_ref_len {
        1.0
    } else {
        (1.0 - total_ref_len as f64 / total_hyp_len as f64).exp()
    }
}

/// Unsmoothed BLEU-4.
pub fn bleu(corpus: &TokenizedCorpus) -> BleuBreakdown {
    bleu_with(corpus, false)
}

/// BLEU-4, optionally raising zero precisions to [`SMOOTHING_EPSILON`].
/// An order with no hypothesis n-grams at all has precision 0.
pub fn bleu_with(corpus: &TokenizedCorpus, smooth: bool) -> BleuBreakdown {
    let mut precisions = [0.0; MAX_ORDER];
    let mut matches = [0; MAX_ORDER];
    let mut totals = [0; MAX_ORDER];
    for n in 1..=MAX_ORDER {
        let (m, t) = clipped_counts(corpus, n);
        matches[n - 1] = m;
        totals[n - 1] = t;
        let p = if t == 0 { 0.0 } else { m as f64 / t as f64 };
        precisions[n - 1] = if smooth && p == 0.0 {
            SMOOTHING_EPSILON
        } else {
            p
        };
    }
    let (c, r) = (corpus.hypothesis_len(), corpus.reference_len());
    let bp = brevity_penalty(c, r);
    let score = bp * precisions.iter().product::<f64>().powf(0.25);
    BleuBreakdown {
        precisions,
        matches,
        totals,
        hypothesis_len: c as u64,
        reference_len: r as u64,
        brevity_penalty: bp,
        score,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn corpus(pairs: &[(&str, &str)]) -> TokenizedCorpus {
        TokenizedCorpus::from_lines(pairs.iter().map(|p| p.0), pairs.iter().map(|p| p.1)).unwrap()
    }

    #[test]
    fn clipping() {
        assert_eq!(
            ngram_precision(&corpus(&[("a a a", "a b")]), 1).unwrap(),
            1.0 / 3.0
        );
        assert_eq!(ngram_precision(&corpus(&[("a b", "c d")]), 1).unwrap(), 0.0);
    }

    #[test]
    fn short_hypotheses_have_no_ngrams() {
        let c = corpus(&[("a b", "a b c d")]);
        assert_eq!(
            ngram_precision(&c, 3).unwrap_err(),
            Error::EmptyAfterNgrams { n: 3 }
        );
        assert!(ngram_precision(&c, 5).is_err());
        let b = bleu(&c);
        assert_eq!(b.precisions[2], 0.0);
        assert_eq!(b.score, 0.0);
    }

    #[test]
    fn brevity_penalty_values() {
        assert_eq!(brevity_penalty(10, 10), 1.0);
        assert_eq!(brevity_penalty(20, 10), 1.0);
        assert!((brevity_penalty(5, 10) - (-1f64).exp()).abs() < 1e-15);
        assert!((brevity_penalty(5, 10) - 0.3679).abs() < 1e-4);
    }

    #[test]
    fn identical_corpus_scores_one() {
        let c = corpus(&[
            ("the cat sat on the mat", "the cat sat on the mat"),
            ("a b c d", "a b c d"),
        ]);
        let b = bleu(&c);
        assert_eq!(b.score, 1.0);
        assert_eq!(b.precisions, [1.0; 4]);
        assert_eq!(b.brevity_penalty, 1.0);
    }

    #[test]
    fn zero_four_gram_matches_zero_score() {
        let c = corpus(&[("a b c d e", "a b c x d e")]);
        let b = bleu(&c);
        assert_eq!(b.matches[3], 0);
        assert_eq!(b.score, 0.0);
        let smoothed = bleu_with(&c, true);
        assert!(smoothed.score > 0.0 && smoothed.score < 0.01);
    }

    #[test]
    fn hand_computed_score() {
        let c = corpus(&[("the cat sat on a mat", "the cat sat on the mat")]);
        let b = bleu(&c);
        assert_eq!(b.matches, [5, 3, 2, 1]);
        assert_eq!(b.totals, [6, 5, 4, 3]);
        let c = corpus(&[("the cat sat on the red mat", "the cat sat on the mat")]);
        let b = bleu(&c);
        assert_eq!(b.matches, [6, 4, 3, 2]);
        assert_eq!(b.totals, [7, 6, 5, 4]);
        let expected = (6.0 / 7.0 * 4.0 / 6.0 * 3.0 / 5.0 * 2.0 / 4.0f64).powf(0.25);
        assert!((b.score - expected).abs() < 1e-15);
    }

    #[test]
    fn rejects_empty_sides() {
        assert!(TokenizedCorpus::new(vec![]).is_err());
        assert!(TokenizedCorpus::from_lines(["a"], [""]).is_err());
        assert!(TokenizedCorpus::from_lines(["a", "b"], ["a"]).is_err());
    }

    fn arb_corpus() -> impl Strategy<Value = TokenizedCorpus> {
        let sentence = prop::collection::vec(0u8..6, 1..10)
            .prop_map(|v| v.into_iter().map(|t| format!("w{t}")).collect::<Vec<_>>());
        prop::collection::vec((sentence.clone(), sentence), 1..12)
            .prop_map(|pairs| TokenizedCorpus::new(pairs).unwrap())
    }

    proptest! {
        #[test]
        fn score_bounded_by_brevity_penalty(c in arb_corpus()) {
            let b = bleu(&c);
            prop_assert!(b.score >= 0.0 && b.score <= b.brevity_penalty);
            prop_assert!(b.brevity_penalty > 0.0 && b.brevity_penalty <= 1.0);
        }

        #[test]
        fn equal_lengths_have_unit_brevity_penalty(c in arb_corpus()) {
            let same_len = TokenizedCorpus::new(
                c.pairs().iter().map(|(h, r)| (h.clone(), r.iter().cycle().take(h.len()).cloned().collect())).collect(),
            ).unwrap();
            prop_assert_eq!(bleu(&same_len).brevity_penalty, 1.0);
        }

        #[test]
        fn self_reference_scores_one(c in arb_corpus()) {
            let mirrored = TokenizedCorpus::new(c.pairs().iter().map(|(h, _)| (h.clone(), h.clone())).collect()).unwrap();
            let b = bleu(&mirrored);
            if b.totals[3] > 0 {
                prop_assert_eq!(b.score, 1.0);
            }
        }

        #[test]
        fn pair_order_is_irrelevant(c in arb_corpus(), rot in 0usize..12) {
            let mut pairs = c.pairs().to_vec();
            let k = rot % pairs.len();
            pairs.rotate_left(k);
            pairs.reverse();
            prop_assert_eq!(bleu(&c), bleu(&TokenizedCorpus::new(pairs).unwrap()));
        }
    }
}
