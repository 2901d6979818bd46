//! Language-overlap alignment between a pretraining mixture and a translation task.

use crate::model::{LanguageMixture, TranslationTask};

/// Weight on the source-language share.
pub const SOURCE_WEIGHT: f64 = 0.7;
/// Weight on the destination-language share.
pub const DEST_WEIGHT: f64 = 0.8;

/// `P_src · P_dest + 0.7 · P_src + 0.8 · P_dest`, where the shares are those of
/// the task's two languages in `mixture` (zero when absent).
pub fn alignment_score(mixture: &LanguageMixture, task: &TranslationTask) -> f64 {
    let p_src = mixture.share(task.source());
    let p_dest = mixture.share(task.dest());
    p_src * p_dest + SOURCE_WEIGHT * p_src + DEST_WEIGHT * p_dest
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mix(s: &str) -> LanguageMixture {
        s.parse().unwrap()
    }

    fn task(s: &str) -> TranslationTask {
        s.parse().unwrap()
    }

    #[test]
    fn reported_scores() {
        assert_eq!(alignment_score(&mix("en=0.5,fr=0.5"), &task("en-fr")), 1.0);
        assert_eq!(alignment_score(&mix("en=1"), &task("en-fr")), 0.7);
        assert_eq!(alignment_score(&mix("fr=1"), &task("en-fr")), 0.8);
        assert_eq!(alignment_score(&mix("de=1"), &task("en-de")), 0.8);
        assert_eq!(alignment_score(&mix("de=1"), &task("en-fr")), 0.0);
        assert_eq!(alignment_score(&mix("ro=1"), &task("en-fr")), 0.0);
    }

    #[test]
    fn substituted_mixture() {
        let s = alignment_score(&mix("en=0.3,fr=0.7"), &task("en-fr"));
        assert!((s - 0.98).abs() < 1e-15, "{s}");
    }

    #[test]
    fn language_codes_ignore_case() {
        assert_eq!(alignment_score(&mix("EN=0.5,Fr=0.5"), &task("en-FR")), 1.0);
    }

    #[test]
    fn maximum_over_the_simplex() {
        // Brute force at resolution 1e-4 over p + q <= 1.
        let steps = 10_000;
        let mut best = (0.0, 0, 0);
        for i in 0..=steps {
            let p = i as f64 / steps as f64;
            for j in 0..=(steps - i) {
                let q = j as f64 / steps as f64;
                let v = p * q + SOURCE_WEIGHT * p + DEST_WEIGHT * q;
                if v > best.0 {
                    best = (v, i, j);
                }
            }
        }
        assert!((best.0 - 1.0025).abs() < 1e-12, "{best:?}");
        assert_eq!((best.1, best.2), (4500, 5500));
        let m = mix("en=0.45,fr=0.55");
        assert!((alignment_score(&m, &task("en-fr")) - 1.0025).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn bounded_and_monotone(p in 0.0f64..1.0, frac in 0.0f64..1.0, bump in 0.0f64..1.0) {
            let q = (1.0 - p) * frac;
            let rest = 1.0 - p - q;
            let m = LanguageMixture::new([("en", p), ("fr", q), ("de", rest)]).unwrap();
            let s = alignment_score(&m, &task("en-fr"));
            prop_assert!((0.0..=1.0025 + 1e-12).contains(&s));

            // Moving mass from the irrelevant language to either task language never lowers the score.
            let moved = rest * bump;
            let more_dest = LanguageMixture::new([("en", p), ("fr", q + moved), ("de", rest - moved)]).unwrap();
            let more_src = LanguageMixture::new([("en", p + moved), ("fr", q), ("de", rest - moved)]).unwrap();
            prop_assert!(alignment_score(&more_dest, &task("en-fr")) >= s);
            prop_assert!(alignment_score(&more_src, &task("en-fr")) >= s);
        }

        #[test]
        fn other_languages_are_irrelevant(p in 0.0f64..0.5, q in 0.0f64..0.5, split in 0.0f64..1.0) {
            let rest = 1.0 - p - q;
            let one = LanguageMixture::new([("en", p), ("fr", q), ("de", rest)]).unwrap();
            let two = LanguageMixture::new([
                ("en", p), ("fr", q), ("ro", rest * split), ("zh", rest * (1.0 - split)),
            ]).unwrap();
            prop_assert_eq!(alignment_score(&one, &task("en-fr")), alignment_score(&two, &task("en-fr")));
        }
    }
}
