//! Checks on observed scaling curves: monotonicity, law breaks and the
//! score/cross-entropy relation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_law, huber_loss};
use crate::model::{FitConfig, FitReport, HoldoutRule, LawKind, ObservationSeries, Orientation};

/// Relative worsening tolerated between consecutive checkpoints.
pub const DEFAULT_NOISE_TOL: f64 = 0.005;
pub const DEFAULT_R2_THRESHOLD: f64 = 0.8;

/// Per-point Huber loss above which a held-out point counts as a break: the
/// loss of a log-residual three times the Huber width.
pub fn default_break_tol(delta: f64) -> f64 {
    huber_loss(3.0 * delta, 0.0, delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Index of the checkpoint that got worse than its predecessor.
    pub index: usize,
    /// Relative change against the predecessor, always above the tolerance.
    pub drop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum MonotonicityVerdict {
    Monotone,
    NonMonotonic { violations: Vec<Violation> },
}

impl MonotonicityVerdict {
    pub fn is_monotone(&self) -> bool {
        matches!(self, Self::Monotone)
    }
}

/// Flags every checkpoint that is worse than the previous one by more than
/// `noise_tol` (relative), in the metric's own orientation.
pub fn check_monotonic(series: &ObservationSeries, noise_tol: f64) -> MonotonicityVerdict {
    let orientation = series.metric().orientation();
    let violations: Vec<Violation> = series
        .points()
        .windows(2)
        .enumerate()
        .filter_map(|(i, w)| {
            let (prev, next) = (w[0].value, w[1].value);
            let drop = match orientation {
                Orientation::HigherIsBetter => (prev - next) / prev,
                Orientation::LowerIsBetter => (next - prev) / prev,
            };
            (drop > noise_tol).then_some(Violation { index: i + 1, drop })
        })
        .collect();
    if violations.is_empty() {
        MonotonicityVerdict::Monotone
    } else {
        MonotonicityVerdict::NonMonotonic { violations }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BreakScan {
    /// Series index of the first held-out point whose Huber loss exceeds the tolerance.
    pub break_index: Option<usize>,
    pub report: FitReport,
}

/// Fits `kind` on the training split and returns the first held-out point,
/// in increasing token order, whose individual Huber loss exceeds `break_tol`.
pub fn detect_break(
    series: &ObservationSeries,
    kind: LawKind,
    config: &FitConfig,
    break_tol: f64,
) -> Result<BreakScan> {
    if let HoldoutRule::FirstK(k) = config.holdout_rule {
        if series.len() < k + 1 {
            return Err(Error::InsufficientData {
                needed: k + 1,
                got: series.len(),
            });
        }
    }
    let report = fit_law(series, kind, config)?;
    let break_index = report
        .held_out()
        .find(|r| !(huber_loss(r.log_residual, 0.0, config.delta) <= break_tol))
        .and_then(|r| series.points().iter().position(|p| p.d_p == r.d_p));
    Ok(BreakScan {
        break_index,
        report,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationVerdict {
    Consistent,
    Arbitrary,
}

/// Least-squares fit of `ln(score) = intercept + slope · ce`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelationReport {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub verdict: RelationVerdict,
}

/// Tests whether the score decays exponentially with cross-entropy over
/// checkpoints shared by both series.
pub fn ce_score_relation(
    score_series: &ObservationSeries,
    ce_series: &ObservationSeries,
    r2_threshold: f64,
) -> Result<RelationReport> {
    if !score_series.tokens().eq(ce_series.tokens()) {
        return Err(Error::MismatchedAbscissae);
    }
    let n = score_series.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let xs: Vec<f64> = ce_series.values().collect();
    let ys: Vec<f64> = score_series.values().map(f64::ln).collect();
    let mean_x = xs.iter().sum::<f64>() / n as f64;
    let mean_y = ys.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        let (dx, dy) = (x - mean_x, y - mean_y);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    // Nothing to explain when the score is flat.
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let verdict = if r_squared >= r2_threshold && slope < 0.0 {
        RelationVerdict::Consistent
    } else {
        RelationVerdict::Arbitrary
    };
    Ok(RelationReport {
        slope,
        intercept,
        r_squared,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_series, LawParams, LogLaw, MetricKind, SeriesMeta};
    use crate::reference::{generate, log_spaced_tokens};
    use proptest::prelude::*;

    fn series(metric: MetricKind, pts: &[(u64, f64)]) -> ObservationSeries {
        validate_series(pts.to_vec(), SeriesMeta::new(metric)).unwrap()
    }

    const ROW1: LawParams = LawParams::Log(LogLaw {
        log_a: -180.75,
        alpha: 9.0,
        beta: 0.75,
    });

    #[test]
    fn monotonicity_examples() {
        let up = series(MetricKind::Bleu, &[(1, 1.0), (2, 2.0), (3, 3.0)]);
        assert_eq!(check_monotonic(&up, 0.0), MonotonicityVerdict::Monotone);

        let dip = series(MetricKind::Bleu, &[(1, 1.0), (2, 2.0), (3, 1.5)]);
        assert_eq!(
            check_monotonic(&dip, 0.01),
            MonotonicityVerdict::NonMonotonic {
                violations: vec![Violation {
                    index: 2,
                    drop: 0.25
                }]
            }
        );

        let ce = series(
            MetricKind::DownstreamCrossEntropy,
            &[(1, 3.0), (2, 2.0), (3, 1.0)],
        );
        assert_eq!(check_monotonic(&ce, 0.0), MonotonicityVerdict::Monotone);
        let ce_up = series(MetricKind::DownstreamCrossEntropy, &[(1, 1.0), (2, 2.0)]);
        assert!(!check_monotonic(&ce_up, 0.0).is_monotone());
    }

    #[test]
    fn small_dips_within_tolerance_pass() {
        let s = series(MetricKind::Bleu, &[(1, 20.0), (2, 19.95), (3, 21.0)]);
        assert!(check_monotonic(&s, DEFAULT_NOISE_TOL).is_monotone());
        assert!(!check_monotonic(&s, 0.0).is_monotone());
    }

    #[test]
    fn no_break_on_clean_law() {
        let raw = generate(&ROW1, &log_spaced_tokens(1e9, 1e11, 10)).unwrap();
        let s = series(MetricKind::Bleu, &raw);
        let cfg = FitConfig::for_law(LawKind::Log);
        let scan = detect_break(&s, LawKind::Log, &cfg, default_break_tol(cfg.delta)).unwrap();
        assert_eq!(scan.break_index, None);
    }

    #[test]
    fn plateau_is_a_break_at_its_first_point() {
        let mut raw = generate(&ROW1, &log_spaced_tokens(1e9, 1e11, 10)).unwrap();
        for p in &mut raw[7..] {
            p.1 *= 0.6;
        }
        let s = series(MetricKind::Bleu, &raw);
        let cfg = FitConfig::for_law(LawKind::Log);
        let tol = default_break_tol(cfg.delta);
        // Per-point loss of the plateau, from the generator alone.
        let expected_loss = huber_loss(0.6f64.ln(), 0.0, cfg.delta);
        assert!(expected_loss > tol);
        let scan = detect_break(&s, LawKind::Log, &cfg, tol).unwrap();
        assert_eq!(scan.break_index, Some(7));
        assert!(detect_break(&s, LawKind::Log, &cfg, f64::INFINITY)
            .unwrap()
            .break_index
            .is_none());
    }

    #[test]
    fn break_needs_a_held_out_point() {
        let raw = generate(&ROW1, &log_spaced_tokens(1e9, 1e11, 4)).unwrap();
        let s = series(MetricKind::Bleu, &raw);
        let err =
            detect_break(&s, LawKind::Log, &FitConfig::for_law(LawKind::Log), 0.1).unwrap_err();
        assert_eq!(err, Error::InsufficientData { needed: 5, got: 4 });
    }

    #[test]
    fn exact_exponential_relation() {
        let ce = [0.2, 0.35, 0.5, 0.8, 1.1, 1.3];
        let ce_s = series(
            MetricKind::DownstreamCrossEntropy,
            &ce.iter()
                .enumerate()
                .map(|(i, &c)| (i as u64 + 1, c))
                .collect::<Vec<_>>(),
        );
        let score_s = series(
            MetricKind::Bleu,
            &ce.iter()
                .enumerate()
                .map(|(i, &c)| (i as u64 + 1, (2.0 - 3.0 * c).exp()))
                .collect::<Vec<_>>(),
        );
        let rel = ce_score_relation(&score_s, &ce_s, DEFAULT_R2_THRESHOLD).unwrap();
        assert!((rel.slope + 3.0).abs() < 1e-9, "{rel:?}");
        assert!((rel.intercept - 2.0).abs() < 1e-9);
        assert!((rel.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(rel.verdict, RelationVerdict::Consistent);
    }

    #[test]
    fn flat_score_is_arbitrary() {
        let ce_s = series(
            MetricKind::DownstreamCrossEntropy,
            &[(1, 1.0), (2, 0.8), (3, 0.6)],
        );
        let score_s = series(MetricKind::Bleu, &[(1, 20.0), (2, 20.0), (3, 20.0)]);
        let rel = ce_score_relation(&score_s, &ce_s, DEFAULT_R2_THRESHOLD).unwrap();
        assert_eq!(rel.slope, 0.0);
        assert_eq!(rel.verdict, RelationVerdict::Arbitrary);
    }

    #[test]
    fn co_increasing_is_arbitrary() {
        let ce_s = series(
            MetricKind::DownstreamCrossEntropy,
            &[(1, 1.0), (2, 1.1), (3, 1.2), (4, 1.3)],
        );
        let score_s = series(
            MetricKind::Bleu,
            &[(1, 20.0), (2, 22.0), (3, 24.2), (4, 26.6)],
        );
        let rel = ce_score_relation(&score_s, &ce_s, DEFAULT_R2_THRESHOLD).unwrap();
        assert!(rel.slope > 0.0 && rel.r_squared > 0.99);
        assert_eq!(rel.verdict, RelationVerdict::Arbitrary);
    }

    #[test]
    fn mismatched_checkpoints_rejected() {
        let a = series(MetricKind::Bleu, &[(1, 1.0), (2, 2.0)]);
        let b = series(MetricKind::DownstreamCrossEntropy, &[(1, 1.0), (3, 2.0)]);
        assert_eq!(
            ce_score_relation(&a, &b, 0.8).unwrap_err(),
            Error::MismatchedAbscissae
        );
    }

    proptest! {
        #[test]
        fn inserted_worse_point_breaks_monotonicity(
            steps in prop::collection::vec(0.01f64..5.0, 2..12), at in 0usize..10, shrink in 0.01f64..0.99,
        ) {
            let mut v = 1.0;
            let mut pts: Vec<(u64, f64)> = Vec::new();
            for (i, s) in steps.iter().enumerate() {
                v += s;
                pts.push((10 * (i as u64 + 1), v));
            }
            let s = series(MetricKind::Bleu, &pts);
            prop_assert!(check_monotonic(&s, 0.0).is_monotone());

            let at = at % pts.len();
            let worse = pts[at].1 * shrink;
            pts.push((10 * (at as u64 + 1) + 5, worse));
            let s = series(MetricKind::Bleu, &pts);
            prop_assert!(!check_monotonic(&s, 0.0).is_monotone());
        }

        #[test]
        fn recovers_exponential_rate(c in 0.5f64..50.0, k in -5.0f64..5.0) {
            let ce: Vec<(u64, f64)> = (0..8).map(|i| (i + 1, 0.5 + 0.2 * i as f64)).collect();
            let score: Vec<(u64, f64)> = ce.iter().map(|&(d, x)| (d, c * (k * x).exp())).collect();
            let rel = ce_score_relation(
                &series(MetricKind::Bleu, &score),
                &series(MetricKind::DownstreamCrossEntropy, &ce),
                DEFAULT_R2_THRESHOLD,
            ).unwrap();
            prop_assert!((rel.slope - k).abs() < 1e-9);
            if k.abs() > 1e-3 {
                prop_assert!((rel.r_squared - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn small_held_out_losses_never_break(scale in 0.0f64..0.02) {
            let mut raw = generate(&ROW1, &log_spaced_tokens(1e9, 1e11, 8)).unwrap();
            for (i, p) in raw.iter_mut().enumerate().skip(4) {
                p.1 *= 1.0 + scale * if i % 2 == 0 { 1.0 } else { -1.0 };
            }
            let s = series(MetricKind::Bleu, &raw);
            let cfg = FitConfig::for_law(LawKind::Log);
            let tol = default_break_tol(cfg.delta);
            let scan = detect_break(&s, LawKind::Log, &cfg, tol).unwrap();
            if scan.report.held_out().all(|r| huber_loss(r.log_residual, 0.0, cfg.delta) <= tol) {
                prop_assert!(scan.break_index.is_none());
            }
        }
    }
}
