//! Pretraining-data valuation: decides from logged checkpoint scores whether a
//! pretraining set is worth scaling for a downstream task.
//!
//! The outcomes are checked in a fixed order: too few checkpoints, then a
//! non-monotonic curve, then a law break on held-out checkpoints, and only
//! then a usable fit with predictions.

use serde::Serialize;

use crate::diagnostics::{
    check_monotonic, default_break_tol, detect_break, MonotonicityVerdict, Violation,
    DEFAULT_NOISE_TOL,
};
use crate::error::{Error, Result};
use crate::fit::fit_law;
use crate::laws::invert_log_law;
use crate::model::{
    FitConfig, FitReport, HoldoutRule, LawKind, Observation, ObservationSeries, Orientation,
};

/// Checkpoints needed before a three-coefficient law can be attempted.
pub const MIN_CHECKPOINTS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct AdvisorConfig {
    pub fit_config: FitConfig,
    pub target_score: Option<f64>,
    /// Token counts to predict at; all must exceed the largest observed count.
    pub candidate_d_p: Vec<u64>,
    /// Score of a model trained on the downstream task without pretraining.
    pub baseline_score: Option<f64>,
    pub noise_tol: f64,
    pub break_tol: f64,
}

impl Default for AdvisorConfig {
    fn default() -> Self {
        let fit_config = FitConfig::for_law(LawKind::Log);
        let break_tol = default_break_tol(fit_config.delta);
        Self {
            fit_config,
            target_score: None,
            candidate_d_p: Vec::new(),
            baseline_score: None,
            noise_tol: DEFAULT_NOISE_TOL,
            break_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    pub d_p: u64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdvisorVerdict {
    InsufficientData {
        needed: usize,
    },
    NonMonotonic {
        violations: Vec<Violation>,
        best_checkpoint: Observation,
        /// Best observed score minus the baseline, when a baseline is given.
        baseline_delta: Option<f64>,
        recommendation: String,
    },
    BreakDetected {
        break_index: usize,
        report: FitReport,
    },
    FitOk {
        report: FitReport,
        predictions: Vec<Prediction>,
        /// Tokens at which the fitted law reaches the target; `None` when the
        /// target is unreachable or not given.
        tokens_for_target: Option<f64>,
        /// The prediction at the largest candidate falls short of the target.
        not_worth_pretraining: bool,
    },
}

impl AdvisorVerdict {
    pub fn name(&self) -> &'static str {
        match self {
            Self::InsufficientData { .. } => "insufficient_data",
            Self::NonMonotonic { .. } => "non_monotonic",
            Self::BreakDetected { .. } => "break_detected",
            Self::FitOk { .. } => "fit_ok",
        }
    }
}

/// Runs the valuation procedure on a higher-is-better score series.
///
/// Errors are reserved for unusable input (a cross-entropy series, candidate
/// token counts inside the observed range, invalid fit settings). Every
/// analytic outcome is a verdict.
pub fn advise(series: &ObservationSeries, config: &AdvisorConfig) -> Result<AdvisorVerdict> {
    if series.metric().orientation() != Orientation::HigherIsBetter {
        return Err(Error::InvalidConfig(format!(
            "valuation runs on translation scores, not `{}`",
            series.metric()
        )));
    }
    config.fit_config.validate(LawKind::Log)?;
    if series.len() < MIN_CHECKPOINTS {
        return Ok(AdvisorVerdict::InsufficientData {
            needed: MIN_CHECKPOINTS,
        });
    }
    let last = series.points()[series.len() - 1].d_p;
    if let Some(&bad) = config.candidate_d_p.iter().find(|&&d| d <= last) {
        return Err(Error::InvalidConfig(format!(
            "candidate {bad} tokens does not exceed the largest observed count {last}"
        )));
    }

    if let MonotonicityVerdict::NonMonotonic { violations } =
        check_monotonic(series, config.noise_tol)
    {
        let best = series.points().iter().fold(&series.points()[0], |best, p| {
            if p.value > best.value {
                p
            } else {
                best
            }
        });
        let baseline_delta = config.baseline_score.map(|b| best.value - b);
        return Ok(AdvisorVerdict::NonMonotonic {
            violations,
            best_checkpoint: best.clone(),
            baseline_delta,
            recommendation: non_monotonic_advice(best, baseline_delta),
        });
    }

    // With no checkpoint left over for validation, fit on everything.
    let mut fit_config = config.fit_config.clone();
    let report = match fit_config.holdout_rule {
        HoldoutRule::FirstK(k) if series.len() > k => {
            let scan = detect_break(series, LawKind::Log, &fit_config, config.break_tol)?;
            if let Some(break_index) = scan.break_index {
                return Ok(AdvisorVerdict::BreakDetected {
                    break_index,
                    report: scan.report,
                });
            }
            scan.report
        }
        _ => {
            fit_config.holdout_rule = HoldoutRule::All;
            fit_law(series, LawKind::Log, &fit_config)?
        }
    };

    let predictions = config
        .candidate_d_p
        .iter()
        .map(|&d_p| {
            Ok(Prediction {
                d_p,
                score: report.params.eval(d_p as f64)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let crate::model::LawParams::Log(law) = report.params else {
        unreachable!("log-law fit returned other parameters")
    };
    let tokens_for_target = config
        .target_score
        .and_then(|t| invert_log_law(&law, t).ok());
    let largest = predictions.iter().max_by_key(|p| p.d_p);
    let not_worth_pretraining = match (config.target_score, largest) {
        (Some(target), Some(p)) => p.score < target,
        _ => false,
    };
    Ok(AdvisorVerdict::FitOk {
        report,
        predictions,
        tokens_for_target,
        not_worth_pretraining,
    })
}

fn non_monotonic_advice(best: &Observation, baseline_delta: Option<f64>) -> String {
    let head = format!(
        "Scores do not improve monotonically with more pretraining, which suggests the \
         pretraining data is misaligned with the task; expect worse results from further \
         pretraining. Best checkpoint: {} tokens with score {}.",
        best.d_p, best.value
    );
    match baseline_delta {
        Some(d) if d > 0.0 => format!("{head} It beats the non-pretrained baseline by {d}."),
        Some(d) => format!(
            "{head} It does not beat the non-pretrained baseline (difference {d}); this \
             pretraining data adds no value for the task."
        ),
        None => format!(
            "{head} Compare it against a model trained on the task without pretraining to \
             judge the value of this data."
        ),
    }
}
