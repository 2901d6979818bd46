//! Downstream scaling-law toolkit.
//!
//! Fits the log-law `f(D) = (ln(A · D^α))^β` for translation-quality scores and
//! the power-law `L(D) = E + A / D^α` for downstream cross-entropy against
//! pretraining token counts, scores pretraining/task language alignment,
//! detects scaling breaks and runs a pretraining-data valuation procedure.

// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod advisor;
pub mod alignment;
pub mod diagnostics;
pub mod error;
pub mod fit;
pub mod io;
pub mod laws;
pub mod metrics;
pub mod model;
pub mod reference;

pub use advisor::{advise, AdvisorConfig, AdvisorVerdict};
pub use alignment::alignment_score;
pub use diagnostics::{
    ce_score_relation, check_monotonic, detect_break, MonotonicityVerdict, RelationReport,
    RelationVerdict,
};
pub use error::{Error, Result};
pub use fit::{fit_law, huber_loss, lbfgs_minimize, objective, objective_gradient};
pub use laws::{eval_log_law, eval_power_law, invert_log_law, validity_threshold};

pub use metrics::{
    bleu, bleu_with, brevity_penalty, ngram_precision, BleuBreakdown, TokenizedCorpus,
};
pub use model::{
    validate_series, FitConfig, FitReport, FitStatus, HoldoutRule, LanguageMixture, LawKind,
    LawParams, LogLaw, MetricKind, Observation, ObservationSeries, Orientation, PowerLaw, Residual,
    SeriesMeta, TranslationTask,
};
