//! Domain types shared across the crate.
//!
//! Token counts are `u64`; metric values and law coefficients are `f64`.
//! Translation scores (BLEU, ROUGE, COMET) are kept on the `[0, 1]` scale;
//! presentation layers may multiply by 100.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Orientation {
    HigherIsBetter,
    LowerIsBetter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Bleu,
    Rouge,
    Comet,
    #[serde(rename = "ce")]
    DownstreamCrossEntropy,
    #[serde(rename = "score")]
    Generic,
}

impl MetricKind {
    pub fn orientation(self) -> Orientation {
        match self {
            MetricKind::DownstreamCrossEntropy => Orientation::LowerIsBetter,
            _ => Orientation::HigherIsBetter,
        }
    }

    pub fn is_higher_better(self) -> bool {
        self.orientation() == Orientation::HigherIsBetter
    }

    /// The law family this metric is modelled with.
    pub fn default_law(self) -> LawKind {
        match self.orientation() {
            Orientation::HigherIsBetter => LawKind::Log,
            Orientation::LowerIsBetter => LawKind::Power,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            MetricKind::Bleu => "bleu",
            MetricKind::Rouge => "rouge",
            MetricKind::Comet => "comet",
            MetricKind::DownstreamCrossEntropy => "ce",
            MetricKind::Generic => "score",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for MetricKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bleu" => Ok(MetricKind::Bleu),
            "rouge" => Ok(MetricKind::Rouge),
            "comet" => Ok(MetricKind::Comet),
            "ce" | "cross_entropy" | "cross-entropy" | "loss" => {
                Ok(MetricKind::DownstreamCrossEntropy)
            }
            "score" | "generic" => Ok(MetricKind::Generic),
            other => Err(format!("unknown metric tag `{other}`")),
        }
    }
}

/// Pretraining language proportions, keyed by lower-cased language code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageMixture {
    shares: BTreeMap<String, f64>,
}

impl LanguageMixture {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new<I, S>(shares: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        let mut map = BTreeMap::new();
        for (code, share) in shares {
            let code = normalize_language(code.as_ref())
                .ok_or_else(|| Error::InvalidMixture("empty language code".into()))?;
            if !share.is_finite() || !(0.0..=1.0).contains(&share) {
                return Err(Error::InvalidMixture(format!(
                    "share for `{code}` is {share}, expected a fraction in [0, 1]"
                )));
            }
            if map.insert(code.clone(), share).is_some() {
                return Err(Error::InvalidMixture(format!(
                    "language `{code}` listed twice"
                )));
            }
        }
        let total: f64 = map.values().sum();
        if (total - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::InvalidMixture(format!(
                "shares sum to {total}, expected 1"
            )));
        }
        Ok(Self { shares: map })
    }

    /// Share of `language`, 0 when absent. Lookup is case-insensitive.
    pub fn share(&self, language: &str) -> f64 {
        self.shares
            .get(&language.trim().to_ascii_lowercase())
            .copied()
            .unwrap_or(0.0)
    }

    pub fn shares(&self) -> &BTreeMap<String, f64> {
        &self.shares
    }
}

impl FromStr for LanguageMixture {
    type Err = Error;

    /// Parses `en=0.5,fr=0.5`.
    fn from_str(s: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for item in s.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (code, share) = item.split_once('=').ok_or_else(|| {
                Error::InvalidMixture(format!("expected lang=share, got `{item}`"))
            })?;
            let share: f64 = share
                .trim()
                .parse()
                .map_err(|_| Error::InvalidMixture(format!("bad share in `{item}`")))?;
            pairs.push((code.to_string(), share));
        }
        Self::new(pairs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TranslationTask {
    source: String,
    dest: String,
}

impl TranslationTask {
    pub fn new(source: &str, dest: &str) -> Result<Self> {
        let source = normalize_language(source)
            .ok_or_else(|| Error::InvalidTask("empty source language".into()))?;
        let dest = normalize_language(dest)
            .ok_or_else(|| Error::InvalidTask("empty destination language".into()))?;
        if source == dest {
            return Err(Error::InvalidTask(format!(
                "source and destination are both `{source}`"
            )));
        }
        Ok(Self { source, dest })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn dest(&self) -> &str {
        &self.dest
    }
}

impl FromStr for TranslationTask {
    type Err = Error;

    /// Parses `en-fr` (also accepts `en:fr` and `en>fr`).
    fn from_str(s: &str) -> Result<Self> {
        let (src, dst) = s
            .split_once(['-', ':', '>'])
            .ok_or_else(|| Error::InvalidTask(format!("expected src-dest, got `{s}`")))?;
        Self::new(src, dst)
    }
}

fn normalize_language(code: &str) -> Option<String> {
    let code = code.trim().to_ascii_lowercase();
    (!code.is_empty()).then_some(code)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub d_p: u64,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Observation {
    pub fn new(d_p: u64, value: f64) -> Self {
        Self {
            d_p,
            value,
            label: None,
        }
    }

    pub fn log_tokens(&self) -> f64 {
        (self.d_p as f64).ln()
    }
}

/// Metadata attached to a series at validation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub metric: MetricKind,
    pub d_f: Option<u64>,
    pub task: Option<TranslationTask>,
    pub mixture: Option<LanguageMixture>,
}

impl SeriesMeta {
    pub fn new(metric: MetricKind) -> Self {
        Self {
            metric,
            d_f: None,
            task: None,
            mixture: None,
        }
    }

    pub fn with_finetune_tokens(mut self, d_f: u64) -> Self {
        self.d_f = Some(d_f);
        self
    }
}

/// Checkpoint metrics ordered by strictly increasing pretraining token count.
///
/// Only constructible through [`validate_series`], so every instance holds
/// positive values and distinct, sorted token counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservationSeries {
    points: Vec<Observation>,
    meta: SeriesMeta,
}

impl ObservationSeries {
    pub fn points(&self) -> &[Observation] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn metric(&self) -> MetricKind {
        self.meta.metric
    }

    pub fn meta(&self) -> &SeriesMeta {
        &self.meta
    }

    pub fn d_f(&self) -> Option<u64> {
        self.meta.d_f
    }

    pub fn task(&self) -> Option<&TranslationTask> {
        self.meta.task.as_ref()
    }

    pub fn mixture(&self) -> Option<&LanguageMixture> {
        self.meta.mixture.as_ref()
    }

    pub fn tokens(&self) -> impl Iterator<Item = u64> + '_ {
        self.points.iter().map(|p| p.d_p)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.value)
    }

    /// Sub-series restricted to points satisfying `keep`; `None` if nothing survives.
    pub fn filtered(&self, mut keep: impl FnMut(&Observation) -> bool) -> Option<Self> {
        let points: Vec<_> = self.points.iter().filter(|p| keep(p)).cloned().collect();
        (!points.is_empty()).then(|| Self {
            points,
            meta: self.meta.clone(),
        })
    }
}

/// Validates raw `(d_p, value)` pairs and sorts them by token count.
///
/// Errors report the index of the offending pair in the input order.
pub fn validate_series(raw: Vec<(u64, f64)>, meta: SeriesMeta) -> Result<ObservationSeries> {
    validate_observations(
        raw.into_iter()
            .map(|(d, v)| Observation::new(d, v))
            .collect(),
        meta,
    )
}

pub fn validate_observations(raw: Vec<Observation>, meta: SeriesMeta) -> Result<ObservationSeries> {
    if raw.is_empty() {
        return Err(Error::EmptySeries);
    }
    for (index, obs) in raw.iter().enumerate() {
        if obs.d_p == 0 {
            return Err(Error::NonpositiveTokens { index });
        }
        if !(obs.value.is_finite() && obs.value > 0.0) {
            return Err(Error::NonpositiveValue { index });
        }
    }
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by_key(|&i| (raw[i].d_p, i));
    for w in order.windows(2) {
        if raw[w[0]].d_p == raw[w[1]].d_p {
            return Err(Error::DuplicateAbscissa {
                index: w[0].max(w[1]),
            });
        }
    }
    let mut slots: Vec<Option<Observation>> = raw.into_iter().map(Some).collect();
    let points = order
        .into_iter()
        .map(|i| slots[i].take().unwrap())
        .collect();
    Ok(ObservationSeries { points, meta })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawKind {
    Log,
    Power,
}

impl FromStr for LawKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "log" | "log-law" | "loglaw" => Ok(LawKind::Log),
            "power" | "power-law" | "powerlaw" => Ok(LawKind::Power),
            other => Err(format!("unknown law `{other}`, expected `log` or `power`")),
        }
    }
}

impl fmt::Display for LawKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LawKind::Log => "log",
            LawKind::Power => "power",
        })
    }
}

/// `f(d) = (log_a + alpha * ln d)^beta`, i.e. `(ln(A * d^alpha))^beta` with `log_a = ln A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLaw {
    pub log_a: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl LogLaw {
    pub fn new(log_a: f64, alpha: f64, beta: f64) -> Result<Self> {
        let law = Self { log_a, alpha, beta };
        law.check()?;
        Ok(law)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.log_a.is_finite() && self.alpha.is_finite() && self.beta.is_finite()) {
            return Err(Error::InvalidParams(
                "log-law coefficients must be finite".into(),
            ));
        }
        if self.alpha <= 0.0 || self.beta <= 0.0 {
            return Err(Error::InvalidParams(
                "log-law needs alpha > 0 and beta > 0".into(),
            ));
        }
        Ok(())
    }
}

/// `L(d) = e + a / d^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub e: f64,
    pub a: f64,
    pub alpha: f64,
}

impl PowerLaw {
    pub fn new(e: f64, a: f64, alpha: f64) -> Result<Self> {
        let law = Self { e, a, alpha };
        law.check()?;
        Ok(law)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.e.is_finite() && self.a.is_finite() && self.alpha.is_finite()) {
            return Err(Error::InvalidParams(
                "power-law coefficients must be finite".into(),
            ));
        }
        if self.e < 0.0 || self.a <= 0.0 || self.alpha <= 0.0 {
            return Err(Error::InvalidParams(
                "power-law needs e >= 0, a > 0, alpha > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LawParams {
    Log(LogLaw),
    Power(PowerLaw),
}

impl LawParams {
    pub fn kind(&self) -> LawKind {
        match self {
            LawParams::Log(_) => LawKind::Log,
            LawParams::Power(_) => LawKind::Power,
        }
    }

    pub fn check(&self) -> Result<()> {
        match self {
            LawParams::Log(l) => l.check(),
            LawParams::Power(p) => p.check(),
        }
    }
}

impl From<LogLaw> for LawParams {
    fn from(l: LogLaw) -> Self {
        LawParams::Log(l)
    }
}

impl From<PowerLaw> for LawParams {
    fn from(p: PowerLaw) -> Self {
        LawParams::Power(p)
    }
}

/// Which points the coefficients are fitted on; the rest are held out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HoldoutRule {
    /// Fit on the `k` points with the smallest token counts.
    FirstK(usize),
    All,
}

impl HoldoutRule {
    pub fn train_len(self, series_len: usize) -> usize {
        match self {
            HoldoutRule::FirstK(k) => k.min(series_len),
            HoldoutRule::All => series_len,
        }
    }

    pub fn min_points(self) -> usize {
        match self {
            HoldoutRule::FirstK(k) => k.max(3),
            HoldoutRule::All => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// Huber transition width, in log-residual units.
    pub delta: f64,
    pub holdout_rule: HoldoutRule,
    pub init_grid: Vec<LawParams>,
    pub max_iters: usize,
    pub grad_tol: f64,
    /// L-BFGS memory depth.
    pub memory: usize,
    /// Values at or below this floor are dropped before taking logs.
    pub value_floor: f64,
}

impl FitConfig {
    pub const SCORE_DELTA: f64 = 0.1;
    pub const CROSS_ENTROPY_DELTA: f64 = 1e-3;
    pub const DEFAULT_TRAIN_POINTS: usize = 4;

    pub fn for_law(kind: LawKind) -> Self {
        let (delta, init_grid) = match kind {
            LawKind::Log => (Self::SCORE_DELTA, default_log_grid()),
            LawKind::Power => (Self::CROSS_ENTROPY_DELTA, default_power_grid()),
        };
        Self {
            delta,
            holdout_rule: HoldoutRule::FirstK(Self::DEFAULT_TRAIN_POINTS),
            init_grid,
            max_iters: 500,
            grad_tol: 1e-9,
            memory: 10,
            value_floor: 1e-12,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_holdout(mut self, rule: HoldoutRule) -> Self {
        self.holdout_rule = rule;
        self
    }

    pub fn validate(&self, kind: LawKind) -> Result<()> {
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        if let HoldoutRule::FirstK(k) = self.holdout_rule {
            if k < 3 {
                return Err(Error::InvalidConfig(format!(
                    "need at least 3 training points for a 3-coefficient law, got {k}"
                )));
            }
        }
        if self.init_grid.is_empty() {
            return Err(Error::InvalidConfig("initialization grid is empty".into()));
        }
        if let Some(seed) = self.init_grid.iter().find(|s| s.kind() != kind) {
            return Err(Error::InvalidConfig(format!(
                "grid seed {seed:?} does not match law `{kind}`"
            )));
        }
        if !(self.grad_tol > 0.0) || self.memory == 0 || !(self.value_floor > 0.0) {
            return Err(Error::InvalidConfig(
                "grad_tol, memory and value_floor must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn default_log_grid() -> Vec<LawParams> {
    let mut grid = Vec::new();
    for log_a in [-1e4, -1e2, -1.0, 1.0, 1e2] {
        for alpha in [0.1, 0.5, 1.0, 10.0, 100.0] {
            for beta in [0.2, 0.5, 1.0, 2.0] {
                grid.push(LawParams::Log(LogLaw { log_a, alpha, beta }));
            }
        }
    }
    grid
}

fn default_power_grid() -> Vec<LawParams> {
    let mut grid = Vec::new();
    for e in [0.0, 1e-5, 1e-2] {
        for a in [1e-2, 1.0, 1e2] {
            for alpha in [0.1, 0.5, 1.0] {
                grid.push(LawParams::Power(PowerLaw { e, a, alpha }));
            }
        }
    }
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Converged,
    MaxIters,
    /// The line search could not decrease the objective further (numerical floor).
    Stalled,
    InvalidDomain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub d_p: u64,
    pub observed: f64,
    pub predicted: f64,
    /// `ln(observed) - ln(predicted)`.
    pub log_residual: f64,
    pub held_out: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub params: LawParams,
    pub train_objective: f64,
    /// Mean Huber loss over the held-out log-residuals (0 with no held-out points).
    pub holdout_error: f64,
    pub residuals: Vec<Residual>,
    pub status: FitStatus,
    pub init_used: usize,
}

impl FitReport {
    pub fn held_out(&self) -> impl Iterator<Item = &Residual> {
        self.residuals.iter().filter(|r| r.held_out)
    }

    pub fn train_len(&self) -> usize {
        self.residuals.iter().filter(|r| !r.held_out).count()
    }
}
