//! File formats: observation CSV, fit-report JSON, plot-data CSV and
//! `key=value` configuration files.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::advisor::{AdvisorVerdict, Prediction};
use crate::diagnostics::Violation;
use crate::error::{Error, Result};
use crate::model::{
    validate_observations, FitReport, FitStatus, LawKind, LawParams, LogLaw, MetricKind,
    Observation, ObservationSeries, PowerLaw, Residual, SeriesMeta,
};

pub const OBSERVATION_HEADER: &str = "d_p_tokens,value,metric,d_f_tokens,label";

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses an observation CSV into one validated series per `(metric, d_f)`
/// group, in order of first appearance. Line numbers in errors are 1-based
/// and count the header.
pub fn parse_observations(text: &str) -> Result<Vec<ObservationSeries>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        None => return Err(parse_err(1, "empty file")),
        Some(r) => r.map_err(|e| parse_err(1, e.to_string()))?,
    };
    let header: Vec<&str> = header.iter().map(str::trim).collect();
    if header.join(",") != OBSERVATION_HEADER {
        return Err(parse_err(
            1,
            format!("header must be `{OBSERVATION_HEADER}`"),
        ));
    }

    // (metric, d_f) key, its points and the CSV line of each point.
    type Group = ((MetricKind, Option<u64>), Vec<Observation>, Vec<usize>);
    let mut groups: Vec<Group> = Vec::new();
    for record in records {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        if record.len() != 5 {
            return Err(parse_err(
                line,
                format!("expected 5 fields, found {}", record.len()),
            ));
        }
        let field = |i: usize| record[i].trim();
        let d_p: u64 = field(0).parse().map_err(|_| {
            parse_err(
                line,
                format!("d_p_tokens `{}` is not a positive integer", field(0)),
            )
        })?;
        if d_p == 0 {
            return Err(parse_err(line, "d_p_tokens must be positive"));
        }
        let value: f64 = field(1)
            .parse()
            .map_err(|_| parse_err(line, format!("value `{}` is not a number", field(1))))?;
        if !value.is_finite() {
            return Err(parse_err(line, "value must be finite"));
        }
        let metric: MetricKind = field(2).parse().map_err(|e: String| parse_err(line, e))?;
        let d_f = match field(3) {
            "" => None,
            s => Some(s.parse::<u64>().map_err(|_| {
                parse_err(
                    line,
                    format!("d_f_tokens `{s}` is not a nonnegative integer"),
                )
            })?),
        };
        let label = Some(field(4)).filter(|s| !s.is_empty()).map(str::to_owned);
        let key = (metric, d_f);
        let obs = Observation { d_p, value, label };
        match groups.iter_mut().find(|g| g.0 == key) {
            Some(g) => {
                g.1.push(obs);
                g.2.push(line);
            }
            None => groups.push((key, vec![obs], vec![line])),
        }
    }
    if groups.is_empty() {
        return Err(parse_err(2, "no observations after the header"));
    }

    groups
        .into_iter()
        .map(|((metric, d_f), obs, lines)| {
            let mut meta = SeriesMeta::new(metric);
            meta.d_f = d_f;
            validate_observations(obs, meta).map_err(|e| match e {
                Error::NonpositiveValue { index } => {
                    parse_err(lines[index], "value must be positive")
                }
                Error::DuplicateAbscissa { index } => parse_err(
                    lines[index],
                    "duplicate d_p_tokens within the same metric and d_f",
                ),
                Error::NonpositiveTokens { index } => {
                    parse_err(lines[index], "d_p_tokens must be positive")
                }
                other => other,
            })
        })
        .collect()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Writes series in the observation CSV format, one group after another in
/// increasing token order.
pub fn emit_observations(series: &[ObservationSeries]) -> String {
    let mut out = format!("{OBSERVATION_HEADER}\n");
    for s in series {
        let d_f = s.d_f().map(|d| d.to_string()).unwrap_or_default();
        for p in s.points() {
            let label = p.label.as_deref().map(csv_field).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                p.d_p,
                p.value,
                s.metric().tag(),
                d_f,
                label
            );
        }
    }
    out
}

/// Serializes non-finite values as `null` and reads `null` back as NaN.
mod lenient_f64 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum Coefficients {
    Log { log_a: f64, alpha: f64, beta: f64 },
    Power { e: f64, alpha: f64, a: f64 },
}

#[derive(Debug, Serialize, Deserialize)]
struct ParamsDoc {
    law: LawKind,
    #[serde(flatten)]
    coefficients: Coefficients,
}

impl From<&LawParams> for ParamsDoc {
    fn from(p: &LawParams) -> Self {
        let coefficients = match *p {
            LawParams::Log(l) => Coefficients::Log {
                log_a: l.log_a,
                alpha: l.alpha,
                beta: l.beta,
            },
            LawParams::Power(p) => Coefficients::Power {
                e: p.e,
                alpha: p.alpha,
                a: p.a,
            },
        };
        Self {
            law: p.kind(),
            coefficients,
        }
    }
}

impl ParamsDoc {
    fn into_params(self) -> Result<LawParams> {
        let params = match (self.law, self.coefficients) {
            (LawKind::Log, Coefficients::Log { log_a, alpha, beta }) => {
                LawParams::Log(LogLaw { log_a, alpha, beta })
            }
            (LawKind::Power, Coefficients::Power { e, alpha, a }) => {
                LawParams::Power(PowerLaw { e, a, alpha })
            }
            (law, _) => {
                return Err(Error::Report(format!(
                    "coefficients do not match law `{law}`"
                )))
            }
        };
        Ok(params)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ResidualDoc {
    d_p: u64,
    #[serde(with = "lenient_f64")]
    observed: f64,
    #[serde(with = "lenient_f64")]
    predicted: f64,
    #[serde(with = "lenient_f64")]
    log_residual: f64,
    held_out: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct ReportDoc {
    #[serde(flatten)]
    params: ParamsDoc,
    #[serde(with = "lenient_f64")]
    train_objective: f64,
    #[serde(with = "lenient_f64")]
    holdout_error: f64,
    status: FitStatus,
    init_used: usize,
    residuals: Vec<ResidualDoc>,
}

impl From<&FitReport> for ReportDoc {
    fn from(r: &FitReport) -> Self {
        Self {
            params: (&r.params).into(),
            train_objective: r.train_objective,
            holdout_error: r.holdout_error,
            status: r.status,
            init_used: r.init_used,
            residuals: r
                .residuals
                .iter()
                .map(|x| ResidualDoc {
                    d_p: x.d_p,
                    observed: x.observed,
                    predicted: x.predicted,
                    log_residual: x.log_residual,
                    held_out: x.held_out,
                })
                .collect(),
        }
    }
}

/// Fit report as pretty-printed JSON with a fixed key order. Floats use the
/// shortest representation that parses back to the same value.
pub fn emit_fit_report(report: &FitReport) -> String {
    let mut s = serde_json::to_string_pretty(&ReportDoc::from(report)).expect("report serializes");
    s.push('\n');
    s
}

pub fn parse_fit_report(text: &str) -> Result<FitReport> {
    let doc: ReportDoc = serde_json::from_str(text).map_err(|e| Error::Report(e.to_string()))?;
    Ok(FitReport {
        params: doc.params.into_params()?,
        train_objective: doc.train_objective,
        holdout_error: doc.holdout_error,
        residuals: doc
            .residuals
            .into_iter()
            .map(|x| Residual {
                d_p: x.d_p,
                observed: x.observed,
                predicted: x.predicted,
                log_residual: x.log_residual,
                held_out: x.held_out,
            })
            .collect(),
        status: doc.status,
        init_used: doc.init_used,
    })
}

/// Law parameters from either a fit report or a bare `{law, ...coefficients}` object.
pub fn parse_params(text: &str) -> Result<LawParams> {
    let doc: ParamsDoc = serde_json::from_str(text).map_err(|e| Error::Report(e.to_string()))?;
    let params = doc.into_params()?;
    params.check()?;
    Ok(params)
}

pub fn emit_params(params: &LawParams) -> String {
    let mut s = serde_json::to_string_pretty(&ParamsDoc::from(params)).expect("params serialize");
    s.push('\n');
    s
}

/// Observed points with fitted values, merged with extra curve samples on
/// `grid`, as `d_p,observed,predicted` sorted by token count. `observed` is
/// blank on grid-only rows; `predicted` is blank where an observed point lies
/// outside the law's domain.
pub fn emit_plot_data(
    series: &ObservationSeries,
    params: &LawParams,
    grid: &[u64],
) -> Result<String> {
    let mut rows: BTreeMap<u64, (Option<f64>, Option<f64>)> = BTreeMap::new();
    for &d in grid {
        rows.insert(d, (None, Some(params.eval(d as f64)?)));
    }
    for p in series.points() {
        let predicted = params.eval(p.d_p as f64).ok();
        rows.insert(p.d_p, (Some(p.value), predicted));
    }
    let mut out = String::from("d_p,observed,predicted\n");
    let show = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (d, (obs, pred)) in rows {
        let _ = writeln!(out, "{d},{},{}", show(obs), show(pred));
    }
    Ok(out)
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped;
/// a repeated key keeps its last value.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| parse_err(i + 1, format!("expected key=value, got `{line}`")))?;
        let key = k.trim();
        if key.is_empty() {
            return Err(parse_err(i + 1, "empty key"));
        }
        map.insert(key.to_owned(), v.trim().to_owned());
    }
    Ok(map)
}

#[derive(Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
enum AdviceDoc<'a> {
    InsufficientData {
        needed: usize,
    },
    NonMonotonic {
        best_checkpoint: &'a Observation,
        baseline_delta: Option<f64>,
        recommendation: &'a str,
        violations: &'a [Violation],
    },
    BreakDetected {
        break_index: usize,
        break_d_p: Option<u64>,
        fit: ReportDoc,
    },
    FitOk {
        predictions: &'a [Prediction],
        tokens_for_target: Option<f64>,
        not_worth_pretraining: bool,
        fit: ReportDoc,
    },
}

/// Advisor verdict as pretty-printed JSON, tagged by a `verdict` key.
pub fn emit_advice(verdict: &AdvisorVerdict, series: &ObservationSeries) -> String {
    let doc = match verdict {
        AdvisorVerdict::InsufficientData { needed } => {
            AdviceDoc::InsufficientData { needed: *needed }
        }
        AdvisorVerdict::NonMonotonic {
            violations,
            best_checkpoint,
            baseline_delta,
            recommendation,
        } => AdviceDoc::NonMonotonic {
            best_checkpoint,
            baseline_delta: *baseline_delta,
            recommendation,
            violations,
        },
        AdvisorVerdict::BreakDetected {
            break_index,
            report,
        } => AdviceDoc::BreakDetected {
            break_index: *break_index,
            break_d_p: series.points().get(*break_index).map(|p| p.d_p),
            fit: report.into(),
        },
        AdvisorVerdict::FitOk {
            report,
            predictions,
            tokens_for_target,
            not_worth_pretraining,
        } => AdviceDoc::FitOk {
            predictions,
            tokens_for_target: *tokens_for_target,
            not_worth_pretraining: *not_worth_pretraining,
            fit: report.into(),
        },
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("verdict serializes");
    s.push('\n');
    s
}
