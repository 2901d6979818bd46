use std::fmt;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::json;

use scalex_core::advisor::{advise, AdvisorConfig};
use scalex_core::diagnostics::{
    ce_score_relation, check_monotonic, default_break_tol, detect_break, DEFAULT_NOISE_TOL,
    DEFAULT_R2_THRESHOLD,
};
use scalex_core::io::{
    emit_advice, emit_fit_report, emit_plot_data, parse_observations, parse_params,
};
use scalex_core::metrics::{bleu_with, TokenizedCorpus};
use scalex_core::{
    alignment_score, fit_law, invert_log_law, Error as CoreError, FitConfig, FitStatus,
    HoldoutRule, LawKind, LawParams, ObservationSeries, Orientation,
};

use crate::settings::{FileSettings, TokenList};
use crate::{Cli, Command, FitFlags, SeriesSelect};

/// A result the tool computed but which does not answer the request.
#[derive(Debug)]
struct DomainFailure(String);

impl fmt::Display for DomainFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for DomainFailure {}

/// 3 for law-domain and fitting failures, 2 for everything else.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<DomainFailure>().is_some() {
            return 3;
        }
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            return if e.is_domain() { 3 } else { 2 };
        }
    }
    2
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_series(path: &Path) -> Result<Vec<ObservationSeries>> {
    parse_observations(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn describe(s: &ObservationSeries) -> String {
    match s.d_f() {
        Some(d) => format!("{} (d_f={d})", s.metric()),
        None => format!("{} (no d_f)", s.metric()),
    }
}

fn select(all: Vec<ObservationSeries>, sel: &SeriesSelect) -> Result<ObservationSeries> {
    let mut matching: Vec<_> = all
        .into_iter()
        .filter(|s| sel.metric.is_none_or(|m| s.metric() == m))
        .filter(|s| sel.d_f.is_none_or(|d| s.d_f() == Some(d.0)))
        .collect();
    match matching.len() {
        1 => Ok(matching.remove(0)),
        0 => bail!("no series matches the --metric/--d-f selection"),
        _ => bail!(
            "{} series match; pick one with --metric/--d-f: {}",
            matching.len(),
            matching.iter().map(describe).collect::<Vec<_>>().join(", ")
        ),
    }
}

fn fit_config(kind: LawKind, flags: &FitFlags, file: &FileSettings) -> Result<FitConfig> {
    let mut config = FitConfig::for_law(kind);
    if let Some(delta) = file.pick(flags.delta, "delta")? {
        config.delta = delta;
    }
    if let Some(k) = file.pick(flags.train_first, "train_first")? {
        config.holdout_rule = HoldoutRule::FirstK(k);
    }
    if let Some(n) = file.pick(flags.max_iters, "max_iters")? {
        config.max_iters = n;
    }
    if let Some(tol) = file.pick(flags.grad_tol, "grad_tol")? {
        config.grad_tol = tol;
    }
    config.validate(kind)?;
    Ok(config)
}

fn law_for(series: &ObservationSeries, flags: &FitFlags, file: &FileSettings) -> Result<LawKind> {
    Ok(file
        .pick(flags.law, "law")?
        .unwrap_or_else(|| series.metric().default_law()))
}

fn write_out(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let file = FileSettings::load(cli.config.as_deref())?;
    match cli.command {
        Command::Fit {
            csv,
            select: sel,
            fit,
            output,
        } => {
            let series = select(load_series(&csv)?, &sel)?;
            let kind = law_for(&series, &fit, &file)?;
            let config = fit_config(kind, &fit, &file)?;
            let report = fit_law(&series, kind, &config)?;
            write_out(&emit_fit_report(&report), output.as_deref())?;
            if report.status == FitStatus::InvalidDomain {
                return Err(DomainFailure("fit left the law's domain".into()).into());
            }
            Ok(())
        }
        Command::Predict { params, d_p } => {
            let params = parse_params(&read(&params)?)?;
            let mut out = String::from("d_p,predicted\n");
            for d in d_p {
                out.push_str(&format!("{},{}\n", d.0, params.eval(d.0 as f64)?));
            }
            print!("{out}");
            Ok(())
        }
        Command::Invert { params, target } => {
            let LawParams::Log(law) = parse_params(&read(&params)?)? else {
                bail!("inversion needs log-law parameters");
            };
            let d = invert_log_law(&law, target)?;
            println!("{d}");
            Ok(())
        }
        Command::Align { mixture, task } => {
            println!("{}", alignment_score(&mixture, &task));
            Ok(())
        }
        Command::Diagnose {
            csv,
            fit,
            noise_tol,
            break_tol,
            r2_threshold,
        } => {
            let all = load_series(&csv)?;
            let noise_tol = file
                .pick(noise_tol, "noise_tol")?
                .unwrap_or(DEFAULT_NOISE_TOL);
            let r2 = file
                .pick(r2_threshold, "r2_threshold")?
                .unwrap_or(DEFAULT_R2_THRESHOLD);
            let break_flag = file.pick(break_tol, "break_tol")?;
            let mut entries = Vec::new();
            for s in &all {
                let kind = law_for(s, &fit, &file)?;
                let config = fit_config(kind, &fit, &file)?;
                let tol = break_flag.unwrap_or_else(|| default_break_tol(config.delta));
                let scan = match detect_break(s, kind, &config, tol) {
                    Ok(scan) => json!({
                        "law": kind.to_string(),
                        "break_tol": tol,
                        "break_index": scan.break_index,
                        "break_d_p": scan.break_index.map(|i| s.points()[i].d_p),
                        "holdout_error": scan.report.holdout_error,
                        "status": scan.report.status,
                    }),
                    Err(e) if e.is_domain() => {
                        json!({ "law": kind.to_string(), "error": e.to_string() })
                    }
                    Err(e) => return Err(e.into()),
                };
                entries.push(json!({
                    "metric": s.metric().tag(),
                    "d_f": s.d_f(),
                    "points": s.len(),
                    "monotonicity": check_monotonic(s, noise_tol),
                    "break": scan,
                }));
            }
            let mut relations = Vec::new();
            for score in all
                .iter()
                .filter(|s| s.metric().orientation() == Orientation::HigherIsBetter)
            {
                let partner = all.iter().find(|c| {
                    c.metric().orientation() == Orientation::LowerIsBetter && c.d_f() == score.d_f()
                });
                if let Some(ce) = partner {
                    let entry = match ce_score_relation(score, ce, r2) {
                        Ok(rel) => json!({
                            "score_metric": score.metric().tag(),
                            "d_f": score.d_f(),
                            "slope": rel.slope,
                            "intercept": rel.intercept,
                            "r_squared": rel.r_squared,
                            "verdict": rel.verdict,
                        }),
                        Err(e) => json!({
                            "score_metric": score.metric().tag(),
                            "d_f": score.d_f(),
                            "error": e.to_string(),
                        }),
                    };
                    relations.push(entry);
                }
            }
            let doc = json!({ "series": entries, "relations": relations });
            println!("{}", serde_json::to_string_pretty(&doc)?);
            Ok(())
        }
        Command::Advise {
            csv,
            select: sel,
            fit,
            target,
            baseline,
            candidates,
            noise_tol,
            break_tol,
        } => {
            let series = select(load_series(&csv)?, &sel)?;
            if series.metric().orientation() != Orientation::HigherIsBetter {
                bail!(
                    "valuation needs a translation-score series (bleu, rouge, comet, score); `{}` is a loss",
                    series.metric()
                );
            }
            if let Some(law) = file.pick(fit.law, "law")? {
                if law != LawKind::Log {
                    bail!("valuation always fits the log-law");
                }
            }
            let fit_config = fit_config(LawKind::Log, &fit, &file)?;
            let break_tol = file
                .pick(break_tol, "break_tol")?
                .unwrap_or_else(|| default_break_tol(fit_config.delta));
            let config = AdvisorConfig {
                fit_config,
                target_score: file.pick(target, "target")?,
                candidate_d_p: file
                    .pick(candidates, "candidates")?
                    .unwrap_or(TokenList::default())
                    .0,
                baseline_score: file.pick(baseline, "baseline")?,
                noise_tol: file
                    .pick(noise_tol, "noise_tol")?
                    .unwrap_or(DEFAULT_NOISE_TOL),
                break_tol,
            };
            let verdict = advise(&series, &config)?;
            print!("{}", emit_advice(&verdict, &series));
            Ok(())
        }
        Command::Bleu {
            hypotheses,
            references,
            percent,
            smooth,
        } => {
            let hyp = read(&hypotheses)?;
            let refs = read(&references)?;
            let corpus = TokenizedCorpus::from_lines(hyp.lines(), refs.lines())?;
            let mut b = bleu_with(&corpus, smooth);
            if percent {
                b.score *= 100.0;
            }
            println!("{}", serde_json::to_string_pretty(&b)?);
            Ok(())
        }
        Command::Plot {
            params,
            observations,
            select: sel,
            grid,
        } => {
            let params = parse_params(&read(&params)?)?;
            let series = match observations {
                Some(p) => Some(select(load_series(&p)?, &sel)?),
                None => None,
            };
            let text = match &series {
                Some(s) => emit_plot_data(s, &params, &grid.0)?,
                None => {
                    let mut out = String::from("d_p,observed,predicted\n");
                    let mut pts = grid.0.clone();
                    pts.sort_unstable();
                    pts.dedup();
                    for d in pts {
                        out.push_str(&format!("{d},,{}\n", params.eval(d as f64)?));
                    }
                    out
                }
            };
            print!("{text}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        assert_eq!(exit_code(&anyhow::Error::from(CoreError::Overflow)), 3);
        assert_eq!(exit_code(&anyhow::Error::from(CoreError::EmptySeries)), 2);
        let wrapped = anyhow::Error::from(CoreError::InsufficientData { needed: 4, got: 2 })
            .context("fitting");
        assert_eq!(exit_code(&wrapped), 3);
        assert_eq!(exit_code(&anyhow::anyhow!("bad flag")), 2);
        assert_eq!(exit_code(&DomainFailure("x".into()).into()), 3);
    }
}
