//! End-to-end flows through the public API: text in, fitted laws and
//! decisions out.

use scalex_core::io::{
    emit_fit_report, emit_observations, emit_params, parse_fit_report, parse_observations,
    parse_params,
};
use scalex_core::reference::{self, generate, log_spaced_tokens, recovery_range};
use scalex_core::{
    advise, check_monotonic, detect_break, fit_law, invert_log_law, AdvisorConfig, AdvisorVerdict,
    FitConfig, FitStatus, HoldoutRule, LawKind, LawParams, MetricKind,
};

fn csv_for(params: &LawParams, metric: &str, d_f: u64, n: usize) -> String {
    let (lo, hi) = recovery_range(params);
    let mut text = String::from("d_p_tokens,value,metric,d_f_tokens,label\n");
    for (d, v) in generate(params, &log_spaced_tokens(lo, hi, n)).unwrap() {
        text.push_str(&format!("{d},{v},{metric},{d_f},\n"));
    }
    text
}

#[test]
fn csv_to_report_and_back_for_every_reference_row() {
    for row in reference::all_rows() {
        let metric = match row.params.kind() {
            LawKind::Log => "bleu",
            LawKind::Power => "ce",
        };
        let series = parse_observations(&csv_for(&row.params, metric, 1_000_000, 10))
            .unwrap()
            .remove(0);
        let kind = series.metric().default_law();
        assert_eq!(kind, row.params.kind());
        let report = fit_law(&series, kind, &FitConfig::for_law(kind)).unwrap();
        assert_eq!(report.status, FitStatus::Converged, "{row:?}");

        let text = emit_fit_report(&report);
        let back = parse_fit_report(&text).unwrap();
        assert_eq!(back, report);
        assert_eq!(emit_fit_report(&back), text);

        let params = parse_params(&emit_params(&report.params)).unwrap();
        assert_eq!(params, report.params);
        for r in report.held_out() {
            let truth = row.params.eval(r.d_p as f64).unwrap();
            assert!((params.eval(r.d_p as f64).unwrap() / truth - 1.0).abs() < 1e-3);
        }
    }
}

#[test]
fn mixed_file_splits_into_series_and_reemits_identically() {
    let row = reference::log_law_rows().next().unwrap();
    let pow = reference::power_law_rows().next().unwrap();
    let mut text = csv_for(&row.params, "bleu", 6_000_000, 6);
    text.push_str(
        csv_for(&pow.params, "ce", 6_000_000, 6)
            .lines()
            .skip(1)
            .map(|l| format!("{l}\n"))
            .collect::<String>()
            .as_str(),
    );
    let all = parse_observations(&text).unwrap();
    assert_eq!(all.len(), 2);
    assert_eq!(all[0].metric(), MetricKind::Bleu);
    assert_eq!(all[1].metric(), MetricKind::DownstreamCrossEntropy);
    assert_eq!(parse_observations(&emit_observations(&all)).unwrap(), all);
}

#[test]
fn clean_series_passes_every_diagnostic_and_the_advisor_inverts_it() {
    let row = reference::log_law_rows().next().unwrap();
    let LawParams::Log(law) = row.params else {
        unreachable!()
    };
    let series = parse_observations(&csv_for(&row.params, "bleu", 6_000_000, 10))
        .unwrap()
        .remove(0);
    assert!(check_monotonic(&series, 0.005).is_monotone());

    let config = FitConfig::for_law(LawKind::Log);
    let scan = detect_break(&series, LawKind::Log, &config, 0.025).unwrap();
    assert_eq!(scan.break_index, None);

    let last = series.points().last().unwrap().d_p as f64;
    let target = row.params.eval(last * 3.0).unwrap();
    let advisor = AdvisorConfig {
        target_score: Some(target),
        candidate_d_p: vec![(last * 2.0) as u64, (last * 4.0) as u64],
        ..AdvisorConfig::default()
    };
    match advise(&series, &advisor).unwrap() {
        AdvisorVerdict::FitOk {
            tokens_for_target: Some(d),
            predictions,
            not_worth_pretraining,
            ..
        } => {
            let expected = invert_log_law(&law, target).unwrap();
            assert!((d / expected - 1.0).abs() < 1e-3);
            assert!(predictions[0].score < predictions[1].score);
            assert!(!not_worth_pretraining);
        }
        other => panic!("expected fit_ok, got {}", other.name()),
    }
}

#[test]
fn fitting_on_all_points_leaves_nothing_held_out() {
    let row = reference::power_law_rows().next().unwrap();
    let series = parse_observations(&csv_for(&row.params, "ce", 1, 6))
        .unwrap()
        .remove(0);
    let config = FitConfig::for_law(LawKind::Power).with_holdout(HoldoutRule::All);
    let report = fit_law(&series, LawKind::Power, &config).unwrap();
    assert_eq!(report.held_out().count(), 0);
    assert!(report.residuals.iter().all(|r| r.log_residual.abs() < 1e-6));
}
