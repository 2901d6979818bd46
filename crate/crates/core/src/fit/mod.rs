//! Robust fitting of the scaling laws: Huber loss on log-residuals,
//! minimized with L-BFGS from every seed of an initialization grid.

mod huber;
mod lbfgs;
mod reparam;

pub use huber::huber_loss;
pub use lbfgs::{lbfgs_minimize, LbfgsOptions, LbfgsResult, LbfgsStatus, OptimizerState};
pub use reparam::{Reparam, E_FLOOR};

use crate::error::{Error, Result};
use crate::model::{
    FitConfig, FitReport, FitStatus, LawKind, LawParams, ObservationSeries, Residual,
};

fn log_abscissae(series: &ObservationSeries) -> Vec<f64> {
    series.points().iter().map(|p| p.log_tokens()).collect()
}

fn log_values(series: &ObservationSeries) -> Vec<f64> {
    series.values().map(f64::ln).collect()
}

/// Log-residual `ln(observed) - ln(predicted)` for every point of `series`.
fn log_residuals(series: &ObservationSeries, params: &LawParams) -> Result<Vec<f64>> {
    params.check()?;
    series
        .points()
        .iter()
        .map(|p| {
            let pred = params.eval(p.d_p as f64)?;
            if !(pred > 0.0 && pred.is_finite()) {
                return Err(Error::InvalidDomain { d_p: p.d_p as f64 });
            }
            Ok(p.value.ln() - pred.ln())
        })
        .collect()
}

/// Sum over the series of Huber losses between observed and predicted log-values.
pub fn objective(series: &ObservationSeries, params: &LawParams, delta: f64) -> Result<f64> {
    Ok(log_residuals(series, params)?
        .into_iter()
        .map(|r| huber::huber(r, delta))
        .sum())
}

/// Gradient of [`objective`] in the unconstrained coordinates given by
/// `Reparam::new(params.kind(), ln d_p of series)`.
pub fn objective_gradient(
    series: &ObservationSeries,
    params: &LawParams,
    delta: f64,
) -> Result<Vec<f64>> {
    log_residuals(series, params)?;
    let xs = log_abscissae(series);
    let reparam = Reparam::new(params.kind(), &xs);
    let theta = reparam.to_unconstrained(params)?;
    Ok(reparam.gradient(&theta, &xs, &log_values(series), delta))
}

/// Index of the best candidate: lowest objective, ties to the lowest seed index.
fn select_best<'a, I>(candidates: I) -> Option<(usize, &'a LbfgsResult)>
where
    I: IntoIterator<Item = &'a (usize, LbfgsResult)>,
{
    let mut best: Option<(usize, &LbfgsResult)> = None;
    for (idx, res) in candidates {
        match best {
            Some((bi, b)) if res.value > b.value || (res.value == b.value && *idx > bi) => {}
            _ => best = Some((*idx, res)),
        }
    }
    best
}

/// Drops points at the value floor and checks the series is long enough.
fn training_series(
    series: &ObservationSeries,
    config: &FitConfig,
) -> Result<(ObservationSeries, usize)> {
    let floor = config.value_floor;
    let needed = config.holdout_rule.min_points();
    let kept = series
        .filtered(|p| p.value > floor)
        .ok_or(Error::InsufficientData { needed, got: 0 })?;
    if kept.len() < series.len() {
        log::warn!(
            "dropping {} point(s) at or below the value floor {floor:e}",
            series.len() - kept.len()
        );
    }
    if kept.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            got: kept.len(),
        });
    }
    let n_train = config.holdout_rule.train_len(kept.len());
    Ok((kept, n_train))
}

/// Runs L-BFGS from every grid seed that maps into the training domain.
fn run_seeds(
    reparam: &Reparam,
    xs: &[f64],
    ys: &[f64],
    config: &FitConfig,
) -> Vec<(usize, LbfgsResult)> {
    let opts = LbfgsOptions {
        max_iters: config.max_iters,
        grad_tol: config.grad_tol,
        memory: config.memory,
        ..LbfgsOptions::default()
    };
    let f = |theta: &[f64]| reparam.objective(theta, xs, ys, config.delta);
    let g = |theta: &[f64]| reparam.gradient(theta, xs, ys, config.delta);
    config
        .init_grid
        .iter()
        .enumerate()
        .filter_map(|(idx, seed)| {
            let theta0 = reparam.seed_point(seed).ok()?;
            lbfgs_minimize(f, g, &theta0, &opts).ok().map(|r| (idx, r))
        })
        .collect()
}

/// Fits `kind` to the training split of `series` and scores the held-out points.
pub fn fit_law(series: &ObservationSeries, kind: LawKind, config: &FitConfig) -> Result<FitReport> {
    config.validate(kind)?;
    let (series, n_train) = training_series(series, config)?;
    let xs = log_abscissae(&series);
    let ys = log_values(&series);
    let reparam = Reparam::new(kind, &xs[..n_train]);
    let results = run_seeds(&reparam, &xs[..n_train], &ys[..n_train], config);

    let (init_used, best) = select_best(&results).ok_or(Error::InvalidDomain {
        d_p: series.points()[0].d_p as f64,
    })?;

    let params = reparam.to_params(&best.x);
    let mut status = match best.status {
        LbfgsStatus::Converged => FitStatus::Converged,
        LbfgsStatus::MaxIters => FitStatus::MaxIters,
        LbfgsStatus::Stalled => FitStatus::Stalled,
    };
    if params.check().is_err() {
        status = FitStatus::InvalidDomain;
    }

    let mut residuals = Vec::with_capacity(series.len());
    for (i, p) in series.points().iter().enumerate() {
        let predicted = params.eval(p.d_p as f64).unwrap_or(f64::NAN);
        let log_residual = p.value.ln() - predicted.ln();
        if !log_residual.is_finite() {
            status = FitStatus::InvalidDomain;
        }
        residuals.push(Residual {
            d_p: p.d_p,
            observed: p.value,
            predicted,
            log_residual,
            held_out: i >= n_train,
        });
    }
    let held: Vec<f64> = residuals
        .iter()
        .filter(|r| r.held_out)
        .map(|r| huber::huber(r.log_residual, config.delta))
        .collect();
    let holdout_error = if held.is_empty() {
        0.0
    } else {
        held.iter().sum::<f64>() / held.len() as f64
    };

    Ok(FitReport {
        params,
        train_objective: best.value,
        holdout_error,
        residuals,
        status,
        init_used,
    })
}

/// Training objective reached from every usable seed, in grid order.
pub fn seed_objectives(
    series: &ObservationSeries,
    kind: LawKind,
    config: &FitConfig,
) -> Result<Vec<(usize, f64)>> {
    config.validate(kind)?;
    let (series, n_train) = training_series(series, config)?;
    let xs = &log_abscissae(&series)[..n_train];
    let ys = &log_values(&series)[..n_train];
    let reparam = Reparam::new(kind, xs);
    Ok(run_seeds(&reparam, xs, ys, config)
        .into_iter()
        .map(|(i, r)| (i, r.value))
        .collect())
}
