//! Unconstrained coordinates for the two law families.
//!
//! Both laws are fitted in log-space around a data-dependent anchor
//! `x_ref = ln(d_ref)`:
//!
//! * log-law, `θ = (c, ln β, ln t)`:
//!   `ln f(x) = c + β · ln(1 + (x - x_ref) / t)`, with `x_ref` the smallest
//!   training abscissa and `t = x_ref - x0 > 0` the distance to the law's
//!   validity boundary `x0 = -log_a / α`. Every training point therefore lies
//!   inside the valid domain for any finite `θ`. The third coordinate is in
//!   fact `ln(t - t_min)`, where `t_min` is a small fraction of the training span.
//! * power-law, `θ = (ln E, k, ln α)`:
//!   `ln L(x) = ln(E + exp(k - α (x - x_ref)))`, with `x_ref` the mean
//!   training abscissa, so `k` is the reducible part at the centre of the data.
//!
//! Mapping back: `α = exp(c/β) / t`, `log_a = exp(c/β) - α·x_ref` for the
//! log-law, and `A = exp(k + α·x_ref)` for the power-law.

use crate::error::{Error, Result};
use crate::fit::huber::{huber, huber_slope};
use crate::model::{LawKind, LawParams, LogLaw, PowerLaw};

/// Stand-in for `E = 0` when mapping a seed into log coordinates.
pub const E_FLOOR: f64 = 1e-12;

/// Smallest allowed boundary distance `t`, as a fraction of the training span.
/// Keeps the curvature of `ln(1 + u/t)` bounded on noisy data.
const MIN_GAP_FRACTION: f64 = 0.01;

/// Beyond `|c / β| = 600` the mapped `α` overflows; a quadratic wall keeps
/// the search inside.
const SCALE_LIMIT: f64 = 600.0;
const EXP_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reparam {
    kind: LawKind,
    anchor: f64,
    /// Lower bound on the log-law boundary distance `t`.
    min_gap: f64,
    scale_limit: f64,
}

impl Reparam {
    /// Builds the coordinates for fitting `kind` on the log-token abscissae `xs`.
    pub fn new(kind: LawKind, xs: &[f64]) -> Self {
        let anchor = match kind {
            LawKind::Log => xs.iter().copied().fold(f64::INFINITY, f64::min),
            LawKind::Power => xs.iter().sum::<f64>() / xs.len().max(1) as f64,
        };
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let span = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max) - lo;
        let min_gap = match kind {
            LawKind::Log => MIN_GAP_FRACTION * span.max(0.0),
            LawKind::Power => 0.0,
        };
        Self {
            kind,
            anchor,
            min_gap,
            scale_limit: SCALE_LIMIT,
        }
    }

    pub fn kind(&self) -> LawKind {
        self.kind
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    /// Coordinates of `params`. Log-law parameters whose validity boundary is
    /// not at least the minimum gap below the anchor have no representation.
    pub fn to_unconstrained(&self, params: &LawParams) -> Result<[f64; 3]> {
        self.coordinates(params, false)
    }

    /// Starting point for a grid seed. A log-law seed whose boundary is too
    /// close to the anchor is moved back to twice the minimum gap.
    pub fn seed_point(&self, params: &LawParams) -> Result<[f64; 3]> {
        self.coordinates(params, true)
    }

    fn coordinates(&self, params: &LawParams, clamp: bool) -> Result<[f64; 3]> {
        params.check()?;
        match (self.kind, params) {
            (LawKind::Log, LawParams::Log(l)) => {
                let inner = l.log_a + l.alpha * self.anchor;
                if !(inner > 0.0) {
                    return Err(Error::InvalidDomain {
                        d_p: self.anchor.exp(),
                    });
                }
                let mut t = inner / l.alpha;
                if clamp {
                    t = t.max(2.0 * self.min_gap);
                } else if !(t > self.min_gap) {
                    return Err(Error::InvalidDomain {
                        d_p: self.anchor.exp(),
                    });
                }
                Ok([
                    l.beta * (l.alpha * t).ln(),
                    l.beta.ln(),
                    (t - self.min_gap).ln(),
                ])
            }
            (LawKind::Power, LawParams::Power(p)) => Ok([
                p.e.max(E_FLOOR).ln(),
                p.a.ln() - p.alpha * self.anchor,
                p.alpha.ln(),
            ]),
            _ => Err(Error::InvalidConfig(format!(
                "expected {} law parameters, got {:?}",
                self.kind, params
            ))),
        }
    }

    pub fn to_params(&self, theta: &[f64]) -> LawParams {
        match self.kind {
            LawKind::Log => {
                let (c, beta, t) = (theta[0], theta[1].exp(), self.min_gap + theta[2].exp());
                // Far outside the penalty wall; only guards against overflow.
                let scale = (c / beta).clamp(-EXP_LIMIT, EXP_LIMIT).exp();
                let alpha = scale / t;
                LawParams::Log(LogLaw {
                    log_a: scale - alpha * self.anchor,
                    alpha,
                    beta,
                })
            }
            LawKind::Power => {
                let alpha = theta[2].exp();
                LawParams::Power(PowerLaw {
                    e: theta[0].exp(),
                    a: (theta[1] + alpha * self.anchor).exp(),
                    alpha,
                })
            }
        }
    }

    /// Log-prediction at abscissa `x` and its gradient with respect to `θ`.
    #[inline]
    fn predict(&self, theta: &[f64], x: f64) -> (f64, [f64; 3]) {
        let u = x - self.anchor;
        match self.kind {
            LawKind::Log => {
                let (beta, gap) = (theta[1].exp(), theta[2].exp());
                let t = self.min_gap + gap;
                let w = (u / t).ln_1p();
                (
                    theta[0] + beta * w,
                    [1.0, beta * w, -beta * u * gap / (t * (t + u))],
                )
            }
            LawKind::Power => {
                let (e, alpha) = (theta[0].exp(), theta[2].exp());
                let p = (theta[1] - alpha * u).exp();
                let total = e + p;
                (total.ln(), [e / total, p / total, -alpha * u * p / total])
            }
        }
    }

    /// Quadratic penalty once `|c / β|` leaves the range where `α` is finite.
    fn scale_penalty(&self, theta: &[f64]) -> (f64, [f64; 3]) {
        if self.kind != LawKind::Log {
            return (0.0, [0.0; 3]);
        }
        let beta = theta[1].exp();
        let ratio = theta[0] / beta;
        let excess = ratio.abs() - self.scale_limit;
        if !(excess > 0.0) {
            return (0.0, [0.0; 3]);
        }
        (
            excess * excess,
            [
                2.0 * excess * ratio.signum() / beta,
                -2.0 * excess * ratio.abs(),
                0.0,
            ],
        )
    }

    /// Sum of Huber losses of log-residuals. Infinite or NaN outside the
    /// representable domain (only possible for points below the anchor).
    pub fn objective(&self, theta: &[f64], xs: &[f64], ys: &[f64], delta: f64) -> f64 {
        self.scale_penalty(theta).0
            + xs.iter()
                .zip(ys)
                .map(|(&x, &y)| {
                    let (yhat, _) = self.predict(theta, x);
                    if yhat.is_finite() {
                        huber(y - yhat, delta)
                    } else {
                        f64::INFINITY
                    }
                })
                .sum::<f64>()
    }

    pub fn gradient(&self, theta: &[f64], xs: &[f64], ys: &[f64], delta: f64) -> Vec<f64> {
        let mut grad = self.scale_penalty(theta).1.to_vec();
        for (&x, &y) in xs.iter().zip(ys) {
            let (yhat, d) = self.predict(theta, x);
            let w = huber_slope(y - yhat, delta);
            for (g, di) in grad.iter_mut().zip(d) {
                *g -= w * di;
            }
        }
        grad
    }
}
