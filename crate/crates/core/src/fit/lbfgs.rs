//! Limited-memory BFGS with a backtracking Armijo line search.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsOptions {
    pub max_iters: usize,
    /// Stop once the infinity norm of the gradient drops to this level.
    pub grad_tol: f64,
    pub memory: usize,
    pub armijo_c1: f64,
    pub shrink: f64,
    pub max_backtracks: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            max_iters: 500,
            grad_tol: 1e-9,
            memory: 10,
            armijo_c1: 1e-4,
            shrink: 0.5,
            max_backtracks: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LbfgsStatus {
    Converged,
    MaxIters,
    /// No step along the search direction (or steepest descent) lowers the objective.
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
    pub status: LbfgsStatus,
}

/// Curvature pairs kept by the two-loop recursion.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub x: Vec<f64>,
    history: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    memory: usize,
    pub iter: usize,
}

impl OptimizerState {
    pub fn new(x: Vec<f64>, memory: usize) -> Self {
        Self {
            x,
            history: VecDeque::with_capacity(memory),
            memory: memory.max(1),
            iter: 0,
        }
    }

    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    /// Stored `(step, gradient difference)` pairs, oldest first.
    pub fn pairs(&self) -> impl Iterator<Item = (&[f64], &[f64])> {
        self.history
            .iter()
            .map(|(s, y, _)| (s.as_slice(), y.as_slice()))
    }

    /// Records a pair if it satisfies the curvature condition; returns whether it was kept.
    pub fn push(&mut self, s: Vec<f64>, y: Vec<f64>) -> bool {
        let sy = dot(&s, &y);
        if !(sy > 1e-16 * norm2(&s) * norm2(&y)) || !sy.is_finite() {
            return false;
        }
        if self.history.len() == self.memory {
            self.history.pop_front();
        }
        self.history.push_back((s, y, sy.recip()));
        true
    }

    pub fn reset(&mut self) {
        self.history.clear();
    }

    /// Two-loop recursion: returns `-H g`.
    pub fn direction(&self, g: &[f64]) -> Vec<f64> {
        let mut q = g.to_vec();
        let mut alphas = Vec::with_capacity(self.history.len());
        for (s, y, rho) in self.history.iter().rev() {
            let a = rho * dot(s, &q);
            axpy(-a, y, &mut q);
            alphas.push(a);
        }
        let gamma = match self.history.back() {
            Some((_, y, rho)) => 1.0 / (rho * dot(y, y)),
            None => 1.0,
        };
        q.iter_mut().for_each(|v| *v *= gamma);
        for ((s, y, rho), a) in self.history.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            axpy(a - b, s, &mut q);
        }
        q.iter_mut().for_each(|v| *v = -*v);
        q
    }
}

/// Minimizes `f` from `x0` given its gradient `g`.
///
/// The returned point never has a larger objective than `x0`.
pub fn lbfgs_minimize<F, G>(f: F, g: G, x0: &[f64], opts: &LbfgsOptions) -> Result<LbfgsResult>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let mut state = OptimizerState::new(x0.to_vec(), opts.memory);
    let mut fx = f(&state.x);
    let mut gx = g(&state.x);
    if !fx.is_finite() || gx.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteObjective);
    }

    let finish = |state: OptimizerState, value, grad, status| LbfgsResult {
        x: state.x,
        value,
        grad,
        iterations: state.iter,
        status,
    };

    loop {
        if norm_inf(&gx) <= opts.grad_tol {
            return Ok(finish(state, fx, gx, LbfgsStatus::Converged));
        }
        if state.iter >= opts.max_iters {
            return Ok(finish(state, fx, gx, LbfgsStatus::MaxIters));
        }

        let mut dir = state.direction(&gx);
        let mut slope = dot(&dir, &gx);
        if !(slope < 0.0) {
            state.reset();
            dir = gx.iter().map(|v| -v).collect();
            slope = dot(&dir, &gx);
        }

        let step0 = if state.history_len() == 0 {
            (1.0 / norm_inf(&dir)).min(1.0)
        } else {
            1.0
        };
        let (step, f_new) = match line_search(&f, &state.x, fx, &dir, slope, step0, opts)? {
            Some(found) => found,
            None if state.history_len() > 0 => {
                // Retry once along steepest descent before giving up.
                state.reset();
                continue;
            }
            None => return Ok(finish(state, fx, gx, LbfgsStatus::Stalled)),
        };

        let x_new: Vec<f64> = state
            .x
            .iter()
            .zip(&dir)
            .map(|(x, d)| x + step * d)
            .collect();
        let g_new = g(&x_new);
        if g_new.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteObjective);
        }
        let s: Vec<f64> = dir.iter().map(|d| step * d).collect();
        let y: Vec<f64> = g_new.iter().zip(&gx).map(|(a, b)| a - b).collect();
        state.push(s, y);
        state.x = x_new;
        fx = f_new;
        gx = g_new;
        state.iter += 1;
    }
}

/// Backtracks from `step` until the Armijo condition holds, returning the
/// accepted step and objective. `None` when the backtrack budget runs out.
fn line_search<F: Fn(&[f64]) -> f64>(
    f: &F,
    x: &[f64],
    fx: f64,
    dir: &[f64],
    slope: f64,
    mut step: f64,
    opts: &LbfgsOptions,
) -> Result<Option<(f64, f64)>> {
    let mut trial = vec![0.0; x.len()];
    let mut saw_finite = false;
    for _ in 0..=opts.max_backtracks {
        for ((t, xi), di) in trial.iter_mut().zip(x).zip(dir) {
            *t = xi + step * di;
        }
        let ft = f(&trial);
        if ft.is_finite() {
            saw_finite = true;
            if ft <= fx + opts.armijo_c1 * step * slope && ft < fx {
                return Ok(Some((step, ft)));
            }
        }
        step *= opts.shrink;
    }
    if saw_finite {
        Ok(None)
    } else {
        Err(Error::NonFiniteObjective)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    fn rosenbrock_grad(x: &[f64]) -> Vec<f64> {
        vec![
            -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]),
            200.0 * (x[1] - x[0] * x[0]),
        ]
    }

    #[test]
    fn quadratic_minimum() {
        let c = [1.0, 2.0, 3.0];
        let f = |x: &[f64]| x.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let g = |x: &[f64]| {
            x.iter()
                .zip(&c)
                .map(|(a, b)| 2.0 * (a - b))
                .collect::<Vec<_>>()
        };
        let res = lbfgs_minimize(f, g, &[0.0; 3], &LbfgsOptions::default()).unwrap();
        assert_eq!(res.status, LbfgsStatus::Converged);
        for (x, c) in res.x.iter().zip(&c) {
            assert!((x - c).abs() < 1e-8);
        }
    }

    #[test]
    fn rosenbrock_from_standard_start() {
        let opts = LbfgsOptions {
            max_iters: 2000,
            ..Default::default()
        };
        let res = lbfgs_minimize(rosenbrock, rosenbrock_grad, &[-1.2, 1.0], &opts).unwrap();
        assert!(
            (res.x[0] - 1.0).abs() < 1e-6 && (res.x[1] - 1.0).abs() < 1e-6,
            "{:?}",
            res
        );
        assert!(res.value <= rosenbrock(&[-1.2, 1.0]));
    }

    #[test]
    fn early_exit_at_minimum() {
        let f = |x: &[f64]| x[0] * x[0];
        let g = |x: &[f64]| vec![2.0 * x[0]];
        let res = lbfgs_minimize(f, g, &[0.0], &LbfgsOptions::default()).unwrap();
        assert_eq!(res.iterations, 0);
        assert_eq!(res.x, vec![0.0]);
        assert_eq!(res.status, LbfgsStatus::Converged);
    }

    #[test]
    fn max_iters_reported() {
        let opts = LbfgsOptions {
            max_iters: 3,
            ..Default::default()
        };
        let res = lbfgs_minimize(rosenbrock, rosenbrock_grad, &[-1.2, 1.0], &opts).unwrap();
        assert_eq!(res.status, LbfgsStatus::MaxIters);
        assert_eq!(res.iterations, 3);
        assert!(res.value < rosenbrock(&[-1.2, 1.0]));
    }

    #[test]
    fn retreats_from_non_finite_region() {
        // ln barrier: undefined for x <= 0, minimum at x = 1.
        let f = |x: &[f64]| {
            if x[0] > 0.0 {
                x[0] - x[0].ln()
            } else {
                f64::NAN
            }
        };
        let g = |x: &[f64]| vec![1.0 - 1.0 / x[0]];
        let res = lbfgs_minimize(f, g, &[5.0], &LbfgsOptions::default()).unwrap();
        assert!((res.x[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let f = |_: &[f64]| f64::INFINITY;
        let g = |_: &[f64]| vec![0.0];
        let err = lbfgs_minimize(f, g, &[0.0], &LbfgsOptions::default()).unwrap_err();
        assert_eq!(err, Error::NonFiniteObjective);
    }

    #[test]
    fn history_respects_memory_and_curvature() {
        let mut st = OptimizerState::new(vec![0.0, 0.0], 2);
        assert!(!st.push(vec![1.0, 0.0], vec![-1.0, 0.0]));
        for k in 1..5 {
            assert!(st.push(vec![k as f64, 0.0], vec![1.0, 0.5]));
        }
        assert_eq!(st.history_len(), 2);
        assert!(st.pairs().all(|(s, y)| dot(s, y) > 0.0));
    }
}
