//! Limited-memory BFGS with a backtracking Armijo line search.

use std::collections::VecDeque;

use crate::error::Result;
use crate::exec::dot;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when `|g|_∞ ≤ tol_rel · |g₀|_∞`.
    pub tol_rel: f64,
    /// Stop when `|g|_∞ ≤ tol_abs`.
    pub tol_abs: f64,
    /// Largest displacement of any coordinate on the very first step.
    pub first_step: f64,
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            memory: 10,
            max_iter: 500,
            tol_rel: 1e-8,
            tol_abs: 0.0,
            first_step: 1e-6,
            armijo: 1e-4,
            max_backtracks: 40,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    /// No step satisfying the Armijo condition was found; the last accepted
    /// iterate is returned.
    LineSearchFailed,
}

impl Termination {
    pub fn label(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIterations => "max-iterations",
            Termination::LineSearchFailed => "line-search-failed",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Clone, Debug)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub termination: Termination,
    pub log: Vec<IterationRecord>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

/// Minimizes `f` starting from `x0`. `fg` returns value and gradient.
pub fn lbfgs<F>(x0: Vec<f64>, mut fg: F, opts: &LbfgsOptions) -> Result<LbfgsResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut x = x0;
    let (mut f, mut g) = fg(&x)?;
    let g0 = inf_norm(&g);
    let tol = opts.tol_abs.max(opts.tol_rel * g0);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut log = vec![IterationRecord {
        iter: 0,
        energy: f,
        grad_norm: g0,
        step: 0.0,
    }];
    let mut termination = Termination::MaxIterations;

    for iter in 1..=opts.max_iter {
        let gn = inf_norm(&g);
        if gn <= tol {
            termination = Termination::Converged;
            break;
        }
        let mut d = two_loop(&g, &history);
        let mut slope = dot(&g, &d);
        if history.is_empty() || slope >= 0.0 {
            // steepest descent, scaled so the first move is small
            history.clear();
            let s = opts.first_step / gn;
            d = g.iter().map(|v| -v * s).collect();
            slope = dot(&g, &d);
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + alpha * di).collect();
            // a failing evaluation (e.g. an inverted element) counts as a rejected step
            if let Ok((ft, gt)) = fg(&trial) {
                if ft.is_finite() && ft <= f + opts.armijo * alpha * slope {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            termination = Termination::LineSearchFailed;
            break;
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        x = x_new;
        f = f_new;
        g = g_new;
        log.push(IterationRecord {
            iter,
            energy: f,
            grad_norm: inf_norm(&g),
            step: alpha,
        });
    }
    if termination == Termination::MaxIterations && inf_norm(&g) <= tol {
        termination = Termination::Converged;
    }
    Ok(LbfgsResult {
        grad_norm: inf_norm(&g),
        x,
        value: f,
        termination,
        log,
    })
}

/// Two-loop recursion: returns `−H g`.
fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_rosenbrock() {
        let fg = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
            Ok((f, g))
        };
        let opts = LbfgsOptions {
            max_iter: 2000,
            first_step: 1e-2,
            ..Default::default()
        };
        let r = lbfgs(vec![-1.2, 1.0], fg, &opts).unwrap();
        assert_eq!(r.termination, Termination::Converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6);
        assert!(r.log.windows(2).all(|w| w[1].energy <= w[0].energy));
    }

    #[test]
    fn zero_gradient_start_converges_immediately() {
        let r = lbfgs(vec![0.0; 4], |x| Ok((x.iter().map(|v| v * v).sum(), x.iter().map(|v| 2.0 * v).collect())), &LbfgsOptions::default()).unwrap();
        assert_eq!(r.termination, Termination::Converged);
        assert_eq!(r.log.len(), 1);
    }

    #[test]
    fn quadratic_converges_fast() {
        let diag = [1.0, 10.0, 100.0, 1000.0];
        let fg = |x: &[f64]| {
            let f = x.iter().zip(&diag).map(|(v, d)| 0.5 * d * v * v).sum();
            Ok((f, x.iter().zip(&diag).map(|(v, d)| d * v).collect()))
        };
        let r = lbfgs(vec![1.0; 4], fg, &LbfgsOptions::default()).unwrap();
        assert_eq!(r.termination, Termination::Converged);
        assert!(r.value < 1e-12);
    }
}
