//! Projected limited-memory BFGS with componentwise clipping to a box.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, norm_inf};

/// Stored `(s, y)` pairs, oldest first.
pub type CurvatureHistory = VecDeque<(Vec<f64>, Vec<f64>)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Running,
    MaxIterations,
    Converged,
    LineSearchFailed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeOptions {
    pub max_iterations: usize,
    pub memory: usize,
    pub armijo: f64,
    pub max_halvings: usize,
    pub tolerance: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            max_iterations: 25,
            memory: 10,
            armijo: 1e-4,
            max_halvings: 30,
            tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InversionState {
    pub iteration: usize,
    pub model: Vec<f64>,
    pub gradient: Vec<f64>,
    pub bounds: (f64, f64),
    pub memory: usize,
    pub history: CurvatureHistory,
    /// Objective value per accepted iterate, starting with the initial model.
    pub objective: Vec<f64>,
    pub gradient_norm: Vec<f64>,
    /// Step length accepted at each iteration (0 for the initial entry).
    pub step_size: Vec<f64>,
    pub evaluations: usize,
    pub status: StopReason,
}

impl InversionState {
    /// `χ^(k) / χ^(0)`; starts at 1.
    pub fn normalized_objective(&self) -> Vec<f64> {
        let first = self.objective.first().copied().unwrap_or(1.0);
        if first == 0.0 {
            return self.objective.iter().map(|_| 0.0).collect();
        }
        self.objective.iter().map(|v| v / first).collect()
    }

    pub fn is_monotone(&self) -> bool {
        self.objective.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn current_objective(&self) -> f64 {
        *self
            .objective
            .last()
            .expect("state holds at least the initial objective")
    }
}

pub fn clip(x: &mut [f64], bounds: (f64, f64)) {
    for v in x {
        *v = v.clamp(bounds.0, bounds.1);
    }
}

/// Gradient with components that point out of the box at active bounds removed.
pub fn projected_gradient(x: &[f64], g: &[f64], bounds: (f64, f64)) -> Vec<f64> {
    x.iter()
        .zip(g)
        .map(|(&xi, &gi)| {
            if (xi <= bounds.0 && gi > 0.0) || (xi >= bounds.1 && gi < 0.0) {
                0.0
            } else {
                gi
            }
        })
        .collect()
}

/// Two-loop recursion: returns `−H g` with `H₀ = (sᵀy / yᵀy) I` from the newest pair.
pub fn lbfgs_direction(history: &CurvatureHistory, gradient: &[f64]) -> Result<Vec<f64>> {
    if gradient.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gradient"));
    }
    let mut q = gradient.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y) in history.iter().rev() {
        let rho = 1.0 / dot(y, s);
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push((a, rho));
    }
    if let Some((s, y)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y), (a, rho)) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    Ok(q)
}

/// Appends `(s, y)` unless the curvature condition fails; keeps at most `memory` pairs.
pub fn push_pair(history: &mut CurvatureHistory, s: Vec<f64>, y: Vec<f64>, memory: usize) -> bool {
    let sy = dot(&s, &y);
    if !(sy > 1e-16 * norm2(&s) * norm2(&y)) {
        return false;
    }
    history.push_back((s, y));
    while history.len() > memory {
        history.pop_front();
    }
    true
}

/// Minimizes `objective` over the box. `objective` returns `(f, ∇f)`;
/// `observe` is called after the initial evaluation and after every accepted
/// iteration. Trial points whose evaluation blows up count as rejected steps.
pub fn minimize<F, O>(
    mut objective: F,
    initial: &[f64],
    bounds: (f64, f64),
    options: &MinimizeOptions,
    mut observe: O,
) -> Result<InversionState>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    O: FnMut(&InversionState),
{
    let mut x = initial.to_vec();
    clip(&mut x, bounds);
    let (mut f, mut g) = objective(&x)?;
    check_value(f, &g)?;
    let mut state = InversionState {
        iteration: 0,
        model: x.clone(),
        gradient: g.clone(),
        bounds,
        memory: options.memory,
        history: VecDeque::new(),
        objective: vec![f],
        gradient_norm: vec![norm_inf(&projected_gradient(&x, &g, bounds))],
        step_size: vec![0.0],
        evaluations: 1,
        status: StopReason::Running,
    };
    observe(&state);
    loop {
        let pg = projected_gradient(&x, &g, bounds);
        if norm_inf(&pg) < options.tolerance {
            state.status = StopReason::Converged;
            break;
        }
        if state.iteration >= options.max_iterations {
            state.status = StopReason::MaxIterations;
            break;
        }
        let mut d = lbfgs_direction(&state.history, &g)?;
        for i in 0..d.len() {
            if (x[i] <= bounds.0 && d[i] < 0.0) || (x[i] >= bounds.1 && d[i] > 0.0) {
                d[i] = 0.0;
            }
        }
        if !(dot(&d, &g) < 0.0) {
            d = pg.iter().map(|v| -v).collect();
            state.history.clear();
        }
        let mut step = if state.history.is_empty() {
            (1.0 / norm2(&d)).min(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..=options.max_halvings {
            let mut trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            clip(&mut trial, bounds);
            let decrease: f64 = g
                .iter()
                .zip(trial.iter().zip(&x))
                .map(|(gi, (t, xi))| gi * (t - xi))
                .sum();
            state.evaluations += 1;
            let (ft, gt) = match objective(&trial)
                .and_then(|(ft, gt)| check_value(ft, &gt).map(|_| (ft, gt)))
            {
                Ok(v) => v,
                Err(e) if e.is_instability() => {
                    step *= 0.5;
                    continue;
                }
                Err(e) => return Err(e),
            };
            if ft <= f + options.armijo * decrease && ft <= f {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            state.status = StopReason::LineSearchFailed;
            break;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        push_pair(&mut state.history, s, y, options.memory);
        x = xn;
        f = fn_;
        g = gn;
        state.iteration += 1;
        state.model.clone_from(&x);
        state.gradient.clone_from(&g);
        state.objective.push(f);
        state
            .gradient_norm
            .push(norm_inf(&projected_gradient(&x, &g, bounds)));
        state.step_size.push(step);
        observe(&state);
    }
    Ok(state)
}

fn check_value(f: f64, g: &[f64]) -> Result<()> {
    if !f.is_finite() {
        return Err(Error::NonFinite("objective"));
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gradient"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic_1d(target: f64) -> impl FnMut(&[f64]) -> Result<(f64, Vec<f64>)> {
        move |x: &[f64]| Ok(((x[0] - target).powi(2), vec![2.0 * (x[0] - target)]))
    }

    #[test]
    fn empty_history_is_steepest_descent() {
        let d = lbfgs_direction(&VecDeque::new(), &[1.0, -2.0]).unwrap();
        assert_eq!(d, vec![-1.0, 2.0]);
        assert!(lbfgs_direction(&VecDeque::new(), &[f64::NAN]).is_err());
    }

    #[test]
    fn unconstrained_parabola() {
        let opts = MinimizeOptions {
            max_iterations: 50,
            ..Default::default()
        };
        let state = minimize(quadratic_1d(3.0), &[0.0], (-10.0, 10.0), &opts, |_| {}).unwrap();
        assert!((state.model[0] - 3.0).abs() < 1e-9);
        assert!(state.is_monotone());
        assert_eq!(state.normalized_objective()[0], 1.0);
    }

    #[test]
    fn active_upper_bound() {
        let opts = MinimizeOptions {
            max_iterations: 50,
            ..Default::default()
        };
        let state = minimize(quadratic_1d(2.0), &[0.0], (0.0, 1.2), &opts, |s| {
            assert!(s.model.iter().all(|&v| (0.0..=1.2).contains(&v)));
        })
        .unwrap();
        assert_eq!(state.model[0], 1.2);
        assert_eq!(state.status, StopReason::Converged);
    }

    #[test]
    fn unstable_trials_are_halved() {
        let opts = MinimizeOptions {
            max_iterations: 20,
            ..Default::default()
        };
        let mut f = quadratic_1d(3.0);
        let state = minimize(
            |x: &[f64]| {
                if x[0] > 3.5 {
                    Err(Error::NonFinite("objective"))
                } else {
                    f(x)
                }
            },
            &[0.0],
            (-10.0, 10.0),
            &opts,
            |_| {},
        )
        .unwrap();
        assert!((state.model[0] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn skips_pairs_without_curvature() {
        let mut h = VecDeque::new();
        assert!(!push_pair(&mut h, vec![1.0, 0.0], vec![-1.0, 0.0], 10));
        assert!(h.is_empty());
        for k in 0..12 {
            assert!(push_pair(
                &mut h,
                vec![1.0 + k as f64, 0.0],
                vec![1.0, 0.0],
                10
            ));
        }
        assert_eq!(h.len(), 10);
        assert_eq!(h.front().unwrap().0[0], 3.0);
    }
}
