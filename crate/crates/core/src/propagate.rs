//! Explicit central-difference time integration of `M ü + K u = f`.

use std::f64::consts::PI;

use crate::assembly::{point_load_vector, SystemOperators};
use crate::error::{Error, Result};
use crate::grid::{Grid, Point};
use crate::linalg::norm_inf;

/// Hann-windowed sine burst of `cycles` periods at `frequency`.
pub fn sine_burst(t: f64, frequency: f64, cycles: f64) -> f64 {
    let duration = cycles / frequency;
    if !(0.0..=duration).contains(&t) {
        return 0.0;
    }
    let window = 0.5 * (1.0 - (2.0 * PI * t / duration).cos());
    (2.0 * PI * frequency * t).sin() * window
}

/// Gaussian bell `A exp(-(x - center)² / (2 width²))`.
pub fn gaussian_bell(x: f64, center: f64, width: f64, amplitude: f64) -> f64 {
    amplitude * (-(x - center).powi(2) / (2.0 * width * width)).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub enum TimeFunction {
    SineBurst {
        frequency: f64,
        cycles: f64,
        amplitude: f64,
    },
    Gaussian {
        center: f64,
        width: f64,
        amplitude: f64,
    },
}

impl TimeFunction {
    pub fn evaluate(&self, t: f64) -> f64 {
        match *self {
            TimeFunction::SineBurst {
                frequency,
                cycles,
                amplitude,
            } => amplitude * sine_burst(t, frequency, cycles),
            TimeFunction::Gaussian {
                center,
                width,
                amplitude,
            } => gaussian_bell(t, center, width, amplitude),
        }
    }

    pub fn sample(&self, time: &TimeAxis) -> Vec<f64> {
        (0..=time.steps)
            .map(|n| self.evaluate(time.time(n)))
            .collect()
    }
}

/// Uniform time grid `t_n = n Δt`, `n = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeAxis {
    pub dt: f64,
    pub steps: usize,
}

impl TimeAxis {
    pub fn new(dt: f64, duration: f64) -> Result<Self> {
        if !(dt > 0.0) || !(duration >= 0.0) || !dt.is_finite() || !duration.is_finite() {
            return Err(Error::Config(format!(
                "invalid time axis dt={dt}, T={duration}"
            )));
        }
        let steps = (duration / dt + 1e-9).floor() as usize;
        Ok(Self { dt, steps })
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn duration(&self) -> f64 {
        self.time(self.steps)
    }

    pub fn samples(&self) -> usize {
        self.steps + 1
    }
}

/// A spatial load pattern with its per-step amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct Load {
    pub entries: Vec<(usize, f64)>,
    pub signal: Vec<f64>,
}

/// Right-hand side `f^n = Σ_l signal_l[n] b_l`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Excitation {
    pub loads: Vec<Load>,
}

impl Excitation {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn point_source(
        grid: &Grid,
        position: Point,
        function: &TimeFunction,
        time: &TimeAxis,
    ) -> Result<Self> {
        Ok(Self {
            loads: vec![Load {
                entries: point_load_vector(grid, position)?,
                signal: function.sample(time),
            }],
        })
    }

    pub fn add_into(&self, step: usize, out: &mut [f64]) {
        for load in &self.loads {
            let s = load.signal.get(step).copied().unwrap_or(0.0);
            if s != 0.0 {
                for &(i, v) in &load.entries {
                    out[i] += s * v;
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.loads
            .iter()
            .all(|l| l.signal.iter().all(|&s| s == 0.0))
    }
}

/// Nodal initial displacement and velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    pub displacement: Vec<f64>,
    pub velocity: Vec<f64>,
}

/// How the first step is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartRule {
    /// `u¹ = u⁰ + Δt v⁰ + ½ Δt² M⁻¹(f⁰ − K u⁰)`.
    Taylor,
    /// Recurrence with `u⁻¹ = u⁰` (a system that was at rest before `t = 0`).
    Rest,
}

/// Point receivers sampled through the basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Receivers {
    pub positions: Vec<Point>,
    weights: Vec<Vec<(usize, f64)>>,
}

impl Receivers {
    pub fn new(grid: &Grid, positions: &[Point]) -> Result<Self> {
        let weights = positions
            .iter()
            .map(|&p| point_load_vector(grid, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            positions: positions.to_vec(),
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn weights(&self, receiver: usize) -> &[(usize, f64)] {
        &self.weights[receiver]
    }

    pub fn sample(&self, u: &[f64], out: &mut [f64]) {
        for (slot, w) in out.iter_mut().zip(&self.weights) {
            *slot = w.iter().map(|&(i, v)| v * u[i]).sum();
        }
    }
}

/// Receiver time series of one experiment, row-major `[sample][receiver]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveRecording {
    pub positions: Vec<Point>,
    pub dt: f64,
    pub source_index: usize,
    pub samples: Vec<f64>,
}

impl WaveRecording {
    pub fn zeros(positions: Vec<Point>, time: &TimeAxis, source_index: usize) -> Self {
        let n = positions.len() * time.samples();
        Self {
            positions,
            dt: time.dt,
            source_index,
            samples: vec![0.0; n],
        }
    }

    pub fn receivers(&self) -> usize {
        self.positions.len()
    }

    pub fn sample_count(&self) -> usize {
        if self.positions.is_empty() {
            0
        } else {
            self.samples.len() / self.positions.len()
        }
    }

    pub fn value(&self, sample: usize, receiver: usize) -> f64 {
        self.samples[sample * self.receivers() + receiver]
    }

    pub fn trace(&self, receiver: usize) -> Vec<f64> {
        (0..self.sample_count())
            .map(|n| self.value(n, receiver))
            .collect()
    }

    /// Linear interpolation onto another time axis; zero beyond the last sample.
    pub fn resample(&self, time: &TimeAxis) -> Self {
        let nr = self.receivers();
        let ns = self.sample_count();
        let mut samples = vec![0.0; time.samples() * nr];
        for n in 0..time.samples() {
            let mut s = time.time(n) / self.dt;
            if (s - s.round()).abs() < 1e-9 {
                s = s.round();
            }
            let i = s.floor() as usize;
            let frac = s - i as f64;
            for r in 0..nr {
                let v = if i + 1 < ns {
                    (1.0 - frac) * self.value(i, r) + frac * self.value(i + 1, r)
                } else if i < ns && frac == 0.0 {
                    self.value(i, r)
                } else {
                    0.0
                };
                samples[n * nr + r] = v;
            }
        }
        Self {
            positions: self.positions.clone(),
            dt: time.dt,
            source_index: self.source_index,
            samples,
        }
    }
}

/// Nodal snapshots stored every `stride` steps (plus the final step).
#[derive(Debug, Clone, PartialEq)]
pub struct WavefieldHistory {
    pub stride: usize,
    pub dt: f64,
    pub steps: Vec<usize>,
    pub fields: Vec<Vec<f64>>,
}

impl WavefieldHistory {
    pub fn new(stride: usize, dt: f64) -> Self {
        Self {
            stride: stride.max(1),
            dt,
            steps: Vec::new(),
            fields: Vec::new(),
        }
    }

    pub fn stored_steps(time: &TimeAxis, stride: usize) -> Vec<usize> {
        let stride = stride.max(1);
        let mut steps: Vec<usize> = (0..=time.steps).step_by(stride).collect();
        if *steps.last().unwrap() != time.steps {
            steps.push(time.steps);
        }
        steps
    }

    fn wants(&self, step: usize, last: usize) -> bool {
        step.is_multiple_of(self.stride) || step == last
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Snapshot at a stored step, if present.
    pub fn at_step(&self, step: usize) -> Option<&[f64]> {
        self.steps
            .binary_search(&step)
            .ok()
            .map(|k| self.fields[k].as_slice())
    }
}

/// Largest stable time step estimated by power iteration on `M⁻¹K`.
pub fn stability_limit(ops: &SystemOperators) -> f64 {
    let n = ops.num_dofs();
    let mut v: Vec<f64> = (0..n)
        .map(|i| ((i * 7919 + 13) % 101) as f64 / 101.0 - 0.5)
        .collect();
    let mut scratch = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut lambda = 0.0;
    for _ in 0..60 {
        let norm = norm_inf(&v);
        if norm == 0.0 {
            break;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        ops.stiffness.mul_vec_into(&v, &mut w);
        ops.mass_factor.solve_in_place(&mut w, &mut scratch);
        // Rayleigh quotient in the M inner product
        let kv = ops.stiffness.bilinear(&v, &v);
        let mv = ops.mass.bilinear(&v, &v);
        if mv > 0.0 {
            lambda = f64::max(lambda, kv / mv);
        }
        std::mem::swap(&mut v, &mut w);
    }
    if lambda > 0.0 {
        2.0 / lambda.sqrt()
    } else {
        f64::INFINITY
    }
}

/// Central-difference integration. `observe(n, u^n)` is called for every
/// `n = 0..=time.steps`.
pub fn integrate<F>(
    ops: &SystemOperators,
    excitation: &Excitation,
    initial: Option<&InitialState>,
    time: &TimeAxis,
    start: StartRule,
    mut observe: F,
) -> Result<()>
where
    F: FnMut(usize, &[f64]),
{
    let n = ops.num_dofs();
    let dt = time.dt;
    let dt2 = dt * dt;
    let limit = stability_limit(ops);
    if dt > limit {
        return Err(Error::TimeStepTooLarge { dt, limit });
    }
    let mut prev = vec![0.0; n];
    let mut cur = initial.map_or_else(|| vec![0.0; n], |s| s.displacement.clone());
    let velocity = initial.map(|s| s.velocity.clone());
    let mut next = vec![0.0; n];
    let mut acc = vec![0.0; n];
    let mut scratch = vec![0.0; n];

    let bound = amplitude_bound(ops, excitation, initial, time);
    observe(0, &cur);
    for step in 0..time.steps {
        ops.stiffness.mul_vec_into(&cur, &mut acc);
        acc.iter_mut().for_each(|a| *a = -*a);
        excitation.add_into(step, &mut acc);
        for &d in &ops.dirichlet {
            acc[d] = 0.0;
        }
        ops.mass_factor.solve_in_place(&mut acc, &mut scratch);
        if step == 0 {
            match start {
                StartRule::Taylor => {
                    for i in 0..n {
                        let v0 = velocity.as_ref().map_or(0.0, |v| v[i]);
                        next[i] = cur[i] + dt * v0 + 0.5 * dt2 * acc[i];
                    }
                }
                StartRule::Rest => {
                    for i in 0..n {
                        next[i] = cur[i] + dt2 * acc[i];
                    }
                }
            }
        } else {
            for i in 0..n {
                next[i] = 2.0 * cur[i] - prev[i] + dt2 * acc[i];
            }
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
        if step % 8 == 7 || step + 1 == time.steps {
            let amp = norm_inf(&cur);
            if !amp.is_finite() || (bound > 0.0 && amp > 1e6 * bound) {
                return Err(Error::Unstable {
                    step: step + 1,
                    amplitude: amp,
                    bound,
                    dt,
                    limit,
                });
            }
        }
        observe(step + 1, &cur);
    }
    Ok(())
}

/// A-priori amplitude scale `|u⁰| + T|v⁰| + T² Σ |M⁻¹ b_l| max|s_l|`.
fn amplitude_bound(
    ops: &SystemOperators,
    excitation: &Excitation,
    initial: Option<&InitialState>,
    time: &TimeAxis,
) -> f64 {
    let t = time.duration().max(time.dt);
    let mut bound = 0.0;
    if let Some(s) = initial {
        bound += norm_inf(&s.displacement) + t * norm_inf(&s.velocity);
    }
    let n = ops.num_dofs();
    let mut scratch = vec![0.0; n];
    for load in &excitation.loads {
        let peak = norm_inf(&load.signal);
        if peak == 0.0 {
            continue;
        }
        let mut b = vec![0.0; n];
        for &(i, v) in &load.entries {
            b[i] += v;
        }
        ops.mass_factor.solve_in_place(&mut b, &mut scratch);
        bound += t * t * norm_inf(&b) * peak;
    }
    bound
}

/// Runs a forward simulation, sampling receivers every step and storing the
/// wavefield every `stride` steps when `stride` is given.
pub fn run_forward(
    ops: &SystemOperators,
    excitation: &Excitation,
    initial: Option<&InitialState>,
    receivers: &Receivers,
    time: &TimeAxis,
    stride: Option<usize>,
) -> Result<(WaveRecording, Option<WavefieldHistory>)> {
    let mut recording = WaveRecording::zeros(receivers.positions.clone(), time, 0);
    let nr = receivers.len();
    let mut history = stride.map(|s| WavefieldHistory::new(s, time.dt));
    let last = time.steps;
    integrate(
        ops,
        excitation,
        initial,
        time,
        StartRule::Taylor,
        |step, u| {
            receivers.sample(u, &mut recording.samples[step * nr..(step + 1) * nr]);
            if let Some(h) = history.as_mut() {
                if h.wants(step, last) {
                    h.steps.push(step);
                    h.fields.push(u.to_vec());
                }
            }
        },
    )?;
    Ok((recording, history))
}

/// Forward runs of several experiments from rest that share one operator,
/// advanced together so each mass solve streams the factor once. Returns
/// one recording per excitation, in order.
pub fn run_forward_block(
    ops: &SystemOperators,
    excitations: &[Excitation],
    receivers: &Receivers,
    time: &TimeAxis,
) -> Result<Vec<WaveRecording>> {
    let m = excitations.len();
    let n = ops.num_dofs();
    let nr = receivers.len();
    let mut recordings: Vec<WaveRecording> = (0..m)
        .map(|s| WaveRecording::zeros(receivers.positions.clone(), time, s))
        .collect();
    if m == 0 {
        return Ok(recordings);
    }
    let dt = time.dt;
    let dt2 = dt * dt;
    let limit = stability_limit(ops);
    if dt > limit {
        return Err(Error::TimeStepTooLarge { dt, limit });
    }
    let bound = excitations
        .iter()
        .map(|e| amplitude_bound(ops, e, None, time))
        .fold(0.0, f64::max);
    let mut prev = vec![0.0; n * m];
    let mut cur = vec![0.0; n * m];
    let mut next = vec![0.0; n * m];
    let mut acc = vec![0.0; n * m];
    let mut scratch = vec![0.0; n * m];
    let sample = |step: usize, u: &[f64], recordings: &mut [WaveRecording]| {
        for (s, rec) in recordings.iter_mut().enumerate() {
            for r in 0..nr {
                rec.samples[step * nr + r] = receivers.weights[r]
                    .iter()
                    .map(|&(i, v)| v * u[i * m + s])
                    .sum();
            }
        }
    };
    sample(0, &cur, &mut recordings);
    for step in 0..time.steps {
        ops.stiffness.mul_block_into(&cur, &mut acc, m);
        acc.iter_mut().for_each(|a| *a = -*a);
        for (s, exc) in excitations.iter().enumerate() {
            for load in &exc.loads {
                let f = load.signal.get(step).copied().unwrap_or(0.0);
                if f != 0.0 {
                    for &(i, v) in &load.entries {
                        acc[i * m + s] += f * v;
                    }
                }
            }
        }
        for &d in &ops.dirichlet {
            acc[d * m..(d + 1) * m].fill(0.0);
        }
        ops.mass_factor
            .solve_block_in_place(&mut acc, m, &mut scratch);
        if step == 0 {
            for i in 0..n * m {
                next[i] = cur[i] + 0.5 * dt2 * acc[i];
            }
        } else {
            for i in 0..n * m {
                next[i] = 2.0 * cur[i] - prev[i] + dt2 * acc[i];
            }
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
        if step % 8 == 7 || step + 1 == time.steps {
            let amp = norm_inf(&cur);
            if !amp.is_finite() || (bound > 0.0 && amp > 1e6 * bound) {
                return Err(Error::Unstable {
                    step: step + 1,
                    amplitude: amp,
                    bound,
                    dt,
                    limit,
                });
            }
        }
        sample(step + 1, &cur, &mut recordings);
    }
    Ok(recordings)
}

/// Snapshots of the nodal field at the requested step indices.
pub fn run_snapshots(
    ops: &SystemOperators,
    excitation: &Excitation,
    initial: Option<&InitialState>,
    time: &TimeAxis,
    steps: &[usize],
) -> Result<Vec<Vec<f64>>> {
    let mut out = vec![Vec::new(); steps.len()];
    integrate(
        ops,
        excitation,
        initial,
        time,
        StartRule::Taylor,
        |step, u| {
            for (slot, &s) in out.iter_mut().zip(steps) {
                if s == step {
                    *slot = u.to_vec();
                }
            }
        },
    )?;
    Ok(out)
}

/// Incident pulse plus its reflection from a free boundary at `interface`:
/// `g(x − c t) + g(2 x_f − x − c t)`.
pub fn analytic_free_reflection<G>(x: f64, t: f64, pulse: G, interface: f64, wave_speed: f64) -> f64
where
    G: Fn(f64) -> f64,
{
    pulse(x - wave_speed * t) + pulse(2.0 * interface - x - wave_speed * t)
}

/// Exact solution on `[a, b]` with free ends for the initial data
/// `u = g`, `u̇ = −c₀ g′` (a right-travelling pulse), by d'Alembert's formula
/// applied to the even periodic extension of the data.
///
/// Agrees with [`analytic_free_reflection`] while `g` vanishes at `a` and the
/// reflected pulse has not reached `a`. A non-zero `g(a)` gives the bar a net
/// momentum and hence a rigid drift, which this solution retains.
pub fn analytic_free_interval<G>(
    x: f64,
    t: f64,
    pulse: G,
    interval: (f64, f64),
    wave_speed: f64,
) -> f64
where
    G: Fn(f64) -> f64,
{
    let (a, b) = interval;
    let len = b - a;
    let period = 2.0 * len;
    let fold = |s: f64| {
        let r = (s - a).rem_euclid(period);
        a + if r > len { period - r } else { r }
    };
    // antiderivative of g′(fold(s)), zero at s = a
    let jump = 2.0 * (pulse(b) - pulse(a));
    let anti = |s: f64| {
        let k = ((s - a) / period).floor();
        let r = s - a - k * period;
        let within = if r <= len {
            pulse(a + r) - pulse(a)
        } else {
            2.0 * pulse(b) - pulse(a) - pulse(a + period - r)
        };
        k * jump + within
    };
    let lo = x - wave_speed * t;
    let hi = x + wave_speed * t;
    0.5 * (pulse(fold(lo)) + pulse(fold(hi))) - 0.5 * (anti(hi) - anti(lo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, Discretization};
    use crate::material::{MaterialModel, Parametrization};

    #[test]
    fn block_run_matches_separate_runs() {
        let grid = Grid::build(2, &[0.01, 0.005], 0.0005, 1).unwrap();
        let material = MaterialModel::intact(2700.0, 6000.0, Parametrization::Rho).unwrap();
        let ops = assemble(&Discretization::uniform(grid.clone()), &material, &[]).unwrap();
        let time = TimeAxis::new(2e-8, 2e-6).unwrap();
        let f = TimeFunction::SineBurst {
            frequency: 1e6,
            cycles: 2.0,
            amplitude: 1.0,
        };
        let excitations: Vec<Excitation> = [[0.002, 0.005], [0.0071, 0.0033], [0.009, 0.0]]
            .iter()
            .map(|&p| Excitation::point_source(&grid, p, &f, &time).unwrap())
            .collect();
        let receivers =
            Receivers::new(&grid, &[[0.001, 0.005], [0.005, 0.001], [0.0093, 0.0041]]).unwrap();
        let block = run_forward_block(&ops, &excitations, &receivers, &time).unwrap();
        for (s, exc) in excitations.iter().enumerate() {
            let (single, _) = run_forward(&ops, exc, None, &receivers, &time, None).unwrap();
            assert_eq!(block[s].source_index, s);
            let peak = norm_inf(&single.samples);
            assert!(peak > 0.0);
            for (a, b) in block[s].samples.iter().zip(&single.samples) {
                assert!((a - b).abs() < 1e-12 * peak);
            }
        }
    }

    #[test]
    fn sine_burst_values() {
        assert_eq!(sine_burst(0.0, 1.0, 2.0), 0.0);
        assert!(sine_burst(2.0, 1.0, 2.0).abs() < 1e-15);
        let expected = (PI / 2.0).sin() * 0.5 * (1.0 - (PI / 4.0).cos());
        assert!((sine_burst(0.25, 1.0, 2.0) - expected).abs() < 1e-15);
        assert!((sine_burst(0.25, 1.0, 2.0) - 0.14645).abs() < 1e-5);
        assert_eq!(sine_burst(2.5, 1.0, 2.0), 0.0);
        assert_eq!(sine_burst(-0.1, 1.0, 2.0), 0.0);
    }

    #[test]
    fn courant_number_of_plate_configuration() {
        let courant: f64 = 6000.0 * 5e-10 / 0.5e-3;
        assert!((courant - 0.006).abs() < 1e-15);
    }

    #[test]
    fn free_reflection_properties() {
        let g = |s: f64| gaussian_bell(s, 0.5, 0.1, 1.0);
        // at the boundary the displacement doubles
        let t = 1.0;
        let xf = 2.0;
        let v = analytic_free_reflection(xf, t, g, xf, 1.0);
        assert!((v - 2.0 * g(xf - t)).abs() < 1e-15);
        // before reaching the boundary only the incident term is visible
        let early = analytic_free_reflection(0.7, 0.2, g, xf, 1.0);
        assert!((early - g(0.5)).abs() < 1e-12);
        // reflected amplitude equals incident amplitude
        let late = analytic_free_reflection(1.0, 2.5, g, xf, 1.0);
        assert!((late - 1.0).abs() < 1e-12);
    }

    #[test]
    fn free_interval_solution() {
        let xf = 2.0;
        // pulse well inside: identical to the two-term formula
        let g = |s: f64| gaussian_bell(s, 0.8, 0.05, 1.0);
        for &(x, t) in &[(0.3, 0.1), (1.5, 0.9), (1.95, 1.2), (1.2, 1.9)] {
            let a = analytic_free_interval(x, t, g, (0.0, xf), 1.0);
            let b = analytic_free_reflection(x, t, g, xf, 1.0);
            assert!((a - b).abs() < 1e-12, "{x} {t}: {a} vs {b}");
        }
        // after a full round trip the pulse returns to its start
        let back = analytic_free_interval(0.8, 4.0, g, (0.0, xf), 1.0);
        assert!((back - 1.0).abs() < 1e-12);
        // a tail at the left end leaves a plateau g(0) behind the pulse
        let wide = |s: f64| gaussian_bell(s, 0.5, 0.159, 1.0);
        let plateau = analytic_free_interval(0.1, 0.5, wide, (0.0, xf), 1.0);
        assert!((plateau - wide(0.0)).abs() < 1e-12);
        // mean displacement grows with the net initial momentum c g(0)
        let mean = |t: f64| {
            let n = 4000;
            (0..n)
                .map(|i| {
                    analytic_free_interval(
                        (i as f64 + 0.5) * xf / n as f64,
                        t,
                        wide,
                        (0.0, xf),
                        1.0,
                    )
                })
                .sum::<f64>()
                / n as f64
        };
        let drift = mean(3.0) - mean(1.0);
        assert!((drift - 2.0 * wide(0.0) / xf).abs() < 1e-6, "{drift}");
    }

    #[test]
    fn zero_source_gives_zero_recording() {
        let grid = Grid::build(2, &[1.0, 1.0], 0.25, 1).unwrap();
        let disc = Discretization::uniform(grid.clone());
        let ops = assemble(
            &disc,
            &MaterialModel::intact(1.0, 1.0, Parametrization::Rho).unwrap(),
            &[],
        )
        .unwrap();
        let rec = Receivers::new(&grid, &[[0.5, 0.5]]).unwrap();
        let time = TimeAxis::new(0.01, 0.5).unwrap();
        let (r, h) = run_forward(&ops, &Excitation::none(), None, &rec, &time, Some(10)).unwrap();
        assert!(r.samples.iter().all(|&v| v == 0.0));
        assert_eq!(r.sample_count(), time.samples());
        let h = h.unwrap();
        assert_eq!(h.steps.first(), Some(&0));
        assert_eq!(h.steps.last(), Some(&50));
        assert!(h.steps.iter().all(|s| s % 10 == 0));
    }

    #[test]
    fn single_dof_oscillator_matches_discrete_solution() {
        // one linear element with a Dirichlet node: m ü + k u = 0
        let grid = Grid::build(1, &[1.0], 1.0, 1).unwrap();
        let disc = Discretization::uniform(grid);
        let ops = assemble(
            &disc,
            &MaterialModel::intact(1.0, 1.0, Parametrization::Rho).unwrap(),
            &[0],
        )
        .unwrap();
        // free node: m = 1/3, k = 1 -> omega^2 = 3
        let omega = 3f64.sqrt();
        let dt = 0.01 / omega;
        let time = TimeAxis { dt, steps: 10_000 };
        let initial = InitialState {
            displacement: vec![0.0, 1.0],
            velocity: vec![0.0, 0.0],
        };
        let mut last = 0.0;
        integrate(
            &ops,
            &Excitation::none(),
            Some(&initial),
            &time,
            StartRule::Taylor,
            |n, u| {
                if n == time.steps {
                    last = u[1];
                }
            },
        )
        .unwrap();
        // exact solution of the recurrence with the Taylor start: cos(n θ),
        // cos θ = 1 - (ω Δt)² / 2
        let theta = (1.0 - 0.5 * (omega * dt).powi(2)).acos();
        let exact = (time.steps as f64 * theta).cos();
        assert!((last - exact).abs() < 1e-9, "{last} vs {exact}");
        // amplitude drift relative to the continuous oscillator
        let amp_drift = ((omega * dt).powi(2) / 4.0).abs();
        assert!(amp_drift < 1e-4);
    }

    #[test]
    fn resample_identity_and_halving() {
        let time = TimeAxis::new(0.1, 1.0).unwrap();
        let mut rec = WaveRecording::zeros(vec![[0.0, 0.0]], &time, 0);
        for n in 0..time.samples() {
            rec.samples[n] = n as f64;
        }
        let coarse = rec.resample(&TimeAxis::new(0.2, 1.0).unwrap());
        assert_eq!(coarse.trace(0), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
    }
}
