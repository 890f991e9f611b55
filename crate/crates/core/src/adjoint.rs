//! Misfit, adjoint sweeps and nodal gradients of the scaling functions.
//!
//! The adjoint is the exact transpose of the central-difference recurrence
//! used by the forward solver, so gradients agree with finite differences of
//! the discrete misfit up to round-off when every step is stored.

use crate::assembly::{assemble, Discretization, SystemOperators};
use crate::error::{Error, Result};
use crate::geometry::{Geometry, QuadratureSet};
use crate::linalg::{dot, norm_inf};
use crate::material::{l2_project, MaterialModel};
use crate::propagate::{
    integrate, run_forward, Excitation, Load, Receivers, StartRule, TimeAxis, WaveRecording,
    WavefieldHistory,
};

/// Trapezoid weight of sample `n` on `0..=steps`.
pub fn trapezoid_weight(n: usize, steps: usize) -> f64 {
    if n == 0 || n == steps {
        0.5
    } else {
        1.0
    }
}

fn check_layout(a: &WaveRecording, b: &WaveRecording) -> Result<()> {
    if a.receivers() != b.receivers() || a.samples.len() != b.samples.len() {
        return Err(Error::ShapeMismatch(format!(
            "recording has {} receivers x {} samples, observation {} x {}",
            a.receivers(),
            a.sample_count(),
            b.receivers(),
            b.sample_count()
        )));
    }
    if (a.dt - b.dt).abs() > 1e-12 * a.dt.abs().max(b.dt.abs()) {
        return Err(Error::ShapeMismatch(format!(
            "sample interval {} vs {}",
            a.dt, b.dt
        )));
    }
    Ok(())
}

/// `χ = ½ Σ_sources Σ_r ∫ (u − u⁰)² dt` with the trapezoidal rule.
pub fn misfit(recordings: &[WaveRecording], observations: &[WaveRecording]) -> Result<f64> {
    if recordings.len() != observations.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} recordings vs {} observations",
            recordings.len(),
            observations.len()
        )));
    }
    let mut total = 0.0;
    for (u, u0) in recordings.iter().zip(observations) {
        check_layout(u, u0)?;
        let nr = u.receivers();
        let steps = u.sample_count().saturating_sub(1);
        for n in 0..=steps {
            let w = trapezoid_weight(n, steps);
            let row = &u.samples[n * nr..(n + 1) * nr];
            let row0 = &u0.samples[n * nr..(n + 1) * nr];
            let s: f64 = row.iter().zip(row0).map(|(a, b)| (a - b).powi(2)).sum();
            total += 0.5 * w * u.dt * s;
        }
    }
    Ok(total)
}

/// Residual `−(u − u⁰)` at the receivers, row-major `[sample][receiver]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointSource {
    pub positions: Vec<[f64; 2]>,
    pub dt: f64,
    pub residual: Vec<f64>,
}

impl AdjointSource {
    pub fn new(simulated: &WaveRecording, observed: &WaveRecording) -> Result<Self> {
        check_layout(simulated, observed)?;
        Ok(Self {
            positions: simulated.positions.clone(),
            dt: simulated.dt,
            residual: simulated
                .samples
                .iter()
                .zip(&observed.samples)
                .map(|(u, u0)| -(u - u0))
                .collect(),
        })
    }

    pub fn is_zero(&self) -> bool {
        self.residual.iter().all(|&r| r == 0.0)
    }

    pub fn sample_count(&self) -> usize {
        if self.positions.is_empty() {
            0
        } else {
            self.residual.len() / self.positions.len()
        }
    }
}

/// Solves the adjoint problem backward in time and returns the adjoint field at
/// the same stored steps a forward run with `stride` would keep.
///
/// Implemented as a forward sweep over the reversed, trapezoid-weighted
/// residual starting from rest, followed by re-reversal of the stored fields.
pub fn run_adjoint(
    ops: &SystemOperators,
    receivers: &Receivers,
    source: &AdjointSource,
    time: &TimeAxis,
    stride: usize,
) -> Result<WavefieldHistory> {
    let nr = receivers.len();
    if source.positions.len() != nr || source.sample_count() != time.samples() {
        return Err(Error::ShapeMismatch(format!(
            "adjoint source has {} receivers x {} samples, expected {} x {}",
            source.positions.len(),
            source.sample_count(),
            nr,
            time.samples()
        )));
    }
    let steps = time.steps;
    let loads = (0..nr)
        .map(|r| Load {
            entries: receivers.weights(r).to_vec(),
            signal: (0..=steps)
                .map(|k| {
                    let n = steps - k;
                    trapezoid_weight(n, steps) * source.residual[n * nr + r]
                })
                .collect(),
        })
        .collect();
    let excitation = Excitation { loads };
    let stored = WavefieldHistory::stored_steps(time, stride);
    let mut history = WavefieldHistory::new(stride, time.dt);
    let n_dofs = ops.num_dofs();
    let mut next = stored.len();
    if source.is_zero() {
        history.steps = stored;
        history.fields = vec![vec![0.0; n_dofs]; history.steps.len()];
        return Ok(history);
    }
    let mut fields: Vec<Vec<f64>> = vec![Vec::new(); stored.len()];
    integrate(ops, &excitation, None, time, StartRule::Rest, |k, z| {
        let n = steps - k;
        if next > 0 && stored[next - 1] == n {
            next -= 1;
            fields[next] = z.to_vec();
        }
    })?;
    history.steps = stored;
    history.fields = fields;
    Ok(history)
}

/// Per-element time integrals `Σ w V†⊗V` and `Σ w u†⊗u` of the stored fields.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSums {
    nodes_per_element: usize,
    pub mass: Vec<f64>,
    pub stiffness: Vec<f64>,
}

impl KernelSums {
    pub fn new(disc: &Discretization) -> Self {
        let nloc = disc.grid.nodes_per_element();
        let len = disc.grid.num_elements() * nloc * nloc;
        Self {
            nodes_per_element: nloc,
            mass: vec![0.0; len],
            stiffness: vec![0.0; len],
        }
    }

    /// Adds one source's forward/adjoint pair. Velocities are differences of
    /// consecutive stored snapshots; the stiffness term uses trapezoid weights
    /// over the stored steps.
    pub fn add(
        &mut self,
        disc: &Discretization,
        forward: &WavefieldHistory,
        adjoint: &WavefieldHistory,
    ) -> Result<()> {
        if forward.steps != adjoint.steps || forward.stride != adjoint.stride {
            return Err(Error::ShapeMismatch(format!(
                "stride {} vs {}, {} vs {} stored steps",
                forward.stride,
                adjoint.stride,
                forward.len(),
                adjoint.len()
            )));
        }
        let dt = forward.dt;
        let steps = &forward.steps;
        let count = steps.len();
        let grid = &disc.grid;
        let nloc = self.nodes_per_element;
        let mut nodes = Vec::with_capacity(nloc);
        let mut a = vec![0.0; nloc];
        let mut b = vec![0.0; nloc];
        for k in 0..count {
            let prev_gap = if k > 0 { steps[k] - steps[k - 1] } else { 0 };
            let next_gap = if k + 1 < count {
                steps[k + 1] - steps[k]
            } else {
                0
            };
            let wk = dt * 0.5 * (prev_gap + next_gap) as f64;
            let u = &forward.fields[k];
            let ua = &adjoint.fields[k];
            let skip_k = wk == 0.0 || norm_inf(ua) == 0.0;
            let vel = if k + 1 < count {
                let inv = 1.0 / (next_gap as f64 * dt);
                Some((&forward.fields[k + 1], &adjoint.fields[k + 1], inv))
            } else {
                None
            };
            for e in 0..grid.num_elements() {
                grid.element_nodes_into(e, &mut nodes);
                let base = e * nloc * nloc;
                if !skip_k {
                    for i in 0..nloc {
                        a[i] = ua[nodes[i]];
                        b[i] = u[nodes[i]];
                    }
                    accumulate_outer(&mut self.stiffness[base..base + nloc * nloc], wk, &a, &b);
                }
                if let Some((u1, ua1, inv)) = vel {
                    for i in 0..nloc {
                        a[i] = ua1[nodes[i]] - ua[nodes[i]];
                        b[i] = u1[nodes[i]] - u[nodes[i]];
                    }
                    accumulate_outer(&mut self.mass[base..base + nloc * nloc], inv, &a, &b);
                }
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &KernelSums) {
        for (x, y) in self.mass.iter_mut().zip(&other.mass) {
            *x += y;
        }
        for (x, y) in self.stiffness.iter_mut().zip(&other.stiffness) {
            *x += y;
        }
    }
}

fn accumulate_outer(out: &mut [f64], w: f64, a: &[f64], b: &[f64]) {
    let n = a.len();
    for i in 0..n {
        let ai = w * a[i];
        if ai != 0.0 {
            for j in 0..n {
                out[i * n + j] += ai * b[j];
            }
        }
    }
}

/// Nodal gradient `∂χ/∂γ̂_i`, one vector per scaling field.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub fields: Vec<Vec<f64>>,
    pub mask: Vec<bool>,
}

impl GradientField {
    pub fn flatten(&self) -> Vec<f64> {
        self.fields.concat()
    }

    pub fn max_abs(&self) -> f64 {
        self.fields.iter().map(|f| norm_inf(f)).fold(0.0, f64::max)
    }

    /// Copy scaled to `max |value| = 1` (unchanged when identically zero).
    pub fn normalized(&self) -> Self {
        let m = self.max_abs();
        let mut out = self.clone();
        if m > 0.0 {
            for f in &mut out.fields {
                f.iter_mut().for_each(|v| *v /= m);
            }
        }
        out
    }

    pub fn directional(&self, direction: &[f64]) -> f64 {
        dot(&self.flatten(), direction)
    }
}

/// Quadrature of the kernels against the basis:
/// `g_i = ∫ N_i (−∂a_m V†·V + ∂a_k ∇u†·∇u)` per scaling field, zero off the mask.
pub fn gradient_from_sums(
    disc: &Discretization,
    material: &MaterialModel,
    sums: &KernelSums,
    mask: &[bool],
) -> GradientField {
    let grid = &disc.grid;
    let n = grid.num_nodes();
    let count = material.tag.field_count();
    let nloc = grid.nodes_per_element();
    let mut fields = vec![vec![0.0; n]; count];
    let mut gammas = [1.0; 2];
    for e in 0..grid.num_elements() {
        let base = e * nloc * nloc;
        let sm = &sums.mass[base..base + nloc * nloc];
        let sk = &sums.stiffness[base..base + nloc * nloc];
        if sm.iter().all(|&v| v == 0.0) && sk.iter().all(|&v| v == 0.0) {
            continue;
        }
        let nodes = grid.element_nodes(e);
        disc.for_each_point(e, |pt, sample| {
            let alpha = disc.indicator.evaluate(sample);
            for (slot, field) in gammas.iter_mut().zip(&material.fields) {
                *slot = field.value(sample, &nodes, &pt.values);
            }
            let derivs = material.derivatives(alpha, &gammas);
            let mut mass_term = 0.0;
            let mut stiff_term = 0.0;
            for a in 0..nloc {
                let ga = pt.gradients[a];
                let na = pt.values[a];
                for b in 0..nloc {
                    let gb = pt.gradients[b];
                    mass_term += sm[a * nloc + b] * na * pt.values[b];
                    stiff_term += sk[a * nloc + b] * (ga[0] * gb[0] + ga[1] * gb[1]);
                }
            }
            for (field, &(dm, dk)) in fields.iter_mut().zip(&derivs) {
                let density = pt.weight * (-dm * mass_term + dk * stiff_term);
                if density != 0.0 {
                    for (a, &node) in nodes.iter().enumerate() {
                        field[node] += density * pt.values[a];
                    }
                }
            }
        });
    }
    for field in &mut fields {
        for (v, &keep) in field.iter_mut().zip(mask) {
            if !keep {
                *v = 0.0;
            }
        }
    }
    GradientField {
        fields,
        mask: mask.to_vec(),
    }
}

/// Gradient from a single forward/adjoint pair.
pub fn accumulate_gradient(
    disc: &Discretization,
    material: &MaterialModel,
    forward: &WavefieldHistory,
    adjoint: &WavefieldHistory,
    mask: &[bool],
) -> Result<GradientField> {
    let mut sums = KernelSums::new(disc);
    sums.add(disc, forward, adjoint)?;
    Ok(gradient_from_sums(disc, material, &sums, mask))
}

/// Everything needed to evaluate the misfit and its gradient for a nodal model.
#[derive(Debug, Clone)]
pub struct FwiProblem {
    pub disc: Discretization,
    /// Provides ρ₀, c₀ and the parametrization; its scaling functions are
    /// replaced by the model vector.
    pub template: MaterialModel,
    pub sources: Vec<Excitation>,
    pub receivers: Receivers,
    pub observations: Vec<WaveRecording>,
    pub time: TimeAxis,
    pub stride: usize,
    pub mask: Vec<bool>,
    pub bounds: (f64, f64),
    pub dirichlet: Vec<usize>,
}

impl FwiProblem {
    pub fn model_len(&self) -> usize {
        self.template.tag.field_count() * self.disc.num_nodes()
    }

    pub fn initial_model(&self) -> Vec<f64> {
        vec![1.0; self.model_len()]
    }

    pub fn material(&self, model: &[f64]) -> MaterialModel {
        self.template
            .with_model_vector(model, self.bounds.0, self.bounds.1)
    }

    fn check_model(&self, model: &[f64]) -> Result<()> {
        if model.len() != self.model_len() {
            return Err(Error::ShapeMismatch(format!(
                "model has {} entries, expected {}",
                model.len(),
                self.model_len()
            )));
        }
        if model.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model"));
        }
        Ok(())
    }

    pub fn operators(&self, model: &[f64]) -> Result<SystemOperators> {
        self.check_model(model)?;
        assemble(&self.disc, &self.material(model), &self.dirichlet)
    }

    /// Receiver recordings of every source for a model.
    pub fn simulate(&self, model: &[f64]) -> Result<Vec<WaveRecording>> {
        let ops = self.operators(model)?;
        crate::par_map(self.sources.len(), |s| {
            run_forward(
                &ops,
                &self.sources[s],
                None,
                &self.receivers,
                &self.time,
                None,
            )
            .map(|(mut r, _)| {
                r.source_index = s;
                r
            })
        })
        .into_iter()
        .collect()
    }

    pub fn misfit(&self, model: &[f64]) -> Result<f64> {
        misfit(&self.simulate(model)?, &self.observations)
    }

    /// Misfit and adjoint gradient; per-source contributions are summed in
    /// source order.
    pub fn misfit_and_gradient(&self, model: &[f64]) -> Result<(f64, GradientField)> {
        let ops = self.operators(model)?;
        let material = self.material(model);
        let parts = crate::par_map(self.sources.len(), |s| -> Result<(f64, KernelSums)> {
            let (rec, history) = run_forward(
                &ops,
                &self.sources[s],
                None,
                &self.receivers,
                &self.time,
                Some(self.stride),
            )?;
            let obs = &self.observations[s];
            let chi = misfit(std::slice::from_ref(&rec), std::slice::from_ref(obs))?;
            let source = AdjointSource::new(&rec, obs)?;
            let adjoint = run_adjoint(&ops, &self.receivers, &source, &self.time, self.stride)?;
            let mut sums = KernelSums::new(&self.disc);
            sums.add(
                &self.disc,
                history.as_ref().expect("history requested"),
                &adjoint,
            )?;
            Ok((chi, sums))
        });
        let mut chi = 0.0;
        let mut total = KernelSums::new(&self.disc);
        for part in parts {
            let (c, sums) = part?;
            chi += c;
            total.merge(&sums);
        }
        let gradient = gradient_from_sums(&self.disc, &material, &total, &self.mask);
        if !chi.is_finite() || gradient.fields.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("misfit gradient"));
        }
        Ok((chi, gradient))
    }

    /// Central finite difference `(χ(m + εd) − χ(m − εd)) / 2ε`.
    pub fn finite_difference(&self, model: &[f64], direction: &[f64], eps: f64) -> Result<f64> {
        let plus: Vec<f64> = model
            .iter()
            .zip(direction)
            .map(|(m, d)| m + eps * d)
            .collect();
        let minus: Vec<f64> = model
            .iter()
            .zip(direction)
            .map(|(m, d)| m - eps * d)
            .collect();
        Ok((self.misfit(&plus)? - self.misfit(&minus)?) / (2.0 * eps))
    }
}

/// Gradient at an idealized intermediate state: `γ = gamma_void` inside
/// `void`, 1 elsewhere, L²-projected onto the nodes. Normalized to
/// `max |value| = 1`.
pub fn idealized_gradient_study(
    problem: &FwiProblem,
    void: &Geometry,
    gamma_void: f64,
    depth: usize,
) -> Result<GradientField> {
    if !(gamma_void > 0.0 && gamma_void <= 1.0) {
        return Err(Error::InvalidMaterial(format!(
            "γ_void must lie in (0, 1], got {gamma_void}"
        )));
    }
    let model = idealized_model(problem, void, gamma_void, depth)?;
    let (_, gradient) = problem.misfit_and_gradient(&model)?;
    Ok(gradient.normalized())
}

/// Projected piecewise-constant model used by [`idealized_gradient_study`].
pub fn idealized_model(
    problem: &FwiProblem,
    void: &Geometry,
    gamma_void: f64,
    depth: usize,
) -> Result<Vec<f64>> {
    let grid = &problem.disc.grid;
    let nodal = if gamma_void == 1.0 || void.is_empty() {
        vec![1.0; grid.num_nodes()]
    } else {
        let quadrature = QuadratureSet::build(grid, void, depth);
        l2_project(grid, &quadrature, |p| {
            if void.contains(p) {
                gamma_void
            } else {
                1.0
            }
        })?
    };
    Ok(nodal.repeat(problem.template.tag.field_count()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::material::Parametrization;
    use crate::propagate::TimeFunction;

    fn recording(values: &[f64], dt: f64) -> WaveRecording {
        WaveRecording {
            positions: vec![[0.0, 0.0]],
            dt,
            source_index: 0,
            samples: values.to_vec(),
        }
    }

    #[test]
    fn misfit_closed_forms() {
        let zero = recording(&[0.0; 11], 0.1);
        assert_eq!(misfit(std::slice::from_ref(&zero), std::slice::from_ref(&zero)).unwrap(), 0.0);
        let d = recording(&[2.0; 11], 0.1);
        let chi = misfit(std::slice::from_ref(&d), std::slice::from_ref(&zero)).unwrap();
        assert!((chi - 0.5 * 4.0 * 1.0).abs() < 1e-12);
        let d2 = recording(&[4.0; 11], 0.1);
        let chi2 = misfit(&[d2], std::slice::from_ref(&zero)).unwrap();
        assert!((chi2 - 4.0 * chi).abs() < 1e-12);
        assert!(misfit(&[recording(&[0.0; 5], 0.1)], &[zero]).is_err());
    }

    fn small_problem(tag: Parametrization) -> (FwiProblem, Vec<f64>) {
        let grid = Grid::build(2, &[1.0, 0.5], 0.1, 1).unwrap();
        let disc = Discretization::uniform(grid.clone());
        let time = TimeAxis {
            dt: 0.01,
            steps: 60,
        };
        let f = TimeFunction::SineBurst {
            frequency: 5.0,
            cycles: 2.0,
            amplitude: 1.0,
        };
        let source = Excitation::point_source(&grid, [0.5, 0.5], &f, &time).unwrap();
        let receivers = Receivers::new(&grid, &[[0.3, 0.5], [0.7, 0.5]]).unwrap();
        let template = MaterialModel::intact(1.0, 1.0, tag).unwrap();
        let n = grid.num_nodes();
        let mut problem = FwiProblem {
            disc,
            template,
            sources: vec![source],
            receivers,
            observations: Vec::new(),
            time,
            stride: 1,
            mask: vec![true; n],
            bounds: (0.0, 1.2),
            dirichlet: Vec::new(),
        };
        let truth: Vec<f64> = (0..tag.field_count() * n)
            .map(|i| {
                let p = grid.node_coordinate(i % n);
                1.0 - 0.5 * (-((p[0] - 0.5).powi(2) + (p[1] - 0.25).powi(2)) / 0.02).exp()
            })
            .collect();
        problem.observations = problem.simulate(&truth).unwrap();
        let model = problem.initial_model();
        (problem, model)
    }

    #[test]
    fn zero_residual_gives_zero_adjoint_and_gradient() {
        let (mut problem, model) = small_problem(Parametrization::Rho);
        problem.observations = problem.simulate(&model).unwrap();
        let (chi, grad) = problem.misfit_and_gradient(&model).unwrap();
        assert_eq!(chi, 0.0);
        assert_eq!(grad.max_abs(), 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences_with_full_storage() {
        for tag in Parametrization::ALL {
            let (problem, model) = small_problem(tag);
            let (_, grad) = problem.misfit_and_gradient(&model).unwrap();
            let direction: Vec<f64> = (0..model.len())
                .map(|i| ((i * 37 % 11) as f64 - 5.0) / 5.0)
                .collect();
            let adj = grad.directional(&direction);
            let fd = problem.finite_difference(&model, &direction, 1e-4).unwrap();
            assert!(
                (adj - fd).abs() <= 1e-5 * fd.abs(),
                "{tag:?}: {adj} vs {fd}"
            );
        }
    }

    #[test]
    fn masked_nodes_have_zero_gradient() {
        let (mut problem, model) = small_problem(Parametrization::C);
        for (i, m) in problem.mask.iter_mut().enumerate() {
            *m = i % 2 == 0;
        }
        let (_, grad) = problem.misfit_and_gradient(&model).unwrap();
        for (i, v) in grad.fields[0].iter().enumerate() {
            if i % 2 == 1 {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn c_kernel_is_nonnegative_for_equal_fields() {
        let (problem, model) = small_problem(Parametrization::C);
        let ops = problem.operators(&model).unwrap();
        let (_, history) = run_forward(
            &ops,
            &problem.sources[0],
            None,
            &problem.receivers,
            &problem.time,
            Some(2),
        )
        .unwrap();
        let h = history.unwrap();
        let g = accumulate_gradient(
            &problem.disc,
            &problem.material(&model),
            &h,
            &h,
            &problem.mask,
        )
        .unwrap();
        // ∫ N_i |∇u|² with N_i ≥ 0 for linear elements
        assert!(g.fields[0].iter().all(|&v| v >= -1e-15));
        assert!(g.max_abs() > 0.0);
    }

    #[test]
    fn single_impulse_adjoint_is_reversed_green_function() {
        let (problem, model) = small_problem(Parametrization::Rho);
        let ops = problem.operators(&model).unwrap();
        let time = problem.time;
        let nr = problem.receivers.len();
        let m = 40;
        let mut residual = vec![0.0; time.samples() * nr];
        residual[m * nr] = 1.0;
        let source = AdjointSource {
            positions: problem.receivers.positions.clone(),
            dt: time.dt,
            residual,
        };
        let adjoint = run_adjoint(&ops, &problem.receivers, &source, &time, 1).unwrap();
        // forward impulse at step 0 from receiver 0, started from rest
        let load = Load {
            entries: problem.receivers.weights(0).to_vec(),
            signal: (0..=time.steps)
                .map(|k| if k == 0 { 1.0 } else { 0.0 })
                .collect(),
        };
        let excitation = Excitation { loads: vec![load] };
        let mut green = Vec::new();
        integrate(&ops, &excitation, None, &time, StartRule::Rest, |_, u| {
            green.push(u.to_vec())
        })
        .unwrap();
        for n in 0..=m {
            let expected = &green[m - n];
            let got = &adjoint.fields[n];
            for (a, b) in got.iter().zip(expected) {
                assert!((a - b).abs() < 1e-14);
            }
        }
        assert!(adjoint.fields[m + 1..]
            .iter()
            .all(|f| f.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn separate_with_unit_gamma_c_matches_rho_kernel() {
        let (rho, model) = small_problem(Parametrization::Rho);
        let (mut sep, model2) = small_problem(Parametrization::Separate);
        sep.observations = rho.observations.clone();
        let (_, g1) = rho.misfit_and_gradient(&model).unwrap();
        let (_, g2) = sep.misfit_and_gradient(&model2).unwrap();
        for (a, b) in g1.fields[0].iter().zip(&g2.fields[0]) {
            assert!((a - b).abs() <= 1e-12 * g1.max_abs());
        }
    }
}
