//! Scenario drivers: synthetic observations, inversions, forward and gradient studies.

use std::f64::consts::PI;

use crate::adjoint::{idealized_gradient_study, FwiProblem, GradientField};
use crate::assembly::{assemble, Discretization};
use crate::config::{Edge, ExperimentConfig, MaskKind};
use crate::error::{Error, Result};
use crate::geometry::{Geometry, IndicatorField};
use crate::grid::{gauss_legendre_1d, Grid, Point};
use crate::material::{GammaSource, MaterialModel, Parametrization};
use crate::optimize::{minimize, InversionState, MinimizeOptions};
use crate::propagate::{
    analytic_free_interval, gaussian_bell, run_forward_block, run_snapshots, stability_limit,
    Excitation, InitialState, Receivers, TimeAxis, TimeFunction, WaveRecording,
};

/// Linear array of transducers on a horizontal domain edge.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasedArraySpec {
    pub count: usize,
    pub pitch: f64,
    pub center: f64,
    pub edge_y: f64,
    pub excitation: TimeFunction,
}

impl PhasedArraySpec {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let a = cfg
            .array
            .as_ref()
            .ok_or_else(|| Error::Config("this experiment needs an [array] section".into()))?;
        let grid = cfg.grid()?;
        let edge_y = match a.edge {
            Edge::Top => grid.origin()[1] + grid.extents()[1],
            Edge::Bottom => grid.origin()[1],
        };
        Ok(Self {
            count: a.count,
            pitch: a.pitch_mm * 1e-3,
            center: a.center_mm * 1e-3,
            edge_y,
            excitation: cfg.burst().expect("array present"),
        })
    }

    pub fn positions(&self) -> Vec<Point> {
        let half = 0.5 * (self.count as f64 - 1.0);
        (0..self.count)
            .map(|i| [self.center + (i as f64 - half) * self.pitch, self.edge_y])
            .collect()
    }

    pub fn sources(&self, grid: &Grid, time: &TimeAxis) -> Result<Vec<Excitation>> {
        self.positions()
            .into_iter()
            .map(|p| Excitation::point_source(grid, p, &self.excitation, time))
            .collect()
    }
}

/// One recording per fired transducer, all transducers receiving.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    pub recordings: Vec<WaveRecording>,
    pub description: String,
}

fn piecewise_fields(tag: Parametrization, region: &Geometry, gamma_void: f64) -> Vec<GammaSource> {
    (0..tag.field_count())
        .map(|_| {
            if region.is_empty() {
                GammaSource::uniform(1.0)
            } else {
                GammaSource::Piecewise {
                    region: region.clone(),
                    inside: gamma_void,
                    outside: 1.0,
                }
            }
        })
        .collect()
}

/// Discretization, material and time axis of the reference (data) model.
/// Voids of the true model are represented by ρ-scaling.
pub fn reference_model(
    cfg: &ExperimentConfig,
) -> Result<(Discretization, MaterialModel, TimeAxis)> {
    let equal = cfg.reference.force_equal;
    let grid = if equal {
        cfg.grid()?
    } else {
        cfg.grid_refined(cfg.reference.refinement)?
    };
    let depth = if equal {
        cfg.geometry.depth
    } else {
        cfg.reference.depth
    };
    let truth = cfg.truth_geometry()?;
    let disc = Discretization::new(grid, cfg.indicator()?, std::slice::from_ref(&truth), depth);
    let tag = if equal {
        cfg.material.tag
    } else {
        Parametrization::Rho
    };
    let material = MaterialModel::new(
        cfg.material.density_kg_m3,
        cfg.material.wave_speed_m_s,
        tag,
        piecewise_fields(tag, &truth, cfg.truth.gamma_void),
    )?;
    Ok((disc, material, cfg.reference_time_axis()?))
}

/// Full-matrix-capture recordings of the reference model, resampled onto the
/// inversion time axis.
pub fn generate_observations(cfg: &ExperimentConfig) -> Result<ObservationSet> {
    let array = PhasedArraySpec::from_config(cfg)?;
    let (disc, material, ref_time) = reference_model(cfg)?;
    let ops = assemble(&disc, &material, &[])?;
    let ref_time = stable_subdivision(ref_time, stability_limit(&ops))?;
    let positions = array.positions();
    let receivers = Receivers::new(&disc.grid, &positions)?;
    let sources = array.sources(&disc.grid, &ref_time)?;
    let time = cfg.time_axis()?;
    let chunk = sources.len().div_ceil(crate::workers()).max(1);
    let chunks: Vec<&[Excitation]> = sources.chunks(chunk).collect();
    let recordings: Vec<WaveRecording> = crate::par_map(chunks.len(), |c| {
        run_forward_block(&ops, chunks[c], &receivers, &ref_time)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?
    .into_iter()
    .flatten()
    .enumerate()
    .map(|(s, rec)| {
        let mut rec = rec.resample(&time);
        rec.source_index = s;
        rec
    })
    .collect();
    let counts = disc.grid.element_counts();
    Ok(ObservationSet {
        recordings,
        description: format!(
            "reference grid {}x{} elements, degree {}, depth {}, dt {:e} s, gamma_void {:e}",
            counts[0],
            counts[1],
            disc.grid.degree(),
            disc.quadrature.depth,
            ref_time.dt,
            cfg.truth.gamma_void
        ),
    })
}

/// Splits each step of `time` into the fewest equal substeps that stay below
/// 98% of `limit`.
pub fn stable_subdivision(time: TimeAxis, limit: f64) -> Result<TimeAxis> {
    if time.dt <= limit {
        return Ok(time);
    }
    let k = (time.dt / (0.98 * limit)).ceil();
    TimeAxis::new(time.dt / k, time.duration())
}

/// Nodes that take part in the inversion.
pub fn inversion_mask(grid: &Grid, indicator: &IndicatorField, kind: MaskKind) -> Vec<bool> {
    match kind {
        MaskKind::All => vec![true; grid.num_nodes()],
        MaskKind::Physical => grid
            .node_coordinates()
            .into_iter()
            .map(|p| !indicator.fictitious.contains(p))
            .collect(),
    }
}

pub fn build_problem(cfg: &ExperimentConfig, observations: &ObservationSet) -> Result<FwiProblem> {
    let array = PhasedArraySpec::from_config(cfg)?;
    let grid = cfg.grid()?;
    let indicator = cfg.indicator()?;
    let mask = inversion_mask(&grid, &indicator, cfg.inversion.mask);
    let disc = Discretization::new(grid, indicator, &[], cfg.geometry.depth);
    let time = cfg.time_axis()?;
    let receivers = Receivers::new(&disc.grid, &array.positions())?;
    let sources = array.sources(&disc.grid, &time)?;
    if observations.recordings.len() != sources.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} observations for {} sources",
            observations.recordings.len(),
            sources.len()
        )));
    }
    Ok(FwiProblem {
        template: MaterialModel::intact(
            cfg.material.density_kg_m3,
            cfg.material.wave_speed_m_s,
            cfg.material.tag,
        )?,
        disc,
        sources,
        receivers,
        observations: observations.recordings.clone(),
        time,
        stride: cfg.time.stride,
        mask,
        bounds: cfg.bounds(),
        dirichlet: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InversionOutcome {
    /// Optimizer state; its objective trace is normalized by the initial misfit.
    pub state: InversionState,
    pub initial_misfit: f64,
    /// `(iteration, fields)` for every configured snapshot iteration reached.
    pub snapshots: Vec<(usize, Vec<Vec<f64>>)>,
    pub nodes: usize,
}

impl InversionOutcome {
    pub fn final_fields(&self) -> Vec<Vec<f64>> {
        self.state
            .model
            .chunks(self.nodes)
            .map(|c| c.to_vec())
            .collect()
    }
}

/// Runs the configured number of L-BFGS iterations from `γ ≡ 1`, minimizing
/// `χ / χ⁰`.
pub fn run_inversion_experiment(
    cfg: &ExperimentConfig,
    observations: &ObservationSet,
) -> Result<InversionOutcome> {
    let problem = build_problem(cfg, observations)?;
    run_inversion(&problem, cfg)
}

pub fn run_inversion(problem: &FwiProblem, cfg: &ExperimentConfig) -> Result<InversionOutcome> {
    let nodes = problem.disc.num_nodes();
    let mut scale: Option<f64> = None;
    let objective = |model: &[f64]| -> Result<(f64, Vec<f64>)> {
        let (chi, gradient) = problem.misfit_and_gradient(model)?;
        let s = *scale.get_or_insert(if chi > 0.0 { chi } else { 1.0 });
        Ok((
            chi / s,
            gradient.flatten().into_iter().map(|g| g / s).collect(),
        ))
    };
    let options = MinimizeOptions {
        max_iterations: cfg.inversion.max_iterations,
        memory: cfg.inversion.memory,
        ..Default::default()
    };
    let mut snapshots = Vec::new();
    let state = minimize(
        objective,
        &problem.initial_model(),
        problem.bounds,
        &options,
        |s| {
            if s.iteration > 0 && cfg.inversion.snapshot_iterations.contains(&s.iteration) {
                snapshots.push((
                    s.iteration,
                    s.model.chunks(nodes).map(|c| c.to_vec()).collect(),
                ));
            }
        },
    )?;
    let initial_misfit = scale.unwrap_or(0.0);
    Ok(InversionOutcome {
        state,
        initial_misfit,
        snapshots,
        nodes,
    })
}

/// Normalized gradient at the idealized state with `γ = gradient.gamma_void`
/// inside the true voids.
pub fn run_gradient_study(
    cfg: &ExperimentConfig,
    observations: &ObservationSet,
) -> Result<GradientField> {
    let problem = build_problem(cfg, observations)?;
    idealized_gradient_study(
        &problem,
        &cfg.truth_geometry()?,
        cfg.gradient.gamma_void,
        cfg.reference.depth,
    )
}

/// Right-travelling Gaussian pulse `u = g(x)`, `u̇ = −c₀ g′(x)` with
/// `σ = c₀ / (2π f)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPulse {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
    pub wave_speed: f64,
}

impl GaussianPulse {
    pub fn new(center: f64, frequency: f64, amplitude: f64, wave_speed: f64) -> Self {
        Self {
            center,
            width: wave_speed / (2.0 * PI * frequency),
            amplitude,
            wave_speed,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        gaussian_bell(x, self.center, self.width, self.amplitude)
    }

    pub fn slope(&self, x: f64) -> f64 {
        -(x - self.center) / (self.width * self.width) * self.value(x)
    }

    pub fn initial_state(&self, grid: &Grid) -> InitialState {
        let xs: Vec<f64> = grid.node_coordinates().iter().map(|p| p[0]).collect();
        InitialState {
            displacement: xs.iter().map(|&x| self.value(x)).collect(),
            velocity: xs
                .iter()
                .map(|&x| -self.wave_speed * self.slope(x))
                .collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ForwardStudy {
    pub grid: Grid,
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<f64>>,
    /// Relative L² error against the analytic solution on the physical part.
    pub errors: Vec<Option<f64>>,
    /// `max |u|` over the void part of a 1D domain.
    pub void_max: Vec<Option<f64>>,
}

/// Forward simulation of the true model with snapshots at the configured times.
pub fn run_forward_study(cfg: &ExperimentConfig) -> Result<ForwardStudy> {
    let fwd = cfg
        .forward
        .as_ref()
        .ok_or_else(|| Error::Config("this experiment needs a [forward] section".into()))?;
    let grid = cfg.grid()?;
    let truth = cfg.truth_geometry()?;
    let disc = Discretization::new(
        grid.clone(),
        cfg.indicator()?,
        std::slice::from_ref(&truth),
        cfg.geometry.depth,
    );
    let tag = cfg.material.tag;
    let c0 = cfg.material.wave_speed_m_s;
    let material = MaterialModel::new(
        cfg.material.density_kg_m3,
        c0,
        tag,
        piecewise_fields(tag, &truth, cfg.truth.gamma_void),
    )?;
    let ops = assemble(&disc, &material, &[])?;
    let mut time = cfg.time_axis()?;
    let steps: Vec<usize> = fwd
        .snapshot_times_s
        .iter()
        .map(|t| (t / time.dt).round() as usize)
        .collect();
    time.steps = time.steps.max(steps.iter().copied().max().unwrap_or(0));

    let pulse = fwd
        .initial_pulse
        .as_ref()
        .map(|p| GaussianPulse::new(p.center_mm * 1e-3, p.frequency_hz, p.amplitude, c0));
    let initial = pulse.map(|p| p.initial_state(&grid));
    let excitation = match &fwd.source {
        Some(s) => Excitation::point_source(
            &grid,
            [s.position_mm[0] * 1e-3, s.position_mm[1] * 1e-3],
            &TimeFunction::SineBurst {
                frequency: s.frequency_hz,
                cycles: s.cycles,
                amplitude: s.amplitude,
            },
            &time,
        )?,
        None => Excitation::none(),
    };
    let snapshots = run_snapshots(&ops, &excitation, initial.as_ref(), &time, &steps)?;
    let times: Vec<f64> = steps.iter().map(|&n| time.time(n)).collect();
    let interface = fwd.analytic_interface_mm.map(|x| x * 1e-3);
    let mut errors = Vec::new();
    let mut void_max = Vec::new();
    for (u, &t) in snapshots.iter().zip(&times) {
        match (interface, pulse) {
            (Some(xf), Some(p)) if grid.dimension() == 1 => {
                let exact = |x: f64| {
                    analytic_free_interval(x, t, |s| p.value(s), (grid.origin()[0], xf), c0)
                };
                errors.push(Some(relative_l2_error_1d(
                    &grid,
                    u,
                    exact,
                    grid.origin()[0],
                    xf,
                )?));
                void_max.push(Some(max_abs_1d(
                    &grid,
                    u,
                    xf,
                    grid.origin()[0] + grid.extents()[0],
                )?));
            }
            _ => {
                errors.push(None);
                void_max.push(None);
            }
        }
    }
    Ok(ForwardStudy {
        grid,
        times,
        snapshots,
        errors,
        void_max,
    })
}

/// `‖u_h − u‖ / ‖u‖` in L² over `[a, b]`.
pub fn relative_l2_error_1d<F>(grid: &Grid, nodal: &[f64], exact: F, a: f64, b: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (xi, w) = gauss_legendre_1d(grid.degree() + 4);
    let mut err = 0.0;
    let mut norm = 0.0;
    for e in 0..grid.num_elements() {
        let (lo, hi) = grid.element_bounds(e);
        let lo = lo[0].max(a);
        let hi = hi[0].min(b);
        if hi <= lo {
            continue;
        }
        let half = 0.5 * (hi - lo);
        for (x, wq) in xi.iter().zip(&w) {
            let p = lo + half * (x + 1.0);
            let uh = grid.interpolate(nodal, [p, 0.0])?;
            let ue = exact(p);
            err += wq * half * (uh - ue).powi(2);
            norm += wq * half * ue * ue;
        }
    }
    if norm == 0.0 {
        return Ok(err.sqrt());
    }
    Ok((err / norm).sqrt())
}

/// Largest `|u_h|` over `[a, b]`, sampled at nodes and 16 points per element.
pub fn max_abs_1d(grid: &Grid, nodal: &[f64], a: f64, b: f64) -> Result<f64> {
    let mut best = 0.0f64;
    for e in 0..grid.num_elements() {
        let (lo, hi) = grid.element_bounds(e);
        let lo = lo[0].max(a);
        let hi = hi[0].min(b);
        if hi < lo {
            continue;
        }
        for k in 0..=16 {
            let x = lo + (hi - lo) * k as f64 / 16.0;
            best = best.max(grid.interpolate(nodal, [x, 0.0])?.abs());
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn array_positions_are_centered() {
        let cfg = ExperimentConfig::preset("circle-desk").unwrap();
        let array = PhasedArraySpec::from_config(&cfg).unwrap();
        let pos = array.positions();
        assert_eq!(pos.len(), 16);
        assert!((pos[0][0] - 0.0175).abs() < 1e-12);
        assert!((pos[15][0] - 0.0325).abs() < 1e-12);
        assert!(pos.iter().all(|p| (p[1] - 0.025).abs() < 1e-15));
    }

    #[test]
    fn gaussian_pulse_width() {
        let p = GaussianPulse::new(0.5, 1.0, 1.0, 1.0);
        assert!((p.width - 0.159_154_943).abs() < 1e-9);
        let h = 1e-6;
        let fd = (p.value(0.6 + h) - p.value(0.6 - h)) / (2.0 * h);
        assert!((fd - p.slope(0.6)).abs() < 1e-8);
    }

    #[test]
    fn mask_excludes_known_voids() {
        let cfg = ExperimentConfig::preset("ellipse-fcm-desk").unwrap();
        let grid = cfg.grid().unwrap();
        let mask = inversion_mask(&grid, &cfg.indicator().unwrap(), MaskKind::Physical);
        let node = |x: f64, y: f64| {
            let n = grid.nodes_per_axis();
            let i = (x / 1e-3).round() as usize;
            let j = (y / 1e-3).round() as usize;
            j * n[0] + i
        };
        assert!(!mask[node(0.035, 0.020)]);
        assert!(!mask[node(0.010, 0.0)]);
        assert!(mask[node(0.063, 0.030)]);
        assert!(
            inversion_mask(&grid, &cfg.indicator().unwrap(), MaskKind::All)
                .iter()
                .all(|&m| m)
        );
    }

    #[test]
    fn relative_error_of_exact_interpolant_is_small() {
        let grid = Grid::build(1, &[1.0], 0.1, 4).unwrap();
        let f = |x: f64| (3.0 * x).sin();
        let nodal: Vec<f64> = grid.node_coordinates().iter().map(|p| f(p[0])).collect();
        let e = relative_l2_error_1d(&grid, &nodal, f, 0.0, 0.73).unwrap();
        assert!(e < 1e-6, "{e}");
    }
}
