//! Browser demo: thin wasm-bindgen wrappers around `voidfwi`.

use voidfwi::assembly::{assemble, Discretization};
use voidfwi::config::{preset_text, ExperimentConfig};
use voidfwi::experiments::{run_forward_study, GaussianPulse};
use voidfwi::geometry::{integrate_indicator, Geometry, IndicatorField, Shape};
use voidfwi::grid::Grid;
use voidfwi::material::{GammaSource, MaterialModel, Parametrization};
use voidfwi::propagate::{
    analytic_free_interval, run_snapshots, stability_limit, Excitation, TimeAxis, TimeFunction,
};
use wasm_bindgen::prelude::*;

fn js(e: voidfwi::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Side length of the plate in [`plate_snapshot`], in elements per axis.
#[wasm_bindgen]
pub fn plate_elements() -> usize {
    40
}

/// 1D bar with a void beyond x = 2.0167 m at time `time_s`, sampled at
/// `samples` points on [0, 3] m. Returns `[x.., u.., exact..]`; the exact
/// free-boundary solution is NaN inside the void.
#[wasm_bindgen]
pub fn interface_profile(
    tag: &str,
    degree: u32,
    time_s: f64,
    samples: usize,
) -> Result<Vec<f64>, JsError> {
    let name = format!("interface1d-p{degree}");
    let text = preset_text(&name).ok_or_else(|| JsError::new("degree must be 1, 2 or 4"))?;
    let cfg = ExperimentConfig::parse_with_overrides(
        text,
        &[
            format!("material.tag=\"{tag}\""),
            format!("forward.snapshot_times_s=[{time_s:e}]"),
        ],
    )
    .map_err(js)?;
    let study = run_forward_study(&cfg).map_err(js)?;
    let u = &study.snapshots[0];
    let t = study.times[0];
    let fwd = cfg.forward.as_ref().expect("preset has a forward section");
    let xf = fwd.analytic_interface_mm.unwrap_or(f64::INFINITY) * 1e-3;
    let p = fwd
        .initial_pulse
        .as_ref()
        .expect("preset has an initial pulse");
    let pulse = GaussianPulse::new(
        p.center_mm * 1e-3,
        p.frequency_hz,
        p.amplitude,
        cfg.material.wave_speed_m_s,
    );
    let length = study.grid.extents()[0];
    let n = samples.max(2);
    let xs: Vec<f64> = (0..n).map(|i| length * i as f64 / (n - 1) as f64).collect();
    let mut out = xs.clone();
    for &x in &xs {
        out.push(study.grid.interpolate(u, [x, 0.0]).map_err(js)?);
    }
    for &x in &xs {
        out.push(if x <= xf {
            analytic_free_interval(x, t, |s| pulse.value(s), (0.0, xf), pulse.wave_speed)
        } else {
            f64::NAN
        });
    }
    Ok(out)
}

/// Displacement of a 20 mm x 20 mm plate with a central circular void of
/// `radius_mm`, excited by a 500 kHz burst at the top centre, at `time_s`.
/// Returns nodal values row by row from the bottom, `(plate_elements() + 1)²`
/// entries.
#[wasm_bindgen]
pub fn plate_snapshot(
    tag: &str,
    gamma_void: f64,
    radius_mm: f64,
    time_s: f64,
) -> Result<Vec<f64>, JsError> {
    let tag = Parametrization::parse(tag).map_err(js)?;
    let side = 0.02;
    let grid = Grid::build(2, &[side, side], side / plate_elements() as f64, 1).map_err(js)?;
    let void = Geometry::Primitive(Shape::Circle {
        center: [0.5 * side, 0.5 * side],
        radius: radius_mm * 1e-3,
    });
    let disc = Discretization::new(
        grid.clone(),
        IndicatorField::physical(),
        std::slice::from_ref(&void),
        5,
    );
    let fields = (0..tag.field_count())
        .map(|k| GammaSource::Piecewise {
            region: void.clone(),
            // the second field of the two-parameter variant scales the wave speed
            inside: if k == 0 { gamma_void } else { 1.0 },
            outside: 1.0,
        })
        .collect();
    let material = MaterialModel::new(2700.0, 6000.0, tag, fields).map_err(js)?;
    let ops = assemble(&disc, &material, &[]).map_err(js)?;
    let dt = 0.9 * stability_limit(&ops);
    let time = TimeAxis::new(dt, time_s).map_err(js)?;
    let burst = TimeFunction::SineBurst {
        frequency: 5e5,
        cycles: 2.0,
        amplitude: 1.0,
    };
    let source = Excitation::point_source(&grid, [0.5 * side, side], &burst, &time).map_err(js)?;
    let snaps = run_snapshots(&ops, &source, None, &time, &[time.steps]).map_err(js)?;
    Ok(snaps.into_iter().next().unwrap_or_default())
}

/// Signed relative error of the quadtree-integrated area of a 50 mm plate
/// with an r = 5 mm hole, for depths `0..=max_depth`. `offset_mm` shifts the
/// hole off the grid symmetry lines.
#[wasm_bindgen]
pub fn quadtree_area_errors(
    max_depth: usize,
    element_mm: f64,
    offset_mm: f64,
) -> Result<Vec<f64>, JsError> {
    let grid = Grid::build(2, &[0.05, 0.05], element_mm * 1e-3, 1).map_err(js)?;
    let indicator = IndicatorField {
        fictitious: Geometry::Primitive(Shape::Circle {
            center: [0.025 + offset_mm * 1e-3, 0.025 + 0.7 * offset_mm * 1e-3],
            radius: 0.005,
        }),
        alpha_phys: 1.0,
        alpha_fict: 0.0,
    };
    let exact = 0.05 * 0.05 - std::f64::consts::PI * 0.005 * 0.005;
    Ok((0..=max_depth.min(8))
        .map(|d| (integrate_indicator(&grid, &indicator, d) - exact) / exact)
        .collect())
}
