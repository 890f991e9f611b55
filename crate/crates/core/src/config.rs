//! Experiment configuration files (TOML) and the built-in presets.
//!
//! Lengths are given in millimetres, times in seconds; key names carry the unit.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::{CubicSpline, Geometry, IndicatorField, Shape};
use crate::grid::{Grid, Point};
use crate::material::Parametrization;
use crate::propagate::{TimeAxis, TimeFunction};

const MM: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub grid: GridSection,
    pub material: MaterialSection,
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default)]
    pub truth: TruthSection,
    pub array: Option<ArraySection>,
    pub time: TimeSection,
    #[serde(default)]
    pub reference: ReferenceSection,
    #[serde(default)]
    pub inversion: InversionSection,
    pub forward: Option<ForwardSection>,
    #[serde(default)]
    pub gradient: GradientSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "two")]
    pub dimension: usize,
    pub extent_x_mm: f64,
    #[serde(default)]
    pub extent_y_mm: f64,
    pub element_size_mm: f64,
    #[serde(default = "one")]
    pub degree: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSection {
    pub tag: Parametrization,
    pub density_kg_m3: f64,
    pub wave_speed_m_s: f64,
    #[serde(default)]
    pub gamma_lower: f64,
    #[serde(default = "gamma_upper")]
    pub gamma_upper: f64,
}

/// A-priori known voids, modelled through the indicator α.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    #[serde(default = "alpha_fict")]
    pub alpha_fict: f64,
    #[serde(default = "depth")]
    pub depth: usize,
    #[serde(default)]
    pub voids: Vec<ShapeSpec>,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            alpha_fict: alpha_fict(),
            depth: depth(),
            voids: Vec::new(),
        }
    }
}

/// Voids of the true model, modelled through γ.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthSection {
    #[serde(default = "gamma_void")]
    pub gamma_void: f64,
    #[serde(default)]
    pub voids: Vec<ShapeSpec>,
}

impl Default for TruthSection {
    fn default() -> Self {
        Self {
            gamma_void: gamma_void(),
            voids: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeSpec {
    Circle {
        center_mm: [f64; 2],
        radius_mm: f64,
    },
    Ellipse {
        center_mm: [f64; 2],
        semi_axes_mm: [f64; 2],
        #[serde(default)]
        angle_deg: f64,
    },
    BelowSpline {
        points_mm: Vec<[f64; 2]>,
    },
    Box {
        #[serde(default)]
        min_mm: Option<[f64; 2]>,
        #[serde(default)]
        max_mm: Option<[f64; 2]>,
    },
    Interval {
        min_mm: f64,
        max_mm: f64,
    },
}

impl ShapeSpec {
    pub fn to_shape(&self) -> Result<Shape> {
        let pt = |p: [f64; 2]| -> Point { [p[0] * MM, p[1] * MM] };
        Ok(match self {
            ShapeSpec::Circle {
                center_mm,
                radius_mm,
            } => Shape::Circle {
                center: pt(*center_mm),
                radius: radius_mm * MM,
            },
            ShapeSpec::Ellipse {
                center_mm,
                semi_axes_mm,
                angle_deg,
            } => Shape::Ellipse {
                center: pt(*center_mm),
                semi_axes: [semi_axes_mm[0] * MM, semi_axes_mm[1] * MM],
                angle_deg: *angle_deg,
            },
            ShapeSpec::BelowSpline { points_mm } => {
                let points: Vec<Point> = points_mm.iter().map(|&p| pt(p)).collect();
                Shape::BelowSpline(CubicSpline::new(&points)?)
            }
            ShapeSpec::Box { min_mm, max_mm } => Shape::Box {
                min: min_mm.map_or([f64::NEG_INFINITY; 2], pt),
                max: max_mm.map_or([f64::INFINITY; 2], pt),
            },
            ShapeSpec::Interval { min_mm, max_mm } => Shape::Box {
                min: [min_mm * MM, f64::NEG_INFINITY],
                max: [max_mm * MM, f64::INFINITY],
            },
        })
    }
}

pub fn union_of(shapes: &[ShapeSpec]) -> Result<Geometry> {
    Ok(Geometry::union(
        shapes
            .iter()
            .map(|s| s.to_shape().map(Geometry::Primitive))
            .collect::<Result<Vec<_>>>()?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    Top,
    Bottom,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySection {
    pub count: usize,
    pub pitch_mm: f64,
    pub center_mm: f64,
    #[serde(default = "top")]
    pub edge: Edge,
    pub frequency_hz: f64,
    #[serde(default = "cycles")]
    pub cycles: f64,
    #[serde(default = "unit")]
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub delta_t_s: f64,
    pub duration_s: f64,
    #[serde(default = "stride")]
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    #[serde(default = "refinement")]
    pub refinement: usize,
    #[serde(default = "reference_depth")]
    pub depth: usize,
    pub delta_t_s: Option<f64>,
    #[serde(default)]
    pub force_equal: bool,
}

impl Default for ReferenceSection {
    fn default() -> Self {
        Self {
            refinement: refinement(),
            depth: reference_depth(),
            delta_t_s: None,
            force_equal: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskKind {
    /// Every node is inverted.
    All,
    /// Nodes inside the a-priori known voids are excluded.
    Physical,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InversionSection {
    #[serde(default = "iterations")]
    pub max_iterations: usize,
    #[serde(default = "snapshots")]
    pub snapshot_iterations: Vec<usize>,
    #[serde(default = "physical")]
    pub mask: MaskKind,
    #[serde(default = "memory")]
    pub memory: usize,
}

impl Default for InversionSection {
    fn default() -> Self {
        Self {
            max_iterations: iterations(),
            snapshot_iterations: snapshots(),
            mask: physical(),
            memory: memory(),
        }
    }
}

/// Forward studies: a Gaussian initial pulse (1D) or a point force.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardSection {
    pub snapshot_times_s: Vec<f64>,
    #[serde(default)]
    pub initial_pulse: Option<PulseSpec>,
    #[serde(default)]
    pub source: Option<SourceSection>,
    /// Free boundary position used for the analytic comparison (1D).
    #[serde(default)]
    pub analytic_interface_mm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSpec {
    pub center_mm: f64,
    pub frequency_hz: f64,
    #[serde(default = "unit")]
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    pub position_mm: [f64; 2],
    pub frequency_hz: f64,
    #[serde(default = "cycles")]
    pub cycles: f64,
    #[serde(default = "unit")]
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradientSection {
    #[serde(default = "study_gamma")]
    pub gamma_void: f64,
}

impl Default for GradientSection {
    fn default() -> Self {
        Self {
            gamma_void: study_gamma(),
        }
    }
}

fn one() -> usize {
    1
}
fn two() -> usize {
    2
}
fn unit() -> f64 {
    1.0
}
fn gamma_upper() -> f64 {
    1.2
}
fn alpha_fict() -> f64 {
    1e-3
}
fn depth() -> usize {
    5
}
fn gamma_void() -> f64 {
    1e-5
}
fn top() -> Edge {
    Edge::Top
}
fn cycles() -> f64 {
    2.0
}
fn stride() -> usize {
    10
}
fn refinement() -> usize {
    2
}
fn reference_depth() -> usize {
    6
}
fn iterations() -> usize {
    25
}
fn snapshots() -> Vec<usize> {
    vec![5, 10, 25]
}
fn physical() -> MaskKind {
    MaskKind::Physical
}
fn memory() -> usize {
    10
}
fn study_gamma() -> f64 {
    0.6
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config_error(text, &e))
    }

    /// Parses `text` after applying `key=value` overrides (dotted keys).
    pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        if overrides.is_empty() {
            return Self::parse(text);
        }
        let mut table: toml::Table = text.parse().map_err(|e| config_error(text, &e))?;
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().trim().to_string()))
    }

    pub fn preset(name: &str) -> Result<Self> {
        let text = preset_text(name).ok_or_else(|| {
            Error::Config(format!(
                "unknown preset '{name}' (available: {})",
                PRESET_NAMES.join(", ")
            ))
        })?;
        Self::parse(text)
    }

    pub fn grid(&self) -> Result<Grid> {
        self.grid_refined(1)
    }

    pub fn grid_refined(&self, refinement: usize) -> Result<Grid> {
        let g = &self.grid;
        let extents = if g.dimension == 1 {
            vec![g.extent_x_mm * MM]
        } else {
            vec![g.extent_x_mm * MM, g.extent_y_mm * MM]
        };
        Grid::build(
            g.dimension,
            &extents,
            g.element_size_mm * MM / refinement.max(1) as f64,
            g.degree,
        )
    }

    pub fn known_geometry(&self) -> Result<Geometry> {
        union_of(&self.geometry.voids)
    }

    pub fn truth_geometry(&self) -> Result<Geometry> {
        union_of(&self.truth.voids)
    }

    pub fn indicator(&self) -> Result<IndicatorField> {
        let known = self.known_geometry()?;
        if known.is_empty() {
            Ok(IndicatorField::physical())
        } else {
            IndicatorField::new(known, self.geometry.alpha_fict)
        }
    }

    pub fn time_axis(&self) -> Result<TimeAxis> {
        TimeAxis::new(self.time.delta_t_s, self.time.duration_s)
    }

    pub fn reference_time_axis(&self) -> Result<TimeAxis> {
        if self.reference.force_equal {
            return self.time_axis();
        }
        TimeAxis::new(
            self.reference.delta_t_s.unwrap_or(self.time.delta_t_s),
            self.time.duration_s,
        )
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.material.gamma_lower, self.material.gamma_upper)
    }

    pub fn burst(&self) -> Option<TimeFunction> {
        self.array.as_ref().map(|a| TimeFunction::SineBurst {
            frequency: a.frequency_hz,
            cycles: a.cycles,
            amplitude: a.amplitude,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.time_axis()?;
        self.indicator()?;
        self.truth_geometry()?;
        if !(self.material.density_kg_m3 > 0.0 && self.material.wave_speed_m_s > 0.0) {
            return Err(Error::Config(
                "material.density_kg_m3 and wave_speed_m_s must be positive".into(),
            ));
        }
        if self.material.gamma_lower > self.material.gamma_upper {
            return Err(Error::Config(
                "material.gamma_lower exceeds gamma_upper".into(),
            ));
        }
        if self.time.stride == 0 {
            return Err(Error::Config("time.stride must be at least 1".into()));
        }
        if self.reference.refinement == 0 {
            return Err(Error::Config(
                "reference.refinement must be at least 1".into(),
            ));
        }
        if let Some(a) = &self.array {
            if a.count == 0 {
                return Err(Error::Config("array.count must be at least 1".into()));
            }
            let half = 0.5 * (a.count - 1) as f64 * a.pitch_mm;
            if a.center_mm - half < 0.0 || a.center_mm + half > self.grid.extent_x_mm {
                return Err(Error::Config(
                    "array does not fit on the domain edge".into(),
                ));
            }
        }
        Ok(())
    }
}

fn config_error(text: &str, e: &toml::de::Error) -> Error {
    match e.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
            Error::Config(format!(
                "line {line}, column {column}: {}",
                e.message().trim()
            ))
        }
        None => Error::Config(e.message().trim().to_string()),
    }
}

fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{item}' is not of the form key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    let (last, parents) = parts.split_last().expect("split yields at least one part");
    let mut cursor = table;
    for part in parents {
        let entry = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override '{key}': '{part}' is not a section")))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}

pub const PRESET_NAMES: &[&str] = &[
    "circle-desk",
    "circle-paper-rho",
    "circle-paper-c",
    "circle-paper-rhoc",
    "circle-paper-separate",
    "ellipse-fcm-desk",
    "ellipse-fcm-paper",
    "interface1d-p1",
    "interface1d-p2",
    "interface1d-p4",
    "plate2d",
];

pub fn preset_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "circle-desk" => include_str!("../presets/circle-desk.toml"),
        "circle-paper-rho" => include_str!("../presets/circle-paper-rho.toml"),
        "circle-paper-c" => include_str!("../presets/circle-paper-c.toml"),
        "circle-paper-rhoc" => include_str!("../presets/circle-paper-rhoc.toml"),
        "circle-paper-separate" => include_str!("../presets/circle-paper-separate.toml"),
        "ellipse-fcm-desk" => include_str!("../presets/ellipse-fcm-desk.toml"),
        "ellipse-fcm-paper" => include_str!("../presets/ellipse-fcm-paper.toml"),
        "interface1d-p1" => include_str!("../presets/interface1d-p1.toml"),
        "interface1d-p2" => include_str!("../presets/interface1d-p2.toml"),
        "interface1d-p4" => include_str!("../presets/interface1d-p4.toml"),
        "plate2d" => include_str!("../presets/plate2d.toml"),
        _ => return None,
    })
}
