//! Void parametrizations through dimensionless scaling functions.
//!
//! Every parametrization maps the indicator `alpha` and the scaling values at
//! a point to a mass coefficient `a_m` (multiplying the acceleration) and a
//! stiffness coefficient `a_k` (multiplying the gradient term):
//!
//! | tag        | `a_m`          | `a_k`                      |
//! |------------|----------------|----------------------------|
//! | `rho`      | `α γ ρ₀`       | `α γ ρ₀ c₀²`               |
//! | `c`        | `α ρ₀`         | `α γ² ρ₀ c₀²`              |
//! | `rhoc`     | `α γ ρ₀`       | `α γ³ ρ₀ c₀²`              |
//! | `separate` | `α γ_ρ ρ₀`     | `α γ_ρ γ_c² ρ₀ c₀²`        |

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Geometry, QuadratureSet};
use crate::grid::{Grid, Point};
use crate::linalg::{BandedCholesky, CsrMatrix};

/// Lower floor applied to scaling values before they enter the coefficients.
pub const GAMMA_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parametrization {
    Rho,
    C,
    #[serde(rename = "rhoc")]
    RhoC,
    Separate,
}

impl Parametrization {
    pub const ALL: [Parametrization; 4] = [Self::Rho, Self::C, Self::RhoC, Self::Separate];

    pub fn field_count(self) -> usize {
        match self {
            Self::Separate => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Rho => "rho",
            Self::C => "c",
            Self::RhoC => "rhoc",
            Self::Separate => "separate",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "rho" => Ok(Self::Rho),
            "c" => Ok(Self::C),
            "rhoc" => Ok(Self::RhoC),
            "separate" => Ok(Self::Separate),
            other => Err(Error::InvalidMaterial(format!(
                "unknown parametrization tag '{other}'"
            ))),
        }
    }

    /// Field names, in model-vector order.
    pub fn field_names(self) -> &'static [&'static str] {
        match self {
            Self::Separate => &["gamma_rho", "gamma_c"],
            _ => &["gamma"],
        }
    }
}

/// Nodal scaling coefficients living on the solution basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingField {
    pub values: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
}

impl ScalingField {
    pub fn constant(nodes: usize, value: f64, lower: f64, upper: f64) -> Self {
        Self {
            values: vec![value; nodes],
            lower,
            upper,
        }
    }

    /// Clamps every coefficient into `[lower, upper]`.
    pub fn clip(mut self) -> Self {
        let (lo, hi) = (self.lower, self.upper);
        for v in &mut self.values {
            *v = v.clamp(lo, hi);
        }
        self
    }
}

/// Clamps a field into its bounds.
pub fn clip_field(field: ScalingField) -> ScalingField {
    field.clip()
}

/// How a scaling function is evaluated at quadrature points.
#[derive(Debug, Clone, PartialEq)]
pub enum GammaSource {
    /// Interpolated through the nodal basis.
    Nodal(ScalingField),
    /// Piecewise constant: `inside` within `region`, `outside` elsewhere.
    /// Sampled at sub-cell centers like the indicator.
    Piecewise {
        region: Geometry,
        inside: f64,
        outside: f64,
    },
}

impl GammaSource {
    pub fn uniform(value: f64) -> Self {
        GammaSource::Piecewise {
            region: Geometry::Empty,
            inside: value,
            outside: value,
        }
    }

    pub fn region(&self) -> Option<&Geometry> {
        match self {
            GammaSource::Piecewise { region, .. } if !region.is_empty() => Some(region),
            _ => None,
        }
    }

    pub fn nodal(&self) -> Option<&ScalingField> {
        match self {
            GammaSource::Nodal(field) => Some(field),
            _ => None,
        }
    }

    /// Value at a point given the local basis values and element node indices.
    pub(crate) fn value(&self, sample: Point, nodes: &[usize], basis: &[f64]) -> f64 {
        match self {
            GammaSource::Nodal(field) => nodes
                .iter()
                .zip(basis)
                .map(|(&n, &v)| v * field.values[n])
                .sum(),
            GammaSource::Piecewise {
                region,
                inside,
                outside,
            } => {
                if region.contains(sample) {
                    *inside
                } else {
                    *outside
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialModel {
    pub density: f64,
    pub wave_speed: f64,
    pub tag: Parametrization,
    pub fields: Vec<GammaSource>,
}

impl MaterialModel {
    pub fn new(
        density: f64,
        wave_speed: f64,
        tag: Parametrization,
        fields: Vec<GammaSource>,
    ) -> Result<Self> {
        if !(density > 0.0) || !(wave_speed > 0.0) {
            return Err(Error::InvalidMaterial(format!(
                "density and wave speed must be positive (got {density}, {wave_speed})"
            )));
        }
        if fields.len() != tag.field_count() {
            return Err(Error::InvalidMaterial(format!(
                "parametrization '{}' needs {} scaling field(s), got {}",
                tag.name(),
                tag.field_count(),
                fields.len()
            )));
        }
        Ok(Self {
            density,
            wave_speed,
            tag,
            fields,
        })
    }

    /// Unscaled material (`γ = 1` everywhere).
    pub fn intact(density: f64, wave_speed: f64, tag: Parametrization) -> Result<Self> {
        Self::new(
            density,
            wave_speed,
            tag,
            (0..tag.field_count())
                .map(|_| GammaSource::uniform(1.0))
                .collect(),
        )
    }

    /// Replaces all scaling functions by nodal fields taken from a model vector.
    pub fn with_model_vector(&self, model: &[f64], lower: f64, upper: f64) -> Self {
        let count = self.tag.field_count();
        let n = model.len() / count;
        let fields = (0..count)
            .map(|k| {
                GammaSource::Nodal(ScalingField {
                    values: model[k * n..(k + 1) * n].to_vec(),
                    lower,
                    upper,
                })
            })
            .collect();
        Self {
            fields,
            ..self.clone()
        }
    }

    pub fn coefficients(&self, alpha: f64, gammas: &[f64]) -> (f64, f64) {
        effective_coefficients(self.tag, self.density, self.wave_speed, alpha, gammas)
    }

    pub fn derivatives(&self, alpha: f64, gammas: &[f64]) -> [(f64, f64); 2] {
        coefficient_derivatives(self.tag, self.density, self.wave_speed, alpha, gammas)
    }

    /// Geometries across which the coefficients jump (piecewise scaling functions).
    pub fn interfaces(&self) -> Vec<Geometry> {
        self.fields
            .iter()
            .filter_map(|f| f.region().cloned())
            .collect()
    }
}

fn floored(g: f64) -> f64 {
    g.max(GAMMA_FLOOR)
}

/// Mass and stiffness coefficients at one point.
pub fn effective_coefficients(
    tag: Parametrization,
    rho0: f64,
    c0: f64,
    alpha: f64,
    gammas: &[f64],
) -> (f64, f64) {
    let k0 = rho0 * c0 * c0;
    let g = floored(gammas[0]);
    match tag {
        Parametrization::Rho => (alpha * g * rho0, alpha * g * k0),
        Parametrization::C => (alpha * rho0, alpha * g * g * k0),
        Parametrization::RhoC => (alpha * g * rho0, alpha * g * g * g * k0),
        Parametrization::Separate => {
            let gc = floored(gammas[1]);
            (alpha * g * rho0, alpha * g * gc * gc * k0)
        }
    }
}

/// Derivatives `(∂a_m/∂γ_k, ∂a_k/∂γ_k)` for each scaling field `k`.
/// Zero below the floor, where the coefficients no longer depend on γ.
pub fn coefficient_derivatives(
    tag: Parametrization,
    rho0: f64,
    c0: f64,
    alpha: f64,
    gammas: &[f64],
) -> [(f64, f64); 2] {
    let k0 = rho0 * c0 * c0;
    let active = |g: f64| if g >= GAMMA_FLOOR { 1.0 } else { 0.0 };
    let g = floored(gammas[0]);
    let s = active(gammas[0]);
    match tag {
        Parametrization::Rho => [(s * alpha * rho0, s * alpha * k0), (0.0, 0.0)],
        Parametrization::C => [(0.0, s * 2.0 * alpha * g * k0), (0.0, 0.0)],
        Parametrization::RhoC => [(s * alpha * rho0, s * 3.0 * alpha * g * g * k0), (0.0, 0.0)],
        Parametrization::Separate => {
            let gc = floored(gammas[1]);
            let sc = active(gammas[1]);
            [
                (s * alpha * rho0, s * alpha * gc * gc * k0),
                (0.0, sc * 2.0 * alpha * g * gc * k0),
            ]
        }
    }
}

/// L² projection of a pointwise function onto the nodal basis.
///
/// `quadrature` should resolve any discontinuity of `g` (composed rules on
/// cut elements); `g` is evaluated at the physical quadrature points.
pub fn l2_project<F>(grid: &Grid, quadrature: &QuadratureSet, g: F) -> Result<Vec<f64>>
where
    F: Fn(Point) -> f64,
{
    let n = grid.num_nodes();
    let mut mass =
        CsrMatrix::from_elements(n, (0..grid.num_elements()).map(|e| grid.element_nodes(e)));
    let mut rhs = vec![0.0; n];
    let nloc = grid.nodes_per_element();
    let mut local = vec![0.0; nloc * nloc];
    for e in 0..grid.num_elements() {
        let nodes = grid.element_nodes(e);
        let rule = quadrature.element_rule(grid, e);
        local.iter_mut().for_each(|v| *v = 0.0);
        for (xi, w) in rule.reference_points.iter().zip(&rule.weights) {
            let basis = grid.basis_unchecked(*xi);
            let value = g(grid.reference_to_physical(e, *xi));
            for a in 0..nloc {
                rhs[nodes[a]] += w * basis.values[a] * value;
                for b in 0..nloc {
                    local[a * nloc + b] += w * basis.values[a] * basis.values[b];
                }
            }
        }
        mass.add_local(&nodes, &local);
    }
    let factor = BandedCholesky::factor(&mass, grid.banded_ordering())?;
    Ok(factor.solve(&rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Shape;

    const RHO: f64 = 2700.0;
    const C: f64 = 6000.0;

    #[test]
    fn coefficients_per_tag() {
        let (m, k) = effective_coefficients(Parametrization::Rho, RHO, C, 1.0, &[1.0]);
        assert_eq!(m, 2700.0);
        assert!((k - 9.72e10).abs() < 1.0);
        let (_, k) = effective_coefficients(Parametrization::RhoC, RHO, C, 1.0, &[1e-5]);
        assert!((k / (RHO * C * C) - 1e-15).abs() < 1e-27);
        let (m, k) = effective_coefficients(Parametrization::C, RHO, C, 1.0, &[0.5]);
        assert_eq!(m, RHO);
        assert!((k - 0.25 * RHO * C * C).abs() < 1e-3);
        let (m, k) = effective_coefficients(Parametrization::Separate, RHO, C, 1.0, &[0.5, 0.5]);
        assert_eq!(m, 0.5 * RHO);
        assert!((k - 0.125 * RHO * C * C).abs() < 1e-3);
    }

    #[test]
    fn zero_gamma_is_floored() {
        let (m, _) = effective_coefficients(Parametrization::Rho, RHO, C, 1.0, &[0.0]);
        assert!(m > 0.0);
        let d = coefficient_derivatives(Parametrization::Rho, RHO, C, 1.0, &[0.0]);
        assert_eq!(d[0], (0.0, 0.0));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for tag in Parametrization::ALL {
            let g = [0.7, 0.9];
            let d = coefficient_derivatives(tag, RHO, C, 0.8, &g);
            for field in 0..tag.field_count() {
                let h = 1e-6;
                let mut gp = g;
                let mut gm = g;
                gp[field] += h;
                gm[field] -= h;
                let p = effective_coefficients(tag, RHO, C, 0.8, &gp);
                let m = effective_coefficients(tag, RHO, C, 0.8, &gm);
                let fd = ((p.0 - m.0) / (2.0 * h), (p.1 - m.1) / (2.0 * h));
                assert!(
                    (fd.0 - d[field].0).abs() <= 1e-6 * (1.0 + fd.0.abs()),
                    "{tag:?}"
                );
                assert!(
                    (fd.1 - d[field].1).abs() <= 1e-6 * fd.1.abs().max(1.0),
                    "{tag:?}"
                );
            }
        }
    }

    #[test]
    fn clip_bounds() {
        let f = ScalingField {
            values: vec![1.5, -0.1, 0.7],
            lower: 0.0,
            upper: 1.2,
        };
        let clipped = clip_field(f);
        assert_eq!(clipped.values, vec![1.2, 0.0, 0.7]);
        assert_eq!(clip_field(clipped.clone()), clipped);
    }

    #[test]
    fn model_requires_matching_field_count() {
        assert!(MaterialModel::new(
            RHO,
            C,
            Parametrization::Separate,
            vec![GammaSource::uniform(1.0)]
        )
        .is_err());
        assert!(MaterialModel::new(
            -1.0,
            C,
            Parametrization::Rho,
            vec![GammaSource::uniform(1.0)]
        )
        .is_err());
    }

    #[test]
    fn projection_reproduces_constants_and_linears() {
        for degree in [1, 2, 4] {
            let grid = Grid::build(2, &[2.0, 1.0], 0.25, degree).unwrap();
            let quad = QuadratureSet::uncut(&grid);
            let ones = l2_project(&grid, &quad, |_| 1.0).unwrap();
            assert!(ones.iter().all(|v| (v - 1.0).abs() < 1e-10));
            let lin = l2_project(&grid, &quad, |p| 0.3 + 2.0 * p[0] - p[1]).unwrap();
            for (n, v) in lin.iter().enumerate() {
                let x = grid.node_coordinate(n);
                assert!((v - (0.3 + 2.0 * x[0] - x[1])).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn projection_of_void_step_is_intermediate_near_interface() {
        let grid = Grid::build(2, &[10.0, 10.0], 0.5, 1).unwrap();
        let circle = Geometry::Primitive(Shape::Circle {
            center: [5.0, 5.0],
            radius: 2.0,
        });
        let quad = QuadratureSet::build(&grid, &circle, 5);
        let field =
            l2_project(&grid, &quad, |p| if circle.contains(p) { 0.6 } else { 1.0 }).unwrap();
        // node just outside the interface
        let node = (0..grid.num_nodes())
            .find(|&n| {
                let x = grid.node_coordinate(n);
                (x[0] - 7.0).abs() < 1e-12 && (x[1] - 5.0).abs() < 1e-12
            })
            .unwrap();
        assert!(field[node] > 0.6 && field[node] < 1.0, "{}", field[node]);
    }
}
