//! Implicit geometry, the FCM indicator and composed (space-tree) quadrature
//! for elements cut by a material interface.
//!
//! A [`Geometry`] describes a *region* of space, usually a void or the
//! fictitious part of an extended domain. Its level function is negative
//! inside the region. Points within `1e-12` of the boundary count as outside
//! the region, i.e. as physical material.

use crate::error::{Error, Result};
use crate::grid::{Grid, Point, QuadratureRule};

const BOUNDARY_TOL: f64 = 1e-12;

/// Natural cubic spline through a set of interpolation points.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    second: Vec<f64>,
}

impl CubicSpline {
    pub fn new(points: &[Point]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::NonMonotoneSpline {
                index: points.len(),
            });
        }
        for i in 1..points.len() {
            if !(points[i][0] > points[i - 1][0]) {
                return Err(Error::NonMonotoneSpline { index: i });
            }
        }
        let xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
        let ys: Vec<f64> = points.iter().map(|p| p[1]).collect();
        let n = xs.len();
        let mut second = vec![0.0; n];
        if n > 2 {
            // Tridiagonal system for interior second derivatives (Thomas algorithm).
            let m = n - 2;
            let mut diag = vec![0.0; m];
            let mut upper = vec![0.0; m];
            let mut rhs = vec![0.0; m];
            for k in 0..m {
                let i = k + 1;
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                diag[k] = 2.0 * (h0 + h1);
                upper[k] = h1;
                rhs[k] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
            }
            for k in 1..m {
                let lower = xs[k + 1] - xs[k];
                let factor = lower / diag[k - 1];
                diag[k] -= factor * upper[k - 1];
                rhs[k] -= factor * rhs[k - 1];
            }
            for k in (0..m).rev() {
                let next = if k + 1 < m { second[k + 2] } else { 0.0 };
                second[k + 1] = (rhs[k] - upper[k] * next) / diag[k];
            }
        }
        Ok(Self { xs, ys, second })
    }

    fn interval(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self
            .xs
            .binary_search_by(|v| v.partial_cmp(&x).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    /// Value at `x`; linear continuation outside the interpolation range.
    pub fn evaluate(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x < self.xs[0] {
            return self.ys[0] + self.slope(self.xs[0]) * (x - self.xs[0]);
        }
        if x > self.xs[n - 1] {
            return self.ys[n - 1] + self.slope(self.xs[n - 1]) * (x - self.xs[n - 1]);
        }
        let i = self.interval(x);
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h * h
                / 6.0
    }

    pub fn slope(&self, x: f64) -> f64 {
        let i = self.interval(x.clamp(self.xs[0], self.xs[self.xs.len() - 1]));
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        (self.ys[i + 1] - self.ys[i]) / h
            + ((1.0 - 3.0 * a * a) * self.second[i] + (3.0 * b * b - 1.0) * self.second[i + 1]) * h
                / 6.0
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] || x >= self.xs[n - 1] {
            return if x <= self.xs[0] {
                self.second[0]
            } else {
                self.second[n - 1]
            };
        }
        let i = self.interval(x);
        let h = self.xs[i + 1] - self.xs[i];
        let b = (x - self.xs[i]) / h;
        (1.0 - b) * self.second[i] + b * self.second[i + 1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Circle {
        center: Point,
        radius: f64,
    },
    /// Ellipse with semi-axes `(a, b)` rotated counter-clockwise by `angle_deg`.
    Ellipse {
        center: Point,
        semi_axes: [f64; 2],
        angle_deg: f64,
    },
    /// Everything below the spline curve.
    BelowSpline(CubicSpline),
    /// Axis-aligned box; infinite bounds are allowed (half-spaces, 1D intervals).
    Box {
        min: Point,
        max: Point,
    },
}

impl Shape {
    pub fn level(&self, p: Point) -> f64 {
        match self {
            Shape::Circle { center, radius } => {
                ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt() - radius
            }
            Shape::Ellipse {
                center,
                semi_axes,
                angle_deg,
            } => {
                let (s, c) = angle_deg.to_radians().sin_cos();
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                let u = c * dx + s * dy;
                let v = -s * dx + c * dy;
                let q = (u / semi_axes[0]).powi(2) + (v / semi_axes[1]).powi(2);
                (q.sqrt() - 1.0) * semi_axes[0].min(semi_axes[1])
            }
            Shape::BelowSpline(spline) => p[1] - spline.evaluate(p[0]),
            Shape::Box { min, max } => {
                let mut level = f64::NEG_INFINITY;
                for axis in 0..2 {
                    level = level.max(min[axis] - p[axis]).max(p[axis] - max[axis]);
                }
                level
            }
        }
    }
}

/// Boolean combination of primitive regions.
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Empty,
    Primitive(Shape),
    Union(Vec<Geometry>),
    Intersection(Vec<Geometry>),
    Complement(Box<Geometry>),
}

impl Geometry {
    pub fn union(parts: Vec<Geometry>) -> Self {
        let parts: Vec<_> = parts.into_iter().filter(|g| !g.is_empty()).collect();
        match parts.len() {
            0 => Geometry::Empty,
            1 => parts.into_iter().next().unwrap(),
            _ => Geometry::Union(parts),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Geometry::Empty)
    }

    /// Signed level value; negative inside the region.
    pub fn level(&self, p: Point) -> f64 {
        match self {
            Geometry::Empty => f64::INFINITY,
            Geometry::Primitive(shape) => shape.level(p),
            Geometry::Union(parts) => parts
                .iter()
                .map(|g| g.level(p))
                .fold(f64::INFINITY, f64::min),
            Geometry::Intersection(parts) => parts
                .iter()
                .map(|g| g.level(p))
                .fold(f64::NEG_INFINITY, f64::max),
            Geometry::Complement(inner) => -inner.level(p),
        }
    }

    /// Membership of the region; boundary points are not members.
    pub fn contains(&self, p: Point) -> bool {
        self.level(p) < -BOUNDARY_TOL
    }
}

/// The FCM indicator: `alpha_phys` outside the fictitious region, `alpha_fict` inside.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorField {
    pub fictitious: Geometry,
    pub alpha_phys: f64,
    pub alpha_fict: f64,
}

impl IndicatorField {
    pub fn new(fictitious: Geometry, alpha_fict: f64) -> Result<Self> {
        if !(alpha_fict > 0.0) {
            return Err(Error::InvalidMaterial(format!(
                "fictitious indicator value must be positive, got {alpha_fict}"
            )));
        }
        Ok(Self {
            fictitious,
            alpha_phys: 1.0,
            alpha_fict,
        })
    }

    /// Indicator without any fictitious region (`alpha = 1` everywhere).
    pub fn physical() -> Self {
        Self {
            fictitious: Geometry::Empty,
            alpha_phys: 1.0,
            alpha_fict: 1e-3,
        }
    }

    pub fn evaluate(&self, p: Point) -> f64 {
        if self.fictitious.contains(p) {
            self.alpha_fict
        } else {
            self.alpha_phys
        }
    }
}

/// Classification of a cell with respect to a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellClass {
    /// Entirely outside the region (physical material).
    Inside,
    /// Entirely inside the region (void / fictitious side).
    Outside,
    Cut,
}

fn probe_points(lo: Point, hi: Point, dimension: usize) -> Vec<Point> {
    let mid = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    if dimension == 1 {
        return vec![[lo[0], lo[1]], [hi[0], lo[1]], [mid[0], lo[1]]];
    }
    vec![
        lo,
        [hi[0], lo[1]],
        hi,
        [lo[0], hi[1]],
        mid,
        [mid[0], lo[1]],
        [hi[0], mid[1]],
        [mid[0], hi[1]],
        [lo[0], mid[1]],
    ]
}

/// Classifies an axis-aligned cell by sampling corners, edge midpoints and center.
pub fn classify_cell(region: &Geometry, lo: Point, hi: Point, dimension: usize) -> CellClass {
    if region.is_empty() {
        return CellClass::Inside;
    }
    let mut any_in = false;
    let mut any_out = false;
    for p in probe_points(lo, hi, dimension) {
        if region.contains(p) {
            any_in = true;
        } else {
            any_out = true;
        }
        if any_in && any_out {
            return CellClass::Cut;
        }
    }
    if any_in {
        CellClass::Outside
    } else {
        CellClass::Inside
    }
}

pub fn classify_element(region: &Geometry, grid: &Grid, element: usize) -> CellClass {
    let (lo, hi) = grid.element_bounds(element);
    classify_cell(region, lo, hi, grid.dimension())
}

/// Quadrature for one element: reference points, physical weights and the
/// sample point at which piecewise-constant coefficients are evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementQuadrature {
    pub reference_points: Vec<Point>,
    pub weights: Vec<f64>,
    pub samples: Vec<Point>,
}

impl ElementQuadrature {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn physical_points(&self, grid: &Grid, element: usize) -> Vec<Point> {
        self.reference_points
            .iter()
            .map(|&xi| grid.reference_to_physical(element, xi))
            .collect()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Composed quadrature of one element, with the indicator value carried per point.
#[derive(Debug, Clone, PartialEq)]
pub struct ComposedQuadrature {
    pub element: usize,
    pub depth: usize,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub alpha: Vec<f64>,
}

/// Standard rule on an element, sampled at the element center.
pub fn standard_quadrature(
    grid: &Grid,
    element: usize,
    base: &QuadratureRule,
) -> ElementQuadrature {
    let det = grid.jacobian_det();
    let center = grid.element_center(element);
    ElementQuadrature {
        reference_points: base.points.clone(),
        weights: base.weights.iter().map(|w| w * det).collect(),
        samples: vec![center; base.len()],
    }
}

/// Space-tree quadrature: cut sub-cells are bisected per axis until `depth`;
/// every leaf or uncut sub-cell receives the scaled base rule.
pub fn composed_element_quadrature(
    region: &Geometry,
    grid: &Grid,
    element: usize,
    depth: usize,
    base: &QuadratureRule,
) -> ElementQuadrature {
    let mut out = ElementQuadrature {
        reference_points: Vec::new(),
        weights: Vec::new(),
        samples: Vec::new(),
    };
    let dim = grid.dimension();
    let det = grid.jacobian_det();
    let mut stack = vec![([-1.0, -1.0], [1.0, 1.0], 0usize)];
    while let Some((lo, hi, level)) = stack.pop() {
        let plo = grid.reference_to_physical(element, lo);
        let phi = grid.reference_to_physical(element, hi);
        let class = classify_cell(region, plo, phi, dim);
        if class == CellClass::Cut && level < depth {
            let mid = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
            if dim == 1 {
                stack.push(([mid[0], lo[1]], hi, level + 1));
                stack.push((lo, [mid[0], hi[1]], level + 1));
            } else {
                stack.push((mid, hi, level + 1));
                stack.push(([lo[0], mid[1]], [mid[0], hi[1]], level + 1));
                stack.push(([mid[0], lo[1]], [hi[0], mid[1]], level + 1));
                stack.push((lo, mid, level + 1));
            }
            continue;
        }
        let half = [0.5 * (hi[0] - lo[0]), 0.5 * (hi[1] - lo[1])];
        let center = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
        let scale = if dim == 1 { half[0] } else { half[0] * half[1] };
        let sample = grid.reference_to_physical(element, center);
        for (p, w) in base.points.iter().zip(&base.weights) {
            let xi = if dim == 1 {
                [center[0] + half[0] * p[0], 0.0]
            } else {
                [center[0] + half[0] * p[0], center[1] + half[1] * p[1]]
            };
            out.reference_points.push(xi);
            out.weights.push(w * scale * det);
            out.samples.push(sample);
        }
    }
    out
}

/// Composed quadrature of an element with per-point indicator values.
pub fn build_composed_quadrature(
    indicator: &IndicatorField,
    grid: &Grid,
    element: usize,
    depth: usize,
    base: &QuadratureRule,
) -> ComposedQuadrature {
    let rule = composed_element_quadrature(&indicator.fictitious, grid, element, depth, base);
    ComposedQuadrature {
        element,
        depth,
        points: rule.physical_points(grid, element),
        alpha: rule
            .samples
            .iter()
            .map(|&s| indicator.evaluate(s))
            .collect(),
        weights: rule.weights,
    }
}

/// Quadrature for every element of a grid: the base rule for uncut elements and
/// composed rules for elements cut by `interfaces`.
#[derive(Debug, Clone)]
pub struct QuadratureSet {
    pub base: QuadratureRule,
    pub depth: usize,
    cut: Vec<Option<ElementQuadrature>>,
}

impl QuadratureSet {
    pub fn build(grid: &Grid, interfaces: &Geometry, depth: usize) -> Self {
        let base = QuadratureRule::for_grid(grid);
        let cut = (0..grid.num_elements())
            .map(|e| {
                if classify_element(interfaces, grid, e) == CellClass::Cut {
                    Some(composed_element_quadrature(
                        interfaces, grid, e, depth, &base,
                    ))
                } else {
                    None
                }
            })
            .collect();
        Self { base, depth, cut }
    }

    pub fn uncut(grid: &Grid) -> Self {
        Self {
            base: QuadratureRule::for_grid(grid),
            depth: 0,
            cut: vec![None; grid.num_elements()],
        }
    }

    pub fn cut_rule(&self, element: usize) -> Option<&ElementQuadrature> {
        self.cut[element].as_ref()
    }

    pub fn cut_count(&self) -> usize {
        self.cut.iter().filter(|c| c.is_some()).count()
    }

    pub fn element_rule(&self, grid: &Grid, element: usize) -> ElementQuadrature {
        match &self.cut[element] {
            Some(rule) => rule.clone(),
            None => standard_quadrature(grid, element, &self.base),
        }
    }
}

/// Integral of the indicator over the grid using composed quadrature.
pub fn integrate_indicator(grid: &Grid, indicator: &IndicatorField, depth: usize) -> f64 {
    let set = QuadratureSet::build(grid, &indicator.fictitious, depth);
    (0..grid.num_elements())
        .map(|e| {
            let rule = set.element_rule(grid, e);
            rule.weights
                .iter()
                .zip(&rule.samples)
                .map(|(w, &s)| w * indicator.evaluate(s))
                .sum::<f64>()
        })
        .sum()
}
