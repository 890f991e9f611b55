//! Global mass and stiffness operators of the scaled wave equation.

use crate::error::Result;
use crate::geometry::{Geometry, IndicatorField, QuadratureSet};
use crate::grid::{Grid, Point};
use crate::linalg::{BandedCholesky, CsrMatrix};
use crate::material::MaterialModel;

/// One quadrature point with tabulated basis values and physical gradients.
#[derive(Debug, Clone)]
pub struct PointTable {
    pub weight: f64,
    pub values: Vec<f64>,
    pub gradients: Vec<[f64; 2]>,
}

/// A grid together with its indicator and the quadrature that resolves every
/// known coefficient jump. Immutable once built.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub grid: Grid,
    pub indicator: IndicatorField,
    pub quadrature: QuadratureSet,
    standard: Vec<PointTable>,
}

impl Discretization {
    /// `interfaces` lists additional jump geometries (e.g. piecewise scaling
    /// functions) that need composed quadrature besides the indicator.
    pub fn new(
        grid: Grid,
        indicator: IndicatorField,
        interfaces: &[Geometry],
        depth: usize,
    ) -> Self {
        let mut parts = vec![indicator.fictitious.clone()];
        parts.extend(interfaces.iter().cloned());
        let all = Geometry::union(parts);
        let quadrature = if all.is_empty() {
            QuadratureSet::uncut(&grid)
        } else {
            QuadratureSet::build(&grid, &all, depth)
        };
        let det = grid.jacobian_det();
        let standard = quadrature
            .base
            .points
            .iter()
            .zip(&quadrature.base.weights)
            .map(|(&xi, &w)| tabulate(&grid, xi, w * det))
            .collect();
        Self {
            grid,
            indicator,
            quadrature,
            standard,
        }
    }

    pub fn uniform(grid: Grid) -> Self {
        Self::new(grid, IndicatorField::physical(), &[], 0)
    }

    /// Visits every quadrature point of an element with its sample point.
    pub fn for_each_point<F>(&self, element: usize, mut f: F)
    where
        F: FnMut(&PointTable, Point),
    {
        match self.quadrature.cut_rule(element) {
            None => {
                let center = self.grid.element_center(element);
                for table in &self.standard {
                    f(table, center);
                }
            }
            Some(rule) => {
                for ((xi, w), sample) in rule
                    .reference_points
                    .iter()
                    .zip(&rule.weights)
                    .zip(&rule.samples)
                {
                    let table = tabulate(&self.grid, *xi, *w);
                    f(&table, *sample);
                }
            }
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.grid.num_nodes()
    }
}

fn tabulate(grid: &Grid, xi: Point, weight: f64) -> PointTable {
    let basis = grid.basis_unchecked(xi);
    let inv = grid.inverse_jacobian();
    PointTable {
        weight,
        values: basis.values,
        gradients: basis
            .gradients
            .iter()
            .map(|g| [g[0] * inv[0], g[1] * inv[1]])
            .collect(),
    }
}

/// Assembled operators with a factorized mass matrix.
#[derive(Debug, Clone)]
pub struct SystemOperators {
    pub mass: CsrMatrix,
    pub stiffness: CsrMatrix,
    pub mass_factor: BandedCholesky,
    pub dirichlet: Vec<usize>,
}

impl SystemOperators {
    pub fn num_dofs(&self) -> usize {
        self.mass.dim()
    }
}

/// Local mass and stiffness matrices of one element (row-major).
pub fn element_matrices(
    disc: &Discretization,
    material: &MaterialModel,
    element: usize,
) -> (Vec<f64>, Vec<f64>) {
    let nodes = disc.grid.element_nodes(element);
    let n = nodes.len();
    let mut m = vec![0.0; n * n];
    let mut k = vec![0.0; n * n];
    let mut gammas = [1.0; 2];
    disc.for_each_point(element, |pt, sample| {
        let alpha = disc.indicator.evaluate(sample);
        for (slot, field) in gammas.iter_mut().zip(&material.fields) {
            *slot = field.value(sample, &nodes, &pt.values);
        }
        let (am, ak) = material.coefficients(alpha, &gammas);
        let wm = pt.weight * am;
        let wk = pt.weight * ak;
        for a in 0..n {
            let va = pt.values[a] * wm;
            let ga = pt.gradients[a];
            for b in 0..n {
                let gb = pt.gradients[b];
                m[a * n + b] += va * pt.values[b];
                k[a * n + b] += wk * (ga[0] * gb[0] + ga[1] * gb[1]);
            }
        }
    });
    (m, k)
}

/// Assembles `M = Σ ∫ a_m NᵀN` and `K = Σ ∫ a_k BᵀB` and factorizes `M`.
///
/// Nodes in `dirichlet` are fixed at zero: their rows and columns are removed
/// from `K` and replaced by the identity in `M`.
pub fn assemble(
    disc: &Discretization,
    material: &MaterialModel,
    dirichlet: &[usize],
) -> Result<SystemOperators> {
    let grid = &disc.grid;
    let n = grid.num_nodes();
    let pattern =
        CsrMatrix::from_elements(n, (0..grid.num_elements()).map(|e| grid.element_nodes(e)));
    let mut mass = pattern.clone();
    let mut stiffness = pattern;
    const CHUNK: usize = 2048;
    let ne = grid.num_elements();
    for start in (0..ne).step_by(CHUNK) {
        let end = (start + CHUNK).min(ne);
        let locals = crate::par_map(end - start, |i| element_matrices(disc, material, start + i));
        for (i, (m, k)) in locals.iter().enumerate() {
            let nodes = grid.element_nodes(start + i);
            mass.add_local(&nodes, m);
            stiffness.add_local(&nodes, k);
        }
    }
    for &d in dirichlet {
        mass.set_identity_row_col(d);
        stiffness.zero_row_col(d);
    }
    let mass_factor = BandedCholesky::factor(&mass, grid.banded_ordering())?;
    Ok(SystemOperators {
        mass,
        stiffness,
        mass_factor,
        dirichlet: dirichlet.to_vec(),
    })
}

/// Consistent load of a unit point source: basis values at the position.
pub fn point_load_vector(grid: &Grid, position: Point) -> Result<Vec<(usize, f64)>> {
    let (element, xi) = grid.locate_point(position)?;
    let basis = grid.basis_unchecked(xi);
    Ok(grid
        .element_nodes(element)
        .into_iter()
        .zip(basis.values)
        .filter(|(_, v)| *v != 0.0)
        .collect())
}

/// Dense form of a point load.
pub fn dense_load(n: usize, load: &[(usize, f64)]) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for &(i, v) in load {
        out[i] += v;
    }
    out
}
