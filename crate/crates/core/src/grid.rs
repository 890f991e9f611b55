//! Structured 1D/2D meshes with tensor-product Lagrange bases.
//!
//! Elements are axis-aligned cells of uniform size. Local nodes are placed on
//! Gauss-Lobatto-Legendre points per axis (equidistant for `p = 1, 2`), local
//! ordering runs along x fastest. Global nodes are numbered x-fastest as well.

use crate::error::{Error, Result};

/// A physical or reference point. The second coordinate is ignored in 1D.
pub type Point = [f64; 2];

const REF_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Grid {
    dimension: usize,
    counts: [usize; 2],
    element_size: [f64; 2],
    origin: [f64; 2],
    degree: usize,
    basis: Lagrange1d,
}

/// Basis values and reference-coordinate gradients at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisEval {
    pub values: Vec<f64>,
    pub gradients: Vec<[f64; 2]>,
}

impl Grid {
    /// Builds a grid on `[0, extents]` with square elements of `element_size`.
    pub fn build(
        dimension: usize,
        extents: &[f64],
        element_size: f64,
        degree: usize,
    ) -> Result<Self> {
        Self::with_origin(dimension, [0.0, 0.0], extents, element_size, degree)
    }

    pub fn with_origin(
        dimension: usize,
        origin: Point,
        extents: &[f64],
        element_size: f64,
        degree: usize,
    ) -> Result<Self> {
        if dimension != 1 && dimension != 2 {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2, got {dimension}"
            )));
        }
        if extents.len() < dimension {
            return Err(Error::InvalidGrid(format!(
                "expected {dimension} extents, got {}",
                extents.len()
            )));
        }
        if !(element_size > 0.0) || !element_size.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "element size must be positive, got {element_size}"
            )));
        }
        if degree < 1 {
            return Err(Error::InvalidGrid(
                "polynomial degree must be at least 1".into(),
            ));
        }
        let mut counts = [1usize; 2];
        let mut sizes = [element_size; 2];
        for axis in 0..dimension {
            let extent = extents[axis];
            if !(extent > 0.0) || !extent.is_finite() {
                return Err(Error::InvalidGrid(format!(
                    "extent must be positive, got {extent}"
                )));
            }
            let ratio = extent / element_size;
            let n = ratio.round();
            if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
                return Err(Error::InvalidGrid(format!(
                    "extent {extent} is not divisible by element size {element_size}"
                )));
            }
            counts[axis] = n as usize;
            sizes[axis] = extent / n;
        }
        if dimension == 1 {
            sizes[1] = 1.0;
        }
        Ok(Self {
            dimension,
            counts,
            element_size: sizes,
            origin,
            degree,
            basis: Lagrange1d::gauss_lobatto(degree),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn element_counts(&self) -> [usize; 2] {
        self.counts
    }

    pub fn element_size(&self) -> [f64; 2] {
        self.element_size
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn extents(&self) -> [f64; 2] {
        [
            self.counts[0] as f64 * self.element_size[0],
            if self.dimension == 2 {
                self.counts[1] as f64 * self.element_size[1]
            } else {
                0.0
            },
        ]
    }

    pub fn num_elements(&self) -> usize {
        self.counts[0] * self.counts[1]
    }

    pub fn nodes_per_axis(&self) -> [usize; 2] {
        let p = self.degree;
        [
            self.counts[0] * p + 1,
            if self.dimension == 2 {
                self.counts[1] * p + 1
            } else {
                1
            },
        ]
    }

    pub fn num_nodes(&self) -> usize {
        let n = self.nodes_per_axis();
        n[0] * n[1]
    }

    pub fn nodes_per_element(&self) -> usize {
        (self.degree + 1).pow(self.dimension as u32)
    }

    /// Reference node positions of the 1D Lagrange basis.
    pub fn reference_nodes(&self) -> &[f64] {
        &self.basis.nodes
    }

    /// Measure of the reference element (2 in 1D, 4 in 2D).
    pub fn reference_measure(&self) -> f64 {
        2f64.powi(self.dimension as i32)
    }

    /// Determinant of the (constant, diagonal) reference-to-physical map.
    pub fn jacobian_det(&self) -> f64 {
        let mut det = 0.5 * self.element_size[0];
        if self.dimension == 2 {
            det *= 0.5 * self.element_size[1];
        }
        det
    }

    /// Factors mapping reference gradients to physical gradients.
    pub fn inverse_jacobian(&self) -> [f64; 2] {
        [2.0 / self.element_size[0], 2.0 / self.element_size[1]]
    }

    pub fn element_measure(&self) -> f64 {
        self.jacobian_det() * self.reference_measure()
    }

    fn element_axes(&self, element: usize) -> [usize; 2] {
        [element % self.counts[0], element / self.counts[0]]
    }

    /// Lower-left and upper-right corner of an element.
    pub fn element_bounds(&self, element: usize) -> (Point, Point) {
        let [ex, ey] = self.element_axes(element);
        let lo = [
            self.origin[0] + ex as f64 * self.element_size[0],
            self.origin[1] + ey as f64 * self.element_size[1],
        ];
        let mut hi = [lo[0] + self.element_size[0], lo[1] + self.element_size[1]];
        if self.dimension == 1 {
            hi[1] = lo[1];
        }
        (lo, hi)
    }

    pub fn element_center(&self, element: usize) -> Point {
        self.reference_to_physical(element, [0.0, 0.0])
    }

    /// Global node indices of an element in local (x-fastest) order.
    pub fn element_nodes(&self, element: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes_per_element());
        self.element_nodes_into(element, &mut out);
        out
    }

    pub fn element_nodes_into(&self, element: usize, out: &mut Vec<usize>) {
        out.clear();
        let p = self.degree;
        let [ex, ey] = self.element_axes(element);
        let nx = self.nodes_per_axis()[0];
        if self.dimension == 1 {
            out.extend((0..=p).map(|a| ex * p + a));
        } else {
            for b in 0..=p {
                for a in 0..=p {
                    out.push((ex * p + a) + (ey * p + b) * nx);
                }
            }
        }
    }

    fn axis_coordinate(&self, axis: usize, index: usize) -> f64 {
        let p = self.degree;
        let (e, a) = if index == self.counts[axis] * p {
            (self.counts[axis] - 1, p)
        } else {
            (index / p, index % p)
        };
        let h = self.element_size[axis];
        self.origin[axis] + e as f64 * h + 0.5 * (self.basis.nodes[a] + 1.0) * h
    }

    pub fn node_coordinate(&self, node: usize) -> Point {
        let nx = self.nodes_per_axis()[0];
        let (i, j) = (node % nx, node / nx);
        if self.dimension == 1 {
            [self.axis_coordinate(0, i), self.origin[1]]
        } else {
            [self.axis_coordinate(0, i), self.axis_coordinate(1, j)]
        }
    }

    pub fn node_coordinates(&self) -> Vec<Point> {
        (0..self.num_nodes())
            .map(|n| self.node_coordinate(n))
            .collect()
    }

    /// Coordinates of the nodal lines along one axis.
    pub fn axis_coordinates(&self, axis: usize) -> Vec<f64> {
        (0..self.nodes_per_axis()[axis])
            .map(|i| {
                if axis == 1 && self.dimension == 1 {
                    self.origin[1]
                } else {
                    self.axis_coordinate(axis, i)
                }
            })
            .collect()
    }

    pub fn reference_to_physical(&self, element: usize, xi: Point) -> Point {
        let (lo, _) = self.element_bounds(element);
        let x = lo[0] + 0.5 * (xi[0] + 1.0) * self.element_size[0];
        if self.dimension == 1 {
            [x, lo[1]]
        } else {
            [x, lo[1] + 0.5 * (xi[1] + 1.0) * self.element_size[1]]
        }
    }

    pub fn contains(&self, point: Point) -> bool {
        let ext = self.extents();
        (0..self.dimension).all(|axis| {
            let tol = 1e-12 * ext[axis].max(1.0);
            point[axis] >= self.origin[axis] - tol
                && point[axis] <= self.origin[axis] + ext[axis] + tol
        })
    }

    /// Finds the owning element and reference coordinates of a physical point.
    ///
    /// Points on element interfaces belong to the element with the lower index.
    pub fn locate_point(&self, point: Point) -> Result<(usize, Point)> {
        if !self.contains(point) || point.iter().take(self.dimension).any(|v| !v.is_finite()) {
            return Err(Error::OutsideDomain {
                point: point[..self.dimension].to_vec(),
            });
        }
        let mut index = [0usize; 2];
        let mut xi = [0.0; 2];
        for axis in 0..self.dimension {
            let h = self.element_size[axis];
            let t = (point[axis] - self.origin[axis]) / h;
            let nearest = t.round();
            let mut e = if (t - nearest).abs() <= 1e-10 && nearest >= 1.0 {
                nearest as usize - 1
            } else {
                t.floor().max(0.0) as usize
            };
            e = e.min(self.counts[axis] - 1);
            let local = t - e as f64;
            index[axis] = e;
            xi[axis] = (2.0 * local - 1.0).clamp(-1.0, 1.0);
        }
        Ok((index[0] + index[1] * self.counts[0], xi))
    }

    /// Basis values and reference gradients at a reference point.
    pub fn evaluate_basis(&self, reference_point: Point) -> Result<BasisEval> {
        if reference_point
            .iter()
            .take(self.dimension)
            .any(|v| !(v.abs() <= 1.0 + REF_TOL))
        {
            return Err(Error::OutsideReferenceElement(
                reference_point[..self.dimension].to_vec(),
            ));
        }
        Ok(self.basis_unchecked(reference_point))
    }

    pub(crate) fn basis_unchecked(&self, xi: Point) -> BasisEval {
        let (vx, dx) = self.basis.eval(xi[0]);
        if self.dimension == 1 {
            return BasisEval {
                gradients: dx.iter().map(|&d| [d, 0.0]).collect(),
                values: vx,
            };
        }
        let (vy, dy) = self.basis.eval(xi[1]);
        let n = vx.len();
        let mut values = Vec::with_capacity(n * n);
        let mut gradients = Vec::with_capacity(n * n);
        for b in 0..n {
            for a in 0..n {
                values.push(vx[a] * vy[b]);
                gradients.push([dx[a] * vy[b], vx[a] * dy[b]]);
            }
        }
        BasisEval { values, gradients }
    }

    /// Evaluates a nodal field at a physical point.
    pub fn interpolate(&self, nodal: &[f64], point: Point) -> Result<f64> {
        let (element, xi) = self.locate_point(point)?;
        let basis = self.basis_unchecked(xi);
        Ok(self
            .element_nodes(element)
            .iter()
            .zip(&basis.values)
            .map(|(&n, &v)| v * nodal[n])
            .sum())
    }

    /// Node permutation (new position -> original node) that keeps the band of
    /// assembled matrices narrow.
    pub fn banded_ordering(&self) -> Vec<usize> {
        let [nx, ny] = self.nodes_per_axis();
        if self.dimension == 2 && nx > ny {
            let mut order = Vec::with_capacity(nx * ny);
            for i in 0..nx {
                for j in 0..ny {
                    order.push(i + j * nx);
                }
            }
            order
        } else {
            (0..nx * ny).collect()
        }
    }
}

/// 1D Lagrange basis on fixed nodes in `[-1, 1]`.
#[derive(Debug, Clone)]
struct Lagrange1d {
    nodes: Vec<f64>,
}

impl Lagrange1d {
    fn gauss_lobatto(degree: usize) -> Self {
        Self {
            nodes: gauss_lobatto_nodes(degree),
        }
    }

    fn eval(&self, x: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.nodes.len();
        let mut values = vec![0.0; n];
        let mut derivs = vec![0.0; n];
        for i in 0..n {
            let xi = self.nodes[i];
            let mut v = 1.0;
            for j in 0..n {
                if j != i {
                    v *= (x - self.nodes[j]) / (xi - self.nodes[j]);
                }
            }
            values[i] = v;
            let mut d = 0.0;
            for k in 0..n {
                if k == i {
                    continue;
                }
                let mut term = 1.0 / (xi - self.nodes[k]);
                for j in 0..n {
                    if j != i && j != k {
                        term *= (x - self.nodes[j]) / (xi - self.nodes[j]);
                    }
                }
                d += term;
            }
            derivs[i] = d;
        }
        (values, derivs)
    }
}

/// Legendre polynomial P_n and P_{n-1} at x.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut prev, mut cur) = (1.0, x);
    for k in 2..=n {
        let next = ((2 * k - 1) as f64 * x * cur - (k - 1) as f64 * prev) / k as f64;
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// Gauss-Lobatto-Legendre points for polynomial degree `p`, ascending.
pub fn gauss_lobatto_nodes(p: usize) -> Vec<f64> {
    assert!(p >= 1);
    let n = p + 1;
    let mut nodes: Vec<f64> = (0..n)
        .map(|i| -(std::f64::consts::PI * i as f64 / p as f64).cos())
        .collect();
    for x in nodes.iter_mut().take(p).skip(1) {
        for _ in 0..100 {
            // Newton on P'_p, whose roots are the interior Lobatto points.
            let (pn, pm) = legendre_pair(p, *x);
            let dp = p as f64 * (pm - *x * pn) / (1.0 - *x * *x);
            let d2p = (2.0 * *x * dp - (p * (p + 1)) as f64 * pn) / (1.0 - *x * *x);
            let step = dp / d2p;
            *x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
    }
    nodes[0] = -1.0;
    nodes[p] = 1.0;
    // symmetrize round-off
    for i in 0..n / 2 {
        let v = 0.5 * (nodes[p - i] - nodes[i]);
        nodes[i] = -v;
        nodes[p - i] = v;
    }
    if n % 2 == 1 {
        nodes[p / 2] = 0.0;
    }
    nodes
}

/// Gauss-Legendre points and weights with `n` points on `[-1, 1]`.
pub fn gauss_legendre_1d(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (pn, pm) = legendre_pair(n, x);
            let dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let step = pn / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (pn, pm) = legendre_pair(n, x);
        let dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
        points[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (points, weights)
}

/// Tensor-product quadrature rule on the reference element.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn gauss_legendre(dimension: usize, points_per_axis: usize) -> Self {
        let (x, w) = gauss_legendre_1d(points_per_axis);
        if dimension == 1 {
            return Self {
                points: x.iter().map(|&v| [v, 0.0]).collect(),
                weights: w,
            };
        }
        let mut points = Vec::with_capacity(x.len() * x.len());
        let mut weights = Vec::with_capacity(x.len() * x.len());
        for j in 0..x.len() {
            for i in 0..x.len() {
                points.push([x[i], x[j]]);
                weights.push(w[i] * w[j]);
            }
        }
        Self { points, weights }
    }

    /// Default rule for uncut elements of a grid: `p + 1` points per axis.
    pub fn for_grid(grid: &Grid) -> Self {
        Self::gauss_legendre(grid.dimension(), grid.degree() + 1)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn element_counts_match_configurations() {
        let plate = Grid::build(2, &[0.1, 0.05], 0.0005, 1).unwrap();
        assert_eq!(plate.num_elements(), 20_000);
        let rod = Grid::build(1, &[3.0], 0.05, 1).unwrap();
        assert_eq!(rod.num_elements(), 60);
        assert_eq!(rod.num_nodes(), 61);
        let square = Grid::build(2, &[0.05, 0.05], 0.0005, 1).unwrap();
        assert_eq!(square.num_elements(), 10_000);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::build(1, &[3.0], 0.07, 1).is_err());
        assert!(Grid::build(1, &[3.0], 0.0, 1).is_err());
        assert!(Grid::build(1, &[-3.0], 0.05, 1).is_err());
        assert!(Grid::build(2, &[1.0, 1.0], 0.5, 0).is_err());
        assert!(Grid::build(3, &[1.0, 1.0, 1.0], 0.5, 1).is_err());
    }

    #[test]
    fn linear_basis_values() {
        let g = Grid::build(1, &[1.0], 1.0, 1).unwrap();
        let b = g.evaluate_basis([-1.0, 0.0]).unwrap();
        assert_eq!(b.values, vec![1.0, 0.0]);
        let b = g.evaluate_basis([0.0, 0.0]).unwrap();
        assert_eq!(b.values, vec![0.5, 0.5]);
        assert_eq!(b.gradients[0][0], -0.5);
        assert_eq!(b.gradients[1][0], 0.5);
        assert!(g.evaluate_basis([1.5, 0.0]).is_err());
    }

    #[test]
    fn lobatto_nodes_degree_four() {
        let nodes = gauss_lobatto_nodes(4);
        let s = (3.0f64 / 7.0).sqrt();
        let expected = [-1.0, -s, 0.0, s, 1.0];
        for (a, b) in nodes.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
        assert_eq!(gauss_lobatto_nodes(2), vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..=6 {
            let (x, w) = gauss_legendre_1d(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            // exact for degree 2n-1
            let deg = 2 * n - 2;
            let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            let exact = 2.0 / (deg as f64 + 1.0);
            assert!((integral - exact).abs() < 1e-13, "n={n}");
        }
        let rule = QuadratureRule::gauss_legendre(2, 3);
        assert!((rule.weights.iter().sum::<f64>() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn locate_point_interface_position() {
        let g = Grid::build(1, &[3.0], 0.05, 1).unwrap();
        let (e, xi) = g.locate_point([2.0167, 0.0]).unwrap();
        let (lo, hi) = g.element_bounds(e);
        assert!((lo[0] - 2.0).abs() < 1e-12 && (hi[0] - 2.05).abs() < 1e-12);
        // affine map oracle: xi = 2 (x - x_lo) / h - 1
        let oracle = 2.0 * (2.0167 - 2.0) / 0.05 - 1.0;
        assert!((xi[0] - oracle).abs() < 1e-10);
        assert!((xi[0] + 0.332).abs() < 1e-9);
    }

    #[test]
    fn locate_point_tie_breaks_and_corners() {
        let g = Grid::build(2, &[2.0, 1.0], 0.5, 2).unwrap();
        assert_eq!(g.locate_point([0.0, 0.0]).unwrap(), (0, [-1.0, -1.0]));
        let (e, xi) = g.locate_point([0.5, 0.25]).unwrap();
        assert_eq!(e, 0);
        assert_eq!(xi[0], 1.0);
        let (e, xi) = g.locate_point([2.0, 1.0]).unwrap();
        assert_eq!(e, g.num_elements() - 1);
        assert_eq!(xi, [1.0, 1.0]);
        assert!(g.locate_point([2.1, 0.5]).is_err());
    }

    #[test]
    fn shared_faces_have_shared_nodes() {
        let g = Grid::build(2, &[1.0, 1.0], 0.25, 4).unwrap();
        for e in 0..g.num_elements() {
            for (local, &node) in g.element_nodes(e).iter().enumerate() {
                let p = g.degree() + 1;
                let xi = [
                    g.reference_nodes()[local % p],
                    g.reference_nodes()[local / p],
                ];
                let x = g.reference_to_physical(e, xi);
                let y = g.node_coordinate(node);
                assert!((x[0] - y[0]).abs() < 1e-14 && (x[1] - y[1]).abs() < 1e-14);
            }
        }
    }
}
