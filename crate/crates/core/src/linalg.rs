//! Sparse symmetric operators and a banded Cholesky factorization.

use crate::error::{Error, Result};

/// Compressed sparse row matrix. Both triangles are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds an all-zero matrix whose pattern couples every pair of nodes
    /// that share an element.
    pub fn from_elements<I>(n: usize, elements: I) -> Self
    where
        I: IntoIterator<Item = Vec<usize>>,
    {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for nodes in elements {
            for &a in &nodes {
                rows[a].extend_from_slice(&nodes);
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_unstable();
            row.dedup();
            cols.extend(row);
            row_ptr.push(cols.len());
        }
        let vals = vec![0.0; cols.len()];
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    fn position(&self, row: usize, col: usize) -> Option<usize> {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        self.cols[range.clone()]
            .binary_search(&col)
            .ok()
            .map(|k| range.start + k)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.position(row, col).map_or(0.0, |k| self.vals[k])
    }

    /// Adds a dense local matrix (row-major, `nodes.len()` squared) at `nodes`.
    pub fn add_local(&mut self, nodes: &[usize], local: &[f64]) {
        let m = nodes.len();
        for (a, &row) in nodes.iter().enumerate() {
            let start = self.row_ptr[row];
            let cols = &self.cols[start..self.row_ptr[row + 1]];
            for (b, &col) in nodes.iter().enumerate() {
                let k = cols.binary_search(&col).expect("entry outside pattern");
                self.vals[start + k] += local[a * m + b];
            }
        }
    }

    /// Replaces row and column `i` by the identity.
    pub fn set_identity_row_col(&mut self, i: usize) {
        for row in 0..self.n {
            if let Some(k) = self.position(row, i) {
                self.vals[k] = if row == i { 1.0 } else { 0.0 };
            }
        }
        for k in self.row_ptr[i]..self.row_ptr[i + 1] {
            self.vals[k] = if self.cols[k] == i { 1.0 } else { 0.0 };
        }
    }

    pub fn zero_row_col(&mut self, i: usize) {
        for row in 0..self.n {
            if let Some(k) = self.position(row, i) {
                self.vals[k] = 0.0;
            }
        }
        for k in self.row_ptr[i]..self.row_ptr[i + 1] {
            self.vals[k] = 0.0;
        }
    }

    /// `out = A x`
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        for row in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            out[row] = s;
        }
    }

    /// `out = A X` for `m` right-hand sides stored node-major (`x[i * m + s]`).
    pub fn mul_block_into(&self, x: &[f64], out: &mut [f64], m: usize) {
        for row in 0..self.n {
            let acc = &mut out[row * m..(row + 1) * m];
            acc.fill(0.0);
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                let v = self.vals[k];
                let c = self.cols[k];
                for (a, xv) in acc.iter_mut().zip(&x[c * m..(c + 1) * m]) {
                    *a += v * xv;
                }
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.mul_vec_into(x, &mut out);
        out
    }

    /// Bilinear form `a^T A b`.
    pub fn bilinear(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0.0;
        for row in 0..self.n {
            let mut r = 0.0;
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                r += self.vals[k] * b[self.cols[k]];
            }
            s += a[row] * r;
        }
        s
    }

    /// Largest `|A_ij - A_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self
            .vals
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for row in 0..self.n {
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                let col = self.cols[k];
                worst = worst.max((self.vals[k] - self.get(col, row)).abs());
            }
        }
        worst / scale
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|row| {
                self.vals[self.row_ptr[row]..self.row_ptr[row + 1]]
                    .iter()
                    .sum()
            })
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for row in 0..self.n {
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                d[row][self.cols[k]] = self.vals[k];
            }
        }
        d
    }

    pub(crate) fn row(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[row]..self.row_ptr[row + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }
}

/// `L L^T` factorization of a symmetric positive definite matrix stored as a band
/// after a bandwidth-reducing permutation.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bandwidth: usize,
    /// `order[k]` is the original index placed at position `k`.
    order: Vec<usize>,
    /// Row-major band of `L`: row `i` holds columns `i - bandwidth ..= i`.
    band: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(matrix: &CsrMatrix, order: Vec<usize>) -> Result<Self> {
        let n = matrix.dim();
        assert_eq!(order.len(), n);
        let mut position = vec![0usize; n];
        for (k, &orig) in order.iter().enumerate() {
            position[orig] = k;
        }
        let mut bandwidth = 0usize;
        for row in 0..n {
            for (col, _) in matrix.row(row) {
                bandwidth = bandwidth.max(position[row].abs_diff(position[col]));
            }
        }
        let w = bandwidth + 1;
        let mut band = vec![0.0; n * w];
        for row in 0..n {
            let i = position[row];
            for (col, v) in matrix.row(row) {
                let j = position[col];
                if j <= i {
                    band[i * w + (j + bandwidth - i)] = v;
                }
            }
        }
        for i in 0..n {
            let first = i.saturating_sub(bandwidth);
            for j in first..=i {
                let jfirst = j.saturating_sub(bandwidth).max(first);
                let mut s = band[i * w + (j + bandwidth - i)];
                let ri = i * w + bandwidth - i;
                let rj = j * w + bandwidth - j;
                for k in jfirst..j {
                    s -= band[ri + k] * band[rj + k];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite {
                            row: order[i],
                            pivot: s,
                        });
                    }
                    band[i * w + bandwidth] = s.sqrt();
                } else {
                    band[i * w + (j + bandwidth - i)] = s / band[j * w + bandwidth];
                }
            }
        }
        Ok(Self {
            n,
            bandwidth,
            order,
            band,
        })
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place using `scratch` of length `n`.
    pub fn solve_in_place(&self, b: &mut [f64], scratch: &mut [f64]) {
        let n = self.n;
        let bw = self.bandwidth;
        let w = bw + 1;
        for k in 0..n {
            scratch[k] = b[self.order[k]];
        }
        // forward: L y = b
        for i in 0..n {
            let first = i.saturating_sub(bw);
            let row = &self.band[i * w..(i + 1) * w];
            let mut s = scratch[i];
            for k in first..i {
                s -= row[k + bw - i] * scratch[k];
            }
            scratch[i] = s / row[bw];
        }
        // backward: L^T x = y, column sweep over rows of L
        for i in (0..n).rev() {
            let row = &self.band[i * w..(i + 1) * w];
            let xi = scratch[i] / row[bw];
            scratch[i] = xi;
            let first = i.saturating_sub(bw);
            for k in first..i {
                scratch[k] -= row[k + bw - i] * xi;
            }
        }
        for k in 0..n {
            b[self.order[k]] = scratch[k];
        }
    }

    /// Solves for `m` right-hand sides stored node-major, streaming the factor
    /// once; `scratch` needs `n * m` entries.
    pub fn solve_block_in_place(&self, b: &mut [f64], m: usize, scratch: &mut [f64]) {
        let n = self.n;
        let bw = self.bandwidth;
        let w = bw + 1;
        for k in 0..n {
            let o = self.order[k];
            scratch[k * m..(k + 1) * m].copy_from_slice(&b[o * m..(o + 1) * m]);
        }
        for i in 0..n {
            let first = i.saturating_sub(bw);
            let row = &self.band[i * w..(i + 1) * w];
            let (done, rest) = scratch.split_at_mut(i * m);
            let acc = &mut rest[..m];
            for k in first..i {
                let l = row[k + bw - i];
                for (a, y) in acc.iter_mut().zip(&done[k * m..(k + 1) * m]) {
                    *a -= l * y;
                }
            }
            let d = row[bw];
            acc.iter_mut().for_each(|a| *a /= d);
        }
        for i in (0..n).rev() {
            let row = &self.band[i * w..(i + 1) * w];
            let first = i.saturating_sub(bw);
            let (head, rest) = scratch.split_at_mut(i * m);
            let xi = &mut rest[..m];
            let d = row[bw];
            xi.iter_mut().for_each(|a| *a /= d);
            for k in first..i {
                let l = row[k + bw - i];
                for (a, x) in head[k * m..(k + 1) * m].iter_mut().zip(xi.iter()) {
                    *a -= l * x;
                }
            }
        }
        for k in 0..n {
            let o = self.order[k];
            b[o * m..(o + 1) * m].copy_from_slice(&scratch[k * m..(k + 1) * m]);
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        let mut scratch = vec![0.0; self.n];
        self.solve_in_place(&mut x, &mut scratch);
        x
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut m = CsrMatrix::from_elements(n, (0..n - 1).map(|i| vec![i, i + 1]));
        for i in 0..n - 1 {
            m.add_local(&[i, i + 1], &[2.0, -1.0, -1.0, 2.0]);
        }
        m
    }

    #[test]
    fn banded_solve_matches_product() {
        let m = laplacian_1d(12);
        let order: Vec<usize> = (0..12).rev().collect();
        let chol = BandedCholesky::factor(&m, order).unwrap();
        assert_eq!(chol.bandwidth(), 1);
        let x_true: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).sin()).collect();
        let b = m.mul_vec(&x_true);
        let x = chol.solve(&b);
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn block_kernels_match_single_vector_kernels() {
        let n = 15;
        let mut m = CsrMatrix::from_elements(n, (0..n - 2).map(|i| vec![i, i + 1, i + 2]));
        for i in 0..n - 2 {
            m.add_local(
                &[i, i + 1, i + 2],
                &[3.0, -1.0, 0.5, -1.0, 3.0, -1.0, 0.5, -1.0, 3.0],
            );
        }
        let chol = BandedCholesky::factor(&m, (0..n).map(|i| (i * 4) % n).collect()).unwrap();
        let k = 3;
        let cols: Vec<Vec<f64>> = (0..k)
            .map(|s| {
                (0..n)
                    .map(|i| ((i * (s + 2)) as f64 * 0.37).cos())
                    .collect()
            })
            .collect();
        let mut block: Vec<f64> = (0..n * k).map(|j| cols[j % k][j / k]).collect();
        let mut product = vec![0.0; n * k];
        m.mul_block_into(&block, &mut product, k);
        let mut scratch = vec![0.0; n * k];
        chol.solve_block_in_place(&mut block, k, &mut scratch);
        for s in 0..k {
            let ax = m.mul_vec(&cols[s]);
            let x = chol.solve(&cols[s]);
            for i in 0..n {
                assert!((product[i * k + s] - ax[i]).abs() < 1e-14);
                assert!((block[i * k + s] - x[i]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let mut m = CsrMatrix::from_elements(2, vec![vec![0, 1]]);
        m.add_local(&[0, 1], &[1.0, -1.0, -1.0, 1.0]);
        assert!(matches!(
            BandedCholesky::factor(&m, vec![0, 1]),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }
}
