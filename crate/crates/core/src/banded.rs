//! Row-stored band matrices and a pivoting tridiagonal solver.

use std::io;

use crate::dd::Scalar;
use crate::io::fmt_f64;

/// Rectangular band matrix; row `i` stores columns `i - kl ..= i + ku`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    rows: usize,
    cols: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(rows: usize, cols: usize, kl: usize, ku: usize) -> Self {
        BandMatrix {
            rows,
            cols,
            kl,
            ku,
            data: vec![0.0; rows * (kl + ku + 1)],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }
    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.rows || j >= self.cols || j + self.kl < i || j > i + self.ku {
            None
        } else {
            Some(i * (self.kl + self.ku + 1) + (j + self.kl - i))
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |k| self.data[k])
    }

    /// Panics when `(i, j)` lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.slot(i, j).expect("entry outside the band");
        self.data[k] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.slot(i, j).expect("entry outside the band");
        self.data[k] += v;
    }

    /// Column range stored for row `i`.
    pub fn row_cols(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.kl)..(i + self.ku + 1).min(self.cols)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row_cols(i).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    pub fn matmul(&self, other: &BandMatrix) -> BandMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = BandMatrix::zeros(self.rows, other.cols, self.kl + other.kl, self.ku + other.ku);
        for i in 0..self.rows {
            for k in self.row_cols(i) {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in other.row_cols(k) {
                    out.add(i, j, a * other.get(k, j));
                }
            }
        }
        out
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    /// Principal submatrix on rows and columns `range`.
    pub fn restrict(&self, range: std::ops::Range<usize>) -> BandMatrix {
        let n = range.len();
        let mut out = BandMatrix::zeros(n, n, self.kl, self.ku);
        for i in 0..n {
            for j in out.row_cols(i) {
                out.set(i, j, self.get(range.start + i, range.start + j));
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &BandMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let kl = self.kl.max(other.kl);
        let ku = self.ku.max(other.ku);
        let mut m: f64 = 0.0;
        for i in 0..self.rows {
            for j in i.saturating_sub(kl)..(i + ku + 1).min(self.cols) {
                m = m.max((self.get(i, j) - other.get(i, j)).abs());
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|w_i A_ij - w_j A_ji|` relative to the largest `|w_i A_ij|`.
    pub fn weighted_asymmetry(&self, w: &[f64]) -> f64 {
        assert_eq!(self.rows, self.cols);
        let (mut num, mut den): (f64, f64) = (0.0, 0.0);
        for i in 0..self.rows {
            for j in self.row_cols(i) {
                let a = w[i] * self.get(i, j);
                let b = w[j] * self.get(j, i);
                num = num.max((a - b).abs());
                den = den.max(a.abs());
            }
        }
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }

    /// Non-zero entries as `(row, col, value)`.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.rows {
            for j in self.row_cols(i) {
                let v = self.get(i, j);
                if v != 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    /// Coordinate list with a `row,col,value` header; indices are shifted
    /// by `offset` so they refer to grid nodes.
    pub fn write_coo<W: io::Write>(&self, mut w: W, offset: usize) -> io::Result<()> {
        writeln!(w, "row,col,value")?;
        for (i, j, v) in self.triplets() {
            writeln!(w, "{},{},{}", i + offset, j + offset, fmt_f64(v))?;
        }
        Ok(())
    }
}

/// Solve a tridiagonal system with partial pivoting (the LAPACK `gtsv`
/// scheme). `sub` and `sup` have length `n - 1`. Returns `None` when a
/// zero pivot is met.
pub fn solve_tridiagonal<S: Scalar>(sub: &[S], diag: &[S], sup: &[S], rhs: &[S]) -> Option<Vec<S>> {
    let n = diag.len();
    assert!(sub.len() + 1 == n && sup.len() + 1 == n && rhs.len() == n);
    if n == 1 {
        return (diag[0] != S::zero()).then(|| vec![rhs[0] / diag[0]]);
    }
    let mut d = diag.to_vec();
    let mut dl = sub.to_vec();
    let mut du = sup.to_vec();
    let mut du2 = vec![S::zero(); n.saturating_sub(2)];
    let mut b = rhs.to_vec();

    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == S::zero() {
                return None;
            }
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            let bi = b[i];
            b[i + 1] -= fact * bi;
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -(fact * du2[i]);
            }
            du[i] = temp;
            let bi = b[i];
            b[i] = b[i + 1];
            b[i + 1] = bi - fact * b[i];
        }
        dl[i] = S::zero();
    }
    if d[n - 1] == S::zero() {
        return None;
    }
    let mut x = vec![S::zero(); n];
    x[n - 1] = b[n - 1] / d[n - 1];
    x[n - 2] = (b[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (b[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
    }
    Some(x)
}
