//! Dense row-major linear algebra: centering, norms, Gram products,
//! Cholesky solves and rank-one deflation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// Observations × variables matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DataMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix must be non-empty, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::DimensionMismatch(format!(
                "row {} has {} values, expected {p}",
                i + 1,
                rows[i].len()
            )));
        }
        Self::new(n, p, rows.concat())
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let p = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::DimensionMismatch("ragged columns".into()));
        }
        let mut data = vec![0.0; n * p];
        for (j, c) in columns.iter().enumerate() {
            for (i, v) in c.iter().enumerate() {
                data[i * p + j] = *v;
            }
        }
        Self::new(n, p, data)
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    pub fn select_rows(&self, idx: &[usize]) -> DataMatrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        DataMatrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn transpose(&self) -> DataMatrix {
        let mut data = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        DataMatrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// `X v`
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        self.rows_iter().map(|r| dot(r, v)).collect()
    }

    /// `Xᵀ v`
    pub fn tmul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &vi) in self.rows_iter().zip(v) {
            if vi != 0.0 {
                axpy(vi, r, &mut out);
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm_l2(&self.data)
    }

    /// `XᵀX`, P×P.
    pub fn gram(&self) -> SquareMatrix {
        let xt = self.transpose();
        let p = self.cols;
        let mut g = vec![0.0; p * p];
        par::fill_rows(&mut g, p, |i, row| {
            let ci = xt.row(i);
            for (j, slot) in row.iter_mut().enumerate().skip(i) {
                *slot = dot(ci, xt.row(j));
            }
        });
        mirror_upper(&mut g, p);
        SquareMatrix { n: p, data: g }
    }

    /// `XXᵀ`, N×N.
    pub fn row_gram(&self) -> SquareMatrix {
        let n = self.rows;
        let mut k = vec![0.0; n * n];
        par::fill_rows(&mut k, n, |i, row| {
            let ri = self.row(i);
            for (j, slot) in row.iter_mut().enumerate().skip(i) {
                *slot = dot(ri, self.row(j));
            }
        });
        mirror_upper(&mut k, n);
        SquareMatrix { n, data: k }
    }

    pub(crate) fn scale_row(&mut self, i: usize, factor: f64) {
        self.row_mut(i).iter_mut().for_each(|v| *v *= factor);
    }

    fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }
}

fn mirror_upper(a: &mut [f64], n: usize) {
    for i in 0..n {
        for j in 0..i {
            a[i * n + j] = a[j * n + i];
        }
    }
}

/// Square dense matrix; used for symmetric Gram systems and small triangular solves.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

pub type SymmetricMatrix = SquareMatrix;

impl SquareMatrix {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("matrix is not square".into()));
        }
        Ok(Self {
            n,
            data: rows.concat(),
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.data.chunks_exact(self.n).map(|r| dot(r, v)).collect()
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.data.iter_mut().for_each(|v| *v *= factor);
        self
    }

    pub fn add_diagonal(mut self, shift: f64) -> Self {
        for i in 0..self.n {
            self.data[i * self.n + i] += shift;
        }
        self
    }

    pub fn max_diagonal(&self) -> f64 {
        (0..self.n)
            .map(|i| self.get(i, i).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|a_ij − a_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        if scale > 0.0 {
            worst / scale
        } else {
            0.0
        }
    }
}

/// Relative pivot tolerance for the Cholesky factorization.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Lower-triangular Cholesky factor `A = LLᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    pub fn factor(a: &SymmetricMatrix) -> Result<Self> {
        let n = a.n;
        let tolerance = PIVOT_TOLERANCE * a.max_diagonal();
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let d = a.get(j, j) - dot(&l[j * n..j * n + j], &l[j * n..j * n + j]);
            if !(d > tolerance) {
                return Err(Error::SingularMatrix {
                    index: j,
                    pivot: d,
                    tolerance,
                });
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in (j + 1)..n {
                let s = dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
                l[i * n + j] = (a.get(i, j) - s) / d;
            }
        }
        Ok(Self { n, lower: l })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let s = dot(&self.lower[i * n..i * n + i], &y[..i]);
            y[i] = (y[i] - s) / self.lower[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.lower[k * n + i] * y[k];
            }
            y[i] = s / self.lower[i * n + i];
        }
        y
    }
}

/// Solve `A x = b` for symmetric positive definite `A`.
pub fn solve_spd(a: &SymmetricMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.n {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side of length {} for a {}x{} system",
            b.len(),
            a.n,
            a.n
        )));
    }
    Ok(Cholesky::factor(a)?.solve(b))
}

/// Column means retained from training data plus the response mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenteringStats {
    pub col_means: Vec<f64>,
    pub y_mean: f64,
}

/// Subtract column means. Returns the centered matrix and the removed means.
pub fn mean_center(x: &DataMatrix) -> (DataMatrix, Vec<f64>) {
    let n = x.rows as f64;
    let mut means = vec![0.0; x.cols];
    for r in x.rows_iter() {
        axpy(1.0, r, &mut means);
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut out = x.clone();
    for i in 0..out.rows {
        for (v, m) in out.row_mut(i).iter_mut().zip(&means) {
            *v -= m;
        }
    }
    (out, means)
}

pub fn center_vector(y: &[f64]) -> (Vec<f64>, f64) {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    (y.iter().map(|v| v - mean).collect(), mean)
}

/// Center both `X` and `y`, returning the statistics needed to predict on raw inputs.
pub fn center_xy(x: &DataMatrix, y: &[f64]) -> Result<(DataMatrix, Vec<f64>, CenteringStats)> {
    if x.rows != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "X has {} rows but y has {} entries",
            x.rows,
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("response"));
    }
    let (xc, col_means) = mean_center(x);
    let (yc, y_mean) = center_vector(y);
    Ok((xc, yc, CenteringStats { col_means, y_mean }))
}

/// Add the stored means back onto a centered matrix.
pub fn uncenter(xc: &DataMatrix, col_means: &[f64]) -> DataMatrix {
    let mut out = xc.clone();
    for i in 0..out.rows {
        for (v, m) in out.row_mut(i).iter_mut().zip(col_means) {
            *v += m;
        }
    }
    out
}

/// Remove the projection of every column onto `t`: `X − t (tᵀt)⁻¹ tᵀX`.
pub fn deflate(x: &DataMatrix, t: &[f64]) -> Result<DataMatrix> {
    let mut out = x.clone();
    deflate_in_place(&mut out, t)?;
    Ok(out)
}

pub(crate) fn deflate_in_place(x: &mut DataMatrix, t: &[f64]) -> Result<()> {
    if t.len() != x.rows {
        return Err(Error::DimensionMismatch(format!(
            "score of length {} for {} rows",
            t.len(),
            x.rows
        )));
    }
    let tt = dot(t, t);
    if !(tt > 0.0) {
        return Err(Error::invalid("t", "zero score vector"));
    }
    let mut loading = x.tmul_vec(t);
    loading.iter_mut().for_each(|v| *v /= tt);
    for (i, &ti) in t.iter().enumerate() {
        if ti != 0.0 {
            axpy(-ti, &loading, x.row_mut(i));
        }
    }
    Ok(())
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm_l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn norm_l2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}
