use serde::{Deserialize, Serialize};

use crate::complex::SparseOperator;
use crate::error::{Error, Result};

/// Row-major matrix of 64-bit reals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Rejects wrong lengths and non-finite values.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                "dense matrix",
                format!("{} values for a {rows}x{cols} matrix", data.len()),
            ));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("matrix entry ({}, {})", i / cols.max(1), i % cols.max(1))));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::shape("dense matrix", "ragged rows"));
        }
        Self::from_vec(rows.len(), cols, rows.concat())
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::shape(
                "matmul",
                format!("{}x{} * {}x{}", self.rows, self.cols, rhs.rows, rhs.cols),
            ));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · rhs` without materialising the transpose.
    pub fn t_matmul(&self, rhs: &DenseMatrix) -> Result<Self> {
        if self.rows != rhs.rows {
            return Err(Error::shape(
                "matmul",
                format!("({}x{})ᵀ * {}x{}", self.rows, self.cols, rhs.rows, rhs.cols),
            ));
        }
        let mut out = Self::zeros(self.cols, rhs.cols);
        for k in 0..self.rows {
            for i in 0..self.cols {
                let a = self.data[k * self.cols + i];
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self · rhsᵀ`.
    pub fn matmul_t(&self, rhs: &DenseMatrix) -> Result<Self> {
        if self.cols != rhs.cols {
            return Err(Error::shape(
                "matmul",
                format!("{}x{} * ({}x{})ᵀ", self.rows, self.cols, rhs.rows, rhs.cols),
            ));
        }
        let mut out = Self::zeros(self.rows, rhs.rows);
        for i in 0..self.rows {
            for j in 0..rhs.rows {
                out.data[i * rhs.rows + j] = self.row(i).iter().zip(rhs.row(j)).map(|(a, b)| a * b).sum();
            }
        }
        Ok(out)
    }

    /// `op · self` for a sparse left operand.
    pub fn sparse_left(op: &SparseOperator, rhs: &DenseMatrix) -> Result<Self> {
        if op.cols() != rhs.rows {
            return Err(Error::shape(
                "sparse_dense_matmul",
                format!("{}x{} * {}x{}", op.rows(), op.cols(), rhs.rows, rhs.cols),
            ));
        }
        let mut out = Self::zeros(op.rows(), rhs.cols);
        for &(r, c, v) in op.entries() {
            let src = &rhs.data[c * rhs.cols..(c + 1) * rhs.cols];
            for (o, s) in out.data[r * rhs.cols..(r + 1) * rhs.cols].iter_mut().zip(src) {
                *o += v * s;
            }
        }
        Ok(out)
    }

    /// `opᵀ · self` for a sparse operator.
    pub fn sparse_left_t(op: &SparseOperator, rhs: &DenseMatrix) -> Result<Self> {
        if op.rows() != rhs.rows {
            return Err(Error::shape(
                "sparse_dense_matmul",
                format!("({}x{})ᵀ * {}x{}", op.rows(), op.cols(), rhs.rows, rhs.cols),
            ));
        }
        let mut out = Self::zeros(op.cols(), rhs.cols);
        for &(r, c, v) in op.entries() {
            let src = &rhs.data[r * rhs.cols..(r + 1) * rhs.cols];
            for (o, s) in out.data[c * rhs.cols..(c + 1) * rhs.cols].iter_mut().zip(src) {
                *o += v * s;
            }
        }
        Ok(out)
    }

    pub fn add(&self, rhs: &DenseMatrix) -> Result<Self> {
        if self.shape() != rhs.shape() {
            return Err(Error::shape(
                "add",
                format!("{}x{} + {}x{}", self.rows, self.cols, rhs.rows, rhs.cols),
            ));
        }
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        Ok(Self::from_raw(self.rows, self.cols, data))
    }

    pub(crate) fn add_assign(&mut self, rhs: &DenseMatrix) {
        debug_assert_eq!(self.shape(), rhs.shape());
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.rows, self.cols, self.data.iter().map(|&v| f(v)).collect())
    }

    /// Column-wise concatenation.
    pub fn concat_cols(parts: &[&DenseMatrix]) -> Result<Self> {
        let rows = parts.first().map_or(0, |p| p.rows);
        if parts.iter().any(|p| p.rows != rows) {
            let shapes: Vec<_> = parts.iter().map(|p| format!("{}x{}", p.rows, p.cols)).collect();
            return Err(Error::shape("concat_cols", shapes.join(", ")));
        }
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for p in parts {
                data.extend_from_slice(p.row(r));
            }
        }
        Ok(Self::from_raw(rows, cols, data))
    }

    /// Row-wise stacking.
    pub fn vstack(parts: &[&DenseMatrix]) -> Result<Self> {
        let cols = parts.first().map_or(0, |p| p.cols);
        if parts.iter().any(|p| p.cols != cols) {
            let shapes: Vec<_> = parts.iter().map(|p| format!("{}x{}", p.rows, p.cols)).collect();
            return Err(Error::shape("vstack", shapes.join(", ")));
        }
        let rows = parts.iter().map(|p| p.rows).sum();
        let data = parts.iter().flat_map(|p| p.data.iter().copied()).collect();
        Ok(Self::from_raw(rows, cols, data))
    }

    /// Gathers the listed rows, in order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.rows) {
            return Err(Error::shape("row_slice", format!("row {bad} of {}", self.rows)));
        }
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Ok(Self::from_raw(rows.len(), self.cols, data))
    }

    /// Contiguous column range `[start, start + len)`.
    pub fn col_range(&self, start: usize, len: usize) -> Self {
        let mut data = Vec::with_capacity(self.rows * len);
        for r in 0..self.rows {
            data.extend_from_slice(&self.row(r)[start..start + len]);
        }
        Self::from_raw(self.rows, len, data)
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Bitwise comparison, distinguishing `0.0` from `-0.0`.
    pub fn bitwise_eq(&self, other: &DenseMatrix) -> bool {
        self.shape() == other.shape()
            && self.data.iter().zip(&other.data).all(|(a, b)| a.to_bits() == b.to_bits())
    }

    /// Index of the largest entry per row; ties go to the lowest column.
    pub fn argmax_rows(&self) -> Vec<usize> {
        (0..self.rows)
            .map(|r| {
                let row = self.row(r);
                let mut best = 0;
                for (c, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = c;
                    }
                }
                best
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert!(DenseMatrix::from_vec(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(DenseMatrix::from_vec(1, 2, vec![1.0]).is_err());
    }

    #[test]
    fn transposed_products_agree() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[vec![1.0, -1.0], vec![0.5, 2.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(a.t_matmul(&b).unwrap(), a.transpose().matmul(&b).unwrap());
        assert_eq!(a.matmul_t(&b).unwrap(), a.matmul(&b.transpose()).unwrap());
    }

    #[test]
    fn argmax_ties_go_low() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 2.0]]).unwrap();
        assert_eq!(m.argmax_rows(), vec![0, 1]);
    }
}
