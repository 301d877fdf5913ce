//! Dense row-major matrices and named column layouts.

use crate::error::{Error, Result};
use std::ops::Range;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(Matrix { rows: rows.len(), cols, data: rows.concat() })
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn add_to(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] += v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `self * x` for a column vector `x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch(format!("matrix has {} columns, vector has {}", self.cols, x.len())));
        }
        Ok((0..self.rows).map(|r| dot(self.row(r), x)).collect())
    }

    pub fn matmul(&self, o: &Matrix) -> Result<Matrix> {
        if self.cols != o.rows {
            return Err(Error::DimensionMismatch(format!("{}x{} times {}x{}", self.rows, self.cols, o.rows, o.cols)));
        }
        let mut out = Matrix::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a != 0.0 {
                    for j in 0..o.cols {
                        out.data[i * o.cols + j] += a * o.get(k, j);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix { data: self.data.iter().map(|v| v * s).collect(), ..self.clone() }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Same matrix with `extra` zero columns appended.
    pub fn widen(&self, cols: usize) -> Matrix {
        assert!(cols >= self.cols);
        let mut out = Matrix::zeros(self.rows, cols);
        for r in 0..self.rows {
            out.row_mut(r)[..self.cols].copy_from_slice(self.row(r));
        }
        out
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.cols, "row width");
        self.data.extend_from_slice(row);
        self.rows += 1;
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Slot {
    pub name: String,
    pub start: usize,
    pub len: usize,
    /// Largest magnitude any entry takes on valid inputs.
    pub bound: f64,
    pub desc: String,
}

impl Slot {
    pub fn range(&self) -> Range<usize> {
        self.start..self.start + self.len
    }
}

/// Named, disjoint column ranges that tile `0..width`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SlotLayout {
    pub slots: Vec<Slot>,
}

impl SlotLayout {
    pub fn new() -> Self {
        SlotLayout::default()
    }

    pub fn width(&self) -> usize {
        self.slots.last().map_or(0, |s| s.start + s.len)
    }

    /// Appends a slot and returns its first column.
    pub fn add(&mut self, name: &str, len: usize, bound: f64, desc: &str) -> usize {
        assert!(self.find(name).is_none(), "duplicate slot {name}");
        let start = self.width();
        self.slots.push(Slot { name: name.into(), start, len, bound, desc: desc.into() });
        start
    }

    pub fn find(&self, name: &str) -> Option<&Slot> {
        self.slots.iter().find(|s| s.name == name)
    }

    pub fn slot(&self, name: &str) -> &Slot {
        self.find(name).unwrap_or_else(|| panic!("no slot named {name}"))
    }

    pub fn col(&self, name: &str) -> usize {
        self.slot(name).start
    }

    pub fn range(&self, name: &str) -> Range<usize> {
        self.slot(name).range()
    }

    pub fn validate(&self) -> Result<()> {
        let mut end = 0;
        for s in &self.slots {
            if s.start != end {
                return Err(Error::DimensionMismatch(format!("slot {} starts at {} not {}", s.name, s.start, end)));
            }
            end += s.len;
        }
        Ok(())
    }
}

/// A sequence of stream rows with its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorBundle {
    pub data: Matrix,
    pub layout: SlotLayout,
}

impl TensorBundle {
    pub fn new(data: Matrix, layout: SlotLayout) -> Result<Self> {
        layout.validate()?;
        if layout.width() != data.cols {
            return Err(Error::DimensionMismatch(format!("layout width {} vs data {}", layout.width(), data.cols)));
        }
        Ok(TensorBundle { data, layout })
    }

    pub fn get(&self, row: usize, name: &str) -> f64 {
        self.data.get(row, self.layout.col(name))
    }

    pub fn slice(&self, row: usize, name: &str) -> &[f64] {
        &self.data.row(row)[self.layout.range(name)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_products() {
        let mut l = SlotLayout::new();
        assert_eq!(l.add("a", 3, 1.0, ""), 0);
        assert_eq!(l.add("b", 2, 1.0, ""), 3);
        assert_eq!(l.range("b"), 3..5);
        l.validate().unwrap();
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(m.apply(&[1.0, 1.0]).unwrap(), vec![3.0, 7.0]);
        assert_eq!(m.matmul(&Matrix::identity(2)).unwrap(), m);
        assert!(m.apply(&[1.0]).is_err());
        assert!(TensorBundle::new(Matrix::zeros(1, 4), l).is_err());
    }
}
