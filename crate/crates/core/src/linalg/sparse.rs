//! Compressed-row sparse matrices assembled from triplets.

use crate::error::{Error, Result};

/// Triplet accumulator; duplicates are summed on [`TripletBuilder::finalize`].
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> TripletBuilder {
        TripletBuilder { nrows, ncols, entries: Vec::new() }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> TripletBuilder {
        TripletBuilder { nrows, ncols, entries: Vec::with_capacity(cap) }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) -> Result<()> {
        if i >= self.nrows {
            return Err(Error::IndexOutOfRange { index: i, limit: self.nrows });
        }
        if j >= self.ncols {
            return Err(Error::IndexOutOfRange { index: j, limit: self.ncols });
        }
        self.entries.push((i, j, v));
        Ok(())
    }

    /// Unchecked insertion for assembly loops whose indices come from dof maps.
    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.nrows && j < self.ncols);
        self.entries.push((i, j, v));
    }

    /// Bucket by row, then order each row by column (stable, so duplicates
    /// are summed in insertion order).
    pub fn finalize(self) -> SparseMatrix {
        let mut start = vec![0usize; self.nrows + 1];
        for &(i, _, _) in &self.entries {
            start[i + 1] += 1;
        }
        for i in 0..self.nrows {
            start[i + 1] += start[i];
        }
        let mut next = start.clone();
        let mut bucket = vec![(0usize, 0.0f64); self.entries.len()];
        for (i, j, v) in self.entries {
            bucket[next[i]] = (j, v);
            next[i] += 1;
        }
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx: Vec<usize> = Vec::with_capacity(bucket.len());
        let mut values: Vec<f64> = Vec::with_capacity(bucket.len());
        for i in 0..self.nrows {
            let row = &mut bucket[start[i]..start[i + 1]];
            row.sort_by_key(|&(j, _)| j);
            let mut last = None;
            for &(j, v) in row.iter() {
                if last == Some(j) {
                    *values.last_mut().expect("entry present") += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                    last = Some(j);
                }
            }
            row_ptr[i + 1] = col_idx.len();
        }
        SparseMatrix { nrows: self.nrows, ncols: self.ncols, row_ptr, col_idx, values }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseMatrix {
    pub fn identity(n: usize) -> SparseMatrix {
        SparseMatrix { nrows: n, ncols: n, row_ptr: (0..=n).collect(), col_idx: (0..n).collect(), values: vec![1.0; n] }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn transpose_matvec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.nrows);
        let mut out = vec![0.0; self.ncols];
        for (i, &yi) in y.iter().enumerate() {
            for (j, v) in self.row(i) {
                out[j] += v * yi;
            }
        }
        out
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut b = TripletBuilder::with_capacity(self.ncols, self.nrows, self.nnz());
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                b.push(j, i, v);
            }
        }
        b.finalize()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                d[(i, j)] += v;
            }
        }
        d
    }

    /// Replace rows and columns flagged in `mask` by identity rows/columns.
    pub fn constrain_symmetric(&self, mask: &[bool]) -> SparseMatrix {
        let mut b = TripletBuilder::with_capacity(self.nrows, self.ncols, self.nnz());
        for i in 0..self.nrows {
            if mask[i] {
                b.push(i, i, 1.0);
                continue;
            }
            for (j, v) in self.row(i) {
                if j < mask.len() && mask[j] {
                    continue;
                }
                b.push(i, j, v);
            }
        }
        b.finalize()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let mut b = TripletBuilder::new(2, 2);
        b.add(0, 0, 1.0).unwrap();
        b.add(0, 0, 1.0).unwrap();
        b.add(1, 0, 3.0).unwrap();
        let m = b.finalize();
        assert_eq!(m.get(0, 0), 2.0);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 1), 0.0);
    }

    #[test]
    fn out_of_bounds() {
        let mut b = TripletBuilder::new(2, 3);
        assert!(b.add(2, 0, 1.0).is_err());
        assert!(b.add(0, 3, 1.0).is_err());
    }

    #[test]
    fn identity_matvec() {
        let x = vec![1.0, -2.0, 3.5];
        assert_eq!(SparseMatrix::identity(3).matvec(&x), x);
    }

    #[test]
    fn constrain_rows_and_columns() {
        let mut b = TripletBuilder::new(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                b.push(i, j, (1 + i + 3 * j) as f64);
            }
        }
        let m = b.finalize().constrain_symmetric(&[false, true, false]);
        assert_eq!(m.get(1, 1), 1.0);
        assert_eq!(m.get(1, 0), 0.0);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.get(2, 2), 9.0);
    }
}
