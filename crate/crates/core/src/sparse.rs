//! Sparse matrices tagged with the function spaces they map between.

use std::io::{Read, Write};

use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::error::{Error, Result};
use crate::space::Space;

#[derive(Clone, Debug, PartialEq)]
pub struct SparseOp {
    pub source: Space,
    pub target: Space,
    pub symmetric: bool,
    mat: CsrMatrix<f64>,
}

impl SparseOp {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(
        source: Space,
        target: Space,
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Self {
        let mut coo = CooMatrix::new(nrows, ncols);
        for &(r, c, v) in triplets {
            coo.push(r, c, v);
        }
        SparseOp {
            source,
            target,
            symmetric: false,
            mat: CsrMatrix::from(&coo),
        }
    }

    pub fn from_csr(source: Space, target: Space, mat: CsrMatrix<f64>) -> Self {
        SparseOp {
            source,
            target,
            symmetric: false,
            mat,
        }
    }

    pub fn diagonal(space: Space, diag: &[f64]) -> Self {
        let n = diag.len();
        let mat = CsrMatrix::try_from_csr_data(n, n, (0..=n).collect(), (0..n).collect(), diag.to_vec())
            .expect("valid diagonal pattern");
        SparseOp {
            source: space,
            target: space,
            symmetric: true,
            mat,
        }
    }

    pub fn with_symmetric(mut self, symmetric: bool) -> Self {
        self.symmetric = symmetric;
        self
    }

    pub fn csr(&self) -> &CsrMatrix<f64> {
        &self.mat
    }

    pub fn nrows(&self) -> usize {
        self.mat.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.mat.ncols()
    }

    pub fn nnz(&self) -> usize {
        self.mat.nnz()
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows()];
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols(), "operand length for {}->{}", self.source, self.target);
        assert_eq!(y.len(), self.nrows());
        let offsets = self.mat.row_offsets();
        let cols = self.mat.col_indices();
        let vals = self.mat.values();
        for (r, yr) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in offsets[r]..offsets[r + 1] {
                s += vals[k] * x[cols[k]];
            }
            *yr = s;
        }
    }

    /// `y = A^T x`.
    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows());
        let mut y = vec![0.0; self.ncols()];
        for (r, row) in self.mat.row_iter().enumerate() {
            for (&c, &v) in row.col_indices().iter().zip(row.values()) {
                y[c] += v * x[r];
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        SparseOp {
            source: self.target,
            target: self.source,
            symmetric: self.symmetric,
            mat: self.mat.transpose(),
        }
    }

    /// `self * rhs`, i.e. apply `rhs` first.
    pub fn compose(&self, rhs: &SparseOp) -> Self {
        assert_eq!(
            self.ncols(),
            rhs.nrows(),
            "cannot compose {}->{} after {}->{}",
            self.source,
            self.target,
            rhs.source,
            rhs.target
        );
        SparseOp {
            source: rhs.source,
            target: self.target,
            symmetric: false,
            mat: &self.mat * &rhs.mat,
        }
    }

    /// `self + s * rhs`.
    pub fn add_scaled(&self, s: f64, rhs: &SparseOp) -> Self {
        assert_eq!((self.nrows(), self.ncols()), (rhs.nrows(), rhs.ncols()));
        let scaled = &rhs.mat * s;
        SparseOp {
            source: self.source,
            target: self.target,
            symmetric: self.symmetric && rhs.symmetric,
            mat: &self.mat + &scaled,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        SparseOp {
            mat: &self.mat * s,
            ..self.clone()
        }
    }

    /// `diag(left) * A * diag(right)`; either side may be omitted.
    pub fn scale_rows_cols(&self, left: Option<&[f64]>, right: Option<&[f64]>) -> Self {
        let mut out = self.clone();
        let (offsets, cols, vals) = out.mat.csr_data_mut();
        for r in 0..offsets.len() - 1 {
            for k in offsets[r]..offsets[r + 1] {
                if let Some(l) = left {
                    vals[k] *= l[r];
                }
                if let Some(rt) = right {
                    vals[k] *= rt[cols[k]];
                }
            }
        }
        out.symmetric = self.symmetric && left.is_none() && right.is_none();
        out
    }

    pub fn diag(&self) -> Vec<f64> {
        let n = self.nrows().min(self.ncols());
        let mut d = vec![0.0; n];
        for (r, row) in self.mat.row_iter().enumerate().take(n) {
            if let Some(k) = row.col_indices().iter().position(|&c| c == r) {
                d[r] = row.values()[k];
            }
        }
        d
    }

    /// Nonzero `(col, value)` pairs of row `r`.
    pub fn row(&self, r: usize) -> Vec<(usize, f64)> {
        let row = self.mat.row(r);
        row.col_indices().iter().copied().zip(row.values().iter().copied()).collect()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let row = self.mat.row(r);
        row.col_indices()
            .iter()
            .position(|&cc| cc == c)
            .map(|k| row.values()[k])
            .unwrap_or(0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.values().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A - B|` over the union of both stencils.
    pub fn max_abs_diff(&self, other: &SparseOp) -> f64 {
        self.add_scaled(-1.0, other).max_abs()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.mat.row_iter().map(|r| r.values().iter().sum()).collect()
    }

    /// Dense copy; intended for small meshes and test oracles.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.nrows(), self.ncols());
        for (r, row) in self.mat.row_iter().enumerate() {
            for (&c, &v) in row.col_indices().iter().zip(row.values()) {
                d[(r, c)] += v;
            }
        }
        d
    }

    /// Removes stored entries with `|v| <= tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        let mut trip = Vec::with_capacity(self.nnz());
        for (r, row) in self.mat.row_iter().enumerate() {
            for (&c, &v) in row.col_indices().iter().zip(row.values()) {
                if v.abs() > tol {
                    trip.push((r, c, v));
                }
            }
        }
        SparseOp::from_triplets(self.source, self.target, self.nrows(), self.ncols(), &trip)
            .with_symmetric(self.symmetric)
    }

    /// Binary block: source, target, symmetric flag, dims, CSR arrays.
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(&[self.source.code(), self.target.code(), u8::from(self.symmetric), 0])?;
        for n in [self.nrows(), self.ncols(), self.nnz()] {
            w.write_all(&(n as u64).to_le_bytes())?;
        }
        for &o in self.mat.row_offsets() {
            w.write_all(&(o as u64).to_le_bytes())?;
        }
        for &c in self.mat.col_indices() {
            w.write_all(&(c as u64).to_le_bytes())?;
        }
        for &v in self.mat.values() {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut tag = [0u8; 4];
        r.read_exact(&mut tag)?;
        let mut u64s = |n: usize| -> Result<Vec<usize>> {
            let mut buf = vec![0u8; 8 * n];
            r.read_exact(&mut buf)?;
            Ok(buf.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap()) as usize).collect())
        };
        let dims = u64s(3)?;
        let (nrows, ncols, nnz) = (dims[0], dims[1], dims[2]);
        let offsets = u64s(nrows + 1)?;
        let cols = u64s(nnz)?;
        let mut buf = vec![0u8; 8 * nnz];
        r.read_exact(&mut buf)?;
        let vals = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        let mat = CsrMatrix::try_from_csr_data(nrows, ncols, offsets, cols, vals)
            .map_err(|e| Error::Format(format!("invalid sparse block: {e}")))?;
        Ok(SparseOp {
            source: Space::from_code(tag[0])?,
            target: Space::from_code(tag[1])?,
            symmetric: tag[2] != 0,
            mat,
        })
    }
}
