use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::LinearOperator;
use crate::{Error, Result};

/// Compressed sparse row storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CooRepr", into = "CooRepr")]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Wire form: dimensions plus 0-based `(row, col, value)` triples.
#[derive(Serialize, Deserialize)]
struct CooRepr {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TryFrom<CooRepr> for CsrMatrix {
    type Error = Error;

    fn try_from(c: CooRepr) -> Result<Self> {
        CsrMatrix::from_triplets(c.rows, c.cols, c.entries)
    }
}

impl From<CsrMatrix> for CooRepr {
    fn from(m: CsrMatrix) -> Self {
        CooRepr {
            rows: m.rows,
            cols: m.cols,
            entries: m.triplets().collect(),
        }
    }
}

impl CsrMatrix {
    /// Builds from 0-based triples. Duplicate positions and out-of-range
    /// indices are rejected; explicit zeros are kept.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = entries.into_iter().collect();
        for &(i, j, v) in &sorted {
            if i >= rows || j >= cols {
                return Err(Error::dim(format!(
                    "entry ({i}, {j}) outside a {rows}x{cols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::invalid(format!("non-finite entry at ({i}, {j})")));
            }
        }
        sorted.sort_by_key(|&(i, j, _)| (i, j));
        if let Some(w) = sorted
            .windows(2)
            .find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1))
        {
            return Err(Error::invalid(format!(
                "duplicate entry at ({}, {})",
                w[0].0, w[0].1
            )));
        }
        let mut row_ptr = vec![0usize; rows + 1];
        for &(i, _, _) in &sorted {
            row_ptr[i + 1] += 1;
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(CsrMatrix {
            rows,
            cols,
            row_ptr,
            col_idx: sorted.iter().map(|e| e.1).collect(),
            values: sorted.iter().map(|e| e.2).collect(),
        })
    }

    /// Keeps entries with `|a_ij| > 0`.
    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let mut entries = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)] != 0.0 {
                    entries.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_triplets(a.nrows(), a.ncols(), entries).expect("dense entries are unique")
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0))).expect("diagonal is unique")
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1])
                .map(move |k| (i, self.col_idx[k], self.values[k]))
        })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.triplets() {
            a[(i, j)] = v;
        }
        a
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(
            self.cols,
            self.rows,
            self.triplets().map(|(i, j, v)| (j, i, v)),
        )
        .expect("transpose keeps entries unique")
    }

    /// `AᵗA`, accumulated row by row.
    pub fn gram(&self) -> Self {
        let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for i in 0..self.rows {
            let range = self.row_ptr[i]..self.row_ptr[i + 1];
            for a in range.clone() {
                for b in range.clone() {
                    *acc.entry((self.col_idx[a], self.col_idx[b])).or_insert(0.0) +=
                        self.values[a] * self.values[b];
                }
            }
        }
        Self::from_triplets(
            self.cols,
            self.cols,
            acc.into_iter().map(|((i, j), v)| (i, j, v)),
        )
        .expect("accumulated entries are unique")
    }

    /// `A + s·I` for square `A`.
    pub fn add_identity(&self, s: f64) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::dim("shift needs a square matrix"));
        }
        let mut acc: BTreeMap<(usize, usize), f64> =
            self.triplets().map(|(i, j, v)| ((i, j), v)).collect();
        for i in 0..self.rows {
            *acc.entry((i, i)).or_insert(0.0) += s;
        }
        Self::from_triplets(
            self.rows,
            self.cols,
            acc.into_iter().map(|((i, j), v)| (i, j, v)),
        )
    }
}

impl LinearOperator for CsrMatrix {
    fn nrows(&self) -> usize {
        self.rows
    }

    fn ncols(&self) -> usize {
        self.cols
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.cols, "operand length");
        DVector::from_fn(self.rows, |i, _| {
            (self.row_ptr[i]..self.row_ptr[i + 1])
                .map(|k| self.values[k] * x[self.col_idx[k]])
                .sum()
        })
    }

    fn apply_transpose(&self, y: &DVector<f64>) -> DVector<f64> {
        assert_eq!(y.len(), self.rows, "operand length");
        let mut out = DVector::zeros(self.cols);
        for i in 0..self.rows {
            let yi = y[i];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out[self.col_idx[k]] += self.values[k] * yi;
            }
        }
        out
    }
}
