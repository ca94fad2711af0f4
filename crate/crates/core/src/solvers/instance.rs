use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::linalg::{CsrMatrix, LinearOperator};
use crate::{Error, Result};

/// A constraint or data matrix stored densely or sparsely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "lowercase")]
pub enum Matrix {
    Dense {
        #[serde(with = "dense_rows")]
        data: DMatrix<f64>,
    },
    Sparse {
        #[serde(flatten)]
        data: CsrMatrix,
    },
}

impl From<DMatrix<f64>> for Matrix {
    fn from(data: DMatrix<f64>) -> Self {
        Matrix::Dense { data }
    }
}

impl From<CsrMatrix> for Matrix {
    fn from(data: CsrMatrix) -> Self {
        Matrix::Sparse { data }
    }
}

impl Matrix {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Matrix::Dense { data } => data.shape(),
            Matrix::Sparse { data } => data.shape(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Matrix::Sparse { .. })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Matrix::Dense { data } => data.clone(),
            Matrix::Sparse { data } => data.to_dense(),
        }
    }

    pub fn to_sparse(&self) -> CsrMatrix {
        match self {
            Matrix::Dense { data } => CsrMatrix::from_dense(data),
            Matrix::Sparse { data } => data.clone(),
        }
    }

    pub fn as_operator(&self) -> &dyn LinearOperator {
        match self {
            Matrix::Dense { data } => data,
            Matrix::Sparse { data } => data,
        }
    }
}

impl LinearOperator for Matrix {
    fn nrows(&self) -> usize {
        self.shape().0
    }

    fn ncols(&self) -> usize {
        self.shape().1
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.as_operator().apply(x)
    }

    fn apply_transpose(&self, y: &DVector<f64>) -> DVector<f64> {
        self.as_operator().apply_transpose(y)
    }
}

/// Dense matrices as nested row arrays.
pub mod dense_rows {
    use super::*;

    pub fn serialize<S: Serializer>(
        m: &DMatrix<f64>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<DMatrix<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(serde::de::Error::custom("ragged matrix rows"));
        }
        Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
    }
}

/// Vectors as flat arrays.
pub mod flat_vec {
    use super::*;

    pub fn serialize<S: Serializer>(
        v: &DVector<f64>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<DVector<f64>, D::Error> {
        Ok(DVector::from_vec(Vec::deserialize(d)?))
    }
}

pub(crate) fn check_len(what: &str, v: &DVector<f64>, expect: usize) -> Result<()> {
    if v.len() == expect {
        Ok(())
    } else {
        Err(Error::dim(format!(
            "{what} has length {}, expected {expect}",
            v.len()
        )))
    }
}

pub(crate) fn check_finite(what: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} contains non-finite values")))
    }
}

pub(crate) fn check_matrix(what: &str, m: &Matrix) -> Result<()> {
    match m {
        Matrix::Dense { data } => check_finite(what, data.as_slice()),
        Matrix::Sparse { .. } => Ok(()),
    }
}
