//! Linear algebra used by the solvers.
//!
//! Dense factorizations are delegated to `nalgebra`; this module fixes the
//! contracts the solvers rely on (eigenvalue ordering, orthonormality,
//! cached shifted solves) and adds the sparse storage and Krylov solvers.

mod io;
mod iterative;
mod sparse;

pub use io::{read_coordinate, read_dense, write_coordinate, write_dense};
pub use iterative::{
    cg_solve, cg_solve_from, default_lsqr_max_iters, lsqr_solve, CgOutcome, LsqrOutcome,
    LSQR_DEFAULT_TOL,
};
pub use sparse::CsrMatrix;

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Relative symmetry tolerance accepted by [`sym_eig`] and the matrix projections.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// A linear map given only through products with itself and its transpose.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn apply(&self, x: &DVector<f64>) -> DVector<f64>;
    fn apply_transpose(&self, y: &DVector<f64>) -> DVector<f64>;
}

impl LinearOperator for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self * x
    }

    fn apply_transpose(&self, y: &DVector<f64>) -> DVector<f64> {
        self.tr_mul(y)
    }
}

/// Largest absolute difference `|a_ij − a_ji|`.
pub fn max_asymmetry(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// Fails unless `a` is square and symmetric to [`SYMMETRY_TOL`] relative to
/// its largest entry.
pub fn check_symmetric(a: &DMatrix<f64>) -> Result<()> {
    if !a.is_square() {
        return Err(Error::dim(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let scale = a.amax().max(1.0);
    let asym = max_asymmetry(a);
    if asym > SYMMETRY_TOL * scale || asym.is_nan() {
        return Err(Error::NotSymmetric {
            max_asymmetry: asym,
        });
    }
    Ok(())
}

/// `(a + aᵗ)/2`.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Symmetric eigendecomposition `A = V diag(λ) Vᵗ` with `λ` ascending.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymEig {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn min_value(&self) -> f64 {
        self.values[0]
    }

    pub fn max_value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// `V f(D) Vᵗ` for a spectral function `f`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= f(self.values[j]);
        }
        scaled * self.vectors.transpose()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.reconstruct_with(|l| l)
    }
}

pub fn sym_eig(a: &DMatrix<f64>) -> Result<SymEig> {
    check_symmetric(a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(SymEig {
            values: DVector::zeros(0),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let eig = nalgebra::SymmetricEigen::new(symmetrize(a));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(SymEig { values, vectors })
}

/// Thin SVD `U = V Σ Wᵗ` of a `p×q` matrix with `p ≥ q`; singular values descending.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    /// `p×q`, orthonormal columns.
    pub left: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    /// `q×q` orthogonal.
    pub right: DMatrix<f64>,
}

impl ThinSvd {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut scaled = self.left.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= self.singular_values[j];
        }
        scaled * self.right.transpose()
    }
}

pub fn thin_svd(u: &DMatrix<f64>) -> Result<ThinSvd> {
    let (p, q) = u.shape();
    if p < q {
        return Err(Error::dim(format!(
            "thin SVD needs rows >= cols, got {p}x{q}"
        )));
    }
    if q == 0 {
        return Ok(ThinSvd {
            left: DMatrix::zeros(p, 0),
            singular_values: DVector::zeros(0),
            right: DMatrix::zeros(0, 0),
        });
    }
    let svd = u.clone().svd(true, true);
    let left = svd.u.expect("left factor requested");
    let right_t = svd.v_t.expect("right factor requested");
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    Ok(ThinSvd {
        left: DMatrix::from_fn(p, q, |r, c| left[(r, order[c])]),
        singular_values: DVector::from_iterator(q, order.iter().map(|&i| svd.singular_values[i])),
        right: DMatrix::from_fn(q, q, |r, c| right_t[(order[c], r)]),
    })
}

/// Solves `(A + ρI) x = b` from a cached eigendecomposition of `A`:
/// `x = V (D + ρI)⁻¹ Vᵗ b`.
pub fn shifted_solve(eig: &SymEig, rho: f64, b: &DVector<f64>) -> Result<DVector<f64>> {
    if b.len() != eig.dim() {
        return Err(Error::dim(format!(
            "right-hand side has length {}, system has order {}",
            b.len(),
            eig.dim()
        )));
    }
    if eig.dim() > 0 && eig.min_value() + rho <= 0.0 {
        return Err(Error::Singular(format!(
            "shifted eigenvalue {:e} + {:e} is not positive",
            eig.min_value(),
            rho
        )));
    }
    let mut coef = eig.vectors.tr_mul(b);
    for (c, l) in coef.iter_mut().zip(eig.values.iter()) {
        *c /= l + rho;
    }
    Ok(&eig.vectors * coef)
}

/// Solves a square dense system, refusing numerically singular matrices.
pub fn dense_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if !a.is_square() || a.nrows() != b.len() {
        return Err(Error::dim(format!(
            "system {}x{} with right-hand side of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    if a.nrows() == 0 {
        return Ok(DVector::zeros(0));
    }
    let lu = a.clone().full_piv_lu();
    let u = lu.u();
    let diag = u.diagonal();
    let max_pivot = diag.amax();
    let min_pivot = diag.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if max_pivot == 0.0 || min_pivot <= 1e-13 * max_pivot {
        return Err(Error::Singular(format!(
            "pivot ratio {:e}",
            min_pivot / max_pivot.max(f64::MIN_POSITIVE)
        )));
    }
    lu.solve(b)
        .ok_or_else(|| Error::Singular("LU solve failed".into()))
}
