use nalgebra::{DMatrix, DVector};

use super::{
    complementary_pair, keep_largest, kinship_part, project_lorentz, project_sphere_orthant,
    project_stiefel, psd_part, AffineProjector, SparsityMode, SplittingProjector, SplittingRoute,
};
use crate::linalg::{max_asymmetry, sym_eig, symmetrize};

/// Absolute tolerance on defining residuals used by membership predicates.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// A constraint set acting on flat vectors. Matrix sets read their argument
/// as a column-major flattening.
///
/// Matrix sets whose members are symmetric project the symmetric part of
/// their input. Since symmetric and antisymmetric matrices are orthogonal,
/// that is the exact Frobenius projection from the full matrix space.
pub trait ProjectionOperator: Send + Sync {
    fn name(&self) -> &'static str;

    /// Length of the flat vectors this set lives in.
    fn dim(&self) -> usize;

    fn project(&self, x: &DVector<f64>) -> DVector<f64>;

    fn contains(&self, x: &DVector<f64>, tol: f64) -> bool;

    fn distance(&self, x: &DVector<f64>) -> f64 {
        (x - self.project(x)).norm()
    }

    /// Whether the set is convex, so its projection is single valued and
    /// nonexpansive.
    fn is_convex(&self) -> bool;
}

fn as_matrix(x: &DVector<f64>, rows: usize, cols: usize) -> DMatrix<f64> {
    assert_eq!(x.len(), rows * cols, "flattened matrix length");
    DMatrix::from_column_slice(rows, cols, x.as_slice())
}

fn flatten(m: DMatrix<f64>) -> DVector<f64> {
    let n = m.len();
    m.reshape_generic(nalgebra::Dyn(n), nalgebra::Const::<1>)
}

#[derive(Debug, Clone, Copy)]
pub struct Nonnegative {
    pub dim: usize,
}

impl ProjectionOperator for Nonnegative {
    fn name(&self) -> &'static str {
        "nonnegative orthant"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        super::project_nonnegative(x)
    }

    fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        x.iter().all(|&v| v >= -tol)
    }

    fn is_convex(&self) -> bool {
        true
    }
}

/// `lower ≤ x ≤ upper` componentwise.
#[derive(Debug, Clone)]
pub struct BoxSet {
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl ProjectionOperator for BoxSet {
    fn name(&self) -> &'static str {
        "box"
    }

    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(x.len(), |i, _| x[i].clamp(self.lower[i], self.upper[i]))
    }

    fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        (0..x.len()).all(|i| x[i] >= self.lower[i] - tol && x[i] <= self.upper[i] + tol)
    }

    fn is_convex(&self) -> bool {
        true
    }
}

/// Positive semidefinite `n×n` matrices.
#[derive(Debug, Clone, Copy)]
pub struct PsdCone {
    pub n: usize,
}

impl ProjectionOperator for PsdCone {
    fn name(&self) -> &'static str {
        "PSD cone"
    }

    fn dim(&self) -> usize {
        self.n * self.n
    }

    fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        flatten(psd_part(&as_matrix(x, self.n, self.n)))
    }

    fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        let m = as_matrix(x, self.n, self.n);
        max_asymmetry(&m) <= tol
            && sym_eig(&symmetrize(&m)).is_ok_and(|e| e.dim() == 0 || e.min_value() >= -tol)
    }

    fn is_convex(&self) -> bool {
        true
    }
}

/// `{(w, r) : ‖w‖ ≤ r}`; the last coordinate is `r`.
#[derive(Debug, Clone, Copy)]
pub struct LorentzCone {
    pub dim: usize,
}

impl ProjectionOperator for LorentzCone {
    fn name(&self) -> &'static str {
        "Lorentz cone"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        let k = x.len() - 1;
        let (w, r) = project_lorentz(&x.rows(0, k).into_owned(), x[k]);
        w.insert_row(k, r)
    }

    fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        let k = x.len() - 1;
        x.rows(0, k).norm() <= x[k] + tol
    }

    fn is_convex(&self) -> bool {
        true
    }
}

/// Unit sphere intersected with the nonnegative orthant.
#[derive(Debug, Clone, Copy)]
pub struct SphereOrthant {
    pub dim: usize,
}

impl ProjectionOperator for SphereOrthant {
    fn name(&self) -> &'static str {
        "sphere ∩ orthant"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        project_sphere_orthant(x)
    }

    fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        x.iter().all(|&v| v >= -tol) && (x.norm() - 1.0).abs() <= tol
    }

    fn is_convex(&self) -> bool {
        false
    }
}

/// `rows×cols` matrices with at most `r` nonzeros per column or overall.
#[derive(Debug, Clone, Copy)]
pub struct SparsitySet {
    pub rows: usize,
    pub cols: usize,
    pub r: usize,
    pub mode: SparsityMode,
}

impl ProjectionOperator for SparsitySet {
    fn name(&self) -> &'static str {
        "sparsity"
    }

    fn dim(&self) -> usize {
        self.rows * self.cols
    }

    fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = x.clone();
        match self.mode {
            SparsityMode::Column => {
                for col in out.as_mut_slice().chunks_mut(self.rows) {
                    keep_largest(col, self.r);
                }
            }
            SparsityMode::Matrix => keep_largest(out.as_mut_slice(), self.r),
        }
        out
    }

    fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        let count = |s: &[f64]| s.iter().filter(|v| v.abs() > tol).count();
        match self.mode {
            SparsityMode::Column => x.as_slice().chunks(self.rows).all(|c| count(c) <= self.r),
            SparsityMode::Matrix => count(x.as_slice()) <= self.r,
        }
    }

    fn is_convex(&self) -> bool {
        false
    }
}

/// `rows×cols` matrices with orthonormal columns.
#[derive(Debug, Clone, Copy)]
pub struct StiefelSet {
    pub rows: usize,
    pub cols: usize,
}

impl ProjectionOperator for StiefelSet {
    fn name(&self) -> &'static str {
        "Stiefel manifold"
    }

    fn dim(&self) -> usize {
        self.rows * self.cols
    }

    fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        let u = as_matrix(x, self.rows, self.cols);
        flatten(project_stiefel(&u).expect("rows ≥ cols").point)
    }

    fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        let u = as_matrix(x, self.rows, self.cols);
        (u.tr_mul(&u) - DMatrix::identity(self.cols, self.cols)).amax() <= tol
    }

    fn is_convex(&self) -> bool {
        false
    }
}

/// Symmetric matrices with diagonal ½ and nonnegative off-diagonal entries.
#[derive(Debug, Clone, Copy)]
pub struct KinshipStructure {
    pub n: usize,
}

impl ProjectionOperator for KinshipStructure {
    fn name(&self) -> &'static str {
        "kinship structure"
    }

    fn dim(&self) -> usize {
        self.n * self.n
    }

    fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        flatten(kinship_part(&as_matrix(x, self.n, self.n)))
    }

    fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        let m = as_matrix(x, self.n, self.n);
        if max_asymmetry(&m) > tol {
            return false;
        }
        (0..self.n).all(|j| {
            (0..self.n).all(|i| {
                if i == j {
                    (m[(i, i)] - 0.5).abs() <= tol
                } else {
                    m[(i, j)] >= -tol
                }
            })
        })
    }

    fn is_convex(&self) -> bool {
        true
    }
}

/// Stacked pairs `(u, v)` with `u, v ≥ 0` and `uᵢvᵢ = 0`; length `2n`.
#[derive(Debug, Clone, Copy)]
pub struct Complementarity {
    pub n: usize,
}

impl ProjectionOperator for Complementarity {
    fn name(&self) -> &'static str {
        "complementarity"
    }

    fn dim(&self) -> usize {
        2 * self.n
    }

    fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let mut out = DVector::zeros(2 * n);
        for i in 0..n {
            let (a, b) = complementary_pair(x[i], x[n + i]);
            out[i] = a;
            out[n + i] = b;
        }
        out
    }

    fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        let n = self.n;
        (0..n).all(|i| {
            let (a, b) = (x[i], x[n + i]);
            a >= -tol && b >= -tol && a.abs().min(b.abs()) <= tol
        })
    }

    fn is_convex(&self) -> bool {
        false
    }
}

impl ProjectionOperator for AffineProjector {
    fn name(&self) -> &'static str {
        "affine set"
    }

    fn dim(&self) -> usize {
        self.matrix().ncols()
    }

    fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        AffineProjector::project(self, x)
    }

    fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.residual(x) <= tol
    }

    fn is_convex(&self) -> bool {
        true
    }
}

/// Stacked `(x, y)` with `Ax = y`; length `s + r` for `A` of shape `r×s`.
#[derive(Debug, Clone)]
pub struct SplittingSet {
    inner: SplittingProjector,
}

impl SplittingSet {
    pub fn new(a: DMatrix<f64>) -> Self {
        SplittingSet {
            inner: SplittingProjector::new(a, SplittingRoute::Auto),
        }
    }
}

impl ProjectionOperator for SplittingSet {
    fn name(&self) -> &'static str {
        "splitting manifold"
    }

    fn dim(&self) -> usize {
        let (r, s) = self.inner.matrix().shape();
        r + s
    }

    fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        let (r, s) = self.inner.matrix().shape();
        let u = x.rows(0, s).into_owned();
        let v = x.rows(s, r).into_owned();
        let (px, py) = self.inner.project(&u, &v).expect("lengths match");
        let mut out = DVector::zeros(r + s);
        out.rows_mut(0, s).copy_from(&px);
        out.rows_mut(s, r).copy_from(&py);
        out
    }

    fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        let (r, s) = self.inner.matrix().shape();
        (self.inner.matrix() * x.rows(0, s) - x.rows(s, r)).amax() <= tol
    }

    fn is_convex(&self) -> bool {
        true
    }
}
