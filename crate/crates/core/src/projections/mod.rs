//! Projection and proximal operators.
//!
//! Every projection here returns a nearest point of its set. For the
//! nonconvex sets (sphere ∩ orthant, sparsity, Stiefel, complementarity)
//! the nearest point may not be unique; ties are broken deterministically
//! as documented on each function.

mod sets;

pub use sets::{
    BoxSet, Complementarity, KinshipStructure, LorentzCone, Nonnegative, ProjectionOperator,
    PsdCone, SparsitySet, SphereOrthant, SplittingSet, StiefelSet, MEMBERSHIP_TOL,
};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::linalg::{check_symmetric, sym_eig, symmetrize, thin_svd};
use crate::{Error, Result};

/// A projected point together with its distance from the input.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult<T> {
    pub point: T,
    pub distance: f64,
}

/// `max(x, 0)` componentwise.
pub fn project_nonnegative(x: &DVector<f64>) -> DVector<f64> {
    x.map(|v| v.max(0.0))
}

/// Nearest positive semidefinite matrix: `U D₊ Uᵗ` where `X = U D Uᵗ`.
pub fn project_psd(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(x)?;
    Ok(psd_part(x))
}

/// PSD projection of the symmetric part of `x`; no symmetry check.
pub(crate) fn psd_part(x: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = symmetrize(x);
    let eig = sym_eig(&sym).expect("symmetrized input");
    if eig.dim() == 0 || eig.min_value() >= 0.0 {
        return sym;
    }
    symmetrize(&eig.reconstruct_with(|l| l.max(0.0)))
}

/// Projection onto the Lorentz cone `{(w, r) : ‖w‖ ≤ r}`.
pub fn project_lorentz(w: &DVector<f64>, r: f64) -> (DVector<f64>, f64) {
    let norm = w.norm();
    if norm <= r {
        (w.clone(), r)
    } else if norm <= -r {
        (DVector::zeros(w.len()), 0.0)
    } else {
        let alpha = 0.5 * (norm + r);
        (w * (alpha / norm), alpha)
    }
}

/// Projection onto the unit sphere intersected with the nonnegative orthant.
///
/// With a positive component, the negatives are zeroed and the result is
/// normalized. Otherwise the answer is the basis vector of the largest
/// (least negative) component; ties, including `y = 0`, go to the smallest
/// index, so the origin maps to `e₁`.
pub fn project_sphere_orthant(y: &DVector<f64>) -> DVector<f64> {
    assert!(!y.is_empty(), "sphere projection needs a nonempty vector");
    if y.iter().any(|&v| v > 0.0) {
        let clipped = project_nonnegative(y);
        let norm = clipped.norm();
        clipped / norm
    } else {
        let mut best = 0;
        for i in 1..y.len() {
            if y[i] > y[best] {
                best = i;
            }
        }
        let mut e = DVector::zeros(y.len());
        e[best] = 1.0;
        e
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SparsityMode {
    /// At most `r` nonzeros in each column.
    Column,
    /// At most `r` nonzeros in the whole matrix.
    Matrix,
}

impl std::str::FromStr for SparsityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "column" => Ok(SparsityMode::Column),
            "matrix" => Ok(SparsityMode::Matrix),
            _ => Err(Error::invalid(format!("unknown sparsity mode {s:?}"))),
        }
    }
}

/// Zeroes all but the `r` largest-magnitude entries of `values` in place.
/// Equal magnitudes keep the smaller index.
pub(crate) fn keep_largest(values: &mut [f64], r: usize) {
    if r >= values.len() {
        return;
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    let order =
        |&a: &usize, &b: &usize| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b));
    if r > 0 {
        idx.select_nth_unstable_by(r - 1, order);
    }
    for &i in &idx[r..] {
        values[i] = 0.0;
    }
}

/// Sparsity projection. In matrix mode the matrix is treated as its
/// column-stacked vector, so ties go to the entry with the smaller
/// column-major index.
pub fn project_sparsity(u: &DMatrix<f64>, r: usize, mode: SparsityMode) -> Result<DMatrix<f64>> {
    let (p, q) = u.shape();
    let limit = match mode {
        SparsityMode::Column => p,
        SparsityMode::Matrix => p * q,
    };
    if r == 0 || r > limit {
        return Err(Error::invalid(format!(
            "sparsity level {r} outside 1..={limit} for {mode:?} mode on a {p}x{q} matrix"
        )));
    }
    let mut out = u.clone();
    match mode {
        SparsityMode::Column => {
            for mut col in out.column_iter_mut() {
                keep_largest(col.as_mut_slice(), r);
            }
        }
        SparsityMode::Matrix => keep_largest(out.as_mut_slice(), r),
    }
    Ok(out)
}

/// Result of a Stiefel projection. `rank_deficient` is set when
/// `σ_min < 1e-12·σ_max`, where the nearest point is not unique and the
/// returned factor is whatever the SVD produced.
#[derive(Debug, Clone)]
pub struct StiefelProjection {
    pub point: DMatrix<f64>,
    pub rank_deficient: bool,
}

/// Nearest matrix with orthonormal columns, `V Wᵗ` from the thin SVD `U = V Σ Wᵗ`.
pub fn project_stiefel(u: &DMatrix<f64>) -> Result<StiefelProjection> {
    let svd = thin_svd(u)?;
    let q = svd.singular_values.len();
    let rank_deficient = q > 0 && {
        let smax = svd.singular_values[0];
        smax == 0.0 || svd.singular_values[q - 1] < 1e-12 * smax
    };
    Ok(StiefelProjection {
        point: &svd.left * svd.right.transpose(),
        rank_deficient,
    })
}

/// Resets the diagonal to ½ and clips negative off-diagonal entries to zero.
pub fn project_kinship_structure(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(x)?;
    Ok(kinship_part(x))
}

pub(crate) fn kinship_part(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = symmetrize(x);
    let n = out.nrows();
    for j in 0..n {
        for i in 0..n {
            out[(i, j)] = if i == j { 0.5 } else { out[(i, j)].max(0.0) };
        }
    }
    out
}

/// Projects each pair `(uᵢ, vᵢ)` onto `{(a, b) : a, b ≥ 0, ab = 0}`.
/// The case `uᵢ = vᵢ > 0` keeps `uᵢ`.
pub fn project_complementarity(
    u: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    if u.len() != v.len() {
        return Err(Error::dim(format!(
            "complementary pair of lengths {} and {}",
            u.len(),
            v.len()
        )));
    }
    let n = u.len();
    let mut x = DVector::zeros(n);
    let mut y = DVector::zeros(n);
    for i in 0..n {
        let (a, b) = complementary_pair(u[i], v[i]);
        x[i] = a;
        y[i] = b;
    }
    Ok((x, y))
}

#[inline]
pub(crate) fn complementary_pair(u: f64, v: f64) -> (f64, f64) {
    if u >= v.max(0.0) {
        (u, 0.0)
    } else if v >= u.max(0.0) {
        (0.0, v)
    } else {
        (0.0, 0.0)
    }
}

/// Projection onto `{x : Ax = b}` with a cached Cholesky factor of `AAᵗ`.
#[derive(Debug, Clone)]
pub struct AffineProjector {
    a: DMatrix<f64>,
    b: DVector<f64>,
    gram: Cholesky<f64, Dyn>,
}

impl AffineProjector {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::dim(format!(
                "constraint matrix has {} rows, right-hand side {}",
                a.nrows(),
                b.len()
            )));
        }
        let gram = Cholesky::new(&a * a.transpose())
            .ok_or_else(|| Error::Singular("AAᵗ is not positive definite".into()))?;
        let diag = gram.l_dirty().diagonal();
        let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| {
            (lo.min(d), hi.max(d))
        });
        if !diag.is_empty() && lo <= 1e-6 * hi {
            return Err(Error::Singular(format!(
                "constraint matrix is numerically rank deficient (Cholesky pivot ratio {:e})",
                lo / hi
            )));
        }
        Ok(AffineProjector { a, b, gram })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.b
    }

    /// `Aᵗ(AAᵗ)⁻¹`.
    pub fn pseudoinverse(&self) -> DMatrix<f64> {
        self.gram.solve(&self.a).transpose()
    }

    /// `x − Aᵗ(AAᵗ)⁻¹(Ax − b)`.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        let resid = &self.a * x - &self.b;
        x - self.a.tr_mul(&self.gram.solve(&resid))
    }

    pub fn residual(&self, x: &DVector<f64>) -> f64 {
        (&self.a * x - &self.b).amax()
    }
}

pub fn project_affine(
    x: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
) -> Result<DVector<f64>> {
    if a.ncols() != x.len() {
        return Err(Error::dim(
            "point length differs from constraint column count",
        ));
    }
    Ok(AffineProjector::new(a.clone(), b.clone())?.project(x))
}

/// Which normal-equation system eliminates the splitting constraint `Ax = y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplittingRoute {
    /// Pick the smaller system.
    Auto,
    /// `λ = (AAᵗ + I)⁻¹(Au − v)`, an `r×r` solve.
    Multiplier,
    /// `x = (AᵗA + I)⁻¹(Aᵗv + u)`, an `s×s` solve.
    Direct,
}

/// Projection onto `{(x, y) : Ax = y}` with the chosen Gram factor cached.
#[derive(Debug, Clone)]
pub struct SplittingProjector {
    a: DMatrix<f64>,
    route: SplittingRoute,
    factor: Cholesky<f64, Dyn>,
}

impl SplittingProjector {
    pub fn new(a: DMatrix<f64>, route: SplittingRoute) -> Self {
        let (r, s) = a.shape();
        let route = match route {
            SplittingRoute::Auto if r < s => SplittingRoute::Multiplier,
            SplittingRoute::Auto => SplittingRoute::Direct,
            other => other,
        };
        let gram = match route {
            SplittingRoute::Multiplier => &a * a.transpose() + DMatrix::identity(r, r),
            _ => a.tr_mul(&a) + DMatrix::identity(s, s),
        };
        let factor = Cholesky::new(gram).expect("Gram matrix shifted by I is positive definite");
        SplittingProjector { a, route, factor }
    }

    pub fn route(&self) -> SplittingRoute {
        self.route
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn project(
        &self,
        u: &DVector<f64>,
        v: &DVector<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        let (r, s) = self.a.shape();
        if u.len() != s || v.len() != r {
            return Err(Error::dim(format!(
                "splitting {r}x{s} needs u of length {s} and v of length {r}, got {} and {}",
                u.len(),
                v.len()
            )));
        }
        Ok(match self.route {
            SplittingRoute::Multiplier => {
                let lambda = self.factor.solve(&(&self.a * u - v));
                (u - self.a.tr_mul(&lambda), v + lambda)
            }
            _ => {
                let x = self.factor.solve(&(self.a.tr_mul(v) + u));
                let y = &self.a * &x;
                (x, y)
            }
        })
    }
}

/// Nearest `(x, y)` with `Ax = y` to `(u, v)`, using the smaller normal system.
pub fn project_splitting(
    u: &DVector<f64>,
    v: &DVector<f64>,
    a: &DMatrix<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    project_splitting_via(u, v, a, SplittingRoute::Auto)
}

pub fn project_splitting_via(
    u: &DVector<f64>,
    v: &DVector<f64>,
    a: &DMatrix<f64>,
    route: SplittingRoute,
) -> Result<(DVector<f64>, DVector<f64>)> {
    SplittingProjector::new(a.clone(), route).project(u, v)
}

/// Proximal map of `ρ⁻¹·½‖z − x‖²` at `y`: `(z + ρy)/(1 + ρ)`.
pub fn prox_quadratic_loss(z: &DVector<f64>, y: &DVector<f64>, rho: f64) -> DVector<f64> {
    (z + y * rho) / (1.0 + rho)
}

/// Proximal map of `ρ⁻¹·vᵗx` at `y`: `y − v/ρ`.
pub fn prox_linear_loss(v: &DVector<f64>, y: &DVector<f64>, rho: f64) -> DVector<f64> {
    y - v / rho
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn nonnegative_examples() {
        assert_eq!(project_nonnegative(&v(&[-1.0, 2.0])), v(&[0.0, 2.0]));
        assert_eq!(project_nonnegative(&v(&[0.0, 0.0])), v(&[0.0, 0.0]));
    }

    #[test]
    fn psd_examples() {
        let d = DMatrix::from_diagonal(&v(&[1.0, -2.0]));
        let p = project_psd(&d).unwrap();
        assert!((p - DMatrix::from_diagonal(&v(&[1.0, 0.0]))).amax() < 1e-15);

        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0]);
        assert!((project_psd(&m).unwrap() - &m).amax() < 1e-14);

        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        assert!(matches!(project_psd(&bad), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn lorentz_examples() {
        assert_eq!(project_lorentz(&v(&[0.0, 0.0]), 1.0), (v(&[0.0, 0.0]), 1.0));
        assert_eq!(
            project_lorentz(&v(&[3.0, 4.0]), -10.0),
            (v(&[0.0, 0.0]), 0.0)
        );
        let (w, r) = project_lorentz(&v(&[3.0, 4.0]), 0.0);
        assert!((w - v(&[1.5, 2.0])).amax() < 1e-15);
        assert!((r - 2.5).abs() < 1e-15);
    }

    #[test]
    fn lorentz_closed_form_matches_numeric_minimization() {
        // Oracle: parametrize the cone boundary as (t·cosθ, t·sinθ, t) and
        // minimize the squared distance over a fine grid in (θ, t), then
        // compare against the closed form at ((3,4), 0).
        let target = (3.0f64, 4.0f64, 0.0f64);
        let mut best = f64::INFINITY;
        let mut best_pt = (0.0, 0.0, 0.0);
        for ti in 0..=4000 {
            let t = ti as f64 * 1e-3;
            for ai in 0..2000 {
                let th = ai as f64 * std::f64::consts::TAU / 2000.0;
                let p = (t * th.cos(), t * th.sin(), t);
                let d =
                    (p.0 - target.0).powi(2) + (p.1 - target.1).powi(2) + (p.2 - target.2).powi(2);
                if d < best {
                    best = d;
                    best_pt = p;
                }
            }
        }
        let (w, r) = project_lorentz(&v(&[3.0, 4.0]), 0.0);
        let closed = (w - v(&[3.0, 4.0])).norm_squared() + r * r;
        assert!(closed <= best + 1e-12);
        assert!((best_pt.0 - 1.5).abs() < 5e-3 && (best_pt.1 - 2.0).abs() < 5e-3);
        assert!((best_pt.2 - 2.5).abs() < 2e-3);
    }

    #[test]
    fn sphere_orthant_examples() {
        assert!((project_sphere_orthant(&v(&[3.0, 4.0])) - v(&[0.6, 0.8])).amax() < 1e-15);
        assert_eq!(project_sphere_orthant(&v(&[-2.0, -1.0])), v(&[0.0, 1.0]));
        assert_eq!(
            project_sphere_orthant(&v(&[-1.0, 2.0, -3.0])),
            v(&[0.0, 1.0, 0.0])
        );
        assert_eq!(
            project_sphere_orthant(&v(&[0.0, 0.0, 0.0])),
            v(&[1.0, 0.0, 0.0])
        );
        assert_eq!(project_sphere_orthant(&v(&[-1.0, 0.0])), v(&[0.0, 1.0]));
    }

    #[test]
    fn sparsity_examples() {
        let col = DMatrix::from_column_slice(3, 1, &[3.0, -5.0, 1.0]);
        let p = project_sparsity(&col, 1, SparsityMode::Column).unwrap();
        assert_eq!(p.as_slice(), &[0.0, -5.0, 0.0]);
        assert_eq!(
            project_sparsity(&col, 3, SparsityMode::Column).unwrap(),
            col
        );

        let m = DMatrix::from_row_slice(2, 2, &[3.0, -5.0, 1.0, 4.0]);
        let p = project_sparsity(&m, 2, SparsityMode::Matrix).unwrap();
        assert_eq!(p, DMatrix::from_row_slice(2, 2, &[0.0, -5.0, 0.0, 4.0]));

        assert!(project_sparsity(&m, 3, SparsityMode::Column).is_err());
        assert!(project_sparsity(&m, 5, SparsityMode::Matrix).is_err());
        assert!(project_sparsity(&m, 0, SparsityMode::Matrix).is_err());
    }

    #[test]
    fn sparsity_matrix_mode_is_exhaustive_optimum() {
        // Oracle: every 2-subset of support positions, keep the closest.
        let m = DMatrix::from_row_slice(2, 2, &[3.0, -5.0, 1.0, 4.0]);
        let vals = m.as_slice();
        let mut best = (f64::INFINITY, 0, 0);
        for i in 0..4 {
            for j in (i + 1)..4 {
                let d: f64 = (0..4)
                    .filter(|&k| k != i && k != j)
                    .map(|k| vals[k] * vals[k])
                    .sum();
                if d < best.0 {
                    best = (d, i, j);
                }
            }
        }
        let p = project_sparsity(&m, 2, SparsityMode::Matrix).unwrap();
        assert!(((p - &m).norm_squared() - best.0).abs() < 1e-14);
    }

    #[test]
    fn sparsity_ties_keep_smaller_index() {
        let col = DMatrix::from_column_slice(4, 1, &[1.0, -2.0, 2.0, -2.0]);
        let p = project_sparsity(&col, 2, SparsityMode::Column).unwrap();
        assert_eq!(p.as_slice(), &[0.0, -2.0, 2.0, 0.0]);
    }

    #[test]
    fn stiefel_examples() {
        let u = DMatrix::from_row_slice(3, 2, &[2.0, 0.0, 0.0, 3.0, 0.0, 0.0]);
        let p = project_stiefel(&u).unwrap();
        let expect = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!((p.point - expect).amax() < 1e-14);
        assert!(!p.rank_deficient);

        let q = DMatrix::from_row_slice(3, 2, &[0.6, 0.0, 0.8, 0.0, 0.0, 1.0]);
        assert!((project_stiefel(&q).unwrap().point - &q).amax() < 1e-14);

        let rank1 = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 1.0, 1.0, 0.0, 0.0]);
        assert!(project_stiefel(&rank1).unwrap().rank_deficient);
        assert!(project_stiefel(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn kinship_structure_examples() {
        let x = DMatrix::from_row_slice(2, 2, &[0.4, -0.1, -0.1, 0.6]);
        let p = project_kinship_structure(&x).unwrap();
        assert_eq!(p, DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]));
        let ok = DMatrix::from_row_slice(2, 2, &[0.5, 0.25, 0.25, 0.5]);
        assert_eq!(project_kinship_structure(&ok).unwrap(), ok);
        let bad = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, 0.1, 0.5]);
        assert!(project_kinship_structure(&bad).is_err());
    }

    #[test]
    fn complementarity_examples() {
        let p = |a: f64, b: f64| project_complementarity(&v(&[a]), &v(&[b])).unwrap();
        assert_eq!(p(2.0, 1.0), (v(&[2.0]), v(&[0.0])));
        assert_eq!(p(-1.0, -2.0), (v(&[0.0]), v(&[0.0])));
        assert_eq!(p(1.0, 3.0), (v(&[0.0]), v(&[3.0])));
        assert_eq!(p(2.0, 2.0), (v(&[2.0]), v(&[0.0])));
        assert!(project_complementarity(&v(&[1.0]), &v(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn affine_examples() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let b = v(&[1.0]);
        let p = project_affine(&v(&[0.0, 0.0]), &a, &b).unwrap();
        assert!((p - v(&[0.5, 0.5])).amax() < 1e-15);
        let feasible = v(&[0.25, 0.75]);
        assert!((project_affine(&feasible, &a, &b).unwrap() - &feasible).amax() < 1e-15);

        let deficient = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        assert!(matches!(
            AffineProjector::new(deficient, v(&[1.0, 2.0])),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn splitting_examples() {
        let a = DMatrix::from_row_slice(1, 1, &[1.0]);
        let (x, y) = project_splitting(&v(&[0.0]), &v(&[2.0]), &a).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (y[0] - 1.0).abs() < 1e-15);

        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 0.0, 0.0, 1.0, -1.0]);
        let u = v(&[1.0, 1.0, 1.0]);
        let vv = &a * &u;
        let (x, y) = project_splitting(&u, &vv, &a).unwrap();
        assert!((x - u).amax() < 1e-14 && (y - vv).amax() < 1e-14);
    }

    #[test]
    fn prox_examples() {
        let z = v(&[0.0, 0.0]);
        let y = v(&[2.0, 2.0]);
        assert_eq!(prox_quadratic_loss(&z, &y, 1.0), v(&[1.0, 1.0]));
        assert!((prox_quadratic_loss(&z, &y, 1e-8) - &z).amax() < 1e-6);
        assert_eq!(prox_quadratic_loss(&y, &y, 3.0), y);

        assert_eq!(prox_linear_loss(&v(&[0.0, 0.0]), &y, 5.0), y);
        assert_eq!(
            prox_linear_loss(&v(&[2.0, 0.0]), &v(&[1.0, 1.0]), 2.0),
            v(&[0.0, 1.0])
        );
    }

    #[test]
    fn prox_linear_is_stationary_point() {
        // Oracle: gradient descent on vᵗx + (ρ/2)‖x − y‖² from the origin.
        let vv = v(&[0.3, -1.2, 2.0]);
        let y = v(&[1.0, 0.5, -0.5]);
        let rho = 1.7;
        let mut x = DVector::zeros(3);
        for _ in 0..2000 {
            let grad = &vv + (&x - &y) * rho;
            x -= grad * (0.5 / rho);
        }
        assert!((prox_linear_loss(&vv, &y, rho) - x).amax() < 1e-12);
    }

    proptest! {
        #[test]
        fn complementarity_output_is_member(u in prop::collection::vec(-5.0f64..5.0, 1..12), seed in any::<u64>()) {
            let n = u.len();
            let vv: Vec<f64> = (0..n).map(|i| ((seed.wrapping_mul(i as u64 + 7) % 1000) as f64) / 100.0 - 5.0).collect();
            let (x, y) = project_complementarity(&DVector::from_vec(u), &DVector::from_vec(vv)).unwrap();
            for i in 0..n {
                prop_assert!(x[i] >= 0.0 && y[i] >= 0.0 && x[i] * y[i] == 0.0);
            }
        }

        #[test]
        fn column_sparsity_counts(vals in prop::collection::vec(-10.0f64..10.0, 12), r in 1usize..=4) {
            let m = DMatrix::from_column_slice(4, 3, &vals);
            let p = project_sparsity(&m, r, SparsityMode::Column).unwrap();
            for col in p.column_iter() {
                prop_assert!(col.iter().filter(|x| **x != 0.0).count() <= r);
            }
        }
    }
}
