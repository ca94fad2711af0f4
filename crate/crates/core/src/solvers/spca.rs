//! Sparse principal components: maximize `½tr(UᵗSU)` over `p×q` matrices
//! with orthonormal columns, with sparsity of `U` penalized.
//!
//! The concave loss `−½tr(UᵗSU)` is majorized by its tangent plane, and the
//! constant norm of `U` on the Stiefel manifold turns the surrogate into a
//! Procrustes problem: `U_{k+1} = P_Stiefel[S U_k + ρ P_sparse(U_k)]`.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::instance::{check_finite, dense_rows};
use super::SolveResult;
use crate::engine::{run_mm, MmProblem, PenaltySchedule, SolveOptions};
use crate::linalg::{check_symmetric, sym_eig, symmetrize};
use crate::projections::{
    project_sparsity, project_stiefel, ProjectionOperator, SparsityMode, SparsitySet,
};
use crate::{Error, Result};

/// Either the raw `n×p` data matrix or a `p×p` covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpcaData {
    Data(#[serde(with = "dense_rows")] DMatrix<f64>),
    Covariance(#[serde(with = "dense_rows")] DMatrix<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpcaInstance {
    pub source: SpcaData,
    pub q: usize,
    pub r: usize,
    pub mode: SparsityMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpcaStart {
    /// Orthonormalized Gaussian matrix drawn from the options seed.
    #[default]
    Random,
    /// Top `q` eigenvectors of `S`.
    Principal,
}

impl SpcaInstance {
    pub fn new(source: SpcaData, q: usize, r: usize, mode: SparsityMode) -> Result<Self> {
        let inst = SpcaInstance { source, q, r, mode };
        inst.validate()?;
        Ok(inst)
    }

    pub fn dim(&self) -> usize {
        match &self.source {
            SpcaData::Data(x) => x.ncols(),
            SpcaData::Covariance(s) => s.nrows(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.dim();
        match &self.source {
            SpcaData::Data(x) => {
                if x.nrows() == 0 {
                    return Err(Error::dim("data matrix has no rows"));
                }
                check_finite("X", x.as_slice())?;
            }
            SpcaData::Covariance(s) => {
                if !s.is_square() {
                    return Err(Error::dim("covariance must be square"));
                }
                check_finite("S", s.as_slice())?;
                check_symmetric(s)?;
            }
        }
        if self.q == 0 || self.q > p {
            return Err(Error::invalid(format!(
                "number of components q = {} outside 1..={p}",
                self.q
            )));
        }
        let limit = match self.mode {
            SparsityMode::Column => p,
            SparsityMode::Matrix => p * self.q,
        };
        if self.r == 0 || self.r > limit {
            return Err(Error::invalid(format!(
                "sparsity level r = {} outside 1..={limit} for {:?} mode",
                self.r, self.mode
            )));
        }
        Ok(())
    }

    /// `S`, or `XᵗX / n` when data are given.
    pub fn covariance(&self) -> DMatrix<f64> {
        match &self.source {
            SpcaData::Data(x) => symmetrize(&(x.tr_mul(x) / x.nrows() as f64)),
            SpcaData::Covariance(s) => symmetrize(s),
        }
    }

    pub fn data(&self) -> Option<&DMatrix<f64>> {
        match &self.source {
            SpcaData::Data(x) => Some(x),
            SpcaData::Covariance(_) => None,
        }
    }

    pub fn default_schedule() -> PenaltySchedule {
        PenaltySchedule::new(1.0, 1.5, 100)
    }
}

/// `tr(X_qᵗX_q) / tr(XᵗX)` with `X_q = XU(UᵗU)⁻¹Uᵗ`.
pub fn compute_pve(x: &DMatrix<f64>, u: &DMatrix<f64>) -> Result<f64> {
    if x.ncols() != u.nrows() {
        return Err(Error::dim(format!(
            "data has {} columns, loadings have {} rows",
            x.ncols(),
            u.nrows()
        )));
    }
    let gram = u.tr_mul(u);
    let chol = Cholesky::new(gram.clone())
        .ok_or_else(|| Error::Singular("loading Gram matrix UᵗU is singular".into()))?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| {
        (lo.min(d), hi.max(d))
    });
    if lo <= 1e-8 * hi {
        return Err(Error::Singular(
            "loading Gram matrix UᵗU is singular".into(),
        ));
    }
    let xu = x * u;
    let xq = chol.solve(&xu.transpose()).transpose() * u.transpose();
    let total = x.norm_squared();
    if total == 0.0 {
        return Err(Error::invalid("data matrix is zero"));
    }
    Ok(xq.norm_squared() / total)
}

/// Orthonormal basis of a Gaussian `p×q` matrix.
pub fn random_orthonormal(p: usize, q: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(p, q, |_, _| StandardNormal.sample(&mut rng));
    project_stiefel(&g).expect("p ≥ q").point
}

/// Top `q` eigenvectors of `S`, largest first.
pub fn principal_components(s: &DMatrix<f64>, q: usize) -> Result<DMatrix<f64>> {
    let eig = sym_eig(&symmetrize(s))?;
    let p = eig.dim();
    Ok(DMatrix::from_fn(p, q, |i, j| eig.vectors[(i, p - 1 - j)]))
}

struct SpcaProblem {
    s: DMatrix<f64>,
    p: usize,
    q: usize,
    set: SparsitySet,
}

impl SpcaProblem {
    fn mat(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.p, self.q, x.as_slice())
    }
}

impl MmProblem for SpcaProblem {
    fn loss(&self, x: &DVector<f64>) -> f64 {
        let u = self.mat(x);
        -0.5 * (u.tr_mul(&(&self.s * &u))).trace()
    }

    fn penalty(&self, x: &DVector<f64>) -> f64 {
        0.5 * self.set.distance(x).powi(2)
    }

    fn distance(&self, x: &DVector<f64>) -> f64 {
        self.set.distance(x)
    }

    fn step(&mut self, z: &DVector<f64>, rho: f64) -> Result<DVector<f64>> {
        let u = self.mat(z);
        let target = self.mat(&self.set.project(z));
        let next = project_stiefel(&(&self.s * u + target * rho))?.point;
        Ok(DVector::from_column_slice(next.as_slice()))
    }
}

#[derive(Debug, Clone)]
pub struct SpcaResult {
    /// `solution` is the orthonormal iterate `U`; `loss` is `−½tr(UᵗSU)`.
    pub result: SolveResult,
    /// Sparse loadings: the sparsity projection of `U`.
    pub loadings: DMatrix<f64>,
    /// `tr(UᵗSU)`.
    pub explained: f64,
    /// Proportion of variance explained by the loadings, when data are given.
    pub pve: Option<f64>,
}

pub fn solve_spca(
    inst: &SpcaInstance,
    start: SpcaStart,
    schedule: &PenaltySchedule,
    options: &SolveOptions,
) -> Result<SpcaResult> {
    inst.validate()?;
    let s = inst.covariance();
    let (p, q) = (inst.dim(), inst.q);
    let u0 = match start {
        SpcaStart::Random => random_orthonormal(p, q, options.seed),
        SpcaStart::Principal => principal_components(&s, q)?,
    };
    solve_spca_from(inst, s, u0, schedule, options)
}

/// Runs from a caller-supplied `p×q` start, e.g. a previous solution.
pub fn solve_spca_with_start(
    inst: &SpcaInstance,
    u0: DMatrix<f64>,
    schedule: &PenaltySchedule,
    options: &SolveOptions,
) -> Result<SpcaResult> {
    inst.validate()?;
    if u0.shape() != (inst.dim(), inst.q) {
        return Err(Error::dim(format!(
            "start has shape {:?}, expected {:?}",
            u0.shape(),
            (inst.dim(), inst.q)
        )));
    }
    solve_spca_from(inst, inst.covariance(), u0, schedule, options)
}

fn solve_spca_from(
    inst: &SpcaInstance,
    s: DMatrix<f64>,
    u0: DMatrix<f64>,
    schedule: &PenaltySchedule,
    options: &SolveOptions,
) -> Result<SpcaResult> {
    let (p, q) = (inst.dim(), inst.q);
    let mut problem = SpcaProblem {
        s,
        p,
        q,
        set: SparsitySet {
            rows: p,
            cols: q,
            r: inst.r,
            mode: inst.mode,
        },
    };
    let x0 = DVector::from_column_slice(u0.as_slice());
    let (x, trace) = run_mm(&mut problem, x0, schedule, options)?;
    let loss = problem.loss(&x);
    let dist = problem.distance(&x);
    let u = problem.mat(&x);
    let loadings = project_sparsity(&u, inst.r, inst.mode)?;
    let pve = match inst.data() {
        Some(data) => Some(compute_pve(data, &loadings)?),
        None => None,
    };
    Ok(SpcaResult {
        result: SolveResult::from_matrix(loss, dist, u, trace),
        loadings,
        explained: -2.0 * loss,
        pve,
    })
}
