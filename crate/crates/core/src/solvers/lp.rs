//! Linear programs in standard form: minimize `vᵗx` subject to `Ax = b`,
//! `x ≥ 0`.
//!
//! The affine constraint is folded into the domain and the orthant is
//! penalized, so one MM step is the affine projection of `(x_k)₊ − v/ρ`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::instance::{check_finite, check_len, check_matrix, flat_vec, Matrix};
use super::{orthant_distance, SolveResult};
use crate::engine::{run_mm, MmProblem, PenaltySchedule, SolveOptions};
use crate::linalg::{
    default_lsqr_max_iters, lsqr_solve, CsrMatrix, LinearOperator, LSQR_DEFAULT_TOL,
};
use crate::projections::{project_nonnegative, AffineProjector};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpInstance {
    pub a: Matrix,
    #[serde(with = "flat_vec")]
    pub b: DVector<f64>,
    #[serde(with = "flat_vec")]
    pub v: DVector<f64>,
}

impl LpInstance {
    pub fn new(a: impl Into<Matrix>, b: DVector<f64>, v: DVector<f64>) -> Result<Self> {
        let inst = LpInstance { a: a.into(), b, v };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n) = self.a.shape();
        check_len("b", &self.b, m)?;
        check_len("v", &self.v, n)?;
        if m > n {
            return Err(Error::dim(format!("LP needs m ≤ n, got {m}x{n}")));
        }
        check_matrix("A", &self.a)?;
        check_finite("b", self.b.as_slice())?;
        check_finite("v", self.v.as_slice())
    }

    pub fn dims(&self) -> (usize, usize) {
        self.a.shape()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        self.v.dot(x)
    }

    pub fn default_schedule(sparse: bool) -> PenaltySchedule {
        if sparse {
            PenaltySchedule::new(1.0, 1.5, 50)
        } else {
            PenaltySchedule::new(1.0, 2.0, 100)
        }
    }
}

/// Rounds of LSQR correction in the sparse affine projection.
const LP_REFINEMENTS: usize = 3;

enum AffineMap {
    /// Cached pseudoinverse `Aᵗ(AAᵗ)⁻¹`.
    Dense { a: DMatrix<f64>, pinv: DMatrix<f64> },
    /// Minimum-norm correction from LSQR.
    Sparse { a: CsrMatrix, max_iters: usize },
}

struct LpProblem<'a> {
    inst: &'a LpInstance,
    affine: AffineMap,
}

impl LpProblem<'_> {
    fn project_affine(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        let b = &self.inst.b;
        Ok(match &self.affine {
            AffineMap::Dense { a, pinv } => w - pinv * (a * w - b),
            // Each correction lies in range(Aᵗ), so refining against the
            // new residual keeps the result the projection of w.
            AffineMap::Sparse { a, max_iters } => {
                let scale = b.norm().max(1.0);
                let mut x = w.clone();
                for _ in 0..LP_REFINEMENTS {
                    let resid = b - a.apply(&x);
                    if resid.norm() <= 1e-14 * scale {
                        break;
                    }
                    x += lsqr_solve(a, &resid, 0.0, LSQR_DEFAULT_TOL, *max_iters)?.x;
                }
                x
            }
        })
    }
}

impl MmProblem for LpProblem<'_> {
    fn loss(&self, x: &DVector<f64>) -> f64 {
        self.inst.objective(x)
    }

    fn penalty(&self, x: &DVector<f64>) -> f64 {
        0.5 * orthant_distance(x).powi(2)
    }

    fn distance(&self, x: &DVector<f64>) -> f64 {
        orthant_distance(x)
    }

    fn step(&mut self, z: &DVector<f64>, rho: f64) -> Result<DVector<f64>> {
        let w = project_nonnegative(z) - &self.inst.v / rho;
        self.project_affine(&w)
    }
}

pub fn solve_lp(
    inst: &LpInstance,
    schedule: &PenaltySchedule,
    options: &SolveOptions,
) -> Result<SolveResult> {
    inst.validate()?;
    let (m, n) = inst.dims();
    let affine = if options.strategy.use_sparse(n, inst.a.is_sparse()) {
        let a = inst.a.to_sparse();
        let mut row_has_entry = vec![false; m];
        for (i, _, v) in a.triplets() {
            row_has_entry[i] |= v != 0.0;
        }
        if let Some(i) = row_has_entry.iter().position(|h| !h) {
            return Err(Error::Singular(format!("constraint row {i} is empty")));
        }
        AffineMap::Sparse {
            max_iters: default_lsqr_max_iters(m, n),
            a,
        }
    } else {
        let a = inst.a.to_dense();
        let proj = AffineProjector::new(a.clone(), inst.b.clone())?;
        AffineMap::Dense {
            pinv: proj.pseudoinverse(),
            a,
        }
    };
    let mut problem = LpProblem { inst, affine };
    let (x, trace) = run_mm(&mut problem, DVector::zeros(n), schedule, options)?;
    let dist = problem.distance(&x);
    Ok(SolveResult::from_vector(inst.objective(&x), dist, x, trace))
}
