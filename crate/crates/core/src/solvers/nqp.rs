//! Nonnegative quadratic programs: minimize `½xᵗAx + bᵗx` subject to `x ≥ 0`
//! with `A` positive definite.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::instance::{check_finite, check_len, check_matrix, flat_vec, Matrix};
use super::{orthant_distance, SolveResult};
use crate::engine::{run_mm, MmProblem, PenaltySchedule, SolveOptions};
use crate::linalg::{
    cg_solve_from, check_symmetric, shifted_solve, sym_eig, CsrMatrix, LinearOperator, SymEig,
};
use crate::projections::project_nonnegative;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NqpInstance {
    pub a: Matrix,
    #[serde(with = "flat_vec")]
    pub b: DVector<f64>,
}

impl NqpInstance {
    pub fn new(a: impl Into<Matrix>, b: DVector<f64>) -> Result<Self> {
        let inst = NqpInstance { a: a.into(), b };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let (r, c) = self.a.shape();
        if r != c {
            return Err(Error::dim(format!(
                "NQP matrix must be square, got {r}x{c}"
            )));
        }
        check_len("b", &self.b, r)?;
        check_matrix("A", &self.a)?;
        check_finite("b", self.b.as_slice())
    }

    pub fn dim(&self) -> usize {
        self.a.shape().0
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&self.a.apply(x)) + self.b.dot(x)
    }

    /// Largest violation of `min(x, Ax + b) = 0`, componentwise.
    pub fn kkt_residual(&self, x: &DVector<f64>) -> f64 {
        let grad = self.a.apply(x) + &self.b;
        (0..x.len())
            .map(|i| x[i].min(grad[i]).abs())
            .fold(0.0, f64::max)
    }

    pub fn default_schedule(sparse: bool) -> PenaltySchedule {
        if sparse {
            PenaltySchedule::new(1e-4, 1.5, 100)
        } else {
            PenaltySchedule::new(1.0, 1.5, 200)
        }
    }
}

enum ShiftedSystem {
    Dense(SymEig),
    Sparse { a: CsrMatrix, max_iters: usize },
}

/// Relative residual for the conjugate gradient step on `ρI + A`.
pub const NQP_CG_TOL: f64 = 1e-12;

struct NqpProblem<'a> {
    inst: &'a NqpInstance,
    system: ShiftedSystem,
    last: DVector<f64>,
}

impl MmProblem for NqpProblem<'_> {
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
        let rhs = project_nonnegative(z) * rho - &self.inst.b;
        let x = match &self.system {
            ShiftedSystem::Dense(eig) => shifted_solve(eig, rho, &rhs)?,
            // ρI + A is positive definite, so CG applies; warm starting from
            // the previous step keeps the solve accurate enough for descent.
            ShiftedSystem::Sparse { a, max_iters } => {
                let apply = |v: &DVector<f64>| a.apply(v) + v * rho;
                cg_solve_from(apply, &rhs, &self.last, NQP_CG_TOL, *max_iters)?.x
            }
        };
        self.last = x.clone();
        Ok(x)
    }
}

pub fn solve_nqp(
    inst: &NqpInstance,
    schedule: &PenaltySchedule,
    options: &SolveOptions,
) -> Result<SolveResult> {
    inst.validate()?;
    let n = inst.dim();
    let system = if options.strategy.use_sparse(n, inst.a.is_sparse()) {
        let a = inst.a.to_sparse();
        if a != a.transpose() {
            return Err(Error::NotSymmetric {
                max_asymmetry: crate::linalg::max_asymmetry(&a.to_dense()),
            });
        }
        let mut diag = vec![0.0; n];
        for (r, c, v) in a.triplets() {
            if r == c {
                diag[r] = v;
            }
        }
        if let Some(i) = diag.iter().position(|&d| d <= 0.0) {
            return Err(Error::invalid(format!(
                "matrix is not positive definite (diagonal entry {i} is not positive)"
            )));
        }
        ShiftedSystem::Sparse {
            max_iters: 20 * n.max(1),
            a,
        }
    } else {
        let a = inst.a.to_dense();
        check_symmetric(&a)?;
        let eig = sym_eig(&a)?;
        if eig.dim() > 0 && eig.min_value() <= 0.0 {
            return Err(Error::invalid(format!(
                "matrix is not positive definite (smallest eigenvalue {:e})",
                eig.min_value()
            )));
        }
        ShiftedSystem::Dense(eig)
    };
    let mut problem = NqpProblem {
        inst,
        system,
        last: DVector::zeros(n),
    };
    let (x, trace) = run_mm(&mut problem, DVector::zeros(n), schedule, options)?;
    let dist = problem.distance(&x);
    Ok(SolveResult::from_vector(inst.objective(&x), dist, x, trace))
}
