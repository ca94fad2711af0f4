//! Linear complementarity: find `x, y ≥ 0` with `y = Ax + b` and `xᵗy = 0`.
//!
//! The pair `(x, y)` is the optimization variable, the loss is
//! `½‖y − Ax − b‖²`, and the complementarity set is penalized. Minimizing
//! the surrogate in `y` first and substituting back gives
//! `x = [(1+ρ)I + AᵗA]⁻¹[Aᵗ(ỹ − b) + (1+ρ)x̃]` and
//! `y = (Ax + b + ρỹ)/(1 + ρ)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::instance::{check_finite, check_len, dense_rows, flat_vec};
use super::SolveResult;
use crate::engine::{run_mm, MmProblem, PenaltySchedule, SolveOptions};
use crate::linalg::{cg_solve_from, shifted_solve, sym_eig, symmetrize, SymEig};
use crate::projections::{Complementarity, ProjectionOperator};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LcpInstance {
    #[serde(with = "dense_rows")]
    pub a: DMatrix<f64>,
    #[serde(with = "flat_vec")]
    pub b: DVector<f64>,
    /// A known complementary solution, when the instance was built from one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<LcpCertificate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LcpCertificate {
    #[serde(with = "flat_vec")]
    pub x: DVector<f64>,
    #[serde(with = "flat_vec")]
    pub y: DVector<f64>,
}

impl LcpInstance {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let inst = LcpInstance {
            a,
            b,
            certificate: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.a.is_square() {
            return Err(Error::dim("LCP matrix must be square"));
        }
        check_len("b", &self.b, self.a.nrows())?;
        check_finite("A", self.a.as_slice())?;
        check_finite("b", self.b.as_slice())?;
        if let Some(c) = &self.certificate {
            check_len("certificate x", &c.x, self.dim())?;
            check_len("certificate y", &c.y, self.dim())?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// `½‖y − Ax − b‖²`.
    pub fn objective(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        0.5 * (y - &self.a * x - &self.b).norm_squared()
    }

    pub fn default_schedule() -> PenaltySchedule {
        PenaltySchedule::new(1.0, 1.5, 100)
    }

    /// Splits a stacked `(x, y)` vector.
    pub fn split(&self, z: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let n = self.dim();
        (z.rows(0, n).into_owned(), z.rows(n, n).into_owned())
    }
}

enum GramSystem {
    /// Cached eigendecomposition of `AᵗA`; `1 + ρ` is applied as a shift.
    Dense(SymEig),
    Iterative {
        max_iters: usize,
    },
}

struct LcpProblem<'a> {
    inst: &'a LcpInstance,
    set: Complementarity,
    system: GramSystem,
    last_x: DVector<f64>,
}

impl MmProblem for LcpProblem<'_> {
    fn loss(&self, z: &DVector<f64>) -> f64 {
        let (x, y) = self.inst.split(z);
        self.inst.objective(&x, &y)
    }

    fn penalty(&self, z: &DVector<f64>) -> f64 {
        0.5 * self.set.distance(z).powi(2)
    }

    fn distance(&self, z: &DVector<f64>) -> f64 {
        self.set.distance(z)
    }

    fn step(&mut self, z: &DVector<f64>, rho: f64) -> Result<DVector<f64>> {
        let inst = self.inst;
        let n = inst.dim();
        let (xt, yt) = inst.split(&self.set.project(z));
        let shift = 1.0 + rho;
        let rhs = inst.a.tr_mul(&(&yt - &inst.b)) + &xt * shift;
        let x = match &self.system {
            GramSystem::Dense(eig) => shifted_solve(eig, shift, &rhs)?,
            GramSystem::Iterative { max_iters } => {
                let apply = |v: &DVector<f64>| v * shift + inst.a.tr_mul(&(&inst.a * v));
                cg_solve_from(apply, &rhs, &self.last_x, 1e-12, *max_iters)?.x
            }
        };
        let y = (&inst.a * &x + &inst.b + yt * rho) / shift;
        self.last_x = x.clone();
        let mut out = DVector::zeros(2 * n);
        out.rows_mut(0, n).copy_from(&x);
        out.rows_mut(n, n).copy_from(&y);
        Ok(out)
    }
}

/// Solves from `(x, y) = (0, 0)`. The solution matrix has two columns,
/// `x` then `y`.
pub fn solve_lcp(
    inst: &LcpInstance,
    schedule: &PenaltySchedule,
    options: &SolveOptions,
) -> Result<SolveResult> {
    inst.validate()?;
    let n = inst.dim();
    let system = if options.strategy.use_sparse(n, false) {
        GramSystem::Iterative {
            max_iters: 10 * n.max(1),
        }
    } else {
        GramSystem::Dense(sym_eig(&symmetrize(&inst.a.tr_mul(&inst.a)))?)
    };
    let mut problem = LcpProblem {
        inst,
        set: Complementarity { n },
        system,
        last_x: DVector::zeros(n),
    };
    let (z, trace) = run_mm(&mut problem, DVector::zeros(2 * n), schedule, options)?;
    let dist = problem.distance(&z);
    let loss = problem.loss(&z);
    Ok(SolveResult::from_matrix(
        loss,
        dist,
        DMatrix::from_column_slice(n, 2, z.as_slice()),
        trace,
    ))
}
