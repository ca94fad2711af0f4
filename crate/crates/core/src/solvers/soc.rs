//! Projection onto a second-order cone constraint: minimize `½‖u − x‖²`
//! subject to `‖Au + b‖ ≤ cᵗu + d`.
//!
//! The constraint is split as `(w, r) = (Au + b, cᵗu + d)` in the Lorentz
//! cone, whose projection is explicit, and the split is eliminated exactly:
//! each step solves `(ρ⁻¹I + AᵗA + ccᵗ) u = ρ⁻¹x + Aᵗ(w̃ − b) + (r̃ − d)c`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::instance::{check_finite, check_len, check_matrix, flat_vec, Matrix};
use super::SolveResult;
use crate::engine::{run_mm, MmProblem, PenaltySchedule, SolveOptions};
use crate::linalg::{cg_solve_from, shifted_solve, sym_eig, symmetrize, LinearOperator, SymEig};
use crate::projections::project_lorentz;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocInstance {
    /// Point being projected.
    #[serde(with = "flat_vec")]
    pub x: DVector<f64>,
    pub a: Matrix,
    #[serde(with = "flat_vec")]
    pub b: DVector<f64>,
    #[serde(with = "flat_vec")]
    pub c: DVector<f64>,
    pub d: f64,
}

impl SocInstance {
    pub fn new(
        x: DVector<f64>,
        a: impl Into<Matrix>,
        b: DVector<f64>,
        c: DVector<f64>,
        d: f64,
    ) -> Result<Self> {
        let inst = SocInstance {
            x,
            a: a.into(),
            b,
            c,
            d,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n) = self.a.shape();
        check_len("x", &self.x, n)?;
        check_len("b", &self.b, m)?;
        check_len("c", &self.c, n)?;
        check_matrix("A", &self.a)?;
        check_finite("x", self.x.as_slice())?;
        check_finite("b", self.b.as_slice())?;
        check_finite("c", self.c.as_slice())?;
        check_finite("d", &[self.d])
    }

    pub fn dims(&self) -> (usize, usize) {
        self.a.shape()
    }

    pub fn objective(&self, u: &DVector<f64>) -> f64 {
        0.5 * (u - &self.x).norm_squared()
    }

    /// `(Au + b, cᵗu + d)`.
    pub fn cone_point(&self, u: &DVector<f64>) -> (DVector<f64>, f64) {
        (self.a.apply(u) + &self.b, self.c.dot(u) + self.d)
    }

    /// `max(‖Au + b‖ − cᵗu − d, 0)`.
    pub fn residual(&self, u: &DVector<f64>) -> f64 {
        let (w, r) = self.cone_point(u);
        (w.norm() - r).max(0.0)
    }

    pub fn default_schedule(sparse: bool) -> PenaltySchedule {
        if sparse {
            PenaltySchedule::new(0.01, 2.5, 10)
        } else {
            PenaltySchedule::new(1.0, 2.0, 100)
        }
    }
}

enum GramSystem {
    /// Cached eigendecomposition of `AᵗA + ccᵗ`; `ρ⁻¹` is applied as a shift.
    Dense(SymEig),
    Iterative {
        tol: f64,
        max_iters: usize,
    },
}

struct SocProblem<'a> {
    inst: &'a SocInstance,
    system: GramSystem,
    last: DVector<f64>,
}

impl SocProblem<'_> {
    fn cone_distance(&self, u: &DVector<f64>) -> f64 {
        let (w, r) = self.inst.cone_point(u);
        let (pw, pr) = project_lorentz(&w, r);
        ((w - pw).norm_squared() + (r - pr).powi(2)).sqrt()
    }
}

impl MmProblem for SocProblem<'_> {
    fn loss(&self, u: &DVector<f64>) -> f64 {
        self.inst.objective(u)
    }

    fn penalty(&self, u: &DVector<f64>) -> f64 {
        0.5 * self.cone_distance(u).powi(2)
    }

    /// The cone residual, which bounds the Euclidean distance to the cone
    /// from above.
    fn distance(&self, u: &DVector<f64>) -> f64 {
        self.inst.residual(u)
    }

    fn step(&mut self, z: &DVector<f64>, rho: f64) -> Result<DVector<f64>> {
        let inst = self.inst;
        let (w, r) = inst.cone_point(z);
        let (pw, pr) = project_lorentz(&w, r);
        let rhs = &inst.x / rho + inst.a.apply_transpose(&(pw - &inst.b)) + &inst.c * (pr - inst.d);
        let u = match &self.system {
            GramSystem::Dense(eig) => shifted_solve(eig, 1.0 / rho, &rhs)?,
            GramSystem::Iterative { tol, max_iters } => {
                let apply = |v: &DVector<f64>| {
                    v / rho + inst.a.apply_transpose(&inst.a.apply(v)) + &inst.c * inst.c.dot(v)
                };
                cg_solve_from(apply, &rhs, &self.last, *tol, *max_iters)?.x
            }
        };
        self.last = u.clone();
        Ok(u)
    }
}

pub const SOC_CG_TOL: f64 = 1e-12;

pub fn solve_soc_projection(
    inst: &SocInstance,
    schedule: &PenaltySchedule,
    options: &SolveOptions,
) -> Result<SolveResult> {
    inst.validate()?;
    let n = inst.dims().1;
    let system = if options.strategy.use_sparse(n, inst.a.is_sparse()) {
        GramSystem::Iterative {
            tol: SOC_CG_TOL,
            max_iters: 10 * n.max(1),
        }
    } else {
        let a = inst.a.to_dense();
        let gram = a.tr_mul(&a) + &inst.c * inst.c.transpose();
        GramSystem::Dense(sym_eig(&symmetrize(&gram))?)
    };
    let mut problem = SocProblem {
        inst,
        system,
        last: inst.x.clone(),
    };
    let (u, trace) = run_mm(&mut problem, inst.x.clone(), schedule, options)?;
    let dist = problem.distance(&u);
    Ok(SolveResult::from_vector(inst.objective(&u), dist, u, trace))
}
