//! Variational index of copositivity: `μ(M) = min xᵗMx` over unit vectors
//! in the nonnegative orthant. `M` is copositive exactly when `μ(M) ≥ 0`.
//!
//! The MM loss is `½xᵗMx` with the sphere ∩ orthant penalized. Each step is
//! `x = (M + ρI)⁻¹ ρ P(x_k)`, solved through a cached eigendecomposition of
//! `M`. The index is read off at the projected point `P(x)`, which is
//! feasible.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::instance::{check_finite, dense_rows};
use super::SolveResult;
use crate::engine::{run_mm, MmProblem, PenaltySchedule, SolveOptions, SolveStatus};
use crate::linalg::{check_symmetric, shifted_solve, sym_eig, SymEig};
use crate::projections::project_sphere_orthant;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopositivityInstance {
    #[serde(with = "dense_rows")]
    pub m: DMatrix<f64>,
}

/// The 5×5 Horn matrix: copositive, index 0, and not a sum of a PSD and a
/// nonnegative matrix.
pub fn horn_matrix() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        5,
        5,
        &[
            1.0, -1.0, 1.0, 1.0, -1.0, //
            -1.0, 1.0, -1.0, 1.0, 1.0, //
            1.0, -1.0, 1.0, -1.0, 1.0, //
            1.0, 1.0, -1.0, 1.0, -1.0, //
            -1.0, 1.0, 1.0, -1.0, 1.0,
        ],
    )
}

pub const DEFAULT_RESTARTS: usize = 10;

impl CopositivityInstance {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let inst = CopositivityInstance { m };
        inst.validate()?;
        Ok(inst)
    }

    pub fn horn() -> Self {
        CopositivityInstance { m: horn_matrix() }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.m.is_square() || self.m.nrows() == 0 {
            return Err(Error::dim(
                "copositivity matrix must be square and nonempty",
            ));
        }
        check_finite("M", self.m.as_slice())?;
        check_symmetric(&self.m)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// `xᵗMx`.
    pub fn quadratic_form(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.m * x))
    }

    /// `ρ` grows geometrically by 1.2 per stage of 8 iterations, reaching
    /// the 2²² cap after about 640 iterations. Growing every iteration hits
    /// the cap before the iterate has settled.
    pub fn default_schedule() -> PenaltySchedule {
        PenaltySchedule::new(1.0, 1.2, COPOSITIVITY_INTERVAL).with_max_iters(1000)
    }
}

/// Iterations per penalty stage in the default schedule.
pub const COPOSITIVITY_INTERVAL: usize = 8;

struct CopositivityProblem<'a> {
    inst: &'a CopositivityInstance,
    eig: &'a SymEig,
}

impl MmProblem for CopositivityProblem<'_> {
    fn loss(&self, x: &DVector<f64>) -> f64 {
        0.5 * self.inst.quadratic_form(x)
    }

    fn penalty(&self, x: &DVector<f64>) -> f64 {
        0.5 * self.distance(x).powi(2)
    }

    fn distance(&self, x: &DVector<f64>) -> f64 {
        (x - project_sphere_orthant(x)).norm()
    }

    fn step(&mut self, z: &DVector<f64>, rho: f64) -> Result<DVector<f64>> {
        shifted_solve(self.eig, rho, &(project_sphere_orthant(z) * rho))
    }
}

/// Outcome of one restart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopositivityRun {
    pub index: f64,
    pub iterations: usize,
    pub status: SolveStatus,
}

#[derive(Debug, Clone)]
pub struct CopositivityResult {
    /// Best run; `loss` holds the index `P(x)ᵗ M P(x)` and `solution` holds
    /// the feasible point `P(x)`.
    pub best: SolveResult,
    pub index: f64,
    pub runs: Vec<CopositivityRun>,
}

/// Random point of the sphere ∩ orthant: `|g| / ‖g‖` for Gaussian `g`.
pub fn random_start(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let g = DVector::from_fn(n, |_, _| {
            let v: f64 = StandardNormal.sample(rng);
            v.abs()
        });
        let norm = g.norm();
        if norm > 0.0 {
            return g / norm;
        }
    }
}

/// Runs `restarts` seeded MM solves from random feasible starts and keeps
/// the smallest index. The basis vectors are also scored, so the result
/// never exceeds `min_i M_ii`.
///
/// `ρ₀` is raised to `1 − λ_min(M)` when needed so every `M + ρI` is
/// positive definite and each step minimizes its surrogate.
pub fn copositivity_index(
    inst: &CopositivityInstance,
    schedule: &PenaltySchedule,
    options: &SolveOptions,
    restarts: usize,
) -> Result<CopositivityResult> {
    inst.validate()?;
    if restarts == 0 {
        return Err(Error::invalid("at least one restart is required"));
    }
    let n = inst.dim();
    let eig = sym_eig(&inst.m)?;
    let mut schedule = *schedule;
    let floor = 1.0 - eig.min_value();
    if schedule.rho0 < floor {
        schedule.rho0 = floor;
        schedule.rho_cap = schedule.rho_cap.max(floor);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut runs = Vec::with_capacity(restarts);
    let mut best: Option<SolveResult> = None;
    for _ in 0..restarts {
        let x0 = random_start(n, &mut rng);
        let mut problem = CopositivityProblem { inst, eig: &eig };
        let (x, trace) = run_mm(&mut problem, x0, &schedule, options)?;
        let dist = problem.distance(&x);
        let feasible = project_sphere_orthant(&x);
        let index = inst.quadratic_form(&feasible);
        runs.push(CopositivityRun {
            index,
            iterations: trace.iterations(),
            status: trace.status,
        });
        if best.as_ref().is_none_or(|b| index < b.loss) {
            best = Some(SolveResult::from_vector(index, dist, feasible, trace));
        }
    }
    let mut best = best.expect("at least one restart");
    for i in 0..n {
        if inst.m[(i, i)] < best.loss {
            let mut e = DVector::zeros(n);
            e[i] = 1.0;
            best.loss = inst.m[(i, i)];
            best.dist = 0.0;
            best.solution = DMatrix::from_column_slice(n, 1, e.as_slice());
        }
    }
    Ok(CopositivityResult {
        index: best.loss,
        best,
        runs,
    })
}
