//! Closest kinship matrix: minimize `½‖X − Y‖²_F` over symmetric positive
//! semidefinite matrices with diagonal ½ and nonnegative entries.
//!
//! Three variants:
//!
//! - `Pd1`: both the PSD cone and the structure set are penalized; no
//!   acceleration; `ρ` grows by 1.2 every iteration up to the cap.
//! - `Pd2`: as `Pd1` with Nesterov acceleration.
//! - `Pd3`: the PSD cone is folded into the domain, so each step is one
//!   eigendecomposition of a blend of `Y` and the projected iterate.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::instance::{check_finite, dense_rows};
use super::SolveResult;
use crate::engine::{
    averaged_projection, max_distance, penalty_value, run_mm, MmProblem, PenaltySchedule,
    SolveOptions,
};
use crate::linalg::check_symmetric;
use crate::projections::{
    kinship_part, prox_quadratic_loss, psd_part, KinshipStructure, ProjectionOperator, PsdCone,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinshipInstance {
    #[serde(with = "dense_rows")]
    pub y: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KinshipVariant {
    Pd1,
    Pd2,
    #[default]
    Pd3,
}

impl std::str::FromStr for KinshipVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pd1" => Ok(KinshipVariant::Pd1),
            "pd2" => Ok(KinshipVariant::Pd2),
            "pd3" => Ok(KinshipVariant::Pd3),
            _ => Err(Error::invalid(format!("unknown kinship variant {s:?}"))),
        }
    }
}

impl KinshipVariant {
    /// `Pd1` is the unaccelerated variant regardless of the option flag.
    pub fn accelerated(self) -> bool {
        !matches!(self, KinshipVariant::Pd1)
    }
}

impl KinshipInstance {
    pub fn new(y: DMatrix<f64>) -> Result<Self> {
        let inst = KinshipInstance { y };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.y.is_square() {
            return Err(Error::dim("kinship target must be square"));
        }
        check_finite("Y", self.y.as_slice())?;
        check_symmetric(&self.y)
    }

    pub fn dim(&self) -> usize {
        self.y.nrows()
    }

    pub fn objective(&self, x: &DMatrix<f64>) -> f64 {
        0.5 * (x - &self.y).norm_squared()
    }

    pub fn default_schedule(variant: KinshipVariant) -> PenaltySchedule {
        match variant {
            KinshipVariant::Pd1 => PenaltySchedule::new(1.2, 1.2, 1),
            KinshipVariant::Pd2 | KinshipVariant::Pd3 => PenaltySchedule::new(1.0, 5.0, 100),
        }
    }
}

fn flat(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

fn square(x: &DVector<f64>, n: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(n, n, x.as_slice())
}

struct FoldedProblem<'a> {
    inst: &'a KinshipInstance,
    structure: KinshipStructure,
}

impl MmProblem for FoldedProblem<'_> {
    fn loss(&self, x: &DVector<f64>) -> f64 {
        self.inst.objective(&square(x, self.inst.dim()))
    }

    fn penalty(&self, x: &DVector<f64>) -> f64 {
        0.5 * self.structure.distance(x).powi(2)
    }

    fn distance(&self, x: &DVector<f64>) -> f64 {
        self.structure.distance(x)
    }

    fn step(&mut self, z: &DVector<f64>, rho: f64) -> Result<DVector<f64>> {
        let n = self.inst.dim();
        let target = kinship_part(&square(z, n));
        let blend = (&self.inst.y + target * rho) / (1.0 + rho);
        Ok(flat(&psd_part(&blend)))
    }
}

struct TwoSetProblem<'a> {
    inst: &'a KinshipInstance,
    y: DVector<f64>,
    psd: PsdCone,
    structure: KinshipStructure,
}

impl TwoSetProblem<'_> {
    fn sets(&self) -> [&dyn ProjectionOperator; 2] {
        [&self.psd, &self.structure]
    }
}

impl MmProblem for TwoSetProblem<'_> {
    fn loss(&self, x: &DVector<f64>) -> f64 {
        self.inst.objective(&square(x, self.inst.dim()))
    }

    fn penalty(&self, x: &DVector<f64>) -> f64 {
        penalty_value(x, &self.sets()).expect("two sets")
    }

    fn distance(&self, x: &DVector<f64>) -> f64 {
        max_distance(x, &self.sets())
    }

    fn step(&mut self, z: &DVector<f64>, rho: f64) -> Result<DVector<f64>> {
        let avg = averaged_projection(z, &self.sets())?;
        Ok(prox_quadratic_loss(&self.y, &avg, rho))
    }
}

/// Nearest kinship matrix to `Y`, started from the structural projection of `Y`.
pub fn project_kinship(
    inst: &KinshipInstance,
    variant: KinshipVariant,
    schedule: &PenaltySchedule,
    options: &SolveOptions,
) -> Result<SolveResult> {
    inst.validate()?;
    let n = inst.dim();
    let x0 = flat(&kinship_part(&inst.y));
    let mut options = *options;
    if !variant.accelerated() {
        options.accelerate = false;
    }
    let structure = KinshipStructure { n };
    let (x, trace, dist) = match variant {
        KinshipVariant::Pd3 => {
            let mut problem = FoldedProblem { inst, structure };
            let (x, trace) = run_mm(&mut problem, x0, schedule, &options)?;
            let dist = problem.distance(&x);
            (x, trace, dist)
        }
        KinshipVariant::Pd1 | KinshipVariant::Pd2 => {
            let mut problem = TwoSetProblem {
                inst,
                y: flat(&inst.y),
                psd: PsdCone { n },
                structure,
            };
            let (x, trace) = run_mm(&mut problem, x0, schedule, &options)?;
            let dist = problem.distance(&x);
            (x, trace, dist)
        }
    };
    let xm = square(&x, n);
    Ok(SolveResult::from_matrix(
        inst.objective(&xm),
        dist,
        xm,
        trace,
    ))
}
