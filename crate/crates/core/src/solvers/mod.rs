//! The seven problem solvers and the tagged instance type that ties them
//! together for serialization and dispatch.

pub mod copositivity;
pub mod instance;
pub mod kinship;
pub mod lcp;
pub mod lp;
pub mod nqp;
pub mod soc;
pub mod spca;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use copositivity::{
    copositivity_index, horn_matrix, CopositivityInstance, CopositivityResult, CopositivityRun,
    DEFAULT_RESTARTS,
};
pub use instance::Matrix;
pub use kinship::{project_kinship, KinshipInstance, KinshipVariant};
pub use lcp::{solve_lcp, LcpCertificate, LcpInstance};
pub use lp::{solve_lp, LpInstance};
pub use nqp::{solve_nqp, NqpInstance};
pub use soc::{solve_soc_projection, SocInstance};
pub use spca::{
    compute_pve, principal_components, random_orthonormal, solve_spca, solve_spca_with_start,
    SpcaData, SpcaInstance, SpcaResult, SpcaStart,
};

use crate::engine::{PenaltySchedule, SolveOptions, SolveStatus, SolveTrace};
use crate::{Error, Result};

/// Final iterate of a solve together with its objective, constraint
/// distance and trace. Vector solutions are stored as one column.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub solution: DMatrix<f64>,
    pub loss: f64,
    pub dist: f64,
    pub status: SolveStatus,
    pub trace: SolveTrace,
}

impl SolveResult {
    pub fn from_vector(loss: f64, dist: f64, x: DVector<f64>, trace: SolveTrace) -> Self {
        let n = x.len();
        Self::from_matrix(
            loss,
            dist,
            DMatrix::from_column_slice(n, 1, x.as_slice()),
            trace,
        )
    }

    pub fn from_matrix(loss: f64, dist: f64, solution: DMatrix<f64>, trace: SolveTrace) -> Self {
        SolveResult {
            solution,
            loss,
            dist,
            status: trace.status,
            trace,
        }
    }

    pub fn vector(&self) -> DVector<f64> {
        DVector::from_column_slice(self.solution.as_slice())
    }

    pub fn iterations(&self) -> usize {
        self.trace.iterations()
    }

    pub fn seconds(&self) -> f64 {
        self.trace.seconds()
    }

    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

pub(crate) fn orthant_distance(x: &DVector<f64>) -> f64 {
    x.iter().map(|v| v.min(0.0).powi(2)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Lp,
    Nqp,
    Kinship,
    Soc,
    Copositivity,
    Lcp,
    Spca,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 7] = [
        ProblemKind::Lp,
        ProblemKind::Nqp,
        ProblemKind::Kinship,
        ProblemKind::Soc,
        ProblemKind::Copositivity,
        ProblemKind::Lcp,
        ProblemKind::Spca,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Lp => "lp",
            ProblemKind::Nqp => "nqp",
            ProblemKind::Kinship => "kinship",
            ProblemKind::Soc => "soc",
            ProblemKind::Copositivity => "copositivity",
            ProblemKind::Lcp => "lcp",
            ProblemKind::Spca => "spca",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProblemKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown problem kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "lowercase")]
pub enum ProblemInstance {
    Lp(LpInstance),
    Nqp(NqpInstance),
    Kinship(KinshipInstance),
    Soc(SocInstance),
    Copositivity(CopositivityInstance),
    Lcp(LcpInstance),
    Spca(SpcaInstance),
}

/// Solver choices that are not part of the schedule or engine options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    pub options: SolveOptions,
    /// Replaces the per-kind default schedule when set.
    pub schedule: Option<PenaltySchedule>,
    pub variant: KinshipVariant,
    pub restarts: usize,
    pub spca_start: SpcaStart,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            options: SolveOptions::default(),
            schedule: None,
            variant: KinshipVariant::default(),
            restarts: DEFAULT_RESTARTS,
            spca_start: SpcaStart::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Solution {
    Plain(SolveResult),
    Copositivity(CopositivityResult),
    Spca(SpcaResult),
}

impl Solution {
    pub fn result(&self) -> &SolveResult {
        match self {
            Solution::Plain(r) => r,
            Solution::Copositivity(c) => &c.best,
            Solution::Spca(s) => &s.result,
        }
    }
}

impl ProblemInstance {
    pub fn kind(&self) -> ProblemKind {
        match self {
            ProblemInstance::Lp(_) => ProblemKind::Lp,
            ProblemInstance::Nqp(_) => ProblemKind::Nqp,
            ProblemInstance::Kinship(_) => ProblemKind::Kinship,
            ProblemInstance::Soc(_) => ProblemKind::Soc,
            ProblemInstance::Copositivity(_) => ProblemKind::Copositivity,
            ProblemInstance::Lcp(_) => ProblemKind::Lcp,
            ProblemInstance::Spca(_) => ProblemKind::Spca,
        }
    }

    /// `[m, n]` for LP and SOC, `[p, q, r]` for sparse PCA, `[n]` otherwise.
    pub fn dims(&self) -> Vec<usize> {
        match self {
            ProblemInstance::Lp(i) => {
                let (m, n) = i.dims();
                vec![m, n]
            }
            ProblemInstance::Soc(i) => {
                let (m, n) = i.dims();
                vec![m, n]
            }
            ProblemInstance::Nqp(i) => vec![i.dim()],
            ProblemInstance::Kinship(i) => vec![i.dim()],
            ProblemInstance::Copositivity(i) => vec![i.dim()],
            ProblemInstance::Lcp(i) => vec![i.dim()],
            ProblemInstance::Spca(i) => vec![i.dim(), i.q, i.r],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ProblemInstance::Lp(i) => i.validate(),
            ProblemInstance::Nqp(i) => i.validate(),
            ProblemInstance::Kinship(i) => i.validate(),
            ProblemInstance::Soc(i) => i.validate(),
            ProblemInstance::Copositivity(i) => i.validate(),
            ProblemInstance::Lcp(i) => i.validate(),
            ProblemInstance::Spca(i) => i.validate(),
        }
    }

    /// The tuning schedule used when none is supplied.
    pub fn default_schedule(
        &self,
        options: &SolveOptions,
        variant: KinshipVariant,
    ) -> PenaltySchedule {
        match self {
            ProblemInstance::Lp(i) => LpInstance::default_schedule(
                options.strategy.use_sparse(i.dims().1, i.a.is_sparse()),
            ),
            ProblemInstance::Nqp(i) => {
                NqpInstance::default_schedule(options.strategy.use_sparse(i.dim(), i.a.is_sparse()))
            }
            ProblemInstance::Kinship(_) => KinshipInstance::default_schedule(variant),
            ProblemInstance::Soc(i) => SocInstance::default_schedule(
                options.strategy.use_sparse(i.dims().1, i.a.is_sparse()),
            ),
            ProblemInstance::Copositivity(_) => CopositivityInstance::default_schedule(),
            ProblemInstance::Lcp(_) => LcpInstance::default_schedule(),
            ProblemInstance::Spca(_) => SpcaInstance::default_schedule(),
        }
    }

    pub fn solve(&self, config: &SolveConfig) -> Result<Solution> {
        let schedule = config
            .schedule
            .unwrap_or_else(|| self.default_schedule(&config.options, config.variant));
        let opts = &config.options;
        Ok(match self {
            ProblemInstance::Lp(i) => Solution::Plain(solve_lp(i, &schedule, opts)?),
            ProblemInstance::Nqp(i) => Solution::Plain(solve_nqp(i, &schedule, opts)?),
            ProblemInstance::Kinship(i) => {
                Solution::Plain(project_kinship(i, config.variant, &schedule, opts)?)
            }
            ProblemInstance::Soc(i) => Solution::Plain(solve_soc_projection(i, &schedule, opts)?),
            ProblemInstance::Copositivity(i) => {
                Solution::Copositivity(copositivity_index(i, &schedule, opts, config.restarts)?)
            }
            ProblemInstance::Lcp(i) => Solution::Plain(solve_lcp(i, &schedule, opts)?),
            ProblemInstance::Spca(i) => {
                Solution::Spca(solve_spca(i, config.spca_start, &schedule, opts)?)
            }
        })
    }
}

/// On-disk instance: `{kind, dims, seed?, data}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(flatten)]
    pub problem: ProblemInstance,
    pub dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl InstanceFile {
    pub fn new(problem: ProblemInstance, seed: Option<u64>) -> Self {
        InstanceFile {
            dims: problem.dims(),
            problem,
            seed,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses and validates. The recorded `dims` must match the data.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        file.problem.validate()?;
        let actual = file.problem.dims();
        if actual != file.dims {
            return Err(Error::dim(format!(
                "recorded dims {:?} differ from data {:?}",
                file.dims, actual
            )));
        }
        Ok(file)
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// JSON result record written by the command-line front end.
#[derive(Debug, Clone, Serialize)]
pub struct ResultSummary {
    pub kind: ProblemKind,
    pub dims: Vec<usize>,
    pub status: SolveStatus,
    pub loss: f64,
    pub dist: f64,
    pub iterations: usize,
    pub seconds: f64,
    pub solution: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runs: Option<Vec<CopositivityRun>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loadings: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pve: Option<f64>,
}

impl ResultSummary {
    pub fn new(
        instance: &ProblemInstance,
        solution: &Solution,
        trace_path: Option<String>,
    ) -> Self {
        let r = solution.result();
        let mut out = ResultSummary {
            kind: instance.kind(),
            dims: instance.dims(),
            status: r.status,
            loss: r.loss,
            dist: r.dist,
            iterations: r.iterations(),
            seconds: r.seconds(),
            solution: rows(&r.solution),
            trace_path,
            runs: None,
            loadings: None,
            pve: None,
        };
        match solution {
            Solution::Plain(_) => {}
            Solution::Copositivity(c) => out.runs = Some(c.runs.clone()),
            Solution::Spca(s) => {
                out.loadings = Some(rows(&s.loadings));
                out.pve = s.pve;
            }
        }
        out
    }
}
