//! Dimension and seed sweeps. Rows are solved in parallel and written in
//! sweep order: dimension, then seed, then repetition.
//!
//! CSV columns: `kind,m,n,seed,rep,optimum,oracle_optimum,seconds,iters,status,error`.
//! `m` is empty for single-dimension kinds; `oracle_optimum` is empty when
//! no reference applies at that size; a failed row has only `error` filled
//! after the key columns.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Args;
use rayon::prelude::*;

use proxdist::engine::{ConvergenceCriteria, PenaltySchedule, SolveOptions};
use proxdist::generate;
use proxdist::oracles::{
    copositivity_grid_oracle, dykstra_project, lcp_enumeration_oracle, lp_vertex_oracle,
    nqp_activeset_oracle, ENUMERATION_LIMIT, GRID_LIMIT,
};
use proxdist::solvers::{
    solve_soc_projection, KinshipVariant, ProblemInstance, ProblemKind, DEFAULT_RESTARTS,
};

use crate::TuningArgs;

#[derive(Args)]
pub struct BenchArgs {
    /// lp, nqp, kinship, soc, copositivity or lcp.
    kind: ProblemKind,
    /// Comma-separated sizes: `m` for lp and soc (with `n = ratio·m`),
    /// the matrix order otherwise.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    dims: Vec<usize>,
    /// `n / m` for lp and soc.
    #[arg(long, default_value_t = 2)]
    ratio: usize,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long)]
    sparse: bool,
    /// Skip the reference computation.
    #[arg(long)]
    no_oracle: bool,
    #[arg(long, default_value = "pd3")]
    variant: KinshipVariant,
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    restarts: usize,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Output CSV; standard output when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[command(flatten)]
    tuning: TuningArgs,
}

struct Task {
    dims: Vec<usize>,
    seed: u64,
    rep: usize,
}

struct Row {
    optimum: f64,
    oracle: Option<f64>,
    seconds: f64,
    iters: usize,
    status: String,
}

fn instance_dims(kind: ProblemKind, d: usize, ratio: usize) -> Vec<usize> {
    match kind {
        ProblemKind::Lp | ProblemKind::Soc => vec![d, ratio * d],
        _ => vec![d],
    }
}

/// Independent reference optimum, when one exists at this size.
fn oracle_optimum(problem: &ProblemInstance) -> Result<Option<f64>> {
    Ok(match problem {
        ProblemInstance::Lp(i) if i.dims().1 <= ENUMERATION_LIMIT => {
            Some(lp_vertex_oracle(&i.a.to_dense(), &i.b, &i.v)?.value.0)
        }
        ProblemInstance::Nqp(i) if i.dim() <= ENUMERATION_LIMIT => {
            Some(nqp_activeset_oracle(&i.a.to_dense(), &i.b)?.value.1)
        }
        ProblemInstance::Lcp(i) if i.dim() <= ENUMERATION_LIMIT => {
            lcp_enumeration_oracle(&i.a, &i.b)?
                .value
                .best()
                .map(|s| s.2)
        }
        ProblemInstance::Copositivity(i) if i.dim() <= GRID_LIMIT => {
            Some(copositivity_grid_oracle(&i.m, 0.02)?.value.0)
        }
        ProblemInstance::Kinship(i) => {
            let report = dykstra_project(&i.y, 1_000_000, 1e-10)?;
            report.converged.then(|| i.objective(&report.value))
        }
        // Long run at extreme accuracy.
        ProblemInstance::Soc(i) => {
            let schedule = PenaltySchedule::new(1.0, 2.0, 100)
                .with_cap(1e8)
                .with_max_iters(100_000);
            let options = SolveOptions {
                criteria: ConvergenceCriteria {
                    eps1: 1e-15,
                    eps2: 1e-12,
                },
                ..SolveOptions::default()
            };
            Some(solve_soc_projection(i, &schedule, &options)?.loss)
        }
        _ => None,
    })
}

fn run_task(args: &BenchArgs, task: &Task) -> Result<Row> {
    let problem = generate::generate(args.kind, &task.dims, args.sparse, task.seed)?;
    let config = args.tuning.config(&problem, args.variant, args.restarts)?;
    let solution = problem.solve(&config)?;
    let result = solution.result();
    let oracle = if args.no_oracle {
        None
    } else {
        oracle_optimum(&problem)?
    };
    Ok(Row {
        optimum: result.loss,
        oracle,
        seconds: result.seconds(),
        iters: result.iterations(),
        status: result.status.to_string(),
    })
}

pub fn run(args: &BenchArgs) -> Result<ExitCode> {
    if args.dims.is_empty() || args.dims.contains(&0) {
        bail!("--dims needs at least one positive size");
    }
    if args.seeds.is_empty() {
        bail!("--seeds needs at least one seed");
    }
    if args.reps == 0 {
        bail!("--reps must be at least 1");
    }
    if args.restarts == 0 {
        bail!("--restarts must be at least 1");
    }
    if args.kind == ProblemKind::Spca {
        bail!("sparse PCA sweeps use the `spca` command");
    }
    if matches!(args.kind, ProblemKind::Lp | ProblemKind::Soc) && args.ratio == 0 {
        bail!("--ratio must be positive");
    }

    let tasks: Vec<Task> = args
        .dims
        .iter()
        .flat_map(|&d| {
            args.seeds.iter().flat_map(move |&seed| {
                (0..args.reps).map(move |rep| Task {
                    dims: instance_dims(args.kind, d, args.ratio),
                    seed,
                    rep,
                })
            })
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .context("starting worker pool")?;
    let rows: Vec<Result<Row>> =
        pool.install(|| tasks.par_iter().map(|t| run_task(args, t)).collect());

    let sink: Box<dyn std::io::Write> = match &args.out {
        Some(p) => {
            Box::new(std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)
        }
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([
        "kind",
        "m",
        "n",
        "seed",
        "rep",
        "optimum",
        "oracle_optimum",
        "seconds",
        "iters",
        "status",
        "error",
    ])?;
    let mut succeeded = 0;
    for (task, row) in tasks.iter().zip(&rows) {
        let (m, n) = match task.dims[..] {
            [m, n] => (m.to_string(), n.to_string()),
            [n] => (String::new(), n.to_string()),
            _ => unreachable!("bench kinds have one or two dimensions"),
        };
        let key = [
            args.kind.to_string(),
            m,
            n,
            task.seed.to_string(),
            task.rep.to_string(),
        ];
        let rest = match row {
            Ok(r) => {
                succeeded += 1;
                [
                    r.optimum.to_string(),
                    r.oracle.map(|v| v.to_string()).unwrap_or_default(),
                    format!("{:.6}", r.seconds),
                    r.iters.to_string(),
                    r.status.clone(),
                    String::new(),
                ]
            }
            Err(e) => [
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                "error".into(),
                format!("{e:#}"),
            ],
        };
        w.write_record(key.iter().chain(rest.iter()))?;
    }
    w.flush()?;
    Ok(if succeeded > 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
