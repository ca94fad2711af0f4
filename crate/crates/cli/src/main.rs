mod bench;
mod spca;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use proxdist::engine::{ConvergenceCriteria, PenaltySchedule, SolveOptions, SolveStatus, Strategy};
use proxdist::generate;
use proxdist::projections::SparsityMode;
use proxdist::solvers::{
    InstanceFile, KinshipVariant, ProblemInstance, ProblemKind, ResultSummary, SolveConfig,
    DEFAULT_RESTARTS,
};

#[derive(Parser)]
#[command(name = "proxdist", version, about = "Proximal distance solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded random instance as JSON.
    Generate(GenerateArgs),
    /// Solve an instance file and print a one-line summary.
    Solve(SolveArgs),
    /// Sweep dimensions and seeds, writing one CSV row per solve.
    Bench(bench::BenchArgs),
    /// Sparse PCA on a data file or synthetic data, sweeping q.
    Spca(spca::SpcaArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// lp, nqp, kinship, soc, copositivity, lcp or spca.
    kind: ProblemKind,
    /// Constraint rows (lp, soc).
    #[arg(long)]
    m: Option<usize>,
    /// Variables (lp, soc) or matrix order (nqp, kinship, copositivity, lcp).
    #[arg(long)]
    n: Option<usize>,
    /// Variables of the sparse PCA data.
    #[arg(long)]
    p: Option<usize>,
    /// Sparse PCA sample count.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, default_value = "column")]
    mode: SparsityMode,
    /// Store the constraint matrix sparsely (lp, nqp, soc).
    #[arg(long)]
    sparse: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; standard output when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

/// Overrides for the per-kind default schedule and engine options.
#[derive(Args, Clone, Debug)]
pub struct TuningArgs {
    #[arg(long)]
    rho0: Option<f64>,
    #[arg(long)]
    rho_mult: Option<f64>,
    #[arg(long)]
    rho_interval: Option<usize>,
    #[arg(long)]
    rho_cap: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    eps1: Option<f64>,
    #[arg(long)]
    eps2: Option<f64>,
    /// Nesterov acceleration (default on).
    #[arg(long, overrides_with = "no_accel")]
    accel: bool,
    #[arg(long, overrides_with = "accel")]
    no_accel: bool,
    /// Nesterov offset, at least 3.
    #[arg(long, default_value_t = 3)]
    d: usize,
    /// Fall back to a plain step when extrapolation raises the penalized loss.
    #[arg(long)]
    safeguard: bool,
    /// auto, dense or sparse.
    #[arg(long, default_value = "auto")]
    strategy: Strategy,
    /// Seed for random starts (copositivity, sparse PCA).
    #[arg(long = "start-seed", default_value_t = 0)]
    start_seed: u64,
}

impl TuningArgs {
    pub fn options(&self) -> SolveOptions {
        let defaults = ConvergenceCriteria::default();
        SolveOptions {
            criteria: ConvergenceCriteria {
                eps1: self.eps1.unwrap_or(defaults.eps1),
                eps2: self.eps2.unwrap_or(defaults.eps2),
            },
            accelerate: !self.no_accel,
            d: self.d,
            monotone_safeguard: self.safeguard,
            strategy: self.strategy,
            seed: self.start_seed,
        }
    }

    pub fn apply(&self, mut s: PenaltySchedule) -> PenaltySchedule {
        if let Some(v) = self.rho0 {
            s.rho0 = v;
        }
        if let Some(v) = self.rho_mult {
            s.multiplier = v;
        }
        if let Some(v) = self.rho_interval {
            s.interval = v;
        }
        if let Some(v) = self.rho_cap {
            s.rho_cap = v;
        }
        if let Some(v) = self.max_iters {
            s.max_outer_iters = v;
        }
        s
    }

    /// Engine options plus the default schedule for `problem` with overrides.
    pub fn config(
        &self,
        problem: &ProblemInstance,
        variant: KinshipVariant,
        restarts: usize,
    ) -> Result<SolveConfig> {
        let options = self.options();
        options.validate()?;
        let schedule = self.apply(problem.default_schedule(&options, variant));
        schedule.validate()?;
        Ok(SolveConfig {
            options,
            schedule: Some(schedule),
            variant,
            restarts,
            ..SolveConfig::default()
        })
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Instance JSON written by `generate`.
    instance: PathBuf,
    #[command(flatten)]
    tuning: TuningArgs,
    /// Kinship variant: pd1, pd2 or pd3.
    #[arg(long, default_value = "pd3")]
    variant: KinshipVariant,
    /// Random restarts for the copositivity index.
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    restarts: usize,
    /// Write the result record as JSON.
    #[arg(long)]
    result: Option<PathBuf>,
    /// Write the iteration trace as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let need = |v: Option<usize>, flag: &str| {
        v.with_context(|| format!("{} instances need --{flag}", args.kind))
    };
    let problem = match args.kind {
        ProblemKind::Lp | ProblemKind::Soc => {
            let dims = [need(args.m, "m")?, need(args.n, "n")?];
            generate::generate(args.kind, &dims, args.sparse, args.seed)?
        }
        ProblemKind::Spca => ProblemInstance::Spca(generate::spca(
            need(args.p, "p")?,
            need(args.samples, "samples")?,
            need(args.q, "q")?,
            need(args.r, "r")?,
            args.mode,
            args.seed,
        )?),
        kind => generate::generate(kind, &[need(args.n, "n")?], args.sparse, args.seed)?,
    };
    let mut text = InstanceFile::new(problem, Some(args.seed)).to_json()?;
    text.push('\n');
    write_output(args.out.as_deref(), &text)
}

fn read_instance(path: &Path) -> Result<InstanceFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    InstanceFile::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn dims_label(dims: &[usize]) -> String {
    dims.iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join("x")
}

fn cmd_solve(args: &SolveArgs) -> Result<SolveStatus> {
    if args.restarts == 0 {
        bail!("--restarts must be at least 1");
    }
    let file = read_instance(&args.instance)?;
    let problem = &file.problem;
    let config = args.tuning.config(problem, args.variant, args.restarts)?;
    let solution = problem.solve(&config)?;
    let result = solution.result();

    if let Some(path) = &args.trace {
        let w = BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        );
        result.trace.write_json_lines(w)?;
    }
    if let Some(path) = &args.result {
        let trace_path = args.trace.as_ref().map(|p| p.display().to_string());
        let summary = ResultSummary::new(problem, &solution, trace_path);
        let mut text = serde_json::to_string_pretty(&summary)?;
        text.push('\n');
        write_output(Some(path), &text)?;
    }
    println!(
        "kind={} dims={} loss={:.10e} dist={:.3e} iters={} seconds={:.4} status={}",
        problem.kind(),
        dims_label(&problem.dims()),
        result.loss,
        result.dist,
        result.iterations(),
        result.seconds(),
        result.status
    );
    Ok(result.status)
}

fn main() -> ExitCode {
    // Usage errors exit with 1; exit code 2 is reserved for the iteration limit.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match &cli.command {
        Command::Generate(a) => cmd_generate(a).map(|_| ExitCode::SUCCESS),
        Command::Solve(a) => cmd_solve(a).map(|status| match status {
            SolveStatus::Converged => ExitCode::SUCCESS,
            SolveStatus::IterationLimit => ExitCode::from(2),
        }),
        Command::Bench(a) => bench::run(a),
        Command::Spca(a) => spca::run(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
